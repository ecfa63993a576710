//! Seeded scene generation: pipe-graph scenarios with a known hunt object,
//! and small random instances for property checks.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::desc::{
    Alternative, AttributeAtom, AttributeFormula, Description, ExpectedObject, Formula, RelationAtom, RelationEdge,
    RelationFormula,
};
use crate::matcher::Binding;
use crate::possibility::Possibility;
use crate::scene::{BoundingBox, PerceivedObject, Scene};
use crate::vocab::{COLORS, ORIENTATIONS, RELATIONS, SIZES, TYPES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSpec {
    pub seed: u64,
    /// Pipe chains in the scene, the target chain included.
    pub chains: usize,
    /// Confidence and color degradation, in [0, 1].
    pub degradation: f64,
    /// Spurious objects per genuine object.
    pub false_rate: f64,
    /// Probability that a non-hunt object goes unseen.
    pub hidden_rate: f64,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec { seed: 0, chains: 4, degradation: 0.0, false_rate: 0.0, hidden_rate: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("{name} = {value} outside [0, 1]")]
    Rate { name: &'static str, value: f64 },
    #[error("at least one chain is required")]
    NoChains,
}

impl GenSpec {
    pub fn validate(&self) -> Result<(), GenError> {
        for (name, value) in [
            ("degradation", self.degradation),
            ("false_rate", self.false_rate),
            ("hidden_rate", self.hidden_rate),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GenError::Rate { name, value });
            }
        }
        if self.chains == 0 {
            return Err(GenError::NoChains);
        }
        Ok(())
    }
}

/// A description together with the binding that realizes it in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub description: String,
    /// Missing entries are objects hidden from the sensor.
    pub binding: Binding,
    pub hunt: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedScenario {
    pub spec: GenSpec,
    pub scene: Scene,
    pub truths: Vec<GroundTruth>,
}

/// Descriptions of the target chain. Every other chain differs from each of
/// them in at least two items, so one failed item is redundant.
pub const TARGET_DESCRIPTIONS: [&str; 2] = [
    "vertical grey pipe elbow horizontal grey pipe on red floodgate[hunt]",
    "horizontal long grey pipe on red short floodgate[hunt]",
];

#[derive(Clone, Copy, PartialEq, Debug)]
enum Role {
    Riser,
    Run,
    Gate,
}

#[derive(Clone, Copy, PartialEq)]
enum Variant {
    /// A sensing failure on the color of at most one pipe.
    Target(Option<Role>),
    OffPipe,
    BluePipes,
    ShortRun,
}

struct Part {
    chain: usize,
    role: Role,
    object: PerceivedObject,
}

const CELL: f64 = 160.0;
const COLUMNS: usize = 4;

pub fn generate(spec: &GenSpec) -> Result<GeneratedScenario, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.degradation;

    let mut cells: Vec<usize> = (0..spec.chains).collect();
    cells.shuffle(&mut rng);
    let variants = [Variant::OffPipe, Variant::BluePipes, Variant::ShortRun];

    let mut parts: Vec<Part> = Vec::new();
    for (chain, &cell) in cells.iter().enumerate() {
        let variant = if chain > 0 {
            *variants.choose(&mut rng).expect("variants")
        } else if rng.gen_bool(d) {
            Variant::Target(Some(if rng.gen_bool(0.5) { Role::Riser } else { Role::Run }))
        } else {
            Variant::Target(None)
        };
        let x0 = (cell % COLUMNS) as f64 * CELL + 20.0;
        let y0 = (cell / COLUMNS) as f64 * CELL + 10.0;
        for part in build_chain(&mut rng, chain, variant, x0, y0, d) {
            parts.push(part);
        }
    }

    let genuine = parts.len();
    let mut spurious = Vec::new();
    for _ in 0..genuine {
        if rng.gen_bool(spec.false_rate) {
            spurious.push(random_percept(&mut rng, spec.chains));
        }
    }
    let mut hidden = vec![false; parts.len()];
    for (k, part) in parts.iter().enumerate() {
        let hunt = part.chain == 0 && part.role == Role::Gate;
        hidden[k] = !hunt && rng.gen_bool(spec.hidden_rate);
    }

    let visible: Vec<usize> = (0..parts.len()).filter(|&k| !hidden[k]).collect();
    let total = visible.len() + spurious.len();
    let mut names: Vec<String> = (1..=total).map(|i| format!("w{i:02}")).collect();
    names.shuffle(&mut rng);
    let mut objects = Vec::with_capacity(total);
    let mut truth_ids: BTreeMap<(usize, u8), String> = BTreeMap::new();
    for (&k, name) in visible.iter().zip(&names) {
        let mut o = parts[k].object.clone();
        o.id = name.clone();
        if parts[k].chain == 0 {
            truth_ids.insert((0, parts[k].role as u8), name.clone());
        }
        objects.push(o);
    }
    for (mut o, name) in spurious.into_iter().zip(&names[visible.len()..]) {
        o.id = name.clone();
        objects.push(o);
    }
    let scene = Scene::new(objects, BTreeMap::new()).expect("generated scene is well formed");

    let id = |role: Role| truth_ids.get(&(0, role as u8)).cloned();
    let gate = id(Role::Gate).expect("hunt object is never hidden");
    let mut truths = Vec::new();
    let roles: [&[Role]; 2] = [&[Role::Riser, Role::Run, Role::Gate], &[Role::Run, Role::Gate]];
    for (text, roles) in TARGET_DESCRIPTIONS.iter().zip(roles) {
        let binding = roles
            .iter()
            .enumerate()
            .filter_map(|(i, &r)| id(r).map(|w| (format!("o{}", i + 1), w)))
            .collect();
        truths.push(GroundTruth { description: text.to_string(), binding, hunt: gate.clone() });
    }
    Ok(GeneratedScenario { spec: *spec, scene, truths })
}

fn jitter(rng: &mut ChaCha8Rng, d: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else {
        rng.gen_range(-2.0..=2.0) * d
    }
}

fn degraded(rng: &mut ChaCha8Rng, d: f64, spread: f64) -> f64 {
    1.0 - spread * d * rng.gen::<f64>()
}

fn build_chain(rng: &mut ChaCha8Rng, chain: usize, variant: Variant, x0: f64, y0: f64, d: f64) -> Vec<Part> {
    let mut out = Vec::new();
    let bbox = |rng: &mut ChaCha8Rng, x_min: f64, x_max: f64, y_min: f64, y_max: f64| {
        let (a, b, c, e) = (jitter(rng, d), jitter(rng, d), jitter(rng, d), jitter(rng, d));
        BoundingBox::new(x_min + a, (x_max + b).max(x_min + a + 1.0), y_min + c, (y_max + e).max(y_min + c + 1.0))
            .expect("generated box")
    };
    let pipe_color = if matches!(variant, Variant::BluePipes | Variant::ShortRun) { "blue" } else { "grey" };
    let pipe = |rng: &mut ChaCha8Rng, role: Role, b: BoundingBox| {
        let color = if variant == Variant::Target(Some(role)) { rng.gen_range(0.0..0.3) } else { degraded(rng, d, 0.3) };
        PerceivedObject::new("", "pipe", degraded(rng, d, 0.5), b)
            .and_then(|o| o.with_color(pipe_color, color))
            .expect("pipe")
    };

    let b = bbox(rng, x0, x0 + 8.0, y0, y0 + 120.0);
    out.push(Part { chain, role: Role::Riser, object: pipe(rng, Role::Riser, b) });
    let run_length = if variant == Variant::ShortRun { 24.0 } else { 120.0 };
    let b = bbox(rng, x0, x0 + run_length, y0 + 120.0, y0 + 128.0);
    out.push(Part { chain, role: Role::Run, object: pipe(rng, Role::Run, b) });

    let gx = x0 + run_length / 2.0 - 7.0;
    let gate_box = if variant == Variant::OffPipe {
        bbox(rng, gx, gx + 15.0, y0 + 90.0, y0 + 110.0)
    } else {
        bbox(rng, gx, gx + 15.0, y0 + 130.0, y0 + 150.0)
    };
    let gate = PerceivedObject::new("", "floodgate", degraded(rng, d, 0.5), gate_box).expect("gate");
    let gate = if matches!(variant, Variant::Target(_)) {
        gate.with_color("red", degraded(rng, d, 0.3))
    } else {
        gate.with_color("blue", degraded(rng, d, 0.3)).and_then(|g| g.with_color("red", rng.gen_range(0.0..0.2)))
    }
    .expect("gate color");
    out.push(Part { chain, role: Role::Gate, object: gate });
    out
}

fn random_percept(rng: &mut ChaCha8Rng, chains: usize) -> PerceivedObject {
    let rows = chains.div_ceil(COLUMNS) as f64;
    let x = rng.gen_range(0.0..CELL * COLUMNS as f64 - 40.0);
    let y = rng.gen_range(0.0..CELL * rows - 20.0);
    let (w, h) = if rng.gen_bool(0.5) { (rng.gen_range(5.0..120.0), rng.gen_range(5.0..20.0)) } else { (rng.gen_range(5.0..20.0), rng.gen_range(5.0..120.0)) };
    let ty = TYPES.choose(rng).expect("types");
    let color = COLORS.choose(rng).expect("colors");
    PerceivedObject::new("", *ty, rng.gen_range(0.3..1.0), BoundingBox::new(x, x + w, y, y + h).expect("box"))
        .and_then(|o| o.with_color(color, rng.gen_range(0.0..1.0)))
        .expect("spurious percept")
}

fn grid(rng: &mut impl Rng) -> f64 {
    rng.gen_range(0..=10) as f64 / 10.0
}

/// A small scene with degrees on a 0.1 grid, so that ties are common.
pub fn random_scene(rng: &mut impl Rng, objects: usize) -> Scene {
    let types = &TYPES[..3];
    let mut out = Vec::with_capacity(objects);
    for i in 0..objects {
        let x = rng.gen_range(0.0..160.0);
        let y = rng.gen_range(0.0..160.0);
        let (w, h) = (rng.gen_range(2.0..80.0), rng.gen_range(2.0..80.0));
        let mut o = PerceivedObject::new(
            format!("w{i}"),
            *types.choose(rng).expect("types"),
            grid(rng),
            BoundingBox::new(x, x + w, y, y + h).expect("box"),
        )
        .expect("object");
        for c in &COLORS[..3] {
            if rng.gen_bool(0.6) {
                o = o.with_color(c, grid(rng)).expect("color");
            }
        }
        for a in ORIENTATIONS.iter().chain(SIZES) {
            if rng.gen_bool(0.3) {
                o = o.with_override(a, grid(rng)).expect("override");
            }
        }
        out.push(o);
    }
    let ids: Vec<String> = out.iter().map(|o| o.id.clone()).collect();
    let mut overrides = BTreeMap::new();
    if ids.len() >= 2 {
        for _ in 0..rng.gen_range(0..4) {
            let pair: Vec<String> = ids.choose_multiple(rng, 2).cloned().collect();
            let rel = RELATIONS.choose(rng).expect("relations");
            overrides.insert((rel.to_string(), pair), Possibility::new(grid(rng)).expect("grid"));
        }
    }
    Scene::new(out, overrides).expect("random scene")
}

fn attr(name: &str) -> AttributeFormula {
    Formula::Atom(AttributeAtom::new(name))
}

fn rel(name: &str) -> RelationFormula {
    Formula::Atom(RelationAtom::new(name))
}

fn random_adjective(rng: &mut impl Rng) -> &'static str {
    let pool: Vec<&'static str> = COLORS[..3].iter().chain(ORIENTATIONS).chain(SIZES).copied().collect();
    pool.choose(rng).expect("pool")
}

fn random_conjunct(rng: &mut impl Rng, depth: usize) -> AttributeFormula {
    match rng.gen_range(0..if depth == 0 { 3 } else { 5 }) {
        0 => Formula::not(attr(random_adjective(rng))),
        1 | 2 => attr(random_adjective(rng)),
        3 => Formula::Or(vec![random_conjunct(rng, depth - 1), random_conjunct(rng, depth - 1)]),
        _ => Formula::not(Formula::And(vec![attr(random_adjective(rng)), random_conjunct(rng, depth - 1)])),
    }
}

fn random_relation(rng: &mut impl Rng, depth: usize) -> RelationFormula {
    let pick = |rng: &mut _| {
        let pool = &RELATIONS[..];
        rel(pool.choose(rng).expect("relations"))
    };
    match rng.gen_range(0..if depth == 0 { 1 } else { 5 }) {
        0 | 1 => pick(rng),
        2 => Formula::And(vec![random_relation(rng, depth - 1), random_relation(rng, depth - 1)]),
        3 => Formula::Or(vec![random_relation(rng, depth - 1), random_relation(rng, depth - 1)]),
        _ => Formula::not(pick(rng)),
    }
}

/// One random alternative with `objects` objects and at most `max_droppable`
/// droppable items.
pub fn random_alternative(rng: &mut impl Rng, objects: usize, max_droppable: usize, chain_ids: bool) -> Alternative {
    let types = &TYPES[..3];
    let mut budget = max_droppable;
    let mut objs = Vec::with_capacity(objects);
    let hunt = rng.gen_range(0..objects);
    for i in 0..objects {
        let mut parts = vec![attr(types.choose(rng).expect("types"))];
        let extra = rng.gen_range(0..=2usize.min(budget));
        budget -= extra;
        for _ in 0..extra {
            parts.push(random_conjunct(rng, 2));
        }
        parts.shuffle(rng);
        let id = if chain_ids { format!("o{}", i + 1) } else { format!("x{}", i + 1) };
        objs.push(ExpectedObject { id, formula: Formula::conjunction(parts).expect("type"), is_hunt: i == hunt });
    }
    let mut relations = Vec::new();
    if objects >= 2 {
        let edges = rng.gen_range(0..=objects.min(budget));
        for _ in 0..edges {
            let pair: Vec<usize> = (0..objects).collect::<Vec<_>>().choose_multiple(rng, 2).copied().collect();
            relations.push(RelationEdge {
                formula: random_relation(rng, 2),
                args: pair.iter().map(|&k| objs[k].id.clone()).collect(),
            });
        }
    }
    Alternative { objects: objs, relations }
}

/// An alternative whose objects take their types from distinct objects of
/// `scene`, so that at least one binding survives the type atoms.
pub fn planted_alternative(rng: &mut impl Rng, scene: &Scene, objects: usize, max_droppable: usize) -> Alternative {
    let k = objects.min(scene.len()).max(1);
    let mut alt = random_alternative(rng, k, max_droppable, false);
    let picks: Vec<&PerceivedObject> = scene.objects().choose_multiple(rng, k).collect();
    for (o, w) in alt.objects.iter_mut().zip(picks) {
        let parts: Vec<AttributeFormula> = o
            .formula
            .conjuncts()
            .into_iter()
            .map(|c| match c {
                Formula::Atom(a) if a.is_type() => attr(&w.detected_type),
                other => other.clone(),
            })
            .collect();
        o.formula = Formula::conjunction(parts).expect("type");
    }
    alt
}

/// A chain-shaped alternative: adjectives before each type, one plain
/// relation between consecutive objects.
pub fn random_chain(rng: &mut impl Rng, objects: usize) -> Alternative {
    let types = &TYPES;
    let mut objs = Vec::with_capacity(objects);
    for i in 0..objects {
        let mut parts: Vec<AttributeFormula> = (0..rng.gen_range(0..3)).map(|_| attr(random_adjective(rng))).collect();
        parts.push(attr(types.choose(rng).expect("types")));
        objs.push(ExpectedObject {
            id: format!("o{}", i + 1),
            formula: Formula::conjunction(parts).expect("type"),
            is_hunt: i + 1 == objects,
        });
    }
    let relations = (1..objects)
        .map(|i| RelationEdge {
            formula: rel(RELATIONS.choose(rng).expect("relations")),
            args: vec![format!("o{i}"), format!("o{}", i + 1)],
        })
        .collect();
    Alternative { objects: objs, relations }
}

/// A random description for printer and parser checks.
pub fn random_description(rng: &mut impl Rng) -> Description {
    if rng.gen_bool(0.3) {
        let n = rng.gen_range(1..=4);
        return Description::single(random_chain(rng, n));
    }
    let alternatives = (0..rng.gen_range(1..=3))
        .map(|_| {
            let n = rng.gen_range(1..=4);
            let chain_ids = rng.gen_bool(0.5);
            random_alternative(rng, n, 6, chain_ids)
        })
        .collect();
    Description { alternatives }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desc::{parse_description, validate_description};
    use crate::geometry::EvalContext;
    use crate::matcher::{score_hypothesis, Aggregator};

    #[test]
    fn same_seed_same_scenario() {
        let spec = GenSpec { seed: 7, degradation: 0.4, false_rate: 0.3, hidden_rate: 0.1, ..Default::default() };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.scene.to_json(), b.scene.to_json());
        assert_eq!(a, b);
        let c = generate(&GenSpec { seed: 8, ..spec }).unwrap();
        assert_ne!(a.scene.to_json(), c.scene.to_json());
    }

    #[test]
    fn noiseless_truth_scores_one() {
        for seed in 0..20 {
            let s = generate(&GenSpec { seed, ..Default::default() }).unwrap();
            for truth in &s.truths {
                let d = parse_description(&truth.description).unwrap();
                let h = score_hypothesis(
                    &d.alternatives[0],
                    0,
                    &truth.binding,
                    &s.scene,
                    &EvalContext::default(),
                    Aggregator::Min,
                )
                .unwrap();
                assert_eq!(h.likelihood.value(), 1.0, "seed {seed}: {:?}", h.item_scores);
                assert_eq!(h.hunt, truth.hunt);
            }
        }
    }

    #[test]
    fn rates_are_checked() {
        assert!(generate(&GenSpec { false_rate: 1.5, ..Default::default() }).is_err());
        assert!(generate(&GenSpec { chains: 0, ..Default::default() }).is_err());
    }

    #[test]
    fn random_descriptions_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let d = random_description(&mut rng);
            assert!(validate_description(&d).is_empty(), "{d:?}");
        }
    }
}
