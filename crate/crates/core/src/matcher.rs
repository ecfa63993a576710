//! Hypothesis enumeration: injective bindings of expected objects to
//! perceived objects, scored per item and aggregated into a likelihood.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::desc::{object_text, relation_text, validate_description, Alternative, Description, Diagnostic, ExpectedObject};
use crate::geometry::{self, EvalContext, EvalError, MembershipParams};
use crate::possibility::{margin, Possibility};
use crate::scene::{PerceivedObject, Scene};

/// Expected object id -> perceived object id.
pub type Binding = BTreeMap<String, String>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    /// Classic conjunction.
    #[default]
    Min,
    /// n-th root of the product: reinforces many partial matches.
    GeoMean,
}

impl Aggregator {
    pub fn aggregate(self, scores: &[f64]) -> f64 {
        if scores.is_empty() {
            return 1.0;
        }
        let lo = scores.iter().copied().fold(f64::INFINITY, f64::min);
        match self {
            Aggregator::Min => lo,
            Aggregator::GeoMean => {
                let hi = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo <= 0.0 {
                    return 0.0;
                }
                if lo == hi {
                    return lo;
                }
                let mean_log = scores.iter().map(|s| s.ln()).sum::<f64>() / scores.len() as f64;
                mean_log.exp().clamp(lo, hi)
            }
        }
    }
}

impl std::str::FromStr for Aggregator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "min" => Ok(Aggregator::Min),
            "geomean" => Ok(Aggregator::GeoMean),
            other => Err(format!("unknown aggregator '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Object,
    Relation,
}

/// Score of one description item (an object formula or a relation edge)
/// under a hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemScore {
    pub kind: ItemKind,
    /// Index of the object or relation edge within its alternative.
    pub index: usize,
    pub expected: Vec<String>,
    pub perceived: Vec<String>,
    pub text: String,
    pub score: Possibility,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchHypothesis {
    pub alternative_index: usize,
    pub binding: Binding,
    /// Perceived object bound to the hunt object.
    pub hunt: String,
    pub item_scores: Vec<ItemScore>,
    pub likelihood: Possibility,
}

impl MatchHypothesis {
    /// Ranking order: likelihood descending, then alternative index, then
    /// binding pairs.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .likelihood
            .value()
            .total_cmp(&self.likelihood.value())
            .then(self.alternative_index.cmp(&other.alternative_index))
            .then_with(|| self.binding.iter().cmp(other.binding.iter()))
    }
}

/// Ranked hypotheses, plus notes on relations assumed without evidence.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RecognizedScene {
    pub hypotheses: Vec<MatchHypothesis>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl RecognizedScene {
    pub fn leader(&self) -> Option<&MatchHypothesis> {
        self.hypotheses.first()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchingPerformance {
    pub likelihood: Possibility,
    pub non_ambiguity: f64,
}

impl MatchingPerformance {
    pub const NONE: MatchingPerformance = MatchingPerformance { likelihood: Possibility::ZERO, non_ambiguity: 0.0 };
}

/// Which hypotheses count as competitors of the leader.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompetitorRule {
    /// A hypothesis binding the hunt object elsewhere.
    #[default]
    HuntBinding,
    /// Any hypothesis with a different binding.
    AnyBinding,
}

impl CompetitorRule {
    pub fn competes(self, leader: &MatchHypothesis, other: &MatchHypothesis) -> bool {
        match self {
            CompetitorRule::HuntBinding => other.hunt != leader.hunt,
            CompetitorRule::AnyBinding => {
                other.alternative_index != leader.alternative_index || other.binding != leader.binding
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MatchError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid binding: {0}")]
    InvalidBinding(String),
    #[error("likelihood threshold {0} outside [0, 1]")]
    Threshold(f64),
    #[error("invalid description ({} diagnostics)", .0.len())]
    InvalidDescription(Vec<Diagnostic>),
}

pub fn object_match(o: &ExpectedObject, w: &PerceivedObject, params: &MembershipParams) -> Result<Possibility, EvalError> {
    geometry::eval_attribute_formula(&o.formula, w, params)
}

fn check_binding<'s>(alt: &Alternative, binding: &Binding, scene: &'s Scene) -> Result<Vec<&'s PerceivedObject>, MatchError> {
    let mut used = BTreeSet::new();
    let mut bound = Vec::with_capacity(alt.objects.len());
    for o in &alt.objects {
        let w = binding
            .get(&o.id)
            .ok_or_else(|| MatchError::InvalidBinding(format!("'{}' is unbound", o.id)))?;
        let obj = scene
            .object(w)
            .ok_or_else(|| MatchError::InvalidBinding(format!("'{w}' is not in the scene")))?;
        if !used.insert(w.as_str()) {
            return Err(MatchError::InvalidBinding(format!("'{w}' bound twice")));
        }
        bound.push(obj);
    }
    if binding.len() != alt.objects.len() {
        return Err(MatchError::InvalidBinding("binding names undeclared objects".into()));
    }
    Ok(bound)
}

/// Scores one binding of one alternative.
pub fn score_hypothesis(
    alt: &Alternative,
    alternative_index: usize,
    binding: &Binding,
    scene: &Scene,
    ctx: &EvalContext,
    agg: Aggregator,
) -> Result<MatchHypothesis, MatchError> {
    let bound = check_binding(alt, binding, scene)?;
    let mut items = Vec::with_capacity(alt.objects.len() + alt.relations.len());
    for (i, (o, w)) in alt.objects.iter().zip(&bound).enumerate() {
        items.push(ItemScore {
            kind: ItemKind::Object,
            index: i,
            expected: vec![o.id.clone()],
            perceived: vec![w.id.clone()],
            text: object_text(&o.formula),
            score: object_match(o, w, &ctx.params)?,
        });
    }
    for (k, edge) in alt.relations.iter().enumerate() {
        let args: Vec<&PerceivedObject> = edge
            .args
            .iter()
            .map(|a| bound[alt.object_index(a).expect("validated reference")])
            .collect();
        items.push(ItemScore {
            kind: ItemKind::Relation,
            index: k,
            expected: edge.args.clone(),
            perceived: args.iter().map(|w| w.id.clone()).collect(),
            text: relation_text(&edge.formula),
            score: geometry::eval_relation_formula(&edge.formula, &args, scene, ctx)?,
        });
    }
    let scores: Vec<f64> = items.iter().map(|i| i.score.value()).collect();
    let hunt_id = &alt.hunt().ok_or_else(|| MatchError::InvalidBinding("alternative has no hunt object".into()))?.id;
    Ok(MatchHypothesis {
        alternative_index,
        hunt: binding[hunt_id].clone(),
        binding: binding.clone(),
        item_scores: items,
        likelihood: Possibility::saturating(agg.aggregate(&scores)),
    })
}

/// Every injective binding, over every alternative, whose likelihood reaches
/// `min_likelihood`, ranked.
///
/// Under [`Aggregator::Min`] partial bindings are abandoned as soon as one
/// item falls below the threshold; no such bound exists for the geometric
/// mean, so that search is exhaustive.
pub fn enumerate_hypotheses(
    d: &Description,
    scene: &Scene,
    ctx: &EvalContext,
    agg: Aggregator,
    min_likelihood: f64,
) -> Result<RecognizedScene, MatchError> {
    if !(0.0..=1.0).contains(&min_likelihood) {
        return Err(MatchError::Threshold(min_likelihood));
    }
    let diagnostics = validate_description(d);
    if !diagnostics.is_empty() {
        return Err(MatchError::InvalidDescription(diagnostics));
    }
    let mut hypotheses = Vec::new();
    let mut notes = BTreeSet::new();
    for (index, alt) in d.alternatives.iter().enumerate() {
        let mut search = Search::new(alt, scene, ctx, agg, min_likelihood)?;
        search.run(0)?;
        for assignment in search.found {
            let binding: Binding = alt
                .objects
                .iter()
                .zip(&assignment)
                .map(|(o, &j)| (o.id.clone(), scene.objects()[j].id.clone()))
                .collect();
            hypotheses.push(score_hypothesis(alt, index, &binding, scene, ctx, agg)?);
        }
        notes.extend(search.notes);
    }
    hypotheses.sort_by(MatchHypothesis::rank_cmp);
    Ok(RecognizedScene { hypotheses, notes: notes.into_iter().collect() })
}

/// Depth-first search over one alternative, most constrained object first.
struct Search<'a> {
    alt: &'a Alternative,
    scene: &'a Scene,
    ctx: &'a EvalContext,
    agg: Aggregator,
    min_likelihood: f64,
    /// object_scores[i][j]: expected i against perceived j
    object_scores: Vec<Vec<f64>>,
    order: Vec<usize>,
    /// Relation edges whose last argument is bound at each depth.
    edges_at: Vec<Vec<usize>>,
    assigned: Vec<Option<usize>>,
    used: Vec<bool>,
    scores: Vec<f64>,
    found: Vec<Vec<usize>>,
    notes: BTreeSet<String>,
}

impl<'a> Search<'a> {
    fn new(
        alt: &'a Alternative,
        scene: &'a Scene,
        ctx: &'a EvalContext,
        agg: Aggregator,
        min_likelihood: f64,
    ) -> Result<Self, MatchError> {
        let n = alt.objects.len();
        let mut object_scores = vec![Vec::with_capacity(scene.len()); n];
        for (i, o) in alt.objects.iter().enumerate() {
            for w in scene.objects() {
                object_scores[i].push(object_match(o, w, &ctx.params)?.value());
            }
        }
        let mut search = Search {
            alt,
            scene,
            ctx,
            agg,
            min_likelihood,
            object_scores,
            order: Vec::new(),
            edges_at: Vec::new(),
            assigned: vec![None; n],
            used: vec![false; scene.len()],
            scores: Vec::new(),
            found: Vec::new(),
            notes: BTreeSet::new(),
        };
        search.plan();
        Ok(search)
    }

    fn prunes(&self) -> bool {
        self.agg == Aggregator::Min
    }

    fn plan(&mut self) {
        let n = self.alt.objects.len();
        let edge_args: Vec<Vec<usize>> = self
            .alt
            .relations
            .iter()
            .map(|e| e.args.iter().map(|a| self.alt.object_index(a).expect("validated")).collect())
            .collect();
        let candidates = |i: usize| {
            self.object_scores[i]
                .iter()
                .filter(|&&s| !self.prunes() || Possibility::saturating(s).meets(self.min_likelihood))
                .count()
        };
        let degree = |i: usize| edge_args.iter().filter(|args| args.contains(&i)).count();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (candidates(i), std::cmp::Reverse(degree(i)), i));
        let position: Vec<usize> = {
            let mut p = vec![0; n];
            for (depth, &i) in order.iter().enumerate() {
                p[i] = depth;
            }
            p
        };
        let mut edges_at = vec![Vec::new(); n];
        for (k, args) in edge_args.iter().enumerate() {
            let last = args.iter().map(|&i| position[i]).max().unwrap_or(0);
            edges_at[last].push(k);
        }
        self.order = order;
        self.edges_at = edges_at;
    }

    fn acceptable(&self, value: f64) -> bool {
        Possibility::saturating(value).meets(self.min_likelihood)
    }

    fn run(&mut self, depth: usize) -> Result<(), MatchError> {
        if depth == self.order.len() {
            let likelihood = self.agg.aggregate(&self.scores);
            if self.acceptable(likelihood) {
                self.found.push(self.assigned.iter().map(|a| a.expect("complete")).collect());
            }
            return Ok(());
        }
        let i = self.order[depth];
        for j in 0..self.scene.len() {
            if self.used[j] {
                continue;
            }
            let object_score = self.object_scores[i][j];
            if self.prunes() && !self.acceptable(object_score) {
                continue;
            }
            self.assigned[i] = Some(j);
            self.used[j] = true;
            let mark = self.scores.len();
            self.scores.push(object_score);
            let mut alive = true;
            for k in self.edges_at[depth].clone() {
                let score = self.edge_score(k)?;
                self.scores.push(score);
                if self.prunes() && !self.acceptable(score) {
                    alive = false;
                    break;
                }
            }
            if alive {
                self.run(depth + 1)?;
            }
            self.scores.truncate(mark);
            self.used[j] = false;
            self.assigned[i] = None;
        }
        Ok(())
    }

    fn edge_score(&mut self, k: usize) -> Result<f64, MatchError> {
        let edge = &self.alt.relations[k];
        let args: Vec<&PerceivedObject> = edge
            .args
            .iter()
            .map(|a| {
                let i = self.alt.object_index(a).expect("validated");
                &self.scene.objects()[self.assigned[i].expect("bound")]
            })
            .collect();
        for atom in edge.formula.atoms() {
            if geometry::is_assumed(atom.name(), &args, self.scene) && !self.ctx.strict {
                let ids: Vec<&str> = args.iter().map(|o| o.id.as_str()).collect();
                self.notes.insert(format!(
                    "{}({}) has no depth information; assumed fully possible",
                    atom.name(),
                    ids.join(", ")
                ));
            }
        }
        Ok(geometry::eval_relation_formula(&edge.formula, &args, self.scene, self.ctx)?.value())
    }
}

/// Leader likelihood minus its best competitor's (0 when there is none).
pub fn non_ambiguity(rs: &RecognizedScene) -> f64 {
    non_ambiguity_with(rs, CompetitorRule::HuntBinding)
}

pub fn non_ambiguity_with(rs: &RecognizedScene, rule: CompetitorRule) -> f64 {
    let Some(leader) = rs.leader() else { return 0.0 };
    let competitor = rs
        .hypotheses
        .iter()
        .skip(1)
        .find(|h| rule.competes(leader, h))
        .map_or(0.0, |h| h.likelihood.value());
    margin(leader.likelihood.value(), competitor)
}

pub fn performance(rs: &RecognizedScene, rule: CompetitorRule) -> MatchingPerformance {
    match rs.leader() {
        Some(leader) => MatchingPerformance { likelihood: leader.likelihood, non_ambiguity: non_ambiguity_with(rs, rule) },
        None => MatchingPerformance::NONE,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::desc::parse_description;
    use crate::scene::BoundingBox;

    fn obj(id: &str, ty: &str, conf: f64, bbox: [f64; 4]) -> PerceivedObject {
        PerceivedObject::new(id, ty, conf, BoundingBox::try_from(bbox).unwrap()).unwrap()
    }

    fn hyp(hunt: &str, likelihood: f64) -> MatchHypothesis {
        MatchHypothesis {
            alternative_index: 0,
            binding: [("o1".to_string(), hunt.to_string())].into(),
            hunt: hunt.into(),
            item_scores: Vec::new(),
            likelihood: Possibility::new(likelihood).unwrap(),
        }
    }

    #[test]
    fn aggregators() {
        let scores = [0.74, 0.88, 0.10, 1.00, 1.00];
        assert_eq!(Aggregator::Min.aggregate(&scores), 0.10);
        let g = Aggregator::GeoMean.aggregate(&scores);
        assert!((g - 0.579_086).abs() < 1e-6, "{g}");
        assert!((g - 0.578).abs() < 2e-3);
        for agg in [Aggregator::Min, Aggregator::GeoMean] {
            assert_eq!(agg.aggregate(&[0.3, 0.3, 0.3]), 0.3);
        }
        assert_eq!(Aggregator::GeoMean.aggregate(&[0.5, 0.0]), 0.0);
    }

    #[test]
    fn non_ambiguity_cases() {
        assert_eq!(non_ambiguity(&RecognizedScene::default()), 0.0);
        let single = RecognizedScene { hypotheses: vec![hyp("a", 0.9)], notes: vec![] };
        assert_eq!(non_ambiguity(&single), 0.9);
        let rs = RecognizedScene { hypotheses: vec![hyp("r3", 0.5), hyp("r1", 0.1), hyp("r2", 0.1)], notes: vec![] };
        assert_eq!(non_ambiguity(&rs), 0.4);
        let rs = RecognizedScene { hypotheses: vec![hyp("r3", 0.7), hyp("r1", 0.4), hyp("r2", 0.2)], notes: vec![] };
        assert_eq!(non_ambiguity(&rs), 0.3);
    }

    #[test]
    fn competitor_rules_differ_on_shared_hunt() {
        let mut other = hyp("a", 0.6);
        other.binding.insert("o0".into(), "z".into());
        let rs = RecognizedScene { hypotheses: vec![hyp("a", 0.8), other, hyp("b", 0.2)], notes: vec![] };
        assert!((non_ambiguity_with(&rs, CompetitorRule::HuntBinding) - 0.6).abs() < 1e-12);
        assert!((non_ambiguity_with(&rs, CompetitorRule::AnyBinding) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn empty_scene_yields_nothing() {
        let d = parse_description("horizontal pipe on red floodgate").unwrap();
        let rs = enumerate_hypotheses(&d, &Scene::empty(), &EvalContext::default(), Aggregator::Min, 0.0).unwrap();
        assert!(rs.hypotheses.is_empty());
    }

    #[test]
    fn binding_checks() {
        let d = parse_description("horizontal pipe on red floodgate").unwrap();
        let scene = Scene::new(
            vec![obj("a", "pipe", 0.5, [0.0, 50.0, 0.0, 5.0]), obj("b", "floodgate", 0.5, [10.0, 20.0, 2.0, 8.0])],
            BTreeMap::new(),
        )
        .unwrap();
        let ctx = EvalContext::default();
        let alt = &d.alternatives[0];
        let same: Binding = [("o1".to_string(), "a".to_string()), ("o2".to_string(), "a".to_string())].into();
        assert!(matches!(score_hypothesis(alt, 0, &same, &scene, &ctx, Aggregator::Min), Err(MatchError::InvalidBinding(_))));
        let partial: Binding = [("o1".to_string(), "a".to_string())].into();
        assert!(score_hypothesis(alt, 0, &partial, &scene, &ctx, Aggregator::Min).is_err());
        let ok: Binding = [("o1".to_string(), "a".to_string()), ("o2".to_string(), "b".to_string())].into();
        let h = score_hypothesis(alt, 0, &ok, &scene, &ctx, Aggregator::Min).unwrap();
        assert_eq!(h.item_scores.len(), 3);
        assert_eq!(h.hunt, "b");
        assert_eq!(h.likelihood.value(), 0.0); // b is not red
        assert!(enumerate_hypotheses(&d, &scene, &ctx, Aggregator::Min, 1.01).is_err());
    }

    #[test]
    fn zero_type_possibility_scores_zero() {
        let d = parse_description("object x: pipe and (red or not red) [hunt]").unwrap();
        let w = obj("f", "floodgate", 1.0, [0.0, 1.0, 0.0, 1.0]);
        assert_eq!(object_match(&d.alternatives[0].objects[0], &w, &MembershipParams::default()).unwrap().value(), 0.0);
    }

    #[test]
    fn depth_notes_and_strict_mode() {
        let d = parse_description("pipe in front of floodgate").unwrap();
        let scene = Scene::new(
            vec![obj("a", "pipe", 0.9, [0.0, 50.0, 0.0, 5.0]), obj("b", "floodgate", 0.8, [10.0, 20.0, 2.0, 8.0])],
            BTreeMap::new(),
        )
        .unwrap();
        let rs = enumerate_hypotheses(&d, &scene, &EvalContext::default(), Aggregator::Min, 0.5).unwrap();
        assert_eq!(rs.hypotheses.len(), 1);
        assert_eq!(rs.notes.len(), 1);
        let strict = EvalContext::default().strict(true);
        assert!(matches!(
            enumerate_hypotheses(&d, &scene, &strict, Aggregator::Min, 0.5),
            Err(MatchError::Eval(EvalError::DepthUnknown(_)))
        ));
    }
}
