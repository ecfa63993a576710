//! Redundancy-aware matching: the lattice of sub-descriptions obtained by
//! dropping description items, maximal acceptable sub-descriptions, their
//! kernels, and the resulting description redundancy and performance.
//!
//! Items are the top-level conjuncts of each object formula plus the
//! relation edges. The conjunct carrying an object's type atom is never
//! dropped, so a reduced object still matches "some object of that type".

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::desc::{formula_text, relation_text, validate_description, Alternative, AttributeFormula, Description, Formula};
use crate::geometry::{self, EvalContext};
use crate::matcher::{
    self, enumerate_hypotheses, Aggregator, Binding, CompetitorRule, MatchError, MatchHypothesis, MatchingPerformance,
};
use crate::possibility::{margin, Possibility, EPSILON};
use crate::scene::{PerceivedObject, Scene};

pub const DEFAULT_CAP: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ItemTarget {
    Object { id: String, conjunct: usize },
    Relation { edge: usize, args: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DescriptionItem {
    pub target: ItemTarget,
    pub text: String,
    pub droppable: bool,
}

impl DescriptionItem {
    pub fn label(&self) -> String {
        match &self.target {
            ItemTarget::Object { id, .. } => format!("{id}: {}", self.text),
            ItemTarget::Relation { args, .. } => format!("{}({})", self.text, args.join(", ")),
        }
    }
}

/// An alternative split into description items.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemizedAlternative {
    pub alternative: Alternative,
    pub items: Vec<DescriptionItem>,
}

impl ItemizedAlternative {
    pub fn new(alt: &Alternative) -> Self {
        let mut items = Vec::new();
        for o in &alt.objects {
            let type_name = o.type_name();
            for (c, conjunct) in o.formula.conjuncts().into_iter().enumerate() {
                let typed = conjunct
                    .positive_atoms()
                    .iter()
                    .any(|a| a.is_type() && Some(a.name()) == type_name);
                items.push(DescriptionItem {
                    target: ItemTarget::Object { id: o.id.clone(), conjunct: c },
                    text: formula_text(conjunct),
                    droppable: !typed,
                });
            }
        }
        for (k, edge) in alt.relations.iter().enumerate() {
            items.push(DescriptionItem {
                target: ItemTarget::Relation { edge: k, args: edge.args.clone() },
                text: relation_text(&edge.formula),
                droppable: true,
            });
        }
        ItemizedAlternative { alternative: alt.clone(), items }
    }

    pub fn droppable(&self) -> Vec<usize> {
        (0..self.items.len()).filter(|&i| self.items[i].droppable).collect()
    }

    pub fn core(&self) -> BTreeSet<usize> {
        (0..self.items.len()).filter(|&i| !self.items[i].droppable).collect()
    }

    /// The alternative restricted to `kept` items.
    pub fn induce(&self, kept: &BTreeSet<usize>) -> Alternative {
        let mut parts: BTreeMap<&str, Vec<AttributeFormula>> = BTreeMap::new();
        let mut edges = Vec::new();
        for &i in kept {
            match &self.items[i].target {
                ItemTarget::Object { id, conjunct } => {
                    let o = self.alternative.object(id).expect("itemized object");
                    parts.entry(id).or_default().push(o.formula.conjuncts()[*conjunct].clone());
                }
                ItemTarget::Relation { edge, .. } => edges.push(self.alternative.relations[*edge].clone()),
            }
        }
        let objects = self
            .alternative
            .objects
            .iter()
            .map(|o| {
                let mut o = o.clone();
                o.formula = Formula::conjunction(parts.remove(o.id.as_str()).unwrap_or_default())
                    .expect("type conjunct is always kept");
                o
            })
            .collect();
        Alternative { objects, relations: edges }
    }
}

/// A subset of an alternative's items, always including the core.
#[derive(Debug, Clone, PartialEq)]
pub struct SubDescription {
    pub parent: Arc<ItemizedAlternative>,
    pub alternative_index: usize,
    pub kept: BTreeSet<usize>,
}

impl SubDescription {
    pub fn full(parent: Arc<ItemizedAlternative>, alternative_index: usize) -> Self {
        let kept = (0..parent.items.len()).collect();
        SubDescription { parent, alternative_index, kept }
    }

    pub fn with_kept(parent: Arc<ItemizedAlternative>, alternative_index: usize, kept: BTreeSet<usize>) -> Self {
        let mut kept = kept;
        kept.extend(parent.core());
        SubDescription { parent, alternative_index, kept }
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.kept.iter().map(|&i| self.parent.items[i].label()).collect()
    }

    pub fn dropped_labels(&self) -> Vec<String> {
        (0..self.parent.items.len())
            .filter(|i| !self.kept.contains(i))
            .map(|i| self.parent.items[i].label())
            .collect()
    }

    pub fn induce(&self) -> Alternative {
        self.parent.induce(&self.kept)
    }
}

impl Serialize for SubDescription {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("SubDescription", 3)?;
        st.serialize_field("alternative_index", &self.alternative_index)?;
        st.serialize_field("kept", &self.kept)?;
        st.serialize_field("items", &self.labels())?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerformanceThreshold {
    pub min_likelihood: f64,
    pub min_non_ambiguity: f64,
}

impl Default for PerformanceThreshold {
    fn default() -> Self {
        PerformanceThreshold { min_likelihood: 0.6, min_non_ambiguity: 0.3 }
    }
}

impl PerformanceThreshold {
    pub fn new(min_likelihood: f64, min_non_ambiguity: f64) -> Result<Self, RedundancyError> {
        for v in [min_likelihood, min_non_ambiguity] {
            if !(0.0..=1.0).contains(&v) {
                return Err(RedundancyError::Threshold(v));
            }
        }
        Ok(PerformanceThreshold { min_likelihood, min_non_ambiguity })
    }

    pub fn accepts(&self, p: &MatchingPerformance) -> bool {
        p.likelihood.meets(self.min_likelihood) && p.non_ambiguity + EPSILON >= self.min_non_ambiguity
    }
}

/// What a kernel must preserve when items are removed from a maximal
/// sub-description.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelCriterion {
    /// The hunt object stays bound where the maximal sub-description put it,
    /// strictly ahead of every competitor, at an acceptable likelihood.
    #[default]
    LeaderPreserved,
    /// The full performance threshold stays met.
    Threshold,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmbiguityScope {
    /// Non-ambiguity of the chosen binding against the whole description.
    #[default]
    FullDescription,
    /// Non-ambiguity within the maximal sub-description.
    MaximalSubd,
}

impl std::str::FromStr for AmbiguityScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(AmbiguityScope::FullDescription),
            "subd" => Ok(AmbiguityScope::MaximalSubd),
            other => Err(format!("unknown ambiguity scope '{other}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RedundancyError {
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("{count} droppable items exceed the lattice cap of {cap}")]
    TooManyItems { count: usize, cap: usize },
    #[error("threshold {0} outside [0, 1]")]
    Threshold(f64),
}

impl From<geometry::EvalError> for RedundancyError {
    fn from(e: geometry::EvalError) -> Self {
        RedundancyError::Match(MatchError::Eval(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubdEvaluation {
    pub subd: SubDescription,
    pub performance: MatchingPerformance,
    pub acceptable: bool,
    /// Perceived object the leading hypothesis binds to the hunt object.
    pub hunt: Option<String>,
}

/// Matches one sub-description from scratch under MIN and judges it
/// against `th`. A sub-description whose best hypothesis has zero
/// likelihood is never acceptable.
pub fn evaluate_subd(
    dn: &SubDescription,
    scene: &Scene,
    ctx: &EvalContext,
    th: &PerformanceThreshold,
) -> Result<(SubdEvaluation, Option<MatchHypothesis>), RedundancyError> {
    let induced = Description::single(dn.induce());
    let rs = enumerate_hypotheses(&induced, scene, ctx, Aggregator::Min, 0.0)?;
    let performance = matcher::performance(&rs, CompetitorRule::HuntBinding);
    let best = rs.hypotheses.into_iter().next().map(|mut h| {
        h.alternative_index = dn.alternative_index;
        h
    });
    let acceptable = best.as_ref().is_some_and(|h| h.likelihood.value() > 0.0) && th.accepts(&performance);
    let eval = SubdEvaluation { subd: dn.clone(), performance, acceptable, hunt: best.as_ref().map(|h| h.hunt.clone()) };
    Ok((eval, best))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Perf {
    /// Index into the binding table.
    leader: Option<usize>,
    likelihood: f64,
    non_ambiguity: f64,
}

impl Perf {
    fn performance(&self) -> MatchingPerformance {
        MatchingPerformance { likelihood: Possibility::saturating(self.likelihood), non_ambiguity: self.non_ambiguity }
    }

    fn acceptable(&self, th: &PerformanceThreshold) -> bool {
        self.leader.is_some() && self.likelihood > 0.0 && th.accepts(&self.performance())
    }
}

/// Every injective binding with a positive core score, with its per-item
/// scores; sub-description performance is then a min over kept columns.
pub struct Lattice {
    parent: Arc<ItemizedAlternative>,
    alternative_index: usize,
    droppable: Vec<usize>,
    bindings: Vec<Binding>,
    hunts: Vec<String>,
    scores: Vec<Vec<f64>>,
    memo: RefCell<HashMap<u64, Perf>>,
    notes: BTreeSet<String>,
}

impl Lattice {
    pub fn new(
        parent: Arc<ItemizedAlternative>,
        alternative_index: usize,
        scene: &Scene,
        ctx: &EvalContext,
        cap: usize,
    ) -> Result<Self, RedundancyError> {
        let droppable = parent.droppable();
        if droppable.len() > cap || droppable.len() > 63 {
            return Err(RedundancyError::TooManyItems { count: droppable.len(), cap: cap.min(63) });
        }
        let alt = &parent.alternative;
        let hunt_index = alt
            .objects
            .iter()
            .position(|o| o.is_hunt)
            .ok_or_else(|| MatchError::InvalidDescription(validate_description(&Description::single(alt.clone()))))?;
        let objects = scene.objects();

        // object item scores per perceived object
        let mut item_object: Vec<Option<usize>> = Vec::with_capacity(parent.items.len());
        let mut object_scores: Vec<Vec<f64>> = Vec::with_capacity(parent.items.len());
        for item in &parent.items {
            match &item.target {
                ItemTarget::Object { id, conjunct } => {
                    let i = alt.object_index(id).expect("itemized object");
                    let f = alt.objects[i].formula.conjuncts()[*conjunct];
                    let row = objects
                        .iter()
                        .map(|w| geometry::eval_attribute_formula(f, w, &ctx.params).map(|p| p.value()))
                        .collect::<Result<Vec<_>, _>>()?;
                    item_object.push(Some(i));
                    object_scores.push(row);
                }
                ItemTarget::Relation { .. } => {
                    item_object.push(None);
                    object_scores.push(Vec::new());
                }
            }
        }
        let core: Vec<usize> = parent.core().into_iter().collect();
        let candidates: Vec<Vec<usize>> = (0..alt.objects.len())
            .map(|i| {
                (0..objects.len())
                    .filter(|&j| core.iter().filter(|&&c| item_object[c] == Some(i)).all(|&c| object_scores[c][j] > 0.0))
                    .collect()
            })
            .collect();

        let mut assignments = Vec::new();
        let mut current = vec![usize::MAX; alt.objects.len()];
        let mut used = vec![false; objects.len()];
        assign(0, &candidates, &mut current, &mut used, &mut assignments);

        let edge_args: Vec<Vec<usize>> = alt
            .relations
            .iter()
            .map(|e| e.args.iter().map(|a| alt.object_index(a).expect("validated")).collect())
            .collect();
        let mut edge_cache: HashMap<(usize, Vec<usize>), f64> = HashMap::new();
        let mut notes = BTreeSet::new();
        let mut rows = Vec::with_capacity(assignments.len());
        let mut bindings = Vec::with_capacity(assignments.len());
        let mut hunts = Vec::with_capacity(assignments.len());
        for a in assignments {
            let mut row = Vec::with_capacity(parent.items.len());
            for (k, item) in parent.items.iter().enumerate() {
                let score = match &item.target {
                    ItemTarget::Object { .. } => object_scores[k][a[item_object[k].expect("object item")]],
                    ItemTarget::Relation { edge, .. } => {
                        let js: Vec<usize> = edge_args[*edge].iter().map(|&i| a[i]).collect();
                        match edge_cache.get(&(*edge, js.clone())) {
                            Some(&s) => s,
                            None => {
                                let args: Vec<&PerceivedObject> = js.iter().map(|&j| &objects[j]).collect();
                                let formula = &alt.relations[*edge].formula;
                                if !ctx.strict {
                                    for atom in formula.atoms() {
                                        if geometry::is_assumed(atom.name(), &args, scene) {
                                            let ids: Vec<&str> = args.iter().map(|o| o.id.as_str()).collect();
                                            notes.insert(format!(
                                                "{}({}) has no depth information; assumed fully possible",
                                                atom.name(),
                                                ids.join(", ")
                                            ));
                                        }
                                    }
                                }
                                let s = geometry::eval_relation_formula(formula, &args, scene, ctx)?.value();
                                edge_cache.insert((*edge, js), s);
                                s
                            }
                        }
                    }
                };
                row.push(score);
            }
            let binding: Binding = alt
                .objects
                .iter()
                .zip(&a)
                .map(|(o, &j)| (o.id.clone(), objects[j].id.clone()))
                .collect();
            hunts.push(objects[a[hunt_index]].id.clone());
            bindings.push(binding);
            rows.push(row);
        }
        // table order follows the ranking tie-break
        let mut order: Vec<usize> = (0..bindings.len()).collect();
        order.sort_by(|&x, &y| bindings[x].iter().cmp(bindings[y].iter()));
        let bindings = order.iter().map(|&k| bindings[k].clone()).collect();
        let hunts = order.iter().map(|&k| hunts[k].clone()).collect();
        let scores = order.iter().map(|&k| rows[k].clone()).collect();

        Ok(Lattice {
            parent,
            alternative_index,
            droppable,
            bindings,
            hunts,
            scores,
            memo: RefCell::new(HashMap::new()),
            notes,
        })
    }

    pub fn parent(&self) -> &Arc<ItemizedAlternative> {
        &self.parent
    }

    pub fn droppable_count(&self) -> usize {
        self.droppable.len()
    }

    pub fn notes(&self) -> &BTreeSet<String> {
        &self.notes
    }

    fn full_mask(&self) -> u64 {
        (1u64 << self.droppable.len()) - 1
    }

    fn mask_of(&self, dn: &SubDescription) -> u64 {
        self.droppable
            .iter()
            .enumerate()
            .filter(|(_, i)| dn.kept.contains(i))
            .fold(0, |m, (b, _)| m | 1 << b)
    }

    fn subd(&self, mask: u64) -> SubDescription {
        let mut kept = self.parent.core();
        kept.extend(self.droppable.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &i)| i));
        SubDescription { parent: self.parent.clone(), alternative_index: self.alternative_index, kept }
    }

    fn columns(&self, mask: u64) -> Vec<usize> {
        (0..self.parent.items.len())
            .filter(|&i| match self.droppable.iter().position(|&d| d == i) {
                Some(b) => mask >> b & 1 == 1,
                None => true,
            })
            .collect()
    }

    fn score(&self, binding: usize, columns: &[usize]) -> f64 {
        columns.iter().map(|&c| self.scores[binding][c]).fold(1.0, f64::min)
    }

    fn perf(&self, mask: u64) -> Perf {
        if let Some(p) = self.memo.borrow().get(&mask) {
            return *p;
        }
        let columns = self.columns(mask);
        let values: Vec<f64> = (0..self.bindings.len()).map(|b| self.score(b, &columns)).collect();
        let mut leader: Option<usize> = None;
        for (b, &v) in values.iter().enumerate() {
            if leader.map_or(true, |l| v > values[l]) {
                leader = Some(b);
            }
        }
        let p = match leader {
            None => Perf { leader: None, likelihood: 0.0, non_ambiguity: 0.0 },
            Some(l) => {
                let competitor = values
                    .iter()
                    .enumerate()
                    .filter(|&(b, _)| self.hunts[b] != self.hunts[l])
                    .map(|(_, &v)| v)
                    .fold(0.0, f64::max);
                Perf { leader, likelihood: values[l], non_ambiguity: margin(values[l], competitor) }
            }
        };
        self.memo.borrow_mut().insert(mask, p);
        p
    }

    pub fn evaluate(&self, dn: &SubDescription, th: &PerformanceThreshold) -> SubdEvaluation {
        let p = self.perf(self.mask_of(dn));
        SubdEvaluation {
            subd: dn.clone(),
            performance: p.performance(),
            acceptable: p.acceptable(th),
            hunt: p.leader.map(|l| self.hunts[l].clone()),
        }
    }

    /// Best hypothesis of `dn`, scored over its kept items.
    pub fn leader(&self, dn: &SubDescription) -> Option<MatchHypothesis> {
        let p = self.perf(self.mask_of(dn));
        p.leader.map(|l| self.hypothesis(l, dn))
    }

    fn hypothesis(&self, binding: usize, dn: &SubDescription) -> MatchHypothesis {
        let alt = dn.induce();
        let scores: Vec<f64> = dn.kept.iter().map(|&c| self.scores[binding][c]).collect();
        let mut items = Vec::new();
        for (i, o) in alt.objects.iter().enumerate() {
            let value = dn
                .kept
                .iter()
                .filter(|&&c| matches!(&self.parent.items[c].target, ItemTarget::Object { id, .. } if *id == o.id))
                .map(|&c| self.scores[binding][c])
                .fold(1.0, f64::min);
            items.push(matcher::ItemScore {
                kind: matcher::ItemKind::Object,
                index: i,
                expected: vec![o.id.clone()],
                perceived: vec![self.bindings[binding][&o.id].clone()],
                text: crate::desc::object_text(&o.formula),
                score: Possibility::saturating(value),
            });
        }
        for (k, &c) in dn
            .kept
            .iter()
            .filter(|&&c| matches!(self.parent.items[c].target, ItemTarget::Relation { .. }))
            .enumerate()
        {
            let ItemTarget::Relation { args, .. } = &self.parent.items[c].target else { unreachable!() };
            items.push(matcher::ItemScore {
                kind: matcher::ItemKind::Relation,
                index: k,
                expected: args.clone(),
                perceived: args.iter().map(|a| self.bindings[binding][a].clone()).collect(),
                text: self.parent.items[c].text.clone(),
                score: Possibility::saturating(self.scores[binding][c]),
            });
        }
        MatchHypothesis {
            alternative_index: self.alternative_index,
            binding: self.bindings[binding].clone(),
            hunt: self.hunts[binding].clone(),
            item_scores: items,
            likelihood: Possibility::saturating(scores.iter().copied().fold(1.0, f64::min)),
        }
    }

    /// Masks from the full description downwards, one level at a time.
    fn levels(&self, within: u64) -> Vec<u64> {
        let mut masks: Vec<u64> = submasks(within).collect();
        masks.sort_by_key(|&m| (std::cmp::Reverse(m.count_ones()), m));
        masks
    }

    /// Acceptable sub-descriptions none of whose single-item extensions is
    /// acceptable, ordered by size, likelihood, then kept items.
    pub fn maximal_subds(&self, th: &PerformanceThreshold) -> Vec<SubDescription> {
        let full = self.full_mask();
        let mut out: Vec<(u64, f64)> = Vec::new();
        for mask in self.levels(full) {
            let p = self.perf(mask);
            if !p.acceptable(th) {
                continue;
            }
            let extendable = (0..self.droppable.len())
                .filter(|b| mask >> b & 1 == 0)
                .any(|b| self.perf(mask | 1 << b).acceptable(th));
            if !extendable {
                out.push((mask, p.likelihood));
            }
        }
        let mut subds: Vec<(SubDescription, f64)> = out.into_iter().map(|(m, l)| (self.subd(m), l)).collect();
        subds.sort_by(|(a, la), (b, lb)| {
            b.len().cmp(&a.len()).then(lb.total_cmp(la)).then_with(|| a.kept.cmp(&b.kept))
        });
        subds.into_iter().map(|(s, _)| s).collect()
    }

    fn holds(&self, mask: u64, dn_mask: u64, target: &str, th: &PerformanceThreshold, criterion: KernelCriterion) -> bool {
        if mask == dn_mask {
            return true;
        }
        let p = self.perf(mask);
        match criterion {
            KernelCriterion::Threshold => p.acceptable(th),
            KernelCriterion::LeaderPreserved => {
                p.leader.is_some_and(|l| self.hunts[l] == target)
                    && p.non_ambiguity > 0.0
                    && Possibility::saturating(p.likelihood).meets(th.min_likelihood)
            }
        }
    }

    /// Removal-minimal subsets of `dn` that still satisfy `criterion`,
    /// largest first.
    pub fn kernels(&self, dn: &SubDescription, th: &PerformanceThreshold, criterion: KernelCriterion) -> Vec<SubDescription> {
        let dn_mask = self.mask_of(dn);
        let Some(target) = self.perf(dn_mask).leader.map(|l| self.hunts[l].clone()) else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for mask in self.levels(dn_mask) {
            if !self.holds(mask, dn_mask, &target, th, criterion) {
                continue;
            }
            let reducible = (0..self.droppable.len())
                .filter(|b| mask >> b & 1 == 1)
                .any(|b| self.holds(mask & !(1 << b), dn_mask, &target, th, criterion));
            if !reducible {
                out.push(self.subd(mask));
            }
        }
        out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.kept.cmp(&b.kept)));
        out
    }

    /// Every evaluated sub-description, in lattice order.
    pub fn trace(&self, th: &PerformanceThreshold) -> Vec<SubdEvaluation> {
        self.levels(self.full_mask())
            .into_iter()
            .map(|m| self.evaluate(&self.subd(m), th))
            .collect()
    }

    /// Likelihood of `binding` over `dn`, and its margin over the best
    /// binding that puts the hunt object elsewhere.
    fn margin(&self, binding: usize, dn: &SubDescription) -> (f64, f64) {
        let columns = self.columns(self.mask_of(dn));
        let own = self.score(binding, &columns);
        let competitor = (0..self.bindings.len())
            .filter(|&b| self.hunts[b] != self.hunts[binding])
            .map(|b| self.score(b, &columns))
            .fold(0.0, f64::max);
        (own, margin(own, competitor))
    }
}

fn assign(depth: usize, candidates: &[Vec<usize>], current: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
    if depth == candidates.len() {
        out.push(current.clone());
        return;
    }
    for &j in &candidates[depth] {
        if used[j] {
            continue;
        }
        used[j] = true;
        current[depth] = j;
        assign(depth + 1, candidates, current, used, out);
        used[j] = false;
    }
}

fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let m = next?;
        next = if m == 0 { None } else { Some((m - 1) & mask) };
        Some(m)
    })
}

pub fn maximal_subds(
    alt: &Alternative,
    alternative_index: usize,
    scene: &Scene,
    ctx: &EvalContext,
    th: &PerformanceThreshold,
) -> Result<Vec<SubDescription>, RedundancyError> {
    let lattice = Lattice::new(Arc::new(ItemizedAlternative::new(alt)), alternative_index, scene, ctx, DEFAULT_CAP)?;
    Ok(lattice.maximal_subds(th))
}

pub fn kernels(
    dn: &SubDescription,
    scene: &Scene,
    ctx: &EvalContext,
    th: &PerformanceThreshold,
    criterion: KernelCriterion,
) -> Result<Vec<SubDescription>, RedundancyError> {
    let lattice = Lattice::new(dn.parent.clone(), dn.alternative_index, scene, ctx, DEFAULT_CAP)?;
    Ok(lattice.kernels(dn, th, criterion))
}

pub fn description_redundancy(chosen_kernel: &SubDescription) -> usize {
    chosen_kernel.parent.items.len() - chosen_kernel.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RedundancyConfig {
    pub threshold: PerformanceThreshold,
    pub scope: AmbiguityScope,
    pub criterion: KernelCriterion,
    pub cap: usize,
    pub verbose: bool,
}

impl Default for RedundancyConfig {
    fn default() -> Self {
        RedundancyConfig {
            threshold: PerformanceThreshold::default(),
            scope: AmbiguityScope::default(),
            criterion: KernelCriterion::default(),
            cap: DEFAULT_CAP,
            verbose: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RedundancyReport {
    pub alternative_index: usize,
    pub items: Vec<DescriptionItem>,
    /// Every maximal sub-description of the chosen alternative.
    pub maximal_candidates: Vec<SubdEvaluation>,
    pub maximal_subd: SubDescription,
    pub maximal_performance: MatchingPerformance,
    pub best_subi: MatchHypothesis,
    pub kernels: Vec<SubDescription>,
    pub chosen_kernel: SubDescription,
    pub delta: usize,
    pub used_redundancy: usize,
    /// Likelihood over the kernel, non-ambiguity over the configured scope.
    pub performance: MatchingPerformance,
    /// Full description, no items dropped.
    pub classic: MatchingPerformance,
    pub hunt: String,
    pub dropped_items: Vec<String>,
    pub redundant_items: Vec<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<SubdEvaluation>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum RedundancyOutcome {
    Match(Box<RedundancyReport>),
    NoMatch {
        /// The rejected sub-description with the highest non-ambiguity,
        /// then likelihood.
        best_rejected: Option<SubdEvaluation>,
        classic: MatchingPerformance,
        #[serde(skip_serializing_if = "Option::is_none")]
        trace: Option<Vec<SubdEvaluation>>,
    },
}

impl RedundancyOutcome {
    pub fn report(&self) -> Option<&RedundancyReport> {
        match self {
            RedundancyOutcome::Match(r) => Some(r),
            RedundancyOutcome::NoMatch { .. } => None,
        }
    }
}

fn perf_key(p: &MatchingPerformance) -> (f64, f64) {
    (p.likelihood.value(), p.non_ambiguity)
}

fn report_alternative(
    lattice: &Lattice,
    cfg: &RedundancyConfig,
) -> Option<RedundancyReport> {
    let th = &cfg.threshold;
    let full = SubDescription::full(lattice.parent.clone(), lattice.alternative_index);
    let classic = lattice.evaluate(&full, th).performance;
    let candidates: Vec<SubdEvaluation> = lattice.maximal_subds(th).iter().map(|s| lattice.evaluate(s, th)).collect();
    let chosen = candidates.iter().min_by(|a, b| {
        let (la, na) = perf_key(&a.performance);
        let (lb, nb) = perf_key(&b.performance);
        lb.total_cmp(&la)
            .then(nb.total_cmp(&na))
            .then(b.subd.len().cmp(&a.subd.len()))
            .then_with(|| a.subd.kept.cmp(&b.subd.kept))
    })?;
    let dn = chosen.subd.clone();
    let leader_index = lattice.perf(lattice.mask_of(&dn)).leader?;
    let kernels = lattice.kernels(&dn, th, cfg.criterion);
    let kernel = kernels.first().cloned().unwrap_or_else(|| dn.clone());
    let (likelihood, _) = lattice.margin(leader_index, &kernel);
    let non_ambiguity = match cfg.scope {
        AmbiguityScope::FullDescription => lattice.margin(leader_index, &full).1,
        AmbiguityScope::MaximalSubd => lattice.margin(leader_index, &dn).1,
    };
    let kernel_set: BTreeSet<usize> = kernel.kept.clone();
    Some(RedundancyReport {
        alternative_index: lattice.alternative_index,
        items: lattice.parent.items.clone(),
        maximal_performance: chosen.performance,
        best_subi: lattice.hypothesis(leader_index, &dn),
        hunt: lattice.hunts[leader_index].clone(),
        delta: description_redundancy(&kernel),
        used_redundancy: lattice.parent.items.len() - dn.len(),
        performance: MatchingPerformance { likelihood: Possibility::saturating(likelihood), non_ambiguity },
        classic,
        dropped_items: dn.dropped_labels(),
        redundant_items: (0..lattice.parent.items.len())
            .filter(|i| !kernel_set.contains(i))
            .map(|i| lattice.parent.items[i].label())
            .collect(),
        maximal_candidates: candidates.clone(),
        maximal_subd: dn,
        kernels,
        chosen_kernel: kernel,
        notes: lattice.notes.iter().cloned().collect(),
        trace: cfg.verbose.then(|| lattice.trace(th)),
    })
}

/// Runs the redundancy analysis on every alternative and keeps the best
/// report, by performance then alternative order.
pub fn redundancy_report(
    d: &Description,
    scene: &Scene,
    ctx: &EvalContext,
    cfg: &RedundancyConfig,
) -> Result<RedundancyOutcome, RedundancyError> {
    PerformanceThreshold::new(cfg.threshold.min_likelihood, cfg.threshold.min_non_ambiguity)?;
    let diagnostics = validate_description(d);
    if !diagnostics.is_empty() {
        return Err(MatchError::InvalidDescription(diagnostics).into());
    }
    let mut best: Option<RedundancyReport> = None;
    let mut rejected: Option<SubdEvaluation> = None;
    let mut classic = MatchingPerformance::NONE;
    let mut trace: Vec<SubdEvaluation> = Vec::new();
    for (index, alt) in d.alternatives.iter().enumerate() {
        let lattice = Lattice::new(Arc::new(ItemizedAlternative::new(alt)), index, scene, ctx, cfg.cap)?;
        let full = lattice.evaluate(&SubDescription::full(lattice.parent.clone(), index), &cfg.threshold);
        if perf_key(&full.performance) > perf_key(&classic) {
            classic = full.performance;
        }
        match report_alternative(&lattice, cfg) {
            Some(report) => {
                let better = best
                    .as_ref()
                    .map_or(true, |b| perf_key(&report.performance) > perf_key(&b.performance));
                if better {
                    best = Some(report);
                }
            }
            None => {
                let all = lattice.trace(&cfg.threshold);
                for e in &all {
                    let key = (e.performance.non_ambiguity, e.performance.likelihood.value());
                    let better = rejected
                        .as_ref()
                        .map_or(true, |r| key > (r.performance.non_ambiguity, r.performance.likelihood.value()));
                    if better && e.hunt.is_some() {
                        rejected = Some(e.clone());
                    }
                }
                if cfg.verbose {
                    trace.extend(all);
                }
            }
        }
    }
    Ok(match best {
        Some(mut report) => {
            report.classic = classic;
            RedundancyOutcome::Match(Box::new(report))
        }
        None => RedundancyOutcome::NoMatch { best_rejected: rejected, classic, trace: cfg.verbose.then_some(trace) },
    })
}
