//! Brute-force reference implementations shared by the integration suites.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::Arc;

use itertools::Itertools;
use scenematch_core::desc::Alternative;
use scenematch_core::geometry::{eval_attribute_formula, eval_relation_formula, EvalContext};
use scenematch_core::matcher::{Aggregator, Binding};
use scenematch_core::possibility::EPSILON;
use scenematch_core::redundancy::{ItemizedAlternative, KernelCriterion, PerformanceThreshold, SubDescription};
use scenematch_core::scene::Scene;

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name);
    std::fs::read_to_string(path).unwrap()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scored {
    pub likelihood: f64,
    pub binding: Binding,
    pub hunt: String,
    pub scores: Vec<f64>,
}

/// Every injective binding, scored item by item, in ranking order.
pub fn all_bindings(alt: &Alternative, scene: &Scene, ctx: &EvalContext, agg: Aggregator) -> Vec<Scored> {
    let objects = scene.objects();
    let mut out = Vec::new();
    for perm in (0..objects.len()).permutations(alt.objects.len()) {
        let mut scores = Vec::new();
        for (o, &j) in alt.objects.iter().zip(&perm) {
            scores.push(eval_attribute_formula(&o.formula, &objects[j], &ctx.params).unwrap().value());
        }
        for e in &alt.relations {
            let args: Vec<_> = e
                .args
                .iter()
                .map(|a| &objects[perm[alt.objects.iter().position(|o| &o.id == a).unwrap()]])
                .collect();
            scores.push(eval_relation_formula(&e.formula, &args, scene, ctx).unwrap().value());
        }
        let likelihood = match agg {
            Aggregator::Min => scores.iter().copied().fold(1.0, f64::min),
            Aggregator::GeoMean => {
                if scores.is_empty() {
                    1.0
                } else {
                    scores.iter().product::<f64>().powf(1.0 / scores.len() as f64)
                }
            }
        };
        let binding: Binding =
            alt.objects.iter().zip(&perm).map(|(o, &j)| (o.id.clone(), objects[j].id.clone())).collect();
        let hunt = binding[&alt.objects.iter().find(|o| o.is_hunt).unwrap().id].clone();
        out.push(Scored { likelihood, binding, hunt, scores });
    }
    out.sort_by(|a, b| {
        b.likelihood
            .partial_cmp(&a.likelihood)
            .unwrap()
            .then_with(|| a.binding.iter().collect::<Vec<_>>().cmp(&b.binding.iter().collect::<Vec<_>>()))
    });
    out
}

/// (leader likelihood, non-ambiguity, leader hunt) by direct definition.
pub fn performance(ranked: &[Scored]) -> Option<(f64, f64, String)> {
    let leader = ranked.first()?;
    let competitor = ranked.iter().filter(|s| s.hunt != leader.hunt).map(|s| s.likelihood).fold(0.0, f64::max);
    let gap = ((leader.likelihood - competitor) * 1e12).round() / 1e12;
    Some((leader.likelihood, gap.max(0.0).min(leader.likelihood), leader.hunt.clone()))
}

pub fn acceptable(p: &Option<(f64, f64, String)>, th: &PerformanceThreshold) -> bool {
    match p {
        Some((l, a, _)) => *l > 0.0 && l + EPSILON >= th.min_likelihood && a + EPSILON >= th.min_non_ambiguity,
        None => false,
    }
}

/// The lattice evaluated subset by subset, each sub-description matched
/// from scratch.
pub struct LatticeOracle {
    pub parent: Arc<ItemizedAlternative>,
    pub droppable: Vec<usize>,
    pub perf: Vec<Option<(f64, f64, String)>>,
}

impl LatticeOracle {
    pub fn new(alt: &Alternative, scene: &Scene, ctx: &EvalContext) -> Self {
        let parent = Arc::new(ItemizedAlternative::new(alt));
        let droppable = parent.droppable();
        let perf = (0..1u64 << droppable.len())
            .map(|m| {
                let induced = parent.induce(&Self::kept_of(&parent, &droppable, m));
                performance(&all_bindings(&induced, scene, ctx, Aggregator::Min))
            })
            .collect();
        LatticeOracle { parent, droppable, perf }
    }

    fn kept_of(parent: &ItemizedAlternative, droppable: &[usize], mask: u64) -> BTreeSet<usize> {
        let mut kept = parent.core();
        for (b, &i) in droppable.iter().enumerate() {
            if mask >> b & 1 == 1 {
                kept.insert(i);
            }
        }
        kept
    }

    pub fn kept(&self, mask: u64) -> BTreeSet<usize> {
        Self::kept_of(&self.parent, &self.droppable, mask)
    }

    pub fn mask(&self, s: &SubDescription) -> u64 {
        self.droppable.iter().enumerate().filter(|(_, i)| s.kept.contains(i)).map(|(b, _)| 1u64 << b).sum()
    }

    pub fn maximal(&self, th: &PerformanceThreshold) -> BTreeSet<BTreeSet<usize>> {
        let n = self.droppable.len();
        (0..1u64 << n)
            .filter(|&m| acceptable(&self.perf[m as usize], th))
            .filter(|&m| (0..n).filter(|b| m >> b & 1 == 0).all(|b| !acceptable(&self.perf[(m | 1 << b) as usize], th)))
            .map(|m| self.kept(m))
            .collect()
    }

    pub fn kernels(&self, dn: u64, th: &PerformanceThreshold, criterion: KernelCriterion) -> BTreeSet<BTreeSet<usize>> {
        let Some((_, _, target)) = self.perf[dn as usize].clone() else { return BTreeSet::new() };
        let holds = |m: u64| {
            if m == dn {
                return true;
            }
            let p = &self.perf[m as usize];
            match criterion {
                KernelCriterion::Threshold => acceptable(p, th),
                KernelCriterion::LeaderPreserved => match p {
                    Some((l, a, h)) => *h == target && *a > 0.0 && l + EPSILON >= th.min_likelihood,
                    None => false,
                },
            }
        };
        let n = self.droppable.len();
        (0..1u64 << n)
            .filter(|&m| m & !dn == 0 && holds(m))
            .filter(|&m| (0..n).filter(|b| m >> b & 1 == 1).all(|b| !holds(m & !(1 << b))))
            .map(|m| self.kept(m))
            .collect()
    }
}
