//! Attribute and spatial-relation predicates graded as possibility degrees.
//!
//! Orientation, size and relation predicates are one-sided ramps over a
//! scalar feature of the bounding boxes. All ramp parameters live in
//! [`MembershipParams`] and can be loaded from a JSON document.

use serde::{Deserialize, Serialize};

use crate::desc::{AttributeFormula, RelationFormula};
use crate::possibility::Possibility;
use crate::scene::{BoundingBox, PerceivedObject, Scene};
use crate::vocab::{self, AttributeKind};

/// Linear shoulder: 0 at `zero`, 1 at `full`, flat outside. Rising when
/// `zero < full`, falling otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ramp {
    pub zero: f64,
    pub full: f64,
}

impl Ramp {
    pub const fn new(zero: f64, full: f64) -> Self {
        Ramp { zero, full }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.zero) / (self.full - self.zero);
        if t.is_nan() {
            return 0.0;
        }
        t.clamp(0.0, 1.0)
    }

    fn check(&self, name: &str) -> Result<(), EvalError> {
        if !self.zero.is_finite() || !self.full.is_finite() || self.zero == self.full {
            return Err(EvalError::BadParams(format!("{name}: zero and full must be finite and distinct")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembershipParams {
    /// width / height
    pub horizontal: Ramp,
    /// height / width
    pub vertical: Ramp,
    /// long side / short side
    pub elongated: Ramp,
    pub long: Ramp,
    pub short: Ramp,
    /// x-overlap relative to the narrower box
    pub overlap: Ramp,
    /// centre offset relative to the mean half-extent (above, left, ...)
    pub separation: Ramp,
    /// euclidean gap between boxes, pixels
    pub contact_gap: Ramp,
    /// centre distance relative to the mean diagonal
    pub near_distance: Ramp,
    /// distance from a box end to the other box, relative to the thicker box
    pub elbow_end: Ramp,
}

impl Default for MembershipParams {
    fn default() -> Self {
        MembershipParams {
            horizontal: Ramp::new(1.5, 3.0),
            vertical: Ramp::new(1.5, 3.0),
            elongated: Ramp::new(2.0, 5.0),
            long: Ramp::new(2.0, 5.0),
            short: Ramp::new(5.0, 2.0),
            overlap: Ramp::new(0.0, 0.5),
            separation: Ramp::new(0.0, 1.0),
            contact_gap: Ramp::new(15.0, 2.0),
            near_distance: Ramp::new(6.0, 2.0),
            elbow_end: Ramp::new(2.0, 0.5),
        }
    }
}

impl MembershipParams {
    pub fn validate(&self) -> Result<(), EvalError> {
        self.horizontal.check("horizontal")?;
        self.vertical.check("vertical")?;
        self.elongated.check("elongated")?;
        self.long.check("long")?;
        self.short.check("short")?;
        self.overlap.check("overlap")?;
        self.separation.check("separation")?;
        self.contact_gap.check("contact_gap")?;
        self.near_distance.check("near_distance")?;
        self.elbow_end.check("elbow_end")
    }

    pub fn from_json(text: &str) -> Result<Self, EvalError> {
        let p: MembershipParams = serde_json::from_str(text).map_err(|e| EvalError::BadParams(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("params serialize")
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown predicate '{0}'")]
    UnknownPredicate(String),
    #[error("relation '{relation}' takes {expected} arguments, got {got}")]
    Arity { relation: String, expected: usize, got: usize },
    #[error("no depth information for {0}; strict mode refuses to assume it")]
    DepthUnknown(String),
    #[error("invalid membership parameters: {0}")]
    BadParams(String),
}

/// Membership parameters plus the strictness switch for depth relations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalContext {
    pub params: MembershipParams,
    pub strict: bool,
}

impl EvalContext {
    pub fn new(params: MembershipParams) -> Self {
        EvalContext { params, strict: false }
    }

    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }
}

fn is_depth(relation: &str) -> bool {
    matches!(relation, "in_front_of" | "behind")
}

pub fn eval_attribute(predicate: &str, o: &PerceivedObject, params: &MembershipParams) -> Result<Possibility, EvalError> {
    let kind = vocab::attribute_kind(predicate).ok_or_else(|| EvalError::UnknownPredicate(predicate.to_string()))?;
    if let Some(p) = o.attribute_overrides.get(predicate) {
        return Ok(*p);
    }
    let b = &o.bbox;
    let degree = match kind {
        AttributeKind::Type => {
            return Ok(if o.detected_type == predicate { o.detection_confidence } else { Possibility::ZERO });
        }
        AttributeKind::Color => return Ok(o.color_degrees.get(predicate).copied().unwrap_or(Possibility::ZERO)),
        AttributeKind::Orientation => match predicate {
            "horizontal" => params.horizontal.eval(b.width() / b.height()),
            _ => params.vertical.eval(b.height() / b.width()),
        },
        AttributeKind::Size => {
            let ratio = b.width().max(b.height()) / b.width().min(b.height());
            match predicate {
                "long" => params.long.eval(ratio),
                "elongated" => params.elongated.eval(ratio),
                _ => params.short.eval(ratio),
            }
        }
    };
    Ok(Possibility::saturating(degree))
}

/// Whether a relation would be assumed rather than observed: depth relations
/// with no override.
pub fn is_assumed(relation: &str, args: &[&PerceivedObject], scene: &Scene) -> bool {
    if !is_depth(relation) {
        return false;
    }
    let ids: Vec<&str> = args.iter().map(|o| o.id.as_str()).collect();
    scene.relation_override(relation, &ids).is_none()
}

pub fn eval_relation(
    relation: &str,
    args: &[&PerceivedObject],
    scene: &Scene,
    ctx: &EvalContext,
) -> Result<Possibility, EvalError> {
    let arity = vocab::relation_arity(relation).ok_or_else(|| EvalError::UnknownPredicate(relation.to_string()))?;
    if args.len() != arity {
        return Err(EvalError::Arity { relation: relation.to_string(), expected: arity, got: args.len() });
    }
    let ids: Vec<&str> = args.iter().map(|o| o.id.as_str()).collect();
    if let Some(p) = scene.relation_override(relation, &ids) {
        return Ok(p);
    }
    let (a, b) = (&args[0].bbox, &args[1].bbox);
    let p = &ctx.params;
    let degree = match relation {
        "on" => on(a, b, p),
        "under" => on(b, a, p),
        "above" => above(a, b, p),
        "below" => above(b, a, p),
        "on_the_left_to" => left_of(a, b, p),
        "on_the_right_to" => left_of(b, a, p),
        "connected_to" => connected(a, b, p),
        "near_from" => near(a, b, p),
        "elbow" => elbow(a, b, p),
        _ => {
            // in_front_of / behind: 2D boxes carry no depth.
            if ctx.strict {
                return Err(EvalError::DepthUnknown(format!("{relation}({})", ids.join(", "))));
            }
            1.0
        }
    };
    Ok(Possibility::saturating(degree))
}

pub fn eval_attribute_formula(
    f: &AttributeFormula,
    o: &PerceivedObject,
    params: &MembershipParams,
) -> Result<Possibility, EvalError> {
    f.eval(&mut |atom| eval_attribute(atom.name(), o, params).map(f64::from))
        .map(Possibility::saturating)
}

pub fn eval_relation_formula(
    f: &RelationFormula,
    args: &[&PerceivedObject],
    scene: &Scene,
    ctx: &EvalContext,
) -> Result<Possibility, EvalError> {
    f.eval(&mut |atom| eval_relation(atom.name(), args, scene, ctx).map(f64::from))
        .map(Possibility::saturating)
}

fn x_overlap(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    let overlap = (a.x_max.min(b.x_max) - a.x_min.max(b.x_min)).max(0.0);
    p.overlap.eval(overlap / a.width().min(b.width()))
}

fn on(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    let top_first = if a.y_min <= b.y_min { 1.0 } else { 0.0 };
    x_overlap(a, b, p).min(top_first)
}

fn above(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    let offset = (b.center().1 - a.center().1) / ((a.height() + b.height()) / 2.0);
    x_overlap(a, b, p).min(p.separation.eval(offset))
}

fn left_of(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    let offset = (b.center().0 - a.center().0) / ((a.width() + b.width()) / 2.0);
    p.separation.eval(offset)
}

fn gap(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let dx = (a.x_min.max(b.x_min) - a.x_max.min(b.x_max)).max(0.0);
    let dy = (a.y_min.max(b.y_min) - a.y_max.min(b.y_max)).max(0.0);
    dx.hypot(dy)
}

fn connected(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    p.contact_gap.eval(gap(a, b))
}

fn near(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    let (ax, ay) = a.center();
    let (bx, by) = b.center();
    let distance = (bx - ax).hypot(by - ay);
    p.near_distance.eval(distance / ((a.diagonal() + b.diagonal()) / 2.0))
}

/// Distance from the nearer end of `a` (along its long axis) to the span of
/// `b` on that axis.
fn end_offset(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let (ends, lo, hi) = if a.width() >= a.height() {
        ([a.x_min, a.x_max], b.x_min, b.x_max)
    } else {
        ([a.y_min, a.y_max], b.y_min, b.y_max)
    };
    ends.iter()
        .map(|&e| (lo - e).max(e - hi).max(0.0))
        .fold(f64::INFINITY, f64::min)
}

fn elbow(a: &BoundingBox, b: &BoundingBox, p: &MembershipParams) -> f64 {
    let horiz = |x: &BoundingBox| p.horizontal.eval(x.width() / x.height());
    let vert = |x: &BoundingBox| p.vertical.eval(x.height() / x.width());
    let perpendicular = horiz(a).min(vert(b)).max(vert(a).min(horiz(b)));
    let scale = a.thickness().max(b.thickness());
    let ends = p.elbow_end.eval(end_offset(a, b) / scale).min(p.elbow_end.eval(end_offset(b, a) / scale));
    perpendicular.min(connected(a, b, p)).min(ends)
}
