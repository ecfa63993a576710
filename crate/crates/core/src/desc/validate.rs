use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::ast::*;
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DiagnosticCode {
    NoAlternatives,
    EmptyAlternative,
    DuplicateObjectId,
    UnknownPredicate,
    MalformedConnective,
    MissingTypeAtom,
    MultipleTypeAtoms,
    UnknownObjectRef,
    ArityMismatch,
    RepeatedArgument,
    MissingHunt,
    DuplicateHunt,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub code: DiagnosticCode,
    /// Index of the offending alternative.
    pub alternative: usize,
    /// The offending element: an object id, a predicate name or an edge.
    pub element: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} in alternative {}: {}", self.code, self.alternative, self.message)
    }
}

/// Checks every structural invariant of a description. Returns an empty list
/// exactly when the description is valid.
pub fn validate_description(d: &Description) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if d.alternatives.is_empty() {
        out.push(Diagnostic {
            code: DiagnosticCode::NoAlternatives,
            alternative: 0,
            element: String::new(),
            message: "description has no alternative".into(),
        });
    }
    for (i, alt) in d.alternatives.iter().enumerate() {
        validate_alternative(i, alt, &mut out);
    }
    out
}

fn validate_alternative(index: usize, alt: &Alternative, out: &mut Vec<Diagnostic>) {
    let mut push = |code, element: &str, message: String| {
        out.push(Diagnostic { code, alternative: index, element: element.to_string(), message })
    };

    if alt.objects.is_empty() {
        push(DiagnosticCode::EmptyAlternative, "", "alternative declares no object".into());
    }

    let mut seen = HashSet::new();
    for o in &alt.objects {
        if !seen.insert(o.id.as_str()) {
            push(DiagnosticCode::DuplicateObjectId, &o.id, format!("object '{}' declared twice", o.id));
        }
        if let Some(msg) = malformed(&o.formula) {
            push(DiagnosticCode::MalformedConnective, &o.id, msg);
        }
        for atom in o.formula.atoms() {
            if vocab::attribute_kind(atom.name()).is_none() {
                push(
                    DiagnosticCode::UnknownPredicate,
                    atom.name(),
                    format!("'{}' is not an attribute predicate (object '{}')", atom.name(), o.id),
                );
            }
        }
        let types = o.formula.positive_atoms().into_iter().filter(|a| a.is_type()).count();
        match types {
            0 => push(
                DiagnosticCode::MissingTypeAtom,
                &o.id,
                format!("object '{}' asserts no positive type", o.id),
            ),
            1 => {}
            n => push(
                DiagnosticCode::MultipleTypeAtoms,
                &o.id,
                format!("object '{}' asserts {n} positive types", o.id),
            ),
        }
    }

    let hunts = alt.objects.iter().filter(|o| o.is_hunt).count();
    if !alt.objects.is_empty() && hunts == 0 {
        push(DiagnosticCode::MissingHunt, "", "no object carries [hunt]".into());
    }
    if hunts > 1 {
        let ids: Vec<_> = alt.objects.iter().filter(|o| o.is_hunt).map(|o| o.id.as_str()).collect();
        push(DiagnosticCode::DuplicateHunt, &ids.join(","), format!("{hunts} objects carry [hunt]"));
    }

    for (k, edge) in alt.relations.iter().enumerate() {
        let label = format!("relation #{k}");
        if let Some(msg) = malformed(&edge.formula) {
            push(DiagnosticCode::MalformedConnective, &label, msg);
        }
        let mut arities = HashSet::new();
        for atom in edge.formula.atoms() {
            match atom.arity() {
                Some(a) => {
                    arities.insert(a);
                }
                None => push(
                    DiagnosticCode::UnknownPredicate,
                    atom.name(),
                    format!("'{}' is not a relation predicate", atom.name()),
                ),
            }
        }
        if arities.len() > 1 {
            push(DiagnosticCode::ArityMismatch, &label, "leaves disagree on arity".into());
        } else if let Some(&a) = arities.iter().next() {
            if a != edge.args.len() {
                push(
                    DiagnosticCode::ArityMismatch,
                    &label,
                    format!("relation of arity {a} applied to {} objects", edge.args.len()),
                );
            }
        }
        let mut args_seen = HashSet::new();
        for arg in &edge.args {
            if alt.object(arg).is_none() {
                push(DiagnosticCode::UnknownObjectRef, arg, format!("{label} refers to undeclared '{arg}'"));
            }
            if !args_seen.insert(arg.as_str()) {
                push(DiagnosticCode::RepeatedArgument, arg, format!("{label} repeats '{arg}'"));
            }
        }
    }
}

fn malformed<A>(f: &Formula<A>) -> Option<String> {
    match f {
        Formula::Atom(_) => None,
        Formula::And(cs) | Formula::Or(cs) => {
            if cs.len() < 2 {
                Some("connective with fewer than two operands".into())
            } else {
                cs.iter().find_map(malformed)
            }
        }
        Formula::Not(inner) => malformed(inner),
    }
}
