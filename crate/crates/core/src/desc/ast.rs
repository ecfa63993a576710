use serde::{Deserialize, Serialize};

use crate::vocab;

/// Boolean formula over atoms of type `A`.
///
/// `And`/`Or` carry at least two children once validated; nesting written
/// with parentheses is kept as nesting so that printing is lossless.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formula<A> {
    Atom(A),
    And(Vec<Formula<A>>),
    Or(Vec<Formula<A>>),
    Not(Box<Formula<A>>),
}

impl<A> Formula<A> {
    pub fn atom(a: A) -> Self {
        Formula::Atom(a)
    }

    pub fn not(f: Formula<A>) -> Self {
        Formula::Not(Box::new(f))
    }

    /// Possibilistic evaluation: `And` is min, `Or` is max, `Not` is the
    /// complement. Leaves are graded by `leaf`.
    pub fn eval<E>(&self, leaf: &mut impl FnMut(&A) -> Result<f64, E>) -> Result<f64, E> {
        match self {
            Formula::Atom(a) => leaf(a),
            Formula::And(children) => {
                let mut acc = 1.0f64;
                for c in children {
                    acc = acc.min(c.eval(leaf)?);
                }
                Ok(acc)
            }
            Formula::Or(children) => {
                let mut acc = 0.0f64;
                for c in children {
                    acc = acc.max(c.eval(leaf)?);
                }
                Ok(acc)
            }
            Formula::Not(inner) => Ok(1.0 - inner.eval(leaf)?),
        }
    }

    pub fn atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            Formula::Not(inner) => inner.collect_atoms(out),
        }
    }

    /// Atoms not under any negation.
    pub fn positive_atoms(&self) -> Vec<&A> {
        let mut out = Vec::new();
        self.collect_positive(&mut out);
        out
    }

    fn collect_positive<'a>(&'a self, out: &mut Vec<&'a A>) {
        match self {
            Formula::Atom(a) => out.push(a),
            Formula::And(cs) | Formula::Or(cs) => cs.iter().for_each(|c| c.collect_positive(out)),
            Formula::Not(_) => {}
        }
    }

    /// Top-level conjuncts: the children of a root `And`, or the formula
    /// itself.
    pub fn conjuncts(&self) -> Vec<&Formula<A>> {
        match self {
            Formula::And(cs) => cs.iter().collect(),
            other => vec![other],
        }
    }
}

impl<A: Clone> Formula<A> {
    /// Rebuilds a conjunction from kept conjuncts; a single conjunct stands
    /// alone.
    pub fn conjunction(mut parts: Vec<Formula<A>>) -> Option<Self> {
        match parts.len() {
            0 => None,
            1 => parts.pop(),
            _ => Some(Formula::And(parts)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeAtom(pub String);

impl AttributeAtom {
    pub fn new(name: impl Into<String>) -> Self {
        AttributeAtom(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn is_type(&self) -> bool {
        vocab::is_type(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationAtom(pub String);

impl RelationAtom {
    pub fn new(name: impl Into<String>) -> Self {
        RelationAtom(name.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    pub fn arity(&self) -> Option<usize> {
        vocab::relation_arity(&self.0)
    }
}

pub type AttributeFormula = Formula<AttributeAtom>;
pub type RelationFormula = Formula<RelationAtom>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpectedObject {
    pub id: String,
    pub formula: AttributeFormula,
    pub is_hunt: bool,
}

impl ExpectedObject {
    /// The positive type atom, when exactly one exists.
    pub fn type_name(&self) -> Option<&str> {
        let types: Vec<_> = self
            .formula
            .positive_atoms()
            .into_iter()
            .filter(|a| a.is_type())
            .collect();
        match types.as_slice() {
            [only] => Some(only.name()),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationEdge {
    pub formula: RelationFormula,
    pub args: Vec<String>,
}

/// One branch of the and/or description graph.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Alternative {
    pub objects: Vec<ExpectedObject>,
    pub relations: Vec<RelationEdge>,
}

impl Alternative {
    pub fn object(&self, id: &str) -> Option<&ExpectedObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub fn object_index(&self, id: &str) -> Option<usize> {
        self.objects.iter().position(|o| o.id == id)
    }

    pub fn hunt(&self) -> Option<&ExpectedObject> {
        self.objects.iter().find(|o| o.is_hunt)
    }
}

/// Disjunction of alternatives; a plain description has exactly one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Description {
    pub alternatives: Vec<Alternative>,
}

impl Description {
    pub fn single(alt: Alternative) -> Self {
        Description { alternatives: vec![alt] }
    }
}
