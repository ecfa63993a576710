use std::fmt::Write;

use super::ast::*;
use super::parser::relation_phrases;
use crate::vocab;

/// Canonical text of a description. Single-path descriptions that the chain
/// shorthand can express print in that form; everything else prints in the
/// structured form.
pub fn print_description(d: &Description) -> String {
    if let Some(chain) = as_chain(d) {
        return chain;
    }
    let mut out = String::new();
    if d.alternatives.len() == 1 {
        print_alternative(&d.alternatives[0], "", &mut out);
        return out.trim_end().to_string();
    }
    for (i, alt) in d.alternatives.iter().enumerate() {
        if i > 0 {
            out.push_str(" or ");
        }
        out.push_str("{\n");
        print_alternative(alt, "  ", &mut out);
        out.push('}');
    }
    out
}

fn print_alternative(alt: &Alternative, indent: &str, out: &mut String) {
    for o in &alt.objects {
        let hunt = if o.is_hunt { " [hunt]" } else { "" };
        let _ = writeln!(out, "{indent}object {}: {}{hunt}", o.id, formula_text(&o.formula));
    }
    for e in &alt.relations {
        let _ = writeln!(out, "{indent}relation {}({})", formula_text(&e.formula), e.args.join(", "));
    }
}

/// Structured-form text of a formula. `and` binds tighter than `or`, `not`
/// tighter than both; nested connectives of the same kind keep their
/// parentheses so the text reparses to the same tree.
pub fn formula_text<A: AtomName>(f: &Formula<A>) -> String {
    let mut out = String::new();
    write_formula(f, &mut out);
    out
}

pub trait AtomName {
    fn atom_name(&self) -> &str;
}

impl AtomName for AttributeAtom {
    fn atom_name(&self) -> &str {
        self.name()
    }
}

impl AtomName for RelationAtom {
    fn atom_name(&self) -> &str {
        self.name()
    }
}

fn precedence<A>(f: &Formula<A>) -> u8 {
    match f {
        Formula::Or(_) => 1,
        Formula::And(_) => 2,
        Formula::Not(_) | Formula::Atom(_) => 3,
    }
}

fn write_formula<A: AtomName>(f: &Formula<A>, out: &mut String) {
    match f {
        Formula::Atom(a) => out.push_str(a.atom_name()),
        Formula::And(cs) | Formula::Or(cs) => {
            let (sep, own) = if matches!(f, Formula::And(_)) { (" and ", 2) } else { (" or ", 1) };
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    out.push_str(sep);
                }
                write_operand(c, precedence(c) <= own, out);
            }
        }
        Formula::Not(inner) => {
            out.push_str("not ");
            write_operand(inner, precedence(inner) < 3, out);
        }
    }
}

fn write_operand<A: AtomName>(f: &Formula<A>, parens: bool, out: &mut String) {
    if parens {
        out.push('(');
        write_formula(f, out);
        out.push(')');
    } else {
        write_formula(f, out);
    }
}

/// "red floodgate" style text for an object formula made of adjectives
/// followed by a type atom; `None` for any other shape.
pub fn phrase_text(f: &AttributeFormula) -> Option<String> {
    match f {
        Formula::Atom(a) if a.is_type() => Some(a.name().to_string()),
        Formula::And(cs) if cs.len() >= 2 => {
            let (last, adjectives) = cs.split_last()?;
            let Formula::Atom(t) = last else { return None };
            if !t.is_type() {
                return None;
            }
            let mut words = Vec::with_capacity(cs.len());
            for a in adjectives {
                match a {
                    Formula::Atom(a) if !a.is_type() && vocab::attribute_kind(a.name()).is_some() => {
                        words.push(a.name())
                    }
                    _ => return None,
                }
            }
            words.push(t.name());
            Some(words.join(" "))
        }
        _ => None,
    }
}

/// Readable text of an object formula: the phrase form when possible.
pub fn object_text(f: &AttributeFormula) -> String {
    phrase_text(f).unwrap_or_else(|| formula_text(f))
}

/// Readable text of a relation formula: its chain phrase when one exists.
pub fn relation_text(f: &RelationFormula) -> String {
    relation_phrase(f).unwrap_or_else(|| formula_text(f))
}

fn relation_phrase(f: &RelationFormula) -> Option<String> {
    match f {
        Formula::Atom(a) if a.arity().is_some() => Some(a.name().replace('_', " ")),
        _ => relation_phrases()
            .into_iter()
            .find(|(words, formula)| words.len() > 1 && formula == f)
            .map(|(words, _)| words.join(" ")),
    }
}

fn as_chain(d: &Description) -> Option<String> {
    let [alt] = d.alternatives.as_slice() else { return None };
    let k = alt.objects.len();
    if k == 0 || alt.relations.len() != k - 1 {
        return None;
    }
    for (i, o) in alt.objects.iter().enumerate() {
        if o.id != format!("o{}", i + 1) {
            return None;
        }
    }
    if alt.objects.iter().filter(|o| o.is_hunt).count() != 1 {
        return None;
    }
    let mut out = String::new();
    for (i, o) in alt.objects.iter().enumerate() {
        if i > 0 {
            let edge = &alt.relations[i - 1];
            if edge.args != [alt.objects[i - 1].id.clone(), o.id.clone()] {
                return None;
            }
            let words = relation_phrase(&edge.formula)?;
            out.push(' ');
            out.push_str(&words);
            out.push(' ');
        }
        out.push_str(&phrase_text(&o.formula)?);
        if o.is_hunt {
            out.push_str("[hunt]");
        }
    }
    Some(out)
}
