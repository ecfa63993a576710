//! The description language: a chain shorthand for paths
//! ("horizontal pipe on red floodgate[hunt]") and a structured form with
//! object and relation declarations, boolean connectives and alternatives.
//!
//! ```text
//! object p: pipe and horizontal
//! object f: floodgate and (red or blue) [hunt]
//! relation on(p, f)
//! ```

mod ast;
mod lexer;
mod parser;
mod printer;
mod validate;

use std::fmt;

pub use ast::{
    Alternative, AttributeAtom, AttributeFormula, Description, ExpectedObject, Formula, RelationAtom, RelationEdge,
    RelationFormula,
};
pub use lexer::Pos;
pub use parser::parse_description;
pub use printer::{formula_text, object_text, phrase_text, print_description, relation_text};
pub use validate::{validate_description, Diagnostic, DiagnosticCode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError {
    pub pos: Pos,
    pub expected: Vec<String>,
    pub found: String,
}

impl fmt::Display for SyntaxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "syntax error at {}: expected {}, found {}", self.pos, self.expected.join(" or "), self.found)
    }
}

impl std::error::Error for SyntaxError {}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DescError {
    #[error("empty description")]
    Empty,
    #[error(transparent)]
    Syntax(#[from] SyntaxError),
    #[error("invalid description: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

impl DescError {
    pub fn diagnostics(&self) -> &[Diagnostic] {
        match self {
            DescError::Invalid(d) => d,
            _ => &[],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(n: &str) -> AttributeFormula {
        Formula::Atom(AttributeAtom::new(n))
    }

    fn rel(n: &str) -> RelationFormula {
        Formula::Atom(RelationAtom::new(n))
    }

    fn codes(err: DescError) -> Vec<DiagnosticCode> {
        err.diagnostics().iter().map(|d| d.code).collect()
    }

    #[test]
    fn red_floodgate_hunt() {
        let d = parse_description("red floodgate[hunt]").unwrap();
        let alt = &d.alternatives[0];
        assert_eq!(alt.objects.len(), 1);
        assert_eq!(alt.objects[0].formula, Formula::And(vec![atom("red"), atom("floodgate")]));
        assert!(alt.objects[0].is_hunt);
        assert!(alt.relations.is_empty());
    }

    #[test]
    fn pipe_on_floodgate() {
        let d = parse_description("horizontal pipe on red floodgate[hunt]").unwrap();
        let alt = &d.alternatives[0];
        assert_eq!(alt.objects.len(), 2);
        assert_eq!(alt.relations.len(), 1);
        assert_eq!(alt.relations[0].formula, rel("on"));
        assert_eq!(alt.relations[0].args, vec!["o1".to_string(), "o2".to_string()]);
        assert!(alt.objects[1].is_hunt);
    }

    #[test]
    fn chain_without_marker_hunts_last_object() {
        let d = parse_description("vertical elongated pipe elbow horizontal pipe on red floodgate").unwrap();
        let alt = &d.alternatives[0];
        assert_eq!(alt.objects.len(), 3);
        assert_eq!(alt.relations.len(), 2);
        assert_eq!(alt.relations[0].formula, rel("elbow"));
        assert_eq!(
            alt.objects[0].formula,
            Formula::And(vec![atom("vertical"), atom("elongated"), atom("pipe")])
        );
        assert_eq!(alt.hunt().unwrap().id, "o3");
    }

    #[test]
    fn compound_relation_words() {
        let text = "super-charger in front of horizontal pipe connected on the left to elbow \
                    connected to pipe on red floodgate[hunt]";
        let d = parse_description(text).unwrap();
        let alt = &d.alternatives[0];
        assert_eq!(alt.objects.len(), 5);
        assert_eq!(alt.objects[0].formula, atom("supercharger"));
        assert_eq!(alt.relations[0].formula, rel("in_front_of"));
        assert_eq!(alt.relations[1].formula, Formula::And(vec![rel("connected_to"), rel("on_the_left_to")]));
        assert_eq!(alt.objects[2].formula, atom("elbow"));
        assert_eq!(alt.relations[2].formula, rel("connected_to"));
    }

    #[test]
    fn structured_precedence() {
        let d = parse_description("object a: floodgate and not red or blue [hunt]").unwrap();
        let f = &d.alternatives[0].objects[0].formula;
        assert_eq!(
            *f,
            Formula::Or(vec![Formula::And(vec![atom("floodgate"), Formula::not(atom("red"))]), atom("blue")])
        );
    }

    #[test]
    fn structured_relations_and_alternatives() {
        let text = "{ object a: pipe object b: floodgate [hunt] relation above and on_the_right_to (a, b) } \
                    or { object a: pipe object b: floodgate [hunt] relation in_front_of or on_the_left_to (a, b) }";
        let d = parse_description(text).unwrap();
        assert_eq!(d.alternatives.len(), 2);
        assert_eq!(
            d.alternatives[0].relations[0].formula,
            Formula::And(vec![rel("above"), rel("on_the_right_to")])
        );
        assert_eq!(d.alternatives[1].relations[0].formula, Formula::Or(vec![rel("in_front_of"), rel("on_the_left_to")]));
    }

    #[test]
    fn unbraced_or_between_alternatives() {
        let d = parse_description("object a: red or blue [hunt] or object b: pipe").unwrap_err();
        assert_eq!(codes(d), vec![DiagnosticCode::MissingTypeAtom]);
        let d = parse_description("object a: floodgate and (red or blue) or object b: pipe").unwrap();
        assert_eq!(d.alternatives.len(), 2);
        assert!(d.alternatives.iter().all(|a| a.objects.len() == 1 && a.objects[0].is_hunt));
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let d = parse_description("OBJECT a: Pipe AND Horizontal [HUNT]").unwrap();
        assert_eq!(d.alternatives[0].objects[0].formula, Formula::And(vec![atom("pipe"), atom("horizontal")]));
    }

    #[test]
    fn syntax_error_carries_position_and_expectations() {
        let err = parse_description("object a pipe").unwrap_err();
        let DescError::Syntax(e) = err else { panic!("expected syntax error") };
        assert_eq!(e.pos.column, 10);
        assert_eq!(e.expected, vec!["':'".to_string()]);
    }

    #[test]
    fn chain_errors() {
        assert!(matches!(parse_description("red on floodgate"), Err(DescError::Syntax(_))));
        assert!(matches!(parse_description("pipe floodgate"), Err(DescError::Syntax(_))));
        assert_eq!(codes(parse_description("purple pipe").unwrap_err()), vec![DiagnosticCode::UnknownPredicate]);
        assert_eq!(parse_description("  "), Err(DescError::Empty));
    }

    #[test]
    fn validation_failures_surface_at_parse() {
        let e = parse_description("object a: pipe [hunt] object b: floodgate [hunt]").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::DuplicateHunt]);
        let e = parse_description("object a: pipe object b: floodgate").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::MissingHunt]);
        let e = parse_description("object a: pipe [hunt] relation on(a, z)").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::UnknownObjectRef]);
        let e = parse_description("object a: pipe [hunt] object b: pipe relation on(a, b, a)").unwrap_err();
        assert!(codes(e).contains(&DiagnosticCode::ArityMismatch));
        let e = parse_description("object a: pipe and floodgate [hunt]").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::MultipleTypeAtoms]);
        let e = parse_description("object a: red [hunt]").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::MissingTypeAtom]);
        let e = parse_description("object a: pipe and sparkly [hunt]").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::UnknownPredicate]);
        let e = parse_description("object a: pipe [hunt] object b: pipe relation wobbly(a, b)").unwrap_err();
        assert_eq!(codes(e), vec![DiagnosticCode::UnknownPredicate]);
    }

    #[test]
    fn single_object_is_implicit_hunt_in_chain() {
        let d = parse_description("red floodgate").unwrap();
        assert!(d.alternatives[0].objects[0].is_hunt);
    }

    #[test]
    fn validate_examples() {
        let n2 = parse_description("horizontal pipe on red floodgate").unwrap();
        assert!(validate_description(&n2).is_empty());

        let mut bad = n2.clone();
        bad.alternatives[0].relations[0].args[1] = "ghost".into();
        let diags = validate_description(&bad);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].code, DiagnosticCode::UnknownObjectRef);
        assert_eq!(diags[0].element, "ghost");

        let mut two = n2.clone();
        two.alternatives[0].objects[0].is_hunt = true;
        let diags = validate_description(&two);
        assert_eq!(diags.iter().map(|d| d.code).collect::<Vec<_>>(), vec![DiagnosticCode::DuplicateHunt]);

        let mut dup = n2.clone();
        dup.alternatives[0].objects[1].id = "o1".into();
        assert!(validate_description(&dup).iter().any(|d| d.code == DiagnosticCode::DuplicateObjectId));

        let mut degenerate = n2;
        degenerate.alternatives[0].objects[0].formula = Formula::And(vec![atom("pipe")]);
        assert!(validate_description(&degenerate).iter().any(|d| d.code == DiagnosticCode::MalformedConnective));
    }

    #[test]
    fn printer_canonical_forms() {
        let n1 = parse_description("red floodgate").unwrap();
        assert_eq!(print_description(&n1), "red floodgate[hunt]");
        let d = parse_description("object x: floodgate and (red or blue) [hunt]").unwrap();
        assert_eq!(print_description(&d), "object x: floodgate and (red or blue) [hunt]");
        let d = parse_description("object o1: red and floodgate [hunt]").unwrap();
        assert_eq!(print_description(&d), "red floodgate[hunt]");
    }

    #[test]
    fn printer_keeps_grouping() {
        for text in [
            "object a: (pipe and red) and blue [hunt]",
            "object a: pipe and (red or (blue or green)) [hunt]",
            "object a: pipe and not not red [hunt]",
            "object a: pipe and not (red and blue) [hunt]",
            "object a: pipe [hunt] object b: pipe relation (above or below) and not near_from(a, b)",
            "{ object a: pipe [hunt] } or { object b: floodgate [hunt] }",
        ] {
            let d = parse_description(text).unwrap();
            let printed = print_description(&d);
            assert_eq!(parse_description(&printed).unwrap(), d, "{printed}");
            assert_eq!(print_description(&parse_description(&printed).unwrap()), printed);
        }
    }

    #[test]
    fn documented_strings_roundtrip() {
        for text in [
            "red floodgate",
            "horizontal pipe on red floodgate",
            "vertical elongated pipe elbow horizontal pipe on red floodgate",
            "cistern above pipe connected to elbow connected on the right to pipe on floodgate[hunt]",
            "super-charger in front of horizontal pipe connected on the left to elbow connected to pipe on red floodgate[hunt]",
        ] {
            let d = parse_description(text).unwrap();
            let printed = print_description(&d);
            assert_eq!(parse_description(&printed).unwrap(), d, "{printed}");
        }
    }
}
