use super::ast::*;
use super::lexer::{tokenize, Token, TokenKind};
use super::validate::{validate_description, Diagnostic, DiagnosticCode};
use super::{DescError, SyntaxError};
use crate::vocab;

const KEYWORDS: &[&str] = &["object", "relation", "and", "or", "not"];

/// Multi-word relation phrases accepted by the chain shorthand, longest
/// first so that greedy matching picks "connected on the right to" over
/// "connected to".
pub(crate) fn relation_phrases() -> Vec<(Vec<&'static str>, RelationFormula)> {
    let atom = |n: &str| Formula::Atom(RelationAtom::new(n));
    let mut phrases: Vec<(Vec<&'static str>, RelationFormula)> = vec![
        (
            vec!["connected", "on", "the", "right", "to"],
            Formula::And(vec![atom("connected_to"), atom("on_the_right_to")]),
        ),
        (
            vec!["connected", "on", "the", "left", "to"],
            Formula::And(vec![atom("connected_to"), atom("on_the_left_to")]),
        ),
        (vec!["on", "the", "right", "to"], atom("on_the_right_to")),
        (vec!["on", "the", "right", "of"], atom("on_the_right_to")),
        (vec!["on", "the", "left", "to"], atom("on_the_left_to")),
        (vec!["on", "the", "left", "of"], atom("on_the_left_to")),
        (vec!["in", "front", "of"], atom("in_front_of")),
        (vec!["right", "of"], atom("on_the_right_to")),
        (vec!["left", "of"], atom("on_the_left_to")),
        (vec!["connected", "to"], atom("connected_to")),
        (vec!["near", "from"], atom("near_from")),
        (vec!["near", "to"], atom("near_from")),
    ];
    for name in vocab::RELATIONS {
        phrases.push((vec![name], atom(name)));
    }
    phrases.push((vec!["near"], atom("near_from")));
    phrases.sort_by_key(|(words, _)| std::cmp::Reverse(words.len()));
    phrases
}

pub fn parse_description(text: &str) -> Result<Description, DescError> {
    if text.trim().is_empty() {
        return Err(DescError::Empty);
    }
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, at: 0 };
    let description = if parser.starts_structured() {
        parser.structured()?
    } else {
        parser.chain()?
    };
    let diagnostics = validate_description(&description);
    if diagnostics.is_empty() {
        Ok(description)
    } else {
        Err(DescError::Invalid(diagnostics))
    }
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
}

impl Parser {
    fn current(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn peek(&self, ahead: usize) -> &Token {
        let i = (self.at + ahead).min(self.tokens.len() - 1);
        &self.tokens[i]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at < self.tokens.len() - 1 {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &[&str]) -> SyntaxError {
        SyntaxError {
            pos: self.current().pos,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.current().kind.describe(),
        }
    }

    fn is_keyword(&self, tok: &Token, kw: &str) -> bool {
        tok.word_lower().as_deref() == Some(kw)
    }

    fn at_keyword(&self, kw: &str) -> bool {
        self.is_keyword(self.current(), kw)
    }

    fn expect(&mut self, kind: TokenKind, label: &str) -> Result<Token, SyntaxError> {
        if self.current().kind == kind {
            Ok(self.advance())
        } else {
            Err(self.error(&[label]))
        }
    }

    fn starts_structured(&self) -> bool {
        let t = self.current();
        t.kind == TokenKind::LBrace || self.is_keyword(t, "object") || self.is_keyword(t, "relation")
    }

    // ---- chain shorthand -------------------------------------------------

    fn chain(&mut self) -> Result<Description, DescError> {
        let phrases = relation_phrases();
        let mut alt = Alternative::default();
        let mut pending: Option<RelationFormula> = None;
        loop {
            let id = format!("o{}", alt.objects.len() + 1);
            let (formula, is_hunt) = self.phrase()?;
            if let (Some(prev), Some(rel)) = (alt.objects.last(), pending.take()) {
                alt.relations.push(RelationEdge { formula: rel, args: vec![prev.id.clone(), id.clone()] });
            }
            alt.objects.push(ExpectedObject { id, formula, is_hunt });
            if self.current().kind == TokenKind::Eof {
                break;
            }
            match self.relation_word(&phrases) {
                Some(f) => pending = Some(f),
                None => return Err(self.error(&["relation word", "end of input"]).into()),
            }
        }
        if !alt.objects.iter().any(|o| o.is_hunt) {
            // A path leads to its last object.
            if let Some(last) = alt.objects.last_mut() {
                last.is_hunt = true;
            }
        }
        Ok(Description::single(alt))
    }

    fn phrase(&mut self) -> Result<(AttributeFormula, bool), DescError> {
        let mut adjectives = Vec::new();
        loop {
            let tok = self.current().clone();
            let TokenKind::Word(raw) = &tok.kind else {
                return Err(self.error(&["attribute", "object type"]).into());
            };
            let word = vocab::canonical_word(raw);
            match vocab::attribute_kind(&word) {
                Some(vocab::AttributeKind::Type) => {
                    self.advance();
                    let type_atom = Formula::Atom(AttributeAtom::new(word));
                    let formula = if adjectives.is_empty() {
                        type_atom
                    } else {
                        adjectives.push(type_atom);
                        Formula::And(adjectives)
                    };
                    let is_hunt = if self.current().kind == TokenKind::Hunt {
                        self.advance();
                        true
                    } else {
                        false
                    };
                    return Ok((formula, is_hunt));
                }
                Some(_) => {
                    self.advance();
                    adjectives.push(Formula::Atom(AttributeAtom::new(word)));
                }
                None if KEYWORDS.contains(&word.as_str())
                    || relation_phrases().iter().any(|(w, _)| w[0] == word) =>
                {
                    return Err(self.error(&["attribute", "object type"]).into());
                }
                None => {
                    return Err(DescError::Invalid(vec![Diagnostic {
                        code: DiagnosticCode::UnknownPredicate,
                        alternative: 0,
                        element: word.clone(),
                        message: format!("unknown attribute '{word}' at {}", tok.pos),
                    }]));
                }
            }
        }
    }

    fn relation_word(&mut self, phrases: &[(Vec<&'static str>, RelationFormula)]) -> Option<RelationFormula> {
        for (words, formula) in phrases {
            let matches = words.iter().enumerate().all(|(k, w)| {
                self.peek(k).word_lower().map(|t| vocab::canonical_word(&t)).as_deref() == Some(*w)
            });
            if matches {
                for _ in 0..words.len() {
                    self.advance();
                }
                return Some(formula.clone());
            }
        }
        None
    }

    // ---- structured form -------------------------------------------------

    fn structured(&mut self) -> Result<Description, DescError> {
        let mut alternatives = vec![self.alternative()?];
        while self.at_keyword("or") {
            self.advance();
            alternatives.push(self.alternative()?);
        }
        if self.current().kind != TokenKind::Eof {
            return Err(self.error(&["'or'", "'object'", "'relation'", "end of input"]).into());
        }
        Ok(Description { alternatives })
    }

    fn alternative(&mut self) -> Result<Alternative, SyntaxError> {
        let braced = self.current().kind == TokenKind::LBrace;
        if braced {
            self.advance();
        }
        let mut alt = Alternative::default();
        loop {
            if self.at_keyword("object") {
                self.advance();
                let id = self.identifier()?;
                self.expect(TokenKind::Colon, "':'")?;
                let formula = self.formula(&|w| AttributeAtom::new(vocab::canonical_word(w)))?;
                let is_hunt = if self.current().kind == TokenKind::Hunt {
                    self.advance();
                    true
                } else {
                    false
                };
                alt.objects.push(ExpectedObject { id, formula, is_hunt });
            } else if self.at_keyword("relation") {
                self.advance();
                let formula = self.formula(&|w| RelationAtom::new(w.to_lowercase()))?;
                self.expect(TokenKind::LParen, "'('")?;
                let mut args = vec![self.identifier()?];
                self.expect(TokenKind::Comma, "','")?;
                args.push(self.identifier()?);
                while self.current().kind == TokenKind::Comma {
                    self.advance();
                    args.push(self.identifier()?);
                }
                self.expect(TokenKind::RParen, "')'")?;
                alt.relations.push(RelationEdge { formula, args });
            } else {
                break;
            }
        }
        if alt.objects.is_empty() && alt.relations.is_empty() {
            return Err(self.error(&["'object'", "'relation'"]));
        }
        if braced {
            self.expect(TokenKind::RBrace, "'}'")?;
        }
        if let [only] = alt.objects.as_mut_slice() {
            only.is_hunt = true;
        }
        Ok(alt)
    }

    fn identifier(&mut self) -> Result<String, SyntaxError> {
        match &self.current().kind {
            TokenKind::Word(w) if !KEYWORDS.contains(&w.to_lowercase().as_str()) => {
                let w = w.clone();
                self.advance();
                Ok(w)
            }
            _ => Err(self.error(&["identifier"])),
        }
    }

    /// `or` separates alternatives when followed by a declaration or a brace.
    fn or_continues_formula(&self) -> bool {
        if !self.at_keyword("or") {
            return false;
        }
        let next = self.peek(1);
        !(next.kind == TokenKind::LBrace
            || self.is_keyword(next, "object")
            || self.is_keyword(next, "relation"))
    }

    fn formula<A>(&mut self, make: &dyn Fn(&str) -> A) -> Result<Formula<A>, SyntaxError> {
        let mut terms = vec![self.term(make)?];
        while self.or_continues_formula() {
            self.advance();
            terms.push(self.term(make)?);
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Formula::Or(terms) })
    }

    fn term<A>(&mut self, make: &dyn Fn(&str) -> A) -> Result<Formula<A>, SyntaxError> {
        let mut factors = vec![self.factor(make)?];
        while self.at_keyword("and") {
            self.advance();
            factors.push(self.factor(make)?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Formula::And(factors) })
    }

    fn factor<A>(&mut self, make: &dyn Fn(&str) -> A) -> Result<Formula<A>, SyntaxError> {
        if self.at_keyword("not") {
            self.advance();
            return Ok(Formula::not(self.factor(make)?));
        }
        if self.current().kind == TokenKind::LParen {
            self.advance();
            let inner = self.formula(make)?;
            self.expect(TokenKind::RParen, "')'")?;
            return Ok(inner);
        }
        match &self.current().kind {
            TokenKind::Word(w) if !KEYWORDS.contains(&w.to_lowercase().as_str()) => {
                let atom = make(w);
                self.advance();
                Ok(Formula::Atom(atom))
            }
            _ => Err(self.error(&["'not'", "'('", "predicate"])),
        }
    }
}

