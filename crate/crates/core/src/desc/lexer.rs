use std::fmt;

use super::SyntaxError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub offset: usize,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Word(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Colon,
    Hunt,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Word(w) => format!("'{w}'"),
            TokenKind::LBrace => "'{'".into(),
            TokenKind::RBrace => "'}'".into(),
            TokenKind::LParen => "'('".into(),
            TokenKind::RParen => "')'".into(),
            TokenKind::Comma => "','".into(),
            TokenKind::Colon => "':'".into(),
            TokenKind::Hunt => "'[hunt]'".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

impl Token {
    /// Lower-cased word text, for keyword and vocabulary comparisons.
    pub fn word_lower(&self) -> Option<String> {
        match &self.kind {
            TokenKind::Word(w) => Some(w.to_lowercase()),
            _ => None,
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '-'
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    // Advances over one char, keeping line/column in sync.
    macro_rules! bump {
        () => {{
            let (_, c) = chars.next().unwrap();
            if c == '\n' {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        }};
    }

    while let Some(&(offset, c)) = chars.peek() {
        let pos = Pos { offset, line, column };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '#' {
            while let Some(&(_, c)) = chars.peek() {
                if c == '\n' {
                    break;
                }
                bump!();
            }
            continue;
        }
        let simple = match c {
            '{' => Some(TokenKind::LBrace),
            '}' => Some(TokenKind::RBrace),
            '(' => Some(TokenKind::LParen),
            ')' => Some(TokenKind::RParen),
            ',' => Some(TokenKind::Comma),
            ':' => Some(TokenKind::Colon),
            _ => None,
        };
        if let Some(kind) = simple {
            bump!();
            tokens.push(Token { kind, pos });
            continue;
        }
        if c == '[' {
            bump!();
            let mut inner = String::new();
            loop {
                match chars.peek() {
                    Some(&(_, ']')) => {
                        bump!();
                        break;
                    }
                    Some(_) => inner.push(bump!()),
                    None => {
                        return Err(SyntaxError {
                            pos,
                            expected: vec!["']'".into()],
                            found: "end of input".into(),
                        })
                    }
                }
            }
            if inner.trim().eq_ignore_ascii_case("hunt") {
                tokens.push(Token { kind: TokenKind::Hunt, pos });
                continue;
            }
            return Err(SyntaxError {
                pos,
                expected: vec!["'[hunt]'".into()],
                found: format!("'[{inner}]'"),
            });
        }
        if is_word_char(c) {
            let mut word = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !is_word_char(c) {
                    break;
                }
                word.push(bump!());
            }
            tokens.push(Token { kind: TokenKind::Word(word), pos });
            continue;
        }
        return Err(SyntaxError {
            pos,
            expected: vec!["word".into(), "'{'".into(), "'('".into(), "'[hunt]'".into()],
            found: format!("'{c}'"),
        });
    }
    let offset = text.len();
    tokens.push(Token { kind: TokenKind::Eof, pos: Pos { offset, line, column } });
    Ok(tokens)
}
