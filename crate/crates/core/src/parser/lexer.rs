//! Tokenizer. `//@` opens an annotation that runs to the next `;`; further
//! `//@` prefixes inside an open annotation are continuation markers.

use crate::types::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    /// Start of a `//@` annotation.
    Annot,
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: Span,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: Span) -> Self {
        ParseError { message: message.into(), span }
    }
}

const SYMBOLS: &[&str] = &[
    "|->", "==", "!=", "&&", "||", "..", "(", ")", "{", "}", "[", "]", ",", ";", ":", "?", ".", "&", "*", "+", "-",
    "<", "!", "=", "@",
];

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let mut in_annot = false;
    let at = |i: usize| chars.get(i).copied().unwrap_or('\0');
    macro_rules! advance {
        ($n:expr) => {
            for _ in 0..$n {
                if at(i) == '\n' {
                    line += 1;
                    col = 1;
                } else {
                    col += 1;
                }
                i += 1;
            }
        };
    }
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance!(1);
        } else if c == '/' && at(i + 1) == '/' && at(i + 2) == '@' {
            if !in_annot {
                out.push(Token { tok: Tok::Annot, span });
                in_annot = true;
            }
            advance!(3);
        } else if c == '/' && at(i + 1) == '/' {
            while i < chars.len() && chars[i] != '\n' {
                advance!(1);
            }
        } else if c == '/' && at(i + 1) == '*' {
            advance!(2);
            while i < chars.len() && !(at(i) == '*' && at(i + 1) == '/') {
                advance!(1);
            }
            if i >= chars.len() {
                return Err(ParseError::new("unterminated comment", span));
            }
            advance!(2);
        } else if c.is_ascii_digit() {
            let start = i;
            while at(i).is_ascii_digit() {
                advance!(1);
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse::<i64>().map_err(|_| ParseError::new(format!("integer literal {text} out of range"), span))?;
            out.push(Token { tok: Tok::Int(n), span });
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while at(i).is_ascii_alphanumeric() || at(i) == '_' {
                advance!(1);
            }
            out.push(Token { tok: Tok::Ident(chars[start..i].iter().collect()), span });
        } else {
            let Some(sym) = SYMBOLS.iter().find(|s| s.chars().enumerate().all(|(k, sc)| at(i + k) == sc)) else {
                return Err(ParseError::new(format!("unexpected character `{c}`"), span));
            };
            if *sym == ";" {
                in_annot = false;
            }
            out.push(Token { tok: Tok::Sym(sym), span });
            advance!(sym.len());
        }
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}
