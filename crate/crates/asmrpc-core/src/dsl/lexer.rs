//! Tokenizer for the rule language. `#` starts a line comment; newlines are
//! significant as rule separators except inside parentheses or brackets.

use super::Span;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Assign, // :=
    Eq,
    Ne,
    Ge,
    Le,
    Gt,
    Lt,
    Plus,
    Star,
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::Assign => "`:=`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Ne => "`!=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Star => "`*`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBracket => "`[`".into(),
            Tok::RBracket => "`]`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at line {}, column {}", span.line, span.col)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, LexError> {
    let mut out = Vec::new();
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    let mut depth: u32 = 0; // paren/bracket nesting; newlines inside are blank
    let bytes = text.as_bytes();
    let mut i = 0usize;

    let span_at = |line: u32, col: u32, offset: usize, len: usize| Span {
        line,
        col,
        offset: offset as u32,
        len: len as u32,
    };

    while i < bytes.len() {
        let c = bytes[i] as char;
        let (tl, tc, to) = (line, col, i);
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                if depth == 0 && !matches!(out.last().map(|t: &Token| &t.tok), Some(Tok::Newline) | None)
                {
                    out.push(Token {
                        tok: Tok::Newline,
                        span: span_at(tl, tc, to, 1),
                    });
                }
                i += 1;
                line += 1;
                col = 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                    col += 1;
                }
            }
            '(' | '[' => {
                depth += 1;
                out.push(Token {
                    tok: if c == '(' { Tok::LParen } else { Tok::LBracket },
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            ')' | ']' => {
                depth = depth.saturating_sub(1);
                out.push(Token {
                    tok: if c == ')' { Tok::RParen } else { Tok::RBracket },
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            '{' | '}' => {
                out.push(Token {
                    tok: if c == '{' { Tok::LBrace } else { Tok::RBrace },
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            ',' => {
                out.push(Token {
                    tok: Tok::Comma,
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            '+' => {
                out.push(Token {
                    tok: Tok::Plus,
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            '*' => {
                out.push(Token {
                    tok: Tok::Star,
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            ':' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(Token {
                        tok: Tok::Assign,
                        span: span_at(tl, tc, to, 2),
                    });
                    i += 2;
                    col += 2;
                } else {
                    return Err(LexError {
                        message: "expected `:=`".into(),
                        span: span_at(tl, tc, to, 1),
                    });
                }
            }
            '=' => {
                out.push(Token {
                    tok: Tok::Eq,
                    span: span_at(tl, tc, to, 1),
                });
                i += 1;
                col += 1;
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(Token {
                        tok: Tok::Ne,
                        span: span_at(tl, tc, to, 2),
                    });
                    i += 2;
                    col += 2;
                } else {
                    return Err(LexError {
                        message: "expected `!=`".into(),
                        span: span_at(tl, tc, to, 1),
                    });
                }
            }
            '>' | '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push(Token {
                        tok: if c == '>' { Tok::Ge } else { Tok::Le },
                        span: span_at(tl, tc, to, 2),
                    });
                    i += 2;
                    col += 2;
                } else {
                    out.push(Token {
                        tok: if c == '>' { Tok::Gt } else { Tok::Lt },
                        span: span_at(tl, tc, to, 1),
                    });
                    i += 1;
                    col += 1;
                }
            }
            _ if c.is_ascii_digit()
                || (c == '-' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) =>
            {
                let start = i;
                i += 1;
                col += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                    col += 1;
                }
                let text = &text[start..i];
                let n: i64 = text.parse().map_err(|_| LexError {
                    message: format!("integer literal `{text}` out of range"),
                    span: span_at(tl, tc, to, i - start),
                })?;
                out.push(Token {
                    tok: Tok::Int(n),
                    span: span_at(tl, tc, to, i - start),
                });
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                    col += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(text[start..i].to_string()),
                    span: span_at(tl, tc, to, i - start),
                });
            }
            _ => {
                return Err(LexError {
                    message: format!("unexpected character `{c}`"),
                    span: span_at(tl, tc, to, 1),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: span_at(line, col, bytes.len(), 0),
    });
    Ok(out)
}
