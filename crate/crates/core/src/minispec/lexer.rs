//! Lexer for MiniSpec source text. `--` starts a line comment. Positions are
//! zero-based line/character pairs over Unicode scalar values.

use crate::slsp_types::{Diagnostic, Position, Range};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(i64),
    // keywords
    Module,
    End,
    Pre,
    Post,
    If,
    Then,
    Else,
    Let,
    In,
    Trace,
    Lemma,
    True,
    False,
    And,
    Or,
    Not,
    Mod,
    TyInt,
    TyNat,
    TyBool,
    // punctuation and operators
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Semi,
    Dot,
    Pipe,
    DefEq,  // ==
    Eq,     // =
    Ne,     // <>
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Imp, // =>
    Eof,
}

impl TokenKind {
    /// Display form used in diagnostics.
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(n) => format!("integer `{n}`"),
            TokenKind::Eof => "end of file".into(),
            other => format!("`{}`", other.literal()),
        }
    }

    fn literal(&self) -> &'static str {
        match self {
            TokenKind::Module => "module",
            TokenKind::End => "end",
            TokenKind::Pre => "pre",
            TokenKind::Post => "post",
            TokenKind::If => "if",
            TokenKind::Then => "then",
            TokenKind::Else => "else",
            TokenKind::Let => "let",
            TokenKind::In => "in",
            TokenKind::Trace => "trace",
            TokenKind::Lemma => "lemma",
            TokenKind::True => "true",
            TokenKind::False => "false",
            TokenKind::And => "and",
            TokenKind::Or => "or",
            TokenKind::Not => "not",
            TokenKind::Mod => "mod",
            TokenKind::TyInt => "int",
            TokenKind::TyNat => "nat",
            TokenKind::TyBool => "bool",
            TokenKind::LParen => "(",
            TokenKind::RParen => ")",
            TokenKind::LBrace => "{",
            TokenKind::RBrace => "}",
            TokenKind::Comma => ",",
            TokenKind::Colon => ":",
            TokenKind::Semi => ";",
            TokenKind::Dot => ".",
            TokenKind::Pipe => "|",
            TokenKind::DefEq => "==",
            TokenKind::Eq => "=",
            TokenKind::Ne => "<>",
            TokenKind::Lt => "<",
            TokenKind::Le => "<=",
            TokenKind::Gt => ">",
            TokenKind::Ge => ">=",
            TokenKind::Plus => "+",
            TokenKind::Minus => "-",
            TokenKind::Star => "*",
            TokenKind::Slash => "/",
            TokenKind::Imp => "=>",
            TokenKind::Ident(_) | TokenKind::Int(_) | TokenKind::Eof => unreachable!(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub span: Range,
}

pub fn lex(text: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut diagnostics = Vec::new();
    let mut i = 0;
    let mut line: u32 = 0;
    let mut col: u32 = 0;

    let span1 = |line: u32, col: u32| Range {
        start: Position::new(line, col),
        end: Position::new(line, col + 1),
    };

    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 0;
            }
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '-' if chars.get(i + 1) == Some(&'-') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            '0'..='9' => {
                let start_col = col;
                let mut value: i128 = 0;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    value = value * 10 + (chars[i] as i128 - '0' as i128);
                    if value > i64::MAX as i128 + 1 {
                        value = i64::MAX as i128 + 2; // saturate past the boundary
                    }
                    i += 1;
                    col += 1;
                }
                let span = Range {
                    start: Position::new(line, start_col),
                    end: Position::new(line, col),
                };
                // The bare literal must fit in i64; the value one past i64::MAX
                // is also rejected (we have no literal negation at lex level).
                if value > i64::MAX as i128 {
                    diagnostics.push(Diagnostic::error(span, "integer literal out of range"));
                    tokens.push(Token { kind: TokenKind::Int(0), span });
                } else {
                    tokens.push(Token { kind: TokenKind::Int(value as i64), span });
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start_col = col;
                let mut word = String::new();
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    word.push(chars[i]);
                    i += 1;
                    col += 1;
                }
                let kind = match word.as_str() {
                    "module" => TokenKind::Module,
                    "end" => TokenKind::End,
                    "pre" => TokenKind::Pre,
                    "post" => TokenKind::Post,
                    "if" => TokenKind::If,
                    "then" => TokenKind::Then,
                    "else" => TokenKind::Else,
                    "let" => TokenKind::Let,
                    "in" => TokenKind::In,
                    "trace" => TokenKind::Trace,
                    "lemma" => TokenKind::Lemma,
                    "true" => TokenKind::True,
                    "false" => TokenKind::False,
                    "and" => TokenKind::And,
                    "or" => TokenKind::Or,
                    "not" => TokenKind::Not,
                    "mod" => TokenKind::Mod,
                    "int" => TokenKind::TyInt,
                    "nat" => TokenKind::TyNat,
                    "bool" => TokenKind::TyBool,
                    _ => TokenKind::Ident(word),
                };
                tokens.push(Token {
                    kind,
                    span: Range {
                        start: Position::new(line, start_col),
                        end: Position::new(line, col),
                    },
                });
            }
            _ => {
                let start_col = col;
                let (kind, len) = match (c, chars.get(i + 1)) {
                    ('=', Some('=')) => (TokenKind::DefEq, 2),
                    ('=', Some('>')) => (TokenKind::Imp, 2),
                    ('=', _) => (TokenKind::Eq, 1),
                    ('<', Some('>')) => (TokenKind::Ne, 2),
                    ('<', Some('=')) => (TokenKind::Le, 2),
                    ('<', _) => (TokenKind::Lt, 1),
                    ('>', Some('=')) => (TokenKind::Ge, 2),
                    ('>', _) => (TokenKind::Gt, 1),
                    ('(', _) => (TokenKind::LParen, 1),
                    (')', _) => (TokenKind::RParen, 1),
                    ('{', _) => (TokenKind::LBrace, 1),
                    ('}', _) => (TokenKind::RBrace, 1),
                    (',', _) => (TokenKind::Comma, 1),
                    (':', _) => (TokenKind::Colon, 1),
                    (';', _) => (TokenKind::Semi, 1),
                    ('.', _) => (TokenKind::Dot, 1),
                    ('|', _) => (TokenKind::Pipe, 1),
                    ('+', _) => (TokenKind::Plus, 1),
                    ('-', _) => (TokenKind::Minus, 1),
                    ('*', _) => (TokenKind::Star, 1),
                    ('/', _) => (TokenKind::Slash, 1),
                    _ => {
                        diagnostics.push(Diagnostic::error(
                            span1(line, col),
                            format!("unexpected character `{c}`"),
                        ));
                        i += 1;
                        col += 1;
                        continue;
                    }
                };
                i += len;
                col += len as u32;
                tokens.push(Token {
                    kind,
                    span: Range {
                        start: Position::new(line, start_col),
                        end: Position::new(line, col),
                    },
                });
            }
        }
    }
    let eof = Position::new(line, col);
    tokens.push(Token {
        kind: TokenKind::Eof,
        span: Range { start: eof, end: eof },
    });
    (tokens, diagnostics)
}
