//! Lexer for REC program text.
//!
//! The apostrophe carries three meanings depending on the character after it:
//! `'/` opens a numeric constant closed by `'`, `''` opens a text literal
//! closed by the next `'`, and `'x` (a letter) is a one-letter subroutine
//! call with no closing quote. Letters outside quotes are case-insensitive.

use std::fmt;

use thiserror::Error;

use crate::errors::{ErrorCode, Phase, Position, RecError};

/// Primitive operators. Aliases (`D`, `J`, `&`) are folded at lex time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Input,
    Output,
    Newline,
    Dup,
    Drop,
    Add,
    Sub,
    Mul,
    Div,
    Sine,
    Exp,
    Sqrt,
    Store(u8),
    Fetch(u8),
    Zero,
    Negative,
}

impl Op {
    /// Canonical spelling.
    pub fn symbol(self) -> String {
        match self {
            Op::Input => "I".into(),
            Op::Output => "O".into(),
            Op::Newline => "X".into(),
            Op::Dup => "P".into(),
            Op::Drop => "L".into(),
            Op::Add => "+".into(),
            Op::Sub => "-".into(),
            Op::Mul => "*".into(),
            Op::Div => "/".into(),
            Op::Sine => "S".into(),
            Op::Exp => "E".into(),
            Op::Sqrt => "Q".into(),
            Op::Store(d) => format!("S{d}"),
            Op::Fetch(d) => format!("F{d}"),
            Op::Zero => "0".into(),
            Op::Negative => "N".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    LParen,
    RParen,
    Comma,
    Period,
    Const(f64),
    Text(String),
    Call(char),
    Counter(u32),
    Op(Op),
}

impl TokenKind {
    /// Canonical lexeme; re-lexing it yields the same kind.
    pub fn lexeme(&self) -> String {
        match self {
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Period => ".".into(),
            TokenKind::Const(c) => format!("'/{c:?}'"),
            TokenKind::Text(t) => format!("''{t}'"),
            TokenKind::Call(c) => format!("'{c}"),
            TokenKind::Counter(n) => format!("${n}$"),
            TokenKind::Op(op) => op.symbol(),
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexeme())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    /// Line within the source (as `card`) and column, both 1-based.
    pub position: Position,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated quote at {0}")]
    UnterminatedQuote(Position),
    #[error("bad constant at {0}")]
    BadConstant(Position),
    #[error("bad counter at {0}")]
    BadCounter(Position),
    #[error("unknown operator at {0}")]
    UnknownOperator(Position),
}

impl LexError {
    pub fn code(&self) -> ErrorCode {
        match self {
            LexError::UnterminatedQuote(_) => ErrorCode::E10,
            LexError::BadConstant(_) | LexError::BadCounter(_) => ErrorCode::E07,
            LexError::UnknownOperator(_) => ErrorCode::E08,
        }
    }

    pub fn position(&self) -> Position {
        match self {
            LexError::UnterminatedQuote(p)
            | LexError::BadConstant(p)
            | LexError::BadCounter(p)
            | LexError::UnknownOperator(p) => *p,
        }
    }
}

impl From<LexError> for RecError {
    fn from(e: LexError) -> Self {
        RecError::new(e.code(), Some(e.position()), Phase::Lex)
    }
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(source: &'a str) -> Self {
        Cursor {
            chars: source.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn position(&self) -> Position {
        Position::new(self.line, self.column)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    /// Consumes up to the next `'` on the current line, returning the
    /// enclosed text. The closing quote is consumed.
    fn until_quote(&mut self, start: Position) -> Result<String, LexError> {
        let mut text = String::new();
        loop {
            match self.peek() {
                None | Some('\n') => return Err(LexError::UnterminatedQuote(start)),
                Some('\'') => {
                    self.bump();
                    return Ok(text);
                }
                Some(c) => {
                    text.push(c);
                    self.bump();
                }
            }
        }
    }
}

pub(crate) fn parse_constant(body: &str) -> Option<f64> {
    let cleaned: String = body.chars().filter(|c| !c.is_whitespace()).collect();
    if cleaned.is_empty()
        || !cleaned
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E'))
    {
        return None;
    }
    cleaned.parse::<f64>().ok().filter(|v| v.is_finite())
}

pub fn tokenize(source: &str) -> Result<Vec<Token>, LexError> {
    let mut cur = Cursor::new(source);
    let mut tokens = Vec::new();

    while let Some(c) = cur.peek() {
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        let position = cur.position();
        cur.bump();
        let kind = match c.to_ascii_uppercase() {
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            '.' => TokenKind::Period,
            '\'' => match cur.peek() {
                Some('/') => {
                    cur.bump();
                    let body = cur.until_quote(position)?;
                    let value = parse_constant(&body).ok_or(LexError::BadConstant(position))?;
                    TokenKind::Const(value)
                }
                Some('\'') => {
                    cur.bump();
                    TokenKind::Text(cur.until_quote(position)?)
                }
                Some(l) if l.is_ascii_alphabetic() => {
                    cur.bump();
                    TokenKind::Call(l.to_ascii_uppercase())
                }
                _ => return Err(LexError::UnterminatedQuote(position)),
            },
            '$' => {
                let mut digits = String::new();
                while let Some(d) = cur.peek().filter(char::is_ascii_digit) {
                    digits.push(d);
                    cur.bump();
                }
                if cur.peek() != Some('$') {
                    return Err(LexError::BadCounter(position));
                }
                cur.bump();
                match digits.parse::<u32>() {
                    Ok(n) if n >= 1 => TokenKind::Counter(n),
                    _ => return Err(LexError::BadCounter(position)),
                }
            }
            'S' | 'F' => {
                let register = cur.peek().and_then(|d| d.to_digit(10));
                match (c.to_ascii_uppercase(), register) {
                    (letter, Some(d)) => {
                        cur.bump();
                        let d = d as u8;
                        TokenKind::Op(if letter == 'S' {
                            Op::Store(d)
                        } else {
                            Op::Fetch(d)
                        })
                    }
                    ('S', None) => TokenKind::Op(Op::Sine),
                    _ => return Err(LexError::UnknownOperator(position)),
                }
            }
            'I' => TokenKind::Op(Op::Input),
            'O' => TokenKind::Op(Op::Output),
            'X' => TokenKind::Op(Op::Newline),
            'P' | 'D' => TokenKind::Op(Op::Dup),
            'L' | 'J' => TokenKind::Op(Op::Drop),
            '+' | '&' => TokenKind::Op(Op::Add),
            '-' => TokenKind::Op(Op::Sub),
            '*' => TokenKind::Op(Op::Mul),
            '/' => TokenKind::Op(Op::Div),
            'E' => TokenKind::Op(Op::Exp),
            'Q' => TokenKind::Op(Op::Sqrt),
            'N' => TokenKind::Op(Op::Negative),
            '0' => TokenKind::Op(Op::Zero),
            _ => return Err(LexError::UnknownOperator(position)),
        };
        tokens.push(Token { kind, position });
    }
    Ok(tokens)
}

/// Re-prints a token list in canonical spelling, one space between tokens.
pub fn canonical(tokens: &[TokenKind]) -> String {
    tokens
        .iter()
        .map(TokenKind::lexeme)
        .collect::<Vec<_>>()
        .join(" ")
}
