//! The closed catalog of REC error codes (the RECER table).
//!
//! Every failure the system reports, whether it comes from reading cards,
//! lexing, compiling or running, is mapped onto one of the twelve codes
//! below. Module-level error enums convert into [`RecError`] so callers can
//! render them uniformly in a listing.

use std::fmt;

/// Where in the job an error was detected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Lex,
    Compile,
    Run,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Lex => "LEX",
            Phase::Compile => "COMPILE",
            Phase::Run => "RUN",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ErrorCode {
    E01,
    E02,
    E03,
    E04,
    E05,
    E06,
    E07,
    E08,
    E09,
    E10,
    E11,
    E12,
}

impl ErrorCode {
    pub const ALL: [ErrorCode; 12] = [
        ErrorCode::E01,
        ErrorCode::E02,
        ErrorCode::E03,
        ErrorCode::E04,
        ErrorCode::E05,
        ErrorCode::E06,
        ErrorCode::E07,
        ErrorCode::E08,
        ErrorCode::E09,
        ErrorCode::E10,
        ErrorCode::E11,
        ErrorCode::E12,
    ];

    pub fn message(self) -> &'static str {
        match self {
            ErrorCode::E01 => "STACK UNDERFLOW",
            ErrorCode::E02 => "INPUT EXHAUSTED",
            ErrorCode::E03 => "UNDEFINED SUBROUTINE",
            ErrorCode::E04 => "DIVISION BY ZERO",
            ErrorCode::E05 => "SQRT OF NEGATIVE",
            ErrorCode::E06 => "UNBALANCED PARENTHESES",
            ErrorCode::E07 => "BAD CONSTANT",
            ErrorCode::E08 => "UNKNOWN OPERATOR",
            ErrorCode::E09 => "RECURSION DEPTH EXCEEDED",
            ErrorCode::E10 => "UNTERMINATED QUOTE",
            ErrorCode::E11 => "STEP BUDGET EXCEEDED",
            ErrorCode::E12 => "CARD FORMAT",
        }
    }

    /// The phase in which this code is normally raised.
    pub fn phase(self) -> Phase {
        match self {
            ErrorCode::E01
            | ErrorCode::E02
            | ErrorCode::E04
            | ErrorCode::E05
            | ErrorCode::E09
            | ErrorCode::E11 => Phase::Run,
            ErrorCode::E03 | ErrorCode::E06 => Phase::Compile,
            ErrorCode::E07 | ErrorCode::E08 | ErrorCode::E10 | ErrorCode::E12 => Phase::Lex,
        }
    }

    pub fn number(self) -> u8 {
        ErrorCode::ALL.iter().position(|&c| c == self).unwrap() as u8 + 1
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E{:02}", self.number())
    }
}

/// One catalog row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogEntry {
    pub code: ErrorCode,
    pub message: &'static str,
    pub phase: Phase,
}

pub fn catalog() -> Vec<CatalogEntry> {
    ErrorCode::ALL
        .iter()
        .map(|&code| CatalogEntry {
            code,
            message: code.message(),
            phase: code.phase(),
        })
        .collect()
}

/// A (card, column) location. Both are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Position {
    pub card: usize,
    pub column: usize,
}

impl Position {
    pub fn new(card: usize, column: usize) -> Self {
        Position { card, column }
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CARD {} COL {}", self.card, self.column)
    }
}

/// A catalogued error with its location.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecError {
    pub code: ErrorCode,
    pub position: Option<Position>,
    pub phase: Phase,
}

impl RecError {
    pub fn new(code: ErrorCode, position: Option<Position>, phase: Phase) -> Self {
        RecError {
            code,
            position,
            phase,
        }
    }

    pub fn message(&self) -> &'static str {
        self.code.message()
    }

    /// Listing form: `*** REC ERROR Enn MESSAGE (CARD c COL k)`.
    pub fn listing_line(&self) -> String {
        match self.position {
            Some(pos) => format!("*** REC ERROR {} {} ({})", self.code, self.message(), pos),
            None => format!("*** REC ERROR {} {}", self.code, self.message()),
        }
    }

    /// Moves the position through a mapping, e.g. from unit-relative lines to
    /// deck card numbers.
    pub fn map_position(mut self, f: impl FnOnce(Position) -> Position) -> Self {
        self.position = self.position.map(f);
        self
    }
}

impl fmt::Display for RecError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.listing_line())
    }
}

impl std::error::Error for RecError {}
