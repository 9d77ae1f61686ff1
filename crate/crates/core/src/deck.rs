//! Job-deck reader: card classification and program-unit splitting.
//!
//! A deck is a text file with one 80-column card per line. Cards starting
//! with `*` open a program unit (except `*LOCAL` / `*FILES` control cards);
//! following cards carry more program text until the unit's data cards
//! (`'/number'`) begin.

use std::ops::RangeInclusive;

use thiserror::Error;

use crate::errors::{ErrorCode, Phase, Position, RecError};
use crate::syntax::parse_constant;

pub const CARD_COLUMNS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CardKind {
    Jcl,
    Control,
    Comment,
    UnitStart,
    ProgramText,
    Data,
    Blank,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Card {
    /// 1-based ordinal in the deck.
    pub index: usize,
    /// Verbatim line, without its line terminator.
    pub text: String,
    pub kind: CardKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeckError {
    #[error("card {line} is longer than {CARD_COLUMNS} columns")]
    CardTooLong { line: usize },
    #[error("data card {0} precedes every program unit")]
    DataBeforeUnit(usize),
    #[error("program text on card {0} does not belong to any unit")]
    StrayProgramText(usize),
    #[error("malformed data card {0}")]
    BadDataCard(usize),
}

impl DeckError {
    pub fn code(&self) -> ErrorCode {
        match self {
            DeckError::BadDataCard(_) => ErrorCode::E07,
            _ => ErrorCode::E12,
        }
    }

    pub fn card(&self) -> usize {
        match *self {
            DeckError::CardTooLong { line } => line,
            DeckError::DataBeforeUnit(c) | DeckError::StrayProgramText(c) | DeckError::BadDataCard(c) => c,
        }
    }
}

impl From<DeckError> for RecError {
    fn from(e: DeckError) -> Self {
        RecError::new(e.code(), Some(Position::new(e.card(), 1)), Phase::Lex)
    }
}

pub fn classify(text: &str) -> CardKind {
    let text = text.trim_end_matches('\r');
    if text.trim().is_empty() {
        return CardKind::Blank;
    }
    if text.starts_with("//") {
        return CardKind::Jcl;
    }
    let mut chars = text.chars();
    let first = chars.next();
    if matches!(first, Some('C' | 'c')) && matches!(chars.next(), None | Some(' ')) {
        return CardKind::Comment;
    }
    if let Some(rest) = text.strip_prefix('*') {
        let keyword = rest.trim_start().to_ascii_uppercase();
        return if keyword.starts_with("LOCAL") || keyword.starts_with("FILES") {
            CardKind::Control
        } else {
            CardKind::UnitStart
        };
    }
    if text.trim_start().starts_with("'/") {
        return CardKind::Data;
    }
    CardKind::ProgramText
}

/// The cards of a deck plus whether the file ended with a line terminator.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Deck {
    pub cards: Vec<Card>,
    pub final_newline: bool,
}

impl Deck {
    /// Reproduces the input text byte for byte.
    pub fn echo(&self) -> String {
        let mut out = self
            .cards
            .iter()
            .map(|c| c.text.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        if self.final_newline {
            out.push('\n');
        }
        out
    }
}

pub fn read_deck(text: &str) -> Result<Deck, DeckError> {
    let final_newline = text.ends_with('\n');
    let body = text.strip_suffix('\n').unwrap_or(text);
    if text.is_empty() {
        return Ok(Deck::default());
    }
    let mut cards = Vec::new();
    for (i, line) in body.split('\n').enumerate() {
        let index = i + 1;
        if line.trim_end_matches('\r').chars().count() > CARD_COLUMNS {
            return Err(DeckError::CardTooLong { line: index });
        }
        cards.push(Card {
            index,
            text: line.to_string(),
            kind: classify(line),
        });
    }
    Ok(Deck {
        cards,
        final_newline,
    })
}

/// One `*`-delimited program with its data.
#[derive(Debug, Clone, PartialEq)]
pub struct ProgramUnit {
    pub header_comments: Vec<Card>,
    /// Program text; one line per contributing card.
    pub source: String,
    pub data: Vec<f64>,
    /// Cards that belong to this unit, headers and trailing cards included.
    pub origin: RangeInclusive<usize>,
    /// Index of the unit's last program or data card.
    pub last_card: usize,
    /// For each source line: the card it came from and that card's column
    /// offset (1 for the `*` card, 0 otherwise).
    lines: Vec<(usize, usize)>,
}

impl ProgramUnit {
    /// Maps a source-relative (line, column) position to deck coordinates.
    pub fn deck_position(&self, pos: Position) -> Position {
        match self.lines.get(pos.card.wrapping_sub(1)) {
            Some(&(card, offset)) => Position::new(card, pos.column + offset),
            None => pos,
        }
    }

    /// The card that opened the unit.
    pub fn start_card(&self) -> usize {
        self.lines[0].0
    }
}

fn parse_data_card(card: &Card) -> Result<f64, DeckError> {
    let bad = || DeckError::BadDataCard(card.index);
    let text = card.text.trim_end_matches('\r').trim();
    let body = text.strip_prefix("'/").ok_or_else(bad)?;
    let (number, rest) = body.split_once('\'').ok_or_else(bad)?;
    if !rest.trim().is_empty() {
        return Err(bad());
    }
    parse_constant(number).ok_or_else(bad)
}

struct Partial {
    lines: Vec<(usize, usize)>,
    source: Vec<String>,
    data: Vec<f64>,
    last_card: usize,
}

pub fn split_units(cards: &[Card]) -> Result<Vec<ProgramUnit>, DeckError> {
    let mut partials: Vec<Partial> = Vec::new();
    for card in cards {
        let text = card.text.trim_end_matches('\r');
        match card.kind {
            CardKind::UnitStart => partials.push(Partial {
                lines: vec![(card.index, 1)],
                source: vec![text[1..].to_string()],
                data: Vec::new(),
                last_card: card.index,
            }),
            CardKind::ProgramText => match partials.last_mut() {
                Some(p) if p.data.is_empty() => {
                    p.lines.push((card.index, 0));
                    p.source.push(text.to_string());
                    p.last_card = card.index;
                }
                _ => return Err(DeckError::StrayProgramText(card.index)),
            },
            CardKind::Data => {
                let value = parse_data_card(card)?;
                let p = partials
                    .last_mut()
                    .ok_or(DeckError::DataBeforeUnit(card.index))?;
                p.data.push(value);
                p.last_card = card.index;
            }
            CardKind::Jcl | CardKind::Control | CardKind::Comment | CardKind::Blank => {}
        }
    }

    let deck_end = cards.last().map_or(0, |c| c.index);
    let mut units = Vec::with_capacity(partials.len());
    let mut range_start = match partials.first() {
        Some(first) => {
            let opener = first.lines[0].0;
            cards
                .iter()
                .take_while(|c| c.index < opener)
                .filter(|c| matches!(c.kind, CardKind::Jcl | CardKind::Control))
                .map(|c| c.index + 1)
                .last()
                .unwrap_or(1)
        }
        None => 1,
    };
    let count = partials.len();
    for (i, p) in partials.into_iter().enumerate() {
        let opener = p.lines[0].0;
        let end = if i + 1 == count { deck_end } else { p.last_card };
        let header_comments = cards
            .iter()
            .filter(|c| c.index >= range_start && c.index < opener)
            .filter(|c| matches!(c.kind, CardKind::Comment | CardKind::Jcl | CardKind::Control))
            .cloned()
            .collect();
        units.push(ProgramUnit {
            header_comments,
            source: p.source.join("\n"),
            data: p.data,
            origin: range_start..=end,
            last_card: p.last_card,
            lines: p.lines,
        });
        range_start = end + 1;
    }
    Ok(units)
}
