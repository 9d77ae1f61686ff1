//! Line-printer output: E-notation number fields and the job listing.

use thiserror::Error;

use crate::deck::Card;
use crate::errors::RecError;
use crate::vm::RunResult;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("cannot format non-finite value {0}")]
pub struct NonFinite(pub f64);

/// Formats `value` as a 12-character field `sd.dddddEsxx`, where both sign
/// positions are blank for plus. The mantissa carries six significant
/// digits, rounded half to even. Exponents beyond two digits widen the field.
pub fn format_e(value: f64) -> Result<String, NonFinite> {
    if !value.is_finite() {
        return Err(NonFinite(value));
    }
    if value == 0.0 {
        return Ok(" 0.00000E 00".to_string());
    }
    // std renders the exact binary value and rounds ties to even
    let raw = format!("{:.5e}", value.abs());
    let (mantissa, exponent) = raw.split_once('e').expect("exponent marker");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let sign = if value < 0.0 { '-' } else { ' ' };
    let exp_sign = if exponent < 0 { '-' } else { ' ' };
    Ok(format!("{sign}{mantissa}E{exp_sign}{:02}", exponent.abs()))
}

/// Parses a field produced by [`format_e`] (or the historic `E 00` style)
/// back into a number.
pub fn parse_e(field: &str) -> Option<f64> {
    let field = field.trim();
    let (mantissa, exponent) = field.split_once(['E', 'e'])?;
    let exponent = exponent.trim();
    let exponent: i32 = match exponent.strip_prefix('-') {
        Some(digits) => -digits.trim().parse::<i32>().ok()?,
        None => exponent.trim_start_matches('+').trim().parse().ok()?,
    };
    let mantissa: f64 = mantissa.trim().parse().ok()?;
    format!("{mantissa}e{exponent}").parse().ok()
}

/// Extracts every two-digit-exponent E-field from an output line, in order.
pub fn parse_fields(line: &str) -> Vec<f64> {
    let b = line.as_bytes();
    let mut values = Vec::new();
    let mut i = 0;
    while i + 11 <= b.len() {
        // d.dddddEsdd
        let w = &b[i..i + 11];
        let is_field = w[0].is_ascii_digit()
            && w[1] == b'.'
            && w[2..7].iter().all(u8::is_ascii_digit)
            && w[7] == b'E'
            && matches!(w[8], b' ' | b'-' | b'+')
            && w[9..11].iter().all(u8::is_ascii_digit);
        match is_field.then(|| parse_e(&line[i..i + 11])).flatten() {
            Some(v) => {
                let negative = i > 0 && b[i - 1] == b'-';
                values.push(if negative { -v } else { v });
                i += 11;
            }
            None => i += 1,
        }
    }
    values
}

/// Outcome of one program unit, as the listing reports it.
#[derive(Debug, Clone, PartialEq)]
pub enum UnitOutcome {
    Ran(RunResult),
    /// Rejected before running (lex or compile phase).
    Rejected(RecError),
}

impl UnitOutcome {
    pub fn status_label(&self) -> String {
        match self {
            UnitOutcome::Ran(r) => r.status.label(),
            UnitOutcome::Rejected(e) => format!("ERROR {}", e.code),
        }
    }

    pub fn error(&self) -> Option<&RecError> {
        match self {
            UnitOutcome::Ran(r) => r.error(),
            UnitOutcome::Rejected(e) => Some(e),
        }
    }

    pub fn output(&self) -> &[String] {
        match self {
            UnitOutcome::Ran(r) => &r.output,
            UnitOutcome::Rejected(_) => &[],
        }
    }
}

/// Echoes the deck and, after each unit's last card, its output lines,
/// any error line and a `STATUS` footer. `units` pairs each unit's last
/// card index (1-based) with its outcome, in deck order.
pub fn render_listing(cards: &[Card], units: &[(usize, UnitOutcome)]) -> String {
    let mut out = String::new();
    let mut pending = units.iter().peekable();
    for card in cards {
        out.push_str(card.text.trim_end_matches('\r'));
        out.push('\n');
        while let Some((_, outcome)) = pending.next_if(|(last, _)| *last == card.index) {
            for line in outcome.output() {
                out.push_str(line);
                out.push('\n');
            }
            if let Some(e) = outcome.error() {
                out.push_str(&e.listing_line());
                out.push('\n');
            }
            out.push_str("STATUS ");
            out.push_str(&outcome.status_label());
            out.push('\n');
        }
    }
    out
}
