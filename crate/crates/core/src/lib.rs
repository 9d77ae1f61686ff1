//! REC/A: a predicate-driven stack language run from punched-card job decks.
//!
//! The pipeline is [`deck`] (cards and program units) → [`syntax`] (tokens)
//! → [`compiler`] (bytecode with precomputed failure jumps) → [`vm`]
//! (execution) → [`listing`] (printer-style report). [`errors`] holds the
//! shared error catalog and [`cli`] the `rec` command.

pub mod cli;
pub mod compiler;
pub mod deck;
pub mod errors;
pub mod listing;
pub mod syntax;
pub mod vm;

pub use compiler::{compile, dump, CompiledProgram};
pub use deck::{read_deck, split_units, Card, CardKind, ProgramUnit};
pub use errors::{catalog, ErrorCode, Position, RecError};
pub use listing::{format_e, parse_e};
pub use syntax::tokenize;
pub use vm::{run, trace, Config, RunResult, Status};
