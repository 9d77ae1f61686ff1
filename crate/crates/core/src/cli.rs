//! The `rec` command: run decks, evaluate one-liners, disassemble, REPL and
//! corpus checking.
//!
//! Exit codes: 0 when every unit ends TRUE or FALSE, 1 when a unit stops on
//! a run-time error, 2 on card/lex/compile errors, 3 on usage errors.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::compiler::{compile, dump};
use crate::deck::{read_deck, split_units, Deck, DeckError, ProgramUnit};
use crate::errors::RecError;
use crate::listing::{render_listing, UnitOutcome};
use crate::vm::{self, format_trace, Config, TraceStep, DEFAULT_MAX_DEPTH, DEFAULT_MAX_STEPS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUN_ERROR: i32 = 1;
pub const EXIT_COMPILE_ERROR: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rec", about = "REC/A job-deck interpreter")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every unit of a job deck and print the listing.
    Run {
        deck: PathBuf,
        /// Write the listing here instead of stdout.
        #[arg(long)]
        listing: Option<PathBuf>,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Compile and run one program given on the command line.
    Eval {
        expr: String,
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Disassemble a program source file (or every unit of a `.job` deck).
    Dump { path: PathBuf },
    /// Interactive session; each line is a separate unit.
    Repl {
        #[command(flatten)]
        flags: RunFlags,
    },
    /// Run every `*.job` deck in a directory against `golden/*.lst`.
    Corpus {
        #[arg(default_value = "corpus")]
        dir: PathBuf,
        /// Rewrite the golden listings instead of comparing.
        #[arg(long)]
        bless: bool,
    },
}

#[derive(Debug, Clone, Args)]
pub struct RunFlags {
    /// Data values replacing the deck's data cards (comma or space separated).
    #[arg(long)]
    pub input: Option<String>,
    /// Print an instruction trace to stderr.
    #[arg(long)]
    pub trace: bool,
    /// Single-precision arithmetic.
    #[arg(long = "f32")]
    pub f32: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
    pub steps: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_DEPTH)]
    pub depth: usize,
}

impl RunFlags {
    pub fn config(&self) -> Result<Config, String> {
        if self.steps == 0 {
            return Err("--steps must be positive".into());
        }
        if self.depth == 0 {
            return Err("--depth must be positive".into());
        }
        Ok(Config {
            max_steps: self.steps,
            max_depth: self.depth,
            single_precision: self.f32,
        })
    }

    pub fn input_values(&self) -> Result<Option<Vec<f64>>, String> {
        self.input.as_deref().map(parse_input).transpose()
    }
}

pub fn parse_input(text: &str) -> Result<Vec<f64>, String> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad input number {s:?}"))
        })
        .collect()
}

/// Everything produced by running one deck.
#[derive(Debug, Clone)]
pub struct JobReport {
    pub deck: Deck,
    pub units: Vec<ProgramUnit>,
    pub outcomes: Vec<UnitOutcome>,
    /// Per-unit traces; empty unless requested.
    pub traces: Vec<Vec<TraceStep>>,
    pub listing: String,
}

impl JobReport {
    pub fn exit_code(&self) -> i32 {
        let rejected = self
            .outcomes
            .iter()
            .any(|o| matches!(o, UnitOutcome::Rejected(_)));
        let failed = self.outcomes.iter().any(|o| o.error().is_some());
        if rejected {
            EXIT_COMPILE_ERROR
        } else if failed {
            EXIT_RUN_ERROR
        } else {
            EXIT_OK
        }
    }
}

/// Compiles and runs one unit, with error positions in deck coordinates.
pub fn run_unit(
    unit: &ProgramUnit,
    config: Config,
    input: &[f64],
    want_trace: bool,
) -> (UnitOutcome, Vec<TraceStep>) {
    let program = match compile(&unit.source) {
        Ok(p) => p,
        Err(e) => {
            let err = RecError::from(e).map_position(|p| unit.deck_position(p));
            return (UnitOutcome::Rejected(err), Vec::new());
        }
    };
    let (mut result, log) = if want_trace {
        vm::trace(&program, input, config)
    } else {
        (vm::run(&program, input, config), Vec::new())
    };
    if let vm::Status::Error(e) = &mut result.status {
        *e = e.clone().map_position(|p| unit.deck_position(p));
    }
    (UnitOutcome::Ran(result), log)
}

pub fn run_job(
    text: &str,
    config: Config,
    input_override: Option<&[f64]>,
    want_trace: bool,
) -> Result<JobReport, DeckError> {
    let deck = read_deck(text)?;
    let units = split_units(&deck.cards)?;
    let mut outcomes = Vec::with_capacity(units.len());
    let mut traces = Vec::with_capacity(units.len());
    for unit in &units {
        let input = input_override.unwrap_or(&unit.data);
        let (outcome, log) = run_unit(unit, config, input, want_trace);
        outcomes.push(outcome);
        traces.push(log);
    }
    let placed: Vec<(usize, UnitOutcome)> = units
        .iter()
        .map(|u| *u.origin.end())
        .zip(outcomes.iter().cloned())
        .collect();
    let listing = render_listing(&deck.cards, &placed);
    Ok(JobReport {
        deck,
        units,
        outcomes,
        traces,
        listing,
    })
}

/// Entry point. `args[0]` is the program name.
pub fn main(
    args: &[String],
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    EXIT_USAGE
                }
            };
        }
    };
    match cli.command {
        Command::Run {
            deck,
            listing,
            flags,
        } => cmd_run(&deck, listing.as_deref(), &flags, stdout, stderr),
        Command::Eval { expr, flags } => cmd_eval(&expr, &flags, stdout, stderr),
        Command::Dump { path } => cmd_dump(&path, stdout, stderr),
        Command::Repl { flags } => match flags.config() {
            Ok(config) => {
                let input = match flags.input_values() {
                    Ok(v) => v.unwrap_or_default(),
                    Err(msg) => return usage(stderr, &msg),
                };
                repl(config, flags.trace, input, stdin, stdout, stderr)
            }
            Err(msg) => usage(stderr, &msg),
        },
        Command::Corpus { dir, bless } => cmd_corpus(&dir, bless, stdout, stderr),
    }
}

fn usage(stderr: &mut dyn Write, msg: &str) -> i32 {
    let _ = writeln!(stderr, "rec: {msg}");
    let _ = writeln!(stderr, "usage: rec <run|eval|dump|repl|corpus> [options]  (see rec --help)");
    EXIT_USAGE
}

fn read_file(path: &Path, stderr: &mut dyn Write) -> Result<String, i32> {
    fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(stderr, "rec: cannot read {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn cmd_run(
    path: &Path,
    listing_path: Option<&Path>,
    flags: &RunFlags,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let (config, input) = match flags.config().and_then(|c| Ok((c, flags.input_values()?))) {
        Ok(v) => v,
        Err(msg) => return usage(stderr, &msg),
    };
    let text = match read_file(path, stderr) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let report = match run_job(&text, config, input.as_deref(), flags.trace) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "{}", RecError::from(e));
            return EXIT_COMPILE_ERROR;
        }
    };
    if flags.trace {
        for (i, log) in report.traces.iter().enumerate() {
            let _ = writeln!(stderr, "; TRACE UNIT {}", i + 1);
            let _ = write!(stderr, "{}", format_trace(log));
        }
    }
    match listing_path {
        Some(p) => {
            if let Err(e) = fs::write(p, &report.listing) {
                let _ = writeln!(stderr, "rec: cannot write {}: {e}", p.display());
                return EXIT_USAGE;
            }
        }
        None => {
            let _ = stdout.write_all(report.listing.as_bytes());
        }
    }
    report.exit_code()
}

fn cmd_eval(expr: &str, flags: &RunFlags, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let (config, input) = match flags.config().and_then(|c| Ok((c, flags.input_values()?))) {
        Ok(v) => v,
        Err(msg) => return usage(stderr, &msg),
    };
    let program = match compile(expr) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(stderr, "{}", RecError::from(e));
            return EXIT_COMPILE_ERROR;
        }
    };
    let input = input.unwrap_or_default();
    let (result, log) = if flags.trace {
        vm::trace(&program, &input, config)
    } else {
        (vm::run(&program, &input, config), Vec::new())
    };
    if flags.trace {
        let _ = write!(stderr, "{}", format_trace(&log));
    }
    for line in &result.output {
        let _ = writeln!(stdout, "{line}");
    }
    match result.error() {
        Some(e) => {
            let _ = writeln!(stderr, "{e}");
            EXIT_RUN_ERROR
        }
        None => EXIT_OK,
    }
}

fn cmd_dump(path: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let text = match read_file(path, stderr) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let is_deck = path.extension().is_some_and(|e| e == "job");
    if !is_deck {
        return match compile(&text) {
            Ok(p) => {
                let _ = write!(stdout, "{}", dump(&p));
                EXIT_OK
            }
            Err(e) => {
                let _ = writeln!(stderr, "{}", RecError::from(e));
                EXIT_COMPILE_ERROR
            }
        };
    }
    let units = match read_deck(&text).and_then(|d| split_units(&d.cards)) {
        Ok(u) => u,
        Err(e) => {
            let _ = writeln!(stderr, "{}", RecError::from(e));
            return EXIT_COMPILE_ERROR;
        }
    };
    let mut code = EXIT_OK;
    for (i, unit) in units.iter().enumerate() {
        let _ = writeln!(stdout, "; UNIT {} CARD {}", i + 1, unit.start_card());
        match compile(&unit.source) {
            Ok(p) => {
                let _ = write!(stdout, "{}", dump(&p));
            }
            Err(e) => {
                let err = RecError::from(e).map_position(|p| unit.deck_position(p));
                let _ = writeln!(stdout, "{err}");
                code = EXIT_COMPILE_ERROR;
            }
        }
    }
    code
}

fn cmd_corpus(dir: &Path, bless: bool, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let mut decks: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "job"))
            .collect(),
        Err(e) => {
            let _ = writeln!(stderr, "rec: cannot read {}: {e}", dir.display());
            return EXIT_USAGE;
        }
    };
    decks.sort();
    let mut all_pass = true;
    for deck in decks {
        let name = deck.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        let golden = dir.join("golden").join(format!("{name}.lst"));
        let text = match read_file(&deck, stderr) {
            Ok(t) => t,
            Err(code) => return code,
        };
        let listing = match run_job(&text, Config::default(), None, false) {
            Ok(r) => r.listing,
            Err(e) => {
                let _ = writeln!(stdout, "FAIL {name}: {}", RecError::from(e));
                all_pass = false;
                continue;
            }
        };
        if bless {
            if let Err(e) = fs::write(&golden, &listing) {
                let _ = writeln!(stderr, "rec: cannot write {}: {e}", golden.display());
                return EXIT_USAGE;
            }
            let _ = writeln!(stdout, "BLESSED {name}");
            continue;
        }
        match fs::read_to_string(&golden) {
            Ok(expected) if expected == listing => {
                let _ = writeln!(stdout, "PASS {name}");
            }
            Ok(_) => {
                let _ = writeln!(stdout, "FAIL {name}: listing differs from {}", golden.display());
                all_pass = false;
            }
            Err(_) => {
                let _ = writeln!(stdout, "MISSING {name}: no {}", golden.display());
                all_pass = false;
            }
        }
    }
    if all_pass {
        EXIT_OK
    } else {
        EXIT_RUN_ERROR
    }
}

/// Line-at-a-time session. Meta-commands: `:quit`, `:trace on|off`,
/// `:input n ...`. Definitions do not carry over between lines.
pub fn repl(
    config: Config,
    mut tracing: bool,
    mut input: Vec<f64>,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32 {
    let mut line = String::new();
    loop {
        let _ = write!(stdout, "REC> ");
        let _ = stdout.flush();
        line.clear();
        match stdin.read_line(&mut line) {
            Ok(0) | Err(_) => break,
            Ok(_) => {}
        }
        let entry = line.trim();
        if entry.is_empty() {
            continue;
        }
        if let Some(meta) = entry.strip_prefix(':') {
            let mut words = meta.split_whitespace();
            match (words.next(), words.next()) {
                (Some("quit"), _) => break,
                (Some("trace"), Some("on")) => tracing = true,
                (Some("trace"), Some("off")) => tracing = false,
                (Some("input"), _) => {
                    let rest = meta.trim_start().strip_prefix("input").unwrap_or("");
                    match parse_input(rest) {
                        Ok(values) => input = values,
                        Err(msg) => {
                            let _ = writeln!(stderr, "rec: {msg}");
                        }
                    }
                }
                _ => {
                    let _ = writeln!(stderr, "rec: unknown command :{meta}");
                }
            }
            continue;
        }
        let program = match compile(entry) {
            Ok(p) => p,
            Err(e) => {
                let _ = writeln!(stdout, "{}", RecError::from(e));
                continue;
            }
        };
        let (result, log) = if tracing {
            vm::trace(&program, &input, config)
        } else {
            (vm::run(&program, &input, config), Vec::new())
        };
        if tracing {
            let _ = write!(stdout, "{}", format_trace(&log));
        }
        for out in &result.output {
            let _ = writeln!(stdout, "{out}");
        }
        if let Some(e) = result.error() {
            let _ = writeln!(stdout, "{e}");
        }
    }
    let _ = writeln!(stdout);
    EXIT_OK
}
