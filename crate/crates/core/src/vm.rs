//! Predicate-driven stack machine.
//!
//! Every instruction either succeeds (control continues at the next
//! instruction) or fails (control moves to its precomputed `fail_target`).
//! Blocks and subroutine calls push a frame holding both continuations; the
//! block's `EXIT_TRUE` resumes the success one and its `EXIT_FALSE` the
//! failure one.

use std::collections::VecDeque;
use std::fmt::Write as _;

use crate::compiler::{CompiledProgram, Opcode};
use crate::errors::{ErrorCode, Phase, RecError};
use crate::listing::format_e;
use crate::syntax::Op;

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;
pub const DEFAULT_MAX_DEPTH: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    /// Executed-instruction budget; exceeding it raises E11.
    pub max_steps: u64,
    /// Maximum number of live block/call frames, the main block included.
    pub max_depth: usize,
    /// Round every produced value to single precision.
    pub single_precision: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            max_steps: DEFAULT_MAX_STEPS,
            max_depth: DEFAULT_MAX_DEPTH,
            single_precision: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    True,
    False,
    Error(RecError),
}

impl Status {
    pub fn is_error(&self) -> bool {
        matches!(self, Status::Error(_))
    }

    pub fn label(&self) -> String {
        match self {
            Status::True => "TRUE".into(),
            Status::False => "FALSE".into(),
            Status::Error(e) => format!("ERROR {}", e.code),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub status: Status,
    pub output: Vec<String>,
    pub final_stack: Vec<f64>,
    pub steps: u64,
}

impl RunResult {
    pub fn error(&self) -> Option<&RecError> {
        match &self.status {
            Status::Error(e) => Some(e),
            _ => None,
        }
    }
}

/// One executed instruction, recorded after it completes.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub step: u64,
    pub index: usize,
    pub opcode: &'static str,
    pub depth: usize,
    pub top: Option<f64>,
}

#[derive(Debug, Clone, Copy)]
struct Frame {
    return_pc: usize,
    fail_pc: usize,
}

/// Mutable machine state for one run.
#[derive(Debug)]
pub struct VmState<'p> {
    program: &'p CompiledProgram,
    config: Config,
    pub stack: Vec<f64>,
    pub registers: [f64; 10],
    frames: Vec<Frame>,
    pub counters: Vec<u32>,
    pub input: VecDeque<f64>,
    pub line_buffer: String,
    pub output: Vec<String>,
    pub steps: u64,
}

enum Flow {
    Next(bool),
    Jump(usize),
    Halt(bool),
}

impl<'p> VmState<'p> {
    pub fn new(program: &'p CompiledProgram, input: &[f64], config: Config) -> Self {
        let mut vm = VmState {
            program,
            config,
            stack: Vec::new(),
            registers: [0.0; 10],
            frames: Vec::new(),
            counters: vec![0; program.counters],
            input: VecDeque::new(),
            line_buffer: String::new(),
            output: Vec::new(),
            steps: 0,
        };
        vm.input = input.iter().map(|&v| vm.narrow(v)).collect();
        vm
    }

    fn narrow(&self, v: f64) -> f64 {
        if self.config.single_precision {
            v as f32 as f64
        } else {
            v
        }
    }

    fn top(&self) -> Result<f64, ErrorCode> {
        self.stack.last().copied().ok_or(ErrorCode::E01)
    }

    fn pop(&mut self) -> Result<f64, ErrorCode> {
        self.stack.pop().ok_or(ErrorCode::E01)
    }

    /// Pushes a computed value. Overflow to a non-finite value is reported
    /// as a bad number rather than carried on the stack.
    fn push(&mut self, v: f64) -> Result<(), ErrorCode> {
        let v = self.narrow(v);
        if !v.is_finite() {
            return Err(ErrorCode::E07);
        }
        self.stack.push(v);
        Ok(())
    }

    fn unary(&mut self, f: impl FnOnce(f64) -> Result<f64, ErrorCode>) -> Result<(), ErrorCode> {
        let v = self.pop()?;
        let r = f(v)?;
        self.push(r)
    }

    fn binary(&mut self, f: impl FnOnce(f64, f64) -> Result<f64, ErrorCode>) -> Result<(), ErrorCode> {
        if self.stack.len() < 2 {
            return Err(ErrorCode::E01);
        }
        let v = self.pop()?;
        let u = self.pop()?;
        let r = f(u, v)?;
        self.push(r)
    }

    fn primitive(&mut self, op: Op) -> Result<bool, ErrorCode> {
        match op {
            Op::Input => {
                let v = self.input.pop_front().ok_or(ErrorCode::E02)?;
                self.push(v)?;
            }
            Op::Output => {
                let v = self.top()?;
                let field = format_e(v).map_err(|_| ErrorCode::E07)?;
                self.line_buffer.push_str(&field);
            }
            Op::Newline => self.flush(),
            Op::Dup => {
                let v = self.top()?;
                self.stack.push(v);
            }
            Op::Drop => {
                self.pop()?;
            }
            Op::Add => self.binary(|u, v| Ok(u + v))?,
            Op::Sub => self.binary(|u, v| Ok(u - v))?,
            Op::Mul => self.binary(|u, v| Ok(u * v))?,
            Op::Div => self.binary(|u, v| {
                if v == 0.0 {
                    Err(ErrorCode::E04)
                } else {
                    Ok(u / v)
                }
            })?,
            Op::Sine => self.unary(|v| Ok(v.sin()))?,
            Op::Exp => self.unary(|v| Ok(v.exp()))?,
            Op::Sqrt => self.unary(|v| {
                if v < 0.0 {
                    Err(ErrorCode::E05)
                } else {
                    Ok(v.sqrt())
                }
            })?,
            Op::Store(d) => self.registers[d as usize] = self.top()?,
            Op::Fetch(d) => {
                let v = self.registers[d as usize];
                self.stack.push(v);
            }
            Op::Zero => return Ok(self.top()? == 0.0),
            Op::Negative => return Ok(self.top()? < 0.0),
        }
        Ok(true)
    }

    fn flush(&mut self) {
        self.output.push(std::mem::take(&mut self.line_buffer));
    }

    fn enter(&mut self, frame: Frame) -> Result<(), ErrorCode> {
        if self.frames.len() >= self.config.max_depth {
            return Err(ErrorCode::E09);
        }
        self.frames.push(frame);
        Ok(())
    }

    fn exit(&mut self, truth: bool) -> Flow {
        let frame = self.frames.pop().expect("exit without frame");
        if self.frames.is_empty() {
            Flow::Halt(truth)
        } else if truth {
            Flow::Jump(frame.return_pc)
        } else {
            Flow::Jump(frame.fail_pc)
        }
    }

    fn step(&mut self, pc: usize) -> Result<Flow, ErrorCode> {
        let ins = self.program.code[pc];
        Ok(match ins.opcode {
            Opcode::Const(c) => {
                self.push(c)?;
                Flow::Next(true)
            }
            Opcode::Text(i) => {
                self.line_buffer.push_str(&self.program.texts[i]);
                Flow::Next(true)
            }
            Opcode::Prim(op) => Flow::Next(self.primitive(op)?),
            Opcode::Counter { slot, limit } => {
                self.counters[slot] += 1;
                if self.counters[slot] <= limit {
                    Flow::Next(true)
                } else {
                    self.counters[slot] = 0;
                    Flow::Next(false)
                }
            }
            Opcode::Call { entry, .. } => {
                self.enter(Frame {
                    return_pc: pc + 1,
                    fail_pc: ins.fail_target,
                })?;
                Flow::Jump(entry)
            }
            Opcode::Enter { after } => {
                self.enter(Frame {
                    return_pc: after,
                    fail_pc: ins.fail_target,
                })?;
                Flow::Jump(pc + 1)
            }
            Opcode::ExitTrue => self.exit(true),
            Opcode::ExitFalse => self.exit(false),
            Opcode::Repeat { start } => Flow::Jump(start),
        })
    }

    /// Runs to completion, reporting each executed instruction to `observe`.
    pub fn execute(mut self, mut observe: impl FnMut(&TraceStep)) -> RunResult {
        let program = self.program;
        let mut pc = program.entry;
        self.frames.push(Frame {
            return_pc: usize::MAX,
            fail_pc: usize::MAX,
        });
        let status = loop {
            let fault = |code: ErrorCode| {
                Status::Error(RecError::new(code, program.source_map.get(pc).copied(), Phase::Run))
            };
            if self.steps >= self.config.max_steps {
                break fault(ErrorCode::E11);
            }
            let flow = match self.step(pc) {
                Ok(flow) => flow,
                Err(code) => break fault(code),
            };
            self.steps += 1;
            observe(&TraceStep {
                step: self.steps,
                index: pc,
                opcode: program.code[pc].opcode.mnemonic(),
                depth: self.stack.len(),
                top: self.stack.last().copied(),
            });
            match flow {
                Flow::Next(true) => pc += 1,
                Flow::Next(false) => pc = program.code[pc].fail_target,
                Flow::Jump(to) => pc = to,
                Flow::Halt(truth) => break if truth { Status::True } else { Status::False },
            }
        };
        if !self.line_buffer.is_empty() {
            self.flush();
        }
        RunResult {
            status,
            output: self.output,
            final_stack: self.stack,
            steps: self.steps,
        }
    }
}

pub fn run(program: &CompiledProgram, input: &[f64], config: Config) -> RunResult {
    VmState::new(program, input, config).execute(|_| {})
}

pub fn trace(program: &CompiledProgram, input: &[f64], config: Config) -> (RunResult, Vec<TraceStep>) {
    let mut log = Vec::new();
    let result = VmState::new(program, input, config).execute(|s| log.push(s.clone()));
    (result, log)
}

/// One line per step: `step @index OPCODE DEPTH d TOP value`.
pub fn format_trace(log: &[TraceStep]) -> String {
    let mut out = String::new();
    for s in log {
        let top = match s.top {
            Some(v) => format_e(v).unwrap_or_else(|_| "NaN".into()),
            None => "-".into(),
        };
        let _ = writeln!(
            out,
            "{:>8} @{:04} {:<10} DEPTH {:>3} TOP {}",
            s.step, s.index, s.opcode, s.depth, top
        );
    }
    out
}
