//! Block parser and bytecode emitter.
//!
//! A unit is zero or more definitions `(block)'x`, each optionally followed
//! by a stray `L`, and then one unnamed main block. Inside a block `,` exits
//! TRUE, `)` exits FALSE and `.` restarts the block. Every instruction
//! carries a precomputed `fail_target`: the index just past the next comma
//! at the same depth, or the block's closing `EXIT_FALSE`. Nested blocks are
//! opaque to that search.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::errors::{ErrorCode, Phase, Position, RecError};
use crate::syntax::{tokenize, LexError, Op, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Opcode {
    Const(f64),
    /// Index into [`CompiledProgram::texts`].
    Text(usize),
    Prim(Op),
    Counter { slot: usize, limit: u32 },
    Call { name: char, entry: usize },
    /// Opens a nested block whose body starts at the next instruction;
    /// `after` is the index following the block's `EXIT_FALSE`.
    Enter { after: usize },
    ExitTrue,
    ExitFalse,
    /// Jumps to the first instruction of the enclosing block.
    Repeat { start: usize },
}

impl Opcode {
    pub fn mnemonic(&self) -> &'static str {
        match self {
            Opcode::Const(_) => "CONST",
            Opcode::Text(_) => "TEXT",
            Opcode::Prim(op) => match op {
                Op::Input => "IN",
                Op::Output => "OUT",
                Op::Newline => "NEWLINE",
                Op::Dup => "DUP",
                Op::Drop => "DROP",
                Op::Add => "ADD",
                Op::Sub => "SUB",
                Op::Mul => "MUL",
                Op::Div => "DIV",
                Op::Sine => "SIN",
                Op::Exp => "EXP",
                Op::Sqrt => "SQRT",
                Op::Store(_) => "STORE",
                Op::Fetch(_) => "FETCH",
                Op::Zero => "ZERO",
                Op::Negative => "NEG",
            },
            Opcode::Counter { .. } => "COUNTER",
            Opcode::Call { .. } => "CALL",
            Opcode::Enter { .. } => "BLOCK",
            Opcode::ExitTrue => "EXIT_TRUE",
            Opcode::ExitFalse => "EXIT_FALSE",
            Opcode::Repeat { .. } => "REPEAT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Instruction {
    pub opcode: Opcode,
    pub fail_target: usize,
}

/// Compiled form of one program unit.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledProgram {
    pub code: Vec<Instruction>,
    /// Index of the main block's first instruction.
    pub entry: usize,
    pub subroutines: BTreeMap<char, usize>,
    pub texts: Vec<String>,
    /// Number of counter slots.
    pub counters: usize,
    /// Source position for each instruction.
    pub source_map: Vec<Position>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CompileError {
    #[error(transparent)]
    Lex(#[from] LexError),
    #[error("unbalanced parentheses at {0}")]
    UnbalancedParens(Position),
    #[error("undefined subroutine '{0} at {1}")]
    UndefinedSubroutine(char, Position),
    #[error("subroutine '{0} defined twice, second at {1}")]
    DuplicateDefinition(char, Position),
    #[error("unexpected text after main block at {0}")]
    TrailingGarbage(Position),
    #[error("no main block (end of text at {0})")]
    EmptyProgram(Position),
}

impl CompileError {
    pub fn code(&self) -> ErrorCode {
        match self {
            CompileError::Lex(e) => e.code(),
            CompileError::UnbalancedParens(_) | CompileError::EmptyProgram(_) => ErrorCode::E06,
            CompileError::UndefinedSubroutine(..) | CompileError::DuplicateDefinition(..) => {
                ErrorCode::E03
            }
            CompileError::TrailingGarbage(_) => ErrorCode::E08,
        }
    }

    pub fn position(&self) -> Position {
        match self {
            CompileError::Lex(e) => e.position(),
            CompileError::UnbalancedParens(p)
            | CompileError::UndefinedSubroutine(_, p)
            | CompileError::DuplicateDefinition(_, p)
            | CompileError::TrailingGarbage(p)
            | CompileError::EmptyProgram(p) => *p,
        }
    }
}

impl From<CompileError> for RecError {
    fn from(e: CompileError) -> Self {
        let phase = match e {
            CompileError::Lex(_) => Phase::Lex,
            _ => Phase::Compile,
        };
        RecError::new(e.code(), Some(e.position()), phase)
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug)]
enum Item {
    Leaf(TokenKind, Position),
    Block(Block),
}

#[derive(Debug)]
struct Block {
    open: Position,
    close: Position,
    items: Vec<Item>,
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    /// Parses a block; the current token is its `(`.
    fn block(&mut self) -> Result<Block, CompileError> {
        let open = self.tokens[self.pos].position;
        self.pos += 1;
        let mut items = Vec::new();
        loop {
            let Some(tok) = self.peek() else {
                return Err(CompileError::UnbalancedParens(open));
            };
            match tok.kind {
                TokenKind::LParen => items.push(Item::Block(self.block()?)),
                TokenKind::RParen => {
                    let close = tok.position;
                    self.pos += 1;
                    return Ok(Block { open, close, items });
                }
                _ => {
                    items.push(Item::Leaf(tok.kind.clone(), tok.position));
                    self.pos += 1;
                }
            }
        }
    }
}

fn end_position(source: &str) -> Position {
    let mut pos = Position::new(1, 1);
    for c in source.chars() {
        if c == '\n' {
            pos.card += 1;
            pos.column = 1;
        } else {
            pos.column += 1;
        }
    }
    pos
}

// ---------------------------------------------------------------------------
// Emission

struct Emitter<'a> {
    code: Vec<Instruction>,
    source_map: Vec<Position>,
    texts: Vec<String>,
    counters: usize,
    subroutines: &'a BTreeMap<char, usize>,
    /// Calls whose entry is patched once all definitions are placed.
    pending_calls: Vec<usize>,
}

impl Emitter<'_> {
    fn push(&mut self, opcode: Opcode, at: Position) -> usize {
        self.code.push(Instruction {
            opcode,
            fail_target: usize::MAX,
        });
        self.source_map.push(at);
        self.code.len() - 1
    }

    fn intern(&mut self, text: &str) -> usize {
        match self.texts.iter().position(|t| t == text) {
            Some(i) => i,
            None => {
                self.texts.push(text.to_string());
                self.texts.len() - 1
            }
        }
    }

    /// Emits the body of `block` starting at the current end of code,
    /// followed by its `EXIT_FALSE`.
    fn block(&mut self, block: &Block) -> Result<(), CompileError> {
        let start = self.code.len();
        // (instruction index, is_comma) for every item at this depth
        let mut emitted: Vec<(usize, bool)> = Vec::with_capacity(block.items.len());
        for item in &block.items {
            match item {
                Item::Block(inner) => {
                    let enter = self.push(Opcode::Enter { after: 0 }, inner.open);
                    self.block(inner)?;
                    let after = self.code.len();
                    self.code[enter].opcode = Opcode::Enter { after };
                    emitted.push((enter, false));
                }
                Item::Leaf(kind, at) => {
                    let opcode = match kind {
                        TokenKind::Comma => Opcode::ExitTrue,
                        TokenKind::Period => Opcode::Repeat { start },
                        TokenKind::Const(c) => Opcode::Const(*c),
                        TokenKind::Text(t) => Opcode::Text(self.intern(t)),
                        TokenKind::Op(op) => Opcode::Prim(*op),
                        TokenKind::Counter(n) => {
                            self.counters += 1;
                            Opcode::Counter {
                                slot: self.counters - 1,
                                limit: *n,
                            }
                        }
                        TokenKind::Call(name) => {
                            if !self.subroutines.contains_key(name) {
                                return Err(CompileError::UndefinedSubroutine(*name, *at));
                            }
                            Opcode::Call {
                                name: *name,
                                entry: 0,
                            }
                        }
                        TokenKind::LParen | TokenKind::RParen => {
                            unreachable!("parens are parsed into blocks")
                        }
                    };
                    let idx = self.push(opcode, *at);
                    if matches!(opcode, Opcode::Call { .. }) {
                        self.pending_calls.push(idx);
                    }
                    emitted.push((idx, matches!(kind, TokenKind::Comma)));
                }
            }
        }
        let exit = self.push(Opcode::ExitFalse, block.close);
        self.code[exit].fail_target = exit;

        let mut next_fail = exit;
        for &(idx, is_comma) in emitted.iter().rev() {
            if is_comma {
                next_fail = idx + 1;
            }
            self.code[idx].fail_target = next_fail;
        }
        Ok(())
    }
}

pub fn compile(source: &str) -> Result<CompiledProgram, CompileError> {
    let tokens = tokenize(source)?;
    let mut parser = Parser { tokens, pos: 0 };

    let mut definitions: Vec<(char, Block)> = Vec::new();
    let mut main: Option<Block> = None;
    while let Some(tok) = parser.peek() {
        let at = tok.position;
        if main.is_some() {
            return Err(match tok.kind {
                TokenKind::RParen => CompileError::UnbalancedParens(at),
                _ => CompileError::TrailingGarbage(at),
            });
        }
        match tok.kind {
            TokenKind::LParen => {}
            TokenKind::RParen => return Err(CompileError::UnbalancedParens(at)),
            _ => return Err(CompileError::TrailingGarbage(at)),
        }
        let block = parser.block()?;
        match parser.peek().map(|t| (t.kind.clone(), t.position)) {
            Some((TokenKind::Call(name), at)) => {
                parser.pos += 1;
                if definitions.iter().any(|(n, _)| *n == name) {
                    return Err(CompileError::DuplicateDefinition(name, at));
                }
                definitions.push((name, block));
                if matches!(parser.peek(), Some(t) if t.kind == TokenKind::Op(Op::Drop)) {
                    parser.pos += 1;
                }
            }
            _ => main = Some(block),
        }
    }
    let Some(main) = main else {
        return Err(CompileError::EmptyProgram(end_position(source)));
    };

    // Entries are known only after layout, but name resolution needs just
    // the set of names; a placeholder map is filled in as blocks are placed.
    let mut names: BTreeMap<char, usize> = definitions.iter().map(|(n, _)| (*n, 0)).collect();
    let mut emitter = Emitter {
        code: Vec::new(),
        source_map: Vec::new(),
        texts: Vec::new(),
        counters: 0,
        subroutines: &names,
        pending_calls: Vec::new(),
    };
    let mut entries = Vec::with_capacity(definitions.len());
    for (name, block) in &definitions {
        entries.push((*name, emitter.code.len()));
        emitter.block(block)?;
    }
    let entry = emitter.code.len();
    emitter.block(&main)?;

    let Emitter {
        mut code,
        source_map,
        texts,
        counters,
        pending_calls,
        ..
    } = emitter;
    for (name, at) in entries {
        names.insert(name, at);
    }
    for idx in pending_calls {
        if let Opcode::Call { name, .. } = code[idx].opcode {
            code[idx].opcode = Opcode::Call {
                name,
                entry: names[&name],
            };
        }
    }

    Ok(CompiledProgram {
        code,
        entry,
        subroutines: names,
        texts,
        counters,
        source_map,
    })
}

impl CompiledProgram {
    /// Number of blocks (definitions, main and nested).
    pub fn block_count(&self) -> usize {
        self.code
            .iter()
            .filter(|i| i.opcode == Opcode::ExitFalse)
            .count()
    }

    /// Reconstructs canonical source text from the bytecode alone.
    pub fn canonical_source(&self) -> String {
        let by_entry: BTreeMap<usize, char> =
            self.subroutines.iter().map(|(&n, &e)| (e, n)).collect();
        let mut parts: Vec<String> = Vec::new();
        let mut pc = 0;
        while pc < self.code.len() {
            let region = pc;
            let mut depth = 0usize;
            parts.push("(".into());
            depth += 1;
            while depth > 0 {
                let part = match self.code[pc].opcode {
                    Opcode::Const(c) => TokenKind::Const(c).lexeme(),
                    Opcode::Text(i) => TokenKind::Text(self.texts[i].clone()).lexeme(),
                    Opcode::Prim(op) => op.symbol(),
                    Opcode::Counter { limit, .. } => TokenKind::Counter(limit).lexeme(),
                    Opcode::Call { name, .. } => TokenKind::Call(name).lexeme(),
                    Opcode::Enter { .. } => {
                        depth += 1;
                        "(".into()
                    }
                    Opcode::ExitTrue => ",".into(),
                    Opcode::ExitFalse => {
                        depth -= 1;
                        ")".into()
                    }
                    Opcode::Repeat { .. } => ".".into(),
                };
                parts.push(part);
                pc += 1;
            }
            if let Some(name) = by_entry.get(&region) {
                parts.push(TokenKind::Call(*name).lexeme());
            }
        }
        parts.join(" ")
    }
}

fn operand(program: &CompiledProgram, opcode: &Opcode) -> String {
    match *opcode {
        Opcode::Const(c) => format!("{c:?}"),
        Opcode::Text(i) => format!("#{i} \"{}\"", program.texts[i]),
        Opcode::Prim(Op::Store(d)) | Opcode::Prim(Op::Fetch(d)) => format!("R{d}"),
        Opcode::Prim(_) | Opcode::ExitTrue | Opcode::ExitFalse => String::new(),
        Opcode::Counter { slot, limit } => format!("#{slot} LIMIT {limit}"),
        Opcode::Call { name, entry } => format!("{name} @{entry:04}"),
        Opcode::Enter { after } => format!("END @{after:04}"),
        Opcode::Repeat { start } => format!("@{start:04}"),
    }
}

/// Human-readable disassembly. Header lines start with `;`; each remaining
/// line is one instruction.
pub fn dump(program: &CompiledProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "; SOURCE {}", program.canonical_source());
    let _ = writeln!(out, "; ENTRY @{:04}", program.entry);
    for (name, entry) in &program.subroutines {
        let _ = writeln!(out, "; SUB {name} @{entry:04}");
    }
    let _ = writeln!(out, "; COUNTERS {}", program.counters);
    for (i, ins) in program.code.iter().enumerate() {
        let _ = writeln!(
            out,
            "{i:04}  {:<10} {:<28} FAIL @{:04}",
            ins.opcode.mnemonic(),
            operand(program, &ins.opcode),
            ins.fail_target
        );
    }
    out
}

/// Pulls the canonical source back out of a disassembly.
pub fn extract_source(disassembly: &str) -> Option<&str> {
    disassembly
        .lines()
        .find_map(|l| l.strip_prefix("; SOURCE "))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ops(p: &CompiledProgram) -> Vec<&'static str> {
        p.code.iter().map(|i| i.opcode.mnemonic()).collect()
    }

    #[test]
    fn sum_constants_is_linear() {
        let p = compile("('/2''/2'+O X,)").unwrap();
        assert_eq!(
            ops(&p),
            ["CONST", "CONST", "ADD", "OUT", "NEWLINE", "EXIT_TRUE", "EXIT_FALSE"]
        );
        assert_eq!(p.entry, 0);
        // everything before the comma fails to just past it
        for i in 0..5 {
            assert_eq!(p.code[i].fail_target, 6);
        }
        assert_eq!(dump(&p).lines().filter(|l| !l.starts_with(';')).count(), 7);
    }

    #[test]
    fn factorial_definition() {
        let p = compile("(0L'/1',P'/1'-'F*,)'FL (I'FOX,)").unwrap();
        assert_eq!(p.subroutines[&'F'], 0);
        // ZERO fails to P, the first instruction of clause two
        assert_eq!(p.code[0].opcode, Opcode::Prim(Op::Zero));
        let p_idx = p.code[0].fail_target;
        assert_eq!(p.code[p_idx].opcode, Opcode::Prim(Op::Dup));
        assert_eq!(p_idx, 4);
        assert!(p
            .code
            .iter()
            .filter_map(|i| match i.opcode {
                Opcode::Call { entry, .. } => Some(entry),
                _ => None,
            })
            .all(|e| e == 0));
        assert_eq!(p.entry, 11);
    }

    #[test]
    fn counter_fails_to_second_comma() {
        let p = compile("($3$ P .,,)").unwrap();
        assert_eq!(
            p.code[0].opcode,
            Opcode::Counter { slot: 0, limit: 3 }
        );
        assert_eq!(p.code[0].fail_target, 4);
        assert_eq!(p.code[4].opcode, Opcode::ExitTrue);
        assert_eq!(p.code[2].opcode, Opcode::Repeat { start: 0 });
        assert_eq!(p.counters, 1);
    }

    #[test]
    fn nested_commas_are_invisible_to_outer_skip() {
        // outer N must fail to the EXIT_FALSE, not the inner comma
        let p = compile("(N(I,O),)").unwrap();
        assert_eq!(
            ops(&p),
            ["NEG", "BLOCK", "IN", "EXIT_TRUE", "OUT", "EXIT_FALSE", "EXIT_TRUE", "EXIT_FALSE"]
        );
        assert_eq!(p.code[0].fail_target, 7);
        assert_eq!(p.code[1].fail_target, 7);
        assert_eq!(p.code[1].opcode, Opcode::Enter { after: 6 });
        assert_eq!(p.code[2].fail_target, 4);
        assert_eq!(p.code[4].fail_target, 5);
    }

    #[test]
    fn forward_and_recursive_references() {
        let p = compile("('G,)'F ('F,)'G ('F,)").unwrap();
        assert_eq!(p.subroutines.len(), 2);
        assert_eq!(p.subroutines[&'F'], 0);
        assert_eq!(p.subroutines[&'G'], 3);
    }

    #[test]
    fn errors_carry_codes() {
        let cases = [
            ("(I", ErrorCode::E06),
            ("(I))", ErrorCode::E06),
            (")", ErrorCode::E06),
            ("", ErrorCode::E06),
            ("(I,)'F", ErrorCode::E06),
            ("('G,)", ErrorCode::E03),
            ("(I,)'F(O,)'F(,)", ErrorCode::E03),
            ("(I,)I", ErrorCode::E08),
            ("(I,)(O,)", ErrorCode::E08),
            ("I(O,)", ErrorCode::E08),
            ("(''AB", ErrorCode::E10),
        ];
        for (src, code) in cases {
            let err = compile(src).unwrap_err();
            assert_eq!(err.code(), code, "{src:?}: {err}");
        }
        assert_eq!(
            compile("('G,)").unwrap_err(),
            CompileError::UndefinedSubroutine('G', Position::new(1, 2))
        );
        assert_eq!(
            compile(" \n (I").unwrap_err(),
            CompileError::UnbalancedParens(Position::new(2, 2))
        );
    }

    #[test]
    fn canonical_roundtrip() {
        let src = "('/1'''HI 'S3(N''*','' '.)LX$2$.,,)'A (I'AOX,)";
        let p = compile(src).unwrap();
        let canon = p.canonical_source();
        let q = compile(&canon).unwrap();
        assert_eq!(p.code, q.code);
        assert_eq!(extract_source(&dump(&p)), Some(canon.as_str()));
    }

    #[test]
    fn every_fail_target_stays_in_its_block() {
        let p = compile("(0L'/1',P'/1'-'F*,)'F ('/0'($10$P''  'OQOLX'/1'+.,,),)").unwrap();
        // walk blocks with a stack of (start) and check on EXIT_FALSE
        let mut open: Vec<(usize, Vec<usize>)> = vec![(0, vec![])];
        for (i, ins) in p.code.iter().enumerate() {
            open.last_mut().unwrap().1.push(i);
            match ins.opcode {
                Opcode::Enter { .. } => open.push((i + 1, vec![])),
                Opcode::ExitFalse => {
                    let (start, members) = open.pop().unwrap();
                    for m in members {
                        let f = p.code[m].fail_target;
                        assert!(f >= start && f <= i, "instr {m} fail {f} outside [{start},{i}]");
                    }
                    if open.is_empty() {
                        open.push((i + 1, vec![]));
                    }
                }
                _ => {}
            }
        }
    }
}
