//! Test-only oracles, corpus access and program generators. Nothing here
//! calls into the interpreter's evaluation path.
#![allow(dead_code)]

use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

use rec::{read_deck, split_units, ProgramUnit};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

pub fn corpus_text() -> String {
    std::fs::read_to_string(corpus_dir().join("rec.job")).expect("corpus/rec.job")
}

pub fn corpus_units() -> Vec<ProgramUnit> {
    let deck = read_deck(&corpus_text()).expect("corpus deck reads");
    split_units(&deck.cards).expect("corpus deck splits")
}

// Position of each sample in corpus/rec.job.
pub const DAMPED: usize = 0;
pub const ROSE: usize = 1;
pub const FACTORIAL_TABLE: usize = 2;
pub const SIMPSON: usize = 3;
pub const SUM_CONSTANTS: usize = 4;
pub const SUM_INPUTS: usize = 5;
pub const COMPARE: usize = 6;
pub const FACTORIAL: usize = 7;
pub const SINE: usize = 8;
pub const READ_WRITE: usize = 9;
pub const READ_TWO_SUM: usize = 10;
pub const SQRT_TABLE: usize = 11;

/// The damped-oscillation table as printed in the historic listing.
pub const DAMPED_PUBLISHED: [(&str, &str); 38] = [
    ("0.0000E 00", "0.0000E 00"),
    ("1.5000E-01", "4.15826E-01"),
    ("3.0000E-01", "7.15906E-01"),
    ("4.5000E-01", "8.52504E-01"),
    ("6.0000E-01", "8.13425E-01"),
    ("7.5000E-01", "6.21304E-01"),
    ("9.0000E-01", "3.26253E-01"),
    ("1.0500E 00", "-6.13488E-03"),
    ("1.2000E 00", "-3.08735E-01"),
    ("1.3500E 00", "-5.25927E-01"),
    ("1.5000E 00", "-6.23300E-01"),
    ("1.6500E 00", "-5.92444E-01"),
    ("1.8000E 00", "-4.50328E-01"),
    ("1.9500E 00", "-2.33855E-01"),
    ("2.1000E 00", "8.95249E-03"),
    ("2.2500E 00", "2.29140E-01"),
    ("2.4000E 00", "3.86318E-01"),
    ("2.5500E 00", "4.55686E-01"),
    ("2.7000E 00", "4.31465E-01"),
    ("2.8500E 00", "3.26366E-01"),
    ("3.0000E 00", "1.67559E-01"),
    ("3.1500E 00", "-9.79736E-03"),
    ("3.2999E 00", "-1.70005E-01"),
    ("3.4499E 00", "-2.83736E-01"),
    ("3.5999E 00", "-3.33121E-01"),
    ("3.7499E 00", "-3.14203E-01"),
    ("3.8999E 00", "-2.36499E-01"),
    ("4.0499E 00", "-1.20008E-01"),
    ("4.1999E 00", "9.53147E-03"),
    ("4.3499E 00", "1.26089E-01"),
    ("4.4999E 00", "2.08370E-01"),
    ("4.6499E 00", "2.43504E-01"),
    ("4.7999E 00", "2.28793E-01"),
    ("4.9499E 00", "1.71356E-01"),
    ("5.0999E 00", "8.59142E-02"),
    ("5.2499E 00", "-8.69345E-03"),
    ("5.3999E 00", "-9.34868E-02"),
    ("5.5499E 00", "-1.53006E-01"),
];

/// Composite Simpson's rule with `intervals` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    assert!(intervals % 2 == 0);
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

pub fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// Star/blank grid for the rose-curve sample: rows step x by 0.08 from -2,
/// columns step y by 0.054 from -2, both by repeated addition.
pub fn rose_grid() -> Vec<String> {
    let mut rows = Vec::with_capacity(50);
    let mut x = -2.0f64;
    for _ in 0..50 {
        let mut y = -2.0f64;
        let mut row = String::with_capacity(74);
        for _ in 0..74 {
            let s = x * x + y * y;
            let s5 = s * s * s * s * s;
            let d = (y * y - x * x) * y * x * 8.0;
            let f = s5 - d * d;
            row.push(if f < 0.0 { '*' } else { ' ' });
            y += 0.054;
        }
        rows.push(row);
        x += 0.08;
    }
    rows
}

/// Star column for each of the 100 sine-graph rows: how many 0.04
/// subtractions from sin(t)+1 leave it non-negative.
pub fn sine_columns() -> Vec<usize> {
    let mut t = 0.0f64;
    (0..100)
        .map(|_| {
            let mut v = t.sin() + 1.0;
            let mut col = 0;
            loop {
                v -= 0.04;
                if v < 0.0 {
                    break;
                }
                col += 1;
            }
            t += 0.0628;
            col
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Program generators

const SAFE_OPS: &[&str] = &[
    "I", "O", "X", "P", "L", "D", "J", "+", "&", "-", "*", "/", "S", "E", "Q", "N", "0",
];

fn gen_item(rng: &mut StdRng, defined: &[char], depth: usize, out: &mut String) {
    match rng.gen_range(0..12) {
        0..=3 => out.push_str(SAFE_OPS.choose(rng).unwrap()),
        4 => {
            let v: f64 = rng.gen_range(-100.0..100.0);
            let v = (v * 100.0).round() / 100.0;
            out.push_str(&format!("'/{v}'"));
        }
        5 => {
            let words = ["", " ", "A B", "PI=", "*", "EL 1RO"];
            out.push_str(&format!("''{}'", words.choose(rng).unwrap()));
        }
        6 => {
            let d = rng.gen_range(0..10);
            out.push_str(&format!("{}{d}", if rng.gen_bool(0.5) { 'S' } else { 'F' }));
        }
        7 => out.push_str(&format!("${}$", rng.gen_range(1..60))),
        8 if !defined.is_empty() => {
            out.push('\'');
            out.push(*defined.choose(rng).unwrap());
        }
        9 if depth < 3 => gen_block(rng, defined, depth + 1, out),
        10 => out.push(','),
        11 => out.push('.'),
        _ => out.push('P'),
    }
    if rng.gen_bool(0.2) {
        out.push(' ');
    }
}

fn gen_block(rng: &mut StdRng, defined: &[char], depth: usize, out: &mut String) {
    out.push('(');
    for _ in 0..rng.gen_range(0..8) {
        gen_item(rng, defined, depth, out);
    }
    out.push(')');
}

/// A syntactically valid program: up to three definitions and a main block.
pub fn gen_program(rng: &mut StdRng) -> String {
    let mut letters: Vec<char> = ('A'..='Z').collect();
    letters.shuffle(rng);
    let defined: Vec<char> = letters[..rng.gen_range(0..4)].to_vec();
    let mut out = String::new();
    for &name in &defined {
        gen_block(rng, &defined, 1, &mut out);
        out.push('\'');
        out.push(name);
        if rng.gen_bool(0.3) {
            out.push('L');
        }
        out.push(if rng.gen_bool(0.5) { '\n' } else { ' ' });
    }
    gen_block(rng, &defined, 1, &mut out);
    out
}

/// Random text over the REC alphabet plus noise; mostly malformed.
pub fn gen_noise(rng: &mut StdRng) -> String {
    const ALPHABET: &[u8] = b"()(),.''''/$$0123456789IOXPLDJSFEQNZK+-*&/ \n#@abc";
    let len = rng.gen_range(0..40);
    (0..len)
        .map(|_| *ALPHABET.choose(rng).unwrap() as char)
        .collect()
}
