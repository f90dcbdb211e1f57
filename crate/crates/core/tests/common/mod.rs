#![allow(dead_code)]

use loopbound::ir::{parse_source, FlowGraph, LowerOptions, SourceKind};
use loopbound::symexpr::{Expr, Formula, Rel};
use rand::Rng;

pub fn corpus_dir() -> String {
    format!("{}/../../corpus", env!("CARGO_MANIFEST_DIR"))
}

pub fn corpus_names() -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".fg") || n.ends_with(".loopc"))
        .collect();
    names.sort();
    names
}

pub fn load(name: &str) -> FlowGraph {
    let text = std::fs::read_to_string(format!("{}/{name}", corpus_dir())).unwrap();
    let opts = LowerOptions {
        ignore_array_writes: true,
    };
    parse_source(&text, SourceKind::detect(Some(name), &text), opts).unwrap()
}

pub const SYMBOLS: [&str; 3] = ["x", "y", "z"];

/// A random expression over `x, y, z` and counters 1 and 2.
pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..4) {
            0 | 1 => Expr::sym(SYMBOLS[rng.gen_range(0..3)]),
            2 => Expr::counter(rng.gen_range(1..=2)),
            _ => Expr::Const(rng.gen_range(-4..=4)),
        };
    }
    let sub = |rng: &mut _| random_expr(rng, depth - 1);
    match rng.gen_range(0..10) {
        0 | 1 => {
            let n = rng.gen_range(2..=3);
            Expr::Add((0..n).map(|_| sub(rng)).collect())
        }
        2 => Expr::sub(sub(rng), sub(rng)),
        3 | 4 => Expr::mul(sub(rng), sub(rng)),
        5 => Expr::max(vec![sub(rng), sub(rng)]),
        6 => Expr::min(vec![sub(rng), sub(rng)]),
        7 => Expr::ceil(sub(rng), Expr::Const(rng.gen_range(1..=4))),
        8 => Expr::floor(sub(rng), Expr::Const(rng.gen_range(1..=4))),
        _ => Expr::ite(random_atom(rng, depth - 1), sub(rng), sub(rng)),
    }
}

pub fn random_atom(rng: &mut impl Rng, depth: u32) -> Formula {
    let rel = [Rel::Lt, Rel::Le, Rel::Eq, Rel::Ne][rng.gen_range(0..4)];
    Formula::Cmp(rel, random_expr(rng, depth), random_expr(rng, depth))
}

/// A random `sum(a_i * k_i) rel b` with coefficients in 1..=4 over counters `1..=n`.
pub fn counter_atom(rng: &mut impl Rng, counters: &[u32], bound: i64) -> Formula {
    let terms: Vec<Expr> = counters
        .iter()
        .map(|&k| Expr::mul(Expr::Const(rng.gen_range(1..=4)), Expr::counter(k)))
        .collect();
    let lhs = if terms.len() == 1 {
        terms.into_iter().next().unwrap()
    } else {
        Expr::Add(terms)
    };
    if rng.gen_bool(0.5) {
        Formula::lt(lhs, Expr::Const(bound))
    } else {
        Formula::le(lhs, Expr::Const(bound))
    }
}
