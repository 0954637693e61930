//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use coalesce_core::constructions::{nonblock_measure, pn_block_measure, product_measure_bvn};
use coalesce_core::matrix::sample_random_matrix_exact;
use coalesce_core::measures::independence_coupling;
use coalesce_core::{ratio, FunctionMeasure, Partition, Rational, StateFunction, TransitionMatrix};

pub fn f(s: &str, n: usize) -> StateFunction {
    StateFunction::parse(s, n).unwrap()
}

pub fn uniform(n: usize, fs: &[&str]) -> FunctionMeasure<Rational> {
    FunctionMeasure::uniform(n, fs.iter().map(|s| f(s, n)).collect()).unwrap()
}

pub fn weighted(n: usize, atoms: &[(&str, i64)]) -> FunctionMeasure<Rational> {
    let total: i64 = atoms.iter().map(|(_, w)| w).sum();
    FunctionMeasure::from_weights(n, atoms.iter().map(|(s, w)| (f(s, n), ratio(*w, total)))).unwrap()
}

/// 1-based blocks.
pub fn part(n: usize, blocks: &[&[usize]]) -> Partition {
    Partition::from_one_based(n, &blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
}

pub fn sorted(mut v: Vec<Partition>) -> Vec<Partition> {
    v.sort();
    v
}

pub fn four_atom() -> FunctionMeasure<Rational> {
    uniform(4, &["(1212)", "(1221)", "(3434)", "(3443)"])
}

pub fn lumpable_four_state() -> TransitionMatrix<Rational> {
    TransitionMatrix::from_ratios(&[
        vec![(1, 2), (0, 1), (1, 2), (0, 1)],
        vec![(0, 1), (1, 2), (0, 1), (1, 2)],
        vec![(0, 1), (1, 2), (1, 2), (0, 1)],
        vec![(1, 2), (0, 1), (0, 1), (1, 2)],
    ])
    .unwrap()
}

pub fn mu_f() -> FunctionMeasure<Rational> {
    uniform(4, &["(1234)", "(3421)"])
}

pub fn mu_g() -> FunctionMeasure<Rational> {
    uniform(4, &["(3434)", "(1221)"])
}

pub fn six_literal() -> FunctionMeasure<Rational> {
    uniform(6, &["(121212)", "(212121)", "(343443)", "(434334)", "(566565)", "(655656)"])
}

/// Aperiodic chains whose independence couplings coalesce completely.
pub fn aperiodic_chains() -> Vec<(String, TransitionMatrix<Rational>)> {
    let mut out = vec![("lumpable-4".to_string(), lumpable_four_state())];
    for (n, seed) in [(2, 11), (3, 12), (3, 13), (4, 14)] {
        out.push((format!("random-{n}-seed{seed}"), sample_random_matrix_exact(n, seed)));
    }
    out
}

/// Named measures with at most `max_n` states and irreducible push-forward.
pub fn corpus(max_n: usize) -> Vec<(String, FunctionMeasure<Rational>)> {
    let mut out: Vec<(String, FunctionMeasure<Rational>)> = vec![
        ("four-atom".into(), four_atom()),
        ("four-atom-weighted".into(), weighted(4, &[("(1212)", 1), ("(1221)", 2), ("(3434)", 3), ("(3443)", 4)])),
        ("mu_f".into(), mu_f()),
        ("mu_g".into(), mu_g()),
        ("two-cycle".into(), uniform(2, &["(21)"])),
        ("lazy-mixed".into(), weighted(3, &[("(231)", 2), ("(111)", 1), ("(133)", 1)])),
        ("nonblock-4-2".into(), nonblock_measure(4, 2).unwrap()),
        ("pnblock-4-2".into(), pn_block_measure(4, 2).unwrap()),
        ("pnblock-4-4".into(), pn_block_measure(4, 4).unwrap()),
        ("product-lumpable-4".into(), product_measure_bvn(&lumpable_four_state(), &part(4, &[&[1, 2], &[3, 4]])).unwrap()),
        ("six-literal".into(), six_literal()),
        ("nonblock-6-2".into(), nonblock_measure(6, 2).unwrap()),
        ("nonblock-6-3".into(), nonblock_measure(6, 3).unwrap()),
    ];
    for (name, p) in aperiodic_chains() {
        out.push((format!("ind-{name}"), independence_coupling(&p).unwrap()));
    }
    let periodic = TransitionMatrix::from_ratios(&[
        vec![(0, 1), (1, 3), (2, 3), (0, 1)],
        vec![(1, 2), (0, 1), (0, 1), (1, 2)],
        vec![(1, 4), (0, 1), (0, 1), (3, 4)],
        vec![(0, 1), (1, 1), (0, 1), (0, 1)],
    ])
    .unwrap();
    out.push(("ind-bipartite-4".into(), independence_coupling(&periodic).unwrap()));
    out.retain(|(_, mu)| mu.n() <= max_n);
    out
}
