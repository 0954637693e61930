//! Birkhoff–von Neumann decomposition by greedy matching extraction.

use std::collections::VecDeque;

use super::TransitionMatrix;
use crate::error::{Error, Result};
use crate::scalar::{NumericPolicy, Scalar};

/// Convex combination of permutation matrices. `perm[i]` is the column
/// matched to row `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct BvnDecomposition<T> {
    pub terms: Vec<(T, Vec<usize>)>,
}

impl<T: Scalar> BvnDecomposition<T> {
    /// `sum weight * PermMatrix(perm)`.
    pub fn reconstruct(&self, n: usize) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); n]; n];
        for (w, perm) in &self.terms {
            for (i, &j) in perm.iter().enumerate() {
                m[i][j] = m[i][j].clone() + w.clone();
            }
        }
        m
    }
}

const NIL: usize = usize::MAX;

/// Maximum bipartite matching (Hopcroft–Karp). Adjacency lists are scanned in
/// increasing column order, so the result is deterministic.
pub(crate) fn hopcroft_karp(adj: &[Vec<usize>], right: usize) -> Vec<usize> {
    let left = adj.len();
    let mut match_l = vec![NIL; left];
    let mut match_r = vec![NIL; right];
    let mut dist = vec![0usize; left];

    loop {
        // layered BFS from free left vertices
        let mut queue = VecDeque::new();
        for u in 0..left {
            if match_l[u] == NIL {
                dist[u] = 0;
                queue.push_back(u);
            } else {
                dist[u] = usize::MAX;
            }
        }
        let mut found = false;
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                let w = match_r[v];
                if w == NIL {
                    found = true;
                } else if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        if !found {
            break;
        }
        for u in 0..left {
            if match_l[u] == NIL {
                augment(u, adj, &mut match_l, &mut match_r, &mut dist);
            }
        }
    }
    match_l
}

fn augment(
    u: usize,
    adj: &[Vec<usize>],
    match_l: &mut [usize],
    match_r: &mut [usize],
    dist: &mut [usize],
) -> bool {
    for &v in &adj[u] {
        let w = match_r[v];
        if w == NIL || (dist[w] == dist[u] + 1 && augment(w, adj, match_l, match_r, dist)) {
            match_l[u] = v;
            match_r[v] = u;
            return true;
        }
    }
    dist[u] = usize::MAX;
    false
}

/// Repeatedly take a perfect matching on the positive entries and subtract
/// its minimum entry times that permutation. At most `(n-1)^2 + 1` terms.
pub fn bvn_decompose<T: Scalar>(d: &TransitionMatrix<T>) -> Result<BvnDecomposition<T>> {
    let policy = NumericPolicy::current();
    d.check_doubly_stochastic(&policy)?;
    let n = d.n();
    let tol = policy.stochastic_tol;
    let mut rest = d.to_rows();
    let mut remaining = T::one();
    let mut terms = Vec::new();

    while remaining.is_positive_within(tol) {
        let adj: Vec<Vec<usize>> = rest
            .iter()
            .map(|row| {
                (0..n)
                    .filter(|&j| row[j].is_positive_within(tol))
                    .collect()
            })
            .collect();
        let perm = hopcroft_karp(&adj, n);
        if perm.contains(&NIL) || terms.len() > n * n {
            // cannot happen for a doubly stochastic remainder (Hall's theorem)
            return Err(Error::SelfTestFailed(
                "no perfect matching on a doubly stochastic remainder".into(),
            ));
        }
        let w = perm
            .iter()
            .enumerate()
            .map(|(i, &j)| rest[i][j].clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("n >= 1");
        for (i, &j) in perm.iter().enumerate() {
            let x = rest[i][j].clone() - w.clone();
            rest[i][j] = if x.is_positive_within(tol) { x } else { T::zero() };
        }
        remaining = remaining - w.clone();
        terms.push((w, perm));
    }
    Ok(BvnDecomposition { terms })
}
