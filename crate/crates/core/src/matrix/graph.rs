//! Transition-graph structure: strong connectivity, period and cyclic classes.

use std::collections::VecDeque;

use num_integer::Integer;

use super::TransitionMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Period `d` and the cyclic classes `S_0, ..., S_{d-1}`, anchored so that
/// `S_0` contains state 0 and `S_{r+1}` holds the successors of `S_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicStructure {
    pub period: usize,
    pub classes: Vec<Vec<usize>>,
}

impl CyclicStructure {
    /// Index of the class containing `state`.
    pub fn class_of(&self, state: usize) -> usize {
        self.classes
            .iter()
            .position(|c| c.contains(&state))
            .expect("cyclic classes cover every state")
    }
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

/// Strong connectivity of `{(i, j) : p_ij > 0}`: everything is reachable from
/// state 0 forwards and backwards.
pub fn is_irreducible<T: Scalar>(p: &TransitionMatrix<T>) -> bool {
    let succ = p.successors();
    let mut pred = vec![Vec::new(); p.n()];
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            pred[v].push(u);
        }
    }
    bfs_levels(&succ, 0).iter().all(Option::is_some)
        && bfs_levels(&pred, 0).iter().all(Option::is_some)
}

/// The period is the gcd of `level(u) + 1 - level(v)` over all edges, with
/// BFS levels from state 0; the class of `v` is `level(v) mod d`.
pub fn period_and_cyclic_classes<T: Scalar>(p: &TransitionMatrix<T>) -> Result<CyclicStructure> {
    if !is_irreducible(p) {
        return Err(Error::NotIrreducible);
    }
    let succ = p.successors();
    let level: Vec<usize> = bfs_levels(&succ, 0).into_iter().map(Option::unwrap).collect();
    let mut d = 0usize;
    for (u, vs) in succ.iter().enumerate() {
        for &v in vs {
            let diff = (level[u] + 1).abs_diff(level[v]);
            d = d.gcd(&diff);
        }
    }
    // an irreducible chain has a cycle, so some difference is non-zero
    let d = d.max(1);
    let mut classes = vec![Vec::new(); d];
    for (v, &l) in level.iter().enumerate() {
        classes[l % d].push(v);
    }
    Ok(CyclicStructure { period: d, classes })
}
