//! Exact coalescence analysis by breadth-first search over the multichain.
//!
//! The multichain state is the vector `z = (X^1_t, ..., X^n_t)`, started at
//! the identity and updated by `z <- f ∘ z` for `f` in the support. Its
//! number of distinct entries never increases. Because the coalescence
//! number `k(μ)` is almost surely constant, the minimum distinct count over
//! the reachable set equals `k(μ)`: a state reachable with positive
//! probability from which the count could not reach that minimum would give
//! a different number of classes with positive probability. Once a state
//! attains the minimum, every support function is injective on its values
//! for all time, so its equality pattern is final. The achievable limit
//! partitions are therefore exactly the equality patterns of reachable
//! states with `k` distinct entries.

use std::collections::{BTreeSet, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{FunctionMeasure, StateFunction};
use crate::partition::Partition;
use crate::scalar::Scalar;

pub const DEFAULT_STATE_BUDGET: usize = 10_000_000;

/// Resource limits for the exact analyses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    /// Maximum number of multichain states visited.
    pub state_budget: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            state_budget: DEFAULT_STATE_BUDGET,
        }
    }
}

/// Result of [`exact_coalescence`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoalescenceReport {
    pub k: usize,
    pub deterministic: bool,
    /// Achievable limit partitions, each with `k` blocks, sorted.
    #[serde(with = "partition_list")]
    pub limit_partitions: Vec<Partition>,
    /// Number of multichain states explored.
    pub reachable_census: usize,
}

impl CoalescenceReport {
    /// Block sizes of each limit partition, sorted descending.
    pub fn block_size_multisets(&self) -> Vec<Vec<usize>> {
        self.limit_partitions
            .iter()
            .map(|p| {
                let mut sizes = p.block_sizes();
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                sizes
            })
            .collect()
    }

    /// Whether all limit partitions share one multiset of block sizes.
    pub fn block_sizes_agree(&self) -> bool {
        let sizes = self.block_size_multisets();
        sizes.windows(2).all(|w| w[0] == w[1])
    }
}

pub(crate) mod partition_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::partition::Partition;

    pub fn serialize<S: Serializer>(parts: &[Partition], s: S) -> Result<S::Ok, S::Error> {
        parts
            .iter()
            .map(Partition::to_one_based)
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Partition>, D::Error> {
        let raw: Vec<Vec<Vec<usize>>> = Vec::deserialize(d)?;
        raw.into_iter()
            .map(|blocks| {
                let n = blocks.iter().map(Vec::len).sum();
                Partition::from_one_based(n, &blocks).map_err(serde::de::Error::custom)
            })
            .collect()
    }
}

/// Strong connectivity of the graph with edges `(i, f(i))`, `f` in the
/// support; this is the positivity pattern of the push-forward matrix.
pub fn support_is_irreducible(n: usize, support: &[StateFunction]) -> bool {
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for f in support {
        for i in 0..n {
            succ[i].push(f.apply(i));
            pred[f.apply(i)].push(i);
        }
    }
    let reach = |adj: &Vec<Vec<usize>>| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut stack = vec![0];
        while let Some(u) = stack.pop() {
            for &v in &adj[u] {
                if !std::mem::replace(&mut seen[v], true) {
                    stack.push(v);
                }
            }
        }
        seen.iter().all(|&x| x)
    };
    n > 0 && reach(&succ) && reach(&pred)
}

fn distinct_count(z: &[u16], scratch: &mut [bool]) -> usize {
    let mut count = 0;
    for &x in z {
        if !std::mem::replace(&mut scratch[x as usize], true) {
            count += 1;
        }
    }
    for &x in z {
        scratch[x as usize] = false;
    }
    count
}

pub fn exact_coalescence<T: Scalar>(mu: &FunctionMeasure<T>) -> Result<CoalescenceReport> {
    exact_coalescence_with(mu, Limits::default())
}

pub fn exact_coalescence_with<T: Scalar>(
    mu: &FunctionMeasure<T>,
    limits: Limits,
) -> Result<CoalescenceReport> {
    let support: Vec<StateFunction> = mu.support().cloned().collect();
    exact_coalescence_of_support(mu.n(), &support, limits)
}

/// [`exact_coalescence`] for a bare support; only the support matters.
pub fn exact_coalescence_of_support(
    n: usize,
    support: &[StateFunction],
    limits: Limits,
) -> Result<CoalescenceReport> {
    if support.is_empty() {
        return Err(Error::InvalidMeasure("empty support".into()));
    }
    if n > u16::MAX as usize {
        return Err(Error::CapExceeded {
            what: "state count".into(),
            cap: u16::MAX as usize,
        });
    }
    if !support_is_irreducible(n, support) {
        return Err(Error::NotIrreducible);
    }
    let maps: Vec<Vec<u16>> = support
        .iter()
        .map(|f| f.image().iter().map(|&j| j as u16).collect())
        .collect();

    let start: Vec<u16> = (0..n as u16).collect();
    let mut seen: HashSet<Vec<u16>> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut scratch = vec![false; n];
    let mut k = n;
    let mut minimal: Vec<Vec<u16>> = Vec::new();

    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(z) = queue.pop_front() {
        let c = distinct_count(&z, &mut scratch);
        if c < k {
            k = c;
            minimal.clear();
        }
        if c == k {
            minimal.push(z.clone());
        }
        for f in &maps {
            let next: Vec<u16> = z.iter().map(|&x| f[x as usize]).collect();
            if !seen.contains(&next) {
                if seen.len() >= limits.state_budget {
                    return Err(Error::StateBudgetExceeded {
                        budget: limits.state_budget,
                    });
                }
                seen.insert(next.clone());
                queue.push_back(next);
            }
        }
    }

    let limit_partitions: BTreeSet<Partition> = minimal
        .iter()
        .map(|z| Partition::from_labels(z))
        .collect();
    Ok(CoalescenceReport {
        k,
        deterministic: limit_partitions.len() == 1,
        limit_partitions: limit_partitions.into_iter().collect(),
        reachable_census: seen.len(),
    })
}

/// Whether chains started at `i` and `j` can meet: the diagonal is reachable
/// in the pair chain on `S x S`.
pub fn pairwise_coalescence_possible<T: Scalar>(mu: &FunctionMeasure<T>, i: usize, j: usize) -> bool {
    let support: Vec<StateFunction> = mu.support().cloned().collect();
    pairwise_coalescence_of_support(mu.n(), &support, i, j)
}

pub fn pairwise_coalescence_of_support(n: usize, support: &[StateFunction], i: usize, j: usize) -> bool {
    let mut seen = vec![false; n * n];
    let mut stack = vec![(i, j)];
    seen[i * n + j] = true;
    while let Some((a, b)) = stack.pop() {
        if a == b {
            return true;
        }
        for f in support {
            let (x, y) = (f.apply(a), f.apply(b));
            if !std::mem::replace(&mut seen[x * n + y], true) {
                stack.push((x, y));
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::independence_coupling;
    use crate::matrix::TransitionMatrix;
    use crate::scalar::{ratio, Rational};

    fn uniform(n: usize, fs: &[&str]) -> FunctionMeasure<Rational> {
        FunctionMeasure::uniform(
            n,
            fs.iter().map(|s| StateFunction::parse(s, n).unwrap()).collect(),
        )
        .unwrap()
    }

    fn parts(n: usize, ps: &[&[&[usize]]]) -> Vec<Partition> {
        let mut v: Vec<Partition> = ps
            .iter()
            .map(|blocks| {
                Partition::from_one_based(n, &blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>())
                    .unwrap()
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn random_classes_of_four_functions() {
        let mu = uniform(4, &["(1212)", "(1221)", "(3434)", "(3443)"]);
        let rep = exact_coalescence(&mu).unwrap();
        assert_eq!(rep.k, 2);
        assert!(!rep.deterministic);
        assert_eq!(
            rep.limit_partitions,
            parts(4, &[&[&[1, 3], &[2, 4]], &[&[1, 4], &[2, 3]]])
        );
        assert!(rep.block_sizes_agree());
    }

    #[test]
    fn permutation_pair_never_coalesces() {
        let mu_f = uniform(4, &["(1234)", "(3421)"]);
        let rep = exact_coalescence(&mu_f).unwrap();
        assert_eq!(rep.k, 4);
        assert!(rep.deterministic);
        assert_eq!(rep.limit_partitions, vec![Partition::singletons(4)]);
    }

    #[test]
    fn non_constant_classes_of_mu_g() {
        let mu_g = uniform(4, &["(3434)", "(1221)"]);
        let rep = exact_coalescence(&mu_g).unwrap();
        assert_eq!(rep.k, 2);
        assert!(!rep.deterministic);
        assert_eq!(
            rep.limit_partitions,
            parts(4, &[&[&[1, 3], &[2, 4]], &[&[1, 4], &[2, 3]]])
        );
        assert!(pairwise_coalescence_possible(&mu_g, 0, 2));
        assert!(!pairwise_coalescence_possible(&mu_g, 0, 1));
        assert!(pairwise_coalescence_possible(&mu_g, 1, 1));
    }

    #[test]
    fn two_cycle_has_cyclic_classes() {
        let swap = TransitionMatrix::<Rational>::from_map(&[1, 0]).unwrap();
        let rep = exact_coalescence(&independence_coupling(&swap).unwrap()).unwrap();
        assert_eq!(rep.k, 2);
        assert_eq!(rep.limit_partitions, vec![Partition::singletons(2)]);
    }

    #[test]
    fn budget_and_irreducibility_errors() {
        let p = TransitionMatrix::<Rational>::uniform(3).unwrap();
        let mu = independence_coupling(&p).unwrap();
        assert_eq!(
            exact_coalescence_with(&mu, Limits { state_budget: 3 }).unwrap_err(),
            Error::StateBudgetExceeded { budget: 3 }
        );
        let id = FunctionMeasure::<Rational>::dirac(StateFunction::identity(2));
        assert_eq!(exact_coalescence(&id).unwrap_err(), Error::NotIrreducible);
        let _ = ratio(1, 1);
    }

    #[test]
    fn report_json_shape() {
        let mu = uniform(4, &["(1212)", "(1221)", "(3434)", "(3443)"]);
        let rep = exact_coalescence(&mu).unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["k"], 2);
        assert_eq!(json["deterministic"], false);
        assert_eq!(
            json["limit_partitions"],
            serde_json::json!([[[1, 3], [2, 4]], [[1, 4], [2, 3]]])
        );
        let back: CoalescenceReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, rep);
    }
}
