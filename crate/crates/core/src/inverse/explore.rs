//! Search for achievable coalescence numbers over candidate supports.
//!
//! The coalescence number of a coupling depends only on its support, so each
//! candidate support is tested for exact realizability and, when realizable,
//! analysed exactly. Realizable supports are closed under union: the even
//! mixture of two witnesses has the union as support.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;

use itertools::Itertools;
use num_integer::binomial;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::membership::{membership, FunctionSet, SupportMode, DEFAULT_LP_CAP};
use crate::coalescence::{exact_coalescence_of_support, Limits};
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::measures::{for_each_product, independence_coupling_capped, FunctionMeasure, StateFunction};
use crate::scalar::{ratio, Rational, Scalar};

/// Largest maximal support for which every subset may be enumerated.
pub const EXHAUSTIVE_SUPPORT_CAP: usize = 30;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    /// Every subset of the maximal support up to the given size.
    ExhaustiveSmall { max_support_size: usize },
    /// An explicit list of supports.
    Candidates(Vec<FunctionSet>),
    /// Each trial keeps every function independently with a probability
    /// drawn uniformly for that trial.
    RandomSupports { trials: usize, seed: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExploreBudget {
    /// Candidate supports evaluated by LP.
    pub max_candidates: usize,
    /// Unions of realizable supports evaluated without LP.
    pub max_unions: usize,
    pub limits: Limits,
}

impl Default for ExploreBudget {
    fn default() -> Self {
        Self {
            max_candidates: 1_000_000,
            max_unions: 20_000,
            limits: Limits::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coverage {
    /// Every subset of the maximal support was tried.
    Exhaustive,
    /// Every subset up to this size was tried.
    UpToSize(usize),
    Candidates(usize),
    Partial { seed: u64, trials: usize },
    Truncated { evaluated: usize, total: u128 },
}

impl fmt::Display for Coverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coverage::Exhaustive => write!(f, "exhaustive"),
            Coverage::UpToSize(m) => write!(f, "exhaustive-up-to({m})"),
            Coverage::Candidates(c) => write!(f, "candidates({c})"),
            Coverage::Partial { seed, trials } => write!(f, "partial({seed}, {trials})"),
            Coverage::Truncated { evaluated, total } => write!(f, "truncated({evaluated}/{total})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplorerReport {
    pub k_values: BTreeSet<usize>,
    /// First witness found for each coalescence number.
    pub witnesses: BTreeMap<usize, FunctionMeasure<Rational>>,
    pub coverage: Coverage,
    /// Candidate supports tested, including unions.
    pub evaluated: usize,
    pub realizable: usize,
}

/// Functions using only positive transitions: the support of the
/// independence coupling.
pub fn maximal_support<T: Scalar>(p: &TransitionMatrix<T>) -> Result<FunctionSet> {
    let mut members = Vec::new();
    let choices = p.successors();
    let count = crate::measures::product_count(&choices).filter(|&c| c <= DEFAULT_LP_CAP);
    if count.is_none() {
        return Err(Error::CapExceeded {
            what: "maximal support".into(),
            cap: DEFAULT_LP_CAP,
        });
    }
    for_each_product(&choices, |image| members.push(StateFunction::new(image.to_vec()).expect("valid")));
    FunctionSet::new(p.n(), members)
}

/// All sets of `n` functions whose images at every state form a permutation
/// of the states: the realizable supports of size `n` for `P_n`.
pub fn latin_supports(n: usize) -> Result<Vec<FunctionSet>> {
    if n == 0 || n > 4 {
        return Err(Error::CapExceeded {
            what: "states for Latin supports".into(),
            cap: 4,
        });
    }
    let perms = (0..n).permutations(n).collect_vec();
    let sets = std::iter::repeat_n(perms.iter(), n - 1)
        .multi_cartesian_product()
        .map(|sigmas| {
            let members = (0..n)
                .map(|a| {
                    let image = std::iter::once(a).chain(sigmas.iter().map(|s| s[a])).collect();
                    StateFunction::new(image).expect("valid image")
                })
                .collect();
            FunctionSet::new(n, members).expect("same length")
        })
        .collect();
    Ok(sets)
}

struct Found {
    support: FunctionSet,
    witness: FunctionMeasure<Rational>,
    k: usize,
}

fn analyse(witness: FunctionMeasure<Rational>, limits: Limits) -> Result<Found> {
    let support: Vec<StateFunction> = witness.support().cloned().collect();
    let k = exact_coalescence_of_support(witness.n(), &support, limits)?.k;
    Ok(Found {
        support: FunctionSet::new(witness.n(), support)?,
        witness,
        k,
    })
}

fn evaluate(p: &TransitionMatrix<Rational>, g: &FunctionSet, limits: Limits) -> Result<Option<Found>> {
    let cert = membership(p, g, SupportMode::Exact)?;
    match cert.weights {
        Some(w) if cert.feasible => analyse(w, limits).map(Some),
        _ => Ok(None),
    }
}

fn subsets_up_to(g: &FunctionSet, max: usize) -> impl Iterator<Item = FunctionSet> + '_ {
    (1..=max.min(g.len())).flat_map(move |size| {
        g.members()
            .iter()
            .cloned()
            .combinations(size)
            .map(move |members| FunctionSet::new(g.n(), members).expect("same length"))
    })
}

/// Searches for coalescence numbers of couplings of `P`. The independence
/// coupling is always evaluated first.
pub fn explore_k<T: Scalar>(p: &TransitionMatrix<T>, budget: &ExploreBudget, strategy: &Strategy) -> Result<ExplorerReport> {
    if !T::is_exact() {
        return Err(Error::FloatModeRejected);
    }
    let rows: Vec<Vec<Rational>> = p.rows().map(|r| r.iter().map(|x| x.to_rational().expect("exact")).collect()).collect();
    let p = TransitionMatrix::new(rows)?;
    let gstar = maximal_support(&p)?;

    let (candidates, coverage): (Vec<FunctionSet>, Coverage) = match strategy {
        Strategy::ExhaustiveSmall { max_support_size } => {
            if gstar.len() > EXHAUSTIVE_SUPPORT_CAP {
                return Err(Error::CapExceeded {
                    what: "maximal support for exhaustive search".into(),
                    cap: EXHAUSTIVE_SUPPORT_CAP,
                });
            }
            let m = (*max_support_size).min(gstar.len());
            let total: u128 = (1..=m).map(|s| binomial(gstar.len() as u128, s as u128)).sum();
            let list = subsets_up_to(&gstar, m).take(budget.max_candidates).collect_vec();
            let coverage = if (list.len() as u128) < total {
                Coverage::Truncated { evaluated: list.len(), total }
            } else if m == gstar.len() {
                Coverage::Exhaustive
            } else {
                Coverage::UpToSize(m)
            };
            (list, coverage)
        }
        Strategy::Candidates(list) => {
            let list = list.iter().take(budget.max_candidates).cloned().collect_vec();
            let c = Coverage::Candidates(list.len());
            (list, c)
        }
        Strategy::RandomSupports { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut list = Vec::new();
            for _ in 0..(*trials).min(budget.max_candidates) {
                let q: f64 = rng.random();
                let members = gstar.members().iter().filter(|_| rng.random::<f64>() < q).cloned().collect_vec();
                if !members.is_empty() {
                    list.push(FunctionSet::new(p.n(), members)?);
                }
            }
            (list, Coverage::Partial { seed: *seed, trials: *trials })
        }
    };

    let mut found = vec![analyse(independence_coupling_capped(&p, DEFAULT_LP_CAP)?, budget.limits)?];
    let evaluated: Vec<Option<Found>> = candidates
        .par_iter()
        .map(|g| evaluate(&p, g, budget.limits))
        .collect::<Result<_>>()?;
    found.extend(evaluated.into_iter().flatten());

    let mut seen: HashSet<FunctionSet> = found.iter().map(|f| f.support.clone()).collect();
    let mut pairs = Vec::new();
    'outer: for a in 0..found.len() {
        for b in a + 1..found.len() {
            if pairs.len() >= budget.max_unions {
                break 'outer;
            }
            let u = found[a].support.union(&found[b].support);
            if seen.insert(u) {
                pairs.push((a, b));
            }
        }
    }
    let unions: Vec<Found> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let w = found[a].witness.mix(&found[b].witness, ratio(1, 2))?;
            analyse(w, budget.limits)
        })
        .collect::<Result<_>>()?;
    let union_count = unions.len();
    found.extend(unions);

    let mut witnesses = BTreeMap::new();
    for f in &found {
        witnesses.entry(f.k).or_insert_with(|| f.witness.clone());
    }
    Ok(ExplorerReport {
        k_values: witnesses.keys().copied().collect(),
        witnesses,
        coverage,
        evaluated: 1 + candidates.len() + union_count,
        realizable: found.len(),
    })
}
