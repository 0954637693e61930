//! Whether `P` is realizable by a coupling supported inside a function set.

use num_traits::{One, Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::simplex::{maximize, LpOutcome};
use crate::error::{Error, Result};
use crate::matrix::{sample_with_rng, TransitionMatrix};
use crate::measures::{FunctionMeasure, StateFunction};
use crate::scalar::{Rational, Scalar};

pub const DEFAULT_LP_CAP: usize = 100_000;

/// A finite set of functions on `0..n`, sorted and without repeats.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FunctionSet {
    n: usize,
    members: Vec<StateFunction>,
}

impl FunctionSet {
    pub fn new(n: usize, mut members: Vec<StateFunction>) -> Result<Self> {
        if let Some(f) = members.iter().find(|f| f.n() != n) {
            return Err(Error::BadLength { expected: n, found: f.n() });
        }
        members.sort();
        members.dedup();
        Ok(Self { n, members })
    }

    /// All `n^n` functions.
    pub fn all(n: usize) -> Result<Self> {
        let total = n.checked_pow(n as u32).filter(|&t| t <= DEFAULT_LP_CAP).ok_or(Error::CapExceeded {
            what: "functions".into(),
            cap: DEFAULT_LP_CAP,
        })?;
        let members = (0..total)
            .map(|mut code| {
                let mut image = vec![0; n];
                for slot in image.iter_mut().rev() {
                    *slot = code % n;
                    code /= n;
                }
                StateFunction::new(image).expect("valid image")
            })
            .collect();
        Ok(Self { n, members })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn members(&self) -> &[StateFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, f: &StateFunction) -> bool {
        self.members.binary_search(f).is_ok()
    }

    pub fn without(&self, f: &StateFunction) -> Self {
        Self {
            n: self.n,
            members: self.members.iter().filter(|g| *g != f).cloned().collect(),
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut members = self.members.clone();
        members.extend(other.members.iter().cloned());
        members.sort();
        members.dedup();
        Self { n: self.n, members }
    }
}

/// `f_{x,y}` sends `x` to `y` and fixes everything else; `x != y`.
pub fn family_fxy(n: usize) -> Result<FunctionSet> {
    if n < 2 {
        return Err(Error::PreconditionFailed("need at least 2 states".into()));
    }
    let mut members = Vec::with_capacity(n * (n - 1));
    for x in 0..n {
        for y in (0..n).filter(|&y| y != x) {
            let mut image: Vec<usize> = (0..n).collect();
            image[x] = y;
            members.push(StateFunction::new(image).expect("valid image"));
        }
    }
    FunctionSet::new(n, members)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportMode {
    /// Support contained in the set.
    Subset,
    /// Support equal to the set: every member gets positive weight.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpCertificate {
    pub feasible: bool,
    /// A witness coupling when feasible.
    pub weights: Option<FunctionMeasure<Rational>>,
    /// In exact-support mode, the largest achievable minimum weight.
    pub min_weight: Option<Rational>,
}

impl LpCertificate {
    fn infeasible(min_weight: Option<Rational>) -> Self {
        Self {
            feasible: false,
            weights: None,
            min_weight,
        }
    }
}

pub fn membership<T: Scalar>(p: &TransitionMatrix<T>, g: &FunctionSet, mode: SupportMode) -> Result<LpCertificate> {
    membership_capped(p, g, mode, DEFAULT_LP_CAP)
}

/// Solves `sum_{f(i) = j} alpha_f = p_ij`, `alpha >= 0` over `f` in `g`. In
/// exact mode writes `alpha_f = t + beta_f` and maximizes `t`.
pub fn membership_capped<T: Scalar>(
    p: &TransitionMatrix<T>,
    g: &FunctionSet,
    mode: SupportMode,
    cap: usize,
) -> Result<LpCertificate> {
    if !T::is_exact() {
        return Err(Error::FloatModeRejected);
    }
    if p.n() != g.n() {
        return Err(Error::DimensionMismatch { left: p.n(), right: g.n() });
    }
    if g.len() > cap {
        return Err(Error::CapExceeded {
            what: "LP variables".into(),
            cap,
        });
    }
    let n = p.n();
    let q: Vec<Vec<Rational>> = (0..n)
        .map(|i| p.row(i).iter().map(|x| x.to_rational().expect("exact mode")).collect())
        .collect();

    // functions using a zero transition can only carry zero weight
    let usable: Vec<&StateFunction> = g
        .members()
        .iter()
        .filter(|f| (0..n).all(|i| q[i][f.apply(i)].is_positive()))
        .collect();
    let exact = mode == SupportMode::Exact;
    if usable.is_empty() || (exact && usable.len() < g.len()) {
        return Ok(LpCertificate::infeasible(exact.then(Rational::zero)));
    }
    let mut covered = vec![false; n * n];
    for f in &usable {
        for i in 0..n {
            covered[i * n + f.apply(i)] = true;
        }
    }
    if (0..n * n).any(|c| !covered[c] && q[c / n][c % n].is_positive()) {
        return Ok(LpCertificate::infeasible(exact.then(Rational::zero)));
    }

    let offset = usize::from(exact);
    let nv = usable.len() + offset;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !covered[i * n + j] {
                continue;
            }
            let mut row = vec![Rational::zero(); nv];
            for (k, f) in usable.iter().enumerate() {
                if f.apply(i) == j {
                    row[k + offset] = Rational::one();
                    if exact {
                        row[0] += Rational::one();
                    }
                }
            }
            a.push(row);
            b.push(q[i][j].clone());
        }
    }
    let mut c = vec![Rational::zero(); nv];
    if exact {
        c[0] = Rational::one();
    }
    let (x, value) = match maximize(&a, &b, &c) {
        LpOutcome::Optimal { x, value } => (x, value),
        LpOutcome::Infeasible => return Ok(LpCertificate::infeasible(exact.then(Rational::zero))),
        LpOutcome::Unbounded => unreachable!("weights are bounded by the row sums"),
    };
    if exact && !value.is_positive() {
        return Ok(LpCertificate::infeasible(Some(value)));
    }
    let atoms = usable.iter().enumerate().map(|(k, f)| {
        let w = if exact { &x[0] + &x[k + 1] } else { x[k].clone() };
        ((*f).clone(), w)
    });
    let witness = FunctionMeasure::from_weights(n, atoms)?;
    Ok(LpCertificate {
        feasible: true,
        weights: Some(witness),
        min_weight: exact.then_some(value),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LebEstimate {
    pub estimate: f64,
    pub stderr: f64,
    pub hits: usize,
    pub samples: usize,
    pub seed: u64,
}

/// Fraction of random matrices (rows of iid uniforms, normalized) realizable
/// inside `g`, with its binomial standard error. Matrices are drawn from one
/// seeded stream and tested exactly.
pub fn estimate_leb_measure(g: &FunctionSet, samples: usize, seed: u64) -> Result<LebEstimate> {
    if samples == 0 {
        return Err(Error::PreconditionFailed("need at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let matrices: Vec<TransitionMatrix<Rational>> =
        (0..samples).map(|_| sample_with_rng(g.n(), &mut rng).exact).collect();
    let verdicts: Vec<bool> = matrices
        .par_iter()
        .map(|p| membership(p, g, SupportMode::Subset).map(|c| c.feasible))
        .collect::<Result<_>>()?;
    let hits = verdicts.iter().filter(|&&v| v).count();
    let est = hits as f64 / samples as f64;
    Ok(LebEstimate {
        estimate: est,
        stderr: (est * (1.0 - est) / samples as f64).sqrt(),
        hits,
        samples,
        seed,
    })
}
