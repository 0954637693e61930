//! Row-stochastic matrices, in exact or floating-point mode.

mod bvn;
mod graph;
mod sample;

pub use bvn::{bvn_decompose, BvnDecomposition};
pub use graph::{is_irreducible, period_and_cyclic_classes, CyclicStructure};
pub use sample::{sample_random_matrix, sample_random_matrix_exact, sample_with_rng, RandomMatrixSample};

use crate::error::{Error, Result};
use crate::scalar::{NumericPolicy, Rational, Scalar};

/// An `n x n` row-stochastic matrix. States are `0..n` internally and
/// `1..=n` in every external format.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix<T> {
    n: usize,
    entries: Vec<T>,
}

/// A probability vector over the states.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution<T> {
    pub weights: Vec<T>,
}

impl<T: Scalar> Distribution<T> {
    pub fn n(&self) -> usize {
        self.weights.len()
    }
}

/// Validate a raw square array with [`NumericPolicy::current`].
pub fn validate_stochastic<T: Scalar>(rows: Vec<Vec<T>>) -> Result<TransitionMatrix<T>> {
    TransitionMatrix::with_policy(rows, &NumericPolicy::current())
}

impl<T: Scalar> TransitionMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self> {
        validate_stochastic(rows)
    }

    /// Checks shape, non-negativity and unit row sums; the first offending
    /// row is named in the error.
    pub fn with_policy(rows: Vec<Vec<T>>, policy: &NumericPolicy) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    row: i + 1,
                    len: row.len(),
                    n,
                });
            }
            let mut sum = T::zero();
            for (j, x) in row.iter().enumerate() {
                if *x < T::zero() {
                    return Err(Error::NegativeEntry { row: i + 1, col: j + 1 });
                }
                sum = sum + x.clone();
            }
            if !sum.near(&T::one(), policy.stochastic_tol) {
                return Err(Error::RowSumNotOne {
                    row: i + 1,
                    sum: sum.to_string(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { n, entries })
    }

    /// Build without validation; callers guarantee stochasticity.
    pub(crate) fn from_entries_unchecked(n: usize, entries: Vec<T>) -> Self {
        debug_assert_eq!(entries.len(), n * n);
        Self { n, entries }
    }

    /// `P_n`: every entry `1/n`.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        let w = T::one() / T::from_usize(n);
        Ok(Self::from_entries_unchecked(n, vec![w; n * n]))
    }

    /// 0/1 matrix of a map `i -> image[i]` (0-based).
    pub fn from_map(image: &[usize]) -> Result<Self> {
        let n = image.len();
        if n == 0 {
            return Err(Error::Empty);
        }
        let mut entries = vec![T::zero(); n * n];
        for (i, &j) in image.iter().enumerate() {
            if j >= n {
                return Err(Error::OutOfRangeSymbol {
                    symbol: (j + 1).to_string(),
                    n,
                });
            }
            entries[i * n + j] = T::one();
        }
        Ok(Self::from_entries_unchecked(n, entries))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.entries.chunks(self.n)
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    /// Successor lists of the transition graph `{(i, j) : p_ij > 0}`.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        self.rows()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, x)| **x > T::zero())
                    .map(|(j, _)| j)
                    .collect()
            })
            .collect()
    }

    pub fn to_f64(&self) -> TransitionMatrix<f64> {
        TransitionMatrix::from_entries_unchecked(
            self.n,
            self.entries.iter().map(Scalar::to_f64).collect(),
        )
    }

    /// Rows whose entries are not all in `{0, 1}`.
    pub fn fractional_rows(&self) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| {
                self.row(i)
                    .iter()
                    .any(|x| *x > T::zero() && *x < T::one())
            })
            .collect()
    }

    pub fn column_sums(&self) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                (0..self.n).fold(T::zero(), |acc, i| acc + self.get(i, j).clone())
            })
            .collect()
    }

    /// Column sums also equal 1 (same tolerance rule as the rows).
    pub fn check_doubly_stochastic(&self, policy: &NumericPolicy) -> Result<()> {
        for (j, s) in self.column_sums().into_iter().enumerate() {
            if !s.near(&T::one(), policy.stochastic_tol) {
                return Err(Error::NotDoublyStochastic {
                    col: j + 1,
                    sum: s.to_string(),
                });
            }
        }
        Ok(())
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.check_doubly_stochastic(&NumericPolicy::current()).is_ok()
    }

    /// Entrywise equality under the mode's tolerance rule.
    pub fn near(&self, other: &Self, tol: f64) -> bool {
        self.n == other.n
            && self
                .entries
                .iter()
                .zip(&other.entries)
                .all(|(a, b)| a.near(b, tol))
    }

    /// Row vector times matrix.
    pub fn left_multiply(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| {
                (0..self.n).fold(T::zero(), |acc, i| {
                    acc + v[i].clone() * self.get(i, j).clone()
                })
            })
            .collect()
    }

    /// Unique `pi` with `pi P = pi`, `sum pi = 1`.
    pub fn invariant_distribution(&self) -> Result<Distribution<T>> {
        self.invariant_distribution_with(&NumericPolicy::current())
    }

    pub fn invariant_distribution_with(&self, policy: &NumericPolicy) -> Result<Distribution<T>> {
        if !self.is_irreducible() {
            return Err(Error::NotIrreducible);
        }
        let n = self.n;
        // Balance equations for columns 0..n-1, normalization replaces the last.
        let mut system: Vec<Vec<T>> = (0..n)
            .map(|j| {
                let mut eq: Vec<T> = (0..n)
                    .map(|i| {
                        let mut a = self.get(i, j).clone();
                        if i == j {
                            a = a - T::one();
                        }
                        a
                    })
                    .collect();
                eq.push(T::zero());
                eq
            })
            .collect();
        system[n - 1] = vec![T::one(); n + 1];
        let weights = solve_linear(system).ok_or(Error::NotIrreducible)?;

        let residual = self
            .left_multiply(&weights)
            .iter()
            .zip(&weights)
            .map(|(a, b)| (a.clone() - b.clone()).to_f64().abs())
            .fold(0.0, f64::max);
        if T::is_exact() && residual != 0.0 || residual > policy.residual_tol {
            return Err(Error::SelfTestFailed(format!(
                "invariant distribution residual {residual:e}"
            )));
        }
        Ok(Distribution { weights })
    }

    pub fn is_irreducible(&self) -> bool {
        is_irreducible(self)
    }

    pub fn period_and_cyclic_classes(&self) -> Result<CyclicStructure> {
        period_and_cyclic_classes(self)
    }

    pub fn bvn_decompose(&self) -> Result<BvnDecomposition<T>> {
        bvn_decompose(self)
    }
}

impl TransitionMatrix<Rational> {
    /// Exact rows from `(numerator, denominator)` pairs.
    pub fn from_ratios(rows: &[Vec<(i64, i64)>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|&(p, q)| crate::scalar::ratio(p, q)).collect())
                .collect(),
        )
    }
}

/// Gaussian elimination on an augmented square system; `None` if singular.
pub(crate) fn solve_linear<T: Scalar>(mut a: Vec<Vec<T>>) -> Option<Vec<T>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !a[r][col].is_zero())
            .max_by(|&r, &s| {
                // ties resolve to the earliest row
                a[r][col]
                    .magnitude()
                    .partial_cmp(&a[s][col].magnitude())
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(s.cmp(&r))
            })?;
        if T::MODE == crate::scalar::Mode::Float && a[pivot][col].magnitude() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for x in a[col].iter_mut() {
            *x = x.clone() / p.clone();
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let factor = a[r][col].clone();
                for c in col..=n {
                    let delta = factor.clone() * a[col][c].clone();
                    a[r][c] = a[r][c].clone() - delta;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n].clone()).collect())
}
