//! Bounds on the largest coalescence number over couplings of `P`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::TransitionMatrix;
use crate::scalar::{NumericPolicy, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KmaxBounds {
    /// The period, attained by the independence coupling.
    pub lower: usize,
    pub upper: usize,
}

/// Smallest `m >= 1` with `m * x > 1`, or `None` if none up to `limit`.
fn first_exceeding<T: Scalar>(x: &T, limit: usize, tol: f64) -> Option<usize> {
    (1..=limit).find(|&m| (T::from_usize(m) * x.clone() - T::one()).is_positive_within(tol))
}

/// Each limit class carries stationary mass at least `π_s` for every state
/// `s` it must contain, so `k <= floor(1 / π_s)`; a column whose off-diagonal
/// entries are all at least `c` forces `k <= floor(1 / c) + 1`.
pub fn kmax_upper_bounds<T: Scalar>(p: &TransitionMatrix<T>) -> Result<KmaxBounds> {
    let policy = NumericPolicy::current();
    let n = p.n();
    let pi = p.invariant_distribution()?;
    let lower = p.period_and_cyclic_classes()?.period;
    let tol = policy.residual_tol;

    let mut upper = n;
    for s in 0..n {
        if let Some(m) = first_exceeding(&pi.weights[s], n + 1, tol) {
            upper = upper.min(m - 1);
        }
        if n >= 2 {
            let c = (0..n)
                .filter(|&i| i != s)
                .map(|i| p.get(i, s).clone())
                .reduce(|a, b| if b < a { b } else { a })
                .expect("n >= 2");
            if c.is_positive_within(tol) {
                if let Some(m) = first_exceeding(&c, n + 1, tol) {
                    upper = upper.min(m);
                }
            }
        }
    }
    Ok(KmaxBounds {
        lower,
        upper: upper.max(lower),
    })
}
