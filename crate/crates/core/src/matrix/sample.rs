//! Random transition matrices: `p_ij = q_ij / Q_i` with `q_ij` iid uniform on
//! `(0, 1)` and `Q_i` the row sum.

use rand::distr::{Distribution as _, Open01};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::TransitionMatrix;
use crate::scalar::{rational_from_f64, Rational};

/// One draw, kept both as floats and as the exact rational normalization of
/// the same uniforms.
#[derive(Clone, Debug)]
pub struct RandomMatrixSample {
    pub float: TransitionMatrix<f64>,
    pub exact: TransitionMatrix<Rational>,
}

/// Draw one matrix from the stream `rng`.
pub fn sample_with_rng<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RandomMatrixSample {
    assert!(n >= 1, "state count must be positive");
    let q: Vec<f64> = (0..n * n).map(|_| Open01.sample(rng)).collect();
    let mut float = Vec::with_capacity(n * n);
    let mut exact = Vec::with_capacity(n * n);
    for row in q.chunks(n) {
        let total: f64 = row.iter().sum();
        float.extend(row.iter().map(|x| x / total));
        let qs: Vec<Rational> = row
            .iter()
            .map(|&x| rational_from_f64(x).expect("uniform draws are finite"))
            .collect();
        let total = qs.iter().fold(Rational::from_integer(0.into()), |a, b| a + b);
        exact.extend(qs.into_iter().map(|x| x / total.clone()));
    }
    RandomMatrixSample {
        float: TransitionMatrix::from_entries_unchecked(n, float),
        exact: TransitionMatrix::from_entries_unchecked(n, exact),
    }
}

fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Float-mode sample, a pure function of `(n, seed)`.
pub fn sample_random_matrix(n: usize, seed: u64) -> TransitionMatrix<f64> {
    sample_with_rng(n, &mut rng_for(seed)).float
}

/// The same draw as [`sample_random_matrix`], normalized exactly.
pub fn sample_random_matrix_exact(n: usize, seed: u64) -> TransitionMatrix<Rational> {
    sample_with_rng(n, &mut rng_for(seed)).exact
}
