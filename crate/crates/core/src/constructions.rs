//! Explicit couplings: product measures over block permutations, universal
//! block measures, and block and non-block measures for the uniform matrix.

use std::collections::BTreeMap;

use itertools::Itertools;

use crate::coalescence::{exact_coalescence, pairwise_coalescence_possible};
use crate::error::{Error, Result};
use crate::lumpability::necessary_conditions_check;
use crate::matrix::{BvnDecomposition, TransitionMatrix};
use crate::measures::{for_each_product, product_count, FunctionMeasure, StateFunction, DEFAULT_SUPPORT_CAP};
use crate::partition::Partition;
use crate::scalar::{NumericPolicy, Scalar};

/// A probability measure on permutations of `0..ell`.
#[derive(Clone, Debug, PartialEq)]
pub struct PermutationMixture<T> {
    ell: usize,
    terms: Vec<(T, Vec<usize>)>,
}

impl<T: Scalar> PermutationMixture<T> {
    pub fn new(ell: usize, terms: Vec<(T, Vec<usize>)>) -> Result<Self> {
        let tol = NumericPolicy::current().stochastic_tol;
        let mut total = T::zero();
        for (w, perm) in &terms {
            let mut sorted = perm.clone();
            sorted.sort_unstable();
            if sorted != (0..ell).collect::<Vec<_>>() {
                return Err(Error::PreconditionFailed(format!("{perm:?} is not a permutation of {ell} symbols")));
            }
            if !w.is_positive_within(0.0) {
                return Err(Error::PreconditionFailed("mixture weights must be positive".into()));
            }
            total = total + w.clone();
        }
        if terms.is_empty() || !total.near(&T::one(), tol) {
            return Err(Error::PreconditionFailed(format!("mixture weights sum to {total}")));
        }
        Ok(Self { ell, terms })
    }

    pub fn from_bvn(ell: usize, d: &BvnDecomposition<T>) -> Result<Self> {
        Self::new(ell, d.terms.clone())
    }

    pub fn uniform(ell: usize, perms: Vec<Vec<usize>>) -> Result<Self> {
        let w = T::one() / T::from_usize(perms.len().max(1));
        Self::new(ell, perms.into_iter().map(|p| (w.clone(), p)).collect())
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn terms(&self) -> &[(T, Vec<usize>)] {
        &self.terms
    }

    /// `sum weight * PermMatrix(perm)`.
    pub fn to_matrix(&self) -> Vec<Vec<T>> {
        BvnDecomposition { terms: self.terms.clone() }.reconstruct(self.ell)
    }
}

/// The block matrix, if `P` meets the conditions every block measure needs.
fn block_matrix_for_product<T: Scalar>(p: &TransitionMatrix<T>, blocks: &Partition) -> Result<TransitionMatrix<T>> {
    let nc = necessary_conditions_check(p, blocks)?;
    if !nc.constant_rows {
        return Err(Error::PreconditionFailed("block row sums are not constant".into()));
    }
    if !nc.lambda_doubly_stochastic {
        return Err(Error::PreconditionFailed("block matrix is not doubly stochastic".into()));
    }
    if !nc.lambda_irreducible {
        return Err(Error::PreconditionFailed("block matrix is not irreducible".into()));
    }
    Ok(nc.lambda.expect("lumpable"))
}

/// For each term `pi`, rows of block `r` move independently into block
/// `pi(r)` with probabilities `p_ij / lambda_{r, pi(r)}`; the atom weight is
/// `rho(pi)` times the product of those conditionals.
pub fn product_measure<T: Scalar>(
    p: &TransitionMatrix<T>,
    blocks: &Partition,
    rho: &PermutationMixture<T>,
) -> Result<FunctionMeasure<T>> {
    let lambda = block_matrix_for_product(p, blocks)?;
    let ell = blocks.len();
    if rho.ell() != ell {
        return Err(Error::PreconditionFailed(format!(
            "mixture acts on {} symbols, partition has {ell} blocks",
            rho.ell()
        )));
    }
    let tol = NumericPolicy::current().stochastic_tol;
    let mixed = rho.to_matrix();
    for r in 0..ell {
        for s in 0..ell {
            if !mixed[r][s].near(lambda.get(r, s), tol) {
                return Err(Error::PreconditionFailed(format!(
                    "mixture does not reproduce the block matrix at ({}, {})",
                    r + 1,
                    s + 1
                )));
            }
        }
    }

    let n = p.n();
    let idx = blocks.block_index();
    let mut weights: BTreeMap<StateFunction, T> = BTreeMap::new();
    for (w, pi) in rho.terms() {
        let choices: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                blocks.blocks()[pi[idx[i]]]
                    .iter()
                    .copied()
                    .filter(|&j| p.get(i, j).is_positive_within(tol))
                    .collect()
            })
            .collect();
        match product_count(&choices) {
            Some(c) if c + weights.len() <= DEFAULT_SUPPORT_CAP => {}
            _ => return Err(Error::SupportTooLarge { cap: DEFAULT_SUPPORT_CAP }),
        }
        let cond: Vec<T> = (0..n)
            .map(|i| lambda.get(idx[i], pi[idx[i]]).clone())
            .collect();
        for_each_product(&choices, |image| {
            let weight = image.iter().enumerate().fold(w.clone(), |acc, (i, &j)| {
                acc * (p.get(i, j).clone() / cond[i].clone())
            });
            let f = StateFunction::new(image.to_vec()).expect("valid image");
            let slot = weights.entry(f).or_insert_with(T::zero);
            *slot = slot.clone() + weight;
        });
    }
    FunctionMeasure::from_weights(n, weights)
}

/// [`product_measure`] with the mixture taken from the Birkhoff–von Neumann
/// decomposition of the block matrix.
pub fn product_measure_bvn<T: Scalar>(p: &TransitionMatrix<T>, blocks: &Partition) -> Result<FunctionMeasure<T>> {
    let lambda = block_matrix_for_product(p, blocks)?;
    let rho = PermutationMixture::from_bvn(blocks.len(), &lambda.bvn_decompose()?)?;
    product_measure(p, blocks, &rho)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductBlockVerdict<T> {
    /// Every pair in the first block can meet.
    pub is_block: bool,
    pub k: usize,
    pub measure: FunctionMeasure<T>,
}

/// The product measure has `k = ell` exactly when every pair of states in
/// the first block coalesces with positive probability. Both sides are
/// computed; disagreement is reported as [`Error::SelfTestFailed`].
pub fn verify_product_block<T: Scalar>(
    p: &TransitionMatrix<T>,
    blocks: &Partition,
    rho: &PermutationMixture<T>,
) -> Result<ProductBlockVerdict<T>> {
    let mu = product_measure(p, blocks, rho)?;
    let first = &blocks.blocks()[0];
    let pairwise = first
        .iter()
        .tuple_combinations()
        .all(|(&i, &j)| pairwise_coalescence_possible(&mu, i, j));
    let k = exact_coalescence(&mu)?.k;
    if pairwise != (k == blocks.len()) {
        return Err(Error::SelfTestFailed(format!(
            "pairwise coalescence in the first block is {pairwise} but k = {k} with {} blocks",
            blocks.len()
        )));
    }
    Ok(ProductBlockVerdict {
        is_block: pairwise,
        k,
        measure: mu,
    })
}

/// Uniform measure on every function that is constant on each block and
/// maps the blocks by a permutation of block indices.
pub fn universal_block_measure<T: Scalar>(blocks: &Partition) -> Result<FunctionMeasure<T>> {
    let n = blocks.n();
    let ell = blocks.len();
    let mut functions = Vec::new();
    for pi in (0..ell).permutations(ell) {
        let per_block = pi.iter().map(|&s| blocks.blocks()[s].clone()).collect_vec();
        if functions.len() + product_count(&per_block).unwrap_or(usize::MAX) > DEFAULT_SUPPORT_CAP {
            return Err(Error::SupportTooLarge { cap: DEFAULT_SUPPORT_CAP });
        }
        for_each_product(&per_block, |values| {
            let mut image = vec![0; n];
            for (r, b) in blocks.blocks().iter().enumerate() {
                for &i in b {
                    image[i] = values[r];
                }
            }
            functions.push(StateFunction::new(image).expect("valid image"));
        });
    }
    FunctionMeasure::uniform(n, functions)
}

/// `(pi h)[o] = h[pi(o)]`.
fn permute(pi: &[usize], h: &[usize]) -> Vec<usize> {
    pi.iter().map(|&o| h[o]).collect()
}

/// Uniform measure on `f_{i,j} = (h_{i,j} | pi^i_2 h_{i,j} | ... | pi^i_b h_{i,j})`,
/// where `h_{i,j}` is block `i` rotated left `j - 1` times.
fn rotation_family<T: Scalar>(n: usize, ell: usize, pis: &[Vec<Vec<usize>>]) -> Result<FunctionMeasure<T>> {
    let b = n / ell;
    let mut functions = Vec::with_capacity(n);
    for (i, pi_vec) in pis.iter().enumerate() {
        let block: Vec<usize> = (i * ell..(i + 1) * ell).collect();
        for j in 0..ell {
            let mut h = block.clone();
            h.rotate_left(j);
            let mut image = h.clone();
            for pi in pi_vec.iter().take(b - 1) {
                image.extend(permute(pi, &h));
            }
            functions.push(StateFunction::new(image).expect("valid image"));
        }
    }
    FunctionMeasure::uniform(n, functions)
}

/// A block measure for the uniform matrix `P_n` with `ell` classes
/// `{j, ell + j, 2 ell + j, ...}`. With `ell = n` it is uniform on the `n`
/// cyclic rotations.
pub fn pn_block_measure<T: Scalar>(n: usize, ell: usize) -> Result<FunctionMeasure<T>> {
    if n == 0 || ell == 0 || n % ell != 0 {
        return Err(Error::NotADivisor { n, ell });
    }
    let b = n / ell;
    let identity: Vec<usize> = (0..ell).collect();
    let pis = vec![vec![identity; b - 1]; b];
    rotation_family(n, ell, &pis)
}

/// The classes `{j, ell + j, ...}` produced by [`pn_block_measure`].
pub fn pn_block_classes(n: usize, ell: usize) -> Result<Partition> {
    if n == 0 || ell == 0 || n % ell != 0 {
        return Err(Error::NotADivisor { n, ell });
    }
    Ok(Partition::from_labels(&(0..n).map(|u| u % ell).collect_vec()))
}

/// A non-block measure for `P_n` with `ell` random classes. Uses the first
/// `b = n / ell` vectors of `b - 1` permutations in lexicographic order.
pub fn nonblock_measure<T: Scalar>(n: usize, ell: usize) -> Result<FunctionMeasure<T>> {
    if ell < 2 || n < 4 || n % ell != 0 || n / ell < 2 {
        return Err(Error::PreconditionFailed(format!(
            "need ell >= 2 dividing n >= 4 with n / ell >= 2, got n = {n}, ell = {ell}"
        )));
    }
    let b = n / ell;
    let perms = (0..ell).permutations(ell).collect_vec();
    let pis = std::iter::repeat_n(perms, b - 1)
        .multi_cartesian_product()
        .take(b)
        .collect_vec();
    rotation_family(n, ell, &pis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lumpability::block_measure_check;
    use crate::measures::is_consistent;
    use crate::scalar::{ratio, Rational};

    fn part(n: usize, blocks: &[&[usize]]) -> Partition {
        Partition::from_one_based(n, &blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn f(s: &str, n: usize) -> StateFunction {
        StateFunction::parse(s, n).unwrap()
    }

    #[test]
    fn product_measure_on_two_states() {
        let p = TransitionMatrix::<Rational>::uniform(2).unwrap();
        let rho = PermutationMixture::uniform(2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let mu = product_measure(&p, &Partition::singletons(2), &rho).unwrap();
        assert_eq!(
            mu.atoms(),
            &[(f("(12)", 2), ratio(1, 2)), (f("(21)", 2), ratio(1, 2))]
        );
        let swap = TransitionMatrix::<Rational>::from_map(&[1, 0]).unwrap();
        let point = PermutationMixture::new(2, vec![(ratio(1, 1), vec![1, 0])]).unwrap();
        let mu = product_measure(&swap, &Partition::singletons(2), &point).unwrap();
        assert_eq!(mu, FunctionMeasure::dirac(f("(21)", 2)));
        let v = verify_product_block(&swap, &Partition::singletons(2), &point).unwrap();
        assert!(v.is_block);
        assert_eq!(v.k, 2);
    }

    #[test]
    fn two_block_product_has_two_classes() {
        let p = TransitionMatrix::<Rational>::from_ratios(&[
            vec![(1, 4), (1, 4), (1, 2), (0, 1)],
            vec![(1, 4), (1, 4), (0, 1), (1, 2)],
            vec![(1, 2), (0, 1), (1, 4), (1, 4)],
            vec![(0, 1), (1, 2), (1, 4), (1, 4)],
        ])
        .unwrap();
        let blocks = part(4, &[&[1, 2], &[3, 4]]);
        let mu = product_measure_bvn(&p, &blocks).unwrap();
        assert!(is_consistent(&mu, &p).unwrap().consistent);
        let v = verify_product_block(
            &p,
            &blocks,
            &PermutationMixture::uniform(2, vec![vec![0, 1], vec![1, 0]]).unwrap(),
        )
        .unwrap();
        assert!(v.is_block);
        assert_eq!(v.k, 2);
        assert!(block_measure_check(&mu, &blocks).unwrap().is_block);
    }

    #[test]
    fn permutation_within_block_prevents_coalescence() {
        let p = TransitionMatrix::<Rational>::from_ratios(&[
            vec![(0, 1), (1, 2), (1, 2), (0, 1)],
            vec![(1, 2), (0, 1), (0, 1), (1, 2)],
            vec![(1, 2), (0, 1), (0, 1), (1, 2)],
            vec![(0, 1), (1, 2), (1, 2), (0, 1)],
        ])
        .unwrap();
        let blocks = part(4, &[&[1, 2], &[3, 4]]);
        let rho = PermutationMixture::uniform(2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let v = verify_product_block(&p, &blocks, &rho).unwrap();
        assert!(!v.is_block);
        assert_eq!(v.k, 4);
    }

    #[test]
    fn product_preconditions() {
        let q = TransitionMatrix::<Rational>::from_ratios(&[
            vec![(1, 4), (1, 4), (1, 2)],
            vec![(0, 1), (1, 2), (1, 2)],
            vec![(1, 2), (1, 2), (0, 1)],
        ])
        .unwrap();
        let rho = PermutationMixture::uniform(2, vec![vec![0, 1], vec![1, 0]]).unwrap();
        let err = product_measure(&q, &part(3, &[&[1, 2], &[3]]), &rho).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed(m) if m.contains("doubly")));
        let p = TransitionMatrix::<Rational>::uniform(2).unwrap();
        let wrong = PermutationMixture::new(2, vec![(ratio(1, 1), vec![0, 1])]).unwrap();
        assert!(matches!(
            product_measure(&p, &Partition::singletons(2), &wrong),
            Err(Error::PreconditionFailed(_))
        ));
    }

    #[test]
    fn universal_measures() {
        let blocks = part(5, &[&[1, 2], &[3, 4, 5]]);
        let mu = universal_block_measure::<Rational>(&blocks).unwrap();
        assert_eq!(mu.len(), 12);
        assert!(mu.weight_of(&f("(11333)", 5)).is_some());
        assert!(mu.weight_of(&f("(33111)", 5)).is_some());
        assert!(mu.push_forward().rows().all(|r| r.iter().all(|x| *x > ratio(0, 1))));
        assert!(block_measure_check(&mu, &blocks).unwrap().is_block);

        let two = universal_block_measure::<Rational>(&Partition::singletons(2)).unwrap();
        assert_eq!(two.atoms(), &[(f("(12)", 2), ratio(1, 2)), (f("(21)", 2), ratio(1, 2))]);
        let whole = universal_block_measure::<Rational>(&Partition::whole(3)).unwrap();
        assert!(whole.len() == 3 && whole.support().all(StateFunction::is_constant));
    }

    #[test]
    fn pn_block_family() {
        let mu = pn_block_measure::<Rational>(4, 2).unwrap();
        let p4 = TransitionMatrix::<Rational>::uniform(4).unwrap();
        assert!(is_consistent(&mu, &p4).unwrap().consistent);
        let rep = exact_coalescence(&mu).unwrap();
        assert_eq!(rep.k, 2);
        assert!(rep.deterministic);
        assert_eq!(rep.limit_partitions, vec![part(4, &[&[1, 3], &[2, 4]])]);
        assert_eq!(pn_block_classes(4, 2).unwrap(), part(4, &[&[1, 3], &[2, 4]]));

        assert_eq!(exact_coalescence(&pn_block_measure::<Rational>(3, 1).unwrap()).unwrap().k, 1);
        let rep = exact_coalescence(&pn_block_measure::<Rational>(6, 3).unwrap()).unwrap();
        assert_eq!((rep.k, rep.deterministic), (3, true));
        let rot = pn_block_measure::<Rational>(3, 3).unwrap();
        assert!(rot.support().all(StateFunction::is_permutation));
        assert_eq!(exact_coalescence(&rot).unwrap().k, 3);
        assert_eq!(pn_block_measure::<Rational>(6, 4).unwrap_err(), Error::NotADivisor { n: 6, ell: 4 });
    }

    #[test]
    fn nonblock_family() {
        let mu = nonblock_measure::<Rational>(6, 2).unwrap();
        assert_eq!(mu.len(), 6);
        assert_eq!(mu.push_forward(), TransitionMatrix::uniform(6).unwrap());
        let rep = exact_coalescence(&mu).unwrap();
        assert_eq!(rep.k, 2);
        assert!(!rep.deterministic);
        assert!(rep.limit_partitions.contains(&part(6, &[&[1, 3, 5], &[2, 4, 6]])));
        assert!(rep.limit_partitions.contains(&part(6, &[&[1, 3, 6], &[2, 4, 5]])));

        let rep = exact_coalescence(&nonblock_measure::<Rational>(4, 2).unwrap()).unwrap();
        let s = part(4, &[&[1, 2], &[3, 4]]);
        assert!(rep.k == 2 && rep.limit_partitions.len() >= 2);
        assert!(rep.limit_partitions.iter().all(|c| c.is_transversal_of(&s)));

        for (n, ell) in [(4, 4), (4, 1), (6, 4), (2, 2)] {
            assert!(matches!(nonblock_measure::<Rational>(n, ell), Err(Error::PreconditionFailed(_))));
        }
    }
}
