//! Strong lumpability, block transition matrices and block measures.

use crate::coalescence::{exact_coalescence, CoalescenceReport};
use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::measures::{FunctionMeasure, StateFunction};
use crate::partition::Partition;
use crate::scalar::{NumericPolicy, Scalar};

pub const DEFAULT_ENUMERATION_CAP: usize = 10;

/// `lambda^(i)_{r,s}` differs between `i` and `i2`, both in block `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LumpViolation {
    pub r: usize,
    pub s: usize,
    pub i: usize,
    pub i2: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LumpingResult<T> {
    pub lumpable: bool,
    pub lambda: Option<TransitionMatrix<T>>,
    pub violation: Option<LumpViolation>,
}

/// Sums of each row of `P` over the blocks: `out[i][s]`.
pub fn block_row_sums<T: Scalar>(p: &TransitionMatrix<T>, blocks: &Partition) -> Vec<Vec<T>> {
    let idx = blocks.block_index();
    (0..p.n())
        .map(|i| {
            let mut sums = vec![T::zero(); blocks.len()];
            for (j, x) in p.row(i).iter().enumerate() {
                sums[idx[j]] = sums[idx[j]].clone() + x.clone();
            }
            sums
        })
        .collect()
}

/// Rows are scanned in order; each is compared with the first row of its
/// block, so the reported violation is the first in row-major order.
pub fn lumpability_test<T: Scalar>(p: &TransitionMatrix<T>, blocks: &Partition) -> Result<LumpingResult<T>> {
    if p.n() != blocks.n() {
        return Err(Error::DimensionMismatch {
            left: p.n(),
            right: blocks.n(),
        });
    }
    let tol = NumericPolicy::current().stochastic_tol;
    let sums = block_row_sums(p, blocks);
    let idx = blocks.block_index();
    for i in 0..p.n() {
        let r = idx[i];
        let rep = blocks.blocks()[r][0];
        for s in 0..blocks.len() {
            if !sums[i][s].near(&sums[rep][s], tol) {
                return Ok(LumpingResult {
                    lumpable: false,
                    lambda: None,
                    violation: Some(LumpViolation { r, s, i: rep, i2: i }),
                });
            }
        }
    }
    let ell = blocks.len();
    let entries = blocks
        .blocks()
        .iter()
        .flat_map(|b| sums[b[0]].clone())
        .collect();
    Ok(LumpingResult {
        lumpable: true,
        lambda: Some(TransitionMatrix::from_entries_unchecked(ell, entries)),
        violation: None,
    })
}

pub fn enumerate_lumpable_partitions<T: Scalar>(
    p: &TransitionMatrix<T>,
) -> Result<Vec<(Partition, TransitionMatrix<T>)>> {
    enumerate_lumpable_partitions_capped(p, DEFAULT_ENUMERATION_CAP)
}

/// Every non-trivial partition under which `P` lumps. Exact mode only.
pub fn enumerate_lumpable_partitions_capped<T: Scalar>(
    p: &TransitionMatrix<T>,
    cap: usize,
) -> Result<Vec<(Partition, TransitionMatrix<T>)>> {
    if !T::is_exact() {
        return Err(Error::FloatModeRejected);
    }
    if p.n() > cap {
        return Err(Error::CapExceeded {
            what: "states for partition enumeration".into(),
            cap,
        });
    }
    let mut out = Vec::new();
    for part in Partition::enumerate(p.n()).filter(|q| !q.is_trivial()) {
        if let Some(lambda) = lumpability_test(p, &part)?.lambda {
            out.push((part, lambda));
        }
    }
    Ok(out)
}

/// Why a measure fails to be a block measure for a partition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockViolation {
    /// The atom sends states of `block` into different blocks.
    SplitsBlock { atom: StateFunction, block: usize },
    /// The atom sends two blocks into the same block.
    NotBijective { atom: StateFunction },
    WrongClassCount { k: usize, ell: usize },
}

/// The block permutation `r -> pi(r)` induced by `f`, if `f` maps every block
/// into a single block and distinct blocks to distinct blocks.
pub fn block_permutation(f: &StateFunction, blocks: &Partition) -> std::result::Result<Vec<usize>, BlockViolation> {
    let idx = blocks.block_index();
    let ell = blocks.len();
    let mut pi = Vec::with_capacity(ell);
    let mut used = vec![false; ell];
    for (r, b) in blocks.blocks().iter().enumerate() {
        let target = idx[f.apply(b[0])];
        if b.iter().any(|&i| idx[f.apply(i)] != target) {
            return Err(BlockViolation::SplitsBlock { atom: f.clone(), block: r });
        }
        if std::mem::replace(&mut used[target], true) {
            return Err(BlockViolation::NotBijective { atom: f.clone() });
        }
        pi.push(target);
    }
    Ok(pi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlockCheck {
    pub is_block: bool,
    /// Block permutation of each atom, present when every atom permutes blocks.
    pub permutation_table: Option<Vec<(StateFunction, Vec<usize>)>>,
    pub violation: Option<BlockViolation>,
    /// Present when the class count was computed.
    pub coalescence: Option<CoalescenceReport>,
    /// Whether the only achievable limit partition is the block partition.
    pub classes_are_blocks: bool,
}

/// Checks that every atom permutes the blocks, then that the coalescence
/// number equals the number of blocks.
pub fn block_measure_check<T: Scalar>(mu: &FunctionMeasure<T>, blocks: &Partition) -> Result<BlockCheck> {
    if mu.n() != blocks.n() {
        return Err(Error::DimensionMismatch {
            left: mu.n(),
            right: blocks.n(),
        });
    }
    let mut table = Vec::with_capacity(mu.len());
    for f in mu.support() {
        match block_permutation(f, blocks) {
            Ok(pi) => table.push((f.clone(), pi)),
            Err(v) => {
                return Ok(BlockCheck {
                    is_block: false,
                    permutation_table: None,
                    violation: Some(v),
                    coalescence: None,
                    classes_are_blocks: false,
                })
            }
        }
    }
    let report = exact_coalescence(mu)?;
    let ell = blocks.len();
    let classes_are_blocks = report.limit_partitions.len() == 1 && report.limit_partitions[0] == *blocks;
    let violation = (report.k != ell).then_some(BlockViolation::WrongClassCount { k: report.k, ell });
    Ok(BlockCheck {
        is_block: violation.is_none(),
        permutation_table: Some(table),
        violation,
        coalescence: Some(report),
        classes_are_blocks,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NecessaryConditions<T> {
    pub constant_rows: bool,
    pub lambda_doubly_stochastic: bool,
    pub lambda_irreducible: bool,
    pub lambda: Option<TransitionMatrix<T>>,
}

impl<T> NecessaryConditions<T> {
    pub fn all_hold(&self) -> bool {
        self.constant_rows && self.lambda_doubly_stochastic && self.lambda_irreducible
    }
}

/// Conditions every block measure for `blocks` in `L_P` forces on `P`:
/// constant block row sums, and a doubly stochastic irreducible `Λ`.
pub fn necessary_conditions_check<T: Scalar>(
    p: &TransitionMatrix<T>,
    blocks: &Partition,
) -> Result<NecessaryConditions<T>> {
    let lump = lumpability_test(p, blocks)?;
    Ok(match lump.lambda {
        Some(lambda) => NecessaryConditions {
            constant_rows: true,
            lambda_doubly_stochastic: lambda.is_doubly_stochastic(),
            lambda_irreducible: lambda.is_irreducible(),
            lambda: Some(lambda),
        },
        None => NecessaryConditions {
            constant_rows: false,
            lambda_doubly_stochastic: false,
            lambda_irreducible: false,
            lambda: None,
        },
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassesCheck {
    pub is_block: bool,
    /// The achievable limit partitions; a single one when `is_block`.
    pub partitions: Vec<Partition>,
}

/// A measure is a block measure exactly when its coalescing classes are
/// almost surely constant; the block partition is then those classes.
pub fn deterministic_classes_check<T: Scalar>(mu: &FunctionMeasure<T>) -> Result<ClassesCheck> {
    let report = exact_coalescence(mu)?;
    if report.deterministic {
        let classes = &report.limit_partitions[0];
        let check = block_measure_check(mu, classes)?;
        if !check.is_block {
            return Err(Error::SelfTestFailed(format!(
                "classes {classes} are a.s. constant but fail the block check: {:?}",
                check.violation
            )));
        }
    }
    Ok(ClassesCheck {
        is_block: report.deterministic,
        partitions: report.limit_partitions,
    })
}
