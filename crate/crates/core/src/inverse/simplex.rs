//! Dense two-phase simplex over exact rationals with Bland's rule.

use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { x: Vec<Rational>, value: Rational },
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Reduced costs; the last entry is the objective value.
    obj: Vec<Rational>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.obj.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Rational::one() / self.rows[r][c].clone();
        for x in self.rows[r].iter_mut() {
            if !x.is_zero() {
                *x *= &inv;
            }
        }
        let pivot_row = self.rows[r].clone();
        let eliminate = |row: &mut Vec<Rational>| {
            let factor = row[c].clone();
            if factor.is_zero() {
                return;
            }
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                eliminate(row);
            }
        }
        eliminate(&mut self.obj);
        self.basis[r] = c;
    }

    /// Sets the objective to maximize `c . x` over the first `c.len()`
    /// columns, expressed in terms of the current basis.
    fn set_objective(&mut self, c: &[Rational]) {
        let w = self.width();
        self.obj = vec![Rational::zero(); w + 1];
        for (j, cj) in c.iter().enumerate() {
            self.obj[j] = -cj.clone();
        }
        for i in 0..self.rows.len() {
            let factor = self.obj[self.basis[i]].clone();
            if !factor.is_zero() {
                for (x, p) in self.obj.iter_mut().zip(&self.rows[i]) {
                    *x -= &factor * p;
                }
            }
        }
    }

    /// Pivots until optimal. Only columns below `allowed` may enter.
    /// Returns false when unbounded.
    fn optimize(&mut self, allowed: usize) -> bool {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.obj[j].is_negative()) else {
                return true;
            };
            let rhs = self.width();
            let mut best: Option<(usize, Rational)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[rhs] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Maximizes `c . x` subject to `a x = b`, `x >= 0`.
pub fn maximize(a: &[Vec<Rational>], b: &[Rational], c: &[Rational]) -> LpOutcome {
    let m = a.len();
    let nv = c.len();
    let width = nv + m;
    let mut rows = Vec::with_capacity(m);
    for (i, (ai, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut row = vec![Rational::zero(); width + 1];
        for (j, x) in ai.iter().enumerate() {
            row[j] = if flip { -x.clone() } else { x.clone() };
        }
        row[nv + i] = Rational::one();
        row[width] = if flip { -bi.clone() } else { bi.clone() };
        rows.push(row);
    }
    let mut t = Tableau {
        rows,
        obj: vec![Rational::zero(); width + 1],
        basis: (nv..width).collect(),
    };

    // phase 1: maximize minus the sum of artificials
    let mut phase1 = vec![Rational::zero(); width];
    for x in &mut phase1[nv..] {
        *x = -Rational::one();
    }
    t.set_objective(&phase1);
    t.optimize(width);
    if !t.obj[width].is_zero() {
        return LpOutcome::Infeasible;
    }

    // drive artificials out of the basis; rows where that fails are redundant
    let mut i = 0;
    while i < t.rows.len() {
        if t.basis[i] >= nv {
            match (0..nv).find(|&j| !t.rows[i][j].is_zero()) {
                Some(j) => t.pivot(i, j),
                None => {
                    t.rows.swap_remove(i);
                    t.basis.swap_remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }

    t.set_objective(c);
    if !t.optimize(nv) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); nv];
    for (row, &v) in t.rows.iter().zip(&t.basis) {
        x[v] = row[width].clone();
    }
    LpOutcome::Optimal {
        x,
        value: t.obj[width].clone(),
    }
}

/// Any `x >= 0` with `a x = b`.
pub fn feasible_point(a: &[Vec<Rational>], b: &[Rational], nv: usize) -> Option<Vec<Rational>> {
    match maximize(a, b, &vec![Rational::zero(); nv]) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}
