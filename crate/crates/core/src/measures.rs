//! Maps `S -> S`, finitely supported measures on them, and the grand
//! couplings built directly from a transition matrix.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;
use crate::partition::Partition;
use crate::scalar::{NumericPolicy, Scalar};

/// Default cap on the number of atoms an enumerated coupling may have.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// A total map on `0..n`; `image[i]` is `f(i)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateFunction {
    image: Vec<usize>,
}

impl StateFunction {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        if let Some(&bad) = image.iter().find(|&&j| j >= n) {
            return Err(Error::OutOfRangeSymbol {
                symbol: (bad + 1).to_string(),
                n,
            });
        }
        Ok(Self { image })
    }

    /// From 1-based images, e.g. `[1, 2, 1, 2]`.
    pub fn from_one_based(image: &[usize]) -> Result<Self> {
        let n = image.len();
        let mut out = Vec::with_capacity(n);
        for &j in image {
            if j == 0 || j > n {
                return Err(Error::OutOfRangeSymbol {
                    symbol: j.to_string(),
                    n,
                });
            }
            out.push(j - 1);
        }
        Ok(Self { image: out })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            image: (0..n).collect(),
        }
    }

    pub fn constant(n: usize, value: usize) -> Self {
        assert!(value < n);
        Self { image: vec![value; n] }
    }

    pub fn n(&self) -> usize {
        self.image.len()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.image[i]
    }

    pub fn image(&self) -> &[usize] {
        &self.image
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &StateFunction) -> StateFunction {
        StateFunction {
            image: other.image.iter().map(|&x| self.image[x]).collect(),
        }
    }

    pub fn is_constant(&self) -> bool {
        self.image.windows(2).all(|w| w[0] == w[1])
    }

    pub fn is_permutation(&self) -> bool {
        let mut seen = vec![false; self.n()];
        self.image.iter().all(|&j| !std::mem::replace(&mut seen[j], true))
    }

    /// Partition of the domain into sets with a common image.
    pub fn kernel(&self) -> Partition {
        Partition::from_labels(&self.image)
    }

    /// Parse `(1212)` (only for `n <= 9`) or `(1,2,1,2)`.
    pub fn parse(text: &str, n: usize) -> Result<Self> {
        let body = text.trim();
        let body = body
            .strip_prefix('(')
            .and_then(|b| b.strip_suffix(')'))
            .unwrap_or(body)
            .trim();
        let symbols: Vec<&str> = if body.contains(',') {
            body.split(',').map(str::trim).collect()
        } else if n <= 9 {
            body.char_indices().map(|(k, c)| &body[k..k + c.len_utf8()]).collect()
        } else {
            // compact form is ambiguous once labels reach two digits
            return Err(Error::Parse(format!(
                "compact form {text:?} needs n <= 9; use commas"
            )));
        };
        if symbols.len() != n {
            return Err(Error::BadLength {
                expected: n,
                found: symbols.len(),
            });
        }
        let mut image = Vec::with_capacity(n);
        for s in symbols {
            match s.parse::<usize>() {
                Ok(j) if (1..=n).contains(&j) => image.push(j - 1),
                _ => {
                    return Err(Error::OutOfRangeSymbol {
                        symbol: s.to_string(),
                        n,
                    })
                }
            }
        }
        Ok(Self { image })
    }
}

impl fmt::Display for StateFunction {
    /// Compact `(1212)` for `n <= 9`, comma form otherwise.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if self.n() <= 9 { "" } else { "," };
        write!(f, "(")?;
        for (k, j) in self.image.iter().enumerate() {
            if k > 0 {
                f.write_str(sep)?;
            }
            write!(f, "{}", j + 1)?;
        }
        write!(f, ")")
    }
}

/// Finitely supported probability measure on maps `S -> S`. The atom list is
/// the support: functions are distinct, weights strictly positive, and atoms
/// are kept in lexicographic order of their images.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionMeasure<T> {
    n: usize,
    atoms: Vec<(StateFunction, T)>,
}

impl<T: Scalar> FunctionMeasure<T> {
    pub fn new(n: usize, atoms: Vec<(StateFunction, T)>) -> Result<Self> {
        Self::with_policy(n, atoms, &NumericPolicy::current())
    }

    pub fn with_policy(
        n: usize,
        mut atoms: Vec<(StateFunction, T)>,
        policy: &NumericPolicy,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidMeasure("no atoms".into()));
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut total = T::zero();
        for (k, (f, w)) in atoms.iter().enumerate() {
            if f.n() != n {
                return Err(Error::DimensionMismatch {
                    left: n,
                    right: f.n(),
                });
            }
            if k > 0 && atoms[k - 1].0 == *f {
                return Err(Error::InvalidMeasure(format!("duplicate atom {f}")));
            }
            if *w <= T::zero() {
                return Err(Error::InvalidMeasure(format!("non-positive weight on {f}")));
            }
            total = total + w.clone();
        }
        if !total.near(&T::one(), policy.stochastic_tol) {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}")));
        }
        Ok(Self { n, atoms })
    }

    /// Sums weights of repeated functions and drops zero weights before
    /// validating.
    pub fn from_weights<I: IntoIterator<Item = (StateFunction, T)>>(n: usize, weights: I) -> Result<Self> {
        let mut merged: BTreeMap<StateFunction, T> = BTreeMap::new();
        for (f, w) in weights {
            let slot = merged.entry(f).or_insert_with(T::zero);
            *slot = slot.clone() + w;
        }
        Self::new(n, merged.into_iter().filter(|(_, w)| !w.is_zero()).collect())
    }

    /// Equal mass on each distinct function.
    pub fn uniform(n: usize, functions: Vec<StateFunction>) -> Result<Self> {
        let w = T::one() / T::from_usize(functions.len().max(1));
        Self::from_weights(n, functions.into_iter().map(|f| (f, w.clone())))
    }

    pub fn dirac(f: StateFunction) -> Self {
        Self {
            n: f.n(),
            atoms: vec![(f, T::one())],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[(StateFunction, T)] {
        &self.atoms
    }

    pub fn support(&self) -> impl Iterator<Item = &StateFunction> {
        self.atoms.iter().map(|(f, _)| f)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn weight_of(&self, f: &StateFunction) -> Option<&T> {
        self.atoms
            .binary_search_by(|(g, _)| g.cmp(f))
            .ok()
            .map(|k| &self.atoms[k].1)
    }

    pub fn min_weight(&self) -> T {
        self.atoms
            .iter()
            .map(|(_, w)| w.clone())
            .reduce(|a, b| if b < a { b } else { a })
            .expect("measures have atoms")
    }

    pub fn to_f64(&self) -> FunctionMeasure<f64> {
        FunctionMeasure {
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|(f, w)| (f.clone(), w.to_f64()))
                .collect(),
        }
    }

    /// `p_ij = mu{f : f(i) = j}`.
    pub fn push_forward(&self) -> TransitionMatrix<T> {
        push_forward(self)
    }

    /// Mixture `lambda * self + (1 - lambda) * other`.
    pub fn mix(&self, other: &Self, lambda: T) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: other.n,
            });
        }
        let rest = T::one() - lambda.clone();
        let a = self.atoms.iter().map(|(f, w)| (f.clone(), w.clone() * lambda.clone()));
        let b = other.atoms.iter().map(|(f, w)| (f.clone(), w.clone() * rest.clone()));
        Self::from_weights(self.n, a.chain(b))
    }
}

pub fn push_forward<T: Scalar>(mu: &FunctionMeasure<T>) -> TransitionMatrix<T> {
    let n = mu.n();
    let mut entries = vec![T::zero(); n * n];
    for (f, w) in mu.atoms() {
        for i in 0..n {
            let slot = &mut entries[i * n + f.apply(i)];
            *slot = slot.clone() + w.clone();
        }
    }
    TransitionMatrix::from_entries_unchecked(n, entries)
}

/// Outcome of comparing `mu{f : f(i) = j}` with `p_ij`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConsistencyReport<T> {
    pub consistent: bool,
    /// `(i, j, p_ij - mu{f(i) = j})` for every entry that differs, row-major.
    pub residuals: Vec<(usize, usize, T)>,
}

pub fn is_consistent<T: Scalar>(
    mu: &FunctionMeasure<T>,
    p: &TransitionMatrix<T>,
) -> Result<ConsistencyReport<T>> {
    if mu.n() != p.n() {
        return Err(Error::DimensionMismatch {
            left: mu.n(),
            right: p.n(),
        });
    }
    let tol = NumericPolicy::current().stochastic_tol;
    let q = push_forward(mu);
    let n = p.n();
    let mut residuals = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !p.get(i, j).near(q.get(i, j), tol) {
                residuals.push((i, j, p.get(i, j).clone() - q.get(i, j).clone()));
            }
        }
    }
    Ok(ConsistencyReport {
        consistent: residuals.is_empty(),
        residuals,
    })
}

/// Calls `visit` on every map `f` with `f(i)` in `choices[i]`, in
/// lexicographic order of images.
pub(crate) fn for_each_product<F: FnMut(&[usize])>(choices: &[Vec<usize>], mut visit: F) {
    let n = choices.len();
    if choices.iter().any(Vec::is_empty) {
        return;
    }
    let mut idx = vec![0usize; n];
    let mut image: Vec<usize> = choices.iter().map(|c| c[0]).collect();
    loop {
        visit(&image);
        let mut k = n;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                image[k] = choices[k][idx[k]];
                break;
            }
            idx[k] = 0;
            image[k] = choices[k][0];
        }
    }
}

pub(crate) fn product_count(choices: &[Vec<usize>]) -> Option<usize> {
    choices
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
}

/// `mu_ind{f} = prod_i p_{i, f(i)}`, capped at [`DEFAULT_SUPPORT_CAP`] atoms.
pub fn independence_coupling<T: Scalar>(p: &TransitionMatrix<T>) -> Result<FunctionMeasure<T>> {
    independence_coupling_capped(p, DEFAULT_SUPPORT_CAP)
}

pub fn independence_coupling_capped<T: Scalar>(
    p: &TransitionMatrix<T>,
    cap: usize,
) -> Result<FunctionMeasure<T>> {
    let choices = p.successors();
    match product_count(&choices) {
        Some(c) if c <= cap => {}
        _ => return Err(Error::SupportTooLarge { cap }),
    }
    let mut atoms = Vec::new();
    for_each_product(&choices, |image| {
        let w = image
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (i, &j)| acc * p.get(i, j).clone());
        atoms.push((StateFunction { image: image.to_vec() }, w));
    });
    // enumeration order is already lexicographic and weights are positive
    Ok(FunctionMeasure { n: p.n(), atoms })
}

/// Whether the independence coupling is the only grand coupling of `P`.
#[derive(Clone, Debug, PartialEq)]
pub enum CouplingUniqueness<T> {
    Unique,
    /// A consistent coupling different from the independence coupling.
    Multiple { witness: FunctionMeasure<T>, rows: (usize, usize), pair: (usize, usize) },
}

/// Unique iff at most one row has an entry in `(0, 1)`. Otherwise builds the
/// two-row witness: with fractional rows `a, b` and a pair `(r, s)` satisfying
/// `0 < p_{b,s} <= p_{a,r} < 1`, row `a` is forced to `r` whenever row `b`
/// lands on `s`, and every other row moves independently.
pub fn uniqueness_of_coupling<T: Scalar>(p: &TransitionMatrix<T>) -> Result<CouplingUniqueness<T>> {
    uniqueness_of_coupling_capped(p, DEFAULT_SUPPORT_CAP)
}

pub fn uniqueness_of_coupling_capped<T: Scalar>(
    p: &TransitionMatrix<T>,
    cap: usize,
) -> Result<CouplingUniqueness<T>> {
    if !p.is_irreducible() {
        return Err(Error::NotIrreducible);
    }
    let fractional = p.fractional_rows();
    if fractional.len() < 2 {
        return Ok(CouplingUniqueness::Unique);
    }
    let (x, y) = (fractional[0], fractional[1]);
    let pick = |first: usize, second: usize| -> Option<(usize, usize)> {
        let n = p.n();
        (0..n)
            .flat_map(|r| (0..n).map(move |s| (r, s)))
            .find(|&(r, s)| {
                let big = p.get(first, r);
                let small = p.get(second, s);
                *small > T::zero() && small <= big && *big < T::one()
            })
    };
    let ((a, b), (r, s)) = match pick(x, y) {
        Some(rs) => ((x, y), rs),
        None => ((y, x), pick(y, x).expect("two fractional rows admit an ordered pair")),
    };

    let n = p.n();
    let p_ar = p.get(a, r).clone();
    let p_bs = p.get(b, s).clone();
    let one_minus = T::one() - p_bs.clone();

    let mut choices = p.successors();
    choices[a] = (0..n).collect();
    choices[b] = (0..n).collect();
    match product_count(&choices) {
        Some(c) if c <= cap => {}
        _ => return Err(Error::SupportTooLarge { cap }),
    }
    let mut atoms = Vec::new();
    for_each_product(&choices, |image| {
        let others = image
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != a && i != b)
            .fold(T::one(), |acc, (i, &j)| acc * p.get(i, j).clone());
        let (fa, fb) = (image[a], image[b]);
        let w = if fa == r && fb == s {
            p_bs.clone() * others
        } else if fa == r {
            (p_ar.clone() - p_bs.clone()) / one_minus.clone() * p.get(b, fb).clone() * others
        } else if fb != s {
            p.get(a, fa).clone() * p.get(b, fb).clone() / one_minus.clone() * others
        } else {
            T::zero()
        };
        if w > T::zero() {
            atoms.push((StateFunction { image: image.to_vec() }, w));
        }
    });
    Ok(CouplingUniqueness::Multiple {
        witness: FunctionMeasure { n, atoms },
        rows: (a, b),
        pair: (r, s),
    })
}
