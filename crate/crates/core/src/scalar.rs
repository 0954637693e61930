//! Scalar arithmetic shared by every module.
//!
//! Decision procedures run over exact rationals ([`Rational`]); Monte Carlo and
//! random-matrix sampling run over `f64`. A matrix or measure is tagged with
//! exactly one of the two through its type parameter, so modes never mix.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

/// Representation mode of a matrix or measure.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Rational,
    Float,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rational => "rational",
            Mode::Float => "float",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Field operations plus the few mode-specific hooks the algorithms need.
pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
    + PartialOrd
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    const MODE: Mode;

    fn to_f64(&self) -> f64;

    fn from_usize(n: usize) -> Self;

    /// Equality, exact for rationals and within `tol` for floats.
    fn near(&self, other: &Self, tol: f64) -> bool;

    /// Magnitude used to rank pivot candidates in elimination.
    fn magnitude(&self) -> f64 {
        self.to_f64().abs()
    }

    /// The exact value, or `None` in float mode.
    fn to_rational(&self) -> Option<Rational>;

    fn from_rational(r: &Rational) -> Self;

    fn is_exact() -> bool {
        Self::MODE == Mode::Rational
    }

    /// Strictly positive, ignoring float noise below `tol`.
    fn is_positive_within(&self, tol: f64) -> bool {
        match Self::MODE {
            Mode::Rational => *self > Self::zero(),
            Mode::Float => self.to_f64() > tol,
        }
    }
}

impl Scalar for Rational {
    const MODE: Mode = Mode::Rational;

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_usize(n: usize) -> Self {
        Rational::from_integer(n.into())
    }

    fn near(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn magnitude(&self) -> f64 {
        // any non-zero pivot is exact; prefer the first one found
        if self.is_zero() {
            0.0
        } else {
            1.0
        }
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float;

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_usize(n: usize) -> Self {
        n as f64
    }

    fn near(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn to_rational(&self) -> Option<Rational> {
        None
    }

    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }
}

/// `p/q` shorthand for tests and constructions.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(p.into(), q.into())
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Tolerances applied in float mode.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericPolicy {
    /// Allowed deviation of a row (or column) sum from 1.
    pub stochastic_tol: f64,
    /// Allowed residual of a linear solve.
    pub residual_tol: f64,
}

impl Default for NumericPolicy {
    fn default() -> Self {
        Self {
            stochastic_tol: 1e-12,
            residual_tol: 1e-10,
        }
    }
}

/// Environment variable holding policy overrides, e.g.
/// `stochastic_tol=1e-9,residual_tol=1e-8`.
pub const POLICY_ENV: &str = "COALESCE_NUMERIC_POLICY";

impl NumericPolicy {
    /// Parse `key=value` pairs separated by commas. Unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut policy = Self::default();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| format!("bad number in {part:?}"))?;
            if !(value >= 0.0 && value.is_finite()) {
                return Err(format!("tolerance must be finite and >= 0 in {part:?}"));
            }
            match key.trim() {
                "stochastic_tol" | "stochastic" => policy.stochastic_tol = value,
                "residual_tol" | "residual" => policy.residual_tol = value,
                other => return Err(format!("unknown policy key {other:?}")),
            }
        }
        Ok(policy)
    }

    /// The process-wide policy: [`Self::from_env`], read once, falling back
    /// to the defaults when the variable is malformed.
    pub fn current() -> Self {
        static CURRENT: std::sync::OnceLock<NumericPolicy> = std::sync::OnceLock::new();
        *CURRENT.get_or_init(|| Self::from_env().unwrap_or_default())
    }

    /// Default policy with overrides from [`POLICY_ENV`] applied when set.
    pub fn from_env() -> Result<Self, String> {
        match std::env::var(POLICY_ENV) {
            Ok(text) => Self::parse(&text),
            Err(_) => Ok(Self::default()),
        }
    }
}
