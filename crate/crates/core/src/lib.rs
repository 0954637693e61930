pub mod coalescence;
pub mod constructions;
pub mod lumpability;
pub mod error;
pub mod inverse;
pub mod io;
pub mod matrix;
pub mod measures;
pub mod partition;
pub mod scalar;

pub use error::{Error, Result};
pub use matrix::{Distribution, TransitionMatrix};
pub use measures::{FunctionMeasure, StateFunction};
pub use partition::Partition;
pub use scalar::{ratio, Mode, NumericPolicy, Rational, Scalar};
