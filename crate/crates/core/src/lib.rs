//! Measure-valued Pólya urn sequences over finite color spaces.
//!
//! The exact parts of the crate (models, kernel classification, oracle
//! enumeration) are generic over [`Scalar`], implemented for `f32`, `f64` and
//! the big rational [`Rational`]. Samplers and the Monte Carlo harness work in
//! `f64`.

pub mod error;
pub mod harness;
pub mod kernel;
pub mod measure;
pub mod model_file;
pub mod oracle;
pub mod sampler;
pub mod scalar;

pub use error::{Error, Result};
pub use kernel::{classify, Partition, Verdict, VerdictKind, Witness};
pub use measure::{ColorSpace, FiniteMeasure, ReinforcementKernel, UrnModel};
pub use scalar::{Scalar, Tolerance};

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

/// Model with double-precision masses, used by the samplers.
pub type Model = UrnModel<f64>;
/// Model with single-precision masses.
pub type ModelF32 = UrnModel<f32>;
/// Model with exact rational masses, used for certificates.
pub type ExactModel = UrnModel<Rational>;

pub type ExactVerdict = Verdict<Rational>;
