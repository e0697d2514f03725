//! Random generation: predictive paths, stick-breaking draws of the directing
//! measure, the Dirichlet-process mixture form, and the hybrid `[0, 1]` example.
//!
//! All samplers are `f64`-only and consume variates from a [`UniformSource`],
//! so a given `(seed, stream)` reproduces the same output everywhere.

mod hybrid;
mod mixture;
mod path;
mod rng;
mod stick;

pub use hybrid::{hybrid_example_path, HybridPath};
pub use mixture::{dp_mixture_path, MixturePath};
pub use path::{sample_counts, sample_path, PathSample, UrnState};
pub use rng::{
    categorical, mix64, FixedUniforms, RngStream, UniformSource, GOLDEN_GAMMA, STREAM_SALT,
};
pub use stick::{beta_stick, stick_breaking, RandomMeasureDraw, DEFAULT_EPS};
