//! Non-intrusive balanced truncation from transfer-function samples.

// Negated comparisons such as `!(x > 0.0)` are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fileio;
pub mod interpolation;
pub mod intrusive;
pub mod linalg;
pub mod loewner;
pub mod models;
pub mod reduction;
pub mod sampling;
pub mod variants;

pub use error::{Error, Result};
pub use loewner::LoewnerQuadruple;
pub use reduction::ReducedModel;
pub use sampling::{SampleSet, StateSpace};
pub use variants::{FactorPair, Mode, Variant, VariantConfig};
