//! Exact and simulated machinery for learning high-degree parities with
//! two-layer and deep ReLU networks.
//!
//! The crate is split into five layers:
//!
//! * [`exactcomb`]: exact binomial identities and the Δ family of signed
//!   parity/activation expectations.
//! * [`gaussiankit`]: scalar Gaussian analysis (cdf, Hermite recurrences,
//!   bivariate orthant probabilities, alternating-Gaussian sums).
//! * [`alignment`]: gradient-alignment evaluators, exact and Monte-Carlo,
//!   plus the junk flow.
//! * [`nets`]: networks, initialization families, losses and training loops.
//!
//! Network code is generic over [`Scalar`]; the aliases below fix the two
//! supported precisions.

pub mod alignment;
pub mod error;
pub mod exactcomb;
pub mod gaussiankit;
pub mod nets;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Single-precision network parameters, used by the deep-MLP experiments.
pub type NetParamsF32 = nets::NetParams<f32>;
/// Double-precision network parameters, used wherever exactness matters.
pub type NetParamsF64 = nets::NetParams<f64>;
