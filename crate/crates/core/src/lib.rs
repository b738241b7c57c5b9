//! Parametric cost-function-approximation policies for an energy storage
//! system under rolling wind forecasts.
//!
//! Each period a deterministic lookahead LP is solved with a parameterized
//! wind bound; the parameters are tuned in a base-model simulator by a
//! zeroth-order stochastic search built on Gaussian smoothing.

// Validation uses `!(x >= 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate self as storage_cfa;

pub mod error;
pub mod experiment;
pub mod forecast;
pub mod lp;
pub mod model;
pub mod policy;
pub mod scenario;
pub mod sim;
pub mod zo;

#[cfg(test)]
#[path = "../tests/common/oracles.rs"]
mod oracles;

pub use error::{Error, Result};
pub use model::{Decision, ModelParams, State};
pub use policy::{PolicyFamily, PolicySpec};
pub use scenario::Scenario;
