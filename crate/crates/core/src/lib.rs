//! Multi-fidelity regression: neural-network surrogates, Gaussian processes,
//! co-kriging, hyperparameter search and analytic benchmark cases.

// Validation uses `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod dataset;
pub mod error;
pub mod gp;
pub mod hpo;
pub mod mfnn;
pub mod model;
pub mod nn;
pub mod numerics;

pub use error::{Error, Result};
