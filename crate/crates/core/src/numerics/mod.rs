//! Dense linear algebra, seeded randomness and data scaling.

mod cholesky;
mod matrix;
mod rng;
mod scaler;

pub use cholesky::{
    cholesky, cholesky_escalating, log_det, solve_cholesky, solve_lower, solve_lower_transpose, SYMMETRY_TOLERANCE,
};
pub(crate) use matrix::gemm_slice;
pub use matrix::{dot, gemm, MatRef, Matrix};
pub use rng::{derive_seed, stream_of, Rng};
pub use scaler::MinMaxScaler;
