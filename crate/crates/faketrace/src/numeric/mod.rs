//! Scalar-generic numeric kernels: exact transportation solve, assignment,
//! stationary distributions and small dense linear algebra.
//!
//! Everything here is generic over the floating scalar via [`Real`]; the
//! rest of the crate instantiates these at [`crate::Scalar`].

mod assignment;
mod linalg;
mod transport;

pub use assignment::max_weight_assignment;
pub use linalg::{kl_divergence_raw, mat_mul, mat_pow, pearson, solve_stationary};
pub use transport::min_cost_transport;

use num_traits::Float;
use std::fmt::Debug;
use std::iter::Sum;

/// Scalar bound used by all numeric kernels.
pub trait Real: Float + Sum + Debug + 'static {
    fn val(x: f64) -> Self {
        Self::from(x).expect("f64 constant representable in scalar type")
    }
}

impl<T: Float + Sum + Debug + 'static> Real for T {}
