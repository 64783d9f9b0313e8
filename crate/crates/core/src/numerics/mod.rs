//! Small-matrix linear algebra and the spherical weight kernels.

mod kernel;
mod matrix;
mod spd;

pub use kernel::WeightKernel;
pub use matrix::Matrix;
pub use spd::{inv_sqrt, sym_eigen, SymPosDef, JACOBI_MAX_SWEEPS, NEAR_SINGULAR};
