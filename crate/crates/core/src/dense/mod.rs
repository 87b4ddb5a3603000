//! Dense kernels for the small projected matrices and the tall block vectors.

mod eig;
mod expm;
mod factor;
mod funm;
mod lognorm;
mod matrix;

pub use eig::{eig_general, eig_symmetric, eigenvalues, EigenDecomposition, SymmetricEigen};
pub use expm::expm_dense;
pub use factor::{lu_solve, qr_factor, svd_factor, DenseLu, PIVOT_TOL};
pub use funm::{funm_dense, StieltjesFunction, MAX_EIGVEC_CONDITION, SINGULAR_SET_TOL};
pub use lognorm::log_norm_2;
pub use matrix::DenseMatrix;
