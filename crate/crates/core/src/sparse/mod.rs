//! Sparse storage, products, shifted solves and Matrix Market I/O.

mod matrix;
mod mtx;
mod shift;

pub use matrix::SparseMatrix;
pub use mtx::{
    parse_dense_matrix_market, parse_matrix_market, read_dense_matrix_market, read_matrix_market, write_dense_matrix_market,
    write_matrix_market,
};
pub use shift::{factor_shift, solve_shift, Pole, ShiftedFactorization};
