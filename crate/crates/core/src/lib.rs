pub mod block_lanczos;
pub mod cli;
pub mod dense;
pub mod error;
pub mod matfunc;
pub mod operator;
pub mod poles;
pub mod problems;
pub mod rational;
pub mod rng;
pub mod sparse;

pub use error::{Error, Result};
