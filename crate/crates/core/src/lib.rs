//! Gradient-enhanced Gaussian process regression with a diagonal
//! preconditioner for the kernel matrix.

pub mod bayesopt;
pub mod conditioning;
pub mod error;
pub mod gp;
pub mod kernels;
pub mod linalg;
pub mod optim;
pub mod problems;

pub use error::{Error, Result};
