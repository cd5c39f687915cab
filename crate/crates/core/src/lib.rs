//! Multi-step one-shot inversion for linear inverse problems.

pub mod bounds;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod problem;
pub mod scalar;
pub mod solvers;
pub mod spectral;

pub use error::{OneShotError, Result};
