//! Linear-programming bounds for multi-decoder lossy source coding.
//!
//! The crate computes upper bounds (achievable rates from a layered
//! superposition scheme) and lower bounds (entropy-style converse programs)
//! on the optimal rate of a broadcast source coding problem, and compares
//! them on the odd-cycle family where they meet.

pub mod error;
pub mod lp;

pub use error::{Error, Result};
pub mod gauss;
pub mod pmf;
pub mod achievable;
pub mod converse;
pub mod instances;
