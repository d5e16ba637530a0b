//! Canonical instances and end-to-end checks.

mod classical;
mod odd_cycle;
mod random;

pub use classical::*;
pub use odd_cycle::*;
pub use random::*;
