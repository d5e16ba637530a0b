//! Lower bounds.

mod index;

pub use index::*;
mod lattice;

pub use lattice::*;
mod minimax;
pub use minimax::*;
