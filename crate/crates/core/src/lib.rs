//! Universal-algebra toolkit and a solver for constraint satisfaction
//! problems over finite idempotent algebras.

pub mod algebra;
pub mod blockmin;
pub mod centralizer;
pub mod clone;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod instance;
pub mod irreducible;
pub mod lift;
pub mod maroti;
pub mod propagate;
pub mod solver;
pub mod strands;

pub use error::{Error, Result};
