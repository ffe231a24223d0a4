//! Maximal upward directed decompositions of posets, the topology they
//! induce on the index set, and exact finite-level checks of the embedding
//! of the Toeplitz algebra of `Q_P^+` into inductive limits of operator
//! fields over that index set.

pub mod check;
pub mod cli;
pub mod embedding;
pub mod error;
pub mod inductive;
pub mod poset;
pub mod semigroup;
pub mod toeplitz;
pub mod topology;

pub use error::{Error, Result};
