//! Exponentially local spectral flow for weakly perturbed non-interacting
//! lattice Hamiltonians and Markov generators.

pub mod cli;
pub mod dense;
pub mod error;
pub mod kamflow;
pub mod lattice;
pub mod markov;
pub mod opalgebra;
pub mod verify;

pub use error::{Error, Result};
