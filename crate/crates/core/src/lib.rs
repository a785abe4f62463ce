//! Hardcore and Ising Gibbs distributions near the tree-uniqueness threshold.
//!
//! The crate is organised bottom-up: [`graphs`] and [`models`] describe
//! instances, [`exact`] enumerates small state spaces as ground truth,
//! [`samplers`] runs the three Markov chains at scale, [`spectral`] covers
//! percolation on self-avoiding-walk trees, [`counting`] implements the
//! deterministic partition-function approximation and [`lowerbound`] the
//! generating-polynomial computations behind the lower-bound instances.

pub mod counting;
mod error;
pub mod exact;
pub mod graphs;
pub mod lowerbound;
pub mod models;
pub mod numeric;
pub mod rng;
pub mod samplers;
pub mod spectral;

pub use error::{Error, Result};
