//! Square-lattice percolation kernels: invasion percolation, Bernoulli bond
//! percolation at and near criticality, conditioned critical measures and
//! the certificate bounds comparing invasion clusters with incipient
//! infinite clusters.
//!
//! The crate is `no_std` and needs only `alloc`. Parallel execution, file
//! formats and the command line live in the `percolab` crate; everything
//! here is deterministic given a [`rng::SeedSpec`].
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod connectivity;
pub mod domination;
pub mod error;
pub mod field;
pub mod iic;
pub mod invasion;
pub mod lattice;
pub mod nearcrit;
pub mod rng;
pub mod stats;

pub use error::Error;

/// Bond percolation threshold of Z².
pub const P_C: f64 = 0.5;

/// Physical and statistical constants shared by the estimators.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Params {
    /// Critical probability.
    pub p_c: f64,
    /// Confidence level of every reported interval.
    pub confidence: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { p_c: P_C, confidence: 0.95 }
    }
}
