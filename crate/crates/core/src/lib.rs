//! Bayesian network structure learning with matched statistical criteria.
//!
//! The crate is organised by stage of the learning pipeline:
//!
//! - [`graph`]: DAGs, PDAGs, CPDAG construction and extension, SHD.
//! - [`model`]: datasets, parameterised networks, sampling and likelihoods,
//!   exact Gaussian conditioning.
//! - [`criteria`]: independence tests, network scores and their matched pairs,
//!   wrapped in a call-counting [`criteria::Criterion`].
//! - [`learn`]: PC-Stable, Grow-Shrink, greedy search, simulated annealing over
//!   orderings, and restrict-maximise hybrids.
//! - [`bench`]: the `bn-text` network format and the benchmark harness.
//! - [`climate`]: gridded anomaly ingestion and the sparsity sweep.

pub mod graph;
pub mod model;
pub mod criteria;
pub mod learn;
pub mod bench;
pub mod climate;

mod stats;
#[cfg(test)]
mod testutil;
