//! Measures and manipulates the disparity between two groups' influence on
//! the consensus of opinion-dynamics processes on graphs.
//!
//! Two models are covered:
//!
//! * DeGroot averaging on a row-stochastic matrix `T`, where consensus is
//!   `q^T s` for the stationary distribution `q` and the disparity of a
//!   partition `(A, B)` is `n (q^T (s_A - s_B))^2`.
//! * Friedkin-Johnsen dynamics with unit anchoring, where equilibrium is
//!   `(I + L)^{-1} s` and the disparity is
//!   `(s_A - s_B)^T (I + L)^{-2} (s_A - s_B)`.
//!
//! On top of the two measures the crate provides the closed-form optimizers
//! (worst-case opinions, stationary distributions, and transition matrices
//! for DeGroot; spectral constructions for Friedkin-Johnsen), combinatorial
//! partition searches, gradient-based edge-weight interventions, random
//! graph families with disparity interval checks, and vertex contraction
//! with monotonicity checks that report any decrease of the disparity
//! floor.

mod chain;
mod error;
mod graph;
mod opinion;
mod partition;
mod report;

pub mod degroot;
pub mod fj;
pub mod interventions;
pub mod io;
pub mod random_models;
pub mod spectral;

pub use chain::TransitionMatrix;
pub use error::{Error, Result};
pub use graph::{Directedness, Edge, WeightedGraph, DENSE_LIMIT};
pub use opinion::OpinionVector;
pub use partition::{partition_stats, Group, Partition, PartitionStats};
pub use report::{DisparityReport, Model};
