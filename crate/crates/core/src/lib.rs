//! Learned potential-based reward shaping.
//!
//! A trajectory graph built from sampled transitions feeds a two-layer graph
//! convolutional network whose "optimal" class probability serves as a
//! shaping potential Φ. An exact forward-backward pass over the known MDP
//! gives a reference potential to compare against, and a tabular
//! actor-critic mixes plain and shaped λ-returns.

pub mod agent;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod harness;
pub mod inference;
pub mod linalg;
pub mod mdp;
pub mod shaping;

pub use error::{Error, Result};
