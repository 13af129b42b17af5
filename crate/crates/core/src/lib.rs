//! Graph neural network solver for MaxCut and maximum independent set,
//! trained without labels against a QUBO Hamiltonian.
//!
//! The pipeline: [`graph`] samples random regular graphs, [`qubo`] encodes
//! them, [`gnn`] holds the two-layer GCN with hand-written gradients,
//! [`trainer`] runs the eight architecture variants, [`metrics`] scores the
//! portfolio and [`oracle`] supplies exhaustive ground truth for small
//! instances. [`experiment`] drives whole grids from disk.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod gnn;
pub mod gradcheck;
pub mod graph;
pub mod metrics;
pub mod oracle;
pub mod qubo;
pub mod seed;
pub mod trainer;

pub use error::{Error, Result};
pub use graph::{generate_regular, Graph};
pub use qubo::{Problem, QuboInstance, Regularizer, TNorm};
pub use trainer::{train, RunResult, TrainConfig, Variant};
