//! Latency modeling and resource scheduling for split federated learning.
//!
//! The crate is organized bottom-up:
//!
//! * [`workload`] loads per-layer architecture profiles and derives the
//!   cut-layer dependent compute, traffic and memory quantities.
//! * [`comm`] turns channel descriptions or tabulated rates into link rates.
//! * [`timing`] composes epoch and round latencies for ESFL and the FL, SL and
//!   SFL baselines.
//! * [`optimizer`] jointly picks a cut layer per user and splits the server's
//!   compute budget by alternating two exact subproblem solvers.
//! * [`simulator`] runs seeded Monte-Carlo rounds over heterogeneous user
//!   populations and aggregates latency and cut-layer reports.
//! * [`split`] is a small dense-network trainer that executes split updates and
//!   damped federated aggregation, used to check that splitting a network never
//!   changes the arithmetic of training.
//! * [`cli`] wires configuration documents to all of the above.

pub mod cli;
pub mod comm;
pub mod error;
pub mod optimizer;
pub mod simulator;
pub mod split;
pub mod timing;
pub mod workload;

pub use error::{EsflError, Result};
