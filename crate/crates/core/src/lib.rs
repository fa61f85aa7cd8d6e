//! Simulation library for distributed mini-batch online prediction and
//! stochastic optimization.
//!
//! Serial update rules plug into a serial loop, a mini-batch loop, and a
//! distributed mini-batch engine running over a simulated tree network.
//! The [`analysis`] module evaluates the matching regret, optimality-gap and
//! speed-up bounds.

pub mod analysis;
pub mod bregman;
pub mod dmb;
pub mod error;
pub mod feasible;
pub mod ledger;
pub mod loss;
pub mod minibatch;
pub mod network;
pub mod opt;
pub mod problem;
pub mod rng;
pub mod schedule;
pub mod stats;
pub mod update;
pub mod vector;

pub use bregman::{bregman, BregmanGenerator};
pub use dmb::{run_dmb, run_interlaced, run_no_comm, BatchSchedule, DmbOptions, DmbOutcome, DmbTrace};
pub use error::{Error, Result};
pub use feasible::{project, FeasibleSet};
pub use ledger::{Checkpoint, RegretLedger, RegretTerm};
pub use loss::Loss;
pub use minibatch::{run_minibatch, run_minibatch_with, run_serial, run_serial_with, RunOptions, RunOutcome};
pub use network::{build_tree, compute_mu, vector_sum, vector_sum_time, SpanningTree, Topology};
pub use opt::{optimality_gap, run_dmb_opt, run_minibatch_opt, OptRun};
pub use problem::{logistic_stream, Problem, Source};
pub use rng::Rng;
pub use schedule::Schedule;
pub use update::{Rule, UpdateState};
pub use vector::Vector;
