//! Scheduling of attachable carrier/shuttle AGV fleets.
//!
//! A schedule is a dual chain of carrier and shuttle routes. Its Petri net
//! both evaluates it (firing-driven decoding) and certifies it deadlock-free;
//! bidirectional reachability search keeps the adaptive large neighborhood
//! search inside the feasible region without evaluating doomed insertions.

pub mod alns;
pub mod baselines;
pub mod decode;
pub mod deadlock;
pub mod error;
pub mod experiment;
pub mod generate;
pub mod io;
pub mod metrics;
pub mod model;
pub mod parallel;
pub mod solution;

pub use decode::{fdd, Schedule, TaskTiming};
pub use model::{DistanceMatrix, Fleet, Instance, PositionId, TaskId, TaskSpec, TimingParams};
pub use solution::{DualChain, Side, Slot, Solution, SolutionNet};
