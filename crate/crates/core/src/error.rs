use thiserror::Error;

use crate::solution::Side;
use crate::model::{TaskId, Violation};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("distance matrix row {row} has {len} entries, expected {expected}")]
    RaggedMatrix { row: usize, len: usize, expected: usize },
    #[error("position {position} out of range (instance has {positions} positions)")]
    PositionOutOfRange { position: usize, positions: usize },
    #[error("invalid instance: {}", join(.0))]
    Invalid(Vec<Violation>),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// A dual chain that does not describe a valid assignment.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChainError {
    #[error("task {0} appears more than once on the {1} side")]
    Duplicate(TaskId, Side),
    #[error("task {0} is placed on the {1} side only")]
    OneSided(TaskId, Side),
    #[error("task id {0} is outside the task universe 1..={1}")]
    UnknownTask(usize, usize),
    #[error("task {0} is already placed")]
    AlreadyPlaced(TaskId),
    #[error("task {0} is not placed")]
    NotPlaced(TaskId),
    #[error("{side} AGV {agv} does not exist")]
    NoSuchAgv { side: Side, agv: usize },
    #[error("gap {gap} out of range for {side} AGV {agv} (route length {len})")]
    GapOutOfRange { side: Side, agv: usize, gap: usize, len: usize },
    #[error("expected {expected} {side} routes, found {found}")]
    FleetMismatch { side: Side, expected: usize, found: usize },
}

/// Petri-net contract violations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetError {
    #[error("transition t{0} is not enabled")]
    NotEnabled(TaskId),
    #[error("transition t{0} has already fired")]
    AlreadyFired(TaskId),
    #[error("transition t{0} is not part of the net")]
    UnknownTransition(TaskId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BrsError {
    #[error("task {0} is already placed; the query expects it absent from both sides")]
    TaskPlaced(TaskId),
    #[error(transparent)]
    Chain(#[from] ChainError),
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{name} = {value} outside {range}")]
    OutOfRange { name: &'static str, value: f64, range: &'static str },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SizeError {
    #[error("instance has {n} tasks; brute force is limited to {max}")]
    TooManyTasks { n: usize, max: usize },
    #[error("instance has {agvs} AGVs; brute force is limited to {max}")]
    TooManyAgvs { agvs: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("reference objective must be positive, got {0}")]
    NonPositiveReference(f64),
    #[error("objective {f} is below the reference {best}")]
    BelowReference { f: f64, best: f64 },
    #[error("runs are not paired: {0}")]
    Unpaired(&'static str),
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}")]
    Read { path: String, source: std::io::Error },
    #[error("cannot write {path}")]
    Write { path: String, source: std::io::Error },
    #[error(transparent)]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
