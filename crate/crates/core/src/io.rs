//! JSON instance and solution documents, CSV tables.
//!
//! Positions are 0-based indices into the distance matrix; task ids are
//! 1-based. Distances are given explicitly or derived rectilinearly from
//! coordinates.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::decode::{fdd, Schedule, TaskTiming};
use crate::error::IoError;
use crate::generate::rectilinear;
use crate::model::{DistanceMatrix, Fleet, Instance, TaskId, TaskSpec, TimingParams};
use crate::solution::{DualChain, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub name: String,
    /// Number of positions; checked against the matrix when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub positions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coordinates: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<Vec<f64>>>,
    pub tasks: Vec<TaskSpec>,
    pub fleet: Fleet,
    #[serde(default)]
    pub params: TimingParams,
}

impl From<&Instance> for InstanceFile {
    fn from(inst: &Instance) -> Self {
        InstanceFile {
            name: inst.name.clone(),
            positions: Some(inst.dist.size()),
            coordinates: None,
            distances: Some(inst.dist.rows()),
            tasks: inst.tasks.clone(),
            fleet: inst.fleet.clone(),
            params: inst.timing,
        }
    }
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<Instance, IoError> {
        let dist = match (self.distances, self.coordinates) {
            (Some(rows), _) => DistanceMatrix::from_rows(rows)?,
            (None, Some(c)) => rectilinear(&c.iter().map(|p| (p[0], p[1])).collect::<Vec<_>>()),
            (None, None) => return Err(IoError::Format("either `distances` or `coordinates` is required".into())),
        };
        if let Some(k) = self.positions {
            if k != dist.size() {
                return Err(IoError::Format(format!(
                    "positions: {k} declared but the distance matrix has {}",
                    dist.size()
                )));
            }
        }
        Ok(Instance::new(self.name, self.tasks, self.fleet, dist, self.params)?)
    }
}

pub fn instance_from_str(text: &str) -> Result<Instance, IoError> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

pub fn instance_to_string(inst: &Instance) -> String {
    serde_json::to_string_pretty(&InstanceFile::from(inst)).expect("instances serialize") + "\n"
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<Instance, IoError> {
    instance_from_str(&read(path.as_ref())?)
}

pub fn save_instance(inst: &Instance, path: impl AsRef<Path>) -> Result<(), IoError> {
    write(path.as_ref(), &instance_to_string(inst))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub id: TaskId,
    pub start: f64,
    pub attach: f64,
    pub detach: f64,
    pub completion: f64,
    pub wait: f64,
    pub distance: f64,
    pub tardiness: f64,
}

impl TaskRecord {
    fn new(id: TaskId, t: &TaskTiming) -> Self {
        TaskRecord {
            id,
            start: t.start,
            attach: t.attach,
            detach: t.detach,
            completion: t.completion,
            wait: t.wait,
            distance: t.distance,
            tardiness: t.tardiness,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub algorithm: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub budget_ms: Option<u64>,
    #[serde(default)]
    pub iterations: Option<u64>,
    #[serde(default)]
    pub elapsed_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance: String,
    pub carrier_routes: Vec<Vec<TaskId>>,
    pub shuttle_routes: Vec<Vec<TaskId>>,
    pub tasks: Vec<TaskRecord>,
    /// `null` for a deadlocked chain.
    pub objective: Option<f64>,
    pub feasible: bool,
    pub solver: SolverMeta,
}

/// Outcome of re-decoding a stored solution.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub feasible: bool,
    pub objective: Option<f64>,
    pub objective_matches: bool,
    pub timings_match: bool,
}

impl Verification {
    pub fn ok(&self) -> bool {
        self.objective_matches && self.timings_match
    }
}

impl SolutionFile {
    pub fn new(inst: &Instance, chain: &DualChain, schedule: &Schedule, solver: SolverMeta) -> Self {
        SolutionFile {
            instance: inst.name.clone(),
            carrier_routes: chain.routes(Side::Carrier).to_vec(),
            shuttle_routes: chain.routes(Side::Shuttle).to_vec(),
            tasks: records(schedule),
            objective: schedule.feasible.then_some(schedule.objective),
            feasible: schedule.feasible,
            solver,
        }
    }

    pub fn chain(&self, n_tasks: usize) -> Result<DualChain, IoError> {
        Ok(DualChain::new(n_tasks, self.carrier_routes.clone(), self.shuttle_routes.clone())?)
    }

    /// Decodes the stored chain and compares every stored number bit for bit.
    pub fn verify(&self, inst: &Instance) -> Result<Verification, IoError> {
        let schedule = fdd(inst, &self.chain(inst.n())?)?;
        let objective = schedule.feasible.then_some(schedule.objective);
        Ok(Verification {
            feasible: schedule.feasible,
            objective,
            objective_matches: objective.map(f64::to_bits) == self.objective.map(f64::to_bits)
                && schedule.feasible == self.feasible,
            timings_match: records(&schedule) == self.tasks,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solutions serialize") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, IoError> {
        Ok(serde_json::from_str(&read(path.as_ref())?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), IoError> {
        write(path.as_ref(), &self.to_json())
    }
}

fn records(schedule: &Schedule) -> Vec<TaskRecord> {
    schedule
        .per_task
        .iter()
        .enumerate()
        .filter_map(|(k, t)| t.as_ref().map(|t| TaskRecord::new(TaskId::from_index(k), t)))
        .collect()
}

/// Writes rows with a header line.
pub fn write_csv<T: Serialize>(path: impl AsRef<Path>, rows: &[T]) -> Result<(), IoError> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| IoError::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn read_csv<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, IoError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alns::initial_solution;
    use crate::generate::{generate, GenSpec};

    #[test]
    fn instance_round_trip_is_exact() {
        let inst = generate(&GenSpec::new(7, 2, 3, 5)).unwrap();
        let text = instance_to_string(&inst);
        assert_eq!(instance_from_str(&text).unwrap(), inst);
        assert_eq!(instance_to_string(&instance_from_str(&text).unwrap()), text);
    }

    #[test]
    fn coordinates_give_rectilinear_distances() {
        let text = r#"{
            "name": "tiny",
            "coordinates": [[0, 0], [3, 4]],
            "tasks": [{"id": 1, "source": 0, "dest": 1, "due": 100, "handling": 10}],
            "fleet": {"carrier_starts": [0], "shuttle_starts": [1]}
        }"#;
        let inst = instance_from_str(text).unwrap();
        assert_eq!(inst.dist.rows(), vec![vec![0.0, 7.0], vec![7.0, 0.0]]);
        assert_eq!(inst.timing, TimingParams::default());
    }

    #[test]
    fn errors_name_the_problem() {
        let err = instance_from_str(r#"{"name": "x", "tasks": [], "fleet": {"carrier_starts": [], "shuttle_starts": []}}"#)
            .unwrap_err();
        assert!(matches!(err, IoError::Format(_)));
        let err = instance_from_str("{\n  \"name\": 3\n}").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let text = r#"{"name": "x", "distances": [[0]], "tasks": [],
            "fleet": {"carrier_starts": [], "shuttle_starts": [0]}}"#;
        let err = instance_from_str(text).unwrap_err();
        assert!(err.to_string().contains("fleet.carrier"), "{err}");
    }

    #[test]
    fn solution_round_trip_verifies() {
        let inst = generate(&GenSpec::new(6, 2, 2, 11)).unwrap();
        let chain = initial_solution(&inst);
        let s = fdd(&inst, &chain).unwrap();
        let file = SolutionFile::new(&inst, &chain, &s, SolverMeta::default());
        let back: SolutionFile = serde_json::from_str(&file.to_json()).unwrap();
        assert_eq!(back, file);
        assert!(back.verify(&inst).unwrap().ok());

        let mut tampered = back.clone();
        tampered.objective = Some(tampered.objective.unwrap() + 1e-9);
        assert!(!tampered.verify(&inst).unwrap().objective_matches);
    }

    #[test]
    fn deadlocked_solution_stores_null() {
        let inst = crate::model::tests::three_task_instance();
        let chain = DualChain::from_flat(3, &[0, 1, 2, 3], &[0, 2, 1, 0, 3]).unwrap();
        let s = fdd(&inst, &chain).unwrap();
        let file = SolutionFile::new(&inst, &chain, &s, SolverMeta::default());
        assert!(file.to_json().contains("\"objective\": null"));
        assert!(file.verify(&inst).unwrap().ok());
    }
}
