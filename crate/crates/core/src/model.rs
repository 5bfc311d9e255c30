//! Immutable problem data: tasks, fleet, distances and timing parameters.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;

/// Index into the instance distance matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PositionId(pub usize);

impl PositionId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

/// Task identifier. Ids are `1..=n`; `0` is reserved for the route separator
/// of the flat dual-chain notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TaskId(pub usize);

impl TaskId {
    /// Zero-based dense index (`id - 1`).
    #[inline]
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1);
        self.0 - 1
    }

    #[inline]
    pub fn from_index(index: usize) -> Self {
        TaskId(index + 1)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A transport task from a pasting chamber to a curing chamber.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: TaskId,
    pub source: PositionId,
    pub dest: PositionId,
    /// Curing due time in seconds.
    pub due: f64,
    /// Handling duration inside the curing chamber, seconds.
    pub handling: f64,
}

/// Initial positions of the carriers and shuttles.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fleet {
    pub carrier_starts: Vec<PositionId>,
    pub shuttle_starts: Vec<PositionId>,
}

impl Fleet {
    pub fn carriers(&self) -> usize {
        self.carrier_starts.len()
    }

    pub fn shuttles(&self) -> usize {
        self.shuttle_starts.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Meters per second.
    pub velocity: f64,
    pub attach: f64,
    pub detach: f64,
    pub pickup: f64,
    /// Weight of distance against tardiness in the objective.
    pub lambda: f64,
}

impl Default for TimingParams {
    fn default() -> Self {
        TimingParams {
            velocity: 1.2,
            attach: 8.0,
            detach: 8.0,
            pickup: 30.0,
            lambda: 0.4,
        }
    }
}

impl TimingParams {
    /// `attach + pickup + detach`, the fixed part of every coupled leg.
    pub fn fixed_durations(&self) -> f64 {
        self.attach + self.pickup + self.detach
    }
}

/// Square distance matrix in meters, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    size: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Builds a matrix from rows. Fails only if the rows are ragged; value
    /// rules (symmetry, sign, diagonal) are checked by [`Instance::validate`].
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let size = rows.len();
        let mut data = Vec::with_capacity(size * size);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != size {
                return Err(ModelError::RaggedMatrix {
                    row: r,
                    len: row.len(),
                    expected: size,
                });
            }
            data.extend(row);
        }
        Ok(DistanceMatrix { size, data })
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(size * size);
        for a in 0..size {
            for b in 0..size {
                data.push(f(a, b));
            }
        }
        DistanceMatrix { size, data }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn get(&self, a: PositionId, b: PositionId) -> f64 {
        self.data[a.0 * self.size + b.0]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.size.max(1)).map(|r| r.to_vec()).take(self.size).collect()
    }

    pub fn max_entry(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// One broken instance rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

/// A complete scheduling instance. Fields are public so that broken instances
/// can be represented and reported on; solvers expect an instance for which
/// [`Instance::validate`] returns no violations.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub name: String,
    /// Tasks sorted by id, ids `1..=n`.
    pub tasks: Vec<TaskSpec>,
    pub fleet: Fleet,
    pub dist: DistanceMatrix,
    pub timing: TimingParams,
}

impl Instance {
    /// Builds an instance, sorting tasks by id and rejecting it if any rule fails.
    pub fn new(
        name: impl Into<String>,
        mut tasks: Vec<TaskSpec>,
        fleet: Fleet,
        dist: DistanceMatrix,
        timing: TimingParams,
    ) -> Result<Self, ModelError> {
        tasks.sort_by_key(|t| t.id);
        let inst = Instance {
            name: name.into(),
            tasks,
            fleet,
            dist,
            timing,
        };
        let violations = inst.validate();
        if violations.is_empty() {
            Ok(inst)
        } else {
            Err(ModelError::Invalid(violations))
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.tasks.len()
    }

    #[inline]
    pub fn carriers(&self) -> usize {
        self.fleet.carriers()
    }

    #[inline]
    pub fn shuttles(&self) -> usize {
        self.fleet.shuttles()
    }

    #[inline]
    pub fn task(&self, id: TaskId) -> &TaskSpec {
        &self.tasks[id.index()]
    }

    pub fn task_ids(&self) -> impl Iterator<Item = TaskId> + '_ {
        self.tasks.iter().map(|t| t.id)
    }

    #[inline]
    pub fn distance(&self, a: PositionId, b: PositionId) -> f64 {
        self.dist.get(a, b)
    }

    /// Travel time in seconds between two positions.
    pub fn travel_time(&self, a: PositionId, b: PositionId) -> Result<f64, ModelError> {
        for p in [a, b] {
            if p.0 >= self.dist.size() {
                return Err(ModelError::PositionOutOfRange {
                    position: p.0,
                    positions: self.dist.size(),
                });
            }
        }
        Ok(self.travel_time_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn travel_time_unchecked(&self, a: PositionId, b: PositionId) -> f64 {
        self.dist.get(a, b) / self.timing.velocity
    }

    /// Every broken invariant, in a stable order. Empty iff the instance is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut push = |field: String, rule: &'static str| out.push(Violation { field, rule });

        let size = self.dist.size();
        for a in 0..size {
            let a_id = PositionId(a);
            let diag = self.dist.get(a_id, a_id);
            if diag != 0.0 {
                push(format!("dist[{a}][{a}]"), "nonzero diagonal distance");
            }
            for b in 0..size {
                let d = self.dist.get(a_id, PositionId(b));
                if !d.is_finite() || d < 0.0 {
                    push(format!("dist[{a}][{b}]"), "negative or non-finite distance");
                }
                if b > a && d != self.dist.get(PositionId(b), a_id) {
                    push(format!("dist[{a}][{b}]"), "asymmetric distance");
                }
            }
        }

        if self.fleet.carrier_starts.is_empty() {
            push("fleet.carrier_starts".into(), "empty carrier fleet");
        }
        if self.fleet.shuttle_starts.is_empty() {
            push("fleet.shuttle_starts".into(), "empty shuttle fleet");
        }
        for (r, p) in self.fleet.carrier_starts.iter().enumerate() {
            if p.0 >= size {
                push(format!("fleet.carrier_starts[{r}]"), "position out of range");
            }
        }
        for (r, p) in self.fleet.shuttle_starts.iter().enumerate() {
            if p.0 >= size {
                push(format!("fleet.shuttle_starts[{r}]"), "position out of range");
            }
        }

        let n = self.tasks.len();
        let mut seen = vec![false; n];
        for (k, t) in self.tasks.iter().enumerate() {
            if t.id.0 == 0 || t.id.0 > n {
                push(format!("tasks[{k}].id"), "task id outside 1..=n");
            } else if std::mem::replace(&mut seen[t.id.0 - 1], true) {
                push(format!("tasks[{k}].id"), "duplicate task id");
            } else if t.id.0 != k + 1 {
                push(format!("tasks[{k}].id"), "tasks not sorted by id");
            }
            if t.source.0 >= size {
                push(format!("tasks[{k}].source"), "position out of range");
            }
            if t.dest.0 >= size {
                push(format!("tasks[{k}].dest"), "position out of range");
            }
            if !(t.due >= 0.0) || !t.due.is_finite() {
                push(format!("tasks[{k}].due"), "due time must be finite and >= 0");
            }
            if !(t.handling >= 0.0) || !t.handling.is_finite() {
                push(format!("tasks[{k}].handling"), "handling must be finite and >= 0");
            }
        }

        let tp = &self.timing;
        if !(tp.velocity > 0.0) || !tp.velocity.is_finite() {
            push("timing.velocity".into(), "velocity must be > 0");
        }
        for (name, v) in [("attach", tp.attach), ("detach", tp.detach), ("pickup", tp.pickup)] {
            if !(v >= 0.0) || !v.is_finite() {
                push(format!("timing.{name}"), "duration must be finite and >= 0");
            }
        }
        if !(0.0..=1.0).contains(&tp.lambda) {
            push("timing.lambda".into(), "lambda must lie in [0, 1]");
        }
        out
    }

    /// Fixed SA temperature `mu * sum(d(s_i, e_i)) / (n * (m+ + m-))`.
    pub fn temperature(&self, mu: f64) -> f64 {
        let n = self.n().max(1) as f64;
        let direct: f64 = self.tasks.iter().map(|t| self.distance(t.source, t.dest)).sum();
        mu * direct / (n * (self.carriers() + self.shuttles()) as f64)
    }

    /// Wall budget `zeta * n^2 * (m+ + m-)`, in milliseconds.
    pub fn default_budget_ms(&self, zeta: f64) -> u64 {
        let n = self.n() as f64;
        (zeta * n * n * (self.carriers() + self.shuttles()) as f64).round() as u64
    }

    /// Same instance with a different fleet; AGV starts cycle over the given lists.
    pub fn with_fleet_size(&self, carriers: usize, shuttles: usize) -> Instance {
        let pick = |starts: &[PositionId], k: usize| -> Vec<PositionId> {
            (0..k).map(|r| starts[r % starts.len()]).collect()
        };
        Instance {
            name: format!("{}_C{}_S{}", self.name, carriers, shuttles),
            tasks: self.tasks.clone(),
            fleet: Fleet {
                carrier_starts: pick(&self.fleet.carrier_starts, carriers),
                shuttle_starts: pick(&self.fleet.shuttle_starts, shuttles),
            },
            dist: self.dist.clone(),
            timing: self.timing,
        }
    }
}
