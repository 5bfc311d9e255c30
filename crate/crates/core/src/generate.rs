//! Synthetic instances on a two-row corridor: pasting chambers along one
//! wall, curing chambers along the other, rectilinear distances between them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{DistanceMatrix, Fleet, Instance, PositionId, TaskId, TaskSpec, TimingParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub n: usize,
    pub carriers: usize,
    pub shuttles: usize,
    /// Chambers per row.
    pub chambers_per_row: usize,
    /// Fraction of tasks with tight due dates, in `[0, 1]`.
    pub tightness: f64,
    pub seed: u64,
    /// Meters between neighbouring chambers in a row.
    pub spacing: f64,
    /// Meters between the two rows.
    pub corridor: f64,
}

impl GenSpec {
    pub fn new(n: usize, carriers: usize, shuttles: usize, seed: u64) -> Self {
        GenSpec {
            n,
            carriers,
            shuttles,
            chambers_per_row: 8,
            tightness: 0.5,
            seed,
            spacing: 15.0,
            corridor: 20.0,
        }
    }

    pub fn name(&self) -> String {
        format!(
            "G{}_C{}_S{}_t{}_s{}",
            self.n,
            self.carriers,
            self.shuttles,
            (self.tightness * 100.0).round(),
            self.seed
        )
    }
}

/// Corridor position `k`: pasting row for `k < per_row`, curing row after.
pub fn corridor_coordinates(per_row: usize, spacing: f64, corridor: f64) -> Vec<(f64, f64)> {
    (0..2 * per_row)
        .map(|k| ((k % per_row) as f64 * spacing, if k < per_row { 0.0 } else { corridor }))
        .collect()
}

pub fn rectilinear(coords: &[(f64, f64)]) -> DistanceMatrix {
    DistanceMatrix::from_fn(coords.len(), |a, b| {
        (coords[a].0 - coords[b].0).abs() + (coords[a].1 - coords[b].1).abs()
    })
}

/// Builds an instance; the same spec always yields the same instance.
pub fn generate(spec: &GenSpec) -> Result<Instance, ModelError> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let per_row = spec.chambers_per_row.max(1);
    let coords = corridor_coordinates(per_row, spec.spacing, spec.corridor);
    let dist = rectilinear(&coords);
    let timing = TimingParams::default();

    let mut tasks: Vec<TaskSpec> = (1..=spec.n)
        .map(|id| TaskSpec {
            id: TaskId(id),
            source: PositionId(rng.gen_range(0..per_row)),
            dest: PositionId(per_row + rng.gen_range(0..per_row)),
            due: 0.0,
            handling: rng.gen_range(60.0..180.0f64).round(),
        })
        .collect();

    // No feasible schedule finishes a task later than the serial sum of
    // every task's longest possible duration.
    let max_travel = dist.max_entry() / timing.velocity;
    let horizon: f64 = tasks
        .iter()
        .map(|t| t.handling + timing.fixed_durations() + 3.0 * max_travel)
        .sum();
    let lanes = spec.carriers.min(spec.shuttles).max(1) as f64;
    let mut order: Vec<usize> = (0..spec.n).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    for (rank, &k) in order.iter().enumerate() {
        let tight = rng.gen::<f64>() < spec.tightness;
        let u = rng.gen::<f64>();
        tasks[k].due = if tight {
            let expected = (rank + 1) as f64 / spec.n as f64 * horizon / lanes;
            (expected * (0.3 + 0.5 * u)).round()
        } else {
            (horizon * (1.0 + 0.5 * u)).ceil()
        };
    }

    let starts = |k: usize, rng: &mut ChaCha8Rng| (0..k).map(|_| PositionId(rng.gen_range(0..2 * per_row))).collect();
    let fleet = Fleet {
        carrier_starts: starts(spec.carriers, &mut rng),
        shuttle_starts: starts(spec.shuttles, &mut rng),
    };
    Instance::new(spec.name(), tasks, fleet, dist, timing)
}
