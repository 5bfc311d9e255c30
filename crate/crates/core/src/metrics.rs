//! Evaluation metrics: relative percentage deviation, BRS acceleration and
//! infeasible-position proportion.

use serde::{Deserialize, Serialize};

use crate::deadlock::{search, Scratch};
use crate::error::MetricError;
use crate::model::TaskId;
use crate::solution::{DualChain, Side, Solution};

/// One solver run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub algorithm: String,
    pub seed: u64,
    /// Best objective; `inf` when infeasible.
    pub objective: f64,
    /// Completed destroy–repair cycles.
    pub iterations: u64,
    pub elapsed_ms: f64,
    pub budget_ms: Option<u64>,
    pub with_brs: bool,
}

/// `(f - best) / best * 100`.
pub fn rpd(f: f64, best: f64) -> Result<f64, MetricError> {
    if !(best > 0.0) {
        return Err(MetricError::NonPositiveReference(best));
    }
    if f < best {
        return Err(MetricError::BelowReference { f, best });
    }
    Ok((f - best) / best * 100.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Acceleration {
    /// Extra iterations with BRS, percent.
    pub a_r: f64,
    /// RPD without BRS minus RPD with BRS, percentage points.
    pub g_ap: f64,
}

/// Compares a run with BRS against its pair without. RPDs are taken against
/// `best`, the best objective of all compared runs on the instance.
pub fn acceleration_metrics(with: &RunRecord, without: &RunRecord, best: f64) -> Result<Acceleration, MetricError> {
    if with.instance != without.instance {
        return Err(MetricError::Unpaired("different instances"));
    }
    if with.budget_ms != without.budget_ms {
        return Err(MetricError::Unpaired("different budgets"));
    }
    if !with.with_brs || without.with_brs {
        return Err(MetricError::Unpaired("expected one run with BRS and one without"));
    }
    if without.iterations == 0 {
        return Err(MetricError::Unpaired("reference run completed no iterations"));
    }
    let (xa, xo) = (with.iterations as f64, without.iterations as f64);
    Ok(Acceleration {
        a_r: (xa - xo) / xo * 100.0,
        g_ap: rpd(without.objective, best)? - rpd(with.objective, best)?,
    })
}

/// Infeasible shuttle slots summed over every carrier slot for an unplaced task.
pub fn infeasible_pairs(chain: &DualChain, task: TaskId) -> usize {
    debug_assert!(!chain.is_placed(task));
    let sol = Solution::new(chain.clone());
    let mut scratch = Scratch::new(chain.n_tasks());
    let mut total = 0;
    for cs in chain.slots(Side::Carrier) {
        let mut hit = std::collections::BTreeSet::new();
        search(&sol, cs, &mut scratch, |s, _| {
            hit.insert(s);
        });
        total += hit.len();
    }
    total
}

/// Share of slot pairs that would deadlock, percent, for re-inserting `task`.
pub fn ipp(chain: &DualChain, task: TaskId) -> f64 {
    let pairs = chain.slot_count(Side::Carrier) * chain.slot_count(Side::Shuttle);
    if pairs == 0 {
        return 0.0;
    }
    infeasible_pairs(chain, task) as f64 / pairs as f64 * 100.0
}

/// Predicted cost of BRS-pruned insertion relative to a full scan, counting
/// one unit per BRS call.
pub fn complexity_ratio(infeasible_pairs: usize, carrier_slots: usize, shuttle_slots: usize) -> f64 {
    let total = (carrier_slots * shuttle_slots) as f64;
    1.0 - (infeasible_pairs as f64 - carrier_slots as f64) / total
}
