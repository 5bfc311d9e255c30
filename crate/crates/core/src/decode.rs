//! Firing-driven decoding: evaluates a dual chain by firing the transitions of
//! its net, computing each task's timeline as it fires. Running out of enabled
//! transitions before the final marking means the chain deadlocks.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::ChainError;
use crate::model::{Instance, PositionId, TaskId, TaskSpec};
use crate::solution::{DualChain, Marking, Side, SolutionNet};

/// Timeline of one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskTiming {
    /// Carrier leaves its previous destination.
    pub start: f64,
    /// Carrier reaches the shuttle and attachment begins.
    pub attach: f64,
    /// Shuttle detached at the curing chamber; the carrier is free.
    pub detach: f64,
    /// Shuttle finished handling.
    pub completion: f64,
    /// Carrier dwell before starting.
    pub wait: f64,
    pub distance: f64,
    pub tardiness: f64,
}

impl TaskTiming {
    /// Weighted cost `lambda * distance + (1 - lambda) * tardiness`.
    pub fn cost(&self, lambda: f64) -> f64 {
        lambda * self.distance + (1.0 - lambda) * self.tardiness
    }
}

/// Work counters of one decode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeStats {
    pub transitions_fired: usize,
    pub places_visited: usize,
    pub enabled_checks: usize,
}

impl DecodeStats {
    pub fn total(&self) -> usize {
        self.transitions_fired + self.places_visited + self.enabled_checks
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    /// Indexed by task index; `None` for unplaced or unfired tasks.
    pub per_task: Vec<Option<TaskTiming>>,
    /// `f64::INFINITY` iff infeasible.
    pub objective: f64,
    pub feasible: bool,
    pub firing_order: Vec<TaskId>,
    pub stats: DecodeStats,
}

impl Schedule {
    pub fn timing(&self, t: TaskId) -> Option<&TaskTiming> {
        self.per_task.get(t.index()).and_then(Option::as_ref)
    }

    pub fn total_distance(&self) -> f64 {
        self.per_task.iter().flatten().map(|t| t.distance).sum()
    }

    pub fn total_tardiness(&self) -> f64 {
        self.per_task.iter().flatten().map(|t| t.tardiness).sum()
    }
}

/// How FDD picks among concurrently enabled transitions.
///
/// Every policy yields the same schedule on a feasible chain; only the
/// recorded firing order differs.
pub enum TieBreak<'a> {
    /// The transition holding the lowest-indexed shuttle's token. Each shuttle
    /// holds at most one enabled transition, so this is a total order.
    LowestShuttle,
    LowestId,
    Random(&'a mut dyn RngCore),
}

/// Carrier travel for a task: own previous destination, to the shuttle's
/// waiting position, to the source, to the destination.
pub fn leg_distance(inst: &Instance, carrier_prev_dest: PositionId, shuttle_prev_dest: PositionId, task: &TaskSpec) -> f64 {
    inst.distance(carrier_prev_dest, shuttle_prev_dest)
        + inst.distance(shuttle_prev_dest, task.source)
        + inst.distance(task.source, task.dest)
}

/// Carrier dwell so that it never reaches the shuttle before the shuttle is done.
pub fn carrier_wait(
    inst: &Instance,
    shuttle_prev_completion: f64,
    carrier_prev_detach: f64,
    carrier_prev_dest: PositionId,
    shuttle_prev_dest: PositionId,
) -> f64 {
    let arrive = carrier_prev_detach + inst.travel_time_unchecked(carrier_prev_dest, shuttle_prev_dest);
    (shuttle_prev_completion - arrive).max(0.0)
}

/// Start, attach and detach instants of a task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetachTimes {
    pub start: f64,
    pub attach: f64,
    pub detach: f64,
}

pub fn detach_time(
    inst: &Instance,
    carrier_prev_detach: f64,
    wait: f64,
    carrier_prev_dest: PositionId,
    shuttle_prev_dest: PositionId,
    task: &TaskSpec,
) -> DetachTimes {
    let tp = &inst.timing;
    let start = carrier_prev_detach + wait;
    let attach = start + inst.travel_time_unchecked(carrier_prev_dest, shuttle_prev_dest);
    let detach = attach
        + tp.attach
        + inst.travel_time_unchecked(shuttle_prev_dest, task.source)
        + tp.pickup
        + inst.travel_time_unchecked(task.source, task.dest)
        + tp.detach;
    DetachTimes { start, attach, detach }
}

/// `(completion, tardiness)` of a task detached at `detach`.
pub fn completion_and_tardiness(task: &TaskSpec, detach: f64) -> (f64, f64) {
    let completion = detach + task.handling;
    (completion, (completion - task.due).max(0.0))
}

/// Checks that a chain was built for this instance's task set and fleet.
pub fn check_chain(inst: &Instance, chain: &DualChain) -> Result<(), ChainError> {
    if chain.n_tasks() != inst.n() {
        return Err(ChainError::UnknownTask(chain.n_tasks(), inst.n()));
    }
    for (side, expected) in [(Side::Carrier, inst.carriers()), (Side::Shuttle, inst.shuttles())] {
        if chain.agvs(side) != expected {
            return Err(ChainError::FleetMismatch {
                side,
                expected,
                found: chain.agvs(side),
            });
        }
    }
    Ok(())
}

/// Decodes a dual chain with the default tie-break.
pub fn fdd(inst: &Instance, chain: &DualChain) -> Result<Schedule, ChainError> {
    check_chain(inst, chain)?;
    Ok(decode_net(inst, &SolutionNet::build(chain), TieBreak::LowestShuttle))
}

/// Decodes a net, ignoring its stored marking.
pub fn decode_net(inst: &Instance, net: &SolutionNet, tie: TieBreak<'_>) -> Schedule {
    run(inst, net, tie, None)
}

/// Decodes and records every marking from `M0` to the last one reached.
pub fn decode_traced(inst: &Instance, net: &SolutionNet, tie: TieBreak<'_>) -> (Schedule, Vec<Marking>) {
    let mut trace = Vec::new();
    let s = run(inst, net, tie, Some(&mut trace));
    (s, trace)
}

fn run(inst: &Instance, net: &SolutionNet, mut tie: TieBreak<'_>, mut trace: Option<&mut Vec<Marking>>) -> Schedule {
    let n = net.n_tasks();
    let mut marking = net.initial_marking();
    let mut per_task: Vec<Option<TaskTiming>> = vec![None; n];
    let mut firing_order = Vec::with_capacity(n);
    let mut stats = DecodeStats::default();

    if let Some(tr) = trace.as_deref_mut() {
        tr.push(marking.clone());
    }

    // Heads on both sides are the only transitions enabled at M0.
    let mut pool: Vec<TaskId> = Vec::new();
    for head in net.heads(Side::Carrier).flatten() {
        stats.enabled_checks += 1;
        if net.is_enabled_in(&marking, head) {
            pool.push(head);
        }
    }

    let links_c = net.links(Side::Carrier);
    let links_s = net.links(Side::Shuttle);

    while !pool.is_empty() {
        let pick = match &mut tie {
            TieBreak::LowestShuttle => argmin(&pool, |t| links_s[t.index()].map_or(u32::MAX, |l| l.agv) as usize),
            TieBreak::LowestId => argmin(&pool, |t| t.0),
            TieBreak::Random(rng) => rng.gen_range(0..pool.len()),
        };
        let t = pool.swap_remove(pick);
        let cl = links_c[t.index()].expect("fired transition is placed");
        let sl = links_s[t.index()].expect("fired transition is placed");

        let (c_dest, c_detach) = match cl.pred {
            Some(p) => (inst.task(p).dest, per_task[p.index()].expect("predecessor fired").detach),
            None => (inst.fleet.carrier_starts[cl.agv as usize], 0.0),
        };
        let (s_dest, s_done) = match sl.pred {
            Some(q) => (inst.task(q).dest, per_task[q.index()].expect("predecessor fired").completion),
            None => (inst.fleet.shuttle_starts[sl.agv as usize], 0.0),
        };
        let spec = inst.task(t);
        let wait = carrier_wait(inst, s_done, c_detach, c_dest, s_dest);
        let times = detach_time(inst, c_detach, wait, c_dest, s_dest, spec);
        let (completion, tardiness) = completion_and_tardiness(spec, times.detach);
        per_task[t.index()] = Some(TaskTiming {
            start: times.start,
            attach: times.attach,
            detach: times.detach,
            completion,
            wait,
            distance: leg_distance(inst, c_dest, s_dest, spec),
            tardiness,
        });

        let post = net.fire_in(&mut marking, t).expect("pool holds enabled transitions only");
        stats.transitions_fired += 1;
        stats.places_visited += 4;
        firing_order.push(t);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(marking.clone());
        }

        for (k, p) in post.into_iter().enumerate() {
            if let Some(next) = net.place_postset(p) {
                // Both output places may feed the same transition.
                if k == 1 && net.place_postset(post[0]) == Some(next) {
                    continue;
                }
                stats.enabled_checks += 1;
                if net.is_enabled_in(&marking, next) {
                    pool.push(next);
                }
            }
        }
    }

    let feasible = net.is_final_marking(&marking);
    let objective = if feasible {
        let lambda = inst.timing.lambda;
        let (dist, tard) = per_task
            .iter()
            .flatten()
            .fold((0.0, 0.0), |(d, tt), x| (d + x.distance, tt + x.tardiness));
        lambda * dist + (1.0 - lambda) * tard
    } else {
        f64::INFINITY
    };
    Schedule {
        per_task,
        objective,
        feasible,
        firing_order,
        stats,
    }
}

#[inline]
fn argmin<K: Ord>(pool: &[TaskId], key: impl Fn(TaskId) -> K) -> usize {
    let mut best = 0;
    for i in 1..pool.len() {
        if key(pool[i]) < key(pool[best]) {
            best = i;
        }
    }
    best
}
