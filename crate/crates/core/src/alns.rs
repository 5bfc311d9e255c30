//! Adaptive large neighborhood search.
//!
//! Destroy–repair iterations over a [`Solution`]: one of five removal
//! operators empties part of the chain, one of three greedy insertion
//! operators puts the tasks back at their cheapest feasible slot pair.
//! BRS prunes the slot pairs that would deadlock before they are decoded, so
//! every solution the search touches is feasible.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::deadlock::{search, Scratch};
use crate::decode::{decode_net, Schedule, TieBreak};
use crate::error::ConfigError;
use crate::model::{Instance, TaskId};
use crate::solution::{DualChain, Side, Slot, Solution};

/// When a run stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    /// `zeta * n^2 * (m+ + m-)` milliseconds of wall time.
    Default,
    WallMs(u64),
    /// Exactly this many destroy–repair iterations; deterministic.
    Iterations(u64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlnsConfig {
    pub mu: f64,
    pub phi: f64,
    pub rho: f64,
    pub kappa: usize,
    pub psi: f64,
    pub zeta: f64,
    /// Scores for a new best, an improvement, and an accepted non-improvement.
    pub scores: [f64; 3],
    pub seed: u64,
    pub budget: Budget,
    /// Prune with BRS; off means a full scan that decodes every slot pair.
    pub use_brs: bool,
    /// Also run the full scan at each insertion and count disagreements.
    pub audit: bool,
    /// Keep one log row per iteration.
    pub log: bool,
}

impl Default for AlnsConfig {
    fn default() -> Self {
        AlnsConfig {
            mu: 20.0,
            phi: 0.3,
            rho: 0.1,
            kappa: 15,
            psi: 0.3,
            zeta: 10.0,
            scores: [33.0, 9.0, 13.0],
            seed: 0,
            budget: Budget::Default,
            use_brs: true,
            audit: false,
            log: true,
        }
    }
}

impl AlnsConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name, value: f64| {
            if (0.0..=1.0).contains(&value) {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, value, range: "[0, 1]" })
            }
        };
        let positive = |name, value: f64| {
            if value > 0.0 && value.is_finite() {
                Ok(())
            } else {
                Err(ConfigError::OutOfRange { name, value, range: "(0, inf)" })
            }
        };
        unit("phi", self.phi)?;
        unit("rho", self.rho)?;
        unit("psi", self.psi)?;
        positive("mu", self.mu)?;
        positive("zeta", self.zeta)?;
        if self.kappa == 0 {
            return Err(ConfigError::OutOfRange { name: "kappa", value: 0.0, range: "[1, inf)" });
        }
        for (name, s) in ["score_best", "score_improved", "score_accepted"].into_iter().zip(self.scores) {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(ConfigError::OutOfRange { name, value: s, range: "[0, inf)" });
            }
        }
        Ok(())
    }

    /// Tasks removed per iteration, `max(1, round(phi * n))`.
    pub fn removal_count(&self, n: usize) -> usize {
        ((self.phi * n as f64).round() as usize).max(1).min(n)
    }

    pub fn budget_ms(&self, inst: &Instance) -> Option<u64> {
        match self.budget {
            Budget::Default => Some(inst.default_budget_ms(self.zeta)),
            Budget::WallMs(ms) => Some(ms),
            Budget::Iterations(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Removal {
    #[serde(rename = "RR")]
    Random,
    #[serde(rename = "HCR")]
    HighestCost,
    #[serde(rename = "LDR")]
    LongestDistance,
    #[serde(rename = "LTR")]
    LargestTardiness,
    #[serde(rename = "SR")]
    Shaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Insertion {
    #[serde(rename = "GI")]
    Greedy,
    #[serde(rename = "UGI")]
    Urgent,
    #[serde(rename = "CGI")]
    Costly,
}

impl Removal {
    pub const ALL: [Removal; 5] = [
        Removal::Random,
        Removal::HighestCost,
        Removal::LongestDistance,
        Removal::LargestTardiness,
        Removal::Shaw,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Removal::Random => "RR",
            Removal::HighestCost => "HCR",
            Removal::LongestDistance => "LDR",
            Removal::LargestTardiness => "LTR",
            Removal::Shaw => "SR",
        }
    }
}

impl Insertion {
    pub const ALL: [Insertion; 3] = [Insertion::Greedy, Insertion::Urgent, Insertion::Costly];

    pub fn code(self) -> &'static str {
        match self {
            Insertion::Greedy => "GI",
            Insertion::Urgent => "UGI",
            Insertion::Costly => "CGI",
        }
    }
}

impl fmt::Display for Removal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl fmt::Display for Insertion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Removal {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Removal::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown removal operator {s:?}"))
    }
}

impl FromStr for Insertion {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Insertion::ALL
            .into_iter()
            .find(|r| r.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown insertion operator {s:?}"))
    }
}

/// Adaptive state of one operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatorWeight {
    pub weight: f64,
    /// Score accumulated in the current segment.
    pub score: f64,
    /// Uses in the current segment.
    pub uses: u64,
    pub total_uses: u64,
    pub total_score: f64,
}

impl Default for OperatorWeight {
    fn default() -> Self {
        OperatorWeight {
            weight: 1.0,
            score: 0.0,
            uses: 0,
            total_uses: 0,
            total_score: 0.0,
        }
    }
}

/// Roulette wheel over one operator category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roulette<O> {
    pub ops: Vec<(O, OperatorWeight)>,
}

impl<O: Copy> Roulette<O> {
    pub fn new(ops: &[O]) -> Self {
        Roulette {
            ops: ops.iter().map(|&o| (o, OperatorWeight::default())).collect(),
        }
    }

    /// Draws operator `o` with probability `w_o / sum(w)` and counts the use.
    pub fn select(&mut self, rng: &mut impl Rng) -> usize {
        // Weights only decay towards zero; if all underflow, draw uniformly.
        let i = match WeightedIndex::new(self.ops.iter().map(|(_, w)| w.weight)) {
            Ok(dist) => dist.sample(rng),
            Err(_) => rng.gen_range(0..self.ops.len()),
        };
        let w = &mut self.ops[i].1;
        w.uses += 1;
        w.total_uses += 1;
        i
    }

    pub fn reward(&mut self, i: usize, score: f64) {
        let w = &mut self.ops[i].1;
        w.score += score;
        w.total_score += score;
    }

    /// End of segment: `w = (1 - rho) w + rho * score / uses` for used operators.
    pub fn update_weights(&mut self, rho: f64) {
        for (_, w) in &mut self.ops {
            if w.uses > 0 {
                w.weight = (1.0 - rho) * w.weight + rho * w.score / w.uses as f64;
            }
            w.score = 0.0;
            w.uses = 0;
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        self.ops.iter().map(|(_, w)| w.weight).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorBank {
    pub removal: Roulette<Removal>,
    pub insertion: Roulette<Insertion>,
}

impl Default for OperatorBank {
    fn default() -> Self {
        OperatorBank {
            removal: Roulette::new(&Removal::ALL),
            insertion: Roulette::new(&Insertion::ALL),
        }
    }
}

/// Simulated-annealing acceptance at fixed temperature.
pub fn accept(current: f64, candidate: f64, temperature: f64, rng: &mut impl Rng) -> bool {
    if candidate <= current {
        return true;
    }
    rng.gen::<f64>() < (-(candidate - current) / temperature).exp()
}

/// Shaw relatedness: weighted spatial plus due-date distance, in raw units.
pub fn relatedness(inst: &Instance, psi: f64, i: TaskId, j: TaskId) -> f64 {
    let (a, b) = (inst.task(i), inst.task(j));
    psi * (inst.distance(a.source, b.source) + inst.distance(a.dest, b.dest)) + (1.0 - psi) * (a.due - b.due).abs()
}

/// Tasks chosen by a removal operator from the placed tasks of a feasible
/// solution, in removal order.
pub fn removal_set(
    op: Removal,
    inst: &Instance,
    chain: &DualChain,
    schedule: &Schedule,
    count: usize,
    psi: f64,
    rng: &mut impl Rng,
) -> Vec<TaskId> {
    let placed: Vec<TaskId> = chain.placed().collect();
    let count = count.min(placed.len());
    if count == 0 {
        return Vec::new();
    }
    let timing = |t: TaskId| *schedule.timing(t).expect("placed task decoded");
    let lambda = inst.timing.lambda;
    let by_key = |key: &dyn Fn(TaskId) -> f64| {
        let mut v = placed.clone();
        // Stable sort keeps ascending ids among equal keys.
        v.sort_by(|&a, &b| key(b).total_cmp(&key(a)));
        v.truncate(count);
        v
    };
    match op {
        Removal::Random => placed.choose_multiple(rng, count).copied().collect(),
        Removal::HighestCost => by_key(&|t| timing(t).cost(lambda)),
        Removal::LongestDistance => by_key(&|t| timing(t).distance),
        Removal::LargestTardiness => by_key(&|t| timing(t).tardiness),
        Removal::Shaw => {
            let reference = *placed.choose(rng).expect("non-empty");
            let mut rest: Vec<TaskId> = placed.iter().copied().filter(|&t| t != reference).collect();
            rest.sort_by(|&a, &b| {
                relatedness(inst, psi, reference, a).total_cmp(&relatedness(inst, psi, reference, b))
            });
            let mut out = vec![reference];
            out.extend(rest.into_iter().take(count - 1));
            out
        }
    }
}

/// Position in `pending` of the next task an insertion operator handles.
/// `cost` holds each task's cost at removal, indexed by task index.
pub fn next_pending(op: Insertion, inst: &Instance, pending: &[TaskId], cost: &[f64], rng: &mut impl Rng) -> usize {
    debug_assert!(!pending.is_empty());
    let pick = |key: &dyn Fn(TaskId) -> f64, largest: bool| {
        let mut best = 0;
        for i in 1..pending.len() {
            let (a, b) = (key(pending[i]), key(pending[best]));
            let better = if largest { a > b } else { a < b };
            if better || (a == b && pending[i] < pending[best]) {
                best = i;
            }
        }
        best
    };
    match op {
        Insertion::Greedy => rng.gen_range(0..pending.len()),
        Insertion::Urgent => pick(&|t| inst.task(t).due, false),
        Insertion::Costly => pick(&|t| cost[t.index()], true),
    }
}

/// Work counters of greedy insertion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InsertStats {
    pub insertions: u64,
    /// Slot pairs that exist, summed over insertions.
    pub pairs_total: u64,
    /// Slot pairs decoded.
    pub pairs_evaluated: u64,
    /// Slot pairs ruled out by BRS.
    pub pairs_pruned: u64,
    pub brs_calls: u64,
    pub brs_visited: u64,
    pub audited: u64,
    pub audit_mismatches: u64,
}

/// The cheapest slot pair for one task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub carrier: Slot,
    pub shuttle: Slot,
    pub objective: f64,
}

/// Reusable buffers for [`best_insertion`].
pub struct Inserter {
    scratch: Scratch,
    excluded: Vec<bool>,
    offsets: Vec<usize>,
}

impl Inserter {
    pub fn new(n_tasks: usize) -> Self {
        Inserter {
            scratch: Scratch::new(n_tasks),
            excluded: Vec::new(),
            offsets: Vec::new(),
        }
    }

    /// Cheapest feasible slot pair for an unplaced `task`. Ties go to the
    /// lexicographically smallest (carrier, gap, shuttle, gap).
    pub fn best_insertion(
        &mut self,
        inst: &Instance,
        sol: &mut Solution,
        task: TaskId,
        use_brs: bool,
        stats: &mut InsertStats,
    ) -> Placement {
        let carrier_slots: Vec<Slot> = sol.chain().slots(Side::Carrier).collect();
        let shuttle_slots: Vec<Slot> = sol.chain().slots(Side::Shuttle).collect();
        self.offsets.clear();
        let mut acc = 0;
        for r in sol.chain().routes(Side::Shuttle) {
            self.offsets.push(acc);
            acc += r.len() + 1;
        }
        stats.insertions += 1;
        stats.pairs_total += (carrier_slots.len() * shuttle_slots.len()) as u64;

        let mut best: Option<Placement> = None;
        for &cs in &carrier_slots {
            self.excluded.clear();
            self.excluded.resize(shuttle_slots.len(), false);
            if use_brs {
                let (excluded, offsets) = (&mut self.excluded, &self.offsets);
                stats.brs_calls += 1;
                stats.brs_visited += search(sol, cs, &mut self.scratch, |s, _| {
                    excluded[offsets[s.agv] + s.gap] = true;
                }) as u64;
            }
            for (k, &ss) in shuttle_slots.iter().enumerate() {
                if self.excluded[k] {
                    stats.pairs_pruned += 1;
                    continue;
                }
                stats.pairs_evaluated += 1;
                let f = sol.with_tentative(task, cs, ss, |net| decode_net(inst, net, TieBreak::LowestShuttle).objective);
                if f < best.map_or(f64::INFINITY, |b| b.objective) {
                    best = Some(Placement {
                        carrier: cs,
                        shuttle: ss,
                        objective: f,
                    });
                }
            }
        }
        // Appending at any pair of tails never closes a cycle.
        best.expect("a feasible slot pair always exists")
    }
}

/// Reinserts every task of `pending` with the given operator. Returns the
/// number of audit mismatches (always zero unless `audit`).
#[allow(clippy::too_many_arguments)]
pub fn insert_greedy(
    op: Insertion,
    inst: &Instance,
    sol: &mut Solution,
    mut pending: Vec<TaskId>,
    cost: &[f64],
    use_brs: bool,
    audit: bool,
    inserter: &mut Inserter,
    stats: &mut InsertStats,
    rng: &mut impl Rng,
) {
    while !pending.is_empty() {
        let i = next_pending(op, inst, &pending, cost, rng);
        let task = pending.swap_remove(i);
        let p = inserter.best_insertion(inst, sol, task, use_brs, stats);
        if audit {
            let mut shadow = InsertStats::default();
            let q = inserter.best_insertion(inst, sol, task, !use_brs, &mut shadow);
            stats.audited += 1;
            if p != q {
                stats.audit_mismatches += 1;
            }
        }
        sol.insert(task, p.carrier, p.shuttle).expect("slots come from the current chain");
    }
}

/// Greedy construction: every task, most urgent first, at its cheapest slot pair.
pub fn initial_solution(inst: &Instance) -> DualChain {
    let mut sol = Solution::new(DualChain::empty(inst.n(), inst.carriers(), inst.shuttles()));
    let mut stats = InsertStats::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    insert_greedy(
        Insertion::Urgent,
        inst,
        &mut sol,
        inst.task_ids().collect(),
        &vec![0.0; inst.n()],
        true,
        false,
        &mut Inserter::new(inst.n()),
        &mut stats,
        &mut rng,
    );
    sol.into_chain()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: u64,
    pub elapsed_ms: f64,
    pub removal: Removal,
    pub insertion: Insertion,
    pub current: f64,
    pub best: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct AlnsResult {
    pub chain: DualChain,
    pub schedule: Schedule,
    pub initial_objective: f64,
    /// Completed destroy–repair cycles.
    pub iterations: u64,
    pub elapsed_ms: f64,
    pub log: Vec<LogRow>,
    pub bank: OperatorBank,
    pub insert_stats: InsertStats,
}

impl AlnsResult {
    pub fn objective(&self) -> f64 {
        self.schedule.objective
    }
}

fn decode(inst: &Instance, sol: &Solution) -> Schedule {
    decode_net(inst, sol.net(), TieBreak::LowestShuttle)
}

/// Runs the search until the budget is spent.
pub fn solve(inst: &Instance, config: &AlnsConfig) -> Result<AlnsResult, ConfigError> {
    config.validate()?;
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let temperature = inst.temperature(config.mu).max(f64::MIN_POSITIVE);
    let count = config.removal_count(inst.n());
    let deadline_ms = config.budget_ms(inst).map(|ms| ms as f64);
    let max_iter = match config.budget {
        Budget::Iterations(k) => k,
        _ => u64::MAX,
    };

    let mut inserter = Inserter::new(inst.n());
    let mut stats = InsertStats::default();
    let mut current = Solution::new(initial_solution(inst));
    let mut current_sched = decode(inst, &current);
    let initial_objective = current_sched.objective;
    let mut best = current.clone();
    let mut best_sched = current_sched.clone();
    let mut bank = OperatorBank::default();
    let mut log = Vec::new();
    let mut cost = vec![0.0; inst.n()];
    let elapsed = || clock.elapsed().as_secs_f64() * 1e3;

    let mut iter = 0;
    while iter < max_iter && deadline_ms.is_none_or(|d| elapsed() < d) {
        let ri = bank.removal.select(&mut rng);
        let ii = bank.insertion.select(&mut rng);
        let (rop, iop) = (bank.removal.ops[ri].0, bank.insertion.ops[ii].0);

        let mut cand = current.clone();
        let removed = removal_set(rop, inst, current.chain(), &current_sched, count, config.psi, &mut rng);
        for &t in &removed {
            cost[t.index()] = current_sched.timing(t).map_or(0.0, |x| x.cost(inst.timing.lambda));
            cand.remove(t).expect("removal picks placed tasks");
        }
        insert_greedy(
            iop,
            inst,
            &mut cand,
            removed,
            &cost,
            config.use_brs,
            config.audit,
            &mut inserter,
            &mut stats,
            &mut rng,
        );
        let cand_sched = decode(inst, &cand);
        debug_assert!(cand_sched.feasible);

        let f = cand_sched.objective;
        let accepted = accept(current_sched.objective, f, temperature, &mut rng);
        let score = if f < best_sched.objective {
            config.scores[0]
        } else if f < current_sched.objective {
            config.scores[1]
        } else if accepted {
            config.scores[2]
        } else {
            0.0
        };
        bank.removal.reward(ri, score);
        bank.insertion.reward(ii, score);
        if f < best_sched.objective {
            best = cand.clone();
            best_sched = cand_sched.clone();
        }
        if accepted {
            current = cand;
            current_sched = cand_sched;
        }
        iter += 1;
        if iter % config.kappa as u64 == 0 {
            bank.removal.update_weights(config.rho);
            bank.insertion.update_weights(config.rho);
        }
        if config.log {
            log.push(LogRow {
                iteration: iter,
                elapsed_ms: elapsed(),
                removal: rop,
                insertion: iop,
                current: current_sched.objective,
                best: best_sched.objective,
                accepted,
            });
        }
    }

    Ok(AlnsResult {
        chain: best.into_chain(),
        schedule: best_sched,
        initial_objective,
        iterations: iter,
        elapsed_ms: elapsed(),
        log,
        bank,
        insert_stats: stats,
    })
}
