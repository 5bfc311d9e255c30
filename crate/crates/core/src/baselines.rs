//! Reference solvers: the earliest-due-date bidding dispatcher, an exhaustive
//! oracle for tiny instances, and an LP-format export of the mixed-integer
//! model.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use itertools::Itertools;

use crate::deadlock::is_feasible;
use crate::decode::{decode_net, fdd, Schedule, TieBreak};
use crate::error::SizeError;
use crate::model::{Instance, PositionId, TaskId};
use crate::parallel::{self, Execution};
use crate::solution::{DualChain, Side, Slot, Solution, SolutionNet};

/// Dispatches tasks by due date; each carrier/shuttle pair bids the
/// objective after appending the task to both its tails, and the lowest bid
/// wins (ties: lowest carrier, then lowest shuttle).
pub fn eddbid(inst: &Instance) -> (DualChain, Schedule) {
    let mut order: Vec<TaskId> = inst.task_ids().collect();
    order.sort_by(|&a, &b| inst.task(a).due.total_cmp(&inst.task(b).due).then(a.cmp(&b)));
    let mut sol = Solution::new(DualChain::empty(inst.n(), inst.carriers(), inst.shuttles()));
    for task in order {
        let mut best: Option<(f64, Slot, Slot)> = None;
        for c in 0..inst.carriers() {
            let cs = Slot::new(Side::Carrier, c, sol.chain().route(Side::Carrier, c).len());
            for s in 0..inst.shuttles() {
                let ss = Slot::new(Side::Shuttle, s, sol.chain().route(Side::Shuttle, s).len());
                let bid = sol.with_tentative(task, cs, ss, |net| decode_net(inst, net, TieBreak::LowestShuttle).objective);
                if bid < best.map_or(f64::INFINITY, |b| b.0) {
                    best = Some((bid, cs, ss));
                }
            }
        }
        let (_, cs, ss) = best.expect("tail appends are always feasible");
        sol.insert(task, cs, ss).expect("tail slots exist");
    }
    let schedule = decode_net(inst, sol.net(), TieBreak::LowestShuttle);
    (sol.into_chain(), schedule)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BruteLimits {
    pub max_tasks: usize,
    /// Per side.
    pub max_agvs: usize,
}

impl Default for BruteLimits {
    fn default() -> Self {
        BruteLimits { max_tasks: 5, max_agvs: 3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub optimal_objective: f64,
    pub optimal_chain: DualChain,
    /// Feasible dual chains decoded.
    pub enumerated: u64,
}

/// Every assignment of `tasks` to `m` ordered routes, in a fixed order.
pub fn route_sets(tasks: &[TaskId], m: usize) -> Vec<Vec<Vec<TaskId>>> {
    let n = tasks.len();
    let mut out = Vec::new();
    if m == 0 {
        if n == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    for perm in tasks.iter().copied().permutations(n) {
        // m - 1 nondecreasing cut points split the permutation into m routes.
        for cuts in (0..=n).combinations_with_replacement(m - 1) {
            let mut routes = Vec::with_capacity(m);
            let mut from = 0;
            for &c in cuts.iter().chain(std::iter::once(&n)) {
                routes.push(perm[from..c].to_vec());
                from = c;
            }
            out.push(routes);
        }
    }
    out
}

/// Exact optimum by enumeration. Ties keep the first chain in enumeration order.
pub fn brute_force(inst: &Instance, limits: BruteLimits, exec: Execution) -> Result<OracleResult, SizeError> {
    if inst.n() > limits.max_tasks {
        return Err(SizeError::TooManyTasks { n: inst.n(), max: limits.max_tasks });
    }
    let agvs = inst.carriers().max(inst.shuttles());
    if agvs > limits.max_agvs {
        return Err(SizeError::TooManyAgvs { agvs, max: limits.max_agvs });
    }
    let ids: Vec<TaskId> = inst.task_ids().collect();
    let carrier_sets = route_sets(&ids, inst.carriers());
    let shuttle_sets = route_sets(&ids, inst.shuttles());

    let partial = parallel::map(exec, &carrier_sets, |cr| {
        let mut best: Option<(f64, usize)> = None;
        let mut feasible = 0u64;
        for (k, sr) in shuttle_sets.iter().enumerate() {
            let chain = DualChain::new(inst.n(), cr.clone(), sr.clone()).expect("complete routes");
            let net = SolutionNet::build(&chain);
            if !is_feasible(&net) {
                continue;
            }
            feasible += 1;
            let f = decode_net(inst, &net, TieBreak::LowestShuttle).objective;
            if f < best.map_or(f64::INFINITY, |b| b.0) {
                best = Some((f, k));
            }
        }
        (best, feasible)
    });

    let mut enumerated = 0;
    let mut best: Option<(f64, usize, usize)> = None;
    for (c, (b, feasible)) in partial.into_iter().enumerate() {
        enumerated += feasible;
        if let Some((f, s)) = b {
            if f < best.map_or(f64::INFINITY, |x| x.0) {
                best = Some((f, c, s));
            }
        }
    }
    let (f, c, s) = best.expect("tail-ordered chains are feasible");
    Ok(OracleResult {
        optimal_objective: f,
        optimal_chain: DualChain::new(inst.n(), carrier_sets[c].clone(), shuttle_sets[s].clone()).expect("complete"),
        enumerated,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// A linear model with named variables; continuous variables are `>= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub objective: Vec<(String, f64)>,
    pub constraints: Vec<Constraint>,
    pub binaries: Vec<String>,
    pub continuous: Vec<String>,
    pub big_l: f64,
}

impl LinearModel {
    /// Largest violation of any constraint under `values` (missing variables are 0).
    pub fn max_violation(&self, values: &BTreeMap<String, f64>) -> f64 {
        let v = |name: &str| values.get(name).copied().unwrap_or(0.0);
        self.constraints
            .iter()
            .map(|c| {
                let lhs: f64 = c.terms.iter().map(|(n, a)| a * v(n)).sum();
                match c.sense {
                    Sense::Ge => (c.rhs - lhs).max(0.0),
                    Sense::Eq => (c.rhs - lhs).abs(),
                }
            })
            .fold(0.0, f64::max)
    }

    pub fn objective_value(&self, values: &BTreeMap<String, f64>) -> f64 {
        self.objective.iter().map(|(n, a)| a * values.get(n).copied().unwrap_or(0.0)).sum()
    }

    /// CPLEX LP text.
    pub fn to_lp(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "\\ big L = {}", self.big_l);
        out.push_str("Minimize\n obj:");
        push_terms(&mut out, &self.objective);
        out.push_str("\nSubject To\n");
        for c in &self.constraints {
            let _ = write!(out, " {}:", c.name);
            push_terms(&mut out, &c.terms);
            let op = match c.sense {
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", c.rhs);
        }
        out.push_str("Bounds\n");
        for v in &self.continuous {
            let _ = writeln!(out, " {v} >= 0");
        }
        out.push_str("Binary\n");
        for chunk in self.binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
        out.push_str("End\n");
        out
    }
}

fn push_terms(out: &mut String, terms: &[(String, f64)]) {
    for (k, (name, a)) in terms.iter().enumerate() {
        let sign = if *a < 0.0 { "-" } else if k > 0 { "+" } else { "" };
        if a.abs() == 1.0 {
            let _ = write!(out, " {sign} {name}");
        } else {
            let _ = write!(out, " {sign} {} {name}", a.abs());
        }
    }
}

/// Default big-M: the larger of a travel/handling sum and a bound on any
/// time difference a feasible schedule can produce.
pub fn default_big_l(inst: &Instance) -> f64 {
    let tp = &inst.timing;
    let n = inst.n() as f64;
    let handling: f64 = inst.tasks.iter().map(|t| t.handling).sum();
    let simple = inst.dist.sum() / tp.velocity + handling + n * tp.fixed_durations();
    let max_t = inst.dist.max_entry() / tp.velocity;
    let horizon = handling + n * (tp.fixed_durations() + 3.0 * max_t);
    let safe = 2.0 * horizon + 3.0 * max_t + tp.fixed_durations() + 3.0 * inst.dist.max_entry();
    simple.max(safe)
}

/// Global AGV numbering: carriers `1..=m+`, shuttles after them.
fn agv_number(inst: &Instance, side: Side, agv: usize) -> usize {
    match side {
        Side::Carrier => agv + 1,
        Side::Shuttle => inst.carriers() + agv + 1,
    }
}

fn x(r: usize, i: usize, j: usize) -> String {
    format!("x_{r}_{i}_{j}")
}

/// Arc variables `x_r_i_j`; node 0 is AGV `r`'s virtual start/end.
fn arcs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..=n).flat_map(move |i| (0..=n).map(move |j| (i, j))).filter(|&(i, j)| i != j || i == 0)
}

/// Builds the mixed-integer model. The carrier's previous task `i` and the
/// shuttle's previous task `k` of task `j` fix its travel
/// `d(e_i, e_k) + d(e_k, s_j) + d(s_j, e_j)`, its wait and its detach time.
pub fn milp_model(inst: &Instance, big_l: Option<f64>) -> LinearModel {
    let big_l = big_l.unwrap_or_else(|| default_big_l(inst));
    let n = inst.n();
    let tp = inst.timing;
    let carriers: Vec<usize> = (0..inst.carriers()).map(|a| agv_number(inst, Side::Carrier, a)).collect();
    let shuttles: Vec<usize> = (0..inst.shuttles()).map(|a| agv_number(inst, Side::Shuttle, a)).collect();
    let all: Vec<usize> = carriers.iter().chain(&shuttles).copied().collect();
    let mut cons = Vec::new();
    let mut push = |name: String, terms: Vec<(String, f64)>, sense, rhs| cons.push(Constraint { name, terms, sense, rhs });

    let objective = (1..=n)
        .flat_map(|j| [(format!("delta_{j}"), tp.lambda), (format!("tau_{j}"), 1.0 - tp.lambda)])
        .collect();

    for (tag, fleet) in [("c", &carriers), ("s", &shuttles)] {
        for j in 1..=n {
            let into = fleet.iter().flat_map(|&r| (0..=n).filter(move |&i| i != j).map(move |i| (x(r, i, j), 1.0)));
            push(format!("in_{tag}_{j}"), into.collect(), Sense::Eq, 1.0);
            let out = fleet.iter().flat_map(|&r| (0..=n).filter(move |&k| k != j).map(move |k| (x(r, j, k), 1.0)));
            push(format!("out_{tag}_{j}"), out.collect(), Sense::Eq, 1.0);
        }
    }
    for &r in &all {
        for j in 1..=n {
            let mut t: Vec<(String, f64)> = (0..=n).filter(|&i| i != j).map(|i| (x(r, i, j), 1.0)).collect();
            t.extend((0..=n).filter(|&k| k != j).map(|k| (x(r, j, k), -1.0)));
            push(format!("flow_{r}_{j}"), t, Sense::Eq, 0.0);
        }
        push(format!("end_{r}"), (0..=n).map(|i| (x(r, i, 0), 1.0)).collect(), Sense::Eq, 1.0);
        push(format!("start_{r}"), (0..=n).map(|j| (x(r, 0, j), 1.0)).collect(), Sense::Eq, 1.0);
    }

    // Predecessor candidates: (AGVs whose arc may carry it, node, position, is virtual).
    let preds = |fleet: &[usize], side: Side| -> Vec<(Vec<usize>, usize, PositionId)> {
        let mut v: Vec<(Vec<usize>, usize, PositionId)> = fleet
            .iter()
            .enumerate()
            .map(|(a, &r)| {
                let start = match side {
                    Side::Carrier => inst.fleet.carrier_starts[a],
                    Side::Shuttle => inst.fleet.shuttle_starts[a],
                };
                (vec![r], 0, start)
            })
            .collect();
        v.extend((1..=n).map(|i| (fleet.to_vec(), i, inst.task(TaskId(i)).dest)));
        v
    };
    let cpreds = preds(&carriers, Side::Carrier);
    let spreds = preds(&shuttles, Side::Shuttle);
    let t = |a: PositionId, b: PositionId| inst.dist.get(a, b) / tp.velocity;

    for j in 1..=n {
        let task = inst.task(TaskId(j));
        for (ca, i, ei) in &cpreds {
            if *i == j {
                continue;
            }
            for (sa, k, ek) in &spreds {
                if *k == j {
                    continue;
                }
                let node = |agvs: &[usize], v: usize| if v == 0 { format!("o{}", agvs[0]) } else { v.to_string() };
                let tag = format!("{}_{}_{j}", node(ca, *i), node(sa, *k));
                let mut act: Vec<(String, f64)> = ca.iter().map(|&r| (x(r, *i, j), -big_l)).collect();
                act.extend(sa.iter().map(|&r| (x(r, *k, j), -big_l)));

                let d = inst.dist.get(*ei, *ek) + inst.dist.get(*ek, task.source) + inst.dist.get(task.source, task.dest);
                let mut terms = vec![(format!("delta_{j}"), 1.0)];
                terms.extend(act.iter().cloned());
                push(format!("dist_{tag}"), terms, Sense::Ge, d - 2.0 * big_l);

                let mut terms = vec![(format!("wt_{j}"), 1.0)];
                if *k > 0 {
                    terms.push((format!("Te_{k}"), -1.0));
                }
                if *i > 0 {
                    terms.push((format!("Td_{i}"), 1.0));
                }
                terms.extend(act.iter().cloned());
                push(format!("wait_{tag}"), terms, Sense::Ge, -t(*ei, *ek) - 2.0 * big_l);

                let c = t(*ei, *ek) + tp.attach + t(*ek, task.source) + tp.pickup + t(task.source, task.dest) + tp.detach;
                let mut terms = vec![(format!("Td_{j}"), 1.0), (format!("wt_{j}"), -1.0)];
                if *i > 0 {
                    terms.push((format!("Td_{i}"), -1.0));
                }
                terms.extend(act);
                push(format!("detach_{tag}"), terms, Sense::Ge, c - 2.0 * big_l);
            }
        }
        push(
            format!("done_{j}"),
            vec![(format!("Te_{j}"), 1.0), (format!("Td_{j}"), -1.0)],
            Sense::Ge,
            task.handling,
        );
        push(
            format!("late_{j}"),
            vec![(format!("tau_{j}"), 1.0), (format!("Te_{j}"), -1.0)],
            Sense::Ge,
            -task.due,
        );
    }

    let binaries = all.iter().flat_map(|&r| arcs(n).map(move |(i, j)| x(r, i, j))).collect();
    let continuous = (1..=n)
        .flat_map(|j| ["Td", "Te", "wt", "delta", "tau"].map(|v| format!("{v}_{j}")))
        .collect();
    LinearModel {
        objective,
        constraints: cons,
        binaries,
        continuous,
        big_l,
    }
}

/// The model as CPLEX LP text.
pub fn export_milp(inst: &Instance, big_l: Option<f64>) -> String {
    milp_model(inst, big_l).to_lp()
}

/// Variable values that a decoded chain implies.
pub fn milp_assignment(inst: &Instance, chain: &DualChain) -> BTreeMap<String, f64> {
    let schedule = fdd(inst, chain).expect("chain matches instance");
    let mut v = BTreeMap::new();
    for side in [Side::Carrier, Side::Shuttle] {
        for (a, route) in chain.routes(side).iter().enumerate() {
            let r = agv_number(inst, side, a);
            let nodes: Vec<usize> = std::iter::once(0).chain(route.iter().map(|t| t.0)).chain([0]).collect();
            for w in nodes.windows(2) {
                v.insert(x(r, w[0], w[1]), 1.0);
            }
        }
    }
    for (k, t) in schedule.per_task.iter().enumerate() {
        if let Some(t) = t {
            let j = k + 1;
            v.insert(format!("Td_{j}"), t.detach);
            v.insert(format!("Te_{j}"), t.completion);
            v.insert(format!("wt_{j}"), t.wait);
            v.insert(format!("delta_{j}"), t.distance);
            v.insert(format!("tau_{j}"), t.tardiness);
        }
    }
    v
}
