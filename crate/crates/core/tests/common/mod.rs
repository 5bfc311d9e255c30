//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use ahasp_core::deadlock::is_feasible;
use ahasp_core::generate::{generate, GenSpec};
use ahasp_core::{DualChain, Instance, PositionId, Side, Slot, SolutionNet, TaskId};
use petgraph::algo::is_cyclic_directed;
use petgraph::graph::DiGraph;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn instance(n: usize, carriers: usize, shuttles: usize, seed: u64) -> Instance {
    generate(&GenSpec::new(n, carriers, shuttles, seed)).unwrap()
}

fn split(rng: &mut impl Rng, order: &[TaskId], agvs: usize) -> Vec<Vec<TaskId>> {
    let mut routes = vec![Vec::new(); agvs];
    for &t in order {
        routes[rng.gen_range(0..agvs)].push(t);
    }
    routes
}

/// Independent random orders per side; often deadlocked.
pub fn random_chain(rng: &mut impl Rng, n: usize, carriers: usize, shuttles: usize) -> DualChain {
    let mut ids: Vec<TaskId> = (1..=n).map(TaskId).collect();
    ids.shuffle(rng);
    let c = split(rng, &ids, carriers);
    ids.shuffle(rng);
    let s = split(rng, &ids, shuttles);
    DualChain::new(n, c, s).unwrap()
}

/// Both sides follow one global order, so no cycle can form.
pub fn feasible_chain(rng: &mut impl Rng, n: usize, carriers: usize, shuttles: usize) -> DualChain {
    let mut ids: Vec<TaskId> = (1..=n).map(TaskId).collect();
    ids.shuffle(rng);
    let c = split(rng, &ids, carriers);
    let s = split(rng, &ids, shuttles);
    DualChain::new(n, c, s).unwrap()
}

/// Either kind, so deadlocked and feasible chains both show up.
pub fn mixed_chain(rng: &mut impl Rng, n: usize, carriers: usize, shuttles: usize) -> DualChain {
    if rng.gen_bool(0.5) {
        random_chain(rng, n, carriers, shuttles)
    } else {
        feasible_chain(rng, n, carriers, shuttles)
    }
}

/// Cycle in the digraph of consecutive tasks on every route.
pub fn has_cycle(chain: &DualChain) -> bool {
    let mut g = DiGraph::<(), ()>::new();
    let nodes: Vec<_> = (0..chain.n_tasks()).map(|_| g.add_node(())).collect();
    for side in [Side::Carrier, Side::Shuttle] {
        for route in chain.routes(side) {
            for w in route.windows(2) {
                g.add_edge(nodes[w[0].index()], nodes[w[1].index()], ());
            }
        }
    }
    is_cyclic_directed(&g)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimTask {
    pub attach: f64,
    pub detach: f64,
    pub completion: f64,
    pub distance: f64,
    pub tardiness: f64,
}

/// Event-driven replay of the coupled timeline. Each AGV is a (free time,
/// position) pair; a task runs once it heads both of its AGVs' queues. The
/// carrier drives to the shuttle, couples no earlier than the shuttle frees
/// up, hauls it via the source to the destination and uncouples; the
/// shuttle then handles the plate.
pub fn simulate(inst: &Instance, chain: &DualChain) -> Option<(Vec<Option<SimTask>>, f64)> {
    let tp = inst.timing;
    let travel = |a: PositionId, b: PositionId| inst.dist.get(a, b) / tp.velocity;
    let mut carriers: Vec<(f64, PositionId, usize)> =
        inst.fleet.carrier_starts.iter().map(|&p| (0.0, p, 0)).collect();
    let mut shuttles: Vec<(f64, PositionId, usize)> =
        inst.fleet.shuttle_starts.iter().map(|&p| (0.0, p, 0)).collect();
    let mut out = vec![None; inst.n()];
    let total = chain.placed_count();
    let mut done = 0;
    while done < total {
        let mut progressed = false;
        for c in 0..carriers.len() {
            let Some(&t) = chain.route(Side::Carrier, c).get(carriers[c].2) else { continue };
            let Some(s) = (0..shuttles.len()).find(|&s| chain.route(Side::Shuttle, s).get(shuttles[s].2) == Some(&t)) else {
                continue;
            };
            let task = inst.task(t);
            let (cf, cp, _) = carriers[c];
            let (sf, sp, _) = shuttles[s];
            let attach = (cf + travel(cp, sp)).max(sf);
            let detach = attach + tp.attach + travel(sp, task.source) + tp.pickup + travel(task.source, task.dest) + tp.detach;
            let completion = detach + task.handling;
            out[t.index()] = Some(SimTask {
                attach,
                detach,
                completion,
                distance: inst.dist.get(cp, sp) + inst.dist.get(sp, task.source) + inst.dist.get(task.source, task.dest),
                tardiness: (completion - task.due).max(0.0),
            });
            carriers[c] = (detach, task.dest, carriers[c].2 + 1);
            shuttles[s] = (completion, task.dest, shuttles[s].2 + 1);
            done += 1;
            progressed = true;
        }
        if !progressed {
            return None;
        }
    }
    let (d, tau) = out.iter().flatten().fold((0.0, 0.0), |(d, tau), x| (d + x.distance, tau + x.tardiness));
    Some((out, tp.lambda * d + (1.0 - tp.lambda) * tau))
}

/// Shuttle slots that deadlock when `task` goes to `carrier_slot`, by trying each.
pub fn infeasible_by_trial(chain: &DualChain, task: TaskId, carrier_slot: Slot) -> BTreeSet<Slot> {
    chain
        .slots(carrier_slot.side.opposite())
        .filter(|&s| {
            let (c, sh) = match carrier_slot.side {
                Side::Carrier => (carrier_slot, s),
                Side::Shuttle => (s, carrier_slot),
            };
            !is_feasible(&SolutionNet::build(&chain.insert_task(task, c, sh).unwrap()))
        })
        .collect()
}
