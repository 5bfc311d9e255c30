//! Deadlock-based feasibility and bidirectional reachability search (BRS).
//!
//! A chain is feasible iff its net reaches the final marking, i.e. iff the
//! precedence relation induced by both route sets is acyclic. BRS lists, for
//! a task tentatively placed on one side, every opposite-side slot that would
//! close a cycle: the slot just before each ancestor and just after each
//! descendant of the placed task.

use std::collections::BTreeSet;

use crate::error::BrsError;
use crate::model::TaskId;
use crate::solution::{Side, Slot, Solution, SolutionNet};

/// True iff some firing sequence from `M0` reaches `M_F`.
pub fn is_feasible(net: &SolutionNet) -> bool {
    let mut marking = net.initial_marking();
    let mut stack: Vec<TaskId> = net
        .heads(Side::Carrier)
        .flatten()
        .filter(|&t| net.is_enabled_in(&marking, t))
        .collect();
    while let Some(t) = stack.pop() {
        let post = net.fire_in(&mut marking, t).expect("enabled");
        for (k, p) in post.into_iter().enumerate() {
            if let Some(next) = net.place_postset(p) {
                if k == 1 && net.place_postset(post[0]) == Some(next) {
                    continue;
                }
                if net.is_enabled_in(&marking, next) {
                    stack.push(next);
                }
            }
        }
    }
    net.is_final_marking(&marking)
}

/// Opposite-side slots ruled out by a tentative placement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InfeasibleSlots {
    /// Slots just before an ancestor of the placed task.
    pub backward: BTreeSet<Slot>,
    /// Slots just after a descendant of the placed task.
    pub forward: BTreeSet<Slot>,
    /// Transitions touched by both searches.
    pub visited: usize,
}

impl InfeasibleSlots {
    pub fn all(&self) -> BTreeSet<Slot> {
        self.backward.union(&self.forward).copied().collect()
    }

    pub fn contains(&self, slot: &Slot) -> bool {
        self.backward.contains(slot) || self.forward.contains(slot)
    }

    /// Number of distinct infeasible slots.
    pub fn len(&self) -> usize {
        self.backward.len() + self.forward.len() - self.backward.intersection(&self.forward).count()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty() && self.forward.is_empty()
    }
}

/// Runs BRS for `task` placed at `placed` in a solution that does not yet
/// contain it. The returned slots live on the opposite side.
///
/// The solution must be feasible before the placement; this is checked in
/// debug builds.
pub fn brs(sol: &Solution, task: TaskId, placed: Slot) -> Result<InfeasibleSlots, BrsError> {
    if sol.chain().is_placed(task) {
        return Err(BrsError::TaskPlaced(task));
    }
    sol.chain().check_slot(placed)?;
    debug_assert!(is_feasible(sol.net()), "BRS requires a feasible solution");

    let mut scratch = Scratch::new(sol.net().n_tasks());
    let mut out = InfeasibleSlots::default();
    let visited = search(sol, placed, &mut scratch, |slot, backward| {
        if backward {
            out.backward.insert(slot);
        } else {
            out.forward.insert(slot);
        }
    });
    out.visited = visited;
    Ok(out)
}

/// Reusable visit flags for repeated searches on one solution.
pub(crate) struct Scratch {
    stamp: Vec<u32>,
    epoch: u32,
    stack: Vec<TaskId>,
}

impl Scratch {
    pub(crate) fn new(n: usize) -> Self {
        Scratch {
            stamp: vec![0; n],
            epoch: 0,
            stack: Vec::new(),
        }
    }

    fn next_epoch(&mut self) -> u32 {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
        self.epoch
    }
}

/// Both searches of BRS. Calls `emit(slot, is_backward)` for each infeasible
/// opposite-side slot and returns the number of transitions visited.
pub(crate) fn search(sol: &Solution, placed: Slot, scratch: &mut Scratch, mut emit: impl FnMut(Slot, bool)) -> usize {
    let chain = sol.chain();
    let net = sol.net();
    let opposite = placed.side.opposite();
    let (pred, succ) = chain.neighbors(placed);
    let mut visited = 0;

    for (start, backward) in [(pred, true), (succ, false)] {
        let Some(start) = start else { continue };
        let epoch = scratch.next_epoch();
        scratch.stack.clear();
        scratch.stack.push(start);
        scratch.stamp[start.index()] = epoch;
        while let Some(t) = scratch.stack.pop() {
            visited += 1;
            let (agv, pos) = chain.location(opposite, t).expect("placed task");
            let gap = if backward { pos } else { pos + 1 };
            emit(Slot::new(opposite, agv, gap), backward);
            let next = if backward { net.predecessors(t) } else { net.successors(t) };
            for u in next.into_iter().flatten() {
                if scratch.stamp[u.index()] != epoch {
                    scratch.stamp[u.index()] = epoch;
                    scratch.stack.push(u);
                }
            }
        }
    }
    visited
}
