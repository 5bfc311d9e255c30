use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ChainError;
use crate::model::TaskId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Carrier,
    Shuttle,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Carrier => Side::Shuttle,
            Side::Shuttle => Side::Carrier,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Carrier => "carrier",
            Side::Shuttle => "shuttle",
        })
    }
}

/// An insertion point on one side of a dual chain.
///
/// `gap` counts route entries before the point, so `gap == 0` is the head of
/// the route and `gap == len` its tail. The slot "just before task `b`" and
/// "just after `b`'s predecessor" are the same `Slot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Slot {
    pub side: Side,
    pub agv: usize,
    pub gap: usize,
}

impl Slot {
    pub fn new(side: Side, agv: usize, gap: usize) -> Self {
        Slot { side, agv, gap }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Loc {
    pub agv: u32,
    pub pos: u32,
}

/// Per-AGV task sequences for carriers and shuttles.
///
/// A task is either placed on both sides or on neither; partially destroyed
/// solutions simply have fewer placed tasks. The task universe is `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DualChain {
    n_tasks: usize,
    carrier_routes: Vec<Vec<TaskId>>,
    shuttle_routes: Vec<Vec<TaskId>>,
    carrier_loc: Vec<Option<Loc>>,
    shuttle_loc: Vec<Option<Loc>>,
}

impl DualChain {
    /// A chain with every route empty.
    pub fn empty(n_tasks: usize, carriers: usize, shuttles: usize) -> Self {
        DualChain {
            n_tasks,
            carrier_routes: vec![Vec::new(); carriers],
            shuttle_routes: vec![Vec::new(); shuttles],
            carrier_loc: vec![None; n_tasks],
            shuttle_loc: vec![None; n_tasks],
        }
    }

    pub fn new(
        n_tasks: usize,
        carrier_routes: Vec<Vec<TaskId>>,
        shuttle_routes: Vec<Vec<TaskId>>,
    ) -> Result<Self, ChainError> {
        let carrier_loc = locate(n_tasks, &carrier_routes, Side::Carrier)?;
        let shuttle_loc = locate(n_tasks, &shuttle_routes, Side::Shuttle)?;
        for k in 0..n_tasks {
            match (carrier_loc[k], shuttle_loc[k]) {
                (Some(_), None) => return Err(ChainError::OneSided(TaskId::from_index(k), Side::Carrier)),
                (None, Some(_)) => return Err(ChainError::OneSided(TaskId::from_index(k), Side::Shuttle)),
                _ => {}
            }
        }
        Ok(DualChain {
            n_tasks,
            carrier_routes,
            shuttle_routes,
            carrier_loc,
            shuttle_loc,
        })
    }

    /// Parses the flat `(0, pi_1, 0, pi_2, ...)` notation, where `0` opens
    /// each AGV's sub-sequence. An empty input means zero AGVs.
    pub fn from_flat(n_tasks: usize, carriers: &[usize], shuttles: &[usize]) -> Result<Self, ChainError> {
        DualChain::new(n_tasks, split_flat(carriers), split_flat(shuttles))
    }

    pub fn to_flat(&self, side: Side) -> Vec<usize> {
        self.routes(side)
            .iter()
            .flat_map(|r| std::iter::once(0).chain(r.iter().map(|t| t.0)))
            .collect()
    }

    #[inline]
    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn agvs(&self, side: Side) -> usize {
        self.routes(side).len()
    }

    #[inline]
    pub fn routes(&self, side: Side) -> &[Vec<TaskId>] {
        match side {
            Side::Carrier => &self.carrier_routes,
            Side::Shuttle => &self.shuttle_routes,
        }
    }

    pub fn route(&self, side: Side, agv: usize) -> &[TaskId] {
        &self.routes(side)[agv]
    }

    fn locs(&self, side: Side) -> &[Option<Loc>] {
        match side {
            Side::Carrier => &self.carrier_loc,
            Side::Shuttle => &self.shuttle_loc,
        }
    }

    /// `(agv, position)` of a placed task on the given side.
    #[inline]
    pub fn location(&self, side: Side, task: TaskId) -> Option<(usize, usize)> {
        self.locs(side)
            .get(task.index())
            .copied()
            .flatten()
            .map(|l| (l.agv as usize, l.pos as usize))
    }

    #[inline]
    pub fn is_placed(&self, task: TaskId) -> bool {
        task.0 >= 1 && task.0 <= self.n_tasks && self.carrier_loc[task.index()].is_some()
    }

    pub fn placed_count(&self) -> usize {
        self.carrier_routes.iter().map(Vec::len).sum()
    }

    pub fn placed(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.n_tasks).filter(|&k| self.carrier_loc[k].is_some()).map(TaskId::from_index)
    }

    pub fn unplaced(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.n_tasks).filter(|&k| self.carrier_loc[k].is_none()).map(TaskId::from_index)
    }

    /// Slot immediately before `task` on `side`.
    pub fn slot_before(&self, side: Side, task: TaskId) -> Option<Slot> {
        self.location(side, task).map(|(agv, pos)| Slot::new(side, agv, pos))
    }

    /// Slot immediately after `task` on `side`.
    pub fn slot_after(&self, side: Side, task: TaskId) -> Option<Slot> {
        self.location(side, task).map(|(agv, pos)| Slot::new(side, agv, pos + 1))
    }

    /// All slots on one side in lexicographic `(agv, gap)` order.
    pub fn slots(&self, side: Side) -> impl Iterator<Item = Slot> + '_ {
        self.routes(side)
            .iter()
            .enumerate()
            .flat_map(move |(agv, r)| (0..=r.len()).map(move |gap| Slot::new(side, agv, gap)))
    }

    /// Number of slots on one side: placed tasks plus one per AGV.
    pub fn slot_count(&self, side: Side) -> usize {
        self.placed_count() + self.agvs(side)
    }

    pub fn check_slot(&self, slot: Slot) -> Result<(), ChainError> {
        let routes = self.routes(slot.side);
        let route = routes.get(slot.agv).ok_or(ChainError::NoSuchAgv {
            side: slot.side,
            agv: slot.agv,
        })?;
        if slot.gap > route.len() {
            return Err(ChainError::GapOutOfRange {
                side: slot.side,
                agv: slot.agv,
                gap: slot.gap,
                len: route.len(),
            });
        }
        Ok(())
    }

    /// Route entries on either side of a slot.
    pub fn neighbors(&self, slot: Slot) -> (Option<TaskId>, Option<TaskId>) {
        let route = self.route(slot.side, slot.agv);
        let pred = slot.gap.checked_sub(1).map(|g| route[g]);
        let succ = route.get(slot.gap).copied();
        (pred, succ)
    }

    /// Copy of the chain with `task` inserted at the two slots.
    pub fn insert_task(&self, task: TaskId, carrier_slot: Slot, shuttle_slot: Slot) -> Result<DualChain, ChainError> {
        let mut out = self.clone();
        out.insert_mut(task, carrier_slot, shuttle_slot)?;
        Ok(out)
    }

    /// Copy of the chain with `task` removed from both sides.
    pub fn remove_task(&self, task: TaskId) -> Result<DualChain, ChainError> {
        let mut out = self.clone();
        out.remove_mut(task)?;
        Ok(out)
    }

    pub fn insert_mut(&mut self, task: TaskId, carrier_slot: Slot, shuttle_slot: Slot) -> Result<(), ChainError> {
        if task.0 == 0 || task.0 > self.n_tasks {
            return Err(ChainError::UnknownTask(task.0, self.n_tasks));
        }
        if self.is_placed(task) {
            return Err(ChainError::AlreadyPlaced(task));
        }
        let carrier_slot = Slot { side: Side::Carrier, ..carrier_slot };
        let shuttle_slot = Slot { side: Side::Shuttle, ..shuttle_slot };
        self.check_slot(carrier_slot)?;
        self.check_slot(shuttle_slot)?;
        self.insert_side(task, carrier_slot);
        self.insert_side(task, shuttle_slot);
        Ok(())
    }

    /// Removes `task` and returns the slots it occupied.
    pub fn remove_mut(&mut self, task: TaskId) -> Result<(Slot, Slot), ChainError> {
        if !self.is_placed(task) {
            return Err(ChainError::NotPlaced(task));
        }
        let c = self.remove_side(task, Side::Carrier);
        let s = self.remove_side(task, Side::Shuttle);
        Ok((c, s))
    }

    fn insert_side(&mut self, task: TaskId, slot: Slot) {
        let (routes, locs) = self.side_mut(slot.side);
        let route = &mut routes[slot.agv];
        route.insert(slot.gap, task);
        reindex(locs, route, slot.agv, slot.gap);
    }

    fn remove_side(&mut self, task: TaskId, side: Side) -> Slot {
        let (routes, locs) = self.side_mut(side);
        let loc = locs[task.index()].take().expect("placed task has a location");
        let route = &mut routes[loc.agv as usize];
        route.remove(loc.pos as usize);
        reindex(locs, route, loc.agv as usize, loc.pos as usize);
        Slot::new(side, loc.agv as usize, loc.pos as usize)
    }

    fn side_mut(&mut self, side: Side) -> (&mut Vec<Vec<TaskId>>, &mut Vec<Option<Loc>>) {
        match side {
            Side::Carrier => (&mut self.carrier_routes, &mut self.carrier_loc),
            Side::Shuttle => (&mut self.shuttle_routes, &mut self.shuttle_loc),
        }
    }
}

fn reindex(locs: &mut [Option<Loc>], route: &[TaskId], agv: usize, from: usize) {
    for (pos, t) in route.iter().enumerate().skip(from) {
        locs[t.index()] = Some(Loc {
            agv: agv as u32,
            pos: pos as u32,
        });
    }
}

fn locate(n_tasks: usize, routes: &[Vec<TaskId>], side: Side) -> Result<Vec<Option<Loc>>, ChainError> {
    let mut locs = vec![None; n_tasks];
    for (agv, route) in routes.iter().enumerate() {
        for (pos, &t) in route.iter().enumerate() {
            if t.0 == 0 || t.0 > n_tasks {
                return Err(ChainError::UnknownTask(t.0, n_tasks));
            }
            if locs[t.index()].is_some() {
                return Err(ChainError::Duplicate(t, side));
            }
            locs[t.index()] = Some(Loc {
                agv: agv as u32,
                pos: pos as u32,
            });
        }
    }
    Ok(locs)
}

fn split_flat(flat: &[usize]) -> Vec<Vec<TaskId>> {
    let mut routes: Vec<Vec<TaskId>> = Vec::new();
    for &x in flat {
        if x == 0 || routes.is_empty() {
            routes.push(Vec::new());
        }
        if x != 0 {
            routes.last_mut().unwrap().push(TaskId(x));
        }
    }
    routes
}
