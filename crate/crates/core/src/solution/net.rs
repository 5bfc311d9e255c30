use std::fmt;

use crate::error::NetError;
use crate::model::TaskId;

use super::chain::{DualChain, Side};

/// A place of the solution net.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    /// `p_i^+` / `p_i^-`: the carrier (shuttle) assigned to task `i` is ready for it.
    Task(Side, TaskId),
    /// `p_0^r`: AGV `r` of the given side has finished its route.
    Terminal(Side, usize),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Task(Side::Carrier, t) => write!(f, "p{t}+"),
            Place::Task(Side::Shuttle, t) => write!(f, "p{t}-"),
            Place::Terminal(side, r) => write!(f, "p0[{side} {r}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Link {
    pub agv: u32,
    pub pred: Option<TaskId>,
    pub succ: Option<TaskId>,
}

/// Token distribution plus the fired flag of every transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Marking {
    tokens: Vec<u32>,
    fired: Vec<bool>,
}

impl Marking {
    pub fn tokens(&self, net: &SolutionNet, place: Place) -> u32 {
        self.tokens[net.place_index(place)]
    }

    pub fn has_fired(&self, t: TaskId) -> bool {
        self.fired[t.index()]
    }

    /// Places holding at least one token, in index order.
    pub fn marked_places(&self, net: &SolutionNet) -> Vec<Place> {
        (0..self.tokens.len())
            .filter(|&i| self.tokens[i] > 0)
            .map(|i| net.place_at(i))
            .collect()
    }

    /// Token sums over `P+ ∪ P0+` and `P- ∪ P0-`.
    pub fn side_totals(&self, net: &SolutionNet) -> (u32, u32) {
        let n = net.n_tasks;
        let t = &self.tokens;
        let c: u32 = t[..n].iter().sum::<u32>() + t[2 * n..2 * n + net.carriers].iter().sum::<u32>();
        let s: u32 = t[n..2 * n].iter().sum::<u32>() + t[2 * n + net.carriers..].iter().sum::<u32>();
        (c, s)
    }

    /// Token sums over the task places only (`P+`, `P-`).
    pub fn task_place_totals(&self, net: &SolutionNet) -> (u32, u32) {
        let n = net.n_tasks;
        (self.tokens[..n].iter().sum(), self.tokens[n..2 * n].iter().sum())
    }
}

/// The conflict-free Petri net modelling a dual chain.
///
/// Transitions are indexed by task id and places by task id and side, with
/// one terminal place per AGV. Every arc has weight one, so the structure is
/// fully described by each task's predecessor and successor on both sides.
/// An AGV with an empty route has its terminal place marked at `M0`.
#[derive(Debug, Clone)]
pub struct SolutionNet {
    n_tasks: usize,
    carriers: usize,
    shuttles: usize,
    carrier: Vec<Option<Link>>,
    shuttle: Vec<Option<Link>>,
    carrier_ends: Vec<(Option<TaskId>, Option<TaskId>)>,
    shuttle_ends: Vec<(Option<TaskId>, Option<TaskId>)>,
    marking: Marking,
}

impl SolutionNet {
    pub fn build(chain: &DualChain) -> Self {
        let n = chain.n_tasks();
        let mut net = SolutionNet {
            n_tasks: n,
            carriers: chain.agvs(Side::Carrier),
            shuttles: chain.agvs(Side::Shuttle),
            carrier: vec![None; n],
            shuttle: vec![None; n],
            carrier_ends: Vec::new(),
            shuttle_ends: Vec::new(),
            marking: Marking {
                tokens: Vec::new(),
                fired: Vec::new(),
            },
        };
        for side in [Side::Carrier, Side::Shuttle] {
            let mut ends = Vec::with_capacity(chain.agvs(side));
            for (agv, route) in chain.routes(side).iter().enumerate() {
                for (pos, &t) in route.iter().enumerate() {
                    net.links_mut(side)[t.index()] = Some(Link {
                        agv: agv as u32,
                        pred: pos.checked_sub(1).map(|p| route[p]),
                        succ: route.get(pos + 1).copied(),
                    });
                }
                ends.push((route.first().copied(), route.last().copied()));
            }
            *net.ends_mut(side) = ends;
        }
        net.reset_marking();
        net
    }

    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    pub fn agvs(&self, side: Side) -> usize {
        match side {
            Side::Carrier => self.carriers,
            Side::Shuttle => self.shuttles,
        }
    }

    #[inline]
    pub(crate) fn links(&self, side: Side) -> &[Option<Link>] {
        match side {
            Side::Carrier => &self.carrier,
            Side::Shuttle => &self.shuttle,
        }
    }

    fn links_mut(&mut self, side: Side) -> &mut Vec<Option<Link>> {
        match side {
            Side::Carrier => &mut self.carrier,
            Side::Shuttle => &mut self.shuttle,
        }
    }

    #[inline]
    pub(crate) fn ends(&self, side: Side) -> &[(Option<TaskId>, Option<TaskId>)] {
        match side {
            Side::Carrier => &self.carrier_ends,
            Side::Shuttle => &self.shuttle_ends,
        }
    }

    fn ends_mut(&mut self, side: Side) -> &mut Vec<(Option<TaskId>, Option<TaskId>)> {
        match side {
            Side::Carrier => &mut self.carrier_ends,
            Side::Shuttle => &mut self.shuttle_ends,
        }
    }

    #[inline]
    pub(crate) fn link(&self, side: Side, t: TaskId) -> Option<Link> {
        self.links(side)[t.index()]
    }

    /// Whether `t_i` is a transition of the net.
    #[inline]
    pub fn contains(&self, t: TaskId) -> bool {
        t.0 >= 1 && t.0 <= self.n_tasks && self.carrier[t.index()].is_some()
    }

    pub fn transitions(&self) -> impl Iterator<Item = TaskId> + '_ {
        (0..self.n_tasks).filter(|&k| self.carrier[k].is_some()).map(TaskId::from_index)
    }

    pub fn transition_count(&self) -> usize {
        self.carrier.iter().filter(|l| l.is_some()).count()
    }

    /// Every place of the net: two per transition plus one terminal per AGV.
    pub fn places(&self) -> Vec<Place> {
        let mut out: Vec<Place> = self.transitions().map(|t| Place::Task(Side::Carrier, t)).collect();
        out.extend(self.transitions().map(|t| Place::Task(Side::Shuttle, t)));
        out.extend((0..self.carriers).map(|r| Place::Terminal(Side::Carrier, r)));
        out.extend((0..self.shuttles).map(|r| Place::Terminal(Side::Shuttle, r)));
        out
    }

    pub(crate) fn place_index(&self, p: Place) -> usize {
        let n = self.n_tasks;
        match p {
            Place::Task(Side::Carrier, t) => t.index(),
            Place::Task(Side::Shuttle, t) => n + t.index(),
            Place::Terminal(Side::Carrier, r) => 2 * n + r,
            Place::Terminal(Side::Shuttle, r) => 2 * n + self.carriers + r,
        }
    }

    fn place_at(&self, i: usize) -> Place {
        let n = self.n_tasks;
        if i < n {
            Place::Task(Side::Carrier, TaskId::from_index(i))
        } else if i < 2 * n {
            Place::Task(Side::Shuttle, TaskId::from_index(i - n))
        } else if i < 2 * n + self.carriers {
            Place::Terminal(Side::Carrier, i - 2 * n)
        } else {
            Place::Terminal(Side::Shuttle, i - 2 * n - self.carriers)
        }
    }

    /// Input places `{p_i^+, p_i^-}` of a transition.
    pub fn preset(&self, t: TaskId) -> [Place; 2] {
        [Place::Task(Side::Carrier, t), Place::Task(Side::Shuttle, t)]
    }

    /// Output places of a transition: the successors' input places, or the
    /// AGV terminal place when `t` ends a route.
    pub fn postset(&self, t: TaskId) -> [Place; 2] {
        [Side::Carrier, Side::Shuttle].map(|side| {
            let l = self.link(side, t).expect("transition in net");
            match l.succ {
                Some(s) => Place::Task(side, s),
                None => Place::Terminal(side, l.agv as usize),
            }
        })
    }

    /// Input transitions of a place (at most one).
    pub fn place_preset(&self, p: Place) -> Option<TaskId> {
        match p {
            Place::Task(side, t) => self.link(side, t).and_then(|l| l.pred),
            Place::Terminal(side, r) => self.ends(side)[r].1,
        }
    }

    /// Output transitions of a place (at most one: the net is conflict-free).
    pub fn place_postset(&self, p: Place) -> Option<TaskId> {
        match p {
            Place::Task(_, t) if self.contains(t) => Some(t),
            _ => None,
        }
    }

    /// Direct precedence successors of `t` on both sides.
    #[inline]
    pub fn successors(&self, t: TaskId) -> [Option<TaskId>; 2] {
        [self.carrier[t.index()].and_then(|l| l.succ), self.shuttle[t.index()].and_then(|l| l.succ)]
    }

    /// Direct precedence predecessors of `t` on both sides.
    #[inline]
    pub fn predecessors(&self, t: TaskId) -> [Option<TaskId>; 2] {
        [self.carrier[t.index()].and_then(|l| l.pred), self.shuttle[t.index()].and_then(|l| l.pred)]
    }

    /// First task of every AGV route on one side.
    pub fn heads(&self, side: Side) -> impl Iterator<Item = Option<TaskId>> + '_ {
        self.ends(side).iter().map(|e| e.0)
    }

    /// The initial marking `M0`.
    pub fn initial_marking(&self) -> Marking {
        let mut tokens = vec![0; 2 * self.n_tasks + self.carriers + self.shuttles];
        for side in [Side::Carrier, Side::Shuttle] {
            for (r, &(head, _)) in self.ends(side).iter().enumerate() {
                let p = match head {
                    Some(t) => Place::Task(side, t),
                    None => Place::Terminal(side, r),
                };
                tokens[self.place_index(p)] = 1;
            }
        }
        Marking {
            tokens,
            fired: vec![false; self.n_tasks],
        }
    }

    pub fn marking(&self) -> &Marking {
        &self.marking
    }

    pub fn reset_marking(&mut self) {
        self.marking = self.initial_marking();
    }

    #[inline]
    pub(crate) fn is_enabled_in(&self, m: &Marking, t: TaskId) -> bool {
        let k = t.index();
        self.carrier[k].is_some() && m.tokens[k] > 0 && m.tokens[self.n_tasks + k] > 0
    }

    /// Fires `t` in marking `m`. Returns the output places.
    pub(crate) fn fire_in(&self, m: &mut Marking, t: TaskId) -> Result<[Place; 2], NetError> {
        if !self.contains(t) {
            return Err(NetError::UnknownTransition(t));
        }
        if m.fired[t.index()] {
            return Err(NetError::AlreadyFired(t));
        }
        if !self.is_enabled_in(m, t) {
            return Err(NetError::NotEnabled(t));
        }
        let k = t.index();
        m.tokens[k] -= 1;
        m.tokens[self.n_tasks + k] -= 1;
        let post = self.postset(t);
        for p in post {
            let i = self.place_index(p);
            m.tokens[i] += 1;
        }
        m.fired[k] = true;
        Ok(post)
    }

    /// Transitions enabled at the current marking, ascending by id.
    pub fn enabled(&self) -> Vec<TaskId> {
        self.transitions().filter(|&t| self.is_enabled_in(&self.marking, t)).collect()
    }

    /// Fires an enabled transition at the current marking.
    pub fn fire(&mut self, t: TaskId) -> Result<(), NetError> {
        let mut m = std::mem::replace(
            &mut self.marking,
            Marking {
                tokens: Vec::new(),
                fired: Vec::new(),
            },
        );
        let r = self.fire_in(&mut m, t);
        self.marking = m;
        r.map(|_| ())
    }

    pub(crate) fn is_final_marking(&self, m: &Marking) -> bool {
        let n = self.n_tasks;
        m.tokens[..2 * n].iter().all(|&x| x == 0) && m.tokens[2 * n..].iter().all(|&x| x == 1)
    }

    /// True iff every terminal place holds one token and every task place none.
    pub fn is_final(&self) -> bool {
        self.is_final_marking(&self.marking)
    }

    /// Splices `task` into one side between `pred` and `succ` of route `agv`.
    /// Leaves the stored marking untouched.
    pub(crate) fn splice_in(&mut self, side: Side, agv: usize, pred: Option<TaskId>, succ: Option<TaskId>, task: TaskId) {
        self.links_mut(side)[task.index()] = Some(Link {
            agv: agv as u32,
            pred,
            succ,
        });
        match pred {
            Some(p) => self.links_mut(side)[p.index()].as_mut().unwrap().succ = Some(task),
            None => self.ends_mut(side)[agv].0 = Some(task),
        }
        match succ {
            Some(s) => self.links_mut(side)[s.index()].as_mut().unwrap().pred = Some(task),
            None => self.ends_mut(side)[agv].1 = Some(task),
        }
    }

    /// Reverse of [`Self::splice_in`].
    pub(crate) fn splice_out(&mut self, side: Side, task: TaskId) {
        let l = self.links_mut(side)[task.index()].take().expect("task in net");
        let agv = l.agv as usize;
        match l.pred {
            Some(p) => self.links_mut(side)[p.index()].as_mut().unwrap().succ = l.succ,
            None => self.ends_mut(side)[agv].0 = l.succ,
        }
        match l.succ {
            Some(s) => self.links_mut(side)[s.index()].as_mut().unwrap().pred = l.pred,
            None => self.ends_mut(side)[agv].1 = l.pred,
        }
    }

    /// Structural equality (arcs and node sets), ignoring the marking.
    pub fn same_structure(&self, other: &SolutionNet) -> bool {
        self.n_tasks == other.n_tasks
            && self.carriers == other.carriers
            && self.shuttles == other.shuttles
            && self.carrier == other.carrier
            && self.shuttle == other.shuttle
            && self.carrier_ends == other.carrier_ends
            && self.shuttle_ends == other.shuttle_ends
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> DualChain {
        DualChain::from_flat(7, &[0, 5, 4, 2, 0, 6, 1, 3, 7], &[0, 5, 1, 4, 7, 0, 6, 3, 2]).unwrap()
    }

    fn t(i: usize) -> TaskId {
        TaskId(i)
    }

    fn pc(i: usize) -> Place {
        Place::Task(Side::Carrier, t(i))
    }

    fn ps(i: usize) -> Place {
        Place::Task(Side::Shuttle, t(i))
    }

    #[test]
    fn builds_example_structure() {
        let net = SolutionNet::build(&example());
        assert_eq!(net.transition_count(), 7);
        assert_eq!(net.places().len(), 14 + 4);
        let mut m0 = net.marking().marked_places(&net);
        m0.sort();
        let mut want = vec![pc(5), pc(6), ps(5), ps(6)];
        want.sort();
        assert_eq!(m0, want);
        // Carrier arc t5 -> p4+ -> t4; route end t7 -> terminal of carrier 1.
        assert_eq!(net.postset(t(5)), [pc(4), ps(1)]);
        assert_eq!(net.postset(t(7)), [Place::Terminal(Side::Carrier, 1), Place::Terminal(Side::Shuttle, 0)]);
        assert_eq!(net.place_preset(pc(4)), Some(t(5)));
        assert_eq!(net.place_preset(Place::Terminal(Side::Shuttle, 1)), Some(t(2)));
    }

    #[test]
    fn every_place_has_at_most_one_input_and_output() {
        let net = SolutionNet::build(&example());
        let mut outputs = std::collections::HashMap::new();
        let mut inputs = std::collections::HashMap::new();
        for tr in net.transitions() {
            for p in net.preset(tr) {
                *outputs.entry(p).or_insert(0) += 1;
            }
            for p in net.postset(tr) {
                *inputs.entry(p).or_insert(0) += 1;
            }
        }
        assert!(outputs.values().all(|&c| c <= 1));
        assert!(inputs.values().all(|&c| c <= 1));
    }

    #[test]
    fn single_task_net() {
        let c = DualChain::from_flat(1, &[0, 1], &[0, 1]).unwrap();
        let mut net = SolutionNet::build(&c);
        assert_eq!(net.transition_count(), 1);
        assert_eq!(net.enabled(), vec![t(1)]);
        net.fire(t(1)).unwrap();
        assert!(net.is_final());
    }

    #[test]
    fn empty_route_marks_terminal() {
        let c = DualChain::from_flat(1, &[0, 1, 0], &[0, 1]).unwrap();
        let net = SolutionNet::build(&c);
        let term = Place::Terminal(Side::Carrier, 1);
        assert_eq!(net.marking().tokens(&net, term), 1);
        assert_eq!(net.place_preset(term), None);
        assert!(net.transitions().all(|tr| !net.postset(tr).contains(&term)));
    }

    #[test]
    fn firing_follows_table_s1() {
        let mut net = SolutionNet::build(&example());
        assert_eq!(net.enabled(), vec![t(5), t(6)]);
        net.fire(t(5)).unwrap();
        let mut m1 = net.marking().marked_places(&net);
        m1.sort();
        let mut want = vec![pc(4), ps(1), pc(6), ps(6)];
        want.sort();
        assert_eq!(m1, want);
        for k in [6, 1, 4, 3, 7, 2] {
            net.fire(t(k)).unwrap();
        }
        assert!(net.is_final());
        assert!(net.enabled().is_empty());
        assert_eq!(net.fire(t(5)), Err(NetError::AlreadyFired(t(5))));
    }

    #[test]
    fn disabled_transition_cannot_fire() {
        let mut net = SolutionNet::build(&example());
        assert_eq!(net.fire(t(4)), Err(NetError::NotEnabled(t(4))));
        assert_eq!(net.fire(t(9)), Err(NetError::UnknownTransition(t(9))));
        assert!(!net.is_final());
    }

    #[test]
    fn cross_wait_pair_enables_nothing() {
        // Carrier runs 1 then 2, shuttle runs 2 then 1.
        let c = DualChain::from_flat(2, &[0, 1, 2], &[0, 2, 1]).unwrap();
        let net = SolutionNet::build(&c);
        assert!(net.enabled().is_empty());
        assert!(!net.is_final());
    }

    #[test]
    fn splice_round_trip_restores_structure() {
        let c = example();
        let base = SolutionNet::build(&c);
        let mut net = base.clone();
        net.splice_out(Side::Carrier, t(4));
        net.splice_out(Side::Shuttle, t(4));
        let removed = SolutionNet::build(&c.remove_task(t(4)).unwrap());
        assert!(net.same_structure(&removed));
        net.splice_in(Side::Carrier, 0, Some(t(5)), Some(t(2)), t(4));
        net.splice_in(Side::Shuttle, 0, Some(t(1)), Some(t(7)), t(4));
        assert!(net.same_structure(&base));
    }
}
