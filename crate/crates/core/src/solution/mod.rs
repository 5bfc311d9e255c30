//! Dual-chain genotype and its Petri-net phenotype.

mod chain;
mod net;

pub use chain::{DualChain, Side, Slot};
pub use net::{Marking, Place, SolutionNet};


use crate::error::ChainError;
use crate::model::TaskId;

/// A dual chain together with its net, kept in sync by splicing.
#[derive(Debug, Clone)]
pub struct Solution {
    chain: DualChain,
    net: SolutionNet,
}

impl Solution {
    pub fn new(chain: DualChain) -> Self {
        let net = SolutionNet::build(&chain);
        Solution { chain, net }
    }

    pub fn chain(&self) -> &DualChain {
        &self.chain
    }

    pub fn net(&self) -> &SolutionNet {
        &self.net
    }

    pub fn into_chain(self) -> DualChain {
        self.chain
    }

    pub fn insert(&mut self, task: TaskId, carrier_slot: Slot, shuttle_slot: Slot) -> Result<(), ChainError> {
        let carrier_slot = Slot { side: Side::Carrier, ..carrier_slot };
        let shuttle_slot = Slot { side: Side::Shuttle, ..shuttle_slot };
        if task.0 == 0 || task.0 > self.chain.n_tasks() {
            return Err(ChainError::UnknownTask(task.0, self.chain.n_tasks()));
        }
        if self.chain.is_placed(task) {
            return Err(ChainError::AlreadyPlaced(task));
        }
        self.chain.check_slot(carrier_slot)?;
        self.chain.check_slot(shuttle_slot)?;
        for slot in [carrier_slot, shuttle_slot] {
            let (pred, succ) = self.chain.neighbors(slot);
            self.net.splice_in(slot.side, slot.agv, pred, succ, task);
        }
        self.chain.insert_mut(task, carrier_slot, shuttle_slot)?;
        self.net.reset_marking();
        Ok(())
    }

    /// Removes `task`, returning the carrier and shuttle slots it occupied.
    pub fn remove(&mut self, task: TaskId) -> Result<(Slot, Slot), ChainError> {
        let slots = self.chain.remove_mut(task)?;
        self.net.splice_out(Side::Carrier, task);
        self.net.splice_out(Side::Shuttle, task);
        self.net.reset_marking();
        Ok(slots)
    }

    /// Temporarily splices `task` into the net only (not the chain) and runs `f`.
    pub(crate) fn with_tentative<R>(
        &mut self,
        task: TaskId,
        carrier_slot: Slot,
        shuttle_slot: Slot,
        f: impl FnOnce(&SolutionNet) -> R,
    ) -> R {
        for slot in [carrier_slot, shuttle_slot] {
            let (pred, succ) = self.chain.neighbors(slot);
            self.net.splice_in(slot.side, slot.agv, pred, succ, task);
        }
        let r = f(&self.net);
        self.net.splice_out(Side::Carrier, task);
        self.net.splice_out(Side::Shuttle, task);
        r
    }
}
