//! Arithmetic-operation tallies for the resource comparison.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounter {
    pub adds: u64,
    pub muls: u64,
    pub cmps: u64,
}

impl OpCounter {
    #[inline]
    pub fn tally(&mut self, adds: u64, muls: u64, cmps: u64) {
        self.adds += adds;
        self.muls += muls;
        self.cmps += cmps;
    }

    pub fn total(&self) -> u64 {
        self.adds + self.muls + self.cmps
    }
}

// Fixed costs of the tracker's helper operations.
pub(crate) const OVERLAP_COST: (u64, u64, u64) = (6, 1, 6);
pub(crate) const RATIO_COST: (u64, u64, u64) = (0, 3, 1);
pub(crate) const PREDICT_COST: (u64, u64, u64) = (2, 2, 4);
pub(crate) const UPDATE_COST: (u64, u64, u64) = (14, 12, 0);
pub(crate) const VELOCITY_COST: (u64, u64, u64) = (8, 6, 0);
