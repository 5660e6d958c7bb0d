use serde::{Deserialize, Serialize};

use crate::region::{Region, RegionF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TrackState {
    Free,
    Tracking,
    Locked,
}

impl TrackState {
    /// Whether `self -> next` is one of the permitted lifecycle transitions
    /// (self-loops included).
    pub fn can_become(self, next: TrackState) -> bool {
        use TrackState::*;
        matches!(
            (self, next),
            (Free, Free)
                | (Free, Tracking)
                | (Tracking, Tracking)
                | (Tracking, Locked)
                | (Tracking, Free)
                | (Locked, Locked)
                | (Locked, Free)
        )
    }
}

/// One tracker slot.
///
/// A `Free` slot keeps only its slot index; every other field is cleared.
#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub slot: usize,
    /// Unique within a run; meaningless while `Free`.
    pub id: u64,
    /// Sub-pixel box; quantized to the position format in fixed mode.
    pub region: RegionF,
    /// Pixels per second.
    pub vx: f64,
    pub vy: f64,
    pub state: TrackState,
    pub miss_count: u32,
    /// `(w_o, h_o)` captured when an occlusion is first predicted.
    pub pre_occlusion_size: Option<(i32, i32)>,
    /// Extent of the last merged proposal seen during an occlusion.
    pub merged_extent: Option<i32>,
    pub last_frame: u64,
    pub last_t: u64,
}

impl Track {
    pub fn free(slot: usize) -> Self {
        Track {
            slot,
            id: 0,
            region: RegionF::default(),
            vx: 0.0,
            vy: 0.0,
            state: TrackState::Free,
            miss_count: 0,
            pre_occlusion_size: None,
            merged_extent: None,
            last_frame: 0,
            last_t: 0,
        }
    }

    /// A fresh track seeded from an unmatched proposal.
    pub fn spawn(slot: usize, id: u64, region: Region, frame: u64, t: u64) -> Self {
        Track {
            id,
            region: region.to_f64(),
            state: TrackState::Tracking,
            last_frame: frame,
            last_t: t,
            ..Track::free(slot)
        }
    }

    /// The region rounded to whole pixels.
    pub fn pixels(&self) -> Region {
        self.region.round()
    }

    pub fn is_free(&self) -> bool {
        self.state == TrackState::Free
    }

    pub fn release(&mut self) {
        *self = Track::free(self.slot);
    }

    pub fn is_occluded(&self) -> bool {
        self.pre_occlusion_size.is_some()
    }

    pub fn clear_occlusion(&mut self) {
        self.pre_occlusion_size = None;
        self.merged_extent = None;
    }
}
