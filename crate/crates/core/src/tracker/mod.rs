//! Overlap-based multi-object tracker over a fixed pool of slots.
//!
//! Each [`Tracker::step`] consumes the proposals of one frame and runs, in
//! order: prediction, assignment, merging/occlusion resolution, the weighted
//! region and velocity updates, and post-processing (miss counting,
//! out-of-bounds release). Only `Locked` tracks are reported.

mod history;
mod occlusion;
mod ops;
mod track;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use history::TrackHistory;
pub use occlusion::{
    detect_occlusion, dominant_axis, occlusion_flags, resolve_occlusion, MotionAxis, OcclusionFlags,
};
pub use ops::{
    assign, assignment_ratio, merge_proposals, overlap_area, predict, update_track,
    update_velocity, Assignment,
};
pub use track::{Track, TrackState};

use crate::error::{Error, Result};
use crate::event_io::Sensor;
use crate::instrument::{self, OpCounter};
use crate::quant::{snap_alpha, Arith, FixedPointConfig};
use crate::region::{Region, RegionF};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Weight of the prediction against the new proposal.
    pub alpha: f64,
    /// Assignment requires the overlap ratio to exceed this.
    pub overlap_threshold: f64,
    pub max_tracks: usize,
    /// Consecutive misses tolerated before a track is freed.
    pub max_unlocks: u32,
    /// Prediction steps checked for upcoming occlusions (1 or 2).
    pub occlusion_horizon: u32,
    #[serde(skip)]
    pub arith: Arith,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        TrackerConfig {
            alpha: 0.5,
            overlap_threshold: 0.20,
            max_tracks: 8,
            max_unlocks: 3,
            occlusion_horizon: 2,
            arith: Arith::Float,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!(
                "trk.alpha {} not in [0,1]",
                self.alpha
            )));
        }
        if !(self.overlap_threshold > 0.0 && self.overlap_threshold < 1.0) {
            return Err(Error::Config(format!(
                "trk.overlap_threshold {} not in (0,1)",
                self.overlap_threshold
            )));
        }
        if self.max_tracks == 0 || self.max_unlocks == 0 {
            return Err(Error::Config(
                "trk.max_tracks and trk.max_unlocks must be positive".into(),
            ));
        }
        if !(1..=2).contains(&self.occlusion_horizon) {
            return Err(Error::Config("trk.occlusion_horizon must be 1 or 2".into()));
        }
        Ok(())
    }
}

/// Routes the tracker's arithmetic through the fixed-point datapath and snaps
/// `alpha` to a multiple of 1/4.
pub fn fixed_mode(cfg: &TrackerConfig, fx: &FixedPointConfig) -> Result<TrackerConfig> {
    Ok(TrackerConfig {
        alpha: snap_alpha(cfg.alpha),
        arith: Arith::Fixed(fx.datapath()?),
        ..cfg.clone()
    })
}

/// One output line per `Locked` track per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackRecord {
    pub t_us: u64,
    pub id: u64,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
    pub vx: f64,
    pub vy: f64,
    pub state: TrackState,
}

impl TrackRecord {
    pub fn region_f(&self) -> RegionF {
        RegionF {
            x: self.x,
            y: self.y,
            w: self.w,
            h: self.h,
        }
    }

    /// The reported box rounded to whole pixels.
    pub fn region(&self) -> Region {
        self.region_f().round()
    }
}

/// Ages unmatched tracks: they coast along their velocity, and are freed once
/// the miss limit is reached or their center leaves the frame.
pub fn post_process(
    tracks: &mut [Track],
    matched: &BTreeSet<u64>,
    bounds: Sensor,
    cfg: &TrackerConfig,
    dt: f64,
) {
    for t in tracks.iter_mut().filter(|t| !t.is_free()) {
        if !matched.contains(&t.id) {
            t.region = ops::advance(t, dt, cfg);
            t.miss_count += 1;
            if t.miss_count >= cfg.max_unlocks {
                t.release();
                continue;
            }
        }
        let (cx, cy) = t.region.center();
        if cx < 0.0 || cy < 0.0 || cx >= f64::from(bounds.width) || cy >= f64::from(bounds.height) {
            t.release();
        }
    }
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    bounds: Sensor,
    slots: Vec<Track>,
    next_id: u64,
    frame: u64,
    last_t: Option<u64>,
    history: TrackHistory,
    transitions: BTreeSet<(TrackState, TrackState)>,
    ops: OpCounter,
}

impl Tracker {
    pub fn new(cfg: TrackerConfig, bounds: Sensor) -> Result<Self> {
        cfg.validate()?;
        Ok(Tracker {
            slots: (0..cfg.max_tracks).map(Track::free).collect(),
            cfg,
            bounds,
            next_id: 1,
            frame: 0,
            last_t: None,
            history: TrackHistory::new(),
            transitions: BTreeSet::new(),
            ops: OpCounter::default(),
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn tracks(&self) -> &[Track] {
        &self.slots
    }

    pub fn active_count(&self) -> usize {
        self.slots.iter().filter(|t| !t.is_free()).count()
    }

    pub fn history(&self) -> &TrackHistory {
        &self.history
    }

    /// Lifecycle transitions observed so far, self-loops included.
    pub fn transitions(&self) -> &BTreeSet<(TrackState, TrackState)> {
        &self.transitions
    }

    pub fn ops(&self) -> OpCounter {
        self.ops
    }

    /// Bytes held by the slot pool; the pool never grows.
    pub fn state_bytes(&self) -> usize {
        self.slots.len() * std::mem::size_of::<Track>()
    }

    pub fn step(&mut self, proposals: &[Region], t: u64) -> Result<Vec<TrackRecord>> {
        if let Some(prev) = self.last_t {
            if t <= prev {
                return Err(Error::Ordering(format!("step at {t} not after {prev}")));
            }
        }
        let dt = self.last_t.map_or(0.0, |p| (t - p) as f64 * 1e-6);
        let frame = self.frame;
        let before: Vec<TrackState> = self.slots.iter().map(|s| s.state).collect();
        let cfg = self.cfg.clone();

        let n_active = self.active_count() as u64;
        let (a, m, c) = instrument::PREDICT_COST;
        self.ops.tally(a * n_active, m * n_active, c * n_active);
        let pairs = n_active * proposals.len() as u64;
        let (oa, om, oc) = instrument::OVERLAP_COST;
        let (ra, rm, rc) = instrument::RATIO_COST;
        self.ops
            .tally((oa + ra) * pairs, (om + rm) * pairs, (oc + rc) * pairs);

        let asg = assign(proposals, &self.slots, &cfg, dt, self.bounds)?;
        let snapshot = self.slots.clone();
        let mut matched = BTreeSet::new();
        let mut occluded_now = BTreeSet::new();

        for tr in snapshot.iter().filter(|t| !t.is_free()) {
            let mine: Vec<usize> = asg.proposals_of(tr.id).collect();
            if mine.is_empty() {
                continue;
            }
            let (exclusive, shared): (Vec<usize>, Vec<usize>) =
                mine.iter().partition(|&&p| asg.degree(p) == 1);
            let mut updated = if !exclusive.is_empty() {
                let meas = if exclusive.len() == 1 {
                    proposals[exclusive[0]]
                } else {
                    let regs: Vec<Region> = exclusive.iter().map(|&i| proposals[i]).collect();
                    merge_proposals(&regs, &predict(tr, dt, &cfg, self.bounds)?)
                };
                let (vx, vy) = if dt > 0.0 {
                    update_velocity(tr, &meas, &cfg, dt)?
                } else {
                    (tr.vx, tr.vy)
                };
                let mut u = update_track(tr, &meas, &cfg, dt, self.bounds)?;
                u.vx = vx;
                u.vy = vy;
                let (ua, um, uc) = instrument::UPDATE_COST;
                let (va, vm, vc) = instrument::VELOCITY_COST;
                self.ops.tally(ua + va, um + vm, uc + vc);
                u
            } else {
                let meas = shared[1..]
                    .iter()
                    .fold(proposals[shared[0]], |acc, &i| acc.union(&proposals[i]));
                let partner = self.pick_partner(&snapshot, &asg, tr, &shared, &meas, dt)?;
                occluded_now.insert(tr.id);
                self.ops.tally(4, 0, 6);
                resolve_pair(tr, partner, &meas, self.bounds)?
            };
            updated.last_t = t;
            updated.last_frame = frame;
            matched.insert(tr.id);
            self.slots[tr.slot] = updated;
        }

        for &(pi, slot) in &asg.spawns {
            let id = self.next_id;
            self.next_id += 1;
            self.slots[slot] = Track::spawn(slot, id, proposals[pi], frame, t);
            matched.insert(id);
        }

        post_process(&mut self.slots, &matched, self.bounds, &cfg, dt);
        self.ops.tally(2 * n_active, 2 * n_active, 6 * n_active);
        for s in self.slots.iter_mut().filter(|s| !s.is_free()) {
            s.last_t = t;
        }

        let flagged = detect_occlusion(&mut self.slots, &cfg, dt, self.bounds)?;
        let n = self.active_count() as u64;
        let checks = n * n.saturating_sub(1) / 2 * u64::from(cfg.occlusion_horizon);
        let (pa, pm, pc) = instrument::PREDICT_COST;
        self.ops.tally(
            checks * (2 * pa + oa),
            checks * (2 * pm + om),
            checks * (2 * pc + oc),
        );
        let in_pair: BTreeSet<u64> = flagged.iter().flat_map(|&(a, b)| [a, b]).collect();
        for s in self.slots.iter_mut().filter(|s| !s.is_free()) {
            if !in_pair.contains(&s.id) && !occluded_now.contains(&s.id) {
                s.clear_occlusion();
            }
        }

        // spawns only take slots that were free before the step, so slot
        // states compare directly
        for (s, &prev_state) in self.slots.iter().zip(&before) {
            self.transitions.insert((prev_state, s.state));
        }

        let mut out = Vec::new();
        for s in self.slots.iter().filter(|s| !s.is_free()) {
            self.history.push(s.id, t, s.region)?;
            if s.state == TrackState::Locked {
                // coasting boxes may overhang the border until their center leaves
                let r = s.region.clamp_inside(self.bounds.width, self.bounds.height);
                out.push(TrackRecord {
                    t_us: t,
                    id: s.id,
                    x: r.x,
                    y: r.y,
                    w: r.w,
                    h: r.h,
                    vx: s.vx,
                    vy: s.vy,
                    state: s.state,
                });
            }
        }
        self.last_t = Some(t);
        self.frame += 1;
        Ok(out)
    }

    /// The other claimant of a shared proposal with the largest predicted
    /// overlap; ties go to the lower slot.
    fn pick_partner<'a>(
        &self,
        snapshot: &'a [Track],
        asg: &Assignment,
        tr: &Track,
        shared: &[usize],
        meas: &Region,
        dt: f64,
    ) -> Result<&'a Track> {
        let mut best: Option<(&Track, i64)> = None;
        for other in snapshot.iter().filter(|o| !o.is_free() && o.id != tr.id) {
            if !asg
                .pairs
                .iter()
                .any(|&(p, id)| id == other.id && shared.contains(&p))
            {
                continue;
            }
            let ov = overlap_area(&predict(other, dt, &self.cfg, self.bounds)?, meas);
            if best.is_none_or(|(_, b)| ov > b) {
                best = Some((other, ov));
            }
        }
        best.map(|b| b.0).ok_or_else(|| {
            Error::State(format!("shared proposal of track {} has no partner", tr.id))
        })
    }
}

/// Region for `k` when it shares the merged proposal `meas` with `partner`.
/// Velocity is held while the pair is merged.
fn resolve_pair(k: &Track, partner: &Track, meas: &Region, bounds: Sensor) -> Result<Track> {
    let mut k = k.clone();
    let mut p = partner.clone();
    for t in [&mut k, &mut p] {
        if t.pre_occlusion_size.is_none() {
            let px = t.pixels();
            t.pre_occlusion_size = Some((px.w, px.h));
        }
    }
    let axis = dominant_axis(&k, &p);
    let prev = k
        .merged_extent
        .unwrap_or_else(|| axis.extent(&k.pixels().union(&p.pixels())));
    let (vk, vp) = (axis.velocity(&k), axis.velocity(&p));
    let k_is_a = vk > vp || (vk == vp && k.id < p.id);
    let (a, b) = if k_is_a { (&k, &p) } else { (&p, &k) };
    let flags = occlusion_flags(a, b, meas, prev);
    let (mut ra, mut rb) = resolve_occlusion(a, b, meas, flags)?;
    // The corner cases assume motion toward +x/+y; mirror for a shared negative direction.
    if flags.cd && axis.velocity(a) < 0.0 {
        std::mem::swap(&mut ra, &mut rb);
    }
    let region = if k_is_a { ra } else { rb };
    Ok(Track {
        region: region.clamp_inside(bounds.width, bounds.height).to_f64(),
        state: ops::matched_state(&k),
        miss_count: 0,
        merged_extent: Some(axis.extent(meas)),
        ..k
    })
}
