//! Occlusion prediction and resolution.
//!
//! When one proposal is claimed by two tracks, the pair is split back using
//! three predicates evaluated on the dominant motion axis:
//!
//! * `cd`  - both velocities share a sign,
//! * `wi`  - the merged extent grew since the previous frame,
//! * `hvo` - track `a` is the faster of the two.
//!
//! While the merged blob shrinks both tracks report it whole. Once it grows,
//! one track takes its pre-occlusion size at the far corner of the blob and
//! the other at the near corner.

use super::ops::{overlap_area, predict};
use super::track::Track;
use super::TrackerConfig;
use crate::error::{Error, Result};
use crate::event_io::Sensor;
use crate::region::Region;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionAxis {
    X,
    Y,
}

impl MotionAxis {
    pub fn velocity(self, t: &Track) -> f64 {
        match self {
            MotionAxis::X => t.vx,
            MotionAxis::Y => t.vy,
        }
    }

    pub fn extent(self, r: &Region) -> i32 {
        match self {
            MotionAxis::X => r.w,
            MotionAxis::Y => r.h,
        }
    }
}

/// Axis carrying the larger velocity component of the faster track.
pub fn dominant_axis(a: &Track, b: &Track) -> MotionAxis {
    let speed = |t: &Track| t.vx.hypot(t.vy);
    let fast = if speed(b) > speed(a) { b } else { a };
    if fast.vy.abs() > fast.vx.abs() {
        MotionAxis::Y
    } else {
        MotionAxis::X
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OcclusionFlags {
    pub cd: bool,
    pub wi: bool,
    pub hvo: bool,
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

pub fn occlusion_flags(
    a: &Track,
    b: &Track,
    merged: &Region,
    prev_merged_extent: i32,
) -> OcclusionFlags {
    let axis = dominant_axis(a, b);
    let (va, vb) = (axis.velocity(a), axis.velocity(b));
    OcclusionFlags {
        cd: sign(va) == sign(vb),
        wi: axis.extent(merged) > prev_merged_extent,
        hvo: va.abs() > vb.abs(),
    }
}

fn pre_size(t: &Track) -> Result<(i32, i32)> {
    t.pre_occlusion_size
        .ok_or_else(|| Error::State(format!("track {} has no pre-occlusion size", t.id)))
}

/// Regions for `a` and `b` given the single proposal both claim.
///
/// `a` follows the case formulas directly; `b` takes the complementary corner.
pub fn resolve_occlusion(
    a: &Track,
    b: &Track,
    proposal: &Region,
    flags: OcclusionFlags,
) -> Result<(Region, Region)> {
    let (wa, ha) = pre_size(a)?;
    let (wb, hb) = pre_size(b)?;
    if !flags.wi {
        return Ok((*proposal, *proposal));
    }
    let far = |w: i32, h: i32| Region::new(proposal.right() - w, proposal.bottom() - h, w, h);
    let near = |w: i32, h: i32| Region::new(proposal.x, proposal.y, w, h);
    if !flags.cd || flags.hvo {
        Ok((far(wa, ha), near(wb, hb)))
    } else {
        Ok((near(wa, ha), far(wb, hb)))
    }
}

/// Pairs of active tracks whose predictions overlap within the look-ahead
/// horizon. Tracks entering an occlusion for the first time record their
/// current size as the pre-occlusion size.
pub fn detect_occlusion(
    tracks: &mut [Track],
    cfg: &TrackerConfig,
    dt: f64,
    bounds: Sensor,
) -> Result<Vec<(u64, u64)>> {
    let active: Vec<usize> = (0..tracks.len())
        .filter(|&i| !tracks[i].is_free())
        .collect();
    let mut pairs = Vec::new();
    for (n, &i) in active.iter().enumerate() {
        for &j in &active[n + 1..] {
            let mut hit = false;
            for step in 1..=cfg.occlusion_horizon.max(1) {
                let h = dt * f64::from(step);
                let pi = predict(&tracks[i], h, cfg, bounds)?;
                let pj = predict(&tracks[j], h, cfg, bounds)?;
                if overlap_area(&pi, &pj) > 0 {
                    hit = true;
                    break;
                }
            }
            if hit {
                for k in [i, j] {
                    if tracks[k].pre_occlusion_size.is_none() {
                        let px = tracks[k].pixels();
                        tracks[k].pre_occlusion_size = Some((px.w, px.h));
                    }
                }
                pairs.push((tracks[i].id, tracks[j].id));
            }
        }
    }
    Ok(pairs)
}
