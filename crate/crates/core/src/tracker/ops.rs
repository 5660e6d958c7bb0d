//! Per-frame tracker arithmetic: overlap, prediction, weighted update,
//! velocity estimation, proposal grouping, and assignment.

use std::collections::BTreeSet;

use super::track::{Track, TrackState};
use super::TrackerConfig;
use crate::error::{Error, Result};
use crate::event_io::Sensor;
use crate::region::{Region, RegionF};

/// Overlapping area of two boxes in pixels².
pub fn overlap_area(a: &Region, b: &Region) -> i64 {
    let dx = (a.right().min(b.right()) - a.x.max(b.x)).max(0);
    let dy = (a.bottom().min(b.bottom()) - a.y.max(b.y)).max(0);
    i64::from(dx) * i64::from(dy)
}

/// Overlap normalized by the smaller of the two areas.
pub fn assignment_ratio(proposal: &Region, predicted: &Region) -> f64 {
    let denom = proposal.area().min(predicted.area());
    if denom <= 0 {
        return 0.0;
    }
    overlap_area(proposal, predicted) as f64 / denom as f64
}

fn check_active(track: &Track) -> Result<()> {
    if track.is_free() {
        return Err(Error::State(format!("slot {} is free", track.slot)));
    }
    Ok(())
}

/// Position advanced by velocity, not clamped to the frame.
pub(crate) fn advance(track: &Track, dt: f64, cfg: &TrackerConfig) -> RegionF {
    let ar = cfg.arith;
    RegionF {
        x: ar.disp(track.region.x + ar.disp(track.vx * dt)),
        y: ar.disp(track.region.y + ar.disp(track.vy * dt)),
        ..track.region
    }
}

/// Velocity-extrapolated region after `dt` seconds, rounded to pixels and
/// kept inside the frame.
pub fn predict(track: &Track, dt: f64, cfg: &TrackerConfig, bounds: Sensor) -> Result<Region> {
    check_active(track)?;
    let ar = cfg.arith;
    let r = RegionF {
        x: ar.pos(track.region.x + ar.disp(track.vx * dt)),
        y: ar.pos(track.region.y + ar.disp(track.vy * dt)),
        ..track.region
    };
    Ok(r.round().clamp_inside(bounds.width, bounds.height))
}

/// Blends one coordinate: `(1-a)*measured + a*(previous + v*dt)`.
fn blend(measured: i32, previous: f64, v: f64, dt: f64, cfg: &TrackerConfig) -> f64 {
    let ar = cfg.arith;
    let a = cfg.alpha;
    let pred = ar.pos(previous + ar.disp(v * dt));
    ar.pos(ar.pos((1.0 - a) * f64::from(measured)) + ar.pos(a * pred))
}

/// Weighted region update and lifecycle advance after a successful match.
///
/// Velocity is left untouched; see [`update_velocity`].
pub fn update_track(
    track: &Track,
    proposal: &Region,
    cfg: &TrackerConfig,
    dt: f64,
    bounds: Sensor,
) -> Result<Track> {
    check_active(track)?;
    let prev = track.region;
    let region = RegionF {
        x: blend(proposal.x, prev.x, track.vx, dt, cfg),
        y: blend(proposal.y, prev.y, track.vy, dt, cfg),
        w: blend(proposal.w, prev.w, 0.0, dt, cfg),
        h: blend(proposal.h, prev.h, 0.0, dt, cfg),
    }
    .clamp_inside(bounds.width, bounds.height);
    Ok(Track {
        region,
        state: matched_state(track),
        miss_count: 0,
        ..track.clone()
    })
}

/// Next state after a match: a second consecutive match locks the track.
pub(crate) fn matched_state(track: &Track) -> TrackState {
    match track.state {
        TrackState::Tracking if track.miss_count == 0 => TrackState::Locked,
        TrackState::Tracking => TrackState::Tracking,
        TrackState::Locked => TrackState::Locked,
        TrackState::Free => TrackState::Tracking,
    }
}

/// Velocity from the displacement of the far edge (`x + w`, `y + h`),
/// blended with the previous velocity.
pub fn update_velocity(
    track: &Track,
    proposal: &Region,
    cfg: &TrackerConfig,
    dt: f64,
) -> Result<(f64, f64)> {
    if dt <= 0.0 || !dt.is_finite() {
        return Err(Error::DegenerateInterval(format!("dt = {dt}")));
    }
    let ar = cfg.arith;
    let a = cfg.alpha;
    let axis = |new_pos: i32, prev_pos: f64, new_len: i32, prev_len: f64, v_prev: f64| {
        let shift = ar
            .disp(ar.disp(f64::from(new_pos) - prev_pos) + ar.disp(f64::from(new_len) - prev_len));
        // scaled before quantizing so the raw quotient never saturates
        ar.vel(ar.vel((1.0 - a) * shift / dt) + ar.vel(a * v_prev))
    };
    let p = track.region;
    Ok((
        axis(proposal.x, p.x, proposal.w, p.w, track.vx),
        axis(proposal.y, p.y, proposal.h, p.h, track.vy),
    ))
}

/// Groups several proposals claimed by one track into their common bounding box.
pub fn merge_proposals(proposals: &[Region], track_region: &Region) -> Region {
    proposals.iter().fold(*track_region, |acc, p| acc.union(p))
}

/// Result of matching one frame's proposals against the active tracks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignment {
    /// `(proposal index, track id)`; a proposal may appear with several tracks.
    pub pairs: Vec<(usize, u64)>,
    pub unmatched_proposals: Vec<usize>,
    pub unmatched_tracks: Vec<u64>,
    /// Unmatched proposals routed to free slots: `(proposal index, slot)`.
    pub spawns: Vec<(usize, usize)>,
    /// Unmatched proposals that found no free slot.
    pub dropped: Vec<usize>,
}

impl Assignment {
    pub fn proposals_of(&self, id: u64) -> impl Iterator<Item = usize> + '_ {
        self.pairs.iter().filter(move |p| p.1 == id).map(|p| p.0)
    }

    pub fn degree(&self, proposal: usize) -> usize {
        self.pairs.iter().filter(|p| p.0 == proposal).count()
    }
}

/// Matches proposals to tracks whose prediction overlaps them by more than
/// the configured ratio; unmatched proposals claim free slots left-to-right,
/// top-to-bottom, lowest slot first.
pub fn assign(
    proposals: &[Region],
    tracks: &[Track],
    cfg: &TrackerConfig,
    dt: f64,
    bounds: Sensor,
) -> Result<Assignment> {
    let mut out = Assignment::default();
    let mut predicted = Vec::new();
    for t in tracks.iter().filter(|t| !t.is_free()) {
        predicted.push((t.id, predict(t, dt, cfg, bounds)?));
    }
    let mut matched_tracks = BTreeSet::new();
    for (pi, p) in proposals.iter().enumerate() {
        let mut any = false;
        for (id, pred) in &predicted {
            if assignment_ratio(p, pred) > cfg.overlap_threshold {
                out.pairs.push((pi, *id));
                matched_tracks.insert(*id);
                any = true;
            }
        }
        if !any {
            out.unmatched_proposals.push(pi);
        }
    }
    out.unmatched_tracks = predicted
        .iter()
        .map(|(id, _)| *id)
        .filter(|id| !matched_tracks.contains(id))
        .collect();

    let mut order = out.unmatched_proposals.clone();
    order.sort_by_key(|&i| (proposals[i].x, proposals[i].y, i));
    let mut free_slots = tracks.iter().filter(|t| t.is_free()).map(|t| t.slot);
    for pi in order {
        match free_slots.next() {
            Some(slot) => out.spawns.push((pi, slot)),
            None => out.dropped.push(pi),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quant::{Arith, FixedPointConfig};
    use proptest::prelude::*;

    const S: Sensor = Sensor {
        width: 240,
        height: 180,
    };

    fn live(id: u64, r: Region, vx: f64, vy: f64, state: TrackState) -> Track {
        Track {
            vx,
            vy,
            state,
            ..Track::spawn(id as usize, id, r, 0, 0)
        }
    }

    fn pixel_overlap(a: &Region, b: &Region) -> i64 {
        let mut n = 0;
        for y in a.y..a.bottom() {
            for x in a.x..a.right() {
                n += b.contains_pixel(x, y) as i64;
            }
        }
        n
    }

    #[test]
    fn overlap_examples() {
        let a = Region::new(0, 0, 10, 10);
        assert_eq!(overlap_area(&a, &a), 100);
        assert_eq!(overlap_area(&a, &Region::new(20, 20, 5, 5)), 0);
        let b = Region::new(5, 5, 10, 10);
        assert_eq!(overlap_area(&a, &b), pixel_overlap(&a, &b));
        assert_eq!(overlap_area(&a, &b), 25);
    }

    #[test]
    fn ratio_examples() {
        let a = Region::new(0, 0, 10, 10);
        assert_eq!(assignment_ratio(&a, &a), 1.0);
        assert_eq!(assignment_ratio(&a, &Region::new(50, 50, 3, 3)), 0.0);
        let b = Region::new(5, 0, 10, 10);
        assert_eq!(
            assignment_ratio(&a, &b),
            pixel_overlap(&a, &b) as f64 / 100.0
        );
        assert_eq!(assignment_ratio(&a, &b), 0.5);
        assert_eq!(assignment_ratio(&a, &Region::new(0, 0, 0, 4)), 0.0);
    }

    #[test]
    fn predict_examples() {
        let cfg = TrackerConfig::default();
        let t = live(1, Region::new(10, 20, 8, 8), 0.0, 0.0, TrackState::Locked);
        assert_eq!(predict(&t, 0.1, &cfg, S).unwrap(), t.pixels());
        let t = live(1, Region::new(10, 20, 8, 8), 30.0, 0.0, TrackState::Locked);
        assert_eq!(predict(&t, 0.1, &cfg, S).unwrap().x, 13);
        let t = live(
            1,
            Region::new(228, 20, 10, 8),
            100.0,
            0.0,
            TrackState::Locked,
        );
        let p = predict(&t, 0.1, &cfg, S).unwrap();
        assert_eq!((p.x, p.w), (230, 10));
        assert!(matches!(
            predict(&Track::free(0), 0.1, &cfg, S),
            Err(Error::State(_))
        ));
    }

    #[test]
    fn update_degenerate_alphas() {
        let t = live(
            1,
            Region::new(40, 50, 20, 10),
            25.0,
            -12.0,
            TrackState::Tracking,
        );
        let proposal = Region::new(47, 44, 23, 12);
        let cfg0 = TrackerConfig {
            alpha: 0.0,
            ..Default::default()
        };
        let u = update_track(&t, &proposal, &cfg0, 0.033, S).unwrap();
        assert_eq!(u.region, proposal.to_f64());
        assert_eq!(u.state, TrackState::Locked);

        let cfg1 = TrackerConfig {
            alpha: 1.0,
            ..Default::default()
        };
        let u = update_track(&t, &proposal, &cfg1, 0.033, S).unwrap();
        let want = RegionF {
            x: 40.0 + 25.0 * 0.033,
            y: 50.0 - 12.0 * 0.033,
            w: 20.0,
            h: 10.0,
        };
        assert_eq!(u.region, want);
        assert_eq!(u.pixels(), predict(&t, 0.033, &cfg1, S).unwrap());
    }

    #[test]
    fn update_half_alpha_rounds_half_up() {
        let t = live(1, Region::new(10, 10, 5, 5), 10.0, 0.0, TrackState::Locked);
        let u = update_track(
            &t,
            &Region::new(12, 10, 5, 5),
            &TrackerConfig::default(),
            0.1,
            S,
        )
        .unwrap();
        // 0.5*12 + 0.5*(10 + 1) = 11.5
        assert_eq!(u.region.x, 11.5);
        assert_eq!(u.pixels().x, 12);
        assert_eq!(u.miss_count, 0);
    }

    #[test]
    fn velocity_examples() {
        let cfg = TrackerConfig::default();
        let r = Region::new(10, 10, 5, 5);
        let t = live(1, r, 0.0, 0.0, TrackState::Locked);
        assert_eq!(update_velocity(&t, &r, &cfg, 0.1).unwrap(), (0.0, 0.0));

        let t = live(1, r, 40.0, -8.0, TrackState::Locked);
        assert_eq!(update_velocity(&t, &r, &cfg, 0.1).unwrap(), (20.0, -4.0));

        let t = live(1, r, 10.0, 0.0, TrackState::Locked);
        let (vx, _) = update_velocity(&t, &Region::new(12, 10, 5, 5), &cfg, 0.1).unwrap();
        assert!((vx - 15.0).abs() < 1e-12, "{vx}");

        assert!(matches!(
            update_velocity(&t, &r, &cfg, 0.0),
            Err(Error::DegenerateInterval(_))
        ));
    }

    #[test]
    fn fixed_velocity_storage() {
        let fx = FixedPointConfig {
            enabled: true,
            ..Default::default()
        };
        let cfg = TrackerConfig {
            arith: Arith::Fixed(fx.datapath().unwrap()),
            ..Default::default()
        };
        let r = Region::new(10, 10, 5, 5);
        // identical proposal: v = a * v_prev = 0.5 * 30.74 -> 15.37 -> Q8.4 15.375
        let t = live(1, r, 30.74, 0.0, TrackState::Locked);
        let (vx, _) = update_velocity(&t, &r, &cfg, 0.033).unwrap();
        assert_eq!(vx, 15.375);
    }

    #[test]
    fn fixed_velocity_term_does_not_saturate_early() {
        // shift 5 px over 33 ms is 151.5 px/s, past Q8 range; halved it fits
        let fx = FixedPointConfig {
            enabled: true,
            vel_frac_bits: 24,
            ..Default::default()
        };
        let fixed = TrackerConfig {
            arith: Arith::Fixed(fx.datapath().unwrap()),
            ..Default::default()
        };
        let t = live(1, Region::new(10, 10, 5, 5), 100.0, 0.0, TrackState::Locked);
        let p = Region::new(15, 10, 5, 5);
        let (f, _) = update_velocity(&t, &p, &TrackerConfig::default(), 0.033).unwrap();
        let (q, _) = update_velocity(&t, &p, &fixed, 0.033).unwrap();
        assert!((f - (0.5 * 5.0 / 0.033 + 50.0)).abs() < 1e-9);
        assert!((f - q).abs() < 1e-6, "{f} vs {q}");
    }

    #[test]
    fn merge_examples() {
        let got = merge_proposals(
            &[Region::new(0, 0, 4, 4), Region::new(6, 0, 4, 4)],
            &Region::new(0, 0, 10, 4),
        );
        assert_eq!(got, Region::new(0, 0, 10, 4));
        let outer = Region::new(0, 0, 20, 20);
        assert_eq!(merge_proposals(&[Region::new(2, 2, 3, 3)], &outer), outer);
        assert_eq!(
            merge_proposals(&[Region::new(5, 5, 2, 2)], &Region::new(0, 0, 3, 3)),
            Region::new(0, 0, 7, 7)
        );
    }

    #[test]
    fn assign_examples() {
        let cfg = TrackerConfig::default();
        let mut pool: Vec<Track> = (0..8).map(Track::free).collect();
        pool[0] = live(5, Region::new(20, 20, 10, 10), 0.0, 0.0, TrackState::Locked);
        let a = assign(&[Region::new(20, 20, 10, 10)], &pool, &cfg, 0.033, S).unwrap();
        assert_eq!(a.pairs, vec![(0, 5)]);
        assert!(a.spawns.is_empty());

        let pool: Vec<Track> = (0..8).map(Track::free).collect();
        let a = assign(&[Region::new(20, 20, 10, 10)], &pool, &cfg, 0.033, S).unwrap();
        assert_eq!(a.spawns, vec![(0, 0)]);

        let nine: Vec<Region> = (0..9)
            .map(|i| Region::new(5 + 25 * i, 10, 10, 10))
            .collect();
        let a = assign(&nine, &pool, &cfg, 0.033, S).unwrap();
        assert_eq!(a.spawns.len(), 8);
        assert_eq!(a.dropped, vec![8]);
        assert_eq!(a.spawns[0], (0, 0));
    }

    #[test]
    fn assign_threshold_is_strict() {
        let cfg = TrackerConfig::default();
        let mut pool: Vec<Track> = (0..8).map(Track::free).collect();
        pool[0] = live(1, Region::new(0, 0, 10, 10), 0.0, 0.0, TrackState::Locked);
        // overlap 20 / 100 = exactly 0.20: no match
        let a = assign(&[Region::new(8, 0, 10, 10)], &pool, &cfg, 0.033, S).unwrap();
        assert!(a.pairs.is_empty());
        let a = assign(&[Region::new(7, 0, 10, 10)], &pool, &cfg, 0.033, S).unwrap();
        assert_eq!(a.pairs, vec![(0, 1)]);
    }

    #[test]
    fn assign_keeps_multi_assignments() {
        let cfg = TrackerConfig::default();
        let mut pool: Vec<Track> = (0..8).map(Track::free).collect();
        pool[0] = live(1, Region::new(0, 0, 10, 10), 0.0, 0.0, TrackState::Locked);
        pool[1] = live(2, Region::new(8, 0, 10, 10), 0.0, 0.0, TrackState::Locked);
        let a = assign(&[Region::new(0, 0, 18, 10)], &pool, &cfg, 0.033, S).unwrap();
        assert_eq!(a.pairs, vec![(0, 1), (0, 2)]);
        assert_eq!(a.degree(0), 2);
    }

    proptest! {
        #[test]
        fn overlap_matches_pixel_oracle(
            ax in 0i32..64, ay in 0i32..64, aw in 0i32..32, ah in 0i32..32,
            bx in 0i32..64, by in 0i32..64, bw in 0i32..32, bh in 0i32..32,
        ) {
            let a = Region::new(ax, ay, aw, ah);
            let b = Region::new(bx, by, bw, bh);
            let o = overlap_area(&a, &b);
            prop_assert_eq!(o, pixel_overlap(&a, &b));
            prop_assert_eq!(o, overlap_area(&b, &a));
            prop_assert!(o <= a.area().min(b.area()));
            prop_assert_eq!(overlap_area(&a, &a), a.area());
        }
    }
}
