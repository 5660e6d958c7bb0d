use std::collections::BTreeMap;

use etrk_core::config::PipelineConfig;
use etrk_core::event_io::Sensor;
use etrk_core::pipeline::{run_simple, TrackerKind};
use etrk_core::synth::{generate, preset, PRESETS};
use etrk_core::tracker::{TrackRecord, TrackState, Tracker, TrackerConfig};
use etrk_core::Region;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const P: u64 = 33_000;

fn records(name: &str, seed: u64, noise: f64, cfg: &PipelineConfig) -> Vec<TrackRecord> {
    let mut spec = preset(name, seed).unwrap();
    spec.noise_rate = noise;
    let (events, _) = generate(&spec).unwrap();
    run_simple(&events, cfg, TrackerKind::Overlap, spec.duration_us)
        .unwrap()
        .records
}

fn fixed(pos: (u32, u32), vel: (u32, u32)) -> PipelineConfig {
    let mut c = PipelineConfig::default();
    c.fx.enabled = true;
    (c.fx.pos_bits, c.fx.pos_frac_bits) = pos;
    (c.fx.vel_int_bits, c.fx.vel_frac_bits) = vel;
    c
}

fn max_position_gap(a: &[TrackRecord], b: &[TrackRecord]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(r, s)| {
            assert_eq!((r.t_us, r.id), (s.t_us, s.id));
            [r.x - s.x, r.y - s.y, r.w - s.w, r.h - s.h]
                .into_iter()
                .fold(0.0f64, |m, d| m.max(d.abs()))
        })
        .fold(0.0, f64::max)
}

#[test]
fn default_fixed_point_keeps_ids_and_pixel_positions_on_clean_scenes() {
    for name in [
        "single_const_velocity",
        "crossing_opposite",
        "overtake_same_direction",
    ] {
        let float = records(name, 4, 0.0, &PipelineConfig::default());
        let q = records(name, 4, 0.0, &fixed((9, 0), (8, 4)));
        assert_eq!(float.len(), q.len(), "{name}");
        for (r, s) in float.iter().zip(&q) {
            assert_eq!((r.t_us, r.id), (s.t_us, s.id), "{name}");
            let (a, b) = (r.region(), s.region());
            assert!(
                (a.x - b.x).abs() <= 1 && (a.y - b.y).abs() <= 1,
                "{name}: {a:?} vs {b:?}"
            );
        }
    }
}

#[test]
fn fine_fixed_point_converges_to_float() {
    for name in PRESETS {
        let float = records(name, 1, 0.0, &PipelineConfig::default());
        let q = records(name, 1, 0.0, &fixed((9, 23), (8, 24)));
        let gap = max_position_gap(&float, &q);
        assert!(gap < 1e-3, "{name}: {gap}");
    }
}

#[test]
fn whole_pipeline_is_deterministic() {
    for kind in [TrackerKind::Overlap, TrackerKind::Ebms] {
        let spec = preset("overtake_same_direction", 9).unwrap();
        let (events, _) = generate(&spec).unwrap();
        let cfg = PipelineConfig::default();
        let a = run_simple(&events, &cfg, kind, spec.duration_us).unwrap();
        let b = run_simple(&events, &cfg, kind, spec.duration_us).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.resources, b.resources);
    }
}

#[test]
fn ebms_ops_scale_with_events_and_overlap_ops_with_frames() {
    let cfg = PipelineConfig::default();
    let mut runs = Vec::new();
    for rate in [1000.0, 3000.0] {
        let mut spec = preset("crossing_opposite", 2).unwrap();
        spec.objects.iter_mut().for_each(|o| o.rate = rate);
        let (events, _) = generate(&spec).unwrap();
        let o = run_simple(&events, &cfg, TrackerKind::Overlap, spec.duration_us).unwrap();
        let e = run_simple(&events, &cfg, TrackerKind::Ebms, spec.duration_us).unwrap();
        runs.push((o.resources, e.resources));
    }
    let (o1, e1) = &runs[0];
    let (o2, e2) = &runs[1];
    assert!(e2.events > 2 * e1.events);
    let per_event = (e1.ops_per_event(), e2.ops_per_event());
    assert!(
        (per_event.0 - per_event.1).abs() / per_event.0 < 0.05,
        "{per_event:?}"
    );
    assert_eq!(o1.frames, o2.frames);
    let ratio = o2.ops.total() as f64 / o1.ops.total() as f64;
    assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
}

/// Proposal streams from a few drifting boxes that blink in and out, plus clutter.
fn scenario(seed: u64, frames: usize) -> Vec<Vec<Region>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=10);
    let mut objs: Vec<(f64, f64, i32, i32, f64, f64)> = (0..n)
        .map(|_| {
            (
                rng.gen_range(0.0..200.0),
                rng.gen_range(0.0..150.0),
                rng.gen_range(6..30),
                rng.gen_range(6..24),
                rng.gen_range(-6.0..6.0),
                rng.gen_range(-6.0..6.0),
            )
        })
        .collect();
    (0..frames)
        .map(|_| {
            let mut props = Vec::new();
            for o in &mut objs {
                o.0 += o.4;
                o.1 += o.5;
                if rng.gen_bool(0.8) {
                    let r = Region::new(o.0 as i32 + rng.gen_range(-1..=1), o.1 as i32, o.2, o.3);
                    if let Some(c) = r.clip(240, 180) {
                        props.push(c);
                    }
                }
            }
            if rng.gen_bool(0.3) {
                props.push(Region::new(
                    rng.gen_range(0..230),
                    rng.gen_range(0..170),
                    5,
                    5,
                ));
            }
            props
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn lifecycle_invariants_hold(seed in any::<u64>(), frames in 2usize..40, alpha in 0u8..=4) {
        let cfg = TrackerConfig { alpha: f64::from(alpha) / 4.0, ..Default::default() };
        let mut trk = Tracker::new(cfg.clone(), Sensor::default()).unwrap();
        let mut seen: BTreeMap<u64, u64> = BTreeMap::new();
        let mut prev_ids: Vec<Option<u64>> = vec![None; cfg.max_tracks];
        let mut max_id = 0;
        for (k, props) in scenario(seed, frames).iter().enumerate() {
            let t = (k as u64 + 1) * P;
            let out = trk.step(props, t).unwrap();
            prop_assert!(trk.active_count() <= cfg.max_tracks);
            for (s, prev) in trk.tracks().iter().zip(prev_ids.iter_mut()) {
                prop_assert!(s.miss_count < cfg.max_unlocks);
                let now = (!s.is_free()).then_some(s.id);
                if let Some(id) = now {
                    if *prev != Some(id) {
                        prop_assert!(id > max_id, "id {} reused", id);
                        max_id = id;
                    }
                }
                *prev = now;
            }
            for r in &out {
                prop_assert_eq!(r.state, TrackState::Locked);
                // locking needs a match in the previous frame too
                prop_assert!(seen.get(&r.id).is_some_and(|&first| first < t));
                let b = r.region();
                prop_assert!(b.x >= 0 && b.y >= 0 && b.right() <= 240 && b.bottom() <= 180, "{:?}", b);
            }
            for s in trk.tracks().iter().filter(|s| !s.is_free()) {
                seen.entry(s.id).or_insert(t);
            }
        }
        for &(a, b) in trk.transitions() {
            prop_assert!(a.can_become(b), "{:?} -> {:?}", a, b);
        }
    }
}
