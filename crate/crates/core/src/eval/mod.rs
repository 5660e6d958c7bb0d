//! IoU matching and precision/recall sweeps.
//!
//! Matching is per frame: at each timestamp reported boxes and ground-truth
//! boxes are paired greedily in descending IoU order.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use report::{
    render_overlay, resource_compare, write_kv, write_report, ResourceComparison, ResourceReport,
};

use crate::error::{Error, Result};
use crate::region::Region;
use crate::synth::GroundTruthTrack;
use crate::tracker::{overlap_area, TrackHistory, TrackRecord, TrackState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    /// Score interpolated track boxes at ground-truth timestamps.
    pub interpolate: bool,
    /// Threshold used for single-number summaries.
    pub iou_threshold: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            interpolate: false,
            iou_threshold: 0.4,
        }
    }
}

pub fn iou(a: &Region, b: &Region) -> f64 {
    let inter = overlap_area(a, b);
    let union = a.area() + b.area() - inter;
    if union <= 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
    }
}

/// Greedy matching; returns counts and `(track, gt)` index pairs.
pub fn match_frame(
    tracks: &[Region],
    gts: &[Region],
    iou_thr: f64,
) -> (Counts, Vec<(usize, usize)>) {
    let mut cands = Vec::new();
    for (i, t) in tracks.iter().enumerate() {
        for (j, g) in gts.iter().enumerate() {
            let v = iou(t, g);
            if v >= iou_thr && v > 0.0 {
                cands.push((v, i, j));
            }
        }
    }
    cands.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_t = vec![false; tracks.len()];
    let mut used_g = vec![false; gts.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in cands {
        if !used_t[i] && !used_g[j] {
            used_t[i] = true;
            used_g[j] = true;
            pairs.push((i, j));
        }
    }
    let tp = pairs.len() as u64;
    let counts = Counts {
        tp,
        fp: tracks.len() as u64 - tp,
        fn_: gts.len() as u64 - tp,
    };
    (counts, pairs)
}

/// Reported and ground-truth boxes at one timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub t_us: u64,
    pub tracks: Vec<Region>,
    pub gts: Vec<Region>,
}

/// Groups Locked records and ground truth by timestamp.
///
/// With `interpolate`, each track is linearly interpolated at the
/// ground-truth timestamps inside its lifetime and only those timestamps are
/// scored.
pub fn collect_frames(
    records: &[TrackRecord],
    gts: &[GroundTruthTrack],
    interpolate: bool,
) -> Result<Vec<EvalFrame>> {
    let mut gt_at: BTreeMap<u64, Vec<Region>> = BTreeMap::new();
    for g in gts {
        for (t, r) in &g.samples {
            gt_at.entry(*t).or_default().push(*r);
        }
    }
    let locked = records.iter().filter(|r| r.state == TrackState::Locked);
    let mut tr_at: BTreeMap<u64, Vec<Region>> = BTreeMap::new();
    if interpolate {
        let mut by_id: BTreeMap<u64, Vec<&TrackRecord>> = BTreeMap::new();
        for r in locked {
            by_id.entry(r.id).or_default().push(r);
        }
        let mut hist = TrackHistory::new();
        for (id, mut rs) in by_id {
            rs.sort_by_key(|r| r.t_us);
            for r in rs {
                hist.push(id, r.t_us, r.region_f())?;
            }
        }
        let ids: Vec<u64> = hist.ids().collect();
        for &t in gt_at.keys() {
            let boxes = tr_at.entry(t).or_default();
            for &id in &ids {
                let (a, b) = hist.lifetime(id).expect("tracks have samples");
                if a <= t && t <= b {
                    boxes.push(hist.interpolate(id, t)?.round());
                }
            }
        }
    } else {
        for r in locked {
            tr_at.entry(r.t_us).or_default().push(r.region());
        }
    }
    let times: BTreeSet<u64> = gt_at.keys().chain(tr_at.keys()).copied().collect();
    Ok(times
        .into_iter()
        .map(|t| EvalFrame {
            t_us: t,
            tracks: tr_at.remove(&t).unwrap_or_default(),
            gts: gt_at.remove(&t).unwrap_or_default(),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub iou_thr: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: Counts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    pub rows: Vec<CurveRow>,
}

impl EvalCurve {
    pub fn at(&self, thr: f64) -> Option<&CurveRow> {
        self.rows.iter().find(|r| (r.iou_thr - thr).abs() < 1e-9)
    }
}

/// Precision with the empty-output convention: nothing reported gives 1.0.
pub fn precision(c: Counts) -> f64 {
    if c.tp + c.fp == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fp) as f64
    }
}

/// Recall; no ground truth at all gives 1.0.
pub fn recall(c: Counts) -> f64 {
    if c.tp + c.fn_ == 0 {
        1.0
    } else {
        c.tp as f64 / (c.tp + c.fn_) as f64
    }
}

pub fn pr_sweep(frames: &[EvalFrame], thresholds: &[f64]) -> EvalCurve {
    let rows = thresholds
        .iter()
        .map(|&thr| {
            let mut counts = Counts::default();
            for f in frames {
                counts += match_frame(&f.tracks, &f.gts, thr).0;
            }
            CurveRow {
                iou_thr: thr,
                precision: precision(counts),
                recall: recall(counts),
                counts,
            }
        })
        .collect();
    EvalCurve { rows }
}

/// Parses `start:stop:step` (inclusive) or a comma-separated list.
pub fn parse_thresholds(spec: &str) -> Result<Vec<f64>> {
    let bad = |m: String| Error::Validation(format!("thresholds {spec:?}: {m}"));
    let num = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|e| bad(format!("{s:?}: {e}")))
    };
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if step.is_nan() || step <= 0.0 || b < a {
                return Err(bad("need start <= stop and a positive step".into()));
            }
            let n = ((b - a) / step + 1e-9).floor() as u64 + 1;
            (0..n)
                .map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9)
                .collect::<Vec<_>>()
        }
        [list] => list.split(',').map(num).collect::<Result<Vec<_>>>()?,
        _ => return Err(bad("expected start:stop:step or a comma list".into())),
    };
    if out.is_empty() || out.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) {
        return Err(bad("every threshold must lie in (0, 1]".into()));
    }
    Ok(out)
}
