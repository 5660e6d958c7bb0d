//! Median filtering and projection-histogram region proposals.
//!
//! Proposals are formed by thresholding the column and row projections of the
//! filtered frame into runs, crossing every X-run with every Y-run, rejecting
//! candidates whose fill ratio or area is too small, and tightening each
//! survivor to the bounding box of the active pixels it contains.

use serde::{Deserialize, Serialize};

use crate::event_io::BinaryFrame;
use crate::image::BitImage;
use crate::region::Region;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionPropConfig {
    pub density_threshold: u32,
    pub min_run: u32,
    pub max_gap: u32,
    pub min_fill: f64,
    pub min_area: u32,
    pub median_filter: bool,
}

impl Default for RegionPropConfig {
    fn default() -> Self {
        RegionPropConfig {
            density_threshold: 1,
            min_run: 3,
            max_gap: 2,
            min_fill: 0.10,
            min_area: 9,
            median_filter: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Maximal above-threshold intervals of one projection, as `(start, length)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistogramRuns {
    pub axis: Axis,
    pub runs: Vec<(u32, u32)>,
}

fn majority_3x3(img: &BitImage) -> BitImage {
    let (w, h) = (img.width(), img.height());
    let mut out = BitImage::new(w, h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut n = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    n += img.get_padded(x + dx, y + dy) as u32;
                }
            }
            if n >= 5 {
                out.set(x as u32, y as u32, true);
            }
        }
    }
    out
}

/// 3x3 majority filter with zero padding at the borders.
pub fn median_filter_3x3(frame: &BinaryFrame) -> BinaryFrame {
    BinaryFrame {
        image: majority_3x3(&frame.image),
        ..frame.clone()
    }
}

/// Per-column and per-row active-pixel counts.
pub fn project_histograms(frame: &BinaryFrame) -> (Vec<u32>, Vec<u32>) {
    let mut hx = vec![0u32; frame.width() as usize];
    let mut hy = vec![0u32; frame.height() as usize];
    for (x, y) in frame.image.ones() {
        hx[x as usize] += 1;
        hy[y as usize] += 1;
    }
    (hx, hy)
}

/// Runs where `hist > density_threshold`, bridging sub-threshold gaps of at
/// most `max_gap` bins, dropping runs shorter than `min_run`.
pub fn extract_runs(
    hist: &[u32],
    density_threshold: u32,
    min_run: u32,
    max_gap: u32,
) -> Vec<(u32, u32)> {
    let mut raw: Vec<(u32, u32)> = Vec::new();
    let mut start: Option<usize> = None;
    for (i, &v) in hist.iter().enumerate() {
        match (v > density_threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                raw.push((s as u32, (i - s) as u32));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        raw.push((s as u32, (hist.len() - s) as u32));
    }

    let mut bridged: Vec<(u32, u32)> = Vec::with_capacity(raw.len());
    for (s, len) in raw {
        match bridged.last_mut() {
            Some((ps, plen)) if s - (*ps + *plen) <= max_gap => *plen = s + len - *ps,
            _ => bridged.push((s, len)),
        }
    }
    bridged.retain(|&(_, len)| len >= min_run);
    bridged
}

pub fn histogram_runs(hist: &[u32], axis: Axis, cfg: &RegionPropConfig) -> HistogramRuns {
    HistogramRuns {
        axis,
        runs: extract_runs(hist, cfg.density_threshold, cfg.min_run, cfg.max_gap),
    }
}

/// Proposals for a frame that has already been median filtered.
pub fn propose_regions(frame: &BinaryFrame, cfg: &RegionPropConfig) -> Vec<Region> {
    let (hx, hy) = project_histograms(frame);
    let xr = histogram_runs(&hx, Axis::X, cfg);
    let yr = histogram_runs(&hy, Axis::Y, cfg);
    let mut out = Vec::new();
    for &(ys, yl) in &yr.runs {
        for &(xs, xl) in &xr.runs {
            let cand = Region::new(xs as i32, ys as i32, xl as i32, yl as i32);
            let area = cand.area();
            if area < i64::from(cfg.min_area) {
                continue;
            }
            let active = frame.image.count_in(&cand);
            if active == 0 || (active as f64) < cfg.min_fill * area as f64 {
                continue;
            }
            if let Some(tight) = frame.image.content_bbox(&cand) {
                if !out.contains(&tight) {
                    out.push(tight);
                }
            }
        }
    }
    out
}

/// Optional median filter followed by proposal extraction.
pub fn process_frame(frame: &BinaryFrame, cfg: &RegionPropConfig) -> (BinaryFrame, Vec<Region>) {
    let filtered = if cfg.median_filter {
        median_filter_3x3(frame)
    } else {
        frame.clone()
    };
    let proposals = propose_regions(&filtered, cfg);
    (filtered, proposals)
}
