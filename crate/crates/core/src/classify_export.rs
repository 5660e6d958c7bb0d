//! Classifier front-end: track crops, fixed-size resize, spike encoding,
//! slot scheduling and per-track majority voting.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::event_io::BinaryFrame;
use crate::image::BitImage;
use crate::region::Region;

pub const DEFAULT_SIDE: u32 = 42;
pub const CLASSIFIER_SLOTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrackCrop {
    pub id: u64,
    pub frame: u64,
    pub bits: BitImage,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpikeList {
    pub id: u64,
    pub frame: u64,
    /// `(row, col)` in row-major order.
    pub spikes: Vec<(u32, u32)>,
}

/// Exact copy of `region` out of the frame.
pub fn crop_track(frame: &BinaryFrame, region: &Region) -> Result<BitImage> {
    let inside = region.x >= 0
        && region.y >= 0
        && region.w > 0
        && region.h > 0
        && region.right() as i64 <= i64::from(frame.width())
        && region.bottom() as i64 <= i64::from(frame.height());
    if !inside {
        return Err(Error::Bounds(format!(
            "crop {region:?} outside {}x{} frame",
            frame.width(),
            frame.height()
        )));
    }
    let mut out = BitImage::new(region.w as u32, region.h as u32);
    for y in 0..region.h as u32 {
        for x in 0..region.w as u32 {
            if frame.image.get(region.x as u32 + x, region.y as u32 + y) {
                out.set(x, y, true);
            }
        }
    }
    Ok(out)
}

/// Nearest-neighbour scaling to `side x side`.
pub fn resize_to_fixed(crop: &BitImage, side: u32) -> BitImage {
    let (w, h) = (crop.width() as u64, crop.height() as u64);
    let s = u64::from(side);
    let mut out = BitImage::new(side, side);
    for r in 0..s {
        for c in 0..s {
            if crop.get((c * w / s) as u32, (r * h / s) as u32) {
                out.set(c as u32, r as u32, true);
            }
        }
    }
    out
}

pub fn encode_spikes(crop: &TrackCrop) -> SpikeList {
    SpikeList {
        id: crop.id,
        frame: crop.frame,
        spikes: crop.bits.ones().map(|(x, y)| (y, x)).collect(),
    }
}

/// Spike count above which sending the raw binary image is cheaper than
/// addressing each spike.
pub fn break_even_spikes(width: u32, height: u32, bits_per_spike: u32) -> Result<u64> {
    if width == 0 || height == 0 || bits_per_spike == 0 {
        return Err(Error::Contract("break-even inputs must be positive".into()));
    }
    Ok((u64::from(width) * u64::from(height)).div_ceil(u64::from(bits_per_spike)))
}

/// Track id to classifier slot.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotSchedule {
    pub slots: BTreeMap<u64, usize>,
    /// Locked tracks that found no free slot on the last update.
    pub waiting: Vec<u64>,
}

impl SlotSchedule {
    pub fn slot_of(&self, id: u64) -> Option<usize> {
        self.slots.get(&id).copied()
    }
}

pub fn schedule(locked: &[u64], prev: &SlotSchedule) -> SlotSchedule {
    let live: BTreeSet<u64> = locked.iter().copied().collect();
    let mut slots: BTreeMap<u64, usize> = prev
        .slots
        .iter()
        .filter(|(id, _)| live.contains(id))
        .map(|(&id, &s)| (id, s))
        .collect();
    let mut used = [false; CLASSIFIER_SLOTS];
    for &s in slots.values() {
        used[s] = true;
    }
    let mut waiting = Vec::new();
    for id in live {
        if slots.contains_key(&id) {
            continue;
        }
        match used.iter().position(|u| !u) {
            Some(s) => {
                used[s] = true;
                slots.insert(id, s);
            }
            None => waiting.push(id),
        }
    }
    SlotSchedule { slots, waiting }
}

/// Modal label; ties go to the label seen first.
pub fn majority_vote<L: Ord + Clone>(labels: &[L]) -> Result<L> {
    if labels.is_empty() {
        return Err(Error::Contract("majority vote over no labels".into()));
    }
    let mut tally: BTreeMap<&L, (usize, usize)> = BTreeMap::new();
    for (i, l) in labels.iter().enumerate() {
        tally.entry(l).or_insert((0, i)).0 += 1;
    }
    let (label, _) = tally
        .into_iter()
        .max_by(|a, b| a.1 .0.cmp(&b.1 .0).then(b.1 .1.cmp(&a.1 .1)))
        .expect("non-empty");
    Ok(label.clone())
}

pub trait Classifier {
    fn classify(&mut self, crop: &TrackCrop, spikes: &SpikeList) -> String;
}

/// Stand-in classifier: a fixed per-track lookup, else a seeded random pick.
#[derive(Debug, Clone)]
pub struct StubClassifier {
    pub labels: Vec<String>,
    pub lookup: BTreeMap<u64, String>,
    rng: ChaCha8Rng,
}

impl StubClassifier {
    pub fn new(labels: Vec<String>, seed: u64) -> Self {
        StubClassifier {
            labels,
            lookup: BTreeMap::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Classifier for StubClassifier {
    fn classify(&mut self, crop: &TrackCrop, _spikes: &SpikeList) -> String {
        if let Some(l) = self.lookup.get(&crop.id) {
            return l.clone();
        }
        if self.labels.is_empty() {
            return "unknown".into();
        }
        let i = self.rng.gen_range(0..self.labels.len());
        self.labels[i].clone()
    }
}

pub fn crop_file_name(id: u64, frame: u64) -> String {
    format!("track{id}_frame{frame}.pbm")
}

/// Writes `crops` as PBM files plus `manifest.csv` into `dir`.
pub fn export_crops(dir: &Path, crops: &[(TrackCrop, u64)]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = dir.join("manifest.csv");
    let mut m = Vec::new();
    writeln!(m, "id,frame,t_us,file").expect("vec write");
    for (crop, t) in crops {
        let name = crop_file_name(crop.id, crop.frame);
        let path = dir.join(&name);
        let mut buf = Vec::new();
        crop.bits.write_pbm(&mut buf).expect("vec write");
        std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        writeln!(m, "{},{},{},{}", crop.id, crop.frame, t, name).expect("vec write");
    }
    std::fs::write(&manifest, m).map_err(|e| Error::io(&manifest, e))
}

pub fn write_spikes_csv<W: Write>(lists: &[SpikeList], mut out: W) -> std::io::Result<()> {
    writeln!(out, "id,frame,row,col")?;
    for l in lists {
        for (r, c) in &l.spikes {
            writeln!(out, "{},{},{},{}", l.id, l.frame, r, c)?;
        }
    }
    Ok(())
}
