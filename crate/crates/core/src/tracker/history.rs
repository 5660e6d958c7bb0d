use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::RegionF;

/// Timestamped regions per track ID, strictly increasing in time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackHistory {
    tracks: BTreeMap<u64, Vec<(u64, RegionF)>>,
}

impl TrackHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: u64, t: u64, region: RegionF) -> Result<()> {
        let samples = self.tracks.entry(id).or_default();
        if let Some(&(last, _)) = samples.last() {
            if t <= last {
                return Err(Error::Ordering(format!(
                    "track {id}: sample at {t} not after {last}"
                )));
            }
        }
        samples.push((t, region));
        Ok(())
    }

    pub fn samples(&self, id: u64) -> Option<&[(u64, RegionF)]> {
        self.tracks.get(&id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.tracks.keys().copied()
    }

    /// `(first, last)` sample times.
    pub fn lifetime(&self, id: u64) -> Option<(u64, u64)> {
        let s = self.tracks.get(&id)?;
        Some((s.first()?.0, s.last()?.0))
    }

    /// Linear interpolation of the track box at time `t`.
    ///
    /// Accepts any `t` within the sampled lifetime, endpoints included.
    pub fn interpolate(&self, id: u64, t: u64) -> Result<RegionF> {
        let samples = self
            .tracks
            .get(&id)
            .ok_or_else(|| Error::Lookup(format!("no track with id {id}")))?;
        let (first, last) = match (samples.first(), samples.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(Error::Lookup(format!("track {id} has no samples"))),
        };
        if t < first || t > last {
            return Err(Error::Range(format!(
                "t={t} outside lifetime [{first}, {last}] of track {id}"
            )));
        }
        let j = samples.partition_point(|s| s.0 <= t);
        if j == samples.len() {
            return Ok(samples[j - 1].1);
        }
        let (t0, r0) = samples[j - 1];
        let (t1, r1) = samples[j];
        let lambda = (t - t0) as f64 / (t1 - t0) as f64;
        Ok(r0.lerp(&r1, lambda))
    }
}
