//! Seeded synthetic event scenes with exact ground truth.
//!
//! Objects are rectangles moving at constant velocity. A static event camera
//! only responds to edges, so events are emitted on a band of `edge_px`
//! pixels along each object's outline, never from its interior. Background
//! noise is spread uniformly over the sensor.

mod presets;

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

pub use presets::{preset, PRESETS};

use crate::error::{Error, Result};
use crate::event_io::{Event, Polarity, Sensor};
use crate::region::{round_half_up, Region};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneObject {
    pub id: u64,
    pub w: u32,
    pub h: u32,
    /// Top-left position at `t_enter_us`.
    pub x0: f64,
    pub y0: f64,
    /// Pixels per second.
    pub vx: f64,
    pub vy: f64,
    /// Events per second per boundary pixel.
    pub rate: f64,
    #[serde(default)]
    pub t_enter_us: u64,
    /// Defaults to the scene duration.
    #[serde(default)]
    pub t_exit_us: Option<u64>,
    #[serde(default = "default_edge")]
    pub edge_px: u32,
}

fn default_edge() -> u32 {
    2
}

fn default_tick() -> u64 {
    500
}

fn default_period() -> u64 {
    33_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    #[serde(default)]
    pub sensor: Sensor,
    pub duration_us: u64,
    /// Ground truth is sampled at every multiple of this period.
    #[serde(default = "default_period")]
    pub frame_period_us: u64,
    /// Emission time step.
    #[serde(default = "default_tick")]
    pub tick_us: u64,
    /// Background events per second per pixel.
    #[serde(default)]
    pub noise_rate: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub objects: Vec<SceneObject>,
}

impl SceneObject {
    pub fn t_exit(&self, duration: u64) -> u64 {
        self.t_exit_us.unwrap_or(duration)
    }

    pub fn active_at(&self, t: u64, duration: u64) -> bool {
        t >= self.t_enter_us && t < self.t_exit(duration)
    }

    /// Analytic box at time `t`, rounded to pixels, not clipped.
    pub fn region_at(&self, t: u64) -> Region {
        let dt = (t as f64 - self.t_enter_us as f64) * 1e-6;
        Region::new(
            round_half_up(self.x0 + self.vx * dt),
            round_half_up(self.y0 + self.vy * dt),
            self.w as i32,
            self.h as i32,
        )
    }
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SceneSpec =
            toml::from_str(text).map_err(|e| Error::Validation(format!("scene spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scene spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.sensor.width == 0 || self.sensor.height == 0 {
            return bad("sensor size must be positive".into());
        }
        if self.duration_us == 0 || self.tick_us == 0 || self.frame_period_us == 0 {
            return bad("duration, tick and frame period must be positive".into());
        }
        if !(self.noise_rate.is_finite() && self.noise_rate >= 0.0) {
            return bad(format!("noise rate {} invalid", self.noise_rate));
        }
        let mut seen = std::collections::BTreeSet::new();
        for o in &self.objects {
            if !seen.insert(o.id) {
                return bad(format!("duplicate object id {}", o.id));
            }
            if o.w == 0 || o.h == 0 || o.edge_px == 0 {
                return bad(format!("object {}: size and edge must be positive", o.id));
            }
            if !(o.rate.is_finite() && o.rate >= 0.0) {
                return bad(format!("object {}: rate {} invalid", o.id, o.rate));
            }
            if ![o.x0, o.y0, o.vx, o.vy].iter().all(|v| v.is_finite()) {
                return bad(format!("object {}: non-finite kinematics", o.id));
            }
            let exit = o.t_exit(self.duration_us);
            if o.t_enter_us >= exit || exit > self.duration_us {
                return bad(format!(
                    "object {}: empty or out-of-range active interval",
                    o.id
                ));
            }
            if o.region_at(o.t_enter_us)
                .clip(self.sensor.width, self.sensor.height)
                .is_none()
            {
                return bad(format!("object {}: not visible when it enters", o.id));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthTrack {
    pub id: u64,
    pub samples: Vec<(u64, Region)>,
}

/// Pixels of the outline band of `r`, clipped to the sensor, row-major.
fn boundary_pixels(r: &Region, edge: i32, sensor: Sensor) -> Vec<(u16, u16)> {
    let Some(c) = r.clip(sensor.width, sensor.height) else {
        return Vec::new();
    };
    let mut px = Vec::new();
    for y in c.y..c.bottom() {
        for x in c.x..c.right() {
            let inner = x - r.x >= edge
                && r.right() - 1 - x >= edge
                && y - r.y >= edge
                && r.bottom() - 1 - y >= edge;
            if !inner {
                px.push((x as u16, y as u16));
            }
        }
    }
    px
}

fn poisson(lambda: f64) -> Option<Poisson<f64>> {
    (lambda > 0.0).then(|| Poisson::new(lambda).expect("positive finite rate"))
}

/// Events (sorted by time) and per-object ground truth for a scene.
pub fn generate(spec: &SceneSpec) -> Result<(Vec<Event>, Vec<GroundTruthTrack>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sensor = spec.sensor;
    let tick = spec.tick_us;
    let tick_s = tick as f64 * 1e-6;
    let per_pixel: Vec<Option<Poisson<f64>>> = spec
        .objects
        .iter()
        .map(|o| poisson(o.rate * tick_s))
        .collect();
    let noise = poisson(spec.noise_rate * f64::from(sensor.width * sensor.height) * tick_s);

    let mut events = Vec::new();
    let n_ticks = spec.duration_us.div_ceil(tick);
    for k in 0..n_ticks {
        let t0 = k * tick;
        let span = tick.min(spec.duration_us - t0);
        let mid = t0 + span / 2;
        for (o, dist) in spec.objects.iter().zip(&per_pixel) {
            let Some(dist) = dist else { continue };
            if !o.active_at(mid, spec.duration_us) {
                continue;
            }
            for (x, y) in boundary_pixels(&o.region_at(mid), o.edge_px as i32, sensor) {
                let n = dist.sample(&mut rng) as u64;
                for _ in 0..n {
                    let t = t0 + rng.gen_range(0..span);
                    let p = if rng.gen::<bool>() {
                        Polarity::On
                    } else {
                        Polarity::Off
                    };
                    events.push(Event::new(t, x, y, p));
                }
            }
        }
        if let Some(dist) = &noise {
            let n = dist.sample(&mut rng) as u64;
            for _ in 0..n {
                let t = t0 + rng.gen_range(0..span);
                let x = rng.gen_range(0..sensor.width) as u16;
                let y = rng.gen_range(0..sensor.height) as u16;
                let p = if rng.gen::<bool>() {
                    Polarity::On
                } else {
                    Polarity::Off
                };
                events.push(Event::new(t, x, y, p));
            }
        }
    }
    events.sort_by_key(|e| e.t);

    Ok((events, ground_truth(spec)))
}

/// Analytic boxes at every frame boundary, clipped to the sensor.
pub fn ground_truth(spec: &SceneSpec) -> Vec<GroundTruthTrack> {
    spec.objects
        .iter()
        .map(|o| {
            let samples = (0..=spec.duration_us / spec.frame_period_us)
                .map(|j| j * spec.frame_period_us)
                .filter(|&t| o.active_at(t, spec.duration_us))
                .filter_map(|t| {
                    o.region_at(t)
                        .clip(spec.sensor.width, spec.sensor.height)
                        .map(|r| (t, r))
                })
                .collect();
            GroundTruthTrack { id: o.id, samples }
        })
        .filter(|g| !g.samples.is_empty())
        .collect()
}

pub fn write_ground_truth_csv<W: Write>(
    gts: &[GroundTruthTrack],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "id,t_us,x,y,w,h")?;
    for g in gts {
        for (t, r) in &g.samples {
            writeln!(out, "{},{},{},{},{},{}", g.id, t, r.x, r.y, r.w, r.h)?;
        }
    }
    Ok(())
}

/// Reads `id,t_us,x,y,w,h` rows; a leading header line is skipped.
pub fn read_ground_truth_csv<R: BufRead>(input: R) -> Result<Vec<GroundTruthTrack>> {
    let mut by_id: std::collections::BTreeMap<u64, Vec<(u64, Region)>> = Default::default();
    let mut offset = 0;
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<ground truth>", e))?;
        let line_offset = offset;
        offset += line.len() + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || (i == 0 && trimmed.starts_with("id")) {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            line: i + 1,
            offset: line_offset,
            msg,
        };
        let f: Vec<&str> = trimmed.split(',').collect();
        if f.len() != 6 {
            return Err(bad(format!("expected 6 fields, found {}", f.len())));
        }
        let id: u64 = f[0].trim().parse().map_err(|e| bad(format!("id: {e}")))?;
        let t: u64 = f[1].trim().parse().map_err(|e| bad(format!("t_us: {e}")))?;
        let mut v = [0i32; 4];
        for (k, s) in f[2..].iter().enumerate() {
            v[k] = s
                .trim()
                .parse()
                .map_err(|e| bad(format!("field {s:?}: {e}")))?;
        }
        by_id
            .entry(id)
            .or_default()
            .push((t, Region::new(v[0], v[1], v[2], v[3])));
    }
    Ok(by_id
        .into_iter()
        .map(|(id, mut samples)| {
            samples.sort_by_key(|s| s.0);
            GroundTruthTrack { id, samples }
        })
        .collect())
}
