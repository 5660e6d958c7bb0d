//! Event-by-event mean-shift tracker, used as the baseline.
//!
//! Each event either pulls the nearest cluster within `radius` toward itself
//! or seeds a new cluster. Support is counted over a sliding horizon split
//! into ten buckets, so the per-cluster state stays constant-size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event_io::{Event, Sensor};
use crate::instrument::OpCounter;
use crate::region::{round_half_up, Region};
use crate::tracker::{TrackRecord, TrackState};

const BUCKETS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EbmsConfig {
    pub radius: f64,
    pub eta: f64,
    pub support_threshold: u32,
    pub timeout_us: u64,
    pub max_clusters: usize,
    /// Window over which supporting events are counted.
    pub horizon_us: u64,
}

impl Default for EbmsConfig {
    fn default() -> Self {
        EbmsConfig {
            radius: 15.0,
            eta: 0.1,
            support_threshold: 20,
            timeout_us: 100_000,
            max_clusters: 16,
            horizon_us: 100_000,
        }
    }
}

impl EbmsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.radius.is_finite() && self.radius > 0.0) {
            return Err(Error::Config(format!(
                "ebms.radius {} must be positive",
                self.radius
            )));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config(format!(
                "ebms.eta {} must be in (0, 1)",
                self.eta
            )));
        }
        if self.max_clusters == 0 || self.horizon_us < BUCKETS as u64 {
            return Err(Error::Config(
                "ebms.max_clusters and ebms.horizon_us must be positive".into(),
            ));
        }
        Ok(())
    }

    fn bucket_us(&self) -> u64 {
        self.horizon_us / BUCKETS as u64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: u64,
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub event_count: u32,
    pub last_event_t: u64,
    pub visible: bool,
    buckets: [u32; BUCKETS],
    /// Absolute index of the newest bucket.
    head: u64,
}

impl Cluster {
    fn seed(id: u64, e: &Event, cfg: &EbmsConfig) -> Self {
        let mut c = Cluster {
            id,
            cx: f64::from(e.x),
            cy: f64::from(e.y),
            radius: cfg.radius,
            event_count: 0,
            last_event_t: e.t,
            visible: false,
            buckets: [0; BUCKETS],
            head: e.t / cfg.bucket_us(),
        };
        c.add_support(e.t, cfg);
        c
    }

    fn roll(&mut self, t: u64, cfg: &EbmsConfig) {
        let now = t / cfg.bucket_us();
        if now > self.head {
            let stale = (now - self.head).min(BUCKETS as u64);
            for k in 1..=stale {
                self.buckets[((self.head + k) % BUCKETS as u64) as usize] = 0;
            }
            self.head = now;
        }
        self.event_count = self.buckets.iter().sum();
        self.visible = self.event_count >= cfg.support_threshold;
    }

    fn add_support(&mut self, t: u64, cfg: &EbmsConfig) {
        self.roll(t, cfg);
        self.buckets[(self.head % BUCKETS as u64) as usize] += 1;
        self.event_count += 1;
        self.visible = self.event_count >= cfg.support_threshold;
        self.last_event_t = t;
    }

    /// Square of side `2 * radius` around the centroid, clipped to the sensor.
    pub fn region(&self, sensor: Sensor) -> Option<Region> {
        let side = round_half_up(2.0 * self.radius);
        Region::new(
            round_half_up(self.cx - self.radius),
            round_half_up(self.cy - self.radius),
            side,
            side,
        )
        .clip(sensor.width, sensor.height)
    }
}

#[derive(Debug, Clone)]
pub struct Ebms {
    cfg: EbmsConfig,
    sensor: Sensor,
    clusters: Vec<Cluster>,
    next_id: u64,
    last_t: Option<u64>,
    peak_clusters: usize,
    events: u64,
    ops: OpCounter,
}

impl Ebms {
    pub fn new(cfg: EbmsConfig, sensor: Sensor) -> Result<Self> {
        cfg.validate()?;
        Ok(Ebms {
            cfg,
            sensor,
            clusters: Vec::with_capacity(cfg.max_clusters),
            next_id: 1,
            last_t: None,
            peak_clusters: 0,
            events: 0,
            ops: OpCounter::default(),
        })
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn ops(&self) -> OpCounter {
        self.ops
    }

    pub fn events_processed(&self) -> u64 {
        self.events
    }

    pub fn peak_clusters(&self) -> usize {
        self.peak_clusters
    }

    /// Bytes of the cluster pool, sized for `max_clusters`.
    pub fn state_bytes(&self) -> usize {
        self.cfg.max_clusters * std::mem::size_of::<Cluster>()
    }

    fn prune(&mut self, t: u64) {
        let timeout = self.cfg.timeout_us;
        self.ops.cmps += self.clusters.len() as u64;
        self.clusters.retain(|c| t - c.last_event_t <= timeout);
    }

    pub fn process_event(&mut self, e: &Event) -> Result<()> {
        if let Some(last) = self.last_t {
            if e.t < last {
                return Err(Error::Ordering(format!("event at {} after {last}", e.t)));
            }
        }
        self.last_t = Some(e.t);
        self.events += 1;
        self.prune(e.t);

        let (ex, ey) = (f64::from(e.x), f64::from(e.y));
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.clusters.iter().enumerate() {
            let d2 = (ex - c.cx).powi(2) + (ey - c.cy).powi(2);
            self.ops.tally(3, 2, 2);
            if d2 <= c.radius * c.radius && best.is_none_or(|(_, b)| d2 < b) {
                best = Some((i, d2));
            }
        }
        match best {
            Some((i, _)) => {
                let eta = self.cfg.eta;
                let c = &mut self.clusters[i];
                c.cx += eta * (ex - c.cx);
                c.cy += eta * (ey - c.cy);
                self.ops.tally(4, 2, 0);
                c.add_support(e.t, &self.cfg);
                self.ops.tally(BUCKETS as u64, 0, 1);
            }
            None if self.clusters.len() < self.cfg.max_clusters => {
                self.clusters
                    .push(Cluster::seed(self.next_id, e, &self.cfg));
                self.next_id += 1;
                self.peak_clusters = self.peak_clusters.max(self.clusters.len());
            }
            None => {}
        }
        Ok(())
    }

    /// Visible clusters at time `t`, ordered by cluster id.
    pub fn visible(&mut self, t: u64) -> Vec<(u64, Region)> {
        self.prune(t.max(self.last_t.unwrap_or(0)));
        let cfg = self.cfg;
        let sensor = self.sensor;
        self.clusters
            .iter_mut()
            .filter_map(|c| {
                c.roll(t, &cfg);
                if c.visible {
                    c.region(sensor).map(|r| (c.id, r))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Visible clusters as track records.
    pub fn records(&mut self, t: u64) -> Vec<TrackRecord> {
        self.visible(t)
            .into_iter()
            .map(|(id, r)| TrackRecord {
                t_us: t,
                id,
                x: f64::from(r.x),
                y: f64::from(r.y),
                w: f64::from(r.w),
                h: f64::from(r.h),
                vx: 0.0,
                vy: 0.0,
                state: TrackState::Locked,
            })
            .collect()
    }
}
