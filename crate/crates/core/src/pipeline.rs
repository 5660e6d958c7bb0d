//! End-to-end runs: events to frames to proposals to tracks.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;
use crate::ebms::Ebms;
use crate::error::Result;
use crate::eval::ResourceReport;
use crate::event_io::{aggregate_frame, windows, BinaryFrame, Event};
use crate::regionprop::process_frame;
use crate::tracker::{TrackRecord, Tracker};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerKind {
    #[default]
    Overlap,
    Ebms,
}

impl std::str::FromStr for TrackerKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" => Ok(TrackerKind::Overlap),
            "ebms" => Ok(TrackerKind::Ebms),
            _ => Err(crate::Error::Config(format!(
                "unknown tracker {s:?}; expected overlap or ebms"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<TrackRecord>,
    pub resources: ResourceReport,
}

/// Runs the chosen tracker over time-sorted events. Windows cover at least
/// `[0, min_end)`. `on_frame` sees each median-filtered frame and the records
/// emitted at its end.
pub fn run(
    events: &[Event],
    cfg: &PipelineConfig,
    kind: TrackerKind,
    min_end: u64,
    mut on_frame: impl FnMut(&BinaryFrame, &[TrackRecord]) -> Result<()>,
) -> Result<RunOutput> {
    cfg.validate()?;
    let period = cfg.frame.period_us;
    let wins = windows(events, period, min_end);
    let mut records = Vec::new();
    let resources = match kind {
        TrackerKind::Overlap => {
            let mut tracker = Tracker::new(cfg.tracker_config()?, cfg.sensor)?;
            for w in &wins {
                let frame = aggregate_frame(
                    w.events,
                    w.index,
                    w.t_start,
                    period,
                    cfg.frame.min_count,
                    cfg.sensor,
                )?;
                let (filtered, proposals) = process_frame(&frame, &cfg.rp);
                let out = tracker.step(&proposals, frame.t_end)?;
                on_frame(&filtered, &out)?;
                records.extend(out);
            }
            ResourceReport {
                name: "overlap".into(),
                state_bytes: tracker.state_bytes(),
                ops: tracker.ops(),
                frames: wins.len() as u64,
                events: events.len() as u64,
            }
        }
        TrackerKind::Ebms => {
            let mut ebms = Ebms::new(cfg.ebms, cfg.sensor)?;
            for w in &wins {
                for e in w.events {
                    ebms.process_event(e)?;
                }
                let t_end = w.t_start + period;
                let out = ebms.records(t_end);
                let frame = aggregate_frame(
                    w.events,
                    w.index,
                    w.t_start,
                    period,
                    cfg.frame.min_count,
                    cfg.sensor,
                )?;
                on_frame(&frame, &out)?;
                records.extend(out);
            }
            ResourceReport {
                name: "ebms".into(),
                state_bytes: ebms.state_bytes(),
                ops: ebms.ops(),
                frames: wins.len() as u64,
                events: ebms.events_processed(),
            }
        }
    };
    Ok(RunOutput { records, resources })
}

/// Runs without a per-frame callback.
pub fn run_simple(
    events: &[Event],
    cfg: &PipelineConfig,
    kind: TrackerKind,
    min_end: u64,
) -> Result<RunOutput> {
    run(events, cfg, kind, min_end, |_, _| Ok(()))
}

pub fn write_records_jsonl<W: Write>(records: &[TrackRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records_jsonl(text: &str) -> Result<Vec<TrackRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| crate::Error::Parse {
                line: i + 1,
                offset: 0,
                msg: e.to_string(),
            })
        })
        .collect()
}
