//! Event stream parsing and fixed-period binary frame aggregation.
//!
//! Two on-disk formats are supported:
//!
//! * CSV: one `t_us,x,y,polarity` record per LF-terminated line; lines
//!   starting with `#` are skipped.
//! * RAW: little-endian records of four `u32` (t_us, x, y, polarity), no header.
//!
//! Frames use half-open windows `[t_start, t_start + period)`, so an event
//! at exactly `t_start + period` lands in the next frame.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::BitImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Off,
    On,
}

impl Polarity {
    pub fn from_bit(b: u32) -> Option<Self> {
        match b {
            0 => Some(Polarity::Off),
            1 => Some(Polarity::On),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Off => 0,
            Polarity::On => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Event { t, x, y, polarity }
    }
}

/// Sensor resolution; the DAVIS240C is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sensor {
    pub width: u32,
    pub height: u32,
}

impl Default for Sensor {
    fn default() -> Self {
        Sensor {
            width: 240,
            height: 180,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventFormat {
    Csv,
    Raw,
}

impl EventFormat {
    /// Guess from a file extension; anything other than `.raw`/`.bin` is CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("raw") | Some("bin") => EventFormat::Raw,
            _ => EventFormat::Csv,
        }
    }
}

const RAW_RECORD: usize = 16;

/// Parses a whole event stream, enforcing sensor bounds and timestamp order.
pub fn parse_events(source: &[u8], format: EventFormat, sensor: Sensor) -> Result<Vec<Event>> {
    match format {
        EventFormat::Csv => parse_csv(source, sensor),
        EventFormat::Raw => parse_raw(source, sensor),
    }
}

fn parse_csv(source: &[u8], sensor: Sensor) -> Result<Vec<Event>> {
    let text = std::str::from_utf8(source).map_err(|e| Error::Parse {
        line: 1 + source[..e.valid_up_to()]
            .iter()
            .filter(|&&b| b == b'\n')
            .count(),
        offset: e.valid_up_to(),
        msg: "invalid UTF-8".into(),
    })?;
    let mut events = Vec::new();
    let mut offset = 0usize;
    let mut last_t = 0u64;
    let mut lines = text.split('\n').enumerate().peekable();
    while let Some((idx, raw_line)) = lines.next() {
        let line_no = idx + 1;
        let line_offset = offset;
        offset += raw_line.len() + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        if line.is_empty() && lines.peek().is_none() {
            break;
        }
        if line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            line: line_no,
            offset: line_offset,
            msg,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {}", fields.len())));
        }
        let mut vals = [0u64; 4];
        for (v, f) in vals.iter_mut().zip(&fields) {
            *v = f
                .trim()
                .parse::<u64>()
                .map_err(|e| bad(format!("field {f:?}: {e}")))?;
        }
        let polarity = u32::try_from(vals[3])
            .ok()
            .and_then(Polarity::from_bit)
            .ok_or_else(|| bad(format!("polarity must be 0 or 1, got {}", vals[3])))?;
        let ev = checked_event(vals[0], vals[1], vals[2], polarity, sensor, line_no)?;
        if ev.t < last_t {
            return Err(Error::Ordering(format!(
                "line {line_no}: timestamp {} precedes {last_t}",
                ev.t
            )));
        }
        last_t = ev.t;
        events.push(ev);
    }
    Ok(events)
}

fn parse_raw(source: &[u8], sensor: Sensor) -> Result<Vec<Event>> {
    if !source.len().is_multiple_of(RAW_RECORD) {
        let full = source.len() / RAW_RECORD;
        return Err(Error::Parse {
            line: full + 1,
            offset: full * RAW_RECORD,
            msg: format!(
                "truncated record ({} trailing bytes)",
                source.len() % RAW_RECORD
            ),
        });
    }
    let mut events = Vec::with_capacity(source.len() / RAW_RECORD);
    let mut last_t = 0u64;
    for (i, rec) in source.chunks_exact(RAW_RECORD).enumerate() {
        let word = |k: usize| u32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap());
        let polarity = Polarity::from_bit(word(3)).ok_or_else(|| Error::Parse {
            line: i + 1,
            offset: i * RAW_RECORD,
            msg: format!("polarity must be 0 or 1, got {}", word(3)),
        })?;
        let ev = checked_event(
            u64::from(word(0)),
            u64::from(word(1)),
            u64::from(word(2)),
            polarity,
            sensor,
            i + 1,
        )?;
        if ev.t < last_t {
            return Err(Error::Ordering(format!(
                "record {}: timestamp {} precedes {last_t}",
                i + 1,
                ev.t
            )));
        }
        last_t = ev.t;
        events.push(ev);
    }
    Ok(events)
}

fn checked_event(t: u64, x: u64, y: u64, p: Polarity, sensor: Sensor, rec: usize) -> Result<Event> {
    if x >= u64::from(sensor.width) || y >= u64::from(sensor.height) {
        return Err(Error::Bounds(format!(
            "record {rec}: ({x},{y}) outside {}x{} sensor",
            sensor.width, sensor.height
        )));
    }
    Ok(Event::new(t, x as u16, y as u16, p))
}

pub fn write_events_csv<W: Write>(events: &[Event], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# t_us,x,y,polarity")?;
    for e in events {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.polarity.bit())?;
    }
    Ok(())
}

pub fn write_events_raw<W: Write>(events: &[Event], mut out: W) -> std::io::Result<()> {
    for e in events {
        for v in [
            e.t as u32,
            u32::from(e.x),
            u32::from(e.y),
            u32::from(e.polarity.bit()),
        ] {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Binary image built from one aggregation window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryFrame {
    pub index: u64,
    pub t_start: u64,
    pub t_end: u64,
    pub image: BitImage,
}

impl BinaryFrame {
    pub fn width(&self) -> u32 {
        self.image.width()
    }

    pub fn height(&self) -> u32 {
        self.image.height()
    }
}

/// Sets every pixel that saw at least `min_count` events (either polarity)
/// inside `[t_start, t_start + period)`.
pub fn aggregate_frame(
    events: &[Event],
    index: u64,
    t_start: u64,
    period: u64,
    min_count: u32,
    sensor: Sensor,
) -> Result<BinaryFrame> {
    if period == 0 || min_count == 0 {
        return Err(Error::Contract(
            "period and min_count must be positive".into(),
        ));
    }
    let t_end = t_start + period;
    let mut counts = vec![0u32; (sensor.width * sensor.height) as usize];
    for e in events {
        if e.t < t_start || e.t >= t_end {
            return Err(Error::Contract(format!(
                "event at t={} outside window [{t_start}, {t_end})",
                e.t
            )));
        }
        if u32::from(e.x) >= sensor.width || u32::from(e.y) >= sensor.height {
            return Err(Error::Bounds(format!(
                "event ({},{}) outside sensor",
                e.x, e.y
            )));
        }
        counts[e.y as usize * sensor.width as usize + e.x as usize] += 1;
    }
    let mut image = BitImage::new(sensor.width, sensor.height);
    for (i, &c) in counts.iter().enumerate() {
        if c >= min_count {
            image.set(i as u32 % sensor.width, i as u32 / sensor.width, true);
        }
    }
    Ok(BinaryFrame {
        index,
        t_start,
        t_end,
        image,
    })
}

/// One aggregation window over a time-sorted event slice.
#[derive(Debug, Clone, Copy)]
pub struct Window<'a> {
    pub index: u64,
    pub t_start: u64,
    pub events: &'a [Event],
}

/// Back-to-back windows of `period` starting at t=0, covering every event
/// and at least `[0, min_end)`.
pub fn windows(events: &[Event], period: u64, min_end: u64) -> Vec<Window<'_>> {
    assert!(period > 0, "period must be positive");
    let last = events.last().map_or(0, |e| e.t + 1);
    let end = last.max(min_end);
    let n = end.div_ceil(period);
    let mut out = Vec::with_capacity(n as usize);
    let mut lo = 0usize;
    for index in 0..n {
        let t_start = index * period;
        let t_end = t_start + period;
        let hi = lo + events[lo..].partition_point(|e| e.t < t_end);
        out.push(Window {
            index,
            t_start,
            events: &events[lo..hi],
        });
        lo = hi;
    }
    out
}
