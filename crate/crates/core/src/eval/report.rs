use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EvalCurve;
use crate::event_io::BinaryFrame;
use crate::image::RgbCanvas;
use crate::instrument::OpCounter;
use crate::region::Region;

/// Resource usage of one tracker run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub name: String,
    /// Bytes of tracker state (not counting the frame buffer).
    pub state_bytes: usize,
    pub ops: OpCounter,
    pub frames: u64,
    pub events: u64,
}

impl ResourceReport {
    pub fn ops_per_frame(&self) -> f64 {
        self.ops.total() as f64 / self.frames.max(1) as f64
    }

    pub fn ops_per_event(&self) -> f64 {
        self.ops.total() as f64 / self.events.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceComparison {
    pub a: ResourceReport,
    pub b: ResourceReport,
    /// `b / a`
    pub memory_ratio: f64,
    pub ops_ratio: f64,
}

fn ratio(b: f64, a: f64) -> f64 {
    if a == b {
        1.0
    } else {
        b / a
    }
}

pub fn resource_compare(a: &ResourceReport, b: &ResourceReport) -> ResourceComparison {
    ResourceComparison {
        a: a.clone(),
        b: b.clone(),
        memory_ratio: ratio(b.state_bytes as f64, a.state_bytes as f64),
        ops_ratio: ratio(b.ops.total() as f64, a.ops.total() as f64),
    }
}

fn write_resource<W: Write>(out: &mut W, r: &ResourceReport) -> std::io::Result<()> {
    writeln!(
        out,
        "{}: state_bytes={} ops={} (adds={} muls={} cmps={}) frames={} events={} ops_per_frame={:.1} ops_per_event={:.3}",
        r.name,
        r.state_bytes,
        r.ops.total(),
        r.ops.adds,
        r.ops.muls,
        r.ops.cmps,
        r.frames,
        r.events,
        r.ops_per_frame(),
        r.ops_per_event()
    )
}

/// Human-readable report: one CSV row per threshold, then resources.
pub fn write_report<W: Write>(
    mut out: W,
    curve: &EvalCurve,
    resources: &[ResourceReport],
    comparison: Option<&ResourceComparison>,
) -> std::io::Result<()> {
    if !curve.rows.is_empty() {
        writeln!(out, "# matching: per-frame greedy IoU")?;
        writeln!(out, "iou_thr,precision,recall,tp,fp,fn")?;
        for r in &curve.rows {
            writeln!(
                out,
                "{},{:.6},{:.6},{},{},{}",
                r.iou_thr, r.precision, r.recall, r.counts.tp, r.counts.fp, r.counts.fn_
            )?;
        }
    }
    if !resources.is_empty() || comparison.is_some() {
        if !curve.rows.is_empty() {
            writeln!(out)?;
        }
        writeln!(out, "# resources")?;
        for r in resources {
            write_resource(&mut out, r)?;
        }
        if let Some(c) = comparison {
            write_resource(&mut out, &c.a)?;
            write_resource(&mut out, &c.b)?;
            writeln!(
                out,
                "ratio {}/{}: memory={:.3} ops={:.3}",
                c.b.name, c.a.name, c.memory_ratio, c.ops_ratio
            )?;
        }
    }
    Ok(())
}

/// `key=value` lines for scripts.
pub fn write_kv<W: Write>(
    mut out: W,
    curve: &EvalCurve,
    resources: &[ResourceReport],
) -> std::io::Result<()> {
    for r in &curve.rows {
        let k = format!("iou_{}", r.iou_thr);
        writeln!(out, "{k}.precision={:.6}", r.precision)?;
        writeln!(out, "{k}.recall={:.6}", r.recall)?;
        writeln!(out, "{k}.tp={}", r.counts.tp)?;
        writeln!(out, "{k}.fp={}", r.counts.fp)?;
        writeln!(out, "{k}.fn={}", r.counts.fn_)?;
    }
    for r in resources {
        writeln!(out, "{}.state_bytes={}", r.name, r.state_bytes)?;
        writeln!(out, "{}.ops={}", r.name, r.ops.total())?;
        writeln!(out, "{}.frames={}", r.name, r.frames)?;
        writeln!(out, "{}.events={}", r.name, r.events)?;
    }
    Ok(())
}

fn id_color(id: u64) -> [u8; 3] {
    const PALETTE: [[u8; 3]; 8] = [
        [230, 25, 75],
        [60, 180, 75],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
    ];
    PALETTE[(id % PALETTE.len() as u64) as usize]
}

/// Frame pixels in grey, ground truth in white, tracks coloured by ID.
pub fn render_overlay(frame: &BinaryFrame, tracks: &[(u64, Region)], gts: &[Region]) -> RgbCanvas {
    let mut c = RgbCanvas::from_bits(&frame.image, [110, 110, 110], [0, 0, 0]);
    for g in gts {
        c.draw_rect(g, [255, 255, 255]);
    }
    for (id, r) in tracks {
        c.draw_rect(r, id_color(*id));
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{pr_sweep, EvalFrame};
    use crate::image::BitImage;

    fn report(name: &str, bytes: usize, ops: u64) -> ResourceReport {
        ResourceReport {
            name: name.into(),
            state_bytes: bytes,
            ops: OpCounter {
                adds: ops,
                muls: 0,
                cmps: 0,
            },
            frames: 10,
            events: 1000,
        }
    }

    #[test]
    fn identical_runs_compare_to_one() {
        let a = report("a", 100, 50);
        let c = resource_compare(&a, &a);
        assert_eq!((c.memory_ratio, c.ops_ratio), (1.0, 1.0));
        let c = resource_compare(&a, &report("b", 700, 150));
        assert_eq!((c.memory_ratio, c.ops_ratio), (7.0, 3.0));
    }

    #[test]
    fn report_rows() {
        let frames = vec![EvalFrame {
            t_us: 0,
            tracks: vec![Region::new(0, 0, 4, 4)],
            gts: vec![Region::new(0, 0, 4, 4)],
        }];
        let curve = pr_sweep(&frames, &[0.5, 1.0]);
        let mut buf = Vec::new();
        write_report(&mut buf, &curve, &[report("x", 1, 2)], None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("iou_thr,precision,recall,tp,fp,fn\n0.5,1.000000,1.000000,1,0,0\n1,"));
        assert!(text.contains("x: state_bytes=1 ops=2"));
        let mut buf = Vec::new();
        write_kv(&mut buf, &curve, &[]).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("iou_0.5.precision=1.000000\n"));
    }

    #[test]
    fn overlay_draws_boxes() {
        let frame = BinaryFrame {
            index: 0,
            t_start: 0,
            t_end: 1,
            image: BitImage::new(20, 20),
        };
        let c = render_overlay(
            &frame,
            &[(1, Region::new(2, 2, 5, 5))],
            &[Region::new(10, 10, 3, 3)],
        );
        assert_eq!(c.pixel(2, 2), id_color(1));
        assert_eq!(c.pixel(10, 10), [255, 255, 255]);
        assert_eq!(c.pixel(4, 4), [0, 0, 0]);
    }
}
