//! `etrk` command-line front end.
//!
//! Every subcommand reads the layered [`PipelineConfig`] (`--config`, then
//! `ETRK_*` variables, then `--set` and subcommand flags) and writes its
//! artifacts under `--out-dir`.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::classify_export::{
    break_even_spikes, crop_track, encode_spikes, export_crops, majority_vote, resize_to_fixed,
    schedule, write_spikes_csv, Classifier, SlotSchedule, SpikeList, StubClassifier, TrackCrop,
};
use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::eval::{
    collect_frames, parse_thresholds, pr_sweep, render_overlay, resource_compare, write_kv,
    write_report, EvalCurve, ResourceReport,
};
use crate::event_io::{
    aggregate_frame, parse_events, windows, write_events_csv, write_events_raw, Event, EventFormat,
};
use crate::pipeline::{read_records_jsonl, run, run_simple, write_records_jsonl, TrackerKind};
use crate::region::Region;
use crate::regionprop::median_filter_3x3;
use crate::synth::{
    generate, preset, read_ground_truth_csv, write_ground_truth_csv, GroundTruthTrack, SceneSpec,
};
use crate::tracker::{TrackRecord, TrackState};

#[derive(Debug, Parser)]
#[command(
    name = "etrk",
    version,
    about = "Event-camera multi-object tracking pipeline"
)]
pub struct Cli {
    /// Seed for scene generation and the stub classifier.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// TOML pipeline configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for all written artifacts.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Config override `section.key=value`; repeatable, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic scene: events, ground truth and the scene spec.
    Synth(SynthArgs),
    /// Run a tracker over an event file.
    Track(TrackArgs),
    /// Precision/recall sweep of track output against ground truth.
    Eval(EvalArgs),
    /// Crops, spikes and classifier slot schedule for Locked tracks.
    Export(ExportArgs),
    /// Paired overlap-tracker vs EBMS resource comparison.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Raw,
}

#[derive(Debug, Clone, Copy, Default, ValueEnum)]
pub enum TrackerArg {
    #[default]
    Overlap,
    Ebms,
}

impl From<TrackerArg> for TrackerKind {
    fn from(t: TrackerArg) -> Self {
        match t {
            TrackerArg::Overlap => TrackerKind::Overlap,
            TrackerArg::Ebms => TrackerKind::Ebms,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Named preset scene.
    #[arg(long, conflicts_with = "scene", required_unless_present = "scene")]
    pub preset: Option<String>,
    /// Scene spec in TOML.
    #[arg(long)]
    pub scene: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: FormatArg,
}

#[derive(Debug, Args)]
pub struct TrackArgs {
    /// Event file (`.csv`, or `.raw` binary).
    #[arg(long)]
    pub events: PathBuf,
    /// Track records (JSON lines); defaults to `<out-dir>/tracks.jsonl`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emulate the fixed-point datapath.
    #[arg(long)]
    pub fixed: bool,
    #[arg(long, value_enum, default_value = "overlap")]
    pub tracker: TrackerArg,
    /// Write one PPM overlay per frame under `<out-dir>/overlays`.
    #[arg(long)]
    pub overlays: bool,
    /// Ground truth drawn on the overlays.
    #[arg(long)]
    pub gt: Option<PathBuf>,
    /// Process windows up to at least this time.
    #[arg(long, default_value_t = 0)]
    pub duration_us: u64,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Track records (JSON lines).
    #[arg(long)]
    pub tracks: PathBuf,
    /// Ground truth CSV from `synth`.
    #[arg(long)]
    pub gt: PathBuf,
    /// `start:stop:step` (inclusive) or a comma list.
    #[arg(long, default_value = "0.1:0.9:0.1")]
    pub thresholds: String,
    /// Score interpolated tracks at ground-truth timestamps.
    #[arg(long)]
    pub interpolate: bool,
    /// Resource report written by `track`, appended to the report.
    #[arg(long)]
    pub resources: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Event file the tracks were computed from.
    #[arg(long)]
    pub events: PathBuf,
    /// Track records (JSON lines).
    #[arg(long)]
    pub tracks: PathBuf,
    /// Per-sample labels (`id,frame,label`) to reduce to one label per track.
    #[arg(long)]
    pub vote: Option<PathBuf>,
    /// Classify every crop with the seeded stub over these labels.
    #[arg(long, value_delimiter = ',')]
    pub classify: Vec<String>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Preset scene to generate when no event file is given.
    #[arg(long, default_value = "crossing_opposite")]
    pub preset: String,
    /// Replace every object's per-pixel event rate (events/s).
    #[arg(long)]
    pub rate: Option<f64>,
    /// Benchmark on this event file instead of a preset.
    #[arg(long, conflicts_with_all = ["preset", "rate"])]
    pub events: Option<PathBuf>,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn render<F>(f: F) -> Vec<u8>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    f(&mut buf).expect("writing to memory");
    buf
}

impl Cli {
    fn pipeline_config(&self, extra: &[&str]) -> Result<PipelineConfig> {
        let text = match &self.config {
            Some(p) => Some(
                String::from_utf8(read(p)?)
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            ),
            None => None,
        };
        let mut overrides = self.overrides.clone();
        overrides.extend(extra.iter().map(|s| s.to_string()));
        PipelineConfig::layered(text.as_deref(), std::env::vars(), &overrides)
    }

    fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn load_events(path: &Path, cfg: &PipelineConfig) -> Result<Vec<Event>> {
    parse_events(&read(path)?, EventFormat::from_path(path), cfg.sensor)
}

fn load_gt(path: &Path) -> Result<Vec<GroundTruthTrack>> {
    read_ground_truth_csv(std::io::Cursor::new(read(path)?))
}

fn load_records(path: &Path) -> Result<Vec<TrackRecord>> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::Parse {
        line: 0,
        offset: e.utf8_error().valid_up_to(),
        msg: "track file is not UTF-8".into(),
    })?;
    read_records_jsonl(&text)
}

/// Parses and runs one command line; returns what to print on stdout.
pub fn run_cli<I, T>(args: I) -> Result<String>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| Error::Config(e.to_string()))?;
    execute(&cli)
}

pub fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Synth(a) => synth(cli, a),
        Command::Track(a) => track(cli, a),
        Command::Eval(a) => eval(cli, a),
        Command::Export(a) => export(cli, a),
        Command::Bench(a) => bench(cli, a),
    }
}

fn synth(cli: &Cli, a: &SynthArgs) -> Result<String> {
    let mut spec = match (&a.preset, &a.scene) {
        (Some(name), _) => preset(name, cli.seed.unwrap_or(0))?,
        (None, Some(p)) => {
            let text = String::from_utf8(read(p)?)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
            SceneSpec::from_toml(&text)?
        }
        (None, None) => return Err(Error::Config("synth needs --preset or --scene".into())),
    };
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let (events, gts) = generate(&spec)?;
    let (name, bytes) = match a.format {
        FormatArg::Csv => ("events.csv", render(|b| write_events_csv(&events, b))),
        FormatArg::Raw => ("events.raw", render(|b| write_events_raw(&events, b))),
    };
    write(&cli.out(name), &bytes)?;
    write(
        &cli.out("ground_truth.csv"),
        &render(|b| write_ground_truth_csv(&gts, b)),
    )?;
    write(&cli.out("scene.toml"), spec.to_toml().as_bytes())?;
    Ok(format!(
        "{} events, {} ground-truth tracks, seed {}\n",
        events.len(),
        gts.len(),
        spec.seed
    ))
}

fn track(cli: &Cli, a: &TrackArgs) -> Result<String> {
    let cfg = cli.pipeline_config(if a.fixed { &["fx.enabled=true"] } else { &[] })?;
    let events = load_events(&a.events, &cfg)?;
    let gts = match &a.gt {
        Some(p) => load_gt(p)?,
        None => Vec::new(),
    };
    let mut gt_at: BTreeMap<u64, Vec<Region>> = BTreeMap::new();
    for g in &gts {
        for (t, r) in &g.samples {
            gt_at.entry(*t).or_default().push(*r);
        }
    }
    let overlay_dir = cli.out("overlays");
    let out = run(
        &events,
        &cfg,
        a.tracker.into(),
        a.duration_us,
        |frame, recs| {
            if !a.overlays {
                return Ok(());
            }
            let boxes: Vec<(u64, Region)> = recs.iter().map(|r| (r.id, r.region())).collect();
            let gt = gt_at.get(&frame.t_end).map(Vec::as_slice).unwrap_or(&[]);
            let img = render_overlay(frame, &boxes, gt);
            let path = overlay_dir.join(format!("frame_{:05}.ppm", frame.index));
            write(&path, &render(|b| img.write_ppm(b)))
        },
    )?;
    let path = a.out.clone().unwrap_or_else(|| cli.out("tracks.jsonl"));
    write(&path, &render(|b| write_records_jsonl(&out.records, b)))?;
    let res = serde_json::to_vec_pretty(&out.resources).expect("report serializes");
    write(&cli.out("resources.json"), &res)?;
    let ids: std::collections::BTreeSet<u64> = out.records.iter().map(|r| r.id).collect();
    Ok(format!(
        "{} records, {} tracks over {} frames ({} tracker)\n",
        out.records.len(),
        ids.len(),
        out.resources.frames,
        out.resources.name
    ))
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<String> {
    let cfg = cli.pipeline_config(if a.interpolate {
        &["eval.interpolate=true"]
    } else {
        &[]
    })?;
    let records = load_records(&a.tracks)?;
    let gts = load_gt(&a.gt)?;
    let thresholds = parse_thresholds(&a.thresholds)?;
    let frames = collect_frames(&records, &gts, cfg.eval.interpolate)?;
    let curve = pr_sweep(&frames, &thresholds);
    let resources: Vec<ResourceReport> = match &a.resources {
        Some(p) => vec![serde_json::from_slice(&read(p)?).map_err(|e| Error::Parse {
            line: e.line(),
            offset: e.column(),
            msg: e.to_string(),
        })?],
        None => Vec::new(),
    };
    let report = render(|b| write_report(b, &curve, &resources, None));
    write(&cli.out("report.txt"), &report)?;
    write(
        &cli.out("metrics.txt"),
        &render(|b| write_kv(b, &curve, &resources)),
    )?;
    Ok(String::from_utf8(report).expect("report is ASCII"))
}

fn read_labels(path: &Path) -> Result<Vec<(u64, u64, String)>> {
    let text = String::from_utf8(read(path)?).map_err(|e| Error::Parse {
        line: 0,
        offset: e.utf8_error().valid_up_to(),
        msg: "labels file is not UTF-8".into(),
    })?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('#') || (i == 0 && l.starts_with("id")) {
            continue;
        }
        let bad = |msg: String| Error::Parse {
            line: i + 1,
            offset: 0,
            msg,
        };
        let f: Vec<&str> = l.splitn(3, ',').collect();
        if f.len() != 3 {
            return Err(bad("expected id,frame,label".into()));
        }
        let id = f[0].trim().parse().map_err(|e| bad(format!("id: {e}")))?;
        let frame = f[1]
            .trim()
            .parse()
            .map_err(|e| bad(format!("frame: {e}")))?;
        out.push((id, frame, f[2].trim().to_string()));
    }
    Ok(out)
}

fn export(cli: &Cli, a: &ExportArgs) -> Result<String> {
    let cfg = cli.pipeline_config(&[])?;
    let events = load_events(&a.events, &cfg)?;
    let records = load_records(&a.tracks)?;
    let mut locked_at: BTreeMap<u64, Vec<&TrackRecord>> = BTreeMap::new();
    for r in records.iter().filter(|r| r.state == TrackState::Locked) {
        locked_at.entry(r.t_us).or_default().push(r);
    }
    let last_t = locked_at.keys().next_back().copied().unwrap_or(0);
    let period = cfg.frame.period_us;
    let side = cfg.export.side;

    let mut log = Vec::new();
    writeln!(
        log,
        "# {side}x{side} crop, break-even {} spikes at {} bits per spike",
        break_even_spikes(side, side, cfg.export.bits_per_spike)?,
        cfg.export.bits_per_spike
    )
    .expect("vec write");
    let mut sched = SlotSchedule::default();
    let mut crops: Vec<(TrackCrop, u64)> = Vec::new();
    let mut spikes: Vec<SpikeList> = Vec::new();
    let mut frames_logged = 0usize;
    for w in windows(&events, period, last_t.saturating_sub(period) + 1) {
        let t_end = w.t_start + period;
        let Some(recs) = locked_at.get(&t_end) else {
            continue;
        };
        let raw = aggregate_frame(
            w.events,
            w.index,
            w.t_start,
            period,
            cfg.frame.min_count,
            cfg.sensor,
        )?;
        let frame = median_filter_3x3(&raw);
        let ids: Vec<u64> = recs.iter().map(|r| r.id).collect();
        sched = schedule(&ids, &sched);
        frames_logged += 1;
        let slots: Vec<String> = sched
            .slots
            .iter()
            .map(|(id, s)| format!("{id}:{s}"))
            .collect();
        let waiting: Vec<String> = sched.waiting.iter().map(u64::to_string).collect();
        writeln!(
            log,
            "frame {} t_us {} slots [{}] unscheduled [{}]",
            w.index,
            t_end,
            slots.join(" "),
            waiting.join(" ")
        )
        .expect("vec write");
        for r in recs {
            if sched.slot_of(r.id).is_none() {
                continue;
            }
            let Some(region) = r.region().clip(frame.width(), frame.height()) else {
                continue;
            };
            let crop = TrackCrop {
                id: r.id,
                frame: w.index,
                bits: resize_to_fixed(&crop_track(&frame, &region)?, side),
            };
            spikes.push(encode_spikes(&crop));
            crops.push((crop, t_end));
        }
    }
    export_crops(&cli.out("crops"), &crops)?;
    write(
        &cli.out("spikes.csv"),
        &render(|b| write_spikes_csv(&spikes, b)),
    )?;
    write(&cli.out("schedule.log"), &log)?;
    let mut summary = format!("{} crops over {} frames\n", crops.len(), frames_logged);

    if !a.classify.is_empty() {
        let mut stub = StubClassifier::new(a.classify.clone(), cli.seed.unwrap_or(0));
        let mut body = b"id,frame,label\n".to_vec();
        for ((crop, _), sp) in crops.iter().zip(&spikes) {
            let label = stub.classify(crop, sp);
            writeln!(body, "{},{},{}", crop.id, crop.frame, label).expect("vec write");
        }
        write(&cli.out("labels.csv"), &body)?;
    }
    if let Some(p) = &a.vote {
        let mut by_track: BTreeMap<u64, Vec<(u64, String)>> = BTreeMap::new();
        for (id, frame, label) in read_labels(p)? {
            by_track.entry(id).or_default().push((frame, label));
        }
        let mut body = b"id,label,samples\n".to_vec();
        for (id, mut samples) in by_track {
            samples.sort_by_key(|s| s.0);
            let labels: Vec<String> = samples.into_iter().map(|s| s.1).collect();
            writeln!(body, "{},{},{}", id, majority_vote(&labels)?, labels.len())
                .expect("vec write");
        }
        write(&cli.out("track_labels.csv"), &body)?;
        summary.push_str("per-track labels written\n");
    }
    Ok(summary)
}

fn bench(cli: &Cli, a: &BenchArgs) -> Result<String> {
    let cfg = cli.pipeline_config(&[])?;
    let (events, min_end) = match &a.events {
        Some(p) => (load_events(p, &cfg)?, 0),
        None => {
            let mut spec = preset(&a.preset, cli.seed.unwrap_or(0))?;
            if let Some(rate) = a.rate {
                for o in &mut spec.objects {
                    o.rate = rate;
                }
            }
            (generate(&spec)?.0, spec.duration_us)
        }
    };
    let overlap = run_simple(&events, &cfg, TrackerKind::Overlap, min_end)?.resources;
    let ebms = run_simple(&events, &cfg, TrackerKind::Ebms, min_end)?.resources;
    let cmp = resource_compare(&overlap, &ebms);
    let report = render(|b| write_report(b, &EvalCurve::default(), &[], Some(&cmp)));
    write(&cli.out("bench.txt"), &report)?;
    Ok(String::from_utf8(report).expect("report is ASCII"))
}
