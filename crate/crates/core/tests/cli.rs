use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use etrk_core::pipeline::read_records_jsonl;

fn etrk(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etrk"))
        .current_dir(dir)
        .args(args)
        .env_remove("ETRK_FRAME__PERIOD_US")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = etrk(dir, args);
    assert!(
        out.status.success(),
        "etrk {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn locked(t: u64, id: u64, x: f64, y: f64) -> String {
    format!(
        "{{\"t_us\":{t},\"id\":{id},\"x\":{x},\"y\":{y},\"w\":12.0,\"h\":10.0,\"vx\":0.0,\"vy\":0.0,\"state\":\"Locked\"}}\n"
    )
}

#[test]
fn synth_same_seed_same_bytes() {
    let d = tempfile::tempdir().unwrap();
    for out in ["a", "b", "c"] {
        let seed = if out == "c" { "8" } else { "7" };
        ok(
            d.path(),
            &[
                "--seed",
                seed,
                "--out-dir",
                out,
                "synth",
                "--preset",
                "single_const_velocity",
            ],
        );
    }
    for f in ["events.csv", "ground_truth.csv", "scene.toml"] {
        let a = fs::read(d.path().join("a").join(f)).unwrap();
        assert_eq!(a, fs::read(d.path().join("b").join(f)).unwrap(), "{f}");
    }
    assert_ne!(
        fs::read(d.path().join("a/events.csv")).unwrap(),
        fs::read(d.path().join("c/events.csv")).unwrap()
    );
}

#[test]
fn synth_rejects_unknown_preset() {
    let d = tempfile::tempdir().unwrap();
    let out = etrk(d.path(), &["synth", "--preset", "comet"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown preset"));
}

#[test]
fn track_eval_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &[
            "--out-dir",
            "s",
            "synth",
            "--preset",
            "single_const_velocity",
        ],
    );
    let msg = ok(
        p,
        &[
            "track",
            "--events",
            "s/events.csv",
            "--out",
            "t/tracks.jsonl",
            "--overlays",
            "--gt",
            "s/ground_truth.csv",
        ],
    );
    assert!(msg.contains("1 tracks over 30 frames"), "{msg}");
    assert_eq!(fs::read_dir(p.join("overlays")).unwrap().count(), 30);
    let report = ok(
        p,
        &[
            "eval",
            "--tracks",
            "t/tracks.jsonl",
            "--gt",
            "s/ground_truth.csv",
            "--thresholds",
            "0.1:0.9:0.1",
        ],
    );
    let rows: Vec<&str> = report.lines().filter(|l| l.starts_with("0.")).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows[0].starts_with("0.1,"));
    assert!(rows[8].starts_with("0.9,"));
    assert!(p.join("report.txt").exists() && p.join("metrics.txt").exists());
}

#[test]
fn eval_missing_ground_truth_fails() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("t.jsonl"), locked(33_000, 1, 5.0, 5.0)).unwrap();
    let out = etrk(
        d.path(),
        &["eval", "--tracks", "t.jsonl", "--gt", "missing.csv"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
}

#[test]
fn fixed_and_ebms_share_the_output_schema() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &["--out-dir", "s", "synth", "--preset", "crossing_opposite"],
    );
    ok(
        p,
        &[
            "track",
            "--events",
            "s/events.csv",
            "--fixed",
            "--out",
            "fixed.jsonl",
        ],
    );
    ok(
        p,
        &[
            "track",
            "--events",
            "s/events.csv",
            "--tracker",
            "ebms",
            "--out",
            "ebms.jsonl",
        ],
    );
    for f in ["fixed.jsonl", "ebms.jsonl"] {
        let recs = read_records_jsonl(&fs::read_to_string(p.join(f)).unwrap()).unwrap();
        assert!(!recs.is_empty(), "{f}");
    }
}

#[test]
fn flags_beat_env_beat_file() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    ok(
        p,
        &[
            "--out-dir",
            "s",
            "synth",
            "--preset",
            "single_const_velocity",
        ],
    );
    fs::write(p.join("base.toml"), "[frame]\nperiod_us = 99000\n").unwrap();
    let run = |env: Option<&str>, set: Option<&str>| {
        let mut args = vec!["--config", "base.toml", "track", "--events", "s/events.csv"];
        if let Some(s) = set {
            args.extend(["--set", s]);
        }
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_etrk"));
        cmd.current_dir(p).args(&args);
        if let Some(v) = env {
            cmd.env("ETRK_FRAME__PERIOD_US", v);
        }
        String::from_utf8(cmd.output().unwrap().stdout).unwrap()
    };
    assert!(run(None, None).contains("over 10 frames"));
    assert!(run(Some("49500"), None).contains("over 20 frames"));
    assert!(run(Some("49500"), Some("frame.period_us=33000")).contains("over 30 frames"));
}

#[test]
fn unknown_config_key_fails() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("e.csv"), "0,1,1,1\n").unwrap();
    let out = etrk(
        d.path(),
        &["--set", "trk.alfa=0.3", "track", "--events", "e.csv"],
    );
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("alfa"));
}

#[test]
fn export_one_track_ten_frames() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("e.csv"), "1,20,20,1\n329999,21,20,0\n").unwrap();
    let tracks: String = (1..=10)
        .map(|k| locked(k * 33_000, 1, 10.0, 10.0))
        .collect();
    fs::write(p.join("t.jsonl"), tracks).unwrap();
    let msg = ok(p, &["export", "--events", "e.csv", "--tracks", "t.jsonl"]);
    assert!(msg.starts_with("10 crops"), "{msg}");
    let crops = fs::read_dir(p.join("crops")).unwrap().count();
    assert_eq!(crops, 11);
    let manifest = fs::read_to_string(p.join("crops/manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 11);
    let spikes = fs::read_to_string(p.join("spikes.csv")).unwrap();
    assert!(spikes.starts_with("id,frame,row,col\n"));
}

#[test]
fn export_nine_tracks_leaves_one_unscheduled() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("e.csv"), "5,1,1,1\n").unwrap();
    let tracks: String = (1..=9)
        .map(|id| locked(33_000, id, (id * 20) as f64, 50.0))
        .collect();
    fs::write(p.join("t.jsonl"), tracks).unwrap();
    ok(p, &["export", "--events", "e.csv", "--tracks", "t.jsonl"]);
    let log = fs::read_to_string(p.join("schedule.log")).unwrap();
    let line = log.lines().find(|l| l.starts_with("frame 0")).unwrap();
    assert!(line.ends_with("unscheduled [9]"), "{line}");
    assert_eq!(fs::read_dir(p.join("crops")).unwrap().count(), 9);
}

#[test]
fn export_vote_writes_per_track_labels() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    fs::write(p.join("e.csv"), "5,1,1,1\n").unwrap();
    fs::write(p.join("t.jsonl"), locked(33_000, 1, 10.0, 10.0)).unwrap();
    fs::write(
        p.join("labels.csv"),
        "id,frame,label\n1,0,car\n1,1,person\n1,2,car\n2,0,bike\n",
    )
    .unwrap();
    ok(
        p,
        &[
            "export",
            "--events",
            "e.csv",
            "--tracks",
            "t.jsonl",
            "--vote",
            "labels.csv",
        ],
    );
    let out = fs::read_to_string(p.join("track_labels.csv")).unwrap();
    assert_eq!(out, "id,label,samples\n1,car,3\n2,bike,1\n");
}

#[test]
fn bench_reports_both_trackers() {
    let d = tempfile::tempdir().unwrap();
    let out = ok(d.path(), &["bench"]);
    assert!(out.contains("overlap: state_bytes="));
    assert!(out.contains("ebms: state_bytes="));
    assert!(out.contains("ratio ebms/overlap: memory="));
}
