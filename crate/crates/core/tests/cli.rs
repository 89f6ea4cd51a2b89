use std::path::Path;
use std::process::{Command, Output};

fn ctxseg(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ctxseg"))
        .args(args)
        .current_dir(cwd)
        .env_remove("CTX_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> Output {
    let out = ctxseg(args, cwd);
    assert!(
        out.status.success(),
        "ctxseg {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

#[test]
fn stage_by_stage_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", "in"], d);
    ok(&["superpixels", "--in", "in/frames/frame_000.pgm", "--out", "sp.map", "--sigma", "0.5", "--k", "100", "--min-size", "20"], d);
    assert_eq!(
        std::fs::read_to_string(d.join("sp.map")).unwrap(),
        std::fs::read_to_string(d.join("in/maps/frame_000.map")).unwrap()
    );
    ok(&["propose", "--dets", "in/detections.jsonl", "--maps", "in/maps", "--min-conf", "0.5", "--iou", "0.5", "--out", "partition.json"], d);
    ok(&["graph", "--features", "in/features.fmx", "--k", "20", "--out", "graph.bin"], d);
    ok(&["context", "--partition", "partition.json", "--out", "links.json"], d);
    ok(&["propagate", "--graph", "graph.bin", "--links", "links.json", "--mu", "0.99", "--tol", "1e-6", "--out", "scores.bin", "--report", "prop.json"], d);
    ok(&[
        "segment", "--scores", "scores.bin", "--features", "in/features.fmx", "--partition", "partition.json",
        "--graph", "graph.bin", "--maps", "in/maps", "--unary-out", "unary.fmx", "--out", "seg",
    ], d);
    assert!(d.join("unary.fmx").is_file());
    let out = ok(&["evaluate", "--pred", "seg", "--truth", "in/truth"], d);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let avg = report["averageIou"].as_f64().unwrap();
    assert!(avg >= 0.9, "average IoU {avg}");

    // Reusing the dumped unary table gives the same labeling.
    ok(&[
        "segment", "--scores", "scores.bin", "--features", "in/features.fmx", "--partition", "partition.json",
        "--graph", "graph.bin", "--unary-in", "unary.fmx", "--out", "seg2",
    ], d);
    let a: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("seg/labels.json")).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("seg2/labels.json")).unwrap()).unwrap();
    assert_eq!(a["result"]["labeling"], b["result"]["labeling"]);
}

#[test]
fn pipeline_with_config_and_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", "in", "--seed", "2"], d);
    std::fs::write(d.join("cfg.toml"), "seed = 4\n[graph]\nk = 10\n").unwrap();
    let out = ok(&["pipeline", "--config", "cfg.toml", "--inputs", "in", "--out", "out"], d);
    assert!(String::from_utf8_lossy(&out.stdout).contains("average IoU"));
    let saved = std::fs::read_to_string(d.join("out/config.toml")).unwrap();
    assert!(saved.contains("k = 10"));

    let single = Command::new(env!("CARGO_BIN_EXE_ctxseg"))
        .args(["pipeline", "--config", "cfg.toml", "--inputs", "in", "--out", "out1"])
        .current_dir(d)
        .env("CTX_THREADS", "1")
        .output()
        .unwrap();
    assert!(single.status.success());
    assert_eq!(
        std::fs::read(d.join("out/manifest.json")).unwrap(),
        std::fs::read(d.join("out1/manifest.json")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--out", "in"], d);

    std::fs::write(d.join("bad.toml"), "[propagation]\nmu = 2.0\n").unwrap();
    let out = ctxseg(&["--config", "bad.toml", "pipeline", "--inputs", "in", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));

    let out = ctxseg(&["graph", "--features", "in/detections.jsonl", "--out", "g.bin"], d);
    assert_eq!(out.status.code(), Some(2));

    ok(&["propose", "--dets", "in/detections.jsonl", "--maps", "in/maps", "--out", "partition.json"], d);
    ok(&["graph", "--features", "in/features.fmx", "--out", "graph.bin"], d);
    ok(&["context", "--partition", "partition.json", "--out", "links.json"], d);
    let out = ctxseg(
        &["propagate", "--graph", "graph.bin", "--links", "links.json", "--solver", "iterative", "--max-iter", "2", "--out", "s.bin"],
        d,
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));

    let out = ctxseg(&["pipeline", "--inputs", "missing", "--out", "o"], d);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("superpixels"));

    let out = ctxseg(&["propagate", "--graph", "graph.bin"], d);
    assert_eq!(out.status.code(), Some(2));
}
