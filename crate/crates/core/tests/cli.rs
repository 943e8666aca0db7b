mod common;

use std::path::Path;
use std::process::{Command, Output};

use avtc::io::{read_compressed_file, read_weights_file, write_matrix_json, write_stream_file};
use avtc::Matrix;
use common::*;
use serde_json::Value;

fn avtc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avtc"))
        .args(args)
        .output()
        .expect("run avtc")
}

fn ok(args: &[&str]) -> String {
    let out = avtc(args);
    assert!(
        out.status.success(),
        "avtc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn gen_synth_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.avts"), dir.path().join("b.avts"));
    let truth = dir.path().join("t.json");
    ok(&[
        "gen-synth",
        "--benchmark",
        "7",
        "--output",
        p(&a),
        "--truth",
        p(&truth),
    ]);
    ok(&["gen-synth", "--benchmark", "7", "--output", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let t: Value = serde_json::from_str(&std::fs::read_to_string(&truth).unwrap()).unwrap();
    assert_eq!(t["scene_changes"], serde_json::json!([11, 23]));

    let spec = dir.path().join("spec.json");
    std::fs::write(
        &spec,
        r#"{"seed": 3, "chunks": 4, "marker_positions": [1]}"#,
    )
    .unwrap();
    let c = dir.path().join("c.avts");
    ok(&["gen-synth", "--spec", p(&spec), "--output", p(&c)]);
    let inspect = ok(&["inspect", "--input", p(&c)]);
    assert!(
        inspect.starts_with("AVTS v1 T=4 F=1 H=4 W=4 d=16 L=4 d_a=16"),
        "{inspect}"
    );
    assert!(inspect.contains("visual tokens per chunk: 16"));
    assert!(inspect.trim_end().ends_with("warnings: 0"));
}

#[test]
fn compress_reports_stats_and_writes_output() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.avts");
    let output = dir.path().join("out.avtc");
    let stats = dir.path().join("stats.json");
    ok(&["gen-synth", "--benchmark", "1", "--output", p(&input)]);
    ok(&[
        "compress",
        "--input",
        p(&input),
        "--idealized",
        "--output",
        p(&output),
        "--stats",
        p(&stats),
        "--threads",
        "2",
    ]);
    let s: Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    let pct = s["video_compression_pct"].as_f64().unwrap();
    assert!((50.0..=65.0).contains(&pct), "{pct}");
    assert_eq!(s["original_video_tokens"], 32 * 392);
    assert_eq!(s["k_s"], s["segments"]);
    assert!(s["segment_plan"].is_array());
    let back = read_compressed_file(&output).unwrap();
    assert_eq!(
        Some(back.retained_video_tokens() as u64),
        s["retained_video_tokens"].as_u64()
    );

    let online = ok(&[
        "compress",
        "--input",
        p(&input),
        "--idealized",
        "--mode",
        "online",
    ]);
    let o: Value = serde_json::from_str(&online).unwrap();
    assert!(o["survivor_chunks"].is_array());
    assert_eq!(o["config"]["mode"], "online");
}

#[test]
fn keep_all_settings_give_zero_compression() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.avts");
    ok(&["gen-synth", "--benchmark", "2", "--output", p(&input)]);
    let out = ok(&[
        "compress",
        "--input",
        p(&input),
        "--idealized",
        "--rho-sem",
        "1",
        "--rho-spa",
        "0",
        "--tau-merge",
        "2",
    ]);
    let s: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(s["video_compression_pct"], 0.0);
    assert_eq!(s["merges"], 0);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.avts");
    let cfg = dir.path().join("cfg.json");
    ok(&["gen-synth", "--benchmark", "2", "--output", p(&input)]);
    std::fs::write(&cfg, r#"{"rho_sem": 0.25, "tau_merge": 0.5}"#).unwrap();
    let out = ok(&[
        "compress",
        "--input",
        p(&input),
        "--idealized",
        "--config",
        p(&cfg),
        "--rho-sem",
        "0.75",
    ]);
    let s: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(s["config"]["rho_sem"], 0.75);
    assert_eq!(s["config"]["tau_merge"], 0.5);
    assert_eq!(s["config"]["rho_spa"], 0.1);
}

#[test]
fn four_identical_chunks_match_the_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.avts");
    let c = random_chunk(&mut rng(77), 1, 8, 8, 6, 3, 6);
    write_stream_file(&identical_stream(&c, 4), &input).unwrap();
    let out = ok(&["compress", "--input", p(&input), "--idealized"]);
    let s: Value = serde_json::from_str(&out).unwrap();
    let mask = ref_chunk_mask(&c, 0.5, 0.1);
    assert_eq!(s["segments"], 1);
    assert_eq!(s["merge_groups"], 1);
    assert_eq!(s["retained_video_tokens"], mask.len());
    let want = 100.0 * (1.0 - mask.len() as f64 / 256.0);
    assert!((s["video_compression_pct"].as_f64().unwrap() - want).abs() < 1e-9);
}

#[test]
fn init_weights_and_compress_with_them() {
    let dir = tempfile::tempdir().unwrap();
    let w = dir.path().join("w.a2vw");
    ok(&[
        "init-weights",
        "--seed",
        "5",
        "--dims",
        "4,8,6,6,1",
        "--output",
        p(&w),
    ]);
    let weights = read_weights_file(&w).unwrap();
    assert_eq!(weights.dims.hidden, 8);

    let input = dir.path().join("in.avts");
    write_stream_file(&random_stream(&mut rng(1), 3, 1, 4, 4, 6, 2, 6), &input).unwrap();
    ok(&["compress", "--input", p(&input), "--weights", p(&w)]);
}

#[test]
fn eval_retrieval_reports_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (a, v, r) = (
        dir.path().join("a.json"),
        dir.path().join("v.json"),
        dir.path().join("r.json"),
    );
    let eye = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let swapped = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    write_matrix_json(&swapped, &a).unwrap();
    write_matrix_json(&eye, &v).unwrap();
    ok(&[
        "eval-retrieval",
        "--audio",
        p(&a),
        "--video",
        p(&v),
        "--report",
        p(&r),
    ]);
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&r).unwrap()).unwrap();
    assert_eq!(rep["recall_at_1"], 0.0);
    assert_eq!(rep["median_rank"], 2.0);
}

#[test]
fn exit_codes() {
    assert_eq!(avtc(&["compress"]).status.code(), Some(2));
    assert_eq!(avtc(&["no-such-command"]).status.code(), Some(2));
    let missing = avtc(&["compress", "--input", "/nonexistent.avts", "--idealized"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.avts");
    ok(&["gen-synth", "--benchmark", "1", "--output", p(&input)]);
    let bad = avtc(&[
        "compress",
        "--input",
        p(&input),
        "--idealized",
        "--rho-sem",
        "1.5",
    ]);
    assert_eq!(bad.status.code(), Some(1));
    let junk = dir.path().join("junk.avts");
    std::fs::write(&junk, b"garbage!").unwrap();
    assert_eq!(
        avtc(&["inspect", "--input", p(&junk)]).status.code(),
        Some(1)
    );
}
