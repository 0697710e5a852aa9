use std::path::Path;
use std::process::{Command, Output};

fn bwdpp(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwdpp"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn json(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_slice(&std::fs::read(dir.join(name)).unwrap()).unwrap()
}

#[test]
fn gen_writes_companion_files() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert!(bwdpp(p, &["gen", "--kind", "kernel", "--n", "500", "--seed", "7", "-o", "k.csv"]).status.success());
    let rows = std::fs::read_to_string(p.join("k.csv")).unwrap();
    assert_eq!(rows.lines().count(), 500);
    assert!(rows.lines().all(|l| l.split(',').count() == 500));
    let part = json(p, "k.partition.json");
    let sizes: usize = part["block_sizes"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).sum();
    assert_eq!(sizes, 500);
    assert!(part["gamma"].is_u64());

    std::fs::write(
        p.join("segs.json"),
        r#"[{"length": 150, "mean": [0], "cov": [[1]]}, {"length": 150, "mean": [4], "cov": [[1]]}]"#,
    )
    .unwrap();
    assert!(bwdpp(p, &["gen", "--kind", "gaussian", "--segments", "segs.json", "--seed", "1", "-o", "ts.csv"]).status.success());
    assert_eq!(json(p, "ts.truth.json")["changes"], serde_json::json!([150]));
    assert_eq!(std::fs::read_to_string(p.join("ts.csv")).unwrap().lines().count(), 301);
}

#[test]
fn usage_errors_exit_with_two() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(bwdpp(p, &["gen", "--kind", "kernel"]).status.code(), Some(2));
    assert_eq!(bwdpp(p, &["bench", "--kernels", "-3"]).status.code(), Some(2));
    assert_eq!(bwdpp(p, &["bench", "--kernels", "0"]).status.code(), Some(2));
    assert!(bwdpp(p, &["gen", "--kind", "gaussian", "-o", "ts.csv"]).status.success());
    let bad = bwdpp(p, &["detect", "--series", "ts.csv", "--metric", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown metric"));
    assert_eq!(bwdpp(p, &["detect", "--series", "ts.csv", "--sigma", "-1"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_with_one() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert_eq!(bwdpp(p, &["map", "--kernel", "missing.csv"]).status.code(), Some(1));
    assert!(bwdpp(p, &["gen", "--kind", "kernel", "--n", "25", "-o", "k25.csv"]).status.success());
    let out = bwdpp(p, &["map", "--kernel", "k25.csv", "--oracle"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(p.join("neg.csv"), "1,2\n2,1\n").unwrap();
    assert_eq!(bwdpp(p, &["map", "--kernel", "neg.csv"]).status.code(), Some(1));
    std::fs::write(p.join("short.csv"), "1\n2\n3\n").unwrap();
    assert_eq!(bwdpp(p, &["detect", "--series", "short.csv"]).status.code(), Some(1));
}

#[test]
fn map_reports_per_block_trace_and_oracle() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert!(bwdpp(p, &["gen", "--kind", "kernel", "--n", "80", "--seed", "3", "-o", "k.csv"]).status.success());
    assert!(bwdpp(p, &["map", "--kernel", "k.csv", "--mode", "blockwise", "--gamma", "2", "-o", "m.json"]).status.success());
    let m = json(p, "m.json");
    let blocks = m["per_block"].as_array().unwrap();
    assert!(blocks.len() > 1);
    assert!(blocks.iter().all(|b| b["ms"].is_number() && b["range"].as_array().unwrap().len() == 2));
    assert!(m["log_det"].is_number());

    std::fs::write(p.join("tiny.csv"), "2,0.9\n0.9,2\n").unwrap();
    assert!(bwdpp(p, &["map", "--kernel", "tiny.csv", "--mode", "full", "--oracle", "-o", "o.json"]).status.success());
    let o = json(p, "o.json");
    assert_eq!(o["selected"], serde_json::json!([0, 1]));
    assert_eq!(o["oracle_match"], serde_json::json!(true));
}

#[test]
fn detect_and_eval_round_trip() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert!(bwdpp(p, &["gen", "--kind", "gaussian", "--seed", "4", "-o", "ts.csv"]).status.success());
    let out = bwdpp(
        p,
        &["detect", "--series", "ts.csv", "-w", "50", "--sigma", "100", "--gamma", "2", "--metric", "symkl", "-o", "out.json", "--dump-profile", "prof.csv"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(p, "out.json");
    assert!(r["timings_ms"].is_object());
    assert!(r["candidates"].as_array().unwrap().iter().all(|c| c["t"].is_u64()));
    let prof = std::fs::read_to_string(p.join("prof.csv")).unwrap();
    assert!(prof.starts_with("t,d\n"));
    assert_eq!(prof.lines().count(), 1 + 2000 - 100 + 1);

    let out = bwdpp(p, &["eval", "--report", "out.json", "--truth", "ts.truth.json", "--tol", "50", "-o", "e.json"]);
    assert!(out.status.success());
    let e = json(p, "e.json");
    assert!(e["f1"].as_f64().unwrap() >= 0.9);
    assert!(e.get("roc").is_none());

    let out = bwdpp(
        p,
        &["eval", "--report", "out.json", "--truth", "ts.truth.json", "--roc", "--sigma-grid", "10:1000:5", "--series", "ts.csv", "-o", "e2.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let roc = std::fs::read_to_string(p.join("e2.roc.csv")).unwrap();
    assert!(roc.starts_with("sigma,fpr,tpr\n"));
    assert_eq!(roc.lines().count(), 6);
    assert_eq!(json(p, "e2.json")["roc"].as_array().unwrap().len(), 5);

    // A report is not a truth file.
    assert_eq!(bwdpp(p, &["eval", "--report", "out.json", "--truth", "out.json"]).status.code(), Some(1));
}

#[test]
fn event_detection() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert!(bwdpp(p, &["gen", "--kind", "poisson", "--seed", "2", "-o", "ev.csv"]).status.success());
    assert!(bwdpp(p, &["detect", "--events", "ev.csv", "--metric", "glr-poisson", "-o", "r.json"]).status.success());
    let r = json(p, "r.json");
    assert_eq!(r["config"]["metric"], "glr-poisson");
    let truth = json(p, "ev.truth.json")["changes"][0].as_f64().unwrap();
    assert!(r["selected"].as_array().unwrap().iter().any(|t| (t.as_f64().unwrap() - truth).abs() <= 50.0));
    assert_eq!(bwdpp(p, &["detect", "--events", "ev.csv", "--metric", "symkl"]).status.code(), Some(2));
}

#[test]
fn config_file_values_yield_to_flags() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    assert!(bwdpp(p, &["gen", "--kind", "gaussian", "-o", "ts.csv"]).status.success());
    std::fs::write(p.join("c.json"), r#"{"detect": {"window": 40, "sigma": 80, "gamma": 3}}"#).unwrap();
    let out = bwdpp(p, &["--config", "c.json", "detect", "--series", "ts.csv", "--sigma", "120", "--no-timing", "-o", "r.json"]);
    assert!(out.status.success());
    let cfg = &json(p, "r.json")["config"];
    assert_eq!(cfg["window"], 40);
    assert_eq!(cfg["sigma"], 120.0);
    assert_eq!(cfg["gamma"], 3);
    assert!(json(p, "r.json").get("timings_ms").is_none());
    std::fs::write(p.join("bad.json"), r#"{"detect": {"windw": 40}}"#).unwrap();
    assert_eq!(bwdpp(p, &["--config", "bad.json", "detect", "--series", "ts.csv"]).status.code(), Some(2));
}

#[test]
fn bench_writes_report_and_csv() {
    let d = tempfile::tempdir().unwrap();
    let p = d.path();
    let out = bwdpp(p, &["bench", "--kernels", "1", "--n", "100", "--gammas", "0,2", "--seed", "7", "-o", "b.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let b = json(p, "b.json");
    let variants = b["variants"].as_array().unwrap();
    assert_eq!(variants.len(), 2);
    assert!(variants.iter().all(|v| v["kernels"] == 1));
    let csv = std::fs::read_to_string(p.join("b.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 2 * 2);
    assert!(csv.starts_with("variant,gamma,"));
}
