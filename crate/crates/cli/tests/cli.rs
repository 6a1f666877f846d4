use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn hypercomm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hypercomm"))
        .args(args)
        .current_dir(dir)
        .env("HYPERCOMM_THREADS", "0")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(out.status.success(), "exit {:?}\nstderr: {}", out.status.code(), String::from_utf8_lossy(&out.stderr));
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn manifest(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

fn generate(dir: &Path, prefix: &str, seed: &str) {
    ok(&hypercomm(dir, &["generate", "--scenario", "2", "--n", "30", "--k", "2", "--m", "3", "--r", "3", "--sn", "0.5", "--seed", seed, "--out", prefix]));
}

fn detect_args<'a>(prefix: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["detect", "--input", "g.hg", "--k", "2", "--r", "3", "--sn", "0.5", "--lambda0", "0.0025", "--out", prefix];
    v.extend_from_slice(extra);
    v
}

fn tmp() -> TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn generate_writes_all_files_and_is_reproducible() {
    let d = tmp();
    generate(d.path(), "a", "11");
    generate(d.path(), "b", "11");
    for ext in ["hg", "labels", "alpha.csv"] {
        assert_eq!(read(d.path(), &format!("a.{ext}")), read(d.path(), &format!("b.{ext}")), "{ext}");
    }
    assert!(read(d.path(), "a.hg").starts_with("#n 30 m 3\n"));
    assert_eq!(read(d.path(), "a.labels").lines().count(), 30);
    let alpha = read(d.path(), "a.alpha.csv");
    assert_eq!(alpha.lines().count(), 30);
    assert!(alpha.lines().all(|l| l.split(',').count() == 3));
    let m = manifest(d.path(), "a.manifest.json");
    assert_eq!(m["command"], "generate");
    assert_eq!(m["seed"], 11);
    assert_eq!(m["config"]["s_n"], 0.5);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 3);
}

#[test]
fn generate_rejects_out_of_range_sparsity() {
    let d = tmp();
    let out = hypercomm(d.path(), &["generate", "--scenario", "1", "--n", "20", "--k", "2", "--r", "3", "--sn", "1.5", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!d.path().join("x.hg").exists());
    let out = hypercomm(d.path(), &["generate", "--scenario", "3", "--n", "20", "--k", "2", "--r", "3", "--sn", "0.5", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn detect_outputs_and_non_increasing_trace() {
    let d = tmp();
    generate(d.path(), "g", "4");
    let out = hypercomm(d.path(), &detect_args("d", &["--tol", "1e-4"]));
    ok(&out);
    assert_eq!(read(d.path(), "d.labels").lines().count(), 30);
    assert_eq!(read(d.path(), "d.alpha.csv").lines().count(), 30);

    let trace = read(d.path(), "d.trace.csv");
    let mut lines = trace.lines();
    assert_eq!(lines.next(), Some("iteration,objective,eta"));
    let rows: Vec<(usize, f64, f64)> = lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap())
        })
        .collect();
    assert!(rows.len() >= 2);
    assert!(rows.iter().enumerate().all(|(i, r)| r.0 == i));
    assert!(rows.windows(2).all(|w| w[1].1 <= w[0].1), "objective increased");
    assert!(rows.windows(2).all(|w| w[1].2 <= w[0].2), "learning rate grew");

    let m = manifest(d.path(), "d.manifest.json");
    assert_eq!(m["converged"], true);
    let cfg = &m["config"];
    for key in ["s_n", "lambda0", "lambda1", "eta0"] {
        assert!(cfg[key].is_f64(), "{key} not resolved: {}", cfg[key]);
    }
    assert_eq!(cfg["eta0"], 60.0);
    assert_eq!(cfg["final_objective"].as_f64().unwrap(), rows.last().unwrap().1);
}

#[test]
fn iteration_cap_is_not_an_error() {
    let d = tmp();
    generate(d.path(), "g", "4");
    ok(&hypercomm(d.path(), &detect_args("d", &["--max-iter", "1"])));
    let m = manifest(d.path(), "d.manifest.json");
    assert_eq!(m["converged"], false);
    assert_eq!(m["config"]["outer_iters"], 1);
    assert!(read(d.path(), "d.manifest.json").contains("\"converged\": false"));
}

#[test]
fn replay_reproduces_detect_exactly() {
    let d = tmp();
    generate(d.path(), "g", "5");
    ok(&hypercomm(d.path(), &detect_args("d", &["--seed", "9"])));
    let before: Vec<String> = ["d.labels", "d.alpha.csv", "d.trace.csv"].iter().map(|f| read(d.path(), f)).collect();
    for f in ["d.labels", "d.alpha.csv", "d.trace.csv"] {
        fs::remove_file(d.path().join(f)).unwrap();
    }
    ok(&hypercomm(d.path(), &["replay", "d.manifest.json"]));
    let after: Vec<String> = ["d.labels", "d.alpha.csv", "d.trace.csv"].iter().map(|f| read(d.path(), f)).collect();
    assert_eq!(before, after);
}

#[test]
fn parallel_mode_matches_serial() {
    let d = tmp();
    generate(d.path(), "g", "6");
    ok(&hypercomm(d.path(), &detect_args("s", &[])));
    let out = Command::new(env!("CARGO_BIN_EXE_hypercomm"))
        .args(detect_args("p", &[]))
        .current_dir(d.path())
        .env("HYPERCOMM_THREADS", "2")
        .output()
        .unwrap();
    ok(&out);
    assert_eq!(read(d.path(), "s.alpha.csv"), read(d.path(), "p.alpha.csv"));
    assert_eq!(read(d.path(), "s.trace.csv"), read(d.path(), "p.trace.csv"));
    assert_eq!(manifest(d.path(), "p.manifest.json")["threads"], 2);
}

#[test]
fn detect_usage_and_data_errors() {
    let d = tmp();
    generate(d.path(), "g", "4");
    let code = |args: &[&str]| hypercomm(d.path(), args).status.code();
    assert_eq!(code(&["detect", "--input", "g.hg", "--k", "0", "--r", "3", "--out", "x"]), Some(2));
    assert_eq!(code(&["detect", "--input", "g.hg", "--k", "2", "--r", "3", "--sn", "1.5", "--out", "x"]), Some(2));
    assert_eq!(code(&["detect", "--input", "g.hg", "--k", "2", "--r", "3", "--eta", "-1", "--out", "x"]), Some(2));
    assert_eq!(code(&["detect", "--input", "g.hg", "--k", "2", "--r", "3", "--sn", "often", "--out", "x"]), Some(2));
    assert_eq!(code(&["detect", "--input", "missing.hg", "--k", "2", "--r", "3", "--out", "x"]), Some(3));
    fs::write(d.path().join("bad.hg"), "1 2 3\n4 five\n").unwrap();
    let out = hypercomm(d.path(), &["detect", "--input", "bad.hg", "--k", "2", "--r", "3", "--out", "x"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
    fs::write(d.path().join("singles.hg"), "1\n2\n").unwrap();
    assert_eq!(code(&["detect", "--input", "singles.hg", "--k", "2", "--r", "1", "--min-size", "2", "--out", "x"]), Some(3));
    assert!(!d.path().join("x.labels").exists());
}

#[test]
fn bad_thread_setting_is_a_usage_error() {
    let d = tmp();
    let out = Command::new(env!("CARGO_BIN_EXE_hypercomm"))
        .args(["eval", "--truth", "a", "--pred", "b", "--k", "2"])
        .current_dir(d.path())
        .env("HYPERCOMM_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn automatic_sparsity_uses_filtered_edge_density() {
    let d = tmp();
    let mut text = String::new();
    for i in 1..=12usize {
        text.push_str(&format!("{i}\n"));
        text.push_str(&format!("{} {}\n", i, i % 12 + 1));
        text.push_str(&format!("{} {} {}\n", i, (i + 1) % 12 + 1, (i + 4) % 12 + 1));
    }
    text.push_str("1 2 3 4 5\n");
    fs::write(d.path().join("net.hg"), text).unwrap();
    let args = ["detect", "--input", "net.hg", "--k", "2", "--r", "6", "--sn", "auto", "--min-size", "2", "--max-size", "3", "--out", "m"];
    ok(&hypercomm(d.path(), &args));
    let cfg = &manifest(d.path(), "m.manifest.json")["config"];
    assert_eq!(cfg["edges"], 24);
    assert_eq!(cfg["m"], 3);
    let expected = 24.0 / (66.0 + 220.0);
    assert!((cfg["s_n"].as_f64().unwrap() - expected).abs() < 1e-15);
}

#[test]
fn clique_expansion_flag() {
    let d = tmp();
    fs::write(d.path().join("big.hg"), "1 2 3 4 5\n5 6 7\n6 7 8\n1 8\n").unwrap();
    ok(&hypercomm(d.path(), &["detect", "--input", "big.hg", "--k", "2", "--r", "2", "--sn", "0.3", "--clique-expand", "3", "--out", "c"]));
    let cfg = &manifest(d.path(), "c.manifest.json")["config"];
    assert_eq!(cfg["edges"], 13);
    assert_eq!(cfg["clique_expand"], 3);
}

fn write_labels(dir: &Path, name: &str, labels: &[usize]) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, labels.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
    p
}

#[test]
fn eval_identical_and_relabelled() {
    let d = tmp();
    write_labels(d.path(), "t.labels", &[1, 1, 2, 2, 2]);
    write_labels(d.path(), "p.labels", &[2, 2, 1, 1, 2]);
    let out = hypercomm(d.path(), &["eval", "--truth", "t.labels", "--pred", "t.labels", "--k", "2"]);
    ok(&out);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "hamming_error 0\n");
    let out = hypercomm(d.path(), &["eval", "--truth", "t.labels", "--pred", "p.labels", "--k", "2", "--json"]);
    ok(&out);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["hamming_error"], 0.2);
    assert!(v.get("hellinger").is_none());
}

#[test]
fn eval_length_mismatch_fails() {
    let d = tmp();
    write_labels(d.path(), "t.labels", &vec![1; 100]);
    write_labels(d.path(), "p.labels", &vec![1; 99]);
    let out = hypercomm(d.path(), &["eval", "--truth", "t.labels", "--pred", "p.labels", "--k", "2"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("100"));
    write_labels(d.path(), "q.labels", &vec![3; 100]);
    let out = hypercomm(d.path(), &["eval", "--truth", "t.labels", "--pred", "q.labels", "--k", "2"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_hellinger_with_embeddings() {
    let d = tmp();
    generate(d.path(), "g", "8");
    let base = ["eval", "--truth", "g.labels", "--pred", "g.labels", "--k", "2", "--alpha-true", "g.alpha.csv"];
    let mut args = base.to_vec();
    args.extend(["--alpha-pred", "g.alpha.csv", "--sn", "0.5", "--m", "3", "--json"]);
    let out = hypercomm(d.path(), &args);
    ok(&out);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["hellinger"], 0.0);

    ok(&hypercomm(d.path(), &detect_args("d", &[])));
    let mut args = base.to_vec();
    args.extend(["--alpha-pred", "d.alpha.csv", "--sn", "0.5", "--m", "3"]);
    let out = hypercomm(d.path(), &args);
    ok(&out);
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    let h: f64 = text.lines().nth(1).unwrap().strip_prefix("hellinger ").unwrap().parse().unwrap();
    assert!(h > 0.0 && h < 1.0, "{h}");

    assert_eq!(hypercomm(d.path(), &base).status.code(), Some(2));
}

#[test]
fn bench_single_replication_table() {
    let d = tmp();
    let out = hypercomm(
        d.path(),
        &["bench", "--scenario", "1", "--n-list", "24,30", "--sn-list", "0.3", "--reps", "1", "--r", "3", "--methods", "wptg,shp", "--seed", "2", "--out", "b"],
    );
    ok(&out);
    let csv = read(d.path(), "b.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(hypercomm::eval::CSV_HEADER));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r[5], "0", "sd of one replication");
        assert_eq!(r[6], "1");
    }
    let json: Value = serde_json::from_str(&read(d.path(), "b.json")).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 4);
    let m = manifest(d.path(), "b.manifest.json");
    assert_eq!(m["command"], "bench");
    assert_eq!(m["config"]["grid"].as_array().unwrap().len(), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("WPTG"));
}

#[test]
fn bench_rejects_unsupported_methods() {
    let d = tmp();
    let base = ["bench", "--scenario", "1", "--n-list", "20", "--sn-list", "0.1", "--reps", "1", "--out", "b"];
    let mut args = base.to_vec();
    args.extend(["--methods", "hem,tensor-score"]);
    let out = hypercomm(d.path(), &args);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tensor-score"));
    let mut args = base.to_vec();
    args.extend(["--methods", "louvain"]);
    assert_eq!(hypercomm(d.path(), &args).status.code(), Some(2));
    assert!(!d.path().join("b.csv").exists());
}
