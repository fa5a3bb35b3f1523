use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_crosstraffic"));
    c.env_remove("NETREPLICA_SEED").env("RUST_LOG", "warn");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two internal hosts exchanging traffic with one external peer for 10 s.
fn write_trace(dir: &Path) -> PathBuf {
    let mut text = String::from("timestamp,src,dst,sport,dport,proto,bytes\n");
    for i in 0..1000 {
        let t = f64::from(i) * 0.01;
        let burst = (i / 50) % 2 == 0;
        text.push_str(&format!("{t:.3},203.0.113.5,10.0.0.1,443,40000,TCP,{}\n", if burst { 1500 } else { 200 }));
        text.push_str(&format!("{:.3},10.0.1.1,203.0.113.5,50000,53,UDP,{}\n", t + 0.005, 300 + i % 7));
    }
    let path = dir.join("trace.csv");
    fs::write(&path, text).unwrap();
    path
}

fn lines(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn transform_counts_windows_per_node_and_direction() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let out = dir.path().join("profiles.jsonl");
    let o = run(&["transform", "--trace", s(&trace), "--internal-prefix", "10.0.0.0/8", "--windows-s", "5", "--stride-s", "5", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut per_key: BTreeMap<(String, String), usize> = BTreeMap::new();
    for p in lines(&out) {
        *per_key.entry((p["prefix"].to_string(), p["direction"].to_string())).or_default() += 1;
    }
    // root, /8, /16, two /24 and two /32 nodes
    assert_eq!(per_key.len(), 7 * 2);
    assert!(per_key.values().all(|&n| n == 2), "{per_key:?}");

    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("profiles.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "transform");
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["params"]["stride_s"], 5.0);
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for out in [&a, &b] {
        let o = run(&["transform", "--trace", s(&trace), "--internal-prefix", "10.0.0.0/8", "--windows-s", "2,5", "--stride-s", "1", "--out", s(out)]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn missing_input_exits_2_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("p.jsonl");
    let o = run(&["transform", "--trace", s(&dir.path().join("absent.csv")), "--internal-prefix", "10.0.0.0/8", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
    assert!(String::from_utf8_lossy(&o.stderr).contains("absent.csv"));
}

#[test]
fn validation_errors_exit_1_and_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t.json");
    let o = run(&["simulate", "--aqm", "red", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--aqm"));
    let o = run(&["simulate", "--rate-bps", "0", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("shaping_rate_bps"));
    let o = run(&["simulate", "--telemetry-ms", "50", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn run_grid_writes_every_trace_with_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let out_dir = dir.path().join("run");
    let o = run(&[
        "run", "--trace", s(&trace), "--internal-prefix", "10.0.0.0/8",
        "--windows-s", "5", "--stride-s", "5", "--limit", "3", "--toggle-min", "0",
        "--rates-bps", "4e6,8e6", "--latencies-ms", "20,60", "--aqms", "fq_codel",
        "--duration-s", "2", "--jobs", "2", "--out-dir", s(&out_dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sims: Vec<String> = fs::read_dir(out_dir.join("sims"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    let traces = sims.iter().filter(|n| !n.ends_with(".manifest.json")).count();
    let manifests = sims.iter().filter(|n| n.ends_with(".manifest.json")).count();
    assert_eq!((traces, manifests), (12, 12));
    let report: Value = serde_json::from_str(&fs::read_to_string(out_dir.join("eval.json")).unwrap()).unwrap();
    assert_eq!(report["traces"].as_array().unwrap().len(), 12);
    for name in ["profiles.jsonl", "selected.jsonl", "trimmed.jsonl", "trim_reports.jsonl", "sample.jsonl"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    // trimmed to the lowest rate
    for r in lines(&out_dir.join("trim_reports.jsonl")) {
        assert_eq!(r["threshold_bps"], 4e6);
    }
}

#[test]
fn empty_sample_skips_simulation() {
    let dir = tempfile::tempdir().unwrap();
    let trace = write_trace(dir.path());
    let out_dir = dir.path().join("run");
    let o = run(&[
        "run", "--trace", s(&trace), "--internal-prefix", "10.0.0.0/8", "--windows-s", "5", "--stride-s", "5",
        "--toggle-min", "90", "--latencies-ms", "20", "--out-dir", s(&out_dir),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out_dir.join("sample.jsonl").exists());
    assert!(!out_dir.join("sims").exists());
}

#[test]
fn stages_compose_and_config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let trace = write_trace(d);
    let profiles = d.join("p.jsonl");
    assert!(run(&["transform", "--trace", s(&trace), "--internal-prefix", "10.0.0.0/8", "--windows-s", "5", "--stride-s", "5", "--out", s(&profiles)]).status.success());

    let store = d.join("store.jsonl");
    assert!(run(&["ingest", "--store", s(&store), "--input", s(&profiles)]).status.success());
    assert!(d.join("store.jsonl.idx").exists());

    let picked = d.join("pick.jsonl");
    let o = run(&["select", "--store", s(&store), "--filter", "direction=DOWN && mean_throughput_bps>0", "--order-by", "pmr:desc", "--limit", "1", "--out", s(&picked)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let picked_rows = lines(&picked);
    assert_eq!(picked_rows.len(), 1);
    assert_eq!(picked_rows[0]["direction"], "DOWN");
    let id = picked_rows[0]["id"].as_str().unwrap().to_string();

    let config = d.join("sim.toml");
    fs::write(&config, "rate_bps = 6e6\nlatency_ms = 30\naqm = \"codel\"\nduration_s = 2\ntelemetry_ms = 10\n").unwrap();
    let trace_out = d.join("sim.json");
    let csv = d.join("sim.csv");
    let o = bin()
        .args(["simulate", "--config", s(&config), "--latency-ms", "40", "--ctp", &id, "--store", s(&store), "--out", s(&trace_out), "--csv", s(&csv)])
        .env("NETREPLICA_SEED", "7")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t: Value = serde_json::from_str(&fs::read_to_string(&trace_out).unwrap()).unwrap();
    let echo = &t["config_echo"];
    assert_eq!(echo["bottleneck"]["shaping_rate_bps"], 6e6);
    assert_eq!(echo["bottleneck"]["base_latency_ms"], 40.0);
    assert_eq!(echo["bottleneck"]["aqm"], "CODEL");
    assert_eq!(echo["app"]["seed"], 7);
    assert_eq!(echo["ctp_id"], id.as_str());
    assert_eq!(t["throughput_bps"].as_array().unwrap().len(), 200);
    assert_eq!(fs::read_to_string(&csv).unwrap().lines().count(), 201);
    let manifest: Value = serde_json::from_str(&fs::read_to_string(d.join("sim.json.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 2);

    let o = run(&["eval", "dtw", "--traces", s(&trace_out), s(&trace_out)]);
    assert!(o.status.success());
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["mean"], 0.0);
}

#[test]
fn trim_and_sample_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let trace = write_trace(d);
    let profiles = d.join("p.jsonl");
    assert!(run(&["transform", "--trace", s(&trace), "--internal-prefix", "10.0.0.0/8", "--windows-s", "5", "--stride-s", "5", "--out", s(&profiles)]).status.success());
    let trimmed = d.join("t.jsonl");
    assert!(run(&["trim", "--input", s(&profiles), "--threshold-bps", "5e5", "--out", s(&trimmed)]).status.success());
    for p in lines(&trimmed) {
        assert!(p["metrics"]["max_throughput_bps"].as_f64().unwrap() <= 5e5);
    }
    assert_eq!(lines(&d.join("t.jsonl.reports.jsonl")).len(), lines(&profiles).len());

    let filtered = d.join("f.jsonl");
    assert!(run(&["trim", "--input", s(&profiles), "--threshold-bps", "5e5", "--filter-only", "--out", s(&filtered)]).status.success());
    assert!(lines(&filtered).len() <= lines(&trimmed).len());

    let a = d.join("s1.jsonl");
    let b = d.join("s2.jsonl");
    for out in [&a, &b] {
        let o = run(&["sample", "--input", s(&profiles), "--toggle-min", "0", "--per-bucket", "2", "--seed", "11", "--out", s(out)]);
        assert!(o.status.success());
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert!(lines(&a).iter().all(|p| p["metrics"]["toggle_count"].is_u64()));

    let o = run(&["sample", "--input", s(&profiles), "--toggle-min", "5", "--toggle-max", "2", "--out", s(&a)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn eval_reads_csv_series_and_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("a.csv"), "1\n2\n3\n4\n").unwrap();
    fs::write(d.join("b.csv"), "10\n11\n12\n13\n").unwrap();
    let o = run(&["eval", "jensen", "--a", s(&d.join("a.csv")), "--b", s(&d.join("b.csv")), "--bins", "4"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["distance"], 1.0);

    fs::write(d.join("ref.csv"), "0,0\n1,0\n0,1\n1,1\n0.5,0.2\n").unwrap();
    fs::write(d.join("cand.csv"), "0.5,0.5\n9,9\n").unwrap();
    let out = d.join("cov.json");
    let o = run(&["eval", "coverage", "--reference", s(&d.join("ref.csv")), "--candidates", s(&d.join("cand.csv")), "--thresholds", "3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["frac_above"][0]["fraction"], 0.5);
    assert!(d.join("cov.json.manifest.json").exists());

    fs::write(d.join("ragged.csv"), "1,2\n3\n").unwrap();
    let o = run(&["eval", "coverage", "--reference", s(&d.join("ragged.csv")), "--candidates", s(&d.join("cand.csv"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_and_version_exit_0() {
    assert!(run(&["--help"]).status.success());
    assert!(run(&["--version"]).status.success());
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
}
