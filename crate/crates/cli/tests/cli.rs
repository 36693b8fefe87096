use std::path::PathBuf;
use std::process::{Command, Output};

use rdcn::metrics::throughput_static;
use rdcn::sched::{evolve, hybrid_network};
use rdcn::topology::de_bruijn;
use rdcn::traffic::DemandMatrix;

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("rdcn-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn rdcn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdcn")).args(args).output().unwrap()
}

fn with_config(name: &str, json: &str, args: &[&str]) -> Output {
    let path = scratch(name).join("config.json");
    std::fs::write(&path, json).unwrap();
    let mut all = vec![args[0], path.to_str().unwrap()];
    all.extend(&args[1..]);
    rdcn(&all)
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

const FIG5: &str = r#"{
  "network": {"kind": "tmt", "n": 8, "spines": [
    {"kind": "static"},
    {"kind": "rotor", "hold": 10},
    {"kind": "demand-aware", "epoch": 10}
  ]},
  "traffic": {"source": "generate", "kind": "uniform", "length": 300, "events_per_slot": 0.5, "size": 10},
  "run": {"horizon": 1000, "seed": 3}
}"#;

#[test]
fn empty_trace_reports_full_coverage() {
    let cfg = r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "rotor", "hold": 3}]}, "run": {"horizon": 20}}"#;
    let r = json(&with_config("empty", cfg, &["simulate"]));
    assert_eq!(r["coverage"], 1.0);
    assert_eq!(r["arrived_volume"], 0.0);
    assert_eq!(r["served_volume"], 0.0);
}

#[test]
fn config_errors_exit_2() {
    let out = rdcn(&["simulate", "/nonexistent/rdcn.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let unknown = r#"{"network": {"kind": "ring", "n": 4}, "run": {"horizon": 1}, "bogus": true}"#;
    assert_eq!(with_config("unknown", unknown, &["metrics"]).status.code(), Some(2));
    let static_sim = r#"{"network": {"kind": "ring", "n": 4}, "run": {"horizon": 1}}"#;
    assert_eq!(with_config("static-sim", static_sim, &["simulate"]).status.code(), Some(2));
    let missing_trace = r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "rotor", "hold": 3}]},
        "traffic": {"source": "file", "path": "/nonexistent/trace.csv"}, "run": {"horizon": 5}}"#;
    assert_eq!(with_config("missing-trace", missing_trace, &["simulate"]).status.code(), Some(2));
    assert_eq!(with_config("zero-horizon", FIG5, &["simulate", "--horizon", "0"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    // time-expanded throughput needs a periodic schedule
    let cfg = r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "demand-aware", "epoch": 4}]},
        "metrics": {"theta": true}, "run": {"horizon": 10}}"#;
    let out = with_config("aperiodic", cfg, &["metrics"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("period"));
}

#[test]
fn fig5_simulates_and_dumps_union_of_matchings() {
    let r = json(&with_config("fig5", FIG5, &["simulate"]));
    assert_eq!(r["flows"].as_array().unwrap().len(), 300);
    assert_eq!(r["coverage"], 1.0);

    let net = hybrid_network(8, 1, 1, 1).unwrap();
    let g = evolve(&net, std::sync::Arc::new(|_| DemandMatrix::uniform(8, 1.0))).unwrap();
    for t in [0u64, 5, 37] {
        let out = with_config("fig5-topo", FIG5, &["topology", "--t", &t.to_string()]);
        assert!(out.status.success());
        let text = String::from_utf8(out.stdout).unwrap();
        let expected = g.graph_at(t).graph.to_adjacency_list();
        assert_eq!(text, format!("# n=8 t={t}\n{expected}"));
        let edges = g.edges_at(t);
        let circuits = g.circuits_at(t);
        assert_eq!(circuits.len(), 24, "three matchings of eight ports");
        assert!(circuits.iter().all(|c| edges.contains(&c.edge())));
    }
}

#[test]
fn de_bruijn_theta_matches_library() {
    let cfg = r#"{"network": {"kind": "de-bruijn", "n": 8}, "metrics": {"theta": true}, "run": {"horizon": 1, "eps": 0.05}}"#;
    let r = json(&with_config("db", cfg, &["metrics"]));
    let theta = r["theta"].as_f64().unwrap();
    let reference = throughput_static(&de_bruijn(8).unwrap().graph, &DemandMatrix::uniform(8, 1.0), 0.01)
        .unwrap()
        .theta;
    assert!((theta - reference).abs() <= 0.06 * reference, "{theta} vs {reference}");
}

#[test]
fn ring_bisection_and_mismatched_matching() {
    let ring = r#"{"network": {"kind": "ring", "n": 4}, "metrics": {"bisection": true}, "run": {"horizon": 1}}"#;
    let r = json(&with_config("ring", ring, &["metrics"]));
    assert_eq!(r["bisection"], 4.0);
    assert!(r["theta"].is_null());

    let mismatched = r#"{"network": {"kind": "tmt", "n": 4, "spines": [{"kind": "static", "matching": [1, 0, 3, 2]}]},
        "metrics": {"theta": true, "demand": {"kind": "permutation", "perm": [2, 3, 0, 1]}}, "run": {"horizon": 1}}"#;
    let r = json(&with_config("mismatch", mismatched, &["metrics"]));
    assert_eq!(r["theta"], 0.0);
}

#[test]
fn metrics_csv_and_out_override() {
    let dir = scratch("csv");
    let target = dir.join("m.csv");
    let cfg = r#"{"network": {"kind": "complete", "n": 4},
        "metrics": {"theta": true, "taxes": true}, "run": {"horizon": 1, "format": "csv"}}"#;
    let out = with_config("csv", cfg, &["metrics", "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&target).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("theta,theta_star,bisection,expected_route_length,bandwidth_tax,latency_tax,coverage")
    );
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[3].parse::<f64>().unwrap(), 1.0);
    assert_eq!(row[1], "");
}

#[test]
fn seed_override_is_deterministic() {
    let a = with_config("seed-a", FIG5, &["simulate", "--seed", "11"]);
    let b = with_config("seed-b", FIG5, &["simulate", "--seed", "11"]);
    let c = with_config("seed-c", FIG5, &["simulate", "--seed", "12"]);
    assert!(a.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn utilization_csv_written() {
    let dir = scratch("util");
    let util = dir.join("u.csv");
    let cfg = format!(
        r#"{{"network": {{"kind": "tmt", "n": 4, "spines": [{{"kind": "rotor", "hold": 2}}]}},
            "traffic": {{"source": "generate", "kind": "permutation", "length": 10, "size": 5}},
            "run": {{"horizon": 30, "utilization": {:?}}}}}"#,
        util.to_str().unwrap()
    );
    assert!(with_config("util", &cfg, &["simulate"]).status.success());
    let text = std::fs::read_to_string(&util).unwrap();
    assert_eq!(text.lines().next(), Some("t,utilization,delivered,relay_bytes,active_flows"));
    assert_eq!(text.lines().count(), 31);
}

#[test]
fn complexity_rows_and_corners() {
    let out = rdcn(&["complexity", "-n", "8", "--length", "20000", "--generate", "round-robin", "--reference"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["source", "n", "length", "temporal", "spatial"]);
    let point = |name: &str| {
        let r = rows.iter().find(|r| r[0] == name).unwrap();
        (r[3].parse::<f64>().unwrap(), r[4].parse::<f64>().unwrap())
    };
    let (t, s) = point("generated:uniform");
    assert!(t >= 0.95 && s >= 0.95);
    let (t, s) = point("generated:constant-pair");
    assert!(t <= 0.05 && s <= 0.05);
    let (t, s) = point("generated:round-robin");
    assert!(t <= 0.1 && s >= 0.95);
}

#[test]
fn complexity_of_trace_file_and_short_trace() {
    let dir = scratch("trace");
    let path = dir.join("t.csv");
    let mut text = String::from("t,src,dst,size\n");
    for i in 0..50 {
        text.push_str(&format!("{i},0,1,1\n"));
    }
    std::fs::write(&path, &text).unwrap();
    let out = rdcn(&["complexity", "-n", "4", "--trace", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "50 events is below 10 n^2");

    for i in 50..200 {
        text.push_str(&format!("{i},{},{},1\n", i % 4, (i + 1) % 4));
    }
    std::fs::write(&path, &text).unwrap();
    let out = rdcn(&["complexity", "-n", "4", "--trace", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);

    assert_eq!(rdcn(&["complexity", "-n", "4", "--generate", "zigzag"]).status.code(), Some(2));
    assert_eq!(rdcn(&["complexity", "-n", "4"]).status.code(), Some(2));
}

#[test]
fn log_level_from_environment() {
    let path = scratch("log").join("config.json");
    std::fs::write(&path, FIG5).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rdcn"))
        .args(["simulate", path.to_str().unwrap()])
        .env("RDCN_LOG", "info")
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("simulating 300 flows"));
}

#[test]
fn shipped_configs_run() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for (file, cmd) in [("fig5.json", "simulate"), ("rotor-metrics.json", "metrics"), ("fat-tree.json", "metrics")] {
        let path = root.join(file);
        let out = rdcn(&[cmd, path.to_str().unwrap()]);
        let r = json(&out);
        assert!(r.is_object(), "{file}");
    }
}
