//! End-to-end checks of the binary: determinism of seeded outputs, the
//! documented exit codes, and the headline flows.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_latentcycle"))
}

fn tmp(name: &str) -> PathBuf {
    let mut dir = std::env::temp_dir();
    dir.push(format!("latentcycle-cli-test-{}-{name}", std::process::id()));
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

#[test]
fn faithsim_is_byte_deterministic() {
    let out1 = tmp("f1.csv");
    let out2 = tmp("f2.csv");
    for out in [&out1, &out2] {
        let res = run(&[
            "faithsim",
            "--graphs",
            "10",
            "--nodes",
            "3",
            "--nb",
            "2",
            "--thresholds",
            "0.1",
            "--seed",
            "1",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "same seed must give identical bytes");
    let text = String::from_utf8(a).unwrap();
    assert!(text.contains("tool_version="));
    assert!(text.contains("config_hash="));
}

#[test]
fn tensorcheck_reports_the_odd_order_inconsistency() {
    let out = tmp("tensor.json");
    let res = run(&[
        "tensorcheck",
        "--catalog",
        "latent-vee",
        "--sets",
        "X5,X6|X3,X4|X1,X2",
        "--order",
        "all",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let result = &value["result"];
    assert_eq!(result["graphical_sided_intersection"], true);
    assert_eq!(result["consistent"], false);
    let det = result["numeric_det"].as_f64().unwrap();
    assert!((det - 8.0).abs() < 1e-6, "det {det}");
    let rotations = result["rotations"].as_array().unwrap();
    assert_eq!(rotations.len(), 3);
}

#[test]
fn oracle_discovery_finds_the_cyclic_cluster() {
    let graph_path = tmp("g315.json");
    let res = run(&[
        "simulate",
        "--catalog",
        "confounded-cyclic-cluster",
        "--n",
        "10",
        "--out",
        tmp("unused.csv").to_str().unwrap(),
        "--emit-graph",
        graph_path.to_str().unwrap(),
        "--noise",
        "uniform:-2,2",
        "--feedback-scale",
        "0.05",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let out = tmp("clusters.json");
    let metrics = tmp("metrics.json");
    let res = run(&[
        "discover",
        "--mode",
        "oracle",
        "--graph",
        graph_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--truth",
        graph_path.to_str().unwrap(),
        "--metrics",
        metrics.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let clusters = value["result"]["clusters"].as_array().unwrap();
    let cyclic: Vec<&serde_json::Value> = clusters
        .iter()
        .filter(|c| c["cyclic"] == true)
        .collect();
    assert_eq!(cyclic.len(), 1);
    assert_eq!(cyclic[0]["members"][0], "X3");
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&metrics).unwrap()).unwrap();
    assert_eq!(m["result"]["cyclic_recall"], 1.0);

    // and the evaluate subcommand agrees when fed the written output
    let res = run(&[
        "evaluate",
        "--found",
        out.to_str().unwrap(),
        "--truth",
        graph_path.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("\"cyclic_recall\": 1.0"), "{text}");
}

#[test]
fn vcsgs_gaussian_flow() {
    let data = tmp("chain.csv");
    let res = run(&[
        "simulate",
        "--random-dag",
        "4",
        "--nb",
        "2.0",
        "--n",
        "5000",
        "--seed",
        "5",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let pattern = tmp("pattern.json");
    let res = run(&[
        "vcsgs",
        "--data",
        data.to_str().unwrap(),
        "--alpha",
        "0.01",
        "--mode",
        "gaussian",
        "--tv-l",
        "2.0",
        "--out",
        pattern.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let value: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&pattern).unwrap()).unwrap();
    assert!(value["result"]["labels"].as_array().unwrap().len() == 4);
}

#[test]
fn exit_codes_follow_the_contract() {
    // unknown flag: usage error, exit 2 (clap's default)
    let res = run(&["faithsim", "--definitely-not-a-flag"]);
    assert_eq!(res.status.code(), Some(2));

    // resource guard: exhaustive enumeration beyond the vertex cap, exit 3
    let res = run(&[
        "faithsim",
        "--graphs",
        "2",
        "--nodes",
        "12",
        "--nb",
        "3",
        "--thresholds",
        "0.1",
        "--out",
        tmp("guard.csv").to_str().unwrap(),
    ]);
    assert_eq!(res.status.code(), Some(3), "{}", String::from_utf8_lossy(&res.stderr));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("cap"), "guard message names the cap: {err}");
}
