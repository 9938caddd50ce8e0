use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use discord_core::io::{network_from_json, profile_from_csv};
use discord_core::spectral::decompose;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn discord(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_discord"))
        .args(args)
        .env_remove("DISCORD_SEED")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Parses the solve CSV into (f, a_star, payoff) columns.
fn solve_columns(text: &str) -> Vec<[f64; 3]> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("node"))
        .map(|l| {
            let v: Vec<f64> = l.split(',').skip(1).map(|x| x.parse().unwrap()).collect();
            [v[0], v[1], v[2]]
        })
        .collect()
}

#[test]
fn generate_circle() {
    let text = stdout(&discord(&["generate", "circle", "--n", "20"]));
    let net = network_from_json(&text).unwrap();
    assert_eq!(net.n(), 20);
    assert!(net.validate().is_empty());
    let json: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["manifest"]["command"], "generate");
    assert_eq!(json["manifest"]["inputs"]["kind"], "circle");
}

#[test]
fn generate_blocks_is_connected_and_homophilous() {
    let text = stdout(&discord(&[
        "--seed", "7", "generate", "blocks", "--sizes", "20,20", "--p-in", "0.5", "--p-out", "0.01",
    ]));
    let net = network_from_json(&text).unwrap();
    assert!(net.is_connected());
    let spec = decompose(&net).unwrap();
    assert!(spec.eigenvalue(1) > spec.eigenvalue(2));
    assert!(spec.eigenvalue(1) > 0.5);
    let stored = network_from_json(&std::fs::read_to_string(fixture("blocks20x2.json")).unwrap()).unwrap();
    assert_eq!(net, stored);
}

#[test]
fn seed_environment_variable_wins() {
    let args = ["generate", "blocks", "--sizes", "6,6", "--p-in", "0.8", "--p-out", "0.1"];
    let from_flag = stdout(&discord(&[&["--seed", "5"], &args[..]].concat()));
    let out = Command::new(env!("CARGO_BIN_EXE_discord"))
        .args([&["--seed", "99"], &args[..]].concat())
        .env("DISCORD_SEED", "5")
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap();
    assert_eq!(stdout(&out), from_flag);
}

#[test]
fn generate_rejects_small_circle() {
    let out = discord(&["generate", "circle", "--n", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generate_from_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    std::fs::write(&edges, "i,j,w\n0,1,1\n1,2,1\n2,3,1\n3,0,1\n").unwrap();
    let net = network_from_json(&stdout(&discord(&["generate", "edges", "--n", "4", "--edges", p(&edges)]))).unwrap();
    let circle = network_from_json(&std::fs::read_to_string(fixture("circle4.json")).unwrap()).unwrap();
    assert!((net.weights() - circle.weights()).amax() < 1e-15);

    std::fs::write(&edges, "0,1,1\n0,2,1\n0,3,1\n0,4,1\n").unwrap();
    let out = discord(&["generate", "edges", "--n", "5", "--edges", p(&edges)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_at_beta_zero_returns_ideal_points() {
    let out = discord(&["solve", "--network", p(&fixture("circle4.json")), "--f", p(&fixture("f_circle4.csv")), "--beta", "0"]);
    for [f, a, _] in solve_columns(&stdout(&out)) {
        assert_eq!(f, a);
    }
}

#[test]
fn solve_alternating_profile() {
    let out = discord(&["solve", "--network", p(&fixture("circle4.json")), "--f", p(&fixture("f_circle4.csv")), "--beta", "0.5"]);
    let rows = solve_columns(&stdout(&out));
    for [f, a, _] in rows {
        assert!((a - f / 3.0).abs() < 1e-14);
    }
    let summary = String::from_utf8(out.stderr).unwrap();
    let gap: f64 = summary.split("relative gap ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!(gap <= 1e-10);
}

#[test]
fn solve_rejects_length_mismatch() {
    let out = discord(&["solve", "--network", p(&fixture("circle20.json")), "--f", p(&fixture("f_circle4.csv")), "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = discord(&["solve", "--network", p(&fixture("missing.json")), "--f", p(&fixture("f_circle4.csv")), "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = discord(&["solve", "--network", p(&fixture("circle4.json")), "--f", p(&fixture("f_circle4.csv")), "--beta", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn welfare_summary_is_consistent_on_fixtures() {
    for (net, f) in [("circle4.json", "f_circle4.csv"), ("blocks20x2.json", "f_blocks.csv")] {
        for beta in ["0.3", "0.9"] {
            let out = discord(&["solve", "--network", p(&fixture(net)), "--f", p(&fixture(f)), "--beta", beta]);
            assert!(out.status.success());
            let summary = String::from_utf8(out.stderr).unwrap();
            let gap: f64 = summary.split("relative gap ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
            assert!(gap <= 1e-10, "{net} {beta}: {gap}");
        }
    }
}

#[test]
fn stats_requires_centering() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    std::fs::write(&f, "1\n2\n3\n4\n").unwrap();
    let net = fixture("circle4.json");
    let out = discord(&["stats", "--network", p(&net), "--f", p(&f), "--beta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    let text = stdout(&discord(&["stats", "--network", p(&net), "--f", p(&f), "--beta", "0.5", "--center"]));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["components"].as_array().unwrap().len(), 4);
    assert!(json["welfare"]["relative_gap"].as_f64().unwrap() <= 1e-10);
    assert!(json["cov_neighbors"]["relative_gap"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn intervene_is_byte_identical_across_runs() {
    let (net, f_hat) = (fixture("blocks20x2.json"), fixture("f_blocks.csv"));
    let args = [
        "intervene",
        "--network",
        p(&net),
        "--f-hat",
        p(&f_hat),
        "--beta",
        "0.9",
        "--gamma",
        "malevolent",
        "--budget",
        "1",
    ];
    let a = stdout(&discord(&args));
    let b = stdout(&discord(&args));
    assert_eq!(a, b);
    let json: Value = serde_json::from_str(&a).unwrap();
    let result = &json["result"];
    assert_eq!(result["outcome"], "budget_binding");
    assert!((result["budget_used"].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert!(result["welfare_after"].as_f64().unwrap() < result["welfare_before"].as_f64().unwrap());
    assert_eq!(json["similarity_profile"].as_array().unwrap().len(), 40);
}

#[test]
fn intervene_bliss_handling() {
    let net = fixture("circle4.json");
    let f = fixture("f_circle4.csv");
    let base = ["intervene", "--network", p(&net), "--f-hat", p(&f), "--beta", "0.5", "--gamma", "benevolent", "--budget", "10"];
    let out = discord(&base);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--allow-bliss"));
    let text = stdout(&discord(&[&base[..], &["--allow-bliss"]].concat()));
    let json: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["result"]["outcome"], "bliss");
    assert!(json["result"]["welfare_after"].as_f64().unwrap().abs() < 1e-12);
    // Circle spectra are degenerate; the output says so.
    assert!(!json["result"]["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn spectrum_csv_on_circle() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spectrum.csv");
    let json = stdout(&discord(&["spectrum", "--network", p(&fixture("circle20.json")), "--csv", p(&csv)]));
    let json: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(json["eigenvalues"].as_array().unwrap().len(), 20);

    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("node") && !l.starts_with("lambda"))
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 20);
    for i in 0..20 {
        let j = (i + 1) % 20;
        // u2 changes little between neighbors; u20 flips sign.
        assert!((rows[i][1] - rows[j][1]).abs() < 0.1);
        assert!(rows[i][19] * rows[j][19] < 0.0);
    }
}

#[test]
fn verify_suite_passes_on_fixtures() {
    let out = discord(&["--seed", "1", "verify", "--suite", "all", "--samples", "5000"]);
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["passed"], true);
    let checks = json["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
    assert!(checks.len() >= 30);
}

#[test]
fn verify_on_user_network() {
    let out = discord(&[
        "verify", "--suite", "table", "--network", p(&fixture("blocks20x2.json")), "--beta", "0.5", "--samples", "2000",
    ]);
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["checks"].as_array().unwrap().len(), 1);
}

#[test]
fn fixture_profiles_parse() {
    assert_eq!(profile_from_csv(&std::fs::read_to_string(fixture("f_blocks.csv")).unwrap()).unwrap().len(), 40);
}

#[test]
fn timestamp_follows_source_date_epoch() {
    let out = Command::new(env!("CARGO_BIN_EXE_discord"))
        .args(["generate", "circle", "--n", "3"])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    let json: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["manifest"]["timestamp"], "2023-11-14T22:13:20Z");
}
