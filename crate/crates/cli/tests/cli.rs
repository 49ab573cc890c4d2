use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn linagg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linagg"))
        .args(args)
        .arg("--output")
        .arg(dir)
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn every_subcommand_documents_its_claim() {
    let dir = tempfile::tempdir().unwrap();
    for sub in [
        vec!["smallball"],
        vec!["fejer"],
        vec!["erm"],
        vec!["campaign"],
        vec!["bounds", "theorem-a"],
        vec!["bounds", "theorem2"],
        vec!["bounds", "theorem4"],
        vec!["bounds", "tails"],
        vec!["bounds", "rio"],
    ] {
        let mut args = sub.clone();
        args.push("--help");
        let out = linagg(&args, dir.path());
        assert!(out.status.success(), "{sub:?}");
        let text = String::from_utf8_lossy(&out.stdout);
        assert!(text.contains("Claim") || sub == ["campaign"], "{sub:?}: {text}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_linagg")).arg("manifest").output().unwrap();
    let manifest: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(manifest.get("campaign tail").is_some() && manifest.get("bounds theorem-a").is_some());
}

#[test]
fn theorem_a_example_reports_bound_and_sample_requirement() {
    let dir = tempfile::tempdir().unwrap();
    let out = linagg(
        &["bounds", "theorem-a", "--beta0", "0.125", "--kappa0", "0.9", "--sigma", "1", "--D", "8", "--n", "10000", "--x", "10"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&dir.path().join("bounds-theorem-a-0.json"));
    let r = &doc["result"];
    let expected = (16.0f64 / (0.125 * 0.81)).powi(2) * 8.0 * 10.0 / 10_000.0;
    assert!((r["risk_bound"].as_f64().unwrap() - expected).abs() < 1e-9 * expected);
    assert_eq!(r["n_min"].as_f64().unwrap(), 160_000.0 * 8.0 / (0.125 * 0.125));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["config"]["provenance"]["bounds.beta0"], "flag");
}

#[test]
fn even_fourier_dimension_fails_with_status_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = linagg(&["smallball", "--kind", "fourier", "--D", "4"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("must be odd"), "{}", stderr(&out));
}

#[test]
fn missing_bound_inputs_are_listed_together() {
    let dir = tempfile::tempdir().unwrap();
    let out = linagg(&["bounds", "theorem-a", "--beta0", "0.1"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    for key in ["bounds.kappa0", "bounds.sigma", "bounds.x", "bounds.D", "bounds.n"] {
        assert!(err.contains(key), "{key} missing from {err}");
    }
}

#[test]
fn unknown_config_key_names_the_key_and_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "subcommand = \"fejer\"\n[fejer]\nl = 3\nwidht = 2\n").unwrap();
    let out = linagg(&["--config", cfg.to_str().unwrap(), "fejer"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("fejer.widht") && err.contains("run.toml"), "{err}");
}

#[test]
fn flags_override_the_file_and_provenance_says_so() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "seed = 11\n[erm]\nn = 300\n[dictionary]\nkind = \"histogram\"\ndim = 6\n[problem.noise_sigma]\nkind = \"constant\"\nsigma = 0.5\n",
    )
    .unwrap();
    let out = linagg(&["--config", cfg.to_str().unwrap(), "erm", "--n", "400", "--sigma", "0.25"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let doc = json(&dir.path().join("erm-11.json"));
    let prov = &doc["config"]["provenance"];
    assert_eq!(prov["erm.n"], "flag (overrides file)");
    assert_eq!(prov["problem.noise_sigma"], "flag (overrides file)");
    assert_eq!(prov["seed"], "file");
    assert_eq!(prov["dictionary.kind"], "file");
    assert_eq!(prov["problem.noise_law"], "default");
    assert_eq!(doc["config"]["config"]["erm"]["n"], 400);
    assert_eq!(doc["config"]["config"]["problem"]["noise_sigma"]["sigma"], 0.25);
    assert_eq!(doc["result"]["fit"]["n"], 400);
    let rows = fs::read_to_string(dir.path().join("erm-11.csv")).unwrap();
    assert_eq!(rows.lines().count(), 401);
}

#[test]
fn printed_config_reloads_to_the_same_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = linagg(&["fejer", "--l", "4", "--epsilon", "0.5", "--seed", "2", "--print-config"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let cfg = dir.path().join("printed.toml");
    fs::write(&cfg, &out.stdout).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(linagg(&["fejer", "--l", "4", "--epsilon", "0.5", "--seed", "2"], &a).status.success());
    assert!(linagg(&["--config", cfg.to_str().unwrap(), "fejer"], &b).status.success());
    assert_eq!(fs::read(a.join("fejer-2.csv")).unwrap(), fs::read(b.join("fejer-2.csv")).unwrap());
}

#[test]
fn campaign_artifacts_are_reproducible_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut bodies = Vec::new();
    for workers in ["1", "3"] {
        let sub = dir.path().join(workers);
        let out = linagg(
            &["campaign", "concentration", "--n", "400", "--D", "5,7", "--replicates", "12", "--seed", "5", "--workers", workers],
            &sub,
        );
        assert!(out.status.success(), "{}", stderr(&out));
        let stdout = String::from_utf8_lossy(&out.stdout);
        assert_eq!(stdout.lines().filter(|l| l.starts_with("concentration [")).count(), 2, "{stdout}");
        let doc = json(&sub.join("concentration-5.json"));
        assert_eq!(doc["schema_version"], 1);
        assert_eq!(doc["points"].as_array().unwrap().len(), 2);
        bodies.push(fs::read(sub.join("concentration-5.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
    assert_eq!(String::from_utf8_lossy(&bodies[0]).lines().count(), 1 + 2 * 12);
}

#[test]
fn campaign_grid_needs_both_axes() {
    let dir = tempfile::tempdir().unwrap();
    let out = linagg(&["campaign", "rate", "--n", "400"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let out = linagg(&["campaign", "nonsense", "--n", "400", "--D", "5"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("unknown campaign"));
}
