use std::path::Path;
use std::process::{Command, Output};

use seli_geometry::geometry::GEOMETRY_COLUMNS;
use seli_geometry::gmm::GMM_COLUMNS;
use seli_geometry::ufm::TRACE_COLUMNS;

fn seli(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seli")).args(args).arg("--out").arg(out).output().expect("spawn seli")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn svd_verify_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let ok = seli(&["svd-verify"], tmp.path());
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "svd_verify.json")).unwrap();
    assert!(report["max_reconstruction_rel"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["passed"], true);

    let minimal = tmp.path().join("minimal");
    assert_eq!(code(&seli(&["svd-verify", "--set", "ks=[2]", "--set", "rhos=[0.5]"], &minimal)), 0);
    let faulty = tmp.path().join("fault");
    assert_eq!(code(&seli(&["svd-verify", "--set", "fault=1e-3"], &faulty)), 1);
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&seli(&["geometry", "--set", "no_such_key=1"], tmp.path())), 2);
    assert_eq!(code(&seli(&["geometry", "--set", "points"], tmp.path())), 2);
    assert_eq!(code(&seli(&["train", "--set", "lr=0"], tmp.path())), 2);
    assert_eq!(code(&seli(&["gmm", "--set", "samples=0"], tmp.path())), 2);
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "k = \"ten\"\n").unwrap();
    assert_eq!(code(&seli(&["geometry", "--config", bad.to_str().unwrap()], tmp.path())), 2);
    assert_eq!(code(&seli(&["geometry", "--config", "/nonexistent/x.toml"], tmp.path())), 2);
}

#[test]
fn divergence_exits_three_and_keeps_the_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let o = seli(&["train", "--set", "lr=1e300", "--set", "epochs=50", "--set", "init_std=1.0"], tmp.path());
    assert_eq!(code(&o), 3);
    assert!(tmp.path().join("manifest.toml").exists());
    assert!(read(tmp.path(), "trace.csv").starts_with(&TRACE_COLUMNS.join(",")));
}

#[test]
fn geometry_schema_and_rows() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&seli(&["geometry", "--set", "points=13"], tmp.path())), 0);
    let csv = read(tmp.path(), "geometry.csv");
    assert_eq!(csv.lines().next().unwrap(), GEOMETRY_COLUMNS.join(","));
    let all = rows(&csv);
    assert_eq!(all.len(), 26);
    let at = |loss: &str, gamma: f64| {
        all.iter().find(|r| r[4] == loss && r[0].parse::<f64>().unwrap() == gamma).unwrap().clone()
    };
    assert_eq!(at("cdt", 0.0)[5..], at("ldt", 0.0)[5..]);
    let etf = at("ldt", 0.5);
    for c in &etf[7..13] {
        assert!((c.parse::<f64>().unwrap() + 1.0 / 9.0).abs() < 1e-10, "{etf:?}");
    }
}

#[test]
fn train_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&seli(&["train", "--set", "epochs=1"], tmp.path())), 0);
    let trace = read(tmp.path(), "trace.csv");
    assert_eq!(trace.lines().next().unwrap(), TRACE_COLUMNS.join(","));
    assert_eq!(rows(&trace).len(), 1);
    let stats = read(tmp.path(), "final_stats.csv");
    assert_eq!(stats.lines().next().unwrap(), format!("{},source", GEOMETRY_COLUMNS.join(",")));
    let sources: Vec<String> = rows(&stats).into_iter().map(|r| r.last().unwrap().clone()).collect();
    assert_eq!(sources, ["theory", "trained"]);
}

#[test]
fn gmm_and_rldt_tables() {
    let tmp = tempfile::tempdir().unwrap();
    let one = tmp.path().join("one");
    assert_eq!(code(&seli(&["gmm", "--set", "gammas=[0.5]", "--set", "losses=[\"ldt\"]", "--set", "samples=5000"], &one)), 0);
    let csv = read(&one, "gmm.csv");
    assert_eq!(csv.lines().next().unwrap(), GMM_COLUMNS.join(","));
    assert_eq!(rows(&csv).len(), 1);

    let r = tmp.path().join("rldt");
    assert_eq!(code(&seli(&["rldt", "--set", "samples=5000"], &r)), 0);
    let table = rows(&read(&r, "rldt.csv"));
    let betas: Vec<f64> = table.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(betas, [-1.0, -0.75, -0.5, -0.25, 0.0, 0.25, 0.5, 0.75, 1.0]);
    let base = table.iter().find(|r| r[2] == "0").unwrap();
    assert_eq!(base[6..10], rows(&csv)[0][6..10]);
}

#[test]
fn manifest_records_the_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.toml");
    std::fs::write(&cfg, "points = 5\ngamma_max = 1.0\n").unwrap();
    let out = tmp.path().join("run");
    let o = seli(&["geometry", "--config", cfg.to_str().unwrap(), "--set", "points=7", "--seed", "42"], &out);
    assert_eq!(code(&o), 0);
    let manifest: toml::Table = read(&out, "manifest.toml").parse().unwrap();
    assert_eq!(manifest["points"].as_integer(), Some(7));
    assert_eq!(manifest["gamma_max"].as_float(), Some(1.0));
    assert_eq!(manifest["seed"].as_integer(), Some(42));
    assert_eq!(manifest["manifest"]["command"].as_str(), Some("geometry"));
    assert_eq!(manifest["manifest"]["version"].as_str(), Some(env!("CARGO_PKG_VERSION")));
    assert_eq!(rows(&read(&out, "geometry.csv")).len(), 14);
    assert!(std::fs::read_dir(&out).unwrap().all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn binary_lemma_and_certify_pass() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&seli(&["binary-lemma", "--set", "instances=3"], tmp.path())), 0);
    assert_eq!(rows(&read(tmp.path(), "binary_lemma.csv")).len(), 9);
    assert_eq!(code(&seli(&["certify", "--set", "losses=[\"cdt\", \"ldt\", \"ce\"]"], tmp.path())), 0);
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "certify.json")).unwrap();
    assert_eq!(report["passed"], true);
}
