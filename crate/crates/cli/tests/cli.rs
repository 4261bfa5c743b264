use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use laxlab_core::singlattice::{classical_lattice, LatticePoint};
use laxlab_core::{LaxConfig, Window};
use num_complex::Complex64;
use serde_json::Value;
use tempfile::TempDir;

fn laxlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_laxlab"))
        .arg("--output.directory")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn complex(v: &Value) -> Complex64 {
    serde_json::from_value(v.clone()).unwrap()
}

fn reference_points() -> Vec<LatticePoint> {
    classical_lattice(&LaxConfig::reference(), &Window::centered(4.0, 4.0), 12).unwrap().points
}

fn nearest() -> Complex64 {
    reference_points().into_iter().map(|p| p.t).min_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap()
}

#[test]
fn simulate_real_path_has_small_drift() {
    let dir = TempDir::new().unwrap();
    let out = laxlab(dir.path(), &["simulate", "--path.end", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let summary = read_json(&dir.path().join("drift.json"));
    assert_eq!(summary["status"], "ok");
    assert!(summary["drift"]["A"].as_f64().unwrap() < 1e-8);
    assert!(summary["drift"]["B"].as_f64().unwrap() < 1e-8);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t_re,t_im,x_re,x_im,y_re,y_im,z_re,z_im,A_drift,B_drift");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[..8], [0.0, 0.0, 3.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
}

#[test]
fn simulate_into_a_pole_exits_with_blow_up() {
    let dir = TempDir::new().unwrap();
    let t = nearest();
    let end = format!("{},{}", 2.0 * t.re, 2.0 * t.im);
    let out = laxlab(dir.path(), &["simulate", &format!("--path.end={end}")]);
    assert_eq!(code(&out), 3);
    let summary = read_json(&dir.path().join("drift.json"));
    assert_eq!(summary["status"], "blow_up");
    let t_star = complex(&summary["blow_up"]["t_star"]);
    assert!((t_star - t).norm() < 1e-4, "{t_star} vs {t}");
}

#[test]
fn malformed_config_names_the_field() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"lax": {"a": "one", "x0": [3, 0], "y0": [1, 0], "z0": [1, 0]}}"#).unwrap();
    let out = laxlab(dir.path(), &["--config", cfg.to_str().unwrap(), "lattice"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("lax.a"));

    fs::write(&cfg, r#"{"scan": {"resolutoin": 32}}"#).unwrap();
    let out = laxlab(dir.path(), &["--config", cfg.to_str().unwrap(), "lattice"]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("resolutoin"));

    fs::write(&cfg, "{ not json").unwrap();
    let out = laxlab(dir.path(), &["--config", cfg.to_str().unwrap(), "lattice"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_flags_are_config_errors() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["--scan.resolution", "8", "scan"][..],
        &["--lattice.mn_bound", "0", "lattice"],
        &["--lax.a", "0", "lattice"],
        &["--lax.x0", "three", "lattice"],
        &["--output.formats", "", "lattice"],
        &["refine", "--t-guess", "nowhere"],
        &["--no-such-flag", "lattice"],
    ] {
        assert_eq!(code(&laxlab(dir.path(), args)), 2, "{args:?}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_laxlab"))
        .env("LAXLAB_THREADS", "zero")
        .args(["--output.directory", dir.path().to_str().unwrap(), "lattice"])
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}

#[test]
fn lattice_report_coincides_and_round_trips() {
    let dir = TempDir::new().unwrap();
    let out = laxlab(dir.path(), &["lattice"]);
    assert_eq!(code(&out), 0);
    let report = read_json(&dir.path().join("lattice.json"));
    assert_eq!(report["coincident"], true);
    assert!(report["match"]["max_distance"].as_f64().unwrap() < 1e-6);
    let points: Vec<LatticePoint> = serde_json::from_value(report["points"].clone()).unwrap();
    assert_eq!(points, reference_points());
    let rh: Vec<LatticePoint> = serde_json::from_value(report["rh_points"].clone()).unwrap();
    assert_eq!(rh.len(), 42);
    let csv = fs::read_to_string(dir.path().join("lattice.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 84);
    assert_eq!(csv.lines().next().unwrap(), "t_re,t_im,m,n,source");
}

#[test]
fn degenerate_curve_exits_four() {
    let dir = TempDir::new().unwrap();
    // A = 4, B = 4, a = 1: A^2 = 4a^2 B.
    let out = laxlab(dir.path(), &["--lax.x0", "2", "--lax.y0", "0", "--lax.z0", "2", "lattice"]);
    assert_eq!(code(&out), 4);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let args = [
        "--window.re_min=-1",
        "--window.re_max=1",
        "--window.im_min=-1",
        "--window.im_max=1",
        "--scan.resolution",
        "16",
        "--scan.N",
        "16",
    ];
    for dir in [&a, &b] {
        assert_eq!(code(&laxlab(dir.path(), &[&args[..], &["lattice"]].concat())), 0);
        assert_eq!(code(&laxlab(dir.path(), &[&args[..], &["scan"]].concat())), 0);
    }
    for name in ["lattice.json", "lattice.csv", "scan.csv", "candidates.json"] {
        let (x, y) = (fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs");
    }
    // One thread gives the same heatmap as the default pool.
    let c = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_laxlab"))
        .env("LAXLAB_THREADS", "1")
        .args(["--output.directory", c.path().to_str().unwrap()])
        .args(args)
        .arg("scan")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0);
    assert_eq!(fs::read(a.path().join("scan.csv")).unwrap(), fs::read(c.path().join("scan.csv")).unwrap());
}

#[test]
fn formats_select_written_files() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&laxlab(dir.path(), &["--output.formats", "json", "lattice"])), 0);
    assert!(dir.path().join("lattice.json").exists());
    assert!(!dir.path().join("lattice.csv").exists());
}

#[test]
fn scan_over_reference_window_finds_every_lattice_point() {
    let dir = TempDir::new().unwrap();
    let out = laxlab(dir.path(), &["scan"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let file = read_json(&dir.path().join("candidates.json"));
    let candidates = file["candidates"].as_array().unwrap();
    let lattice = reference_points();
    assert_eq!(file["lattice_points_in_window"], lattice.len());
    assert_eq!(candidates.len(), lattice.len());
    for cand in candidates {
        let t = complex(&cand["t"]);
        assert!(lattice.iter().any(|p| (p.t - t).norm() < 1e-5), "{t}");
    }
    let csv = fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 64 * 64);
    assert_eq!(csv.lines().next().unwrap(), "t_re,t_im,sigma_min");
}

#[test]
fn refine_from_perturbed_guess_lands_on_lattice() {
    let dir = TempDir::new().unwrap();
    let t = nearest() + Complex64::new(0.03, -0.02);
    let out = laxlab(dir.path(), &["refine", &format!("--t-guess={},{}", t.re, t.im)]);
    assert_eq!(code(&out), 0);
    let file = read_json(&dir.path().join("refined.json"));
    let refined = complex(&file["refined"]["point"]["t"]);
    assert!((refined - nearest()).norm() < 1e-5);
    assert!(file["nearest_lattice_point"]["distance"].as_f64().unwrap() < 1e-5);
}

#[test]
fn verify_passes_on_reference() {
    let dir = TempDir::new().unwrap();
    let out = laxlab(dir.path(), &["verify"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
    let report = read_json(&dir.path().join("verify.json"));
    let checks = report["checks"].as_array().unwrap();
    for suite in ["elliptic", "surfaces", "flow", "lattice", "toeplitz"] {
        assert!(checks.iter().any(|c| c["suite"] == suite), "{suite}");
    }
}
