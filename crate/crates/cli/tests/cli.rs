use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use mixgeo::wim::{second_order_limit, MetricMatrix, Provenance};
use mixgeo::{QuadratureSpec, SimplexPoint};
use serde_json::Value;

fn mixgeo(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixgeo"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .arg("--quiet")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let o = mixgeo(dir, args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

/// Data rows of a CSV file, skipping comment and header lines.
fn csv(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn wim_model_writes_metric_matrices() {
    let dir = tempfile::tempdir().unwrap();
    let model = dir.path().join("m.json");
    std::fs::write(&model, r#"{"family":"gaussian","means":[0,1,2],"scales":[0.1,0.1,0.1],"weights":[0.2,0.5,0.3]}"#)
        .unwrap();
    let out = dir.path().join("out");
    ok(&out, &["wim", "--model", model.to_str().unwrap(), "--limits", "fisher,wasserstein"]);
    for (file, prov) in [
        ("limit_fisher.json", Provenance::FisherLimit),
        ("limit_wasserstein.json", Provenance::WassersteinLimit),
        ("wim.json", Provenance::NumericWasserstein),
        ("fim.json", Provenance::NumericFisher),
    ] {
        let m: MetricMatrix = serde_json::from_str(&std::fs::read_to_string(out.join(file)).unwrap()).unwrap();
        assert_eq!(m.provenance, prov);
        assert_eq!(m.n(), 2);
    }
    let rows = csv(&out.join("ratios.csv"));
    // fisher is tridiagonal: (0,0), (0,1), (1,1); wasserstein contributes two diagonals
    assert_eq!(rows.len(), 5);
    for r in rows.iter().filter(|r| r[0] == "fisher") {
        assert!(f(&r[5]).abs() < 1e-3, "{r:?}");
    }
}

#[test]
fn sigma_sweep_error_decreases() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["wim", "--sweep-sigma", "0.1,0.07,0.05,0.03", "--gap", "1"]);
    let errs: Vec<f64> = csv(&dir.path().join("sweep.csv")).iter().map(|r| f(&r[3])).collect();
    assert_eq!(errs.len(), 4);
    assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
}

#[test]
fn second_order_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["wim", "--second-order", "--sigma", "0.05"]);
    let m: MetricMatrix =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("second_order.json")).unwrap()).unwrap();
    let p = SimplexPoint::new(vec![0.3, 0.7]).unwrap();
    let expect = second_order_limit(&p, 0.05, 1.0, &QuadratureSpec::default()).unwrap();
    assert_eq!(m, expect);
}

#[test]
fn wim_without_a_mode_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mixgeo(dir.path(), &["wim"]).status.code(), Some(1));
}

#[test]
fn asymptotics_constants() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["asymptotics", "--k", "1,3"]);
    let rows = csv(&dir.path().join("g.csv"));
    let one = rows.iter().find(|r| f(&r[0]) == 1.0).unwrap();
    assert!((f(&one[1]) - PI / 2.0).abs() < 1e-10);
    assert!((f(&one[3]) - PI.powi(3) / 8.0).abs() < 1e-8);
    let d2 = csv(&dir.path().join("delta2.csv"));
    assert_eq!(d2.len(), 2 * 4);
    // Δ₂ ratios approach g(k) as σ shrinks
    for k in ["1e0", "3e0"] {
        let gaps: Vec<f64> = d2.iter().filter(|r| r[0] == k).map(|r| f(&r[4]).abs()).collect();
        assert!(gaps.last().unwrap() < gaps.first().unwrap(), "{k}: {gaps:?}");
    }
    assert!(dir.path().join("asymptotics.json").exists());
}

fn last_row(path: &Path) -> Vec<f64> {
    csv(path).last().unwrap().iter().map(|s| f(s)).collect()
}

#[test]
fn entropy_flow_reaches_uniform() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["flow", "--energy", "entropy", "--p0", "0.2,0.3,0.5", "--t-end", "20"]);
    let last = last_row(&dir.path().join("trajectory.csv"));
    assert_eq!(last[0], 20.0);
    for p in &last[1..] {
        assert!((p - 1.0 / 3.0).abs() < 1e-3, "{last:?}");
    }
    let s = json(&dir.path().join("flow.json"));
    assert!(s["final_energy"].as_f64().unwrap() < s["initial_energy"].as_f64().unwrap());
    assert!(s["mass_drift"].as_f64().unwrap().abs() < 1e-13);
}

#[test]
fn potential_flow_transfers_mass_downhill() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["flow", "--energy", "potential", "--p0", "0.5,0.5", "--potential", "0,1", "--t-end", "1", "--stride", "1"]);
    let p1: Vec<f64> = csv(&dir.path().join("trajectory.csv")).iter().map(|r| f(&r[1])).collect();
    assert!(p1.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn potential_flow_past_extinction_is_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixgeo(dir.path(), &["flow", "--energy", "potential", "--p0", "0.5,0.5", "--potential", "0,1", "--t-end", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("at t = 1.5"), "{err}");
}

#[test]
fn zero_energy_is_static() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["flow", "--energy", "zero"]);
    for r in csv(&dir.path().join("trajectory.csv")) {
        assert_eq!(r[1..], ["2e-1", "3e-1", "5e-1"]);
    }
}

#[test]
fn output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        ok(d, &["flow", "--energy", "entropy", "--no-timestamp"]);
    }
    for file in ["trajectory.csv", "flow.json", "flow.svg"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let c = dir.path().join("c");
    ok(&c, &["flow", "--energy", "entropy"]);
    let stamped = std::fs::read_to_string(c.join("trajectory.csv")).unwrap();
    let plain = std::fs::read_to_string(a.join("trajectory.csv")).unwrap();
    let (first, rest) = stamped.split_once('\n').unwrap();
    assert!(first.starts_with("# generated by mixgeo"));
    assert_eq!(rest, plain);
}

#[test]
fn format_flag_filters_outputs() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["flow", "--format", "csv"]);
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["trajectory.csv"]);
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"no_timestamp": true, "flow": {"energy": "zero", "p0": [0.25, 0.75], "t_end": 1}}"#).unwrap();
    let out = dir.path().join("out");
    ok(&out, &["flow", "--config", cfg.to_str().unwrap(), "--t-end", "2"]);
    let text = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(text.starts_with("t,p_1,p_2\n"));
    assert_eq!(last_row(&out.join("trajectory.csv")), [2.0, 0.25, 0.75]);
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"flow": {"timestep": 0.1}}"#).unwrap();
    let o = mixgeo(&dir.path().join("out"), &["flow", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("timestep"));
}

#[test]
fn unwritable_output_fails_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = mixgeo(&blocker.join("sub"), &["heat2d"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_flags_are_validation_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(mixgeo(dir.path(), &["flow", "--dt", "abc"]).status.code(), Some(1));
    assert_eq!(mixgeo(dir.path(), &["flow", "--p0", "0.5,0.6"]).status.code(), Some(1));
    assert_eq!(mixgeo(dir.path(), &["flow", "--method", "midpoint"]).status.code(), Some(1));
}

#[test]
fn heat1d_defaults_track_crank_nicolson() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["heat1d"]);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["dx"].as_f64().unwrap(), 0.1);
    assert!(s["worst_relative_error"].as_f64().unwrap() < 5e-3);
    assert_eq!(csv(&dir.path().join("error.csv")).len(), 11);
    assert_eq!(csv(&dir.path().join("snapshots.csv")).len(), 11 * 100);
    for f in ["overlay.svg", "error.svg"] {
        assert!(std::fs::read_to_string(dir.path().join(f)).unwrap().starts_with("<svg"));
    }
}

#[test]
fn heat1d_rk4_variant() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["heat1d", "--method", "rk4", "--t-end", "0.5"]);
    let s = json(&dir.path().join("summary.json"));
    assert_eq!(s["method"], "rk4");
    assert!(s["worst_relative_error"].as_f64().unwrap() < 5e-3);
}

#[test]
fn heat2d_short_run() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["heat2d", "--t-end", "0.1"]);
    let s = json(&dir.path().join("summary.json"));
    assert!(s["worst_relative_error"].as_f64().unwrap() < 5e-3);
    let m = (s["final_mass"].as_f64().unwrap() - s["initial_mass"].as_f64().unwrap()).abs();
    assert!(m < 1e-12);
    let text = std::fs::read_to_string(dir.path().join("scheme_final.csv")).unwrap();
    assert!(text.contains("# nx=100"));
}

#[test]
fn extended_defaults_collapse_to_minima() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["extended"]);
    let s = json(&dir.path().join("extended.json"));
    let mu: Vec<f64> = s["last"]["mu"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(mu.len(), 2);
    assert!((mu[0] + PI / 2.0).abs() < 1e-2 && (mu[1] - 1.5 * PI).abs() < 1e-2, "{mu:?}");
    assert_eq!(csv(&dir.path().join("merges.csv")).len(), 1);
    let last = csv(&dir.path().join("trajectory.csv")).pop().unwrap();
    assert_eq!(last.len(), 7);
    assert_eq!(last[2], "");
    assert_eq!(last[5], "");
}

#[test]
fn extended_single_component_relaxes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["extended", "--p", "1", "--mu", "1", "--potential", "quadratic", "--t-end", "10"]);
    let last = last_row(&dir.path().join("trajectory.csv"));
    assert!(last[2].abs() < 1e-3, "{last:?}");
}

#[test]
fn verify_single_criterion_passes() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["verify", "--criterion", "1", "--tolerance", "1.g_at_1=1e-6"]);
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["passed"], true);
    let checks = r["criteria"][0]["checks"].as_array().unwrap();
    let g = checks.iter().find(|c| c["name"] == "g_at_1").unwrap();
    assert_eq!(g["overridden"], true);
    assert_eq!(g["tolerance"].as_f64().unwrap(), 1e-6);
}

#[test]
fn verify_catches_wrong_k_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let o = mixgeo(dir.path(), &["verify", "--criterion", "laplace-limit", "--k-exponent-factor", "1.1"]);
    assert_eq!(o.status.code(), Some(3));
    let r = json(&dir.path().join("report.json"));
    assert_eq!(r["criteria"][0]["passed"], false);
    let o = mixgeo(dir.path(), &["verify", "--criterion", "laplace-limit"]);
    assert_eq!(o.status.code(), Some(0));
}
