//! End-to-end tests of the command-line surface: exit-code contract,
//! artifact layout, and bit-identical reproducibility from a manifest.

use std::path::Path;
use std::process::{Command, Output};

fn cnls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cnls"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

/// Overrides shrinking the default pipeline to a second of work.
fn mini_overrides(out_dir: &Path) -> Vec<String> {
    [
        "grid.n_points=1024",
        "grid.half_length=50",
        "solver.t_end=12",
        "solver.observer_stride=100",
        "analysis.t0=4",
        "analysis.s_end=400",
        "analysis.fit_window_s=[5,400]",
        "analysis.sphere_samples=2000",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([format!("output.dir={}", out_dir.display())])
    .collect()
}

fn run_mini_simulate(dir: &Path) -> Output {
    let overrides = mini_overrides(dir);
    let mut args = vec!["simulate", "--builtin", "single", "--overwrite"];
    for o in &overrides {
        args.push("--set");
        args.push(o);
    }
    cnls(&args)
}

#[test]
fn check_passes_for_dissipative_builtin() {
    let out = cnls(&[
        "check",
        "--builtin",
        "example21",
        "--lambda",
        "-i,-i",
        "--mu",
        "1,1",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("strictly_dissipative"));
    assert!(stdout.contains("\"verdict\": \"ok\""));
}

#[test]
fn check_fails_on_broken_mass_resonance() {
    let out = cnls(&[
        "check",
        "--builtin",
        "example21",
        "--lambda",
        "-i,-i",
        "--mu",
        "1,1",
        "--masses",
        "1,2",
    ]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"verdict\": \"gauge_failure\""));
}

#[test]
fn check_detects_antidissipative_sign() {
    let out = cnls(&["check", "--builtin", "single", "--lambda", "i"]);
    assert_eq!(code(&out), 1);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("\"verdict\": \"no_certificate\""));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let out = cnls(&["check", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&out), 2);
    let out = cnls(&["simulate", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn unknown_demo_name_is_a_config_error() {
    let out = cnls(&["demo", "bogus"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn simulate_writes_the_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let out = run_mini_simulate(&run_dir);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    for artifact in [
        "trajectory.csv",
        "manifest.json",
        "check.json",
        "final.dat",
        "plots/decay.dat",
        "plots/decay.gp",
    ] {
        assert!(run_dir.join(artifact).exists(), "missing {artifact}");
    }
    let snapshots: Vec<_> = std::fs::read_dir(run_dir.join("snapshots"))
        .unwrap()
        .collect();
    assert!(snapshots.len() >= 9, "expected a snapshot schedule");
    let header = std::fs::read_to_string(run_dir.join("trajectory.csv")).unwrap();
    assert!(header.starts_with("t,linf,l2_1,h1,a_mass,xweighted"));
}

#[test]
fn simulate_refuses_dirty_output_unless_overwrite() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    std::fs::create_dir_all(&run_dir).unwrap();
    std::fs::write(run_dir.join("keep.txt"), "data").unwrap();
    let overrides = mini_overrides(&run_dir);
    let mut args = vec!["simulate", "--builtin", "single"];
    for o in &overrides {
        args.push("--set");
        args.push(o);
    }
    let out = cnls(&args);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not empty"));
}

#[test]
fn runs_are_bit_identical_from_the_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(code(&run_mini_simulate(&a)), 0);
    assert_eq!(code(&run_mini_simulate(&b)), 0);
    let trajectory_a = std::fs::read(a.join("trajectory.csv")).unwrap();
    let trajectory_b = std::fs::read(b.join("trajectory.csv")).unwrap();
    assert_eq!(trajectory_a, trajectory_b, "trajectory bytes differ");
    let final_a = std::fs::read(a.join("final.dat")).unwrap();
    let final_b = std::fs::read(b.join("final.dat")).unwrap();
    assert_eq!(final_a, final_b, "final snapshot bytes differ");
    // Manifests differ only in the output path; normalize it away.
    let norm = |p: &Path| {
        std::fs::read_to_string(p.join("manifest.json"))
            .unwrap()
            .replace(&p.display().to_string(), "DIR")
    };
    assert_eq!(norm(&a), norm(&b), "manifest bytes differ");
}

#[test]
fn analyze_completes_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    assert_eq!(code(&run_mini_simulate(&run_dir)), 0);
    let out = cnls(&["analyze", "--run", run_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(run_dir.join("report.json").exists());
    assert!(run_dir.join("deviation.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["optimality"]["passed"], serde_json::json!(true));
    let q = report["reduced_fit"]["constrained"]["q"].as_f64().unwrap();
    assert!(q.is_finite());
    let deviation = std::fs::read_to_string(run_dir.join("deviation.csv")).unwrap();
    assert!(deviation.starts_with("t,deviation,max_alpha\n"));
}

#[test]
fn analyze_without_run_directory_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = cnls(&["analyze", "--run", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn blowup_exits_with_numerical_failure_code() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let overrides = [
        "grid.n_points=1024".to_string(),
        "grid.half_length=50".to_string(),
        "solver.t_end=10".to_string(),
        "data.amplitudes=[[3.0,0.0]]".to_string(),
        format!("output.dir={}", run_dir.display()),
    ];
    let mut args = vec![
        "simulate",
        "--builtin",
        "single",
        "--lambda",
        "i",
        "--force",
        "--overwrite",
    ];
    for o in &overrides {
        args.push("--set");
        args.push(o);
    }
    let out = cnls(&args);
    assert_eq!(
        code(&out),
        3,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("blowup"));
}

#[test]
fn no_wrap_refusal_exits_with_numerical_failure_code() {
    let dir = tempfile::tempdir().unwrap();
    let run_dir = dir.path().join("run");
    let overrides = [
        "grid.n_points=1024".to_string(),
        "grid.half_length=20".to_string(),
        "solver.t_end=100".to_string(),
        format!("output.dir={}", run_dir.display()),
    ];
    let mut args = vec!["simulate", "--builtin", "single", "--overwrite"];
    for o in &overrides {
        args.push("--set");
        args.push(o);
    }
    let out = cnls(&args);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-wrap"));
}
