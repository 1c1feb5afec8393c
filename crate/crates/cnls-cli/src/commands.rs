//! The four subcommands.  Each returns the process exit code; errors
//! bubbling out as `Err` are classified by `main` (2 for configuration,
//! 3 for numerical failure).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use cnls::algebra::{
    certify_conditions, check_gauge_invariance, find_diagonal_certificate, CertificateMode,
    CertifyOptions, GaugeReport, HermitianForm, SystemSpec, RESONANCE_TOL,
};
use cnls::asymptotics::{
    amplitude_log_series, build_profile_series, common_xi_grid, compare_pde_ode, fit_decay,
    fit_decay_log, integrate_reduced_adaptive, optimality_check, AdaptiveOptions,
};
use cnls::solver::{integrate, make_initial_data, SolverConfig, Trajectory};
use cnls::spectral::{read_field_snapshot, sobolev_report, write_field_snapshot, Field, Grid};

use crate::config::{self, AnalysisConfig, RunConfig, SystemSource};
use crate::report::{
    write_decay_plot, write_deviation_csv, write_json, write_trajectory_csv, AnalysisReport,
    CheckReport, Manifest,
};

#[derive(Args)]
pub struct CommonSystemArgs {
    /// Configuration file (JSON).
    #[arg(long)]
    pub config: Option<String>,
    /// Builtin system name: example21, example22, single.
    #[arg(long)]
    pub builtin: Option<String>,
    /// λ coefficients, comma separated (forms: 1.5, -i, 1+2i).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// μ coefficients, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub mu: Option<String>,
    /// Masses, comma separated; defaults to the builtin's resonant choice.
    #[arg(long, allow_hyphen_values = true)]
    pub masses: Option<String>,
    /// Diagonal certificate entries, comma separated.
    #[arg(long)]
    pub certificate: Option<String>,
    /// Override config fields, e.g. --set solver.dt=0.005.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub overrides: Vec<String>,
}

impl CommonSystemArgs {
    /// Resolve the run configuration from file/defaults, quick builtin
    /// flags, and --set overrides (applied last).
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = config::load_config(self.config.as_deref(), &[])?;
        if let Some(name) = &self.builtin {
            let lambda = self
                .lambda
                .as_deref()
                .map(config::parse_complex_list)
                .transpose()?
                .unwrap_or_default();
            let mu = self
                .mu
                .as_deref()
                .map(config::parse_complex_list)
                .transpose()?
                .unwrap_or_default();
            let params: Vec<[f64; 2]> = match name.as_str() {
                "example21" | "example_2_1" => {
                    let l = default_if_empty(lambda, vec![minus_i(), minus_i()]);
                    let m = default_if_empty(mu, vec![one(), one()]);
                    check_counts(name, &l, 2, &m, 2)?;
                    l.into_iter().chain(m).map(to_pair).collect()
                }
                "example22" | "example_2_2" => {
                    if !lambda.is_empty() {
                        bail!("builtin example22 takes only --mu coefficients");
                    }
                    let m = default_if_empty(mu, vec![one(), one(), one(), cnls::C64::new(3.0, 0.0)]);
                    if m.len() != 4 {
                        bail!("builtin example22 takes 4 μ coefficients");
                    }
                    m.into_iter().map(to_pair).collect()
                }
                "single" => {
                    if !mu.is_empty() {
                        bail!("builtin single takes only --lambda");
                    }
                    let l = default_if_empty(lambda, vec![minus_i()]);
                    if l.len() != 1 {
                        bail!("builtin single takes 1 λ coefficient");
                    }
                    l.into_iter().map(to_pair).collect()
                }
                other => bail!("unknown builtin {other:?}"),
            };
            let masses = self
                .masses
                .as_deref()
                .map(parse_real_list)
                .transpose()?;
            let certificate = self
                .certificate
                .as_deref()
                .map(parse_real_list)
                .transpose()?;
            config.system = SystemSource::Builtin {
                name: canonical_builtin(name).to_string(),
                params,
                masses,
                certificate,
            };
            // Default data sized to the builtin when the config did not
            // come from a file.
            if self.config.is_none() {
                let n = match canonical_builtin(name) {
                    "example22" => 4,
                    "single" => 1,
                    _ => 2,
                };
                config.data.amplitudes = vec![[0.1, 0.0]; n];
            }
        }
        let value = serde_json::to_value(&config)?;
        let mut value = value;
        for entry in &self.overrides {
            crate::config::apply_override_public(&mut value, entry)?;
        }
        Ok(serde_json::from_value(value).context("config does not match the expected schema")?)
    }
}

fn minus_i() -> cnls::C64 {
    cnls::C64::new(0.0, -1.0)
}

fn one() -> cnls::C64 {
    cnls::C64::new(1.0, 0.0)
}

fn to_pair(z: cnls::C64) -> [f64; 2] {
    [z.re, z.im]
}

fn default_if_empty(v: Vec<cnls::C64>, d: Vec<cnls::C64>) -> Vec<cnls::C64> {
    if v.is_empty() {
        d
    } else {
        v
    }
}

fn check_counts(
    name: &str,
    lambda: &[cnls::C64],
    nl: usize,
    mu: &[cnls::C64],
    nm: usize,
) -> Result<()> {
    if lambda.len() != nl || mu.len() != nm {
        bail!("builtin {name} takes {nl} λ and {nm} μ coefficients");
    }
    Ok(())
}

fn canonical_builtin(name: &str) -> &str {
    match name {
        "example_2_1" => "example21",
        "example_2_2" => "example22",
        other => other,
    }
}

fn parse_real_list(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| anyhow!("cannot parse number {tok:?}"))
        })
        .collect()
}

fn certify_options(analysis: &AnalysisConfig) -> CertifyOptions {
    CertifyOptions {
        n_samples: analysis.sphere_samples,
        tol: analysis.tol,
        seed: analysis.seed,
    }
}

/// Gauge check plus certificate verification or search; shared by
/// `check` and the pre-flight of `simulate`.
struct CheckOutcome {
    report: CheckReport,
    spec: SystemSpec,
    ok: bool,
}

fn run_check(spec: SystemSpec, analysis: &AnalysisConfig, mode: CertificateMode) -> Result<CheckOutcome> {
    let gauge: GaugeReport = check_gauge_invariance(&spec, RESONANCE_TOL);
    let opts = certify_options(analysis);
    let mut spec = spec;

    let (certificate, source): (Option<HermitianForm>, &str) = match spec.certificate.clone() {
        Some(a) => (Some(a), "provided"),
        None => match find_diagonal_certificate(&spec.nonlinearity, mode, opts)? {
            Some(a) => (Some(a), "search"),
            None => (None, "none"),
        },
    };
    let dissipation = match &certificate {
        Some(a) => Some(certify_conditions(&spec.nonlinearity, a, opts)?),
        None => None,
    };

    let verdict = if !gauge.passed {
        "gauge_failure"
    } else {
        match &dissipation {
            None => "no_certificate",
            Some((_, class)) if mode.admits(*class) => "ok",
            Some(_) => "violated",
        }
    };
    let report = CheckReport::build(
        &gauge,
        certificate.as_ref().map(|a| (a, source)),
        dissipation.as_ref().map(|(b, c)| (b, *c)),
        verdict,
    );
    spec.certificate = certificate;
    Ok(CheckOutcome {
        report,
        spec,
        ok: verdict == "ok",
    })
}

fn parse_mode(mode: &str) -> Result<CertificateMode> {
    match mode {
        "sdge" => Ok(CertificateMode::Sdge),
        "decay" => Ok(CertificateMode::Decay),
        other => bail!("unknown mode {other:?} (sdge|decay)"),
    }
}

#[derive(Args)]
pub struct CheckArgs {
    #[command(flatten)]
    pub system: CommonSystemArgs,
    /// Required certificate strength: sdge (Im(F·Az) ≤ 0) or decay
    /// (strict quartic pinch).
    #[arg(long, default_value = "sdge")]
    pub mode: String,
    /// Write check.json into this directory instead of stdout.
    #[arg(long)]
    pub out: Option<String>,
}

pub fn check(args: CheckArgs) -> Result<u8> {
    let config = args.system.resolve()?;
    let spec = config.system.load()?;
    let outcome = run_check(spec, &config.analysis, parse_mode(&args.mode)?)?;
    match &args.out {
        Some(dir) => {
            let dir = Path::new(dir);
            std::fs::create_dir_all(dir)?;
            write_json(&outcome.report, &dir.join("check.json"))?;
        }
        None => println!("{}", serde_json::to_string_pretty(&outcome.report)?),
    }
    emit_check_summary(&outcome.report);
    Ok(if outcome.ok { 0 } else { 1 })
}

fn emit_check_summary(report: &CheckReport) {
    eprintln!(
        "gauge: {} (worst sampled violation {:.2e}); certificate: {}; classification: {}; verdict: {}",
        if report.gauge_passed { "pass" } else { "FAIL" },
        report.sampled_max_violation,
        report.certificate_source,
        report
            .classification
            .map(|c| c.to_string())
            .unwrap_or_else(|| "-".into()),
        report.verdict
    );
}

#[derive(Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub system: CommonSystemArgs,
    /// Run even if the structural check fails.
    #[arg(long)]
    pub force: bool,
    /// Replace an existing non-empty output directory.
    #[arg(long)]
    pub overwrite: bool,
    /// Output directory (defaults to output.dir from the config).
    #[arg(long)]
    pub out: Option<String>,
}

pub fn simulate(args: SimulateArgs) -> Result<u8> {
    let mut config = args.system.resolve()?;
    if let Some(dir) = &args.out {
        config.output.dir = dir.clone();
    }
    if args.overwrite {
        config.output.overwrite = true;
    }
    let dir = prepare_output_dir(&config)?;

    let spec = config.system.load()?;
    let outcome = run_check(spec, &config.analysis, CertificateMode::Sdge)?;
    if !outcome.ok && !args.force {
        write_json(&outcome.report, &dir.join("check.json"))?;
        emit_check_summary(&outcome.report);
        eprintln!("structural check failed; rerun with --force to integrate anyway");
        return Ok(1);
    }
    let spec = outcome.spec;

    let grid = Grid::new(config.grid.half_length, config.grid.n_points)?;
    let u0 = make_initial_data(
        &grid,
        &config.data.kind()?,
        &config.data.amplitudes(),
        config.data.width,
    )?;
    if u0.n_components() != spec.n_components() {
        bail!(
            "data has {} amplitude(s) but the system has {} component(s)",
            u0.n_components(),
            spec.n_components()
        );
    }
    let data_norms = sobolev_report(&u0);
    eprintln!(
        "data sizes: H^(1,0) = {:.4}, H^(0,1) = {:.4}, ε = {:.4}",
        data_norms.h10,
        data_norms.h01,
        data_norms.epsilon()
    );

    let solver_config: SolverConfig = config.solver.to_solver_config(&config.analysis);
    let (trajectory, final_field) = integrate(&spec, &u0, &solver_config, &mut [])?;

    write_run_artifacts(&config, &outcome.report, &trajectory, &final_field, &dir, data_norms)?;
    eprintln!(
        "run complete: {} samples, {} snapshots, final sup-norm {:.4e} at t = {}",
        trajectory.times.len(),
        trajectory.snapshots.len(),
        final_field.sup_norm(),
        final_field.time
    );
    Ok(0)
}

fn prepare_output_dir(config: &RunConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(&config.output.dir);
    if dir.exists() && dir.read_dir().map(|mut d| d.next().is_some()).unwrap_or(false) {
        if !config.output.overwrite {
            bail!(
                "output directory {} is not empty (use --overwrite to replace it)",
                dir.display()
            );
        }
        std::fs::remove_dir_all(&dir)
            .with_context(|| format!("clearing output directory {}", dir.display()))?;
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_run_artifacts(
    config: &RunConfig,
    check: &CheckReport,
    trajectory: &Trajectory,
    final_field: &Field,
    dir: &Path,
    data_norms: cnls::spectral::SobolevReport,
) -> Result<()> {
    write_trajectory_csv(trajectory, &dir.join("trajectory.csv"))?;
    write_field_snapshot(final_field, &dir.join("final.dat"))?;
    let snap_dir = dir.join("snapshots");
    std::fs::create_dir_all(&snap_dir)?;
    for (k, snapshot) in trajectory.snapshots.iter().enumerate() {
        write_field_snapshot(snapshot, &snap_dir.join(format!("snap_{k:03}.dat")))?;
    }
    write_decay_plot(trajectory, config.analysis.t0, &dir.join("plots"))?;
    let check_copy: CheckReport = serde_json::from_value(serde_json::to_value(check)?)?;
    let manifest = Manifest::new(config, check_copy, trajectory, data_norms);
    write_json(&manifest, &dir.join("manifest.json"))?;
    write_json(check, &dir.join("check.json"))?;
    Ok(())
}

#[derive(Args)]
pub struct AnalyzeArgs {
    /// Run directory produced by `simulate`.
    #[arg(long)]
    pub run: String,
    /// Override analysis fields, e.g. --set analysis.s_end=1000.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub overrides: Vec<String>,
}

pub fn analyze(args: AnalyzeArgs) -> Result<u8> {
    let dir = PathBuf::from(&args.run);
    let manifest_path = dir.join("manifest.json");
    if !manifest_path.exists() {
        bail!("{} does not look like a run directory (no manifest.json)", dir.display());
    }
    let manifest: Manifest = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )
    .context("parsing manifest.json")?;
    let mut value = serde_json::to_value(&manifest.config)?;
    for entry in &args.overrides {
        crate::config::apply_override_public(&mut value, entry)?;
    }
    let config: RunConfig = serde_json::from_value(value)?;
    let analysis = &config.analysis;

    // System and certificate, as certified at simulation time.
    let mut spec = config.system.load()?;
    if spec.certificate.is_none() {
        if let Some(kappa) = &manifest.check.certificate_diagonal {
            spec.certificate = Some(HermitianForm::diagonal(kappa)?);
        }
    }

    // Snapshots.
    let snap_dir = dir.join("snapshots");
    let mut snapshot_paths: Vec<PathBuf> = std::fs::read_dir(&snap_dir)
        .with_context(|| format!("run has no snapshot directory {}", snap_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "dat").unwrap_or(false))
        .collect();
    snapshot_paths.sort();
    let mut snapshots = Vec::with_capacity(snapshot_paths.len());
    for path in &snapshot_paths {
        snapshots.push(read_field_snapshot(path)?);
    }
    if snapshots.is_empty() {
        bail!("no snapshots found under {}", snap_dir.display());
    }

    // Profile series on the common frequency grid, starting at t0/5 so
    // the deviation audit sees the remainder-dominated early stretch.
    let reference_field = snapshots.last().unwrap();
    let xi_grid = common_xi_grid(reference_field, &spec.masses, analysis.xi_max, analysis.n_xi)?;
    let early_start = (analysis.t0 / 5.0).max(1.0);
    let series = build_profile_series(&snapshots, &spec.masses, early_start, &xi_grid)?;
    let deviation = compare_pde_ode(&series, &spec.nonlinearity, analysis.ds)?;

    // Reduced extension from the last PDE profile.
    let s0 = series.times.last().unwrap().ln();
    if analysis.s_end <= s0 {
        bail!(
            "analysis.s_end = {} must exceed log(t_end) = {s0:.3}",
            analysis.s_end
        );
    }
    let alpha0 = series.values.last().unwrap().clone();
    let states = integrate_reduced_adaptive(
        &alpha0,
        &spec.nonlinearity,
        (s0, analysis.s_end),
        AdaptiveOptions {
            ds_min: analysis.ds,
            step_safety: analysis.step_safety,
            records_per_decade: analysis.records_per_decade,
        },
    )?;
    let reduced_fit = fit_decay_log(
        &amplitude_log_series(&states),
        (analysis.fit_window_s[0], analysis.fit_window_s[1]),
    )?;

    let certificate = spec
        .certificate
        .clone()
        .ok_or_else(|| anyhow!("no certificate available for the optimality check"))?;
    let c_star = manifest.check.c_star.unwrap_or(0.0);
    let optimality = optimality_check(&states, &certificate, c_star)?;

    // PDE-side sanity fit and the composite norm report.
    let table = crate::report::read_trajectory_csv(&dir.join("trajectory.csv"))?;
    let pde_samples: Vec<(f64, f64)> = table
        .times
        .iter()
        .zip(&table.linf)
        .map(|(t, a)| (*t, *a))
        .collect();
    let pde_fit = fit_decay(&pde_samples, (analysis.t0.max(2.0), config.solver.t_end)).ok();
    let x_t_norm = table
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let bracket = (1.0 + t * t).sqrt();
            bracket.powf(-analysis.gamma) * (table.h1[i] + table.x_weighted[i])
                + bracket.sqrt() * table.linf[i]
        })
        .fold(0.0, f64::max);

    let report = AnalysisReport {
        reduced_fit,
        pde_fit,
        optimality,
        deviation_first: deviation.deviation[0],
        deviation_last: *deviation.deviation.last().unwrap(),
        max_alpha_last: *deviation.max_alpha.last().unwrap(),
        x_t_norm,
        gamma: analysis.gamma,
        s_end: analysis.s_end,
    };
    write_deviation_csv(&deviation, &dir.join("deviation.csv"))?;
    write_json(&report, &dir.join("report.json"))?;

    eprintln!(
        "constrained fit: q = {:.4} (c = {:.4e}); optimality: {} (min s·(α·Aα) = {:.4}, floor {:.4}); \
         deviation at t_end: {:.3e} ({:.2}% of max|α|)",
        report.reduced_fit.constrained.q,
        report.reduced_fit.constrained.c,
        if report.optimality.passed { "passed" } else { "FAILED" },
        report.optimality.liminf_estimate,
        report.optimality.floor,
        report.deviation_last,
        100.0 * report.deviation_last / report.max_alpha_last.max(1e-300)
    );
    Ok(0)
}

#[derive(Args)]
pub struct DemoArgs {
    /// Demo name: example21, example22, single.
    pub name: String,
    /// Output directory (default runs/demo-<name>).
    #[arg(long)]
    pub out: Option<String>,
    /// Override config fields before running.
    #[arg(long = "set", value_name = "PATH=VALUE")]
    pub overrides: Vec<String>,
}

pub fn demo(args: DemoArgs) -> Result<u8> {
    let name = canonical_builtin(&args.name).to_string();
    if !matches!(name.as_str(), "example21" | "example22" | "single") {
        bail!("unknown demo {:?} (example21|example22|single)", args.name);
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| format!("runs/demo-{name}"));
    let common = CommonSystemArgs {
        config: None,
        builtin: Some(name.clone()),
        lambda: None,
        mu: None,
        masses: None,
        certificate: None,
        overrides: args.overrides.clone(),
    };

    let code = simulate(SimulateArgs {
        system: common,
        force: false,
        overwrite: true,
        out: Some(out.clone()),
    })?;
    if code != 0 {
        return Ok(code);
    }
    let code = analyze(AnalyzeArgs {
        run: out.clone(),
        overrides: vec![],
    })?;
    if code != 0 {
        return Ok(code);
    }

    print_demo_summary(&name, Path::new(&out))?;
    Ok(0)
}

fn print_demo_summary(name: &str, dir: &Path) -> Result<()> {
    let manifest: Manifest =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json"))?)?;
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("report.json"))?)?;
    let q = report["reduced_fit"]["constrained"]["q"].as_f64().unwrap_or(f64::NAN);
    let q_free = report["reduced_fit"]["free"]["q"].as_f64();
    let optimality = report["optimality"]["passed"].as_bool().unwrap_or(false);
    let dev = report["deviation_last"].as_f64().unwrap_or(f64::NAN);
    let max_alpha = report["max_alpha_last"].as_f64().unwrap_or(f64::NAN);

    println!();
    println!("demo {name} — summary");
    println!("  {:<28} {}", "gauge invariance", if manifest.check.gauge_passed { "pass" } else { "FAIL" });
    println!(
        "  {:<28} {} ({})",
        "classification",
        manifest
            .check
            .classification
            .map(|c| c.to_string())
            .unwrap_or_else(|| "-".into()),
        manifest.check.certificate_source
    );
    if let (Some(cs), Some(cu)) = (manifest.check.c_star, manifest.check.c_upper) {
        println!("  {:<28} C_* = {cs:.6}, C^* = {cu:.6}", "quartic pinch");
    }
    if let Some(kappa) = &manifest.check.certificate_diagonal {
        let entries: Vec<String> = kappa.iter().map(|k| format!("{k:.4}")).collect();
        println!("  {:<28} diag({})", "certificate", entries.join(", "));
    }
    if let Some(qa) = manifest.qa_max_step_increase {
        println!("  {:<28} {qa:.2e}", "max per-step Q_A increase");
    }
    println!("  {:<28} q = {q:.3} (free fit: {})", "constrained decay fit", match q_free {
        Some(v) => format!("q = {v:.3}"),
        None => "degenerate".into(),
    });
    println!("  {:<28} {}", "optimality lower bound", if optimality { "passed" } else { "FAILED" });
    println!(
        "  {:<28} {dev:.3e} ({:.2}% of max|α|)",
        "PDE/ODE deviation at t_end",
        100.0 * dev / max_alpha.max(1e-300)
    );
    println!("  {:<28} {}", "artifacts", dir.display());
    Ok(())
}
