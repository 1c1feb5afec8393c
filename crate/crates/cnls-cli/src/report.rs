//! Machine-readable artifacts of a run: reports, the trajectory CSV,
//! the run manifest, and gnuplot-ready decay data.  All numbers are
//! written in shortest round-trip scientific form so that rerunning a
//! manifest reproduces every file byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use cnls::algebra::{Classification, DissipationBounds, GaugeReport, HermitianForm};
use cnls::asymptotics::{DeviationSeries, FitReport, OptimalityReport};
use cnls::solver::{GuardReport, Trajectory};
use cnls::spectral::SobolevReport;

use crate::config::RunConfig;

#[derive(Debug, Serialize, Deserialize)]
pub struct MonomialLine {
    pub index: usize,
    pub target: usize,
    pub factors: [usize; 3],
    pub sigma: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub gauge_passed: bool,
    pub sampled_max_violation: f64,
    pub monomials: Vec<MonomialLine>,
    /// `provided`, `search`, or `none`.
    pub certificate_source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate_diagonal: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classification: Option<Classification>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_violation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_used: Option<usize>,
    /// `ok`, `gauge_failure`, `no_certificate`, or `violated`.
    pub verdict: String,
}

impl CheckReport {
    pub fn build(
        gauge: &GaugeReport,
        certificate: Option<(&HermitianForm, &str)>,
        dissipation: Option<(&DissipationBounds, Classification)>,
        verdict: &str,
    ) -> Self {
        let monomials = gauge
            .monomials
            .iter()
            .map(|m| MonomialLine {
                index: m.index,
                target: m.target + 1,
                factors: [m.factors[0] + 1, m.factors[1] + 1, m.factors[2] + 1],
                sigma: m.sigma.clone(),
                residual: m.residual,
                passed: m.passed,
            })
            .collect();
        CheckReport {
            gauge_passed: gauge.passed,
            sampled_max_violation: gauge.sampled_max_violation,
            monomials,
            certificate_source: certificate
                .map(|(_, source)| source.to_string())
                .unwrap_or_else(|| "none".into()),
            certificate_diagonal: certificate.and_then(|(a, _)| a.as_diagonal()),
            lambda_min: certificate.map(|(a, _)| a.lambda_min()),
            lambda_max: certificate.map(|(a, _)| a.lambda_max()),
            classification: dissipation.map(|(_, class)| class),
            c_star: dissipation.map(|(b, _)| b.c_star),
            c_upper: dissipation.map(|(b, _)| b.c_upper),
            max_violation: dissipation.map(|(b, _)| b.max_violation),
            samples_used: dissipation.map(|(b, _)| b.samples_used),
            verdict: verdict.to_string(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub check: CheckReport,
    pub guard: Option<GuardLine>,
    pub aliasing_flagged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qa_max_step_increase: Option<f64>,
    pub data_h10: f64,
    pub data_h01: f64,
    pub snapshot_count: usize,
}

impl Manifest {
    pub fn new(
        config: &RunConfig,
        check: CheckReport,
        trajectory: &Trajectory,
        data_norms: SobolevReport,
    ) -> Self {
        Manifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            check,
            guard: trajectory.guard.map(GuardLine::from),
            aliasing_flagged: trajectory.aliasing_flagged,
            qa_max_step_increase: trajectory.qa_max_step_increase,
            data_h10: data_norms.h10,
            data_h01: data_norms.h01,
            snapshot_count: trajectory.snapshots.len(),
        }
    }
}

/// Mirror of the library guard report that can also be read back from a
/// manifest.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GuardLine {
    pub eta_significant: f64,
    pub support_radius: f64,
    pub transport: f64,
    pub margin: f64,
    pub satisfied: bool,
}

impl From<GuardReport> for GuardLine {
    fn from(g: GuardReport) -> Self {
        GuardLine {
            eta_significant: g.eta_significant,
            support_radius: g.support_radius,
            transport: g.transport,
            margin: g.margin,
            satisfied: g.satisfied,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    /// Decay fit of the reduced extension (window in s = log t).
    pub reduced_fit: FitReport,
    /// Sanity fit of the PDE sup-norm series over [t0, t_end].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pde_fit: Option<FitReport>,
    pub optimality: OptimalityReport,
    pub deviation_first: f64,
    pub deviation_last: f64,
    pub max_alpha_last: f64,
    /// Composite norm report max over samples of
    /// `⟨t⟩^{-γ}(h1 + xweighted) + ⟨t⟩^{1/2} linf`.
    pub x_t_norm: f64,
    pub gamma: f64,
    pub s_end: f64,
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Trajectory CSV: `t, linf, l2_1..l2_N, h1, a_mass, xweighted`.
pub fn write_trajectory_csv(trajectory: &Trajectory, path: &Path) -> Result<()> {
    let n = trajectory.l2.first().map(|row| row.len()).unwrap_or(0);
    let mut text = String::from("t,linf");
    for j in 1..=n {
        let _ = write!(text, ",l2_{j}");
    }
    text.push_str(",h1,a_mass,xweighted\n");
    for (i, t) in trajectory.times.iter().enumerate() {
        let _ = write!(text, "{:e},{:e}", t, trajectory.linf[i]);
        for v in &trajectory.l2[i] {
            let _ = write!(text, ",{v:e}");
        }
        let qa = trajectory
            .a_mass
            .as_ref()
            .map(|series| series[i])
            .unwrap_or(f64::NAN);
        let _ = writeln!(
            text,
            ",{:e},{:e},{:e}",
            trajectory.h1[i], qa, trajectory.x_weighted[i]
        );
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub struct TrajectoryTable {
    pub times: Vec<f64>,
    pub linf: Vec<f64>,
    pub h1: Vec<f64>,
    pub x_weighted: Vec<f64>,
}

pub fn read_trajectory_csv(path: &Path) -> Result<TrajectoryTable> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| anyhow::anyhow!("empty trajectory CSV"))?;
    let columns: Vec<&str> = header.split(',').collect();
    let h1_col = columns
        .iter()
        .position(|c| *c == "h1")
        .ok_or_else(|| anyhow::anyhow!("trajectory CSV lacks h1 column"))?;
    let xw_col = columns
        .iter()
        .position(|c| *c == "xweighted")
        .ok_or_else(|| anyhow::anyhow!("trajectory CSV lacks xweighted column"))?;
    let mut table = TrajectoryTable {
        times: Vec::new(),
        linf: Vec::new(),
        h1: Vec::new(),
        x_weighted: Vec::new(),
    };
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64> {
            cells
                .get(i)
                .and_then(|c| c.parse::<f64>().ok())
                .ok_or_else(|| anyhow::anyhow!("bad trajectory row {line:?}"))
        };
        table.times.push(parse(0)?);
        table.linf.push(parse(1)?);
        table.h1.push(parse(h1_col)?);
        table.x_weighted.push(parse(xw_col)?);
    }
    Ok(table)
}

/// Deviation CSV: `t, deviation, max_alpha`.
pub fn write_deviation_csv(series: &DeviationSeries, path: &Path) -> Result<()> {
    let mut text = String::from("t,deviation,max_alpha\n");
    for i in 0..series.times.len() {
        let _ = writeln!(
            text,
            "{:e},{:e},{:e}",
            series.times[i], series.deviation[i], series.max_alpha[i]
        );
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Two-column sup-norm data plus a gnuplot script overlaying both
/// candidate amplitude laws, calibrated at the analysis start time.
pub fn write_decay_plot(trajectory: &Trajectory, t0: f64, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut data = String::new();
    for (t, linf) in trajectory.times.iter().zip(&trajectory.linf) {
        if *t > 0.0 {
            let _ = writeln!(data, "{t:e} {linf:e}");
        }
    }
    std::fs::write(dir.join("decay.dat"), data)?;

    let calib = trajectory
        .times
        .iter()
        .position(|t| *t >= t0)
        .unwrap_or(trajectory.times.len().saturating_sub(1));
    let t_ref = trajectory.times[calib].max(2.0);
    let a_ref = trajectory.linf[calib];
    let c_free = a_ref * t_ref.sqrt();
    let c_log = a_ref * t_ref.sqrt() * t_ref.ln().sqrt();
    let script = format!(
        "set logscale xy\n\
         set xlabel 't'\n\
         set ylabel 'sup norm'\n\
         set key left bottom\n\
         plot 'decay.dat' using 1:2 with lines lw 2 title 'measured', \\\n\
         \t{c_free:e}*x**(-0.5) title 'free law t^{{-1/2}}', \\\n\
         \t{c_log:e}*x**(-0.5)/sqrt(log(x)) title 'dissipative law t^{{-1/2}}(log t)^{{-1/2}}'\n"
    );
    std::fs::write(dir.join("decay.gp"), script)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trajectory_csv_round_trip() {
        let trajectory = Trajectory {
            times: vec![0.0, 1.0],
            linf: vec![0.1, 0.09],
            l2: vec![vec![0.2, 0.3], vec![0.19, 0.29]],
            h1: vec![0.5, 0.48],
            x_weighted: vec![0.4, 0.41],
            a_mass: Some(vec![0.33, 0.32]),
            ..Default::default()
        };
        let dir = std::env::temp_dir().join("cnls-report-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trajectory.csv");
        write_trajectory_csv(&trajectory, &path).unwrap();
        let table = read_trajectory_csv(&path).unwrap();
        assert_eq!(table.times, trajectory.times);
        assert_eq!(table.linf, trajectory.linf);
        assert_eq!(table.h1, trajectory.h1);
        assert_eq!(table.x_weighted, trajectory.x_weighted);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("t,linf,l2_1,l2_2,h1,a_mass,xweighted\n"));
    }
}
