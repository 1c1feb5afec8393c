//! Profile time series on a common frequency grid, the PDE/ODE
//! deviation audit, Lyapunov monitoring, and the decay-optimality check.

use super::{integrate_reduced, ReducedState};
use crate::algebra::{CubicNonlinearity, HermitianForm, MassVector};
use crate::error::{Error, Result};
use crate::spectral::{compute_profile, resample_profiles, Field};
use crate::C64;

/// Profiles `α(t_i, ξ)` sampled in time on one shared `ξ` grid;
/// `values[time][component][frequency]`.
#[derive(Debug, Clone)]
pub struct ProfileSeries {
    pub xi_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub values: Vec<Vec<Vec<C64>>>,
}

impl ProfileSeries {
    pub fn new(xi_grid: Vec<f64>, times: Vec<f64>, values: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: values.len(),
            });
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "profile series times must be strictly increasing".into(),
            ));
        }
        for per_time in &values {
            for row in per_time {
                if row.len() != xi_grid.len() {
                    return Err(Error::DimensionMismatch {
                        expected: xi_grid.len(),
                        got: row.len(),
                    });
                }
                if row.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
                    return Err(Error::InvalidArgument(
                        "profile series contains non-finite values".into(),
                    ));
                }
            }
        }
        Ok(ProfileSeries {
            xi_grid,
            times,
            values,
        })
    }

    pub fn sup_at(&self, index: usize) -> f64 {
        self.values[index]
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// A symmetric common frequency grid `[-xi_max, xi_max]` that fits
/// inside every component's native profile range.
pub fn common_xi_grid(
    field: &Field,
    masses: &MassVector,
    xi_max: f64,
    n_points: usize,
) -> Result<Vec<f64>> {
    if n_points < 2 {
        return Err(Error::InvalidArgument("need at least two grid points".into()));
    }
    let eta_limit = field.grid.eta_max() - field.grid.d_eta();
    let mass_max = masses
        .as_slice()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let native_limit = eta_limit / mass_max;
    if xi_max > native_limit {
        return Err(Error::OutOfRange {
            xi: xi_max,
            min: -native_limit,
            max: native_limit,
        });
    }
    let step = 2.0 * xi_max / (n_points - 1) as f64;
    Ok((0..n_points).map(|k| -xi_max + k as f64 * step).collect())
}

/// Extract profiles from field snapshots taken at `t ≥ t_min` and
/// resample them onto `xi_grid`.
pub fn build_profile_series(
    snapshots: &[Field],
    masses: &MassVector,
    t_min: f64,
    xi_grid: &[f64],
) -> Result<ProfileSeries> {
    let mut times = Vec::new();
    let mut values = Vec::new();
    for snapshot in snapshots {
        if snapshot.time < t_min {
            continue;
        }
        let profile = compute_profile(snapshot, masses)?;
        values.push(resample_profiles(&profile, xi_grid)?);
        times.push(snapshot.time);
    }
    if times.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no snapshots at or after t = {t_min}"
        )));
    }
    ProfileSeries::new(xi_grid.to_vec(), times, values)
}

/// Per-time deviation between the PDE profile and the reduced flow
/// started from the first PDE sample.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationSeries {
    pub times: Vec<f64>,
    /// `max_{j,ξ} |α_pde - α_ode|` at each sample time.
    pub deviation: Vec<f64>,
    /// `max_{j,ξ} |α_pde|` at each sample time.
    pub max_alpha: Vec<f64>,
}

/// Integrate the reduced flow from the first PDE sample and report the
/// sup deviation at each later sample: the numerical embodiment of the
/// integrated remainder discarded by the reduced model.
pub fn compare_pde_ode(
    pde: &ProfileSeries,
    f: &CubicNonlinearity,
    ds: f64,
) -> Result<DeviationSeries> {
    if pde.times.is_empty() {
        return Err(Error::InvalidArgument("empty profile series".into()));
    }
    if pde.times[0] < 1.0 {
        return Err(Error::InvalidTime {
            requirement: "at least 1 (profiles are extracted after the wave zone forms)",
            got: pde.times[0],
        });
    }
    let mut alpha = pde.values[0].clone();
    let mut deviation = vec![0.0];
    let mut max_alpha = vec![pde.sup_at(0)];
    for i in 1..pde.times.len() {
        let s0 = pde.times[i - 1].ln();
        let s1 = pde.times[i].ln();
        let states = integrate_reduced(&alpha, f, (s0, s1), ds, usize::MAX / 2)?;
        alpha = states.last().unwrap().alpha.clone();
        let dev = alpha
            .iter()
            .zip(&pde.values[i])
            .flat_map(|(ode_row, pde_row)| ode_row.iter().zip(pde_row))
            .map(|(o, p)| (p - o).norm())
            .fold(0.0, f64::max);
        deviation.push(dev);
        max_alpha.push(pde.sup_at(i));
    }
    Ok(DeviationSeries {
        times: pde.times.clone(),
        deviation,
        max_alpha,
    })
}

/// Quadratic-form audit trail: `values[time][frequency] = α·Aα` and the
/// discrete time differences for monotonicity checks.
#[derive(Debug, Clone)]
pub struct LyapunovSeries {
    pub s: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub diffs: Vec<Vec<f64>>,
}

fn lyapunov_core(
    s: Vec<f64>,
    alphas: &[&Vec<Vec<C64>>],
    a: &HermitianForm,
) -> Result<LyapunovSeries> {
    let n = a.dim();
    let mut values = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        if alpha.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: alpha.len(),
            });
        }
        let width = alpha[0].len();
        let mut row = Vec::with_capacity(width);
        let mut z = vec![C64::new(0.0, 0.0); n];
        for i in 0..width {
            for j in 0..n {
                z[j] = alpha[j][i];
            }
            row.push(a.quadratic_form(&z));
        }
        values.push(row);
    }
    let diffs = values
        .windows(2)
        .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b - a).collect())
        .collect();
    Ok(LyapunovSeries { s, values, diffs })
}

/// `α·Aα` along a reduced trajectory.
pub fn lyapunov_of_reduced(states: &[ReducedState], a: &HermitianForm) -> Result<LyapunovSeries> {
    let s = states.iter().map(|st| st.s).collect();
    let alphas: Vec<&Vec<Vec<C64>>> = states.iter().map(|st| &st.alpha).collect();
    lyapunov_core(s, &alphas, a)
}

/// `α·Aα` along a PDE profile series (times reported as `s = ln t`).
pub fn lyapunov_of_profiles(series: &ProfileSeries, a: &HermitianForm) -> Result<LyapunovSeries> {
    let s = series.times.iter().map(|t| t.ln()).collect();
    let alphas: Vec<&Vec<Vec<C64>>> = series.values.iter().collect();
    lyapunov_core(s, &alphas, a)
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct OptimalityReport {
    /// `min` of `s·(α·Aα)` over the final quarter of the trajectory,
    /// at the frequency carrying the largest initial amplitude.
    pub liminf_estimate: f64,
    /// The protected floor `λ_*/(4C_*)`; zero for conservative systems
    /// (no decay to bound from below).
    pub floor: f64,
    pub xi_index: usize,
    pub passed: bool,
}

/// Check the decay-optimality surrogate: along the reduced flow the
/// weighted square amplitude, rescaled by `s`, must stay above
/// `λ_*/(4C_*)`, certifying that `(log t)·|α|²` is bounded away from
/// zero — the solution cannot decay faster than the certified law.
pub fn optimality_check(
    states: &[ReducedState],
    a: &HermitianForm,
    c_star: f64,
) -> Result<OptimalityReport> {
    let last_s = states.last().map(|st| st.s).unwrap_or(0.0);
    if states.len() < 4 || last_s < 100.0 {
        return Err(Error::InvalidArgument(format!(
            "series must reach s ≥ 100, got {last_s}"
        )));
    }
    let first = &states[0];
    let n = first.alpha.len();
    let width = first.alpha[0].len();
    let mut xi_index = 0;
    let mut best = -1.0;
    for i in 0..width {
        let norm: f64 = (0..n).map(|j| first.alpha[j][i].norm_sqr()).sum();
        if norm > best {
            best = norm;
            xi_index = i;
        }
    }
    if best <= 0.0 {
        return Err(Error::InvalidArgument(
            "initial profile is identically zero".into(),
        ));
    }

    let s_first = first.s;
    let cut = s_first + 0.75 * (last_s - s_first);
    let mut z = vec![C64::new(0.0, 0.0); n];
    let liminf_estimate = states
        .iter()
        .filter(|st| st.s >= cut)
        .map(|st| {
            for j in 0..n {
                z[j] = st.alpha[j][xi_index];
            }
            st.s * a.quadratic_form(&z)
        })
        .fold(f64::INFINITY, f64::min);

    let floor = if c_star > 1e-12 {
        a.lambda_min() / (4.0 * c_star)
    } else {
        0.0
    };
    Ok(OptimalityReport {
        liminf_estimate,
        floor,
        xi_index,
        passed: liminf_estimate > floor,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{integrate_reduced_adaptive, lyapunov_of_reduced, AdaptiveOptions};
    use super::*;
    use crate::algebra::BuiltinExample;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lyapunov_identity_weights() {
        let a = HermitianForm::identity(2).unwrap();
        let states = vec![ReducedState {
            s: 0.0,
            alpha: vec![vec![c(1.0, 0.0)], vec![c(1.0, 0.0)]],
        }];
        let series = lyapunov_of_reduced(&states, &a).unwrap();
        assert!((series.values[0][0] - 2.0).abs() < 1e-15);
        assert!(series.diffs.is_empty());
    }

    #[test]
    fn lyapunov_decreases_for_dissipative_flow() {
        let f = BuiltinExample::single(c(0.0, -1.0))
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let a = HermitianForm::identity(1).unwrap();
        let alpha0 = vec![vec![c(1.0, 0.0), c(0.5, 0.2), c(0.0, 0.0)]];
        let states = integrate_reduced(&alpha0, &f, (0.0, 5.0), 1e-3, 500).unwrap();
        let series = lyapunov_of_reduced(&states, &a).unwrap();
        for step in &series.diffs {
            // Strict decrease where the amplitude is alive; the zero
            // column stays put.
            assert!(step[0] < 0.0);
            assert!(step[1] < 0.0);
            assert!(step[2].abs() < 1e-15);
        }
    }

    #[test]
    fn lyapunov_flat_for_conservative_flow() {
        let f = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let a = HermitianForm::identity(4).unwrap();
        let alpha0 = vec![
            vec![c(0.5, 0.0)],
            vec![c(0.3, 0.1)],
            vec![c(-0.2, 0.4)],
            vec![c(0.1, 0.6)],
        ];
        let states = integrate_reduced(&alpha0, &f, (0.0, 2.0), 1e-3, 1).unwrap();
        let series = lyapunov_of_reduced(&states, &a).unwrap();
        for step in &series.diffs {
            assert!(step[0].abs() <= 1e-10);
        }
    }

    #[test]
    fn squeeze_between_pinch_constants() {
        // For the strictly dissipative pair with C_* = C^* = 1 the
        // discrete derivative of α·Aα sits between the quartic brackets.
        let f = BuiltinExample::example21([c(0.0, -1.0); 2], [c(1.0, 0.0); 2])
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let a = HermitianForm::identity(2).unwrap();
        let ds = 1e-3;
        let delta = 1e-3;
        let alpha0 = vec![vec![c(0.9, 0.1)], vec![c(0.4, -0.6)]];
        let states = integrate_reduced(&alpha0, &f, (0.0, 1.0), ds, 1).unwrap();
        let series = lyapunov_of_reduced(&states, &a).unwrap();
        for (w, step) in states.windows(2).zip(&series.diffs) {
            let norm4 = |st: &ReducedState| {
                let n2: f64 = st.alpha.iter().map(|r| r[0].norm_sqr()).sum();
                n2 * n2
            };
            let hi4 = norm4(&w[0]).max(norm4(&w[1]));
            let lo4 = norm4(&w[0]).min(norm4(&w[1]));
            let rate = step[0] / ds;
            assert!(rate >= -2.0 * hi4 * (1.0 + delta), "rate {rate} vs {hi4}");
            assert!(rate <= -2.0 * lo4 * (1.0 - delta), "rate {rate} vs {lo4}");
        }
    }

    #[test]
    fn compare_pde_ode_is_zero_for_frozen_profiles() {
        // With F = 0 both sides are constant, so the deviation vanishes.
        let f = CubicNonlinearity::new(1, vec![]).unwrap();
        let xi: Vec<f64> = (0..33).map(|k| -4.0 + 0.25 * k as f64).collect();
        let row: Vec<C64> = xi.iter().map(|x| C64::new((-x * x).exp(), 0.1 * x)).collect();
        let series = ProfileSeries::new(
            xi.clone(),
            vec![2.0, 5.0, 20.0],
            vec![vec![row.clone()], vec![row.clone()], vec![row.clone()]],
        )
        .unwrap();
        let dev = compare_pde_ode(&series, &f, 1e-2).unwrap();
        assert!(dev.deviation.iter().all(|d| *d < 1e-8));
        assert!((dev.max_alpha[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compare_pde_ode_rejects_early_start() {
        let f = CubicNonlinearity::new(1, vec![]).unwrap();
        let series = ProfileSeries::new(
            vec![0.0],
            vec![0.5, 2.0],
            vec![vec![vec![c(1.0, 0.0)]], vec![vec![c(1.0, 0.0)]]],
        )
        .unwrap();
        assert!(compare_pde_ode(&series, &f, 1e-2).is_err());
    }

    #[test]
    fn optimality_single_dissipative_reaches_half() {
        let f = BuiltinExample::single(c(0.0, -1.0))
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let a = HermitianForm::identity(1).unwrap();
        let alpha0 = vec![vec![c(1.0, 0.0)]];
        let states =
            integrate_reduced_adaptive(&alpha0, &f, (0.0, 1e4), AdaptiveOptions::default())
                .unwrap();
        let report = optimality_check(&states, &a, 1.0).unwrap();
        // s·|α|² = s/(1+2s) → 1/2, protected floor 1/4.
        assert!((report.floor - 0.25).abs() < 1e-12);
        assert!(report.passed);
        assert!((report.liminf_estimate - 0.5).abs() < 0.01);
    }

    #[test]
    fn optimality_conservative_grows_linearly() {
        let f = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let a = HermitianForm::identity(4).unwrap();
        let alpha0 = vec![
            vec![c(0.3, 0.0)],
            vec![c(0.3, 0.0)],
            vec![c(0.3, 0.0)],
            vec![c(0.3, 0.0)],
        ];
        let states =
            integrate_reduced_adaptive(&alpha0, &f, (1.0, 2000.0), AdaptiveOptions::default())
                .unwrap();
        let report = optimality_check(&states, &a, 0.0).unwrap();
        assert_eq!(report.floor, 0.0);
        assert!(report.passed);
        // s·(α·Aα) at the sampled states grows linearly in s.
        let series = lyapunov_of_reduced(&states, &a).unwrap();
        let first = series.s[0] * series.values[0][0];
        let last = series.s.last().unwrap() * series.values.last().unwrap()[0];
        assert!(last / first > 100.0);
    }

    #[test]
    fn optimality_rejects_zero_profile_and_short_series() {
        let f = BuiltinExample::single(c(0.0, -1.0))
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let a = HermitianForm::identity(1).unwrap();
        let zero = vec![vec![c(0.0, 0.0)]];
        let states =
            integrate_reduced_adaptive(&zero, &f, (0.0, 200.0), AdaptiveOptions::default())
                .unwrap();
        assert!(optimality_check(&states, &a, 1.0).is_err());
        let alive = vec![vec![c(1.0, 0.0)]];
        let short = integrate_reduced(&alive, &f, (0.0, 5.0), 1e-2, 10).unwrap();
        assert!(optimality_check(&short, &a, 1.0).is_err());
    }

    #[test]
    fn profile_series_validations() {
        assert!(ProfileSeries::new(
            vec![0.0],
            vec![2.0, 2.0],
            vec![vec![vec![c(1.0, 0.0)]], vec![vec![c(1.0, 0.0)]]],
        )
        .is_err());
        assert!(ProfileSeries::new(
            vec![0.0, 1.0],
            vec![2.0],
            vec![vec![vec![c(1.0, 0.0)]]],
        )
        .is_err());
        assert!(ProfileSeries::new(
            vec![0.0],
            vec![2.0],
            vec![vec![vec![C64::new(f64::NAN, 0.0)]]],
        )
        .is_err());
    }
}
