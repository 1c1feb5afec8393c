//! The reduced profile dynamics in logarithmic time and the machinery
//! that connects it to the PDE.
//!
//! Discarding the integrated remainder, the profile obeys the
//! frequency-pointwise law `dα/ds = -iF(α)` with `s = log t`.  Columns
//! (one per frequency) are fully independent, so the integrator runs
//! them in parallel with no shared state.

mod fit;
mod series;

pub use fit::{fit_decay, fit_decay_log, DecayFit, FitReport};
pub use series::{
    build_profile_series, common_xi_grid, compare_pde_ode, lyapunov_of_profiles,
    lyapunov_of_reduced, optimality_check, DeviationSeries, LyapunovSeries, OptimalityReport,
    ProfileSeries,
};

use rayon::prelude::*;

use crate::algebra::{CubicNonlinearity, MAX_COMPONENTS};
use crate::error::{Error, Result};
use crate::C64;

/// Profile matrix at one logarithmic time: `alpha[component][frequency]`.
#[derive(Debug, Clone)]
pub struct ReducedState {
    pub s: f64,
    pub alpha: Vec<Vec<C64>>,
}

impl ReducedState {
    pub fn sup_norm(&self) -> f64 {
        self.alpha
            .iter()
            .flatten()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Right-hand side of the reduced equation: `-iF(α)`.
pub fn reduced_rhs(f: &CubicNonlinearity, alpha: &[C64]) -> Result<Vec<C64>> {
    let fz = f.evaluate(alpha)?;
    Ok(fz.iter().map(|v| C64::new(v.im, -v.re)).collect())
}

#[inline]
fn rhs_into(f: &CubicNonlinearity, alpha: &[C64], out: &mut [C64]) {
    f.evaluate_into(alpha, out);
    for v in out.iter_mut() {
        *v = C64::new(v.im, -v.re);
    }
}

/// One RK4 step of size `h` on a single column.
#[inline]
fn rk4_column(f: &CubicNonlinearity, z: &mut [C64], h: f64) {
    let n = z.len();
    let mut k1 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut k2 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut k3 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut k4 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut stage = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    rhs_into(f, z, &mut k1[..n]);
    for j in 0..n {
        stage[j] = z[j] + 0.5 * h * k1[j];
    }
    rhs_into(f, &stage[..n], &mut k2[..n]);
    for j in 0..n {
        stage[j] = z[j] + 0.5 * h * k2[j];
    }
    rhs_into(f, &stage[..n], &mut k3[..n]);
    for j in 0..n {
        stage[j] = z[j] + h * k3[j];
    }
    rhs_into(f, &stage[..n], &mut k4[..n]);
    for j in 0..n {
        z[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
    }
}

fn transpose_to_columns(alpha: &[Vec<C64>]) -> Result<(Vec<[C64; MAX_COMPONENTS]>, usize)> {
    let n = alpha.len();
    if n == 0 || n > MAX_COMPONENTS {
        return Err(Error::InvalidArgument(format!(
            "need between 1 and {MAX_COMPONENTS} components, got {n}"
        )));
    }
    let width = alpha[0].len();
    if alpha.iter().any(|row| row.len() != width) {
        return Err(Error::InvalidArgument(
            "profile rows have unequal lengths".into(),
        ));
    }
    let mut columns = vec![[C64::new(0.0, 0.0); MAX_COMPONENTS]; width];
    for (j, row) in alpha.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            columns[i][j] = *v;
        }
    }
    Ok((columns, width))
}

fn columns_to_alpha(columns: &[[C64; MAX_COMPONENTS]], n: usize) -> Vec<Vec<C64>> {
    (0..n)
        .map(|j| columns.iter().map(|col| col[j]).collect())
        .collect()
}

/// March every column through a shared step schedule, recording after
/// the step indices listed in `record_after` (which must be sorted).
fn run_schedule(
    alpha0: &[Vec<C64>],
    f: &CubicNonlinearity,
    s0: f64,
    schedule: &[f64],
    record_after: &[usize],
) -> Result<Vec<ReducedState>> {
    let n = f.n_components();
    if alpha0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha0.len(),
        });
    }
    let (mut columns, _) = transpose_to_columns(alpha0)?;
    let mut states = Vec::with_capacity(record_after.len() + 1);
    states.push(ReducedState {
        s: s0,
        alpha: alpha0.to_vec(),
    });

    let mut s = s0;
    let mut done = 0usize;
    for &target in record_after {
        let block = &schedule[done..target];
        if block.is_empty() {
            continue;
        }
        columns.par_iter_mut().for_each(|col| {
            for &h in block {
                rk4_column(f, &mut col[..n], h);
            }
        });
        s += block.iter().sum::<f64>();
        done = target;
        let alpha = columns_to_alpha(&columns, n);
        if alpha
            .iter()
            .flatten()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::Blowup {
                time: s,
                what: "reduced flow produced non-finite values".into(),
            });
        }
        states.push(ReducedState { s, alpha });
    }
    Ok(states)
}

/// Fixed-step RK4 integration of the reduced flow over
/// `s_span = (s0, s1)`, recording the state every `record_stride` steps
/// (plus the initial and final states).  The last step is shortened to
/// land exactly on `s1`.
pub fn integrate_reduced(
    alpha0: &[Vec<C64>],
    f: &CubicNonlinearity,
    s_span: (f64, f64),
    ds: f64,
    record_stride: usize,
) -> Result<Vec<ReducedState>> {
    let (s0, s1) = s_span;
    if !(s1 > s0) || !(ds > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need s1 > s0 and ds > 0, got span ({s0}, {s1}) with ds = {ds}"
        )));
    }
    let stride = record_stride.max(1);
    let span = s1 - s0;
    let n_steps = (span / ds).ceil().max(1.0) as usize;
    let mut schedule = vec![ds; n_steps];
    schedule[n_steps - 1] = span - ds * (n_steps - 1) as f64;
    if schedule[n_steps - 1] <= 0.0 {
        schedule[n_steps - 1] = ds;
    }
    let mut record_after: Vec<usize> = (1..=n_steps / stride).map(|k| k * stride).collect();
    if record_after.last() != Some(&n_steps) {
        record_after.push(n_steps);
    }
    run_schedule(alpha0, f, s0, &schedule, &record_after)
}

/// Step control for [`integrate_reduced_adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Smallest step ever taken (also the starting resolution).
    pub ds_min: f64,
    /// Step as a fraction of the local rotation period: the step is
    /// `step_safety / ω` with `ω = max_ξ ‖F(α)‖/‖α‖`.  Smaller is more
    /// accurate; `2e-3` keeps the Riccati oracle below `1e-8` relative.
    pub step_safety: f64,
    /// Sampling density of the recorded series.
    pub records_per_decade: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions {
            ds_min: 1e-3,
            step_safety: 2e-3,
            records_per_decade: 20,
        }
    }
}

/// Long-horizon integration with rotation-rate-adaptive steps.
///
/// Dissipative trajectories slow like `1/s`, so the admissible step
/// grows and `s = 10⁴` costs a few thousand steps; conservative
/// trajectories keep rotating at a fixed rate and the step stays capped
/// at a fixed fraction of the rotation period.  The rate is re-estimated
/// at every record boundary (geometric in `s`).
pub fn integrate_reduced_adaptive(
    alpha0: &[Vec<C64>],
    f: &CubicNonlinearity,
    s_span: (f64, f64),
    opts: AdaptiveOptions,
) -> Result<Vec<ReducedState>> {
    let (s0, s1) = s_span;
    if !(s1 > s0) || !(opts.ds_min > 0.0) || !(opts.step_safety > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need s1 > s0, ds_min > 0 and step_safety > 0, got span ({s0}, {s1})"
        )));
    }
    let n = f.n_components();
    if alpha0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: alpha0.len(),
        });
    }
    let ratio = 10f64.powf(1.0 / opts.records_per_decade.max(1) as f64);

    let (mut columns, _) = transpose_to_columns(alpha0)?;
    let mut states = vec![ReducedState {
        s: s0,
        alpha: alpha0.to_vec(),
    }];
    let mut fz = vec![C64::new(0.0, 0.0); n];
    let mut s = s0;
    while s < s1 {
        // Geometric record boundaries with a linear floor near zero.
        let next = (s * ratio).max(s + 0.05).min(s1);

        // Local rotation rate over all live columns.
        let mut omega = 0.0f64;
        for col in &columns {
            let norm: f64 = col[..n].iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-300 {
                f.evaluate_into(&col[..n], &mut fz);
                let rate: f64 = fz.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                omega = omega.max(rate / norm);
            }
        }
        let span = next - s;
        let h_target = if omega > 0.0 {
            (opts.step_safety / omega).max(opts.ds_min).min(span)
        } else {
            span
        };
        let n_steps = (span / h_target).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;

        columns.par_iter_mut().for_each(|col| {
            for _ in 0..n_steps {
                rk4_column(f, &mut col[..n], h);
            }
        });
        s = next;

        let alpha = columns_to_alpha(&columns, n);
        if alpha
            .iter()
            .flatten()
            .any(|v| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::Blowup {
                time: s,
                what: "reduced flow produced non-finite values".into(),
            });
        }
        states.push(ReducedState { s, alpha });
    }
    Ok(states)
}

/// Map a reduced series to log-amplitude samples `(s, ln a)` with
/// `a(t) = t^{-1/2} max_ξ |α(log t, ξ)|`, the reconstruction of the
/// field amplitude from the profile.  Working in logs avoids overflow
/// at large `s`.
pub fn amplitude_log_series(states: &[ReducedState]) -> Vec<(f64, f64)> {
    states
        .iter()
        .filter_map(|st| {
            let sup = st.sup_norm();
            if sup > 0.0 {
                Some((st.s, -0.5 * st.s + sup.ln()))
            } else {
                None
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BuiltinExample;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_dissipative() -> CubicNonlinearity {
        BuiltinExample::single(c(0.0, -1.0))
            .system_spec(None)
            .unwrap()
            .nonlinearity
    }

    #[test]
    fn reduced_rhs_examples() {
        // Single λ = -i at α = 1: -i·F = -i·(-i) = -1.
        let f = single_dissipative();
        let rhs = reduced_rhs(&f, &[c(1.0, 0.0)]).unwrap();
        assert!((rhs[0] - c(-1.0, 0.0)).norm() < 1e-15);
        // Zero input, zero output.
        let zero = reduced_rhs(&f, &[c(0.0, 0.0)]).unwrap();
        assert_eq!(zero[0], c(0.0, 0.0));
        // The four-component example at (1, i, 1, 1).
        let f22 = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let rhs = reduced_rhs(&f22, &[c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let expected = [c(-1.0, 0.0), c(0.0, -1.0), c(-1.0, 0.0), c(3.0, 0.0)];
        for (got, want) in rhs.iter().zip(&expected) {
            assert!((got - want).norm() < 1e-14, "{got} vs {want}");
        }
    }

    #[test]
    fn riccati_closed_form_short_horizon() {
        // |α(s)|² = a0/(1 + 2 a0 s) for the single dissipative equation.
        let f = single_dissipative();
        let alpha0 = vec![vec![c(1.0, 0.0), c(0.5, 0.5)]];
        let states = integrate_reduced(&alpha0, &f, (0.0, 10.0), 1e-3, 100).unwrap();
        for st in &states {
            for (i, a0) in [1.0, 0.5].iter().enumerate() {
                let expected = a0 / (1.0 + 2.0 * a0 * st.s);
                let got = st.alpha[0][i].norm_sqr();
                assert!(
                    (got - expected).abs() < 1e-10 * expected,
                    "s = {}: {got} vs {expected}",
                    st.s
                );
            }
        }
        assert!((states.last().unwrap().s - 10.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_integration_matches_closed_form_to_large_s() {
        let f = single_dissipative();
        let alpha0 = vec![vec![c(1.0, 0.0)]];
        let states =
            integrate_reduced_adaptive(&alpha0, &f, (0.0, 1e4), AdaptiveOptions::default())
                .unwrap();
        assert!(states.len() > 50);
        for st in &states {
            let expected = 1.0 / (1.0 + 2.0 * st.s);
            let got = st.alpha[0][0].norm_sqr();
            assert!(
                (got - expected).abs() < 1e-8 * expected,
                "s = {}: rel err {}",
                st.s,
                ((got - expected) / expected).abs()
            );
        }
        assert!((states.last().unwrap().s - 1e4).abs() < 1e-9);
    }

    #[test]
    fn adaptive_integration_stays_stable_for_conservative_flow() {
        // Phase rotation never slows here; the step must stay capped at
        // a fraction of the rotation period instead of growing with s.
        let f = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let alpha0 = vec![
            vec![c(0.5, 0.0)],
            vec![c(0.5, 0.0)],
            vec![c(0.5, 0.0)],
            vec![c(0.5, 0.0)],
        ];
        let initial: f64 = alpha0.iter().map(|r| r[0].norm_sqr()).sum();
        let opts = AdaptiveOptions {
            step_safety: 0.01,
            ..Default::default()
        };
        let states = integrate_reduced_adaptive(&alpha0, &f, (1.0, 1e3), opts).unwrap();
        for st in &states {
            let total: f64 = st.alpha.iter().map(|r| r[0].norm_sqr()).sum();
            assert!(
                (total - initial).abs() < 1e-6 * initial,
                "s = {}: mass drifted to {total}",
                st.s
            );
        }
    }

    #[test]
    fn conservative_reduced_flow_preserves_weighted_mass() {
        // κ = 1 weights: Σ|α_j|² is constant for the conservative family.
        let f = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap()
            .nonlinearity;
        let alpha0 = vec![
            vec![c(0.4, 0.1)],
            vec![c(-0.2, 0.3)],
            vec![c(0.1, -0.5)],
            vec![c(0.3, 0.2)],
        ];
        let initial: f64 = alpha0.iter().map(|r| r[0].norm_sqr()).sum();
        let states = integrate_reduced(&alpha0, &f, (0.0, 50.0), 1e-3, 1000).unwrap();
        for st in &states {
            let total: f64 = st.alpha.iter().map(|r| r[0].norm_sqr()).sum();
            assert!((total - initial).abs() < 1e-10, "s = {}", st.s);
        }
    }

    #[test]
    fn zero_nonlinearity_keeps_alpha_constant() {
        let f = CubicNonlinearity::new(2, vec![]).unwrap();
        let alpha0 = vec![vec![c(0.3, -0.2); 5], vec![c(-0.1, 0.9); 5]];
        let states = integrate_reduced(&alpha0, &f, (0.0, 3.0), 0.01, 50).unwrap();
        for st in &states {
            for (row, row0) in st.alpha.iter().zip(&alpha0) {
                for (v, v0) in row.iter().zip(row0) {
                    assert_eq!(v, v0);
                }
            }
        }
    }

    #[test]
    fn amplitude_series_tracks_riccati_rate() {
        let f = single_dissipative();
        let alpha0 = vec![vec![c(1.0, 0.0)]];
        let states =
            integrate_reduced_adaptive(&alpha0, &f, (0.0, 100.0), AdaptiveOptions::default())
                .unwrap();
        let samples = amplitude_log_series(&states);
        let (s_last, log_a) = *samples.last().unwrap();
        // ln a = -s/2 + ln((1+2s)^{-1/2}).
        let expected = -0.5 * s_last - 0.5 * (1.0 + 2.0 * s_last).ln();
        assert!((log_a - expected).abs() < 1e-6);
    }
}
