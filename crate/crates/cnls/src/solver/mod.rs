//! Strang-split pseudospectral integration of the Cauchy problem.
//!
//! One step of size `dt` is: half a free flow, a full pointwise
//! nonlinear flow `∂_t z = -iF(z)` solved by RK4, then the second half
//! of the free flow.  The splitting is second order; the RK4 substep
//! keeps the nonlinear local error far below the splitting error.

use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{HermitianForm, MassVector, SystemSpec, MAX_COMPONENTS};
use crate::error::{Error, Result};
use crate::spectral::{
    forward_transform, free_propagate_mut, norms, read_field_snapshot, Field, Grid,
};
use crate::C64;

/// Abort threshold of the blowup detector.
pub const BLOWUP_CEILING: f64 = 1e6;

/// Spectral-tail budget of the aliasing guard.
pub const ALIASING_BUDGET: f64 = 1e-8;

/// What to do when the no-wrap criterion fails.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GuardMode {
    Refuse,
    Warn,
}

/// No-wrap guard configuration.  The fastest significant group velocity
/// is `η_sig/m_min`, where `η_sig` is the wavenumber band holding
/// `energy_fraction` of the initial spectral mass; the run is admissible
/// when `η_sig/m_min · t_end ≤ L - r_support`.
#[derive(Debug, Clone, Copy)]
pub struct GuardConfig {
    pub mode: GuardMode,
    pub energy_fraction: f64,
}

impl Default for GuardConfig {
    fn default() -> Self {
        GuardConfig {
            mode: GuardMode::Refuse,
            energy_fraction: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GuardReport {
    pub eta_significant: f64,
    pub support_radius: f64,
    pub transport: f64,
    pub margin: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    /// Observables are recorded every this many steps (and at the ends).
    pub observer_stride: usize,
    /// RK4 substeps per nonlinear flow.
    pub nonlinear_substeps: usize,
    /// Times at which full field snapshots are stored (snapped to steps).
    pub snapshot_times: Vec<f64>,
    pub guard: GuardConfig,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 0.01,
            t_end: 100.0,
            observer_stride: 10,
            nonlinear_substeps: 1,
            snapshot_times: Vec::new(),
            guard: GuardConfig::default(),
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "t_end must be nonnegative, got {}",
                self.t_end
            )));
        }
        if self.observer_stride == 0 {
            return Err(Error::InvalidArgument("observer_stride must be ≥ 1".into()));
        }
        if self.nonlinear_substeps == 0 {
            return Err(Error::InvalidArgument("nonlinear_substeps must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Named observable series sampled along a run.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub linf: Vec<f64>,
    /// `l2[sample][component]`.
    pub l2: Vec<Vec<f64>>,
    pub h1: Vec<f64>,
    pub x_weighted: Vec<f64>,
    /// `Q_A(t)` series, present when the spec carries a certificate.
    pub a_mass: Option<Vec<f64>>,
    /// Largest single-step increase of `Q_A` seen anywhere in the run.
    pub qa_max_step_increase: Option<f64>,
    /// True when the spectral tail ever exceeded [`ALIASING_BUDGET`].
    pub aliasing_flagged: bool,
    pub guard: Option<GuardReport>,
    pub snapshots: Vec<Field>,
}

impl Trajectory {
    fn record(&mut self, t: f64, field: &Field, masses: &MassVector) -> Result<()> {
        let n = norms(field, masses)?;
        if !n.linf.is_finite() || n.linf > BLOWUP_CEILING {
            return Err(Error::Blowup {
                time: t,
                what: format!("sup norm {}", n.linf),
            });
        }
        self.times.push(t);
        self.linf.push(n.linf);
        self.l2.push(n.l2);
        self.h1.push(n.h1);
        self.x_weighted.push(n.x_weighted);
        if forward_transform(field).tail_fraction() > ALIASING_BUDGET {
            self.aliasing_flagged = true;
        }
        Ok(())
    }
}

/// Pull-based observer invoked at stride boundaries.
pub trait Observer {
    fn on_sample(&mut self, t: f64, field: &Field);
}

/// The `A`-weighted mass `Q_A(t) = Σ_{j,k} A_{jk} ∫ u_k conj(u_j) dx`.
pub fn a_mass(field: &Field, a: &HermitianForm) -> f64 {
    let n = field.n_components();
    let points = field.grid.n_points();
    let mut total = 0.0;
    let mut z = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut az = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    for i in 0..points {
        for j in 0..n {
            z[j] = field.values[j][i];
        }
        a.apply_into(&z[..n], &mut az[..n]);
        for j in 0..n {
            total += (z[j] * az[j].conj()).re;
        }
    }
    total * field.grid.dx()
}

/// `2 ∫ Im(F(u)·Au) dx`: the exact rate of change of `Q_A` for diagonal
/// certificates (the dispersive exchange cancels componentwise).
pub fn a_mass_rate(field: &Field, spec: &SystemSpec, a: &HermitianForm) -> f64 {
    let n = field.n_components();
    let points = field.grid.n_points();
    let f = &spec.nonlinearity;
    let mut total = 0.0;
    let mut z = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut fz = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut az = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    for i in 0..points {
        for j in 0..n {
            z[j] = field.values[j][i];
        }
        f.evaluate_into(&z[..n], &mut fz[..n]);
        a.apply_into(&z[..n], &mut az[..n]);
        for j in 0..n {
            total += (fz[j] * az[j].conj()).im;
        }
    }
    2.0 * total * field.grid.dx()
}

/// Advance the pointwise nonlinear flow `∂_t z = -iF(z)` by `dt` using
/// classical RK4 with `substeps` substeps.  No spatial coupling.
pub fn nonlinear_step(
    field: &mut Field,
    spec: &SystemSpec,
    dt: f64,
    substeps: usize,
) -> Result<()> {
    let n = field.n_components();
    if n != spec.n_components() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_components(),
            got: n,
        });
    }
    let f = &spec.nonlinearity;
    let h = dt / substeps as f64;
    let time = field.time;

    const CHUNK: usize = 2048;
    let mut per_comp: Vec<std::slice::ChunksMut<'_, C64>> = field
        .values
        .iter_mut()
        .map(|v| v.chunks_mut(CHUNK))
        .collect();
    let mut chunks: Vec<Vec<&mut [C64]>> = Vec::new();
    loop {
        let group: Vec<&mut [C64]> = per_comp.iter_mut().filter_map(|it| it.next()).collect();
        if group.is_empty() {
            break;
        }
        chunks.push(group);
    }

    let all_finite = chunks
        .par_iter_mut()
        .map(|comps| {
            let len = comps[0].len();
            let mut z = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            let mut k1 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            let mut k2 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            let mut k3 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            let mut k4 = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            let mut stage = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            let mut ok = true;
            for i in 0..len {
                for j in 0..n {
                    z[j] = comps[j][i];
                }
                for _ in 0..substeps {
                    rhs(f, &z[..n], &mut k1[..n]);
                    for j in 0..n {
                        stage[j] = z[j] + 0.5 * h * k1[j];
                    }
                    rhs(f, &stage[..n], &mut k2[..n]);
                    for j in 0..n {
                        stage[j] = z[j] + 0.5 * h * k2[j];
                    }
                    rhs(f, &stage[..n], &mut k3[..n]);
                    for j in 0..n {
                        stage[j] = z[j] + h * k3[j];
                    }
                    rhs(f, &stage[..n], &mut k4[..n]);
                    for j in 0..n {
                        z[j] += h / 6.0 * (k1[j] + 2.0 * (k2[j] + k3[j]) + k4[j]);
                    }
                }
                for j in 0..n {
                    ok &= z[j].re.is_finite() && z[j].im.is_finite();
                    comps[j][i] = z[j];
                }
            }
            ok
        })
        .reduce(|| true, |a, b| a && b);

    if !all_finite {
        return Err(Error::Blowup {
            time,
            what: "nonlinear flow produced non-finite values".into(),
        });
    }
    Ok(())
}

#[inline]
fn rhs(f: &crate::algebra::CubicNonlinearity, z: &[C64], out: &mut [C64]) {
    f.evaluate_into(z, out);
    for v in out.iter_mut() {
        // ∂_t z = -i F(z)
        *v = C64::new(v.im, -v.re);
    }
}

/// One Strang step: half free flow, full nonlinear flow, half free flow.
pub fn strang_step(field: &mut Field, spec: &SystemSpec, dt: f64, substeps: usize) -> Result<()> {
    free_propagate_mut(field, &spec.masses, dt / 2.0)?;
    nonlinear_step(field, spec, dt, substeps)?;
    free_propagate_mut(field, &spec.masses, dt / 2.0)?;
    Ok(())
}

/// Evaluate the no-wrap criterion for data `u0` over horizon `t_end`.
pub fn no_wrap_report(
    u0: &Field,
    masses: &MassVector,
    t_end: f64,
    energy_fraction: f64,
) -> GuardReport {
    let spectral = forward_transform(u0);
    let eta_significant = spectral.significant_band(energy_fraction);
    let support_radius = support_radius(u0, energy_fraction);
    let transport = eta_significant / masses.min() * t_end;
    let margin = u0.grid.half_length() - support_radius;
    GuardReport {
        eta_significant,
        support_radius,
        transport,
        margin,
        satisfied: transport <= margin,
    }
}

/// Smallest radius containing `fraction` of the spatial `L²` mass.
fn support_radius(field: &Field, fraction: f64) -> f64 {
    let grid = &field.grid;
    let mut mass_by_radius: Vec<(f64, f64)> = grid
        .x()
        .iter()
        .enumerate()
        .map(|(k, x)| {
            let m: f64 = field.values.iter().map(|v| v[k].norm_sqr()).sum();
            (x.abs(), m)
        })
        .collect();
    mass_by_radius.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let total: f64 = mass_by_radius.iter().map(|(_, m)| m).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for (r, m) in mass_by_radius {
        acc += m;
        if acc >= fraction * total {
            return r;
        }
    }
    grid.half_length()
}

/// March the system from `u0` to `t_end`, recording observables every
/// `observer_stride` steps.  Returns the trajectory together with the
/// final field (also stored as the last snapshot when requested).
pub fn integrate(
    spec: &SystemSpec,
    u0: &Field,
    config: &SolverConfig,
    observers: &mut [&mut dyn Observer],
) -> Result<(Trajectory, Field)> {
    config.validate()?;
    u0.check_shape()?;
    if u0.n_components() != spec.n_components() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_components(),
            got: u0.n_components(),
        });
    }
    if !u0.is_finite() {
        return Err(Error::InvalidArgument("initial data is not finite".into()));
    }

    let guard = no_wrap_report(u0, &spec.masses, config.t_end, config.guard.energy_fraction);
    if !guard.satisfied && config.guard.mode == GuardMode::Refuse {
        return Err(Error::NoWrapViolation {
            transport: guard.transport,
            margin: guard.margin,
            half_length: u0.grid.half_length(),
            t_end: config.t_end,
        });
    }

    let n_steps = (config.t_end / config.dt).round() as usize;
    let snapshot_steps: Vec<usize> = {
        let mut steps: Vec<usize> = config
            .snapshot_times
            .iter()
            .map(|t| (t / config.dt).round() as usize)
            .filter(|s| *s <= n_steps)
            .collect();
        steps.sort_unstable();
        steps.dedup();
        steps
    };

    let mut field = u0.clone();
    field.time = 0.0;
    let mut trajectory = Trajectory {
        guard: Some(guard),
        ..Default::default()
    };

    let cert = spec.certificate.as_ref();
    let mut qa_series: Vec<f64> = Vec::new();
    let mut qa_prev = cert.map(|a| a_mass(&field, a));
    let mut qa_max_increase = qa_prev.map(|_| f64::NEG_INFINITY);

    let sample = |trajectory: &mut Trajectory,
                      observers: &mut [&mut dyn Observer],
                      qa_series: &mut Vec<f64>,
                      qa_now: Option<f64>,
                      t: f64,
                      field: &Field|
     -> Result<()> {
        trajectory.record(t, field, &spec.masses)?;
        if let Some(q) = qa_now {
            qa_series.push(q);
        }
        for obs in observers.iter_mut() {
            obs.on_sample(t, field);
        }
        Ok(())
    };

    sample(
        &mut trajectory,
        observers,
        &mut qa_series,
        qa_prev,
        0.0,
        &field,
    )?;
    if snapshot_steps.first() == Some(&0) {
        trajectory.snapshots.push(field.clone());
    }

    for step in 1..=n_steps {
        strang_step(&mut field, spec, config.dt, config.nonlinear_substeps)?;
        let t = step as f64 * config.dt;
        field.time = t; // suppress drift from repeated dt/2 additions

        let qa_now = cert.map(|a| a_mass(&field, a));
        if let (Some(prev), Some(now)) = (qa_prev, qa_now) {
            let increase = now - prev;
            let max = qa_max_increase.get_or_insert(f64::NEG_INFINITY);
            if increase > *max {
                *max = increase;
            }
        }
        qa_prev = qa_now;

        if step % config.observer_stride == 0 || step == n_steps {
            sample(
                &mut trajectory,
                observers,
                &mut qa_series,
                qa_now,
                t,
                &field,
            )?;
        }
        if snapshot_steps.binary_search(&step).is_ok() {
            trajectory.snapshots.push(field.clone());
        }
    }

    if cert.is_some() {
        trajectory.a_mass = Some(qa_series);
        trajectory.qa_max_step_increase = qa_max_increase.filter(|m| m.is_finite());
    }
    Ok((trajectory, field))
}

/// Analytic initial-data families plus snapshot files.
#[derive(Debug, Clone)]
pub enum DataKind {
    Gaussian,
    Sech,
    File(std::path::PathBuf),
}

/// Build initial data: component `j` is `amplitude_j · profile(x/width)`
/// with `profile = e^{-y²/2}` or `sech(y)`.  File mode reads a snapshot
/// and requires it to match the grid.
pub fn make_initial_data(
    grid: &Arc<Grid>,
    kind: &DataKind,
    amplitudes: &[C64],
    width: f64,
) -> Result<Field> {
    match kind {
        DataKind::File(path) => {
            let field = read_field_snapshot(path)?;
            if *field.grid != **grid {
                return Err(Error::InvalidArgument(format!(
                    "snapshot grid (L = {}, n = {}) does not match configured grid (L = {}, n = {})",
                    field.grid.half_length(),
                    field.grid.n_points(),
                    grid.half_length(),
                    grid.n_points()
                )));
            }
            Ok(field)
        }
        DataKind::Gaussian | DataKind::Sech => {
            if !(width > 0.0 && width.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "width must be positive, got {width}"
                )));
            }
            let profile: fn(f64) -> f64 = match kind {
                DataKind::Gaussian => |y| (-y * y / 2.0).exp(),
                _ => |y| 1.0 / y.cosh(),
            };
            let values = amplitudes
                .iter()
                .map(|amp| {
                    grid.x()
                        .iter()
                        .map(|x| amp * profile(x / width))
                        .collect()
                })
                .collect();
            Ok(Field {
                time: 0.0,
                grid: Arc::clone(grid),
                values,
            })
        }
    }
}
