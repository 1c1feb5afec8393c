//! Cross-module pipeline checks on a single-component dissipative run
//! with small data: profile extraction, deviation audit, and the
//! Lyapunov trail of the PDE profiles themselves.

use std::sync::OnceLock;

use cnls::algebra::{BuiltinExample, HermitianForm, SystemSpec};
use cnls::asymptotics::{
    build_profile_series, common_xi_grid, compare_pde_ode, lyapunov_of_profiles, ProfileSeries,
};
use cnls::solver::{integrate, make_initial_data, DataKind, SolverConfig};
use cnls::spectral::Grid;
use cnls::C64;

struct SmallRun {
    spec: SystemSpec,
    series: ProfileSeries,
}

fn small_run() -> &'static SmallRun {
    static RUN: OnceLock<SmallRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut spec = BuiltinExample::single(C64::new(0.0, -1.0))
            .system_spec(None)
            .unwrap();
        spec.certificate = Some(HermitianForm::identity(1).unwrap());
        let grid = Grid::new(200.0, 8192).unwrap();
        let u0 =
            make_initial_data(&grid, &DataKind::Gaussian, &[C64::new(0.05, 0.0)], 1.0).unwrap();
        let mut snapshot_times = vec![2.0, 5.0];
        for k in 0..=8 {
            snapshot_times.push(10.0 * 10f64.powf(k as f64 / 8.0));
        }
        let config = SolverConfig {
            dt: 0.01,
            t_end: 100.0,
            observer_stride: 1000,
            snapshot_times,
            ..Default::default()
        };
        let (trajectory, final_field) = integrate(&spec, &u0, &config, &mut []).unwrap();
        assert!(!trajectory.aliasing_flagged);
        let xi_grid = common_xi_grid(&final_field, &spec.masses, 8.0, 257).unwrap();
        let series =
            build_profile_series(&trajectory.snapshots, &spec.masses, 2.0, &xi_grid).unwrap();
        SmallRun { spec, series }
    })
}

#[test]
fn small_data_deviation_stays_under_five_percent() {
    let run = small_run();
    let dev = compare_pde_ode(&run.series, &run.spec.nonlinearity, 1e-3).unwrap();
    let last = dev.times.len() - 1;
    assert!((dev.times[last] - 100.0).abs() < 0.5);
    let ratio = dev.deviation[last] / dev.max_alpha[last];
    assert!(
        ratio <= 0.05,
        "deviation at t = 100 is {:.2}% of max|α|",
        100.0 * ratio
    );
}

#[test]
fn pde_profile_lyapunov_trail_decays() {
    let run = small_run();
    let a = run.spec.certificate.clone().unwrap();
    let lyapunov = lyapunov_of_profiles(&run.series, &a).unwrap();
    // Net decay at the peak frequency, and no step increase beyond the
    // remainder scale anywhere the amplitude is alive.
    let peak = run.series.xi_grid.len() / 2;
    let first = lyapunov.values[0][peak];
    let last = lyapunov.values.last().unwrap()[peak];
    assert!(last < first, "peak α·Aα did not decay: {first} -> {last}");
    for step in &lyapunov.diffs {
        for (k, d) in step.iter().enumerate() {
            if lyapunov.values[0][k] > 1e-6 {
                assert!(*d <= 1e-4, "α·Aα increased by {d:e} at ξ index {k}");
            }
        }
    }
}
