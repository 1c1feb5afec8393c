//! Sphere-search certification of the dissipativity conditions.
//!
//! The quantity of interest is `g(z) = Im(F(z)·Az)`, homogeneous of
//! degree four, so its range on the unit sphere of `C^N` determines it
//! everywhere.  We estimate `min g` and `max g` over the sphere by
//! low-discrepancy sampling of `R^{2N}` directions followed by
//! Nelder–Mead polish from the best candidates, then classify:
//!
//! * strictly dissipative:  `max g ≤ -tol` (two-sided quartic pinch,
//!   `C_* = -min g`, `C^* = -max g`),
//! * conservative:          `|g| ≤ tol` everywhere sampled,
//! * weakly dissipative:    `max g ≤ tol` with `min g < -tol`,
//! * violated:              otherwise.

use rayon::prelude::*;

use super::{dissipation_inner, CubicNonlinearity, HermitianForm, MAX_COMPONENTS};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions, SphereSequence};
use crate::C64;

/// Estimated quartic pinch constants.
#[derive(Debug, Clone, Copy)]
pub struct DissipationBounds {
    /// `C_*` in `-C_*|z|⁴ ≤ g(z)`: the negated sphere minimum.
    pub c_star: f64,
    /// `C^*` in `g(z) ≤ -C^*|z|⁴`: the negated sphere maximum.
    pub c_upper: f64,
    /// Largest value of `g` found on the sphere (`= -c_upper`).
    pub max_violation: f64,
    pub samples_used: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    StrictlyDissipative,
    WeaklyDissipative,
    Conservative,
    Violated,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::StrictlyDissipative => "strictly_dissipative",
            Classification::WeaklyDissipative => "weakly_dissipative",
            Classification::Conservative => "conservative",
            Classification::Violated => "violated",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    pub n_samples: usize,
    /// Classification tolerance; defaults to `1e-9 · max |coeff|`.
    pub tol: Option<f64>,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            n_samples: 20_000,
            tol: None,
            seed: 0,
        }
    }
}

const MIN_SAMPLES: usize = 1000;
const POLISH_CANDIDATES: usize = 10;

fn g_at(f: &CubicNonlinearity, a: &HermitianForm, z: &[C64]) -> f64 {
    let n = z.len();
    let mut fz = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut az = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    f.evaluate_into(z, &mut fz[..n]);
    a.apply_into(z, &mut az[..n]);
    dissipation_inner(&fz[..n], &az[..n])
}

fn reals_to_unit_complex(v: &[f64]) -> Option<Vec<C64>> {
    let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return None;
    }
    Some(
        v.chunks_exact(2)
            .map(|p| C64::new(p[0] / norm, p[1] / norm))
            .collect(),
    )
}

/// Sample directions on the sphere of `C^N ≅ R^{2N}`: the signed
/// coordinate axes, then a low-discrepancy sequence.
fn sample_directions(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let dim = 2 * n;
    let mut dirs = Vec::with_capacity(count);
    for i in 0..dim {
        for sign in [1.0, -1.0] {
            let mut v = vec![0.0; dim];
            v[i] = sign;
            dirs.push(v);
        }
    }
    let mut seq = SphereSequence::new(dim, seed);
    while dirs.len() < count {
        dirs.push(seq.next_direction());
    }
    dirs
}

/// Estimate the sphere range of `g` and classify the system.
///
/// Deterministic for a fixed seed; sample counts below 1000 are raised
/// to 1000 (low counts reduce confidence, they are not an error).
pub fn certify_conditions(
    f: &CubicNonlinearity,
    a: &HermitianForm,
    opts: CertifyOptions,
) -> Result<(DissipationBounds, Classification)> {
    let n = f.n_components();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.dim(),
        });
    }
    let n_samples = opts.n_samples.max(MIN_SAMPLES);
    let tol = opts.tol.unwrap_or(1e-9 * f.max_coeff_abs().max(1.0));

    let dirs = sample_directions(n, n_samples, opts.seed);
    let mut evaluated: Vec<(f64, usize)> = dirs
        .par_iter()
        .enumerate()
        .map(|(i, v)| {
            let z = reals_to_unit_complex(v).expect("directions are unit vectors");
            (g_at(f, a, &z), i)
        })
        .collect();
    evaluated.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    let mut min_g = evaluated.first().map(|e| e.0).unwrap();
    let mut max_g = evaluated.last().map(|e| e.0).unwrap();

    // Polish both extremes from the best candidates.
    let polish = |start: &[f64], sign: f64| -> f64 {
        let objective = |v: &[f64]| match reals_to_unit_complex(v) {
            Some(z) => sign * g_at(f, a, &z),
            None => f64::INFINITY,
        };
        let (_, value) = nelder_mead(objective, start, NelderMeadOptions::default());
        sign * value
    };
    for (_, idx) in evaluated.iter().take(POLISH_CANDIDATES) {
        min_g = min_g.min(polish(&dirs[*idx], 1.0));
    }
    for (_, idx) in evaluated.iter().rev().take(POLISH_CANDIDATES) {
        max_g = max_g.max(polish(&dirs[*idx], -1.0));
    }

    let bounds = DissipationBounds {
        c_star: -min_g,
        c_upper: -max_g,
        max_violation: max_g,
        samples_used: n_samples,
    };
    let classification = if max_g <= -tol {
        Classification::StrictlyDissipative
    } else if min_g.abs().max(max_g.abs()) <= tol {
        Classification::Conservative
    } else if max_g <= tol && min_g < -tol {
        Classification::WeaklyDissipative
    } else {
        Classification::Violated
    };
    Ok((bounds, classification))
}

/// Target for the diagonal-certificate search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertificateMode {
    /// Any nonpositive functional (`max g ≤ 0`): global existence regime.
    Sdge,
    /// Strictly negative pinch: the logarithmic decay regime.
    Decay,
}

impl CertificateMode {
    pub fn admits(self, class: Classification) -> bool {
        match self {
            CertificateMode::Sdge => !matches!(class, Classification::Violated),
            CertificateMode::Decay => matches!(class, Classification::StrictlyDissipative),
        }
    }
}

/// Search for a positive diagonal certificate `A = diag(κ)`.
///
/// For diagonal `A` the functional is linear in `κ`,
/// `g(z; κ) = Σ_j κ_j Im(F_j(z) conj(z_j))`, so a fixed direction set
/// gives a cheap surrogate for `max_z g`.  The search minimizes the
/// scale-invariant objective `max_z g(z;κ) / min_j κ_j` over the open
/// unit simplex (coarse grid, then Nelder–Mead in softmax coordinates),
/// with a tiny anisotropy tie-break so conservative families resolve to
/// the most balanced `κ`.  The winner is validated with
/// [`certify_conditions`]; `None` means no certificate was found at the
/// search resolution, which is a valid outcome.
pub fn find_diagonal_certificate(
    f: &CubicNonlinearity,
    mode: CertificateMode,
    opts: CertifyOptions,
) -> Result<Option<HermitianForm>> {
    let n = f.n_components();

    let validate = |kappa: &[f64]| -> Result<Option<HermitianForm>> {
        let a = HermitianForm::diagonal(kappa)?;
        let (_, class) = certify_conditions(f, &a, opts)?;
        Ok(if mode.admits(class) { Some(a) } else { None })
    };

    if n == 1 {
        return validate(&[1.0]);
    }

    // Per-sample coefficient vectors w with g(z; κ) = κ·w.
    let dirs = sample_directions(n, 4096, opts.seed);
    let weights: Vec<Vec<f64>> = dirs
        .par_iter()
        .map(|v| {
            let z = reals_to_unit_complex(v).expect("unit direction");
            let mut fz = [C64::new(0.0, 0.0); MAX_COMPONENTS];
            f.evaluate_into(&z, &mut fz[..n]);
            (0..n).map(|j| (fz[j] * z[j].conj()).im).collect()
        })
        .collect();

    let g_diag = |kappa: &[f64], z: &[C64]| -> f64 {
        let mut fz = [C64::new(0.0, 0.0); MAX_COMPONENTS];
        f.evaluate_into(z, &mut fz[..n]);
        kappa
            .iter()
            .zip(&fz[..n])
            .zip(z)
            .map(|((k, fj), zj)| k * (fj * zj.conj()).im)
            .sum()
    };

    // max_z g estimated from the cached samples, sharpened by a short
    // polish from the best few; without the polish the sample-set
    // granularity biases the location of the optimal κ by a few percent.
    let objective = |kappa: &[f64]| -> f64 {
        let min_k = kappa.iter().copied().fold(f64::INFINITY, f64::min);
        let max_k = kappa.iter().copied().fold(0.0f64, f64::max);
        let mut best: [(f64, usize); 3] = [(f64::NEG_INFINITY, 0); 3];
        for (i, w) in weights.iter().enumerate() {
            let g: f64 = kappa.iter().zip(w).map(|(k, wj)| k * wj).sum();
            if g > best[0].0 {
                best[2] = best[1];
                best[1] = best[0];
                best[0] = (g, i);
            } else if g > best[1].0 {
                best[2] = best[1];
                best[1] = (g, i);
            } else if g > best[2].0 {
                best[2] = (g, i);
            }
        }
        let mut max_g = best[0].0;
        for (value, idx) in best {
            if !value.is_finite() {
                continue;
            }
            let polish_obj = |v: &[f64]| match reals_to_unit_complex(v) {
                Some(z) => -g_diag(kappa, &z),
                None => f64::INFINITY,
            };
            let (_, neg) = nelder_mead(
                polish_obj,
                &dirs[idx],
                NelderMeadOptions {
                    max_iters: 120,
                    f_tol: 1e-13,
                    initial_step: 0.05,
                },
            );
            max_g = max_g.max(-neg);
        }
        max_g / min_k + 1e-6 * (max_k / min_k)
    };

    // Coarse pass over the rational simplex grid.
    let mut best_kappa = vec![1.0 / n as f64; n];
    let mut best_value = objective(&best_kappa);
    for kappa in simplex_grid(n, 6) {
        let value = objective(&kappa);
        if value < best_value {
            best_value = value;
            best_kappa = kappa;
        }
    }

    // Refine in softmax coordinates (unconstrained, strictly positive).
    let y0: Vec<f64> = best_kappa[..n - 1]
        .iter()
        .map(|k| (k / best_kappa[n - 1]).ln())
        .collect();
    let (y_best, _) = nelder_mead(
        |y| objective(&softmax_kappa(y)),
        &y0,
        NelderMeadOptions {
            max_iters: 800,
            f_tol: 1e-14,
            initial_step: 0.1,
        },
    );
    let kappa = softmax_kappa(&y_best);

    // Report with min κ normalized to one.
    let min_k = kappa.iter().copied().fold(f64::INFINITY, f64::min);
    let normalized: Vec<f64> = kappa.iter().map(|k| k / min_k).collect();
    validate(&normalized)
}

fn softmax_kappa(y: &[f64]) -> Vec<f64> {
    let mut kappa: Vec<f64> = y.iter().map(|v| v.exp()).collect();
    kappa.push(1.0);
    let sum: f64 = kappa.iter().sum();
    for k in &mut kappa {
        *k /= sum;
    }
    kappa
}

/// Interior points `κ = i/q` of the unit simplex with `Σ i = q`, `i ≥ 1`.
fn simplex_grid(n: usize, q: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    let mut current = vec![1usize; n];
    fn rec(slot: usize, remaining: usize, current: &mut Vec<usize>, q: usize, out: &mut Vec<Vec<f64>>) {
        if slot == current.len() - 1 {
            current[slot] = remaining;
            out.push(current.iter().map(|i| *i as f64 / q as f64).collect());
            return;
        }
        let tail = current.len() - 1 - slot;
        for i in 1..=(remaining - tail) {
            current[slot] = i;
            rec(slot + 1, remaining - i, current, q, out);
        }
    }
    rec(0, q, &mut current, q, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BuiltinExample;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn certify_example21_unit_pinch() {
        // With λ = (-i, -i), μ = (1, 1), A = I the functional is exactly
        // -|z|⁴, so both pinch constants are 1.
        let spec = BuiltinExample::example21([c(0.0, -1.0); 2], [c(1.0, 0.0); 2])
            .system_spec(None)
            .unwrap();
        let a = HermitianForm::identity(2).unwrap();
        let (bounds, class) =
            certify_conditions(&spec.nonlinearity, &a, CertifyOptions::default()).unwrap();
        assert_eq!(class, Classification::StrictlyDissipative);
        assert!((bounds.c_star - 1.0).abs() < 1e-6, "C_* = {}", bounds.c_star);
        assert!((bounds.c_upper - 1.0).abs() < 1e-6, "C^* = {}", bounds.c_upper);
        assert!(bounds.c_star >= bounds.c_upper);
    }

    #[test]
    fn certify_example22_conservative() {
        let spec = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap();
        let a = HermitianForm::identity(4).unwrap();
        let (bounds, class) =
            certify_conditions(&spec.nonlinearity, &a, CertifyOptions::default()).unwrap();
        assert_eq!(class, Classification::Conservative);
        assert!(bounds.max_violation.abs() < 1e-12);
        assert!(bounds.c_star.abs() < 1e-12);
    }

    #[test]
    fn certify_antidissipative_violated() {
        let spec = BuiltinExample::single(c(0.0, 1.0)).system_spec(None).unwrap();
        let a = HermitianForm::identity(1).unwrap();
        let (bounds, class) =
            certify_conditions(&spec.nonlinearity, &a, CertifyOptions::default()).unwrap();
        assert_eq!(class, Classification::Violated);
        assert!((bounds.max_violation - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sample_bounds_bracket_every_direction() {
        // -c_star ≤ g ≤ -c_upper must hold at every sampled direction.
        let spec = BuiltinExample::example21([c(0.0, -1.0), c(-0.3, -0.5)], [c(0.8, 0.3), c(1.2, 0.0)])
            .system_spec(None)
            .unwrap();
        let a = HermitianForm::diagonal(&[0.7, 1.1]).unwrap();
        let opts = CertifyOptions {
            n_samples: 3000,
            ..Default::default()
        };
        let (bounds, _) = certify_conditions(&spec.nonlinearity, &a, opts).unwrap();
        for v in sample_directions(2, 3000, opts.seed) {
            let z = reals_to_unit_complex(&v).unwrap();
            let g = g_at(&spec.nonlinearity, &a, &z);
            assert!(g >= -bounds.c_star - 1e-12);
            assert!(g <= -bounds.c_upper + 1e-12);
        }
    }

    #[test]
    fn diagonal_search_recovers_coupling_balance() {
        // μ = (2, 1): the balanced certificate satisfies κ1 μ1 = κ2 conj(μ2),
        // i.e. κ ∝ (1, 2).
        let spec = BuiltinExample::example21([c(0.0, -1.0); 2], [c(2.0, 0.0), c(1.0, 0.0)])
            .system_spec(None)
            .unwrap();
        let found = find_diagonal_certificate(
            &spec.nonlinearity,
            CertificateMode::Decay,
            CertifyOptions::default(),
        )
        .unwrap()
        .expect("certificate exists");
        let kappa = found.as_diagonal().expect("diagonal by construction");
        let ratio = kappa[1] / kappa[0];
        assert!((ratio - 2.0).abs() < 0.05, "κ2/κ1 = {ratio}");
    }

    #[test]
    fn diagonal_search_balances_conservative_family() {
        // μ = (1, 1, 1, 3): κ1μ1 + κ2μ2 + κ3μ3 = κ4 conj(μ4) at κ ∝ (1,1,1,1).
        let spec = BuiltinExample::example22([c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(3.0, 0.0)])
            .system_spec(None)
            .unwrap();
        let found = find_diagonal_certificate(
            &spec.nonlinearity,
            CertificateMode::Sdge,
            CertifyOptions::default(),
        )
        .unwrap()
        .expect("certificate exists");
        let kappa = found.as_diagonal().unwrap();
        for k in &kappa {
            assert!((k - 1.0).abs() < 0.05, "κ = {kappa:?}");
        }
    }

    #[test]
    fn diagonal_search_reports_absence() {
        let spec = BuiltinExample::single(c(0.0, 0.7)).system_spec(None).unwrap();
        for mode in [CertificateMode::Sdge, CertificateMode::Decay] {
            let found =
                find_diagonal_certificate(&spec.nonlinearity, mode, CertifyOptions::default())
                    .unwrap();
            assert!(found.is_none());
        }
    }

    #[test]
    fn simplex_grid_covers_interior() {
        let grid = simplex_grid(3, 6);
        assert_eq!(grid.len(), 10); // compositions of 6 into 3 positive parts
        for kappa in &grid {
            assert!((kappa.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(kappa.iter().all(|k| *k > 0.0));
        }
    }
}
