//! Periodic spatial discretization and the operator toolbox of the free
//! Schrödinger group.
//!
//! Conventions, fixed once for the whole crate:
//!
//! * domain `x ∈ [-L, L)` with `n` (a power of two) equispaced points;
//! * FFT wavenumbers `η_k = (π/L)·k̃` with `k̃ = k` for `k < n/2` and
//!   `k - n` otherwise, so `dη = π/L`;
//! * transforms follow the symmetric continuous normalization
//!   `(𝓕φ)(η) = (1/√2π) ∫ e^{-ixη} φ(x) dx`, i.e. the discrete forward
//!   transform is the FFT scaled by `dx/√2π` (plus the alternating phase
//!   that accounts for the `-L` origin);
//! * the scaled transform `𝓖_j φ(ξ) = √(m_j/i)·(𝓕φ)(m_j ξ)` uses the
//!   principal branch `√(1/i) = e^{-iπ/4}`.

mod io;
mod norms;
mod profile;
mod transform;

pub use io::{read_field_snapshot, read_profile_snapshot, write_field_snapshot, write_profile_snapshot};
pub use norms::{norms, sobolev_report, FieldNorms, SobolevReport};
pub use profile::{apply_w, compute_profile, resample_profiles, Profile, ProfileComponent};
pub use transform::{backward_transform, forward_transform, free_propagate, free_propagate_mut};

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::C64;

/// Immutable periodic grid with cached FFT plans; shareable across
/// threads behind an `Arc`.
pub struct Grid {
    half_length: f64,
    n_points: usize,
    dx: f64,
    d_eta: f64,
    x: Vec<f64>,
    eta: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl Grid {
    pub fn new(half_length: f64, n_points: usize) -> Result<Arc<Self>> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half length must be positive, got {half_length}"
            )));
        }
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two ≥ 16, got {n_points}"
            )));
        }
        let dx = 2.0 * half_length / n_points as f64;
        let d_eta = std::f64::consts::PI / half_length;
        let x = (0..n_points)
            .map(|k| -half_length + k as f64 * dx)
            .collect();
        let eta = (0..n_points)
            .map(|k| {
                let signed = if k < n_points / 2 {
                    k as isize
                } else {
                    k as isize - n_points as isize
                };
                d_eta * signed as f64
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_points);
        let ifft = planner.plan_fft_inverse(n_points);
        Ok(Arc::new(Grid {
            half_length,
            n_points,
            dx,
            d_eta,
            x,
            eta,
            fft,
            ifft,
        }))
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn d_eta(&self) -> f64 {
        self.d_eta
    }

    /// Grid points `x_k = -L + k·dx`.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// Wavenumbers in FFT order.
    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Nyquist wavenumber `π/dx`.
    pub fn eta_max(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }

    pub(crate) fn fft_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.fft
    }

    pub(crate) fn ifft_plan(&self) -> &Arc<dyn Fft<f64>> {
        &self.ifft
    }

    /// Reorder an FFT-order array so the wavenumber runs ascending
    /// from `-η_max` to `η_max - dη`.
    pub fn shift_to_ascending<T: Copy>(&self, a: &[T]) -> Vec<T> {
        let half = self.n_points / 2;
        let mut out = Vec::with_capacity(self.n_points);
        out.extend_from_slice(&a[half..]);
        out.extend_from_slice(&a[..half]);
        out
    }

    /// Inverse of [`Grid::shift_to_ascending`].
    pub fn shift_to_fft_order<T: Copy>(&self, a: &[T]) -> Vec<T> {
        let half = self.n_points / 2;
        let mut out = Vec::with_capacity(self.n_points);
        out.extend_from_slice(&a[half..]);
        out.extend_from_slice(&a[..half]);
        out
    }
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid")
            .field("half_length", &self.half_length)
            .field("n_points", &self.n_points)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.half_length == other.half_length && self.n_points == other.n_points
    }
}

/// Physical-space state: per-component complex amplitudes sampled on the
/// grid, at a given time.
#[derive(Debug, Clone)]
pub struct Field {
    pub time: f64,
    pub grid: Arc<Grid>,
    pub values: Vec<Vec<C64>>,
}

impl Field {
    pub fn zero(grid: Arc<Grid>, n_components: usize) -> Self {
        let values = vec![vec![C64::new(0.0, 0.0); grid.n_points()]; n_components];
        Field {
            time: 0.0,
            grid,
            values,
        }
    }

    pub fn n_components(&self) -> usize {
        self.values.len()
    }

    pub fn check_shape(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidArgument("field has no components".into()));
        }
        for v in &self.values {
            if v.len() != self.grid.n_points() {
                return Err(Error::DimensionMismatch {
                    expected: self.grid.n_points(),
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest modulus over all components and points.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

/// Fourier-space state: coefficients in FFT order under the `1/√2π`
/// continuous normalization.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub time: f64,
    pub grid: Arc<Grid>,
    pub coeffs: Vec<Vec<C64>>,
}

impl SpectralField {
    /// Fraction of spectral mass in the top 10% of wavenumber bins; the
    /// aliasing guard flags runs where this exceeds `1e-8`.
    pub fn tail_fraction(&self) -> f64 {
        let threshold = 0.9 * self.grid.eta_max();
        let mut tail = 0.0;
        let mut total = 0.0;
        for comp in &self.coeffs {
            for (k, c) in comp.iter().enumerate() {
                let mass = c.norm_sqr();
                total += mass;
                if self.grid.eta()[k].abs() >= threshold {
                    tail += mass;
                }
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    /// Smallest `η` such that the centered band `|η'| ≤ η` carries at
    /// least `fraction` of the total spectral mass.  Used by the no-wrap
    /// guard to bound the fastest significant group velocity.
    pub fn significant_band(&self, fraction: f64) -> f64 {
        let mut weighted: Vec<(f64, f64)> = Vec::new();
        let mut total = 0.0;
        for comp in &self.coeffs {
            for (k, c) in comp.iter().enumerate() {
                let mass = c.norm_sqr();
                total += mass;
                weighted.push((self.grid.eta()[k].abs(), mass));
            }
        }
        if total <= 0.0 {
            return 0.0;
        }
        weighted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let mut acc = 0.0;
        for (eta, mass) in weighted {
            acc += mass;
            if acc >= fraction * total {
                return eta;
            }
        }
        self.grid.eta_max()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_construction_and_wavenumbers() {
        let grid = Grid::new(40.0, 64).unwrap();
        assert_eq!(grid.n_points(), 64);
        assert!((grid.dx() * 64.0 - 80.0).abs() < 1e-12);
        // Symmetric about zero except the Nyquist bin.
        let eta = grid.eta();
        assert_eq!(eta[0], 0.0);
        for k in 1..32 {
            assert!((eta[k] + eta[64 - k]).abs() < 1e-12);
        }
        assert!((eta[32] + grid.eta_max()).abs() < 1e-12);
        // x runs [-L, L).
        assert_eq!(grid.x()[0], -40.0);
        assert!(grid.x()[63] < 40.0);
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid::new(40.0, 15).is_err());
        assert!(Grid::new(40.0, 48).is_err());
        assert!(Grid::new(-1.0, 64).is_err());
        assert!(Grid::new(40.0, 16).is_ok());
    }

    #[test]
    fn shift_round_trip() {
        let grid = Grid::new(10.0, 16).unwrap();
        let data: Vec<usize> = (0..16).collect();
        let shifted = grid.shift_to_ascending(&data);
        assert_eq!(shifted[0], 8); // most negative wavenumber first
        let back = grid.shift_to_fft_order(&shifted);
        assert_eq!(back, data);
        // Ascending means ascending.
        let eta_sorted = grid.shift_to_ascending(grid.eta());
        for w in eta_sorted.windows(2) {
            assert!(w[0] < w[1]);
        }
    }
}
