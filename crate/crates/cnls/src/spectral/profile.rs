//! Asymptotic profile extraction and the dilation-compensated chirp
//! operator `W(t)`.
//!
//! The profile of component `j` is
//! `α_j(ξ) = √(m_j/i)·(𝓕[U_j(-t)u_j(t)])(m_j ξ)`, realized without any
//! resampling: undo the free evolution in spectrum, scale by
//! `√(m_j)·e^{-iπ/4}`, and label the FFT bins with the native
//! frequencies `ξ_k = η_k/m_j`.

use std::sync::Arc;

use rayon::prelude::*;

use super::transform::{backward_component, forward_component};
use super::{forward_transform, Field, Grid};
use crate::algebra::MassVector;
use crate::error::{Error, Result};
use crate::C64;

/// One component's profile on its native frequency grid (ascending ξ).
#[derive(Debug, Clone)]
pub struct ProfileComponent {
    pub mass: f64,
    pub xi: Vec<f64>,
    pub values: Vec<C64>,
}

/// Profiles of all components at one time.
#[derive(Debug, Clone)]
pub struct Profile {
    pub time: f64,
    pub grid: Arc<Grid>,
    pub components: Vec<ProfileComponent>,
}

impl Profile {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// `max_j sup_ξ |α_j(ξ)|`.
    pub fn sup_norm(&self) -> f64 {
        self.components
            .iter()
            .flat_map(|c| c.values.iter())
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Principal branch `√(1/i) = e^{-iπ/4}`, fixed globally.
fn gauge_branch(mass: f64) -> C64 {
    let quarter = std::f64::consts::FRAC_PI_4;
    C64::from_polar(mass.sqrt(), -quarter)
}

/// Extract `α(t,ξ) = 𝓖(U(-t)u(t))(ξ)` from a field at time `t ≥ 0`.
pub fn compute_profile(field: &Field, masses: &MassVector) -> Result<Profile> {
    if field.time < 0.0 {
        return Err(Error::InvalidTime {
            requirement: "nonnegative",
            got: field.time,
        });
    }
    if field.n_components() != masses.len() {
        return Err(Error::DimensionMismatch {
            expected: masses.len(),
            got: field.n_components(),
        });
    }
    let grid = &field.grid;
    let t = field.time;
    let spectral = forward_transform(field);
    let components = spectral
        .coeffs
        .par_iter()
        .enumerate()
        .map(|(j, coeffs)| {
            let mass = masses[j];
            let branch = gauge_branch(mass);
            let undo_scale = t / (2.0 * mass);
            let values_fft: Vec<C64> = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let eta = grid.eta()[k];
                    // U_j(-t) in spectrum, then the 𝓖_j scaling.
                    c * C64::from_polar(1.0, undo_scale * eta * eta) * branch
                })
                .collect();
            let xi: Vec<f64> = grid
                .shift_to_ascending(grid.eta())
                .iter()
                .map(|eta| eta / mass)
                .collect();
            ProfileComponent {
                mass,
                xi,
                values: grid.shift_to_ascending(&values_fft),
            }
        })
        .collect();
    Ok(Profile {
        time: t,
        grid: Arc::clone(&field.grid),
        components,
    })
}

/// Apply `W(t) = 𝓖 M(t) 𝓖⁻¹` (or its inverse, `𝓖 M(-t) 𝓖⁻¹`) to profile
/// data; `t` must be positive.
///
/// In native-grid array terms the `√(m_j/i)` factors and the `m_jξ`
/// dilation cancel between `𝓖` and `𝓖⁻¹`, leaving: inverse transform,
/// multiply by the chirp `exp(±i m_j x²/(2t))`, forward transform.
pub fn apply_w(profile: &Profile, t: f64, inverse: bool) -> Result<Profile> {
    if !(t > 0.0) {
        return Err(Error::InvalidTime {
            requirement: "positive",
            got: t,
        });
    }
    let grid = &profile.grid;
    let components = profile
        .components
        .par_iter()
        .map(|comp| {
            let chirp_scale = if inverse { -comp.mass } else { comp.mass } / (2.0 * t);
            let fft_order = grid.shift_to_fft_order(&comp.values);
            let mut physical = backward_component(grid, &fft_order);
            for (k, v) in physical.iter_mut().enumerate() {
                let x = grid.x()[k];
                *v *= C64::from_polar(1.0, chirp_scale * x * x);
            }
            let transformed = forward_component(grid, &physical);
            ProfileComponent {
                mass: comp.mass,
                xi: comp.xi.clone(),
                values: grid.shift_to_ascending(&transformed),
            }
        })
        .collect();
    Ok(Profile {
        time: profile.time,
        grid: Arc::clone(&profile.grid),
        components,
    })
}

/// Resample every component onto a common frequency grid by local cubic
/// (four-point Lagrange) interpolation of real and imaginary parts.
/// Every target point must lie inside each component's native range.
pub fn resample_profiles(profile: &Profile, target: &[f64]) -> Result<Vec<Vec<C64>>> {
    profile
        .components
        .iter()
        .map(|comp| {
            target
                .iter()
                .map(|&xi| interpolate_cubic(&comp.xi, &comp.values, xi))
                .collect::<Result<Vec<C64>>>()
        })
        .collect()
}

/// Four-point Lagrange interpolation on a uniform ascending grid;
/// reproduces cubics exactly and hits stored nodes bit-exactly.
fn interpolate_cubic(xi: &[f64], values: &[C64], target: f64) -> Result<C64> {
    let n = xi.len();
    let x0 = xi[0];
    let dx = xi[1] - xi[0];
    let last = xi[n - 1];
    if target < x0 || target > last {
        return Err(Error::OutOfRange {
            xi: target,
            min: x0,
            max: last,
        });
    }
    let pos = (target - x0) / dx;
    let cell = (pos.floor() as usize).min(n - 2);
    // Exact node hit: return the stored value untouched.
    if xi[cell] == target {
        return Ok(values[cell]);
    }
    if xi[cell + 1] == target {
        return Ok(values[cell + 1]);
    }
    // Four-point stencil around the cell, clamped at the edges.
    let start = cell.saturating_sub(1).min(n - 4);
    let mut acc = C64::new(0.0, 0.0);
    for i in start..start + 4 {
        let mut weight = 1.0;
        for k in start..start + 4 {
            if k != i {
                weight *= (target - xi[k]) / (xi[i] - xi[k]);
            }
        }
        acc += values[i] * weight;
    }
    Ok(acc)
}
