//! Discrete transforms in the continuous `1/√2π` convention and the
//! exact free propagator.

use std::sync::Arc;

use rayon::prelude::*;

use super::{Field, Grid, SpectralField};
use crate::algebra::MassVector;
use crate::error::{Error, Result};
use crate::C64;

const SQRT_TAU: f64 = 2.506628274631000502415765284811; // √(2π)

/// Forward transform of one component: FFT scaled by `dx/√2π`, with the
/// alternating sign absorbing the `x_0 = -L` origin (valid because `n`
/// is even, so wavenumber aliasing preserves parity).
pub(crate) fn forward_component(grid: &Grid, values: &[C64]) -> Vec<C64> {
    let mut buf = values.to_vec();
    grid.fft_plan().process(&mut buf);
    let scale = grid.dx() / SQRT_TAU;
    for (k, c) in buf.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { scale } else { -scale };
        *c *= sign;
    }
    buf
}

/// Inverse of [`forward_component`].
pub(crate) fn backward_component(grid: &Grid, coeffs: &[C64]) -> Vec<C64> {
    let scale = grid.d_eta() / SQRT_TAU;
    let mut buf: Vec<C64> = coeffs
        .iter()
        .enumerate()
        .map(|(k, c)| if k % 2 == 0 { c * scale } else { -c * scale })
        .collect();
    grid.ifft_plan().process(&mut buf);
    buf
}

/// Discrete approximation of `(𝓕φ)(η) = (1/√2π)∫e^{-ixη}φ(x)dx`.
pub fn forward_transform(field: &Field) -> SpectralField {
    let coeffs = field
        .values
        .par_iter()
        .map(|v| forward_component(&field.grid, v))
        .collect();
    SpectralField {
        time: field.time,
        grid: Arc::clone(&field.grid),
        coeffs,
    }
}

/// Exact inverse of [`forward_transform`].
pub fn backward_transform(spectral: &SpectralField) -> Field {
    let values = spectral
        .coeffs
        .par_iter()
        .map(|c| backward_component(&spectral.grid, c))
        .collect();
    Field {
        time: spectral.time,
        grid: Arc::clone(&spectral.grid),
        values,
    }
}

/// Advance the free flow in place: component `j`'s spectrum is
/// multiplied by `exp(-i·dt·η²/(2m_j))`.  Negative `dt` runs the group
/// backwards; each component's `L²` norm is preserved exactly.
pub fn free_propagate_mut(field: &mut Field, masses: &MassVector, dt: f64) -> Result<()> {
    if field.n_components() != masses.len() {
        return Err(Error::DimensionMismatch {
            expected: masses.len(),
            got: field.n_components(),
        });
    }
    let grid = Arc::clone(&field.grid);
    let inv_n = 1.0 / grid.n_points() as f64;
    field
        .values
        .par_iter_mut()
        .enumerate()
        .for_each(|(j, comp)| {
            grid.fft_plan().process(comp);
            let phase_scale = -dt / (2.0 * masses[j]);
            for (k, c) in comp.iter_mut().enumerate() {
                let eta = grid.eta()[k];
                // Fold the 1/n round-trip normalization into the symbol.
                *c *= C64::from_polar(inv_n, phase_scale * eta * eta);
            }
            grid.ifft_plan().process(comp);
        });
    field.time += dt;
    Ok(())
}

/// Pure version of [`free_propagate_mut`].
pub fn free_propagate(field: &Field, masses: &MassVector, dt: f64) -> Result<Field> {
    let mut out = field.clone();
    free_propagate_mut(&mut out, masses, dt)?;
    Ok(out)
}
