//! Norms of a field: per-component `L²`, overall sup norm, the spectral
//! `H¹` norm, and the weighted norm `‖x·U(-t)u(t)‖_{L²}` that tracks the
//! persistence of spatial localization along the flow.

use super::{forward_transform, free_propagate, Field};
use crate::algebra::MassVector;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct FieldNorms {
    /// `‖u_j‖_{L²}` per component.
    pub l2: Vec<f64>,
    /// `max_j ‖u_j‖_{L∞}`.
    pub linf: f64,
    /// `(Σ_j ∫ (1+η²)|û_j|² dη)^{1/2}`.
    pub h1: f64,
    /// `‖x·U(-t)u(t)‖_{L²}`, aggregated over components.
    pub x_weighted: f64,
}

pub fn norms(field: &Field, masses: &MassVector) -> Result<FieldNorms> {
    let grid = &field.grid;
    let dx = grid.dx();

    let l2: Vec<f64> = field
        .values
        .iter()
        .map(|v| (v.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx).sqrt())
        .collect();
    let linf = field.sup_norm();

    let spectral = forward_transform(field);
    let d_eta = grid.d_eta();
    let mut h1_sq = 0.0;
    for comp in &spectral.coeffs {
        for (k, c) in comp.iter().enumerate() {
            let eta = grid.eta()[k];
            h1_sq += (1.0 + eta * eta) * c.norm_sqr() * d_eta;
        }
    }

    // Back-propagate to t = 0, then weight by x.
    let pulled = free_propagate(field, masses, -field.time)?;
    let mut xw_sq = 0.0;
    for comp in &pulled.values {
        for (k, z) in comp.iter().enumerate() {
            let x = grid.x()[k];
            xw_sq += x * x * z.norm_sqr() * dx;
        }
    }

    Ok(FieldNorms {
        l2,
        linf,
        h1: h1_sq.sqrt(),
        x_weighted: xw_sq.sqrt(),
    })
}

/// Weighted Sobolev sizes of initial data, aggregated in `ℓ²` across
/// components; reported (never asserted) when data is constructed.
#[derive(Debug, Clone, Copy)]
pub struct SobolevReport {
    /// `(Σ_j ‖u_j‖_{H^{1,0}}²)^{1/2}`.
    pub h10: f64,
    /// `(Σ_j ‖u_j‖_{H^{0,1}}²)^{1/2}`.
    pub h01: f64,
}

impl SobolevReport {
    /// The smallness parameter `ε = ‖u°‖_{H^{1,0}} + ‖u°‖_{H^{0,1}}`.
    pub fn epsilon(&self) -> f64 {
        self.h10 + self.h01
    }
}

pub fn sobolev_report(field: &Field) -> SobolevReport {
    let grid = &field.grid;
    let spectral = forward_transform(field);
    let mut h10_sq = 0.0;
    for comp in &spectral.coeffs {
        for (k, c) in comp.iter().enumerate() {
            let eta = grid.eta()[k];
            h10_sq += (1.0 + eta * eta) * c.norm_sqr() * grid.d_eta();
        }
    }
    let mut h01_sq = 0.0;
    for comp in &field.values {
        for (k, z) in comp.iter().enumerate() {
            let x = grid.x()[k];
            h01_sq += (1.0 + x * x) * z.norm_sqr() * grid.dx();
        }
    }
    SobolevReport {
        h10: h10_sq.sqrt(),
        h01: h01_sq.sqrt(),
    }
}
