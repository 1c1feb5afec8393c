//! Cubic gauge-invariant nonlinearities and their structural conditions.
//!
//! A nonlinearity is a sparse list of monomials
//! `C u_k^{(σ1)} u_l^{(σ2)} u_m^{(σ3)}` feeding component `j`, where a
//! `-` sign means complex conjugation.  Gauge invariance under
//! `u_j -> e^{i m_j θ} u_j` is equivalent, monomial by monomial, to the
//! mass-resonance identity `σ1 m_k + σ2 m_l + σ3 m_m = m_j`.

mod builtins;
mod certify;
mod wire;

pub use builtins::BuiltinExample;
pub use certify::{
    certify_conditions, find_diagonal_certificate, CertificateMode, CertifyOptions,
    Classification, DissipationBounds,
};

use crate::error::{Error, Result};
use crate::C64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hard cap on the number of components; sphere search and the pointwise
/// solver buffers are sized for small systems.
pub const MAX_COMPONENTS: usize = 8;

/// Default absolute tolerance for the mass-resonance residual.
pub const RESONANCE_TOL: f64 = 1e-9;

/// Factor sign: `+` leaves the factor alone, `-` conjugates it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn apply(self, z: C64) -> C64 {
        match self {
            Sign::Plus => z,
            Sign::Minus => z.conj(),
        }
    }

    /// +1 or -1, as it enters the resonance identity.
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// The `N` positive mass constants of the system.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.is_empty() || masses.len() > MAX_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "need between 1 and {MAX_COMPONENTS} masses, got {}",
                masses.len()
            )));
        }
        if let Some(bad) = masses.iter().find(|m| !(m.is_finite() && **m > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "masses must be positive and finite, got {bad}"
            )));
        }
        Ok(MassVector(masses))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<usize> for MassVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// One cubic monomial `coeff · u_k^{(σ1)} u_l^{(σ2)} u_m^{(σ3)}` in the
/// equation for component `target`.  Indices are zero-based internally;
/// the file format is one-based.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicMonomial {
    pub target: usize,
    pub factors: [usize; 3],
    pub signs: [Sign; 3],
    pub coeff: C64,
}

impl CubicMonomial {
    pub fn new(target: usize, factors: [usize; 3], signs: [Sign; 3], coeff: C64) -> Result<Self> {
        if coeff == C64::new(0.0, 0.0) {
            return Err(Error::InvalidArgument(
                "zero-coefficient monomials are never stored".into(),
            ));
        }
        Ok(CubicMonomial {
            target,
            factors,
            signs,
            coeff,
        })
    }

    /// Value of the monomial at `z` (without the target projection).
    pub fn eval(&self, z: &[C64]) -> C64 {
        let [k, l, m] = self.factors;
        let [s1, s2, s3] = self.signs;
        self.coeff * s1.apply(z[k]) * s2.apply(z[l]) * s3.apply(z[m])
    }

    /// Signed mass sum minus the target mass; zero exactly at resonance.
    pub fn resonance_residual(&self, masses: &MassVector) -> f64 {
        let [k, l, m] = self.factors;
        let [s1, s2, s3] = self.signs;
        s1.as_f64() * masses[k] + s2.as_f64() * masses[l] + s3.as_f64() * masses[m]
            - masses[self.target]
    }

    pub fn sigma_string(&self) -> String {
        self.signs.iter().map(|s| s.as_char()).collect()
    }
}

/// A cubic homogeneous polynomial `F: C^N -> C^N`, stored as a sparse
/// monomial list.  Duplicate monomials are kept as given and summed
/// during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicNonlinearity {
    n_components: usize,
    monomials: Vec<CubicMonomial>,
}

impl CubicNonlinearity {
    pub fn new(n_components: usize, monomials: Vec<CubicMonomial>) -> Result<Self> {
        if n_components == 0 || n_components > MAX_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "need between 1 and {MAX_COMPONENTS} components, got {n_components}"
            )));
        }
        for mono in &monomials {
            let mut idx = vec![mono.target];
            idx.extend_from_slice(&mono.factors);
            if let Some(bad) = idx.iter().find(|i| **i >= n_components) {
                return Err(Error::InvalidArgument(format!(
                    "monomial index {} out of range for N = {n_components}",
                    bad + 1
                )));
            }
        }
        Ok(CubicNonlinearity {
            n_components,
            monomials,
        })
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn monomials(&self) -> &[CubicMonomial] {
        &self.monomials
    }

    pub fn max_coeff_abs(&self) -> f64 {
        self.monomials
            .iter()
            .map(|m| m.coeff.norm())
            .fold(0.0, f64::max)
    }

    /// `F(z)`, allocating the output.
    pub fn evaluate(&self, z: &[C64]) -> Result<Vec<C64>> {
        if z.len() != self.n_components {
            return Err(Error::DimensionMismatch {
                expected: self.n_components,
                got: z.len(),
            });
        }
        let mut out = vec![C64::new(0.0, 0.0); self.n_components];
        self.evaluate_into(z, &mut out);
        Ok(out)
    }

    /// `F(z)` into a caller-provided buffer; the hot path of the solver.
    /// Lengths must already agree.
    pub fn evaluate_into(&self, z: &[C64], out: &mut [C64]) {
        debug_assert_eq!(z.len(), self.n_components);
        debug_assert_eq!(out.len(), self.n_components);
        out.fill(C64::new(0.0, 0.0));
        for mono in &self.monomials {
            out[mono.target] += mono.eval(z);
        }
    }
}

/// A positive Hermitian certificate matrix with cached extreme eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianForm {
    entries: Vec<Vec<C64>>,
    lambda_min: f64,
    lambda_max: f64,
}

/// Entrywise tolerance for the Hermitian symmetry check.
const HERMITIAN_TOL: f64 = 1e-12;

impl HermitianForm {
    /// Validates `A = A^†` (entrywise within 1e-12) and positive
    /// definiteness, caching the smallest and largest eigenvalues.
    pub fn new(entries: Vec<Vec<C64>>) -> Result<Self> {
        let n = entries.len();
        if n == 0 || n > MAX_COMPONENTS {
            return Err(Error::InvalidArgument(format!(
                "certificate must be between 1x1 and {MAX_COMPONENTS}x{MAX_COMPONENTS}"
            )));
        }
        if entries.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidArgument("certificate must be square".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (entries[i][j] - entries[j][i].conj()).norm() > HERMITIAN_TOL {
                    return Err(Error::InvalidArgument(format!(
                        "certificate is not Hermitian at entry ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let (lambda_min, lambda_max) = hermitian_extreme_eigenvalues(&entries);
        if lambda_min <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "certificate is not positive definite (smallest eigenvalue {lambda_min:e})"
            )));
        }
        Ok(HermitianForm {
            entries,
            lambda_min,
            lambda_max,
        })
    }

    /// Positive diagonal `A = diag(kappa)`.
    pub fn diagonal(kappa: &[f64]) -> Result<Self> {
        if kappa.iter().any(|k| !(k.is_finite() && *k > 0.0)) {
            return Err(Error::InvalidArgument(
                "diagonal certificate entries must be positive".into(),
            ));
        }
        let n = kappa.len();
        let mut entries = vec![vec![C64::new(0.0, 0.0); n]; n];
        for (i, k) in kappa.iter().enumerate() {
            entries[i][i] = C64::new(*k, 0.0);
        }
        Self::new(entries)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<C64>] {
        &self.entries
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Diagonal entries if the matrix is exactly diagonal.
    pub fn as_diagonal(&self) -> Option<Vec<f64>> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                if i != j && self.entries[i][j] != C64::new(0.0, 0.0) {
                    return None;
                }
            }
        }
        Some((0..n).map(|i| self.entries[i][i].re).collect())
    }

    /// `A z` into a caller-provided buffer.
    pub fn apply_into(&self, z: &[C64], out: &mut [C64]) {
        let n = self.dim();
        debug_assert_eq!(z.len(), n);
        debug_assert_eq!(out.len(), n);
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..n {
                acc += self.entries[i][j] * z[j];
            }
            out[i] = acc;
        }
    }

    /// The real quadratic form `z·Az = Σ_j z_j conj((Az)_j)`.
    pub fn quadratic_form(&self, z: &[C64]) -> f64 {
        let n = self.dim();
        let mut az = [C64::new(0.0, 0.0); MAX_COMPONENTS];
        self.apply_into(z, &mut az[..n]);
        z.iter()
            .zip(&az[..n])
            .map(|(zj, aj)| (zj * aj.conj()).re)
            .sum()
    }
}

/// Extreme eigenvalues via the real symmetric embedding
/// `[[Re A, -Im A], [Im A, Re A]]`, whose spectrum is that of `A` with
/// doubled multiplicities.
fn hermitian_extreme_eigenvalues(entries: &[Vec<C64>]) -> (f64, f64) {
    let n = entries.len();
    let mut big = nalgebra::DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let a = entries[i][j];
            big[(i, j)] = a.re;
            big[(i, j + n)] = -a.im;
            big[(i + n, j)] = a.im;
            big[(i + n, j + n)] = a.re;
        }
    }
    let eigs = big.symmetric_eigenvalues();
    let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eigs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// Problem data of the full system: masses, nonlinearity, and an
/// optional dissipativity certificate.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub masses: MassVector,
    pub nonlinearity: CubicNonlinearity,
    pub certificate: Option<HermitianForm>,
}

impl SystemSpec {
    pub fn new(
        masses: MassVector,
        nonlinearity: CubicNonlinearity,
        certificate: Option<HermitianForm>,
    ) -> Result<Self> {
        if nonlinearity.n_components() != masses.len() {
            return Err(Error::DimensionMismatch {
                expected: masses.len(),
                got: nonlinearity.n_components(),
            });
        }
        if let Some(a) = &certificate {
            if a.dim() != masses.len() {
                return Err(Error::DimensionMismatch {
                    expected: masses.len(),
                    got: a.dim(),
                });
            }
        }
        Ok(SystemSpec {
            masses,
            nonlinearity,
            certificate,
        })
    }

    pub fn n_components(&self) -> usize {
        self.masses.len()
    }

    /// Parse the JSON system file (see the crate README for the schema).
    pub fn from_json(text: &str) -> Result<Self> {
        wire::spec_from_json(text)
    }

    pub fn to_json(&self) -> String {
        wire::spec_to_json(self)
    }
}

/// Resonance report for one monomial.
#[derive(Debug, Clone)]
pub struct MonomialReport {
    pub index: usize,
    pub target: usize,
    pub factors: [usize; 3],
    pub sigma: String,
    pub residual: f64,
    pub passed: bool,
}

/// Full gauge-invariance report: exact per-monomial resonance residuals
/// plus a randomized phase-equivariance cross-check.
#[derive(Debug, Clone)]
pub struct GaugeReport {
    pub monomials: Vec<MonomialReport>,
    pub passed: bool,
    /// Largest `|F(e^{imθ}z) - e^{im_jθ}F(z)|` over the sampled (θ, z).
    pub sampled_max_violation: f64,
}

/// Check the mass-resonance identity `σ1 m_k + σ2 m_l + σ3 m_m = m_j`
/// for every monomial, within absolute tolerance `tol`.
///
/// The identity is what phase matching of `e^{i m θ}` factors demands of
/// a gauge-invariant monomial, so it is exact; the sampled cross-check
/// in the report guards the checker itself.
pub fn check_gauge_invariance(spec: &SystemSpec, tol: f64) -> GaugeReport {
    let monomials = spec
        .nonlinearity
        .monomials()
        .iter()
        .enumerate()
        .map(|(index, mono)| {
            let residual = mono.resonance_residual(&spec.masses);
            MonomialReport {
                index,
                target: mono.target,
                factors: mono.factors,
                sigma: mono.sigma_string(),
                residual,
                passed: residual.abs() <= tol,
            }
        })
        .collect::<Vec<_>>();
    let passed = monomials.iter().all(|m| m.passed);
    let sampled_max_violation = sampled_phase_violation(spec, 100, 0);
    GaugeReport {
        monomials,
        passed,
        sampled_max_violation,
    }
}

/// Max violation of `F_j(e^{im·θ}z) = e^{im_jθ}F_j(z)` over `n_samples`
/// seeded random pairs (θ, z) with |z_j| ≤ 1.
pub fn sampled_phase_violation(spec: &SystemSpec, n_samples: usize, seed: u64) -> f64 {
    let n = spec.n_components();
    let f = &spec.nonlinearity;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..n_samples {
        let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let z: Vec<C64> = (0..n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let rotated: Vec<C64> = z
            .iter()
            .enumerate()
            .map(|(j, zj)| zj * C64::from_polar(1.0, spec.masses[j] * theta))
            .collect();
        let f_rotated = f.evaluate(&rotated).expect("dimensions agree");
        let f_plain = f.evaluate(&z).expect("dimensions agree");
        for j in 0..n {
            let expected = f_plain[j] * C64::from_polar(1.0, spec.masses[j] * theta);
            worst = worst.max((f_rotated[j] - expected).norm());
        }
    }
    worst
}

/// The dissipation functional `Im(F(z)·Az)` with `y·w = Σ y_j conj(w_j)`.
///
/// Nonpositivity of this quantity for all `z` is the structural condition
/// behind global existence; a two-sided quartic pinch upgrades the decay
/// rate by the `(log t)^{-1/2}` factor.
pub fn dissipation_functional(f: &CubicNonlinearity, a: &HermitianForm, z: &[C64]) -> Result<f64> {
    let n = f.n_components();
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.dim(),
        });
    }
    if z.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: z.len(),
        });
    }
    let mut fz = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    let mut az = [C64::new(0.0, 0.0); MAX_COMPONENTS];
    f.evaluate_into(z, &mut fz[..n]);
    a.apply_into(z, &mut az[..n]);
    Ok(dissipation_inner(&fz[..n], &az[..n]))
}

#[inline]
pub(crate) fn dissipation_inner(fz: &[C64], az: &[C64]) -> f64 {
    fz.iter()
        .zip(az)
        .map(|(fj, aj)| (fj * aj.conj()).im)
        .sum()
}
