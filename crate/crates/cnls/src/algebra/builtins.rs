//! Built-in example systems with their natural mass relations.

use super::{CubicMonomial, CubicNonlinearity, MassVector, Sign, SystemSpec};
use crate::error::{Error, Result};
use crate::C64;

use Sign::{Minus, Plus};

/// The worked example systems.
///
/// * `Example21` — two components,
///   `F_1 = λ_1|u|²u_1 + μ_1 conj(u_1)² u_2`,
///   `F_2 = λ_2|u|²u_2 + μ_2 u_1³`, resonant under `m_2 = 3 m_1`.
/// * `Example22` — four components,
///   `F_1 = μ_1 conj(u_2) conj(u_3) u_4` and cyclic variants, with
///   `F_4 = μ_4 u_1 u_2 u_3`, resonant under `m_4 = m_1 + m_2 + m_3`.
/// * `Single` — one component, `F = λ|u|²u`, resonant for every mass.
#[derive(Debug, Clone)]
pub enum BuiltinExample {
    Example21 { lambda: [C64; 2], mu: [C64; 2] },
    Example22 { mu: [C64; 4] },
    Single { lambda: C64 },
}

impl BuiltinExample {
    pub fn example21(lambda: [C64; 2], mu: [C64; 2]) -> Self {
        BuiltinExample::Example21 { lambda, mu }
    }

    pub fn example22(mu: [C64; 4]) -> Self {
        BuiltinExample::Example22 { mu }
    }

    pub fn single(lambda: C64) -> Self {
        BuiltinExample::Single { lambda }
    }

    /// Number of components of the example.
    pub fn n_components(&self) -> usize {
        match self {
            BuiltinExample::Example21 { .. } => 2,
            BuiltinExample::Example22 { .. } => 4,
            BuiltinExample::Single { .. } => 1,
        }
    }

    /// Parse by name with a flat coefficient list, as the CLI supplies it.
    ///
    /// `example21` takes `[λ1, λ2, μ1, μ2]`, `example22` takes
    /// `[μ1, μ2, μ3, μ4]`, `single` takes `[λ]`.
    pub fn from_name(name: &str, params: &[C64]) -> Result<Self> {
        let want = |n: usize| {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "builtin {name:?} takes {n} coefficients, got {}",
                    params.len()
                )))
            }
        };
        match name {
            "example21" | "example_2_1" => {
                want(4)?;
                Ok(Self::example21(
                    [params[0], params[1]],
                    [params[2], params[3]],
                ))
            }
            "example22" | "example_2_2" => {
                want(4)?;
                Ok(Self::example22([params[0], params[1], params[2], params[3]]))
            }
            "single" => {
                want(1)?;
                Ok(Self::single(params[0]))
            }
            _ => Err(Error::InvalidArgument(format!(
                "unknown builtin example {name:?}"
            ))),
        }
    }

    /// Default resonant masses, built from unit base masses.
    pub fn default_masses(&self) -> Vec<f64> {
        match self {
            BuiltinExample::Example21 { .. } => vec![1.0, 3.0],
            BuiltinExample::Example22 { .. } => vec![1.0, 1.0, 1.0, 3.0],
            BuiltinExample::Single { .. } => vec![1.0],
        }
    }

    /// Expand into a full system.  `masses` overrides the default
    /// resonant choice (the override may deliberately break resonance;
    /// the checker reports it).
    pub fn system_spec(&self, masses: Option<Vec<f64>>) -> Result<SystemSpec> {
        let n = self.n_components();
        let masses = match masses {
            Some(m) if m.len() != n => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.len(),
                })
            }
            Some(m) => m,
            None => self.default_masses(),
        };
        let monomials = self.monomials()?;
        SystemSpec::new(
            MassVector::new(masses)?,
            CubicNonlinearity::new(n, monomials)?,
            None,
        )
    }

    fn monomials(&self) -> Result<Vec<CubicMonomial>> {
        let mono = |target, factors, signs, coeff| CubicMonomial::new(target, factors, signs, coeff);
        match self {
            // |u|² u_j expands to u_1 conj(u_1) u_j + u_2 conj(u_2) u_j.
            BuiltinExample::Example21 { lambda, mu } => Ok(vec![
                mono(0, [0, 0, 0], [Plus, Minus, Plus], lambda[0])?,
                mono(0, [1, 1, 0], [Plus, Minus, Plus], lambda[0])?,
                mono(0, [0, 0, 1], [Minus, Minus, Plus], mu[0])?,
                mono(1, [0, 0, 1], [Plus, Minus, Plus], lambda[1])?,
                mono(1, [1, 1, 1], [Plus, Minus, Plus], lambda[1])?,
                mono(1, [0, 0, 0], [Plus, Plus, Plus], mu[1])?,
            ]),
            BuiltinExample::Example22 { mu } => Ok(vec![
                mono(0, [1, 2, 3], [Minus, Minus, Plus], mu[0])?,
                mono(1, [2, 3, 0], [Minus, Plus, Minus], mu[1])?,
                mono(2, [3, 0, 1], [Plus, Minus, Minus], mu[2])?,
                mono(3, [0, 1, 2], [Plus, Plus, Plus], mu[3])?,
            ]),
            BuiltinExample::Single { lambda } => {
                Ok(vec![mono(0, [0, 0, 0], [Plus, Minus, Plus], *lambda)?])
            }
        }
    }
}
