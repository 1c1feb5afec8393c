//! JSON wire format for system specification files.
//!
//! ```json
//! {
//!   "masses": [1.0, 3.0],
//!   "monomials": [
//!     {"j": 1, "k": 1, "l": 1, "m": 2, "sigma": "--+", "coeff": [1.0, 0.0]}
//!   ],
//!   "certificate": {"diagonal": [1.0, 1.0]}
//! }
//! ```
//!
//! Indices are one-based in files, zero-based in memory.  A full matrix
//! certificate is given as `{"matrix": [[[re, im], ...], ...]}`.

use serde::{Deserialize, Serialize};

use super::{
    CubicMonomial, CubicNonlinearity, HermitianForm, MassVector, Sign, SystemSpec,
};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Serialize, Deserialize)]
struct SpecWire {
    masses: Vec<f64>,
    monomials: Vec<MonomialWire>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<CertificateWire>,
}

#[derive(Serialize, Deserialize)]
struct MonomialWire {
    j: usize,
    k: usize,
    l: usize,
    m: usize,
    sigma: String,
    coeff: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CertificateWire {
    Diagonal(Vec<f64>),
    Matrix(Vec<Vec<[f64; 2]>>),
}

fn parse_sigma(s: &str) -> Result<[Sign; 3]> {
    let chars: Vec<char> = s.chars().collect();
    if chars.len() != 3 {
        return Err(Error::InvalidArgument(format!(
            "sigma must be three of '+'/'-', got {s:?}"
        )));
    }
    let mut signs = [Sign::Plus; 3];
    for (i, c) in chars.iter().enumerate() {
        signs[i] = match c {
            '+' => Sign::Plus,
            '-' => Sign::Minus,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "sigma must be three of '+'/'-', got {s:?}"
                )))
            }
        };
    }
    Ok(signs)
}

fn one_based(i: usize, n: usize, what: &str) -> Result<usize> {
    if i == 0 || i > n {
        return Err(Error::InvalidArgument(format!(
            "{what} index {i} out of range 1..={n}"
        )));
    }
    Ok(i - 1)
}

pub(super) fn spec_from_json(text: &str) -> Result<SystemSpec> {
    let wire: SpecWire = serde_json::from_str(text)
        .map_err(|e| Error::InvalidArgument(format!("bad system file: {e}")))?;
    let n = wire.masses.len();
    let masses = MassVector::new(wire.masses)?;
    let monomials = wire
        .monomials
        .iter()
        .map(|m| {
            CubicMonomial::new(
                one_based(m.j, n, "target")?,
                [
                    one_based(m.k, n, "factor")?,
                    one_based(m.l, n, "factor")?,
                    one_based(m.m, n, "factor")?,
                ],
                parse_sigma(&m.sigma)?,
                C64::new(m.coeff[0], m.coeff[1]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let nonlinearity = CubicNonlinearity::new(n, monomials)?;
    let certificate = match wire.certificate {
        None => None,
        Some(CertificateWire::Diagonal(kappa)) => Some(HermitianForm::diagonal(&kappa)?),
        Some(CertificateWire::Matrix(rows)) => {
            let entries = rows
                .into_iter()
                .map(|row| row.into_iter().map(|[re, im]| C64::new(re, im)).collect())
                .collect();
            Some(HermitianForm::new(entries)?)
        }
    };
    SystemSpec::new(masses, nonlinearity, certificate)
}

pub(super) fn spec_to_json(spec: &SystemSpec) -> String {
    let monomials = spec
        .nonlinearity
        .monomials()
        .iter()
        .map(|m| MonomialWire {
            j: m.target + 1,
            k: m.factors[0] + 1,
            l: m.factors[1] + 1,
            m: m.factors[2] + 1,
            sigma: m.sigma_string(),
            coeff: [m.coeff.re, m.coeff.im],
        })
        .collect();
    let certificate = spec.certificate.as_ref().map(|a| match a.as_diagonal() {
        Some(kappa) => CertificateWire::Diagonal(kappa),
        None => CertificateWire::Matrix(
            a.entries()
                .iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        ),
    });
    let wire = SpecWire {
        masses: spec.masses.as_slice().to_vec(),
        monomials,
        certificate,
    };
    serde_json::to_string_pretty(&wire).expect("wire struct serializes")
}

#[cfg(test)]
mod tests {
    use super::super::BuiltinExample;
    use super::*;

    #[test]
    fn round_trip_with_diagonal_certificate() {
        let mut spec = BuiltinExample::example21(
            [C64::new(0.0, -1.0), C64::new(0.0, -1.0)],
            [C64::new(2.0, 0.0), C64::new(1.0, 0.0)],
        )
        .system_spec(None)
        .unwrap();
        spec.certificate = Some(HermitianForm::diagonal(&[1.0, 2.0]).unwrap());
        let text = spec.to_json();
        let back = SystemSpec::from_json(&text).unwrap();
        assert_eq!(back.masses, spec.masses);
        assert_eq!(back.nonlinearity, spec.nonlinearity);
        assert_eq!(
            back.certificate.unwrap().as_diagonal().unwrap(),
            vec![1.0, 2.0]
        );
    }

    #[test]
    fn rejects_bad_sigma_and_indices() {
        let bad_sigma = r#"{"masses": [1.0],
            "monomials": [{"j":1,"k":1,"l":1,"m":1,"sigma":"+*-","coeff":[1,0]}]}"#;
        assert!(SystemSpec::from_json(bad_sigma).is_err());
        let bad_index = r#"{"masses": [1.0],
            "monomials": [{"j":2,"k":1,"l":1,"m":1,"sigma":"+-+","coeff":[1,0]}]}"#;
        assert!(SystemSpec::from_json(bad_index).is_err());
        let zero_coeff = r#"{"masses": [1.0],
            "monomials": [{"j":1,"k":1,"l":1,"m":1,"sigma":"+-+","coeff":[0,0]}]}"#;
        assert!(SystemSpec::from_json(zero_coeff).is_err());
    }
}
