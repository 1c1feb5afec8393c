//! Run configuration: a single JSON document covering the system, the
//! discretization, the solver, the analysis stage, and the output
//! location.  Every field has a default, and any field can be
//! overridden from the command line with `--set path.to.field=value`.

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use cnls::algebra::{BuiltinExample, HermitianForm, SystemSpec};
use cnls::solver::{GuardConfig, GuardMode, SolverConfig};
use cnls::C64;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemSource,
    pub grid: GridConfig,
    pub solver: SolverSection,
    pub data: DataConfig,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            system: SystemSource::default(),
            grid: GridConfig::default(),
            solver: SolverSection::default(),
            data: DataConfig::default(),
            analysis: AnalysisConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum SystemSource {
    #[serde(rename = "builtin")]
    Builtin {
        name: String,
        /// Coefficients in the builtin's order, as `[re, im]` pairs.
        params: Vec<[f64; 2]>,
        #[serde(skip_serializing_if = "Option::is_none")]
        masses: Option<Vec<f64>>,
        #[serde(skip_serializing_if = "Option::is_none")]
        certificate: Option<Vec<f64>>,
    },
    #[serde(rename = "file")]
    File { path: String },
}

impl Default for SystemSource {
    fn default() -> Self {
        SystemSource::Builtin {
            name: "example21".into(),
            params: vec![[0.0, -1.0], [0.0, -1.0], [1.0, 0.0], [1.0, 0.0]],
            masses: None,
            certificate: None,
        }
    }
}

impl SystemSource {
    pub fn load(&self) -> Result<SystemSpec> {
        match self {
            SystemSource::Builtin {
                name,
                params,
                masses,
                certificate,
            } => {
                let coeffs: Vec<C64> = params.iter().map(|[re, im]| C64::new(*re, *im)).collect();
                let builtin = BuiltinExample::from_name(name, &coeffs)?;
                let mut spec = builtin.system_spec(masses.clone())?;
                if let Some(kappa) = certificate {
                    spec.certificate = Some(HermitianForm::diagonal(kappa)?);
                }
                Ok(spec)
            }
            SystemSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading system file {path}"))?;
                Ok(SystemSpec::from_json(&text)?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub half_length: f64,
    pub n_points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            half_length: 200.0,
            n_points: 16384,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub observer_stride: usize,
    pub nonlinear_substeps: usize,
    /// Explicit snapshot times; when empty, a geometric schedule from
    /// `analysis.t0` to `t_end` is generated (plus one earlier sample at
    /// `t0/5`, where the deviation audit starts).
    pub snapshot_times: Vec<f64>,
    pub guard_mode: GuardMode,
    pub guard_energy_fraction: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            dt: 0.01,
            t_end: 100.0,
            observer_stride: 100,
            nonlinear_substeps: 1,
            snapshot_times: Vec::new(),
            guard_mode: GuardMode::Refuse,
            guard_energy_fraction: 0.99,
        }
    }
}

impl SolverSection {
    pub fn to_solver_config(&self, analysis: &AnalysisConfig) -> SolverConfig {
        let snapshot_times = if self.snapshot_times.is_empty() {
            let mut times = vec![(analysis.t0 / 5.0).max(1.0)];
            let count = 8;
            for k in 0..=count {
                times.push(analysis.t0 * (self.t_end / analysis.t0).powf(k as f64 / count as f64));
            }
            times
        } else {
            self.snapshot_times.clone()
        };
        SolverConfig {
            dt: self.dt,
            t_end: self.t_end,
            observer_stride: self.observer_stride,
            nonlinear_substeps: self.nonlinear_substeps,
            snapshot_times,
            guard: GuardConfig {
                mode: self.guard_mode,
                energy_fraction: self.guard_energy_fraction,
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// `gaussian`, `sech`, or `file`.
    pub kind: String,
    pub amplitudes: Vec<[f64; 2]>,
    pub width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            kind: "gaussian".into(),
            amplitudes: vec![[0.1, 0.0], [0.1, 0.0]],
            width: 1.0,
            path: None,
        }
    }
}

impl DataConfig {
    pub fn kind(&self) -> Result<cnls::solver::DataKind> {
        match self.kind.as_str() {
            "gaussian" => Ok(cnls::solver::DataKind::Gaussian),
            "sech" => Ok(cnls::solver::DataKind::Sech),
            "file" => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| anyhow!("data.kind = \"file\" requires data.path"))?;
                Ok(cnls::solver::DataKind::File(path.into()))
            }
            other => bail!("unknown data kind {other:?} (gaussian|sech|file)"),
        }
    }

    pub fn amplitudes(&self) -> Vec<C64> {
        self.amplitudes
            .iter()
            .map(|[re, im]| C64::new(*re, *im))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisConfig {
    /// Profile analysis starts here; earlier times inflate the remainder.
    pub t0: f64,
    /// The reduced flow is extended to this logarithmic time.
    pub s_end: f64,
    /// Fixed step for the PDE/ODE deviation audit.
    pub ds: f64,
    /// Fit window in s = log t for the decay-law fit.
    pub fit_window_s: [f64; 2],
    pub xi_max: f64,
    pub n_xi: usize,
    pub sphere_samples: usize,
    pub seed: u64,
    /// Classification tolerance; `None` scales with the coefficients.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    pub step_safety: f64,
    pub records_per_decade: usize,
    /// Diagnostic weight for the composite norm report only.
    pub gamma: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            t0: 10.0,
            s_end: 1e4,
            ds: 1e-3,
            fit_window_s: [1e2, 1e4],
            xi_max: 8.0,
            n_xi: 257,
            sphere_samples: 20_000,
            seed: 0,
            tol: None,
            step_safety: 0.02,
            records_per_decade: 20,
            gamma: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub overwrite: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: "runs/out".into(),
            overwrite: false,
        }
    }
}

/// Load a config file (or defaults when absent) and apply `--set`
/// overrides of the form `section.field=value`.
pub fn load_config(path: Option<&str>, overrides: &[String]) -> Result<RunConfig> {
    let mut value: serde_json::Value = match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading config file {p}"))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config file {p}"))?
        }
        None => serde_json::to_value(RunConfig::default())?,
    };
    for entry in overrides {
        apply_override(&mut value, entry)?;
    }
    let config: RunConfig =
        serde_json::from_value(value).context("config does not match the expected schema")?;
    Ok(config)
}

pub fn apply_override_public(root: &mut serde_json::Value, entry: &str) -> Result<()> {
    apply_override(root, entry)
}

fn apply_override(root: &mut serde_json::Value, entry: &str) -> Result<()> {
    let (path, raw) = entry
        .split_once('=')
        .ok_or_else(|| anyhow!("override {entry:?} must look like section.field=value"))?;
    let parsed: serde_json::Value = serde_json::from_str(raw)
        .unwrap_or_else(|_| serde_json::Value::String(raw.to_string()));
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    for (i, segment) in segments.iter().enumerate() {
        if i + 1 == segments.len() {
            match cursor {
                serde_json::Value::Object(map) => {
                    map.insert(segment.to_string(), parsed);
                    return Ok(());
                }
                _ => bail!("override path {path:?} does not address an object"),
            }
        }
        cursor = cursor
            .as_object_mut()
            .and_then(|map| map.get_mut(*segment))
            .ok_or_else(|| anyhow!("override path {path:?}: unknown segment {segment:?}"))?;
    }
    unreachable!("split always yields at least one segment")
}

/// Parse a comma-separated list of complex numbers in forms like
/// `1`, `-i`, `2i`, `1+2i`, `0.5-0.25i`.
pub fn parse_complex_list(text: &str) -> Result<Vec<C64>> {
    text.split(',')
        .map(|tok| parse_complex(tok.trim()))
        .collect()
}

pub fn parse_complex(token: &str) -> Result<C64> {
    if token.is_empty() {
        bail!("empty complex number");
    }
    // Pure imaginary shorthand.
    if let Some(stripped) = token.strip_suffix(['i', 'j']) {
        // Split a trailing real part: find the last +/- not at position 0
        // and not part of an exponent.
        let body = stripped;
        let mut split_at = None;
        for (idx, ch) in body.char_indices().skip(1) {
            if (ch == '+' || ch == '-') && !matches!(body.as_bytes()[idx - 1], b'e' | b'E') {
                split_at = Some(idx);
            }
        }
        return match split_at {
            Some(idx) => {
                let re: f64 = body[..idx].parse().map_err(|_| bad_complex(token))?;
                let im_text = &body[idx..];
                let im = parse_imag_part(im_text).ok_or_else(|| bad_complex(token))?;
                Ok(C64::new(re, im))
            }
            None => {
                let im = parse_imag_part(body).ok_or_else(|| bad_complex(token))?;
                Ok(C64::new(0.0, im))
            }
        };
    }
    let re: f64 = token.parse().map_err(|_| bad_complex(token))?;
    Ok(C64::new(re, 0.0))
}

fn parse_imag_part(text: &str) -> Option<f64> {
    match text {
        "" | "+" => Some(1.0),
        "-" => Some(-1.0),
        other => other.parse().ok(),
    }
}

fn bad_complex(token: &str) -> anyhow::Error {
    anyhow!("cannot parse complex number {token:?} (expected forms: 1.5, -i, 2i, 1+2i)")
}
