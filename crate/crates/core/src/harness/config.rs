use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::ModelFile;
use crate::propagators::{QDriftMode, TrotterOrder};
use crate::qpe::MAX_REGISTER_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    /// Exact eigenvector input, exact powers.
    #[serde(rename = "E1_exact")]
    Exact,
    /// Input perturbed away from an eigenvector by a prescribed residual.
    #[serde(rename = "E2_residual")]
    Residual,
    /// Powers of a Trotter product.
    #[serde(rename = "E3_trotter")]
    Trotter,
    /// Prefixes of QDRIFT random products, over many realizations.
    #[serde(rename = "E4_qdrift")]
    QDrift,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Exact => "E1_exact",
            ExperimentKind::Residual => "E2_residual",
            ExperimentKind::Trotter => "E3_trotter",
            ExperimentKind::QDrift => "E4_qdrift",
        }
    }

    fn sweepable(self) -> &'static [SweepParameter] {
        use SweepParameter::*;
        match self {
            ExperimentKind::Exact => &[T, Eps, N],
            ExperimentKind::Residual => &[T, Eps, N, Residual],
            ExperimentKind::Trotter | ExperimentKind::QDrift => &[T, Eps, N, Steps],
        }
    }
}

/// Where the model and input vector come from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceConfig {
    /// A model given term by term. Its spectrum must already lie in
    /// `[0, 2π)` unless `normalize` is set.
    Inline {
        model: ModelFile,
        #[serde(default)]
        eigen_index: usize,
        #[serde(default)]
        normalize: bool,
    },
    Random(RandomInstance),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInstance {
    pub dim: usize,
    pub num_terms: usize,
    /// Fraction in `(0, 1]` of the widest allowed spectral window
    /// `[0.1·2π, 0.9·2π]` that the spectrum spans.
    #[serde(default = "default_norm_scale")]
    pub norm_scale: f64,
    pub seed: u64,
    /// Target eigenvector, counted in increasing eigenphase.
    #[serde(default)]
    pub eigen_index: usize,
}

fn default_norm_scale() -> f64 {
    1.0
}

/// Register width: either `t` directly, or `(n, eps)` from which each
/// experiment derives `t` with its own qubit-count formula.
///
/// `n` sets the failure radius `ℓ = 2^{t−n}`; without it `ℓ = 4`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegisterConfig {
    #[serde(default)]
    pub t: Option<u32>,
    #[serde(default)]
    pub n: Option<u32>,
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    T,
    N,
    Eps,
    /// Residual `‖Hψ − aψ‖` (E2).
    Residual,
    /// Steps per unit time `r` (E3, E4).
    Steps,
}

impl SweepParameter {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParameter::T => "t",
            SweepParameter::N => "n",
            SweepParameter::Eps => "eps",
            SweepParameter::Residual => "residual",
            SweepParameter::Steps => "steps",
        }
    }

    fn integral(self) -> bool {
        matches!(self, SweepParameter::T | SweepParameter::N | SweepParameter::Steps)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub instance: InstanceConfig,
    #[serde(default)]
    pub register: RegisterConfig,
    /// Without a sweep the experiment runs once at the fixed parameters.
    #[serde(default)]
    pub sweep: Option<Sweep>,
    /// Simulated measurement shots per sweep point, on top of the exact
    /// distribution.
    #[serde(default)]
    pub shots: u64,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub mode: QDriftMode,
    #[serde(default = "default_trotter_order")]
    pub trotter_order: u32,
    /// Steps per unit time when not swept.
    #[serde(default)]
    pub steps: Option<u64>,
    /// Residual when not swept (E2).
    #[serde(default)]
    pub residual: Option<f64>,
    /// Read residual values as multiples of the target's eigenvalue gap.
    #[serde(default)]
    pub residual_relative: bool,
}

fn default_realizations() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_trotter_order() -> u32 {
    1
}

/// One point of the sweep with every parameter resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub index: usize,
    pub sweep_value: f64,
    pub t: Option<u32>,
    pub n: Option<u32>,
    pub eps: Option<f64>,
    pub steps: Option<u64>,
    pub residual: Option<f64>,
}

impl ExperimentConfig {
    pub fn trotter(&self) -> TrotterOrder {
        TrotterOrder::from_int(self.trotter_order).expect("validated")
    }

    /// Parameter values at every sweep point, in order.
    pub fn points(&self) -> Vec<Point> {
        let base = Point {
            index: 0,
            sweep_value: f64::NAN,
            t: self.register.t,
            n: self.register.n,
            eps: self.register.eps,
            steps: self.steps,
            residual: self.residual,
        };
        let Some(sweep) = &self.sweep else {
            return vec![base];
        };
        sweep
            .values
            .iter()
            .enumerate()
            .map(|(index, &v)| {
                let mut p = Point {
                    index,
                    sweep_value: v,
                    ..base
                };
                match sweep.parameter {
                    SweepParameter::T => p.t = Some(v as u32),
                    SweepParameter::N => p.n = Some(v as u32),
                    SweepParameter::Eps => {
                        p.eps = Some(v);
                        p.t = None;
                    }
                    SweepParameter::Residual => p.residual = Some(v),
                    SweepParameter::Steps => p.steps = Some(v as u64),
                }
                p
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(sweep) = &self.sweep {
            if !self.kind.sweepable().contains(&sweep.parameter) {
                let allowed: Vec<&str> = self.kind.sweepable().iter().map(|p| p.as_str()).collect();
                return Err(Error::config(
                    "sweep.parameter",
                    format!(
                        "{} cannot sweep `{}` (allowed: {})",
                        self.kind.as_str(),
                        sweep.parameter.as_str(),
                        allowed.join(", ")
                    ),
                ));
            }
            if let Some(i) = sweep.values.windows(2).position(|w| !(w[0] < w[1])) {
                return Err(Error::config(
                    "sweep.values",
                    format!(
                        "values must be strictly increasing ({} is followed by {})",
                        sweep.values[i],
                        sweep.values[i + 1]
                    ),
                ));
            }
            for (i, &v) in sweep.values.iter().enumerate() {
                let bad = !v.is_finite()
                    || (sweep.parameter.integral() && (v < 0.0 || v.fract() != 0.0))
                    || (sweep.parameter == SweepParameter::Residual && v < 0.0);
                if bad {
                    return Err(Error::config(
                        format!("sweep.values[{i}]"),
                        format!("{v} is not a valid `{}`", sweep.parameter.as_str()),
                    ));
                }
            }
        }
        if self.kind == ExperimentKind::QDrift && self.realizations < 1 {
            return Err(Error::config("realizations", "need at least one realization"));
        }
        if TrotterOrder::from_int(self.trotter_order).is_err() {
            return Err(Error::config("trotter_order", "must be 1 or 2"));
        }
        if let InstanceConfig::Random(r) = &self.instance {
            if r.dim < 2 {
                return Err(Error::config("instance.random.dim", "must be at least 2"));
            }
            if r.num_terms < 1 {
                return Err(Error::config("instance.random.num_terms", "must be at least 1"));
            }
            if !(r.norm_scale > 0.0 && r.norm_scale <= 1.0) {
                return Err(Error::config("instance.random.norm_scale", "must lie in (0, 1]"));
            }
            if r.eigen_index >= r.dim {
                return Err(Error::config("instance.random.eigen_index", "exceeds the dimension"));
            }
        }
        for p in self.points() {
            self.validate_point(&p)?;
        }
        Ok(())
    }

    fn validate_point(&self, p: &Point) -> Result<()> {
        let at = |field: &str| match &self.sweep {
            Some(s) if field == s.parameter.as_str() => format!("sweep.values[{}]", p.index),
            _ if field == "steps" || field == "residual" => field.to_string(),
            _ => format!("register.{field}"),
        };
        if p.t.is_none() && (p.n.is_none() || p.eps.is_none()) {
            return Err(Error::config(
                "register",
                "give either `t` or both `n` and `eps`",
            ));
        }
        if let Some(eps) = p.eps {
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Error::config(at("eps"), "eps must lie in (0, 1)"));
            }
        }
        if let Some(t) = p.t {
            if t == 0 || t > MAX_REGISTER_QUBITS {
                return Err(Error::config(
                    at("t"),
                    format!("t must lie in 1..={MAX_REGISTER_QUBITS}"),
                ));
            }
            if let Some(n) = p.n {
                if n >= t {
                    return Err(Error::config(at("n"), format!("n = {n} must be below t = {t}")));
                }
            } else if t < 3 {
                return Err(Error::config(at("t"), "without `n`, t must be at least 3"));
            }
        }
        if p.n == Some(0) {
            return Err(Error::config(at("n"), "n must be at least 1"));
        }
        match self.kind {
            ExperimentKind::Trotter | ExperimentKind::QDrift => match p.steps {
                None => return Err(Error::config("steps", "required for this experiment")),
                Some(0) => return Err(Error::config(at("steps"), "must be positive")),
                _ => {}
            },
            ExperimentKind::Residual => match p.residual {
                None => return Err(Error::config("residual", "required for this experiment")),
                Some(r) if r < 0.0 => return Err(Error::config(at("residual"), "must be nonnegative")),
                _ => {}
            },
            ExperimentKind::Exact => {}
        }
        Ok(())
    }
}

/// Parse and validate a config; errors name the offending field path.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::config(if path == "." { "<root>".into() } else { path }, e.inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_config_file(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    load_config(&text)
}
