use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::XpError;
use crate::models::{zoo_model, ModelSpec};
use crate::tensor::Operator;

/// A model given by zoo name or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Zoo(String),
    Inline(Box<ModelSpec>),
}

impl ModelRef {
    pub fn resolve(&self) -> Result<ModelSpec, XpError> {
        let spec = match self {
            ModelRef::Zoo(name) => zoo_model(name).map_err(|e| XpError::Config(e.to_string()))?,
            ModelRef::Inline(spec) => (**spec).clone(),
        };
        spec.validate().map_err(|e| XpError::Config(format!("model {}: {e}", spec.name)))?;
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Scaling,
    Spectrum,
    Holonomy,
    Robustness,
    Trace,
    Kato,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Scaling => "scaling",
            Experiment::Spectrum => "spectrum",
            Experiment::Holonomy => "holonomy",
            Experiment::Robustness => "robustness",
            Experiment::Trace => "trace",
            Experiment::Kato => "kato",
        }
    }
}

/// Generator used to evolve a coherence trace.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceGenerator {
    /// `ℒ₀ + ℒ₁/T` with `ℒ₁` the first variation of the Lindblad shift.
    #[default]
    FirstOrder,
    /// The dissipator of the shifted Lindblad operators `L_α + δL_α/T`.
    Full,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Absolute eigenvalue tolerance for the zero cluster of `ℒ₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<f64>,
    /// Number of largest-parameter points used by the log-log fit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit_points: Option<usize>,
    /// `‖𝒫₀𝒱𝒫₀‖` below which a perturbation counts as robust, relative
    /// to `‖𝒱‖`.
    #[serde(default = "default_robust_tol")]
    pub robust: f64,
    /// Eigenvalues of the restricted map below this modulus are dropped.
    #[serde(default = "default_drop_modulus")]
    pub drop_modulus: f64,
}

fn default_robust_tol() -> f64 {
    1e-10
}

fn default_drop_modulus() -> f64 {
    1e-6
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            kernel: None,
            fit_points: None,
            robust: default_robust_tol(),
            drop_modulus: default_drop_modulus(),
        }
    }
}

/// An operator named in the model (control or perturbation) or inline.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorRef {
    Named(String),
    Inline(Operator),
}

/// Lindblad shifts named in the model or inline, one per Lindblad term.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ShiftRef {
    Named(String),
    Inline(Vec<Operator>),
}

/// A perturbation screened by the robustness experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum CandidateKind {
    /// `V` entering as `−i[V, •]`.
    Hamiltonian(OperatorRef),
    /// Lindblad shifts `δL_α` entering through their first variation.
    Dissipative(ShiftRef),
    /// `Σ_j Σ_μ c_j^μ σ_j^μ` with coefficients drawn from the seed.
    SiteFields,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    #[serde(flatten)]
    pub kind: CandidateKind,
}

/// One experiment run, read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    pub experiment: Experiment,
    /// Control Hamiltonian (scaling, holonomy, kato).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control: Option<String>,
    /// Lindblad shift list (scaling, spectrum, trace, kato).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_values: Option<Vec<f64>>,
    /// Evolution time: holonomy path length, or `t/T` for kato.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<f64>,
    /// Reference `T` for the robustness end-to-end difference.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<Candidate>>,
    /// Number of samples along a coherence trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default)]
    pub generator: TraceGenerator,
    #[serde(default)]
    pub sup_grid: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

fn config_error(msg: impl Into<String>) -> XpError {
    XpError::Config(msg.into())
}

fn check_increasing(name: &str, values: &[f64]) -> Result<(), XpError> {
    if values.is_empty() {
        return Err(config_error(format!("{name} must be nonempty")));
    }
    if values.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(config_error(format!("{name} must be positive and finite")));
    }
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(config_error(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parses and validates a JSON config.
    pub fn from_json(text: &str) -> Result<Self, XpError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_error(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Structural checks that do not need the model.
    pub fn validate(&self) -> Result<(), XpError> {
        if let Some(ts) = &self.t_values {
            check_increasing("t_values", ts)?;
        }
        if let Some(xs) = &self.x_values {
            check_increasing("x_values", xs)?;
        }
        if let Some(ns) = &self.n_values {
            let as_f: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
            check_increasing("n_values", &as_f)?;
        }
        for (name, v) in [("time", self.time), ("reference_t", self.reference_t)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(config_error(format!("{name} must be positive and finite")));
                }
            }
        }
        if let Some(k) = self.tolerances.kernel {
            if !(k.is_finite() && k > 0.0) {
                return Err(config_error("tolerances.kernel must be positive"));
            }
        }
        if let Some(p) = self.tolerances.fit_points {
            if p < 2 {
                return Err(config_error("tolerances.fit_points must be at least 2"));
            }
        }
        if !(self.tolerances.robust.is_finite() && self.tolerances.robust > 0.0) {
            return Err(config_error("tolerances.robust must be positive"));
        }
        if !(self.tolerances.drop_modulus.is_finite() && self.tolerances.drop_modulus >= 0.0) {
            return Err(config_error("tolerances.drop_modulus must be non-negative"));
        }
        if self.samples == Some(0) || self.samples == Some(1) {
            return Err(config_error("samples must be at least 2"));
        }
        if let Some(c) = &self.candidates {
            if c.is_empty() {
                return Err(config_error("candidates must be nonempty"));
            }
        }
        let needs = |field: &str, present: bool| {
            if present {
                Ok(())
            } else {
                Err(config_error(format!(
                    "{} experiment needs {field}",
                    self.experiment.name()
                )))
            }
        };
        match self.experiment {
            Experiment::Scaling | Experiment::Spectrum => needs("t_values", self.t_values.is_some()),
            Experiment::Holonomy => {
                needs("n_values", self.n_values.is_some())?;
                needs("control", self.control.is_some())
            }
            Experiment::Kato => needs("control or perturbation", self.control.is_some() || self.perturbation.is_some()),
            Experiment::Robustness | Experiment::Trace => Ok(()),
        }
    }
}
