//! Model zoo: the concrete systems used by the experiments, built
//! programmatically together with the analytic facts they must reproduce.

pub mod pauli;
pub mod random;
mod zoo;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use zoo::{
    bath_steady_state, collective_lindblads, example0_model, fig1_model, four_qubit_emergent,
    four_qubit_pauli_form, reduced_hamiltonian, right_shift, total_spin_squared,
    two_qubit_emergent, zoo_model, zoo_names,
};

use crate::error::{Error, Result};
use crate::kato::emergent_hamiltonian_formula;
use crate::liouville::{dissipator, unitality_check, LindbladModel};
use crate::steady::{algebra_closure, zero_group_projector};
use crate::tensor::Operator;

/// Analytic facts a model must reproduce, each with a short note on where
/// the value comes from.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expected {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_rank: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unital: Option<bool>,
    /// Distinct eigenvalues of the emergent Hamiltonian of the `delta`
    /// perturbation, ascending.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emergent_spectrum: Option<Vec<f64>>,
    /// Phases `θ` of the limiting eigenvalues `e^{iθ}` of `e^{Tℒ}𝒫₀`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit_phases: Option<Vec<f64>>,
    /// Wedderburn blocks `(n_J, d_J)` of the Lindblad algebra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sources: BTreeMap<String, String>,
}

/// Initial state and observation basis for a coherence trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSetup {
    /// Columns are the basis vectors in which `ρ(t)` is read out.
    pub basis: Operator,
    pub state: Operator,
    /// Zero-based `(row, column)` of the tracked element in that basis.
    pub element: (usize, usize),
    /// Time window in units of `T`.
    pub window: (f64, f64),
    pub t: f64,
}

/// A named model with its controls, perturbations and expected facts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    pub model: LindbladModel,
    #[serde(default)]
    pub controls: BTreeMap<String, Operator>,
    /// Named lists of `δL_α`, one per Lindblad operator.
    #[serde(default)]
    pub perturbations: BTreeMap<String, Vec<Operator>>,
    #[serde(default)]
    pub parameters: BTreeMap<String, f64>,
    #[serde(default)]
    pub expected: Expected,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceSetup>,
}

/// One re-derived fact.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FactCheck {
    pub fact: String,
    pub expected: String,
    pub found: String,
    pub ok: bool,
}

impl ModelSpec {
    pub fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn control(&self, name: &str) -> Result<&Operator> {
        self.controls
            .get(name)
            .ok_or_else(|| Error::OutOfRange(format!("model {} has no control {name:?}", self.name)))
    }

    pub fn perturbation(&self, name: &str) -> Result<&[Operator]> {
        self.perturbations
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| {
                Error::OutOfRange(format!("model {} has no perturbation {name:?}", self.name))
            })
    }

    /// Checks internal consistency: every operator matches the model
    /// dimension and every perturbation has one entry per Lindblad term.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let check = |op: &Operator| {
            if op.dim() == dim {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    expected: dim,
                    found: op.dim(),
                })
            }
        };
        for op in self.controls.values() {
            check(op)?;
        }
        for list in self.perturbations.values() {
            if list.len() != self.model.lindblads().len() {
                return Err(Error::LengthMismatch {
                    expected: self.model.lindblads().len(),
                    found: list.len(),
                });
            }
            list.iter().try_for_each(check)?;
        }
        if let Some(tr) = &self.trace {
            check(&tr.basis)?;
            check(&tr.state)?;
            if tr.element.0 >= dim || tr.element.1 >= dim {
                return Err(Error::OutOfRange(format!("trace element {:?}", tr.element)));
            }
        }
        Ok(())
    }

    /// Re-derives every recorded fact with the engine.
    pub fn verify_expected(&self) -> Result<Vec<FactCheck>> {
        let mut out = Vec::new();
        let e = &self.expected;
        if let Some(rank) = e.kernel_rank {
            let sd = zero_group_projector(&dissipator(&self.model), None)?;
            out.push(FactCheck {
                fact: "kernel_rank".into(),
                expected: rank.to_string(),
                found: sd.kernel_rank().to_string(),
                ok: sd.kernel_rank() == rank,
            });
        }
        if let Some(unital) = e.unital {
            let found = unitality_check(&self.model).unital;
            out.push(FactCheck {
                fact: "unital".into(),
                expected: unital.to_string(),
                found: found.to_string(),
                ok: found == unital,
            });
        }
        if let Some(spectrum) = &e.emergent_spectrum {
            let sd = zero_group_projector(&dissipator(&self.model), None)?;
            let a = emergent_hamiltonian_formula(&self.model, self.perturbation("delta")?, &sd)?;
            let found = distinct_eigenvalues(&a, 1e-6);
            let ok = found.len() == spectrum.len()
                && found.iter().zip(spectrum).all(|(f, s)| (f - s).abs() <= 1e-8);
            out.push(FactCheck {
                fact: "emergent_spectrum".into(),
                expected: format!("{spectrum:?}"),
                found: format!("{found:?}"),
                ok,
            });
        }
        if let Some(blocks) = &e.blocks {
            let gens: Vec<Operator> = self.model.lindblads().iter().map(|(l, _)| l.clone()).collect();
            let alg = algebra_closure(&gens, 0)?;
            let found = alg.block_shapes();
            out.push(FactCheck {
                fact: "blocks".into(),
                expected: format!("{blocks:?}"),
                found: format!("{found:?}"),
                ok: &found == blocks,
            });
        }
        Ok(out)
    }
}

/// Eigenvalues of a hermitian operator with clusters closer than `tol`
/// merged, ascending.
pub fn distinct_eigenvalues(a: &Operator, tol: f64) -> Vec<f64> {
    let (values, _) = a.hermitian_eigen();
    let mut out: Vec<f64> = Vec::new();
    for v in values {
        match out.last() {
            Some(&last) if (v - last).abs() <= tol => {}
            _ => out.push(v),
        }
    }
    out
}

/// Differences `a_i − a_j` over all pairs of eigenvalues, ascending and
/// without repeats. These are the phases of `e^{−i[A, •]}`.
pub fn phase_differences(spectrum: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for a in spectrum {
        for b in spectrum {
            let d = a - b;
            if !out.iter().any(|x| (x - d).abs() < 1e-9) {
                out.push(d);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}
