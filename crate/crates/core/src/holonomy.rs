//! Geometric form of the projected dynamics: a control Hamiltonian `k`
//! generates the frame rotation `e^{t𝒦}`, `𝒦 = −i[k, •]`, and interleaving
//! it with the steady-state projector `𝒫₀` converges to the holonomy
//! `X(t) = e^{−t𝒦} e^{t𝒫₀𝒦𝒫₀} 𝒫₀`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouville::hamiltonian_superop;
use crate::tensor::{spectral_norm, Operator, SuperOperator};

fn check_dims(k: &Operator, p0: &SuperOperator) -> Result<()> {
    if k.dim() != p0.dim() {
        return Err(Error::DimensionMismatch {
            expected: p0.dim(),
            found: k.dim(),
        });
    }
    Ok(())
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// `e^{−t𝒦} (e^{(t/n)𝒦} 𝒫₀)^n`.
pub fn projection_string(k: &Operator, p0: &SuperOperator, t: f64, n: u64) -> Result<SuperOperator> {
    check_dims(k, p0)?;
    check_time(t)?;
    if n == 0 {
        return Err(Error::OutOfRange("projection string needs n ≥ 1".into()));
    }
    let kk = hamiltonian_superop(k)?;
    let step = &kk.scale_re(t / n as f64).expm()? * p0;
    Ok(&kk.scale_re(-t).expm()? * &step.pow(n))
}

/// The projection string on an arbitrary increasing time grid
/// `0 = τ₀ < τ₁ < … < τ_n = t`: `e^{−t𝒦} ∏_j e^{(τ_j − τ_{j−1})𝒦} 𝒫₀`,
/// later factors to the left.
pub fn projection_string_on_grid(k: &Operator, p0: &SuperOperator, grid: &[f64]) -> Result<SuperOperator> {
    check_dims(k, p0)?;
    if grid.len() < 2 || grid[0] != 0.0 {
        return Err(Error::OutOfRange("time grid must start at 0 and have ≥ 2 points".into()));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite);
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::OutOfRange("time grid must be strictly increasing".into()));
    }
    let kk = hamiltonian_superop(k)?;
    let mut acc = p0.clone();
    for w in grid.windows(2) {
        acc = &(&kk.scale_re(w[1] - w[0]).expm()? * p0) * &acc;
    }
    let t = grid[grid.len() - 1];
    Ok(&kk.scale_re(-t).expm()? * &acc)
}

/// `X(t) = e^{−t𝒦} e^{t𝒫₀𝒦𝒫₀} 𝒫₀`.
pub fn holonomy_closed_form(k: &Operator, p0: &SuperOperator, t: f64) -> Result<SuperOperator> {
    check_dims(k, p0)?;
    check_time(t)?;
    let kk = hamiltonian_superop(k)?;
    let projected = &(p0 * &kk) * p0;
    Ok(&(&kk.scale_re(-t).expm()? * &projected.scale_re(t).expm()?) * p0)
}

/// `𝒫_t = e^{−t𝒦} 𝒫₀ e^{t𝒦}`.
pub fn instantaneous_projector(k: &Operator, p0: &SuperOperator, t: f64) -> Result<SuperOperator> {
    check_dims(k, p0)?;
    check_time(t)?;
    let kk = hamiltonian_superop(k)?;
    Ok(&(&kk.scale_re(-t).expm()? * p0) * &kk.scale_re(t).expm()?)
}

/// `𝒫̇_t = [−𝒦, 𝒫_t]`.
pub fn projector_derivative(k: &Operator, p0: &SuperOperator, t: f64) -> Result<SuperOperator> {
    let pt = instantaneous_projector(k, p0, t)?;
    let kk = hamiltonian_superop(k)?;
    Ok(&(&pt * &kk) - &(&kk * &pt))
}

/// One evaluation of the projection string against its limit.
#[derive(Clone, Debug, Serialize)]
pub struct HolonomyRun {
    #[serde(skip)]
    pub k: Operator,
    pub t: f64,
    pub n: u64,
    #[serde(skip)]
    pub product_value: SuperOperator,
    #[serde(skip)]
    pub closed_form: SuperOperator,
    /// Spectral norm of `product_value − closed_form`.
    pub deviation: f64,
}

/// Runs the projection string for every `n` in `ns` (in parallel, results
/// in input order) against a single closed-form evaluation.
pub fn holonomy_runs(k: &Operator, p0: &SuperOperator, t: f64, ns: &[u64]) -> Result<Vec<HolonomyRun>> {
    let closed = holonomy_closed_form(k, p0, t)?;
    ns.par_iter()
        .map(|&n| {
            let product = projection_string(k, p0, t, n)?;
            let deviation = spectral_norm(&(&product - &closed));
            Ok(HolonomyRun {
                k: k.clone(),
                t,
                n,
                product_value: product,
                closed_form: closed.clone(),
                deviation,
            })
        })
        .collect()
}
