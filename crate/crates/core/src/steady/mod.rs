//! Steady-state structure of a Lindbladian: zero-group projector, reduced
//! resolvent and dissipative gap, plus the interaction-algebra machinery
//! that characterizes the kernel of unital generators.

mod algebra;

use nalgebra::DMatrix;

pub use algebra::{
    algebra_closure, commutant_basis, commutant_projector, hamiltonian_robustness_check,
    unital_consistency, AlgebraDecomposition, Block, RobustnessCheck,
};

use crate::error::{Error, Result};
use crate::tensor::{MatrixView, SchurForm, SpectralSplit, SuperOperator, C64};

/// Default cluster tolerance relative to the spectral radius.
pub const DEFAULT_REL_TOL: f64 = 1e-8;

/// Projector onto the kernel of `ℒ₀`, its reduced resolvent and gap.
#[derive(Clone, Debug)]
pub struct SteadyDecomposition {
    p0: SuperOperator,
    s: SuperOperator,
    gap: f64,
    kernel_rank: usize,
    tol: f64,
    split: SpectralSplit,
}

impl SteadyDecomposition {
    /// The zero-group spectral projector `𝒫₀`.
    pub fn p0(&self) -> &SuperOperator {
        &self.p0
    }

    /// The reduced resolvent `𝒮` with `𝒮ℒ₀ = ℒ₀𝒮 = I − 𝒫₀`.
    pub fn s(&self) -> &SuperOperator {
        &self.s
    }

    /// `min |Re λ|` over the nonzero eigenvalues (infinite if there are none).
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// `τ_R = 1/gap`.
    pub fn relaxation_time(&self) -> f64 {
        1.0 / self.gap
    }

    pub fn kernel_rank(&self) -> usize {
        self.kernel_rank
    }

    /// Absolute eigenvalue tolerance used for the zero cluster.
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.p0.dim()
    }

    pub fn split(&self) -> &SpectralSplit {
        &self.split
    }

    /// Orthonormal basis (columns of vectorized operators) of `range 𝒫₀`.
    pub fn range_basis(&self) -> DMatrix<C64> {
        self.split.range_basis()
    }

    /// `W` with `𝒫₀ = range_basis · W`.
    pub fn range_coordinates(&self) -> DMatrix<C64> {
        self.split.range_coordinates()
    }

    /// `W M Q₁`: the action of `M` on `range 𝒫₀` in the range basis, valid
    /// for maps that leave the range invariant after projection.
    pub fn compress<M: MatrixView + ?Sized>(&self, m: &M) -> DMatrix<C64> {
        let q1 = self.range_basis();
        let w = self.range_coordinates();
        crate::tensor::matmul(&crate::tensor::matmul(&w, m.matrix()), &q1)
    }
}

/// Splits `l0` at its zero eigenvalue cluster.
///
/// `tol` is an absolute eigenvalue tolerance; it defaults to
/// [`DEFAULT_REL_TOL`] times the spectral radius. Eigenvalues with
/// `|λ| < tol` form the zero group and must be separated from the rest by
/// at least `10·tol`.
pub fn zero_group_projector(l0: &SuperOperator, tol: Option<f64>) -> Result<SteadyDecomposition> {
    let schur = SchurForm::new(l0)?;
    let eig = schur.eigenvalues();
    let radius = eig.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = match tol {
        Some(t) if t > 0.0 && t.is_finite() => t,
        Some(t) => return Err(Error::OutOfRange(format!("kernel tolerance {t}"))),
        None => (DEFAULT_REL_TOL * radius).max(f64::MIN_POSITIVE),
    };
    if let Some(z) = eig.iter().find(|z| z.norm() >= tol && z.re > tol) {
        return Err(Error::NotDissipative(z.re));
    }
    let gap = eig
        .iter()
        .filter(|z| z.norm() >= tol)
        .map(|z| z.re.abs())
        .fold(f64::INFINITY, f64::min);
    let split = schur.split(|z| z.norm() < tol, tol)?;
    let p0 = split.projector().clone();
    let s = split.complement_inverse();
    Ok(SteadyDecomposition {
        p0,
        s,
        gap,
        kernel_rank: split.cluster_size(),
        tol,
        split,
    })
}
