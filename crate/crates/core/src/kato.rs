//! Kato perturbation terms, effective generators, effective-Hamiltonian
//! extraction and the first-order error bound.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::liouville::{commutator_superop, unitality_check, LindbladModel};
use crate::steady::SteadyDecomposition;
use crate::tensor::{
    expm, hermitian_eigen, matmul, spectral_norm, unvec_unchecked, MatrixView, Operator,
    SuperOperator, C64, I,
};

/// First-order Kato terms of `ℒ₀ + xℒ₁` around the zero group.
#[derive(Clone, Debug)]
pub struct KatoSeries {
    /// `𝒫₁ = −(𝒫₀ℒ₁𝒮 + 𝒮ℒ₁𝒫₀)`
    pub p1: SuperOperator,
    /// `ℛ₁ = 𝒫₀ℒ₁𝒫₀`
    pub r1: SuperOperator,
    /// `ℛ₂ = −(𝒫₀ℒ₁𝒫₀ℒ₁𝒮 + 𝒫₀ℒ₁𝒮ℒ₁𝒫₀ + 𝒮ℒ₁𝒫₀ℒ₁𝒫₀)`
    pub r2: SuperOperator,
}

fn check_dim(sd: &SteadyDecomposition, m: &SuperOperator) -> Result<()> {
    if m.dim() != sd.dim() {
        return Err(Error::DimensionMismatch {
            expected: sd.dim(),
            found: m.dim(),
        });
    }
    Ok(())
}

/// Evaluates the semisimple first- and second-order Kato terms.
pub fn kato_terms(sd: &SteadyDecomposition, l1: &SuperOperator) -> Result<KatoSeries> {
    check_dim(sd, l1)?;
    let p = sd.p0();
    let s = sd.s();
    let pl = p * l1;
    let sl = s * l1;
    let plp = &pl * p;
    let p1 = -&(&(&pl * s) + &(&sl * p));
    let r2 = -&(&(&(&(&plp * l1) * s) + &(&(&(&pl * s) * l1) * p)) + &(&sl * &plp));
    Ok(KatoSeries { p1, r1: plp, r2 })
}

/// `ℒ_eff = 𝒫₀ℒ₁𝒫₀`
pub fn effective_generator(sd: &SteadyDecomposition, l1: &SuperOperator) -> Result<SuperOperator> {
    check_dim(sd, l1)?;
    Ok(&(sd.p0() * l1) * sd.p0())
}

/// HS-orthonormal traceless hermitian basis (generalized Gell-Mann).
pub fn traceless_hermitian_basis(dim: usize) -> Vec<Operator> {
    let mut out = Vec::with_capacity(dim * dim - 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..dim {
        for k in j + 1..dim {
            let mut sym = DMatrix::<C64>::zeros(dim, dim);
            sym[(j, k)] = C64::new(h, 0.0);
            sym[(k, j)] = C64::new(h, 0.0);
            out.push(Operator::wrap(sym));
            let mut anti = DMatrix::<C64>::zeros(dim, dim);
            anti[(j, k)] = C64::new(0.0, -h);
            anti[(k, j)] = C64::new(0.0, h);
            out.push(Operator::wrap(anti));
        }
    }
    for l in 1..dim {
        let norm = 1.0 / ((l * (l + 1)) as f64).sqrt();
        let mut diag = DMatrix::<C64>::zeros(dim, dim);
        for m in 0..l {
            diag[(m, m)] = C64::new(norm, 0.0);
        }
        diag[(l, l)] = C64::new(-(l as f64) * norm, 0.0);
        out.push(Operator::wrap(diag));
    }
    out
}

/// Columns `B` with `‖X B‖_F = ‖X 𝒫₀‖_F` for every `X`.
fn projector_factor(sd: &SteadyDecomposition) -> DMatrix<C64> {
    let q1 = sd.range_basis();
    let w = sd.range_coordinates();
    let (values, vectors) = hermitian_eigen(&matmul(&w, &w.adjoint()));
    let mut root = vectors.clone();
    for (j, v) in values.iter().enumerate() {
        root.column_mut(j).scale_mut(v.max(0.0).sqrt());
    }
    matmul(&q1, &root)
}

/// Hermitian, traceless `A` minimizing `‖(leff + i[A, •])𝒫₀‖_F`, together
/// with the attained residual.
///
/// Directions of `A` that act trivially on the range of `𝒫₀` are removed by
/// taking the minimum-norm least-squares solution, so `A` is unique.
pub fn extract_effective_hamiltonian(
    leff: &SuperOperator,
    sd: &SteadyDecomposition,
) -> Result<(Operator, f64)> {
    check_dim(sd, leff)?;
    let dim = sd.dim();
    let b = projector_factor(sd);
    let k = b.ncols();
    let basis = traceless_hermitian_basis(dim);
    let target = matmul(leff.matrix(), &b);

    // Columns: −i[G_m, X_j] for every basis element X_j of the range.
    let range_ops: Vec<Operator> = (0..k)
        .map(|j| unvec_unchecked(&b.column(j).into_owned(), dim))
        .collect();
    let rows = 2 * dim * dim * k;
    let mut design = DMatrix::<f64>::zeros(rows, basis.len());
    for (m, g) in basis.iter().enumerate() {
        let mut col = design.column_mut(m);
        for (j, x) in range_ops.iter().enumerate() {
            let c = g.commutator(x).scale(-I);
            for (idx, z) in c.matrix().iter().enumerate() {
                let r = 2 * (j * dim * dim + idx);
                col[r] = z.re;
                col[r + 1] = z.im;
            }
        }
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(rows);
    for j in 0..k {
        for idx in 0..dim * dim {
            let z = target[(idx, j)];
            let r = 2 * (j * dim * dim + idx);
            rhs[r] = z.re;
            rhs[r + 1] = z.im;
        }
    }

    let normal = design.transpose() * &design;
    let moment = design.transpose() * &rhs;
    let eig = nalgebra::SymmetricEigen::new(normal);
    let top = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let mut coeffs = nalgebra::DVector::<f64>::zeros(basis.len());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam > 1e-12 * top && lam > 0.0 {
            let v = eig.eigenvectors.column(i);
            coeffs += v * (v.dot(&moment) / lam);
        }
    }

    let mut a = Operator::zeros(dim);
    for (c, g) in coeffs.iter().zip(&basis) {
        a += &g.scale_re(*c);
    }
    let fitted = commutator_superop(&a).scale(-I);
    let residual = (leff - &fitted) * sd.p0().clone();
    Ok((a, residual.frobenius_norm()))
}

/// `Σ_α γ_α δL_α† L_α`
fn variation_moment(model: &LindbladModel, deltas: &[Operator]) -> Result<Operator> {
    if deltas.len() != model.lindblads().len() {
        return Err(Error::LengthMismatch {
            expected: model.lindblads().len(),
            found: deltas.len(),
        });
    }
    let mut m = Operator::zeros(model.dim());
    for ((l, rate), dl) in model.lindblads().iter().zip(deltas) {
        if dl.dim() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                found: dl.dim(),
            });
        }
        m += &(&dl.adjoint() * l).scale_re(*rate);
    }
    Ok(m)
}

/// Closed-form emergent Hamiltonian of a dissipative perturbation
/// `L_α ↦ L_α + εδL_α`.
///
/// For unital generators this is `Im 𝒫₀(Σ_α γ_α δL_α†L_α)`. Otherwise the
/// moment `M = Σ_α γ_α δL_α†L_α` is projected onto
/// `𝒯 = ρ^{−1/2} (range 𝒫₀) ρ^{−1/2}`, `ρ = 𝒫₀(I)`, under the weighted
/// inner product `⟨X, Y⟩_ρ = Tr(X†Yρ)`, and `A = Im` of that projection.
/// On each block this reproduces the per-block partial trace against the
/// block steady state.
pub fn emergent_hamiltonian_formula(
    model: &LindbladModel,
    deltas: &[Operator],
    sd: &SteadyDecomposition,
) -> Result<Operator> {
    if sd.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: sd.dim(),
            found: model.dim(),
        });
    }
    let m = variation_moment(model, deltas)?;
    if unitality_check(model).unital {
        return Ok(sd.p0().apply(&m).im_part());
    }

    let dim = model.dim();
    let rho = sd.p0().apply(&Operator::identity(dim)).hermitian_part();
    let (values, vectors) = rho.hermitian_eigen();
    let top = values.iter().cloned().fold(0.0, f64::max);
    if top <= 0.0 {
        return Err(Error::NotSteady(top));
    }
    let mut inv_sqrt = DMatrix::<C64>::zeros(dim, dim);
    for (j, &v) in values.iter().enumerate() {
        if v > 1e-10 * top {
            let col = vectors.column(j);
            inv_sqrt += (col * col.adjoint()) * C64::new(1.0 / v.sqrt(), 0.0);
        }
    }
    let inv_sqrt = Operator::wrap(inv_sqrt);
    let q1 = sd.range_basis();
    let ts: Vec<Operator> = q1
        .column_iter()
        .map(|c| {
            let b = unvec_unchecked(&c.into_owned(), dim);
            &(&inv_sqrt * &b) * &inv_sqrt
        })
        .collect();
    let n = ts.len();
    let weighted: Vec<Operator> = ts.iter().map(|t| t * &rho).collect();
    let mut gram = DMatrix::<C64>::zeros(n, n);
    let mut moment = nalgebra::DVector::<C64>::zeros(n);
    let m_rho = &m * &rho;
    for i in 0..n {
        for j in 0..n {
            gram[(i, j)] = ts[i].hs_inner(&weighted[j]);
        }
        moment[i] = ts[i].hs_inner(&m_rho);
    }
    let (gv, gvec) = hermitian_eigen(&gram);
    let gtop = gv.iter().cloned().fold(0.0, f64::max);
    let mut coeffs = nalgebra::DVector::<C64>::zeros(n);
    for (i, &lam) in gv.iter().enumerate() {
        if lam > 1e-10 * gtop {
            let v = gvec.column(i);
            let proj = v.dotc(&moment);
            coeffs += v * (proj / C64::new(lam, 0.0));
        }
    }
    let mut e = Operator::zeros(dim);
    for (c, t) in coeffs.iter().zip(&ts) {
        e += &t.scale(*c);
    }
    Ok(e.im_part())
}

/// Measured and predicted deviation of the projected evolution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorBoundReport {
    /// Small parameter `x = τ_R/T`.
    pub x: f64,
    /// Evolution time.
    pub t: f64,
    /// `t/T = t·x/τ_R`.
    pub tx: f64,
    /// `‖(e^{tℒ} − e^{ℛ_eff})𝒫₀‖`
    pub lhs: f64,
    /// `x‖𝒮̃‖‖ℒ̃₁‖‖𝒫₀‖(3(t/T)C²‖𝒫₀‖²‖ℒ̃₁‖ + 4)`
    pub rhs: f64,
    pub s_norm: f64,
    pub l1_norm: f64,
    pub p0_norm: f64,
    /// `sup_{s∈[0,1]} ‖e^{sℛ_eff}‖`
    pub c: f64,
}

/// Number of grid points used for the constant `C`.
pub const C_GRID: usize = 64;

/// Largest of `‖e^{s r}‖` over `s ∈ [0, 1]`: grid search plus a parabolic
/// refinement around the best grid point.
pub fn semigroup_sup_norm(r: &SuperOperator) -> Result<f64> {
    let step = expm(&r.scale_re(1.0 / (C_GRID - 1) as f64))?;
    let mut current = SuperOperator::identity(r.dim());
    let mut values = Vec::with_capacity(C_GRID);
    for j in 0..C_GRID {
        if j > 0 {
            current = &current * &step;
        }
        values.push(spectral_norm(&current));
    }
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty grid");
    if best == 0 || best == C_GRID - 1 {
        return Ok(best_val);
    }
    let (y0, y1, y2) = (values[best - 1], best_val, values[best + 1]);
    let denom = y0 - 2.0 * y1 + y2;
    if denom >= 0.0 {
        return Ok(best_val);
    }
    let h = 1.0 / (C_GRID - 1) as f64;
    let offset = 0.5 * (y0 - y2) / denom;
    let s = (best as f64 + offset) * h;
    let refined = spectral_norm(&expm(&r.scale_re(s))?);
    Ok(best_val.max(refined))
}

/// Compares `e^{tℒ}𝒫₀` with `e^{ℛ_eff}𝒫₀` for `ℒ = ℒ₀ + ℒ₁/T`,
/// `T = τ_R/x`, `ℛ_eff = (t/T)𝒫₀ℒ₁𝒫₀`, and evaluates the first-order bound
/// in units where `τ_R = 1` (`𝒮̃ = 𝒮/τ_R`, `ℒ̃₁ = ℒ₁`).
pub fn error_bound(
    sd: &SteadyDecomposition,
    l0: &SuperOperator,
    l1: &SuperOperator,
    x: f64,
    t: f64,
) -> Result<ErrorBoundReport> {
    check_dim(sd, l0)?;
    check_dim(sd, l1)?;
    if !(x > 0.0 && x.is_finite() && t >= 0.0 && t.is_finite()) {
        return Err(Error::OutOfRange(format!("x = {x}, t = {t}")));
    }
    let tau = sd.relaxation_time();
    if !tau.is_finite() {
        return Err(Error::OutOfRange("generator has no dissipative gap".into()));
    }
    let big_t = tau / x;
    let tx = t / big_t;
    let p0 = sd.p0();
    let l = l0 + &l1.scale_re(1.0 / big_t);
    let r_eff = effective_generator(sd, l1)?.scale_re(tx);
    let exact = &expm(&l.scale_re(t))? * p0;
    let eff = &expm(&r_eff)? * p0;
    let lhs = spectral_norm(&(&exact - &eff));

    let s_norm = spectral_norm(sd.s()) / tau;
    let l1_norm = spectral_norm(l1);
    let p0_norm = spectral_norm(p0);
    let c = semigroup_sup_norm(&r_eff)?;
    let rhs = x * s_norm * l1_norm * p0_norm * (3.0 * tx * c * c * p0_norm * p0_norm * l1_norm + 4.0);
    Ok(ErrorBoundReport {
        x,
        t,
        tx,
        lhs,
        rhs,
        s_norm,
        l1_norm,
        p0_norm,
        c,
    })
}

/// Spectral projector of `ℒ₀ + xℒ₁` onto the eigenvalues continuously
/// connected to zero (those with `|λ| < gap/2`).
pub fn perturbed_projector(
    sd: &SteadyDecomposition,
    l0: &SuperOperator,
    l1: &SuperOperator,
    x: f64,
) -> Result<SuperOperator> {
    let gap = sd.gap();
    let radius = if gap.is_finite() { 0.5 * gap } else { 1.0 };
    let m = l0 + &l1.scale_re(x);
    let split = crate::tensor::schur_spectral_split(&m, |z| z.norm() < radius, radius / 10.0)?;
    if split.cluster_size() != sd.kernel_rank() {
        return Err(Error::IllSeparated {
            distance: 0.0,
            required: radius,
        });
    }
    Ok(split.projector().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{dissipator, first_variation_dissipator, hamiltonian_superop};
    use crate::models::pauli::{lowering, sigma_x, sigma_y, sigma_z, sigma_minus};
    use crate::steady::zero_group_projector;
    use crate::tensor::{kron, partial_trace};

    fn two_qubit() -> (LindbladModel, Vec<Operator>) {
        let l = kron(&Operator::identity(2), &sigma_z());
        let dl = kron(&sigma_minus(), &sigma_z());
        (LindbladModel::new(4).with_lindblad(l, 1.0).unwrap(), vec![dl])
    }

    #[test]
    fn gell_mann_basis_is_orthonormal() {
        let basis = traceless_hermitian_basis(3);
        assert_eq!(basis.len(), 8);
        for (i, a) in basis.iter().enumerate() {
            assert!(a.trace().norm() < 1e-15);
            assert!(a.hermitian_residual() < 1e-15);
            for (j, b) in basis.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((a.hs_inner(b) - C64::new(want, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_perturbation_gives_zero_terms() {
        let (model, _) = two_qubit();
        let sd = zero_group_projector(&dissipator(&model), None).unwrap();
        let k = kato_terms(&sd, &SuperOperator::zeros(4)).unwrap();
        assert_eq!(k.p1.frobenius_norm(), 0.0);
        assert_eq!(k.r1.frobenius_norm(), 0.0);
        assert_eq!(k.r2.frobenius_norm(), 0.0);
        let (a, res) = extract_effective_hamiltonian(&SuperOperator::zeros(4), &sd).unwrap();
        assert!(a.frobenius_norm() < 1e-14 && res < 1e-14);
    }

    #[test]
    fn kato_structure() {
        let (model, _) = two_qubit();
        let l0 = dissipator(&model);
        let sd = zero_group_projector(&l0, None).unwrap();
        let l1 = hamiltonian_superop(&kron(&sigma_x(), &sigma_x())).unwrap();
        let k = kato_terms(&sd, &l1).unwrap();
        let p = sd.p0();
        assert!((&(&(p * &k.r1) * p) - &k.r1).frobenius_norm() < 1e-10);
        assert!((&(p * &k.p1) * p).frobenius_norm() < 1e-9);
        // Linear in ℒ₁.
        let k2 = kato_terms(&sd, &l1.scale_re(2.0)).unwrap();
        assert!((&k2.p1 - &k.p1.scale_re(2.0)).frobenius_norm() < 1e-12);
        // ℒ₀ as perturbation has vanishing effective generator.
        assert!(effective_generator(&sd, &l0).unwrap().frobenius_norm() < 1e-12);
    }

    #[test]
    fn first_order_projector_matches_finite_differences() {
        let model = LindbladModel::new(4)
            .with_lindblad(kron(&Operator::identity(2), &sigma_z()), 1.0)
            .unwrap()
            .with_lindblad(kron(&lowering(), &Operator::identity(2)), 0.5)
            .unwrap();
        let l0 = dissipator(&model);
        let sd = zero_group_projector(&l0, None).unwrap();
        let k1 = (&kron(&sigma_x(), &sigma_y()) + &kron(&sigma_z(), &sigma_x())).scale_re(0.25);
        let l1 = hamiltonian_superop(&k1).unwrap();
        let k = kato_terms(&sd, &l1).unwrap();
        let x = 1e-4;
        let diff = |h: f64| (&perturbed_projector(&sd, &l0, &l1, h).unwrap() - sd.p0()).scale_re(1.0 / h);
        let d1 = diff(x);
        let d2 = diff(x / 2.0);
        assert!(spectral_norm(&(&d1 - &k.p1)) < 1e-3);
        let richardson = &d2.scale_re(2.0) - &d1;
        assert!(spectral_norm(&(&richardson - &k.p1)) < 1e-6);
    }

    #[test]
    fn two_qubit_emergent_hamiltonian() {
        let (model, deltas) = two_qubit();
        let sd = zero_group_projector(&dissipator(&model), None).unwrap();
        let a = emergent_hamiltonian_formula(&model, &deltas, &sd).unwrap();
        let want = kron(&sigma_y(), &Operator::identity(2));
        assert!((&a - &want).frobenius_norm() < 1e-10);

        let l1 = first_variation_dissipator(&model, &deltas).unwrap();
        let leff = effective_generator(&sd, &l1).unwrap();
        let (extracted, residual) = extract_effective_hamiltonian(&leff, &sd).unwrap();
        assert!(residual < 1e-10);
        assert!((&extracted - &want).frobenius_norm() < 1e-9);

        let zero = emergent_hamiltonian_formula(&model, &[Operator::zeros(4)], &sd).unwrap();
        assert!(zero.frobenius_norm() < 1e-14);
    }

    #[test]
    fn hermitian_variations_give_no_hamiltonian() {
        let model = LindbladModel::new(4)
            .with_lindblad(kron(&sigma_z(), &sigma_z()), 1.0)
            .unwrap()
            .with_lindblad(kron(&Operator::identity(2), &sigma_x()), 1.0)
            .unwrap();
        let deltas = [kron(&sigma_x(), &sigma_z()), kron(&sigma_y(), &Operator::identity(2))];
        let sd = zero_group_projector(&dissipator(&model), None).unwrap();
        let a = emergent_hamiltonian_formula(&model, &deltas, &sd).unwrap();
        assert!(a.frobenius_norm() < 1e-10);
    }

    #[test]
    fn non_unital_formula_matches_partial_trace() {
        // System qubit ⊗ bath qubit relaxing to |0⟩.
        let l = kron(&Operator::identity(2), &lowering());
        let dl = kron(&sigma_minus(), &sigma_z());
        let model = LindbladModel::new(4).with_lindblad(l.clone(), 1.0).unwrap();
        assert!(!unitality_check(&model).unital);
        let sd = zero_group_projector(&dissipator(&model), None).unwrap();
        assert_eq!(sd.kernel_rank(), 4);
        let a = emergent_hamiltonian_formula(&model, std::slice::from_ref(&dl), &sd).unwrap();

        // Reference: Im Tr_B(δL†L (I ⊗ ρ_B)) ⊗ I with ρ_B = |0⟩⟨0|.
        let rho_b = crate::models::pauli::basis_projector(0);
        let m = &(&dl.adjoint() * &l) * &kron(&Operator::identity(2), &rho_b);
        let reduced = partial_trace(&m, &[2, 2], &[0]).unwrap().im_part();
        let reference = kron(&reduced, &Operator::identity(2));
        let ad = |x: &Operator| &commutator_superop(x) * sd.p0();
        assert!((&ad(&a) - &ad(&reference)).frobenius_norm() < 1e-10);

        // And both reproduce the projected first variation.
        let l1 = first_variation_dissipator(&model, &[dl]).unwrap();
        let leff = effective_generator(&sd, &l1).unwrap();
        let target = &ad(&reference).scale(-I) - &leff;
        assert!(target.frobenius_norm() < 1e-10, "{}", target.frobenius_norm());
    }

    #[test]
    fn error_bound_trivial_cases() {
        let (model, _) = two_qubit();
        let l0 = dissipator(&model);
        let sd = zero_group_projector(&l0, None).unwrap();
        let r = error_bound(&sd, &l0, &SuperOperator::zeros(4), 0.01, 10.0).unwrap();
        assert!(r.lhs < 1e-12 && r.rhs == 0.0);
        // A Hamiltonian effective generator is unitary on the range: C = 1.
        let l1 = hamiltonian_superop(&kron(&sigma_y(), &Operator::identity(2))).unwrap();
        let r = error_bound(&sd, &l0, &l1, 0.01, 50.0).unwrap();
        assert!((r.c - 1.0).abs() < 1e-10);
        assert!(r.lhs <= r.rhs);
    }
}
