//! Interaction algebra, commutant, center and block structure.
//!
//! Operators are handled as column vectors (`vec`) under the
//! Hilbert-Schmidt inner product, so subspaces of operator space are
//! orthonormal column bases.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SteadyDecomposition;
use crate::error::{Error, Result};
use crate::liouville::commutator_superop;
use crate::tensor::{
    hermitian_eigen, matmul, numerical_rank, orthonormal_span, spectral_norm, unvec_unchecked,
    vec, MatrixView, Operator, SuperOperator, C64,
};

/// Relative eigenvalue cutoff for nullspaces of Gram-type matrices.
const NULL_REL_TOL: f64 = 1e-9;
/// Relative singular-value cutoff for spans.
const SPAN_REL_TOL: f64 = 1e-9;

fn check_generators(gens: &[Operator]) -> Result<usize> {
    let dim = gens
        .first()
        .map(Operator::dim)
        .ok_or_else(|| Error::OutOfRange("at least one generator required".into()))?;
    for g in gens {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: g.dim(),
            });
        }
    }
    Ok(dim)
}

/// Appends the adjoint of every non-hermitian generator.
fn close_under_adjoint(gens: &[Operator]) -> Vec<Operator> {
    let mut out = gens.to_vec();
    for g in gens {
        if !g.is_hermitian(1e-12) {
            out.push(g.adjoint());
        }
    }
    out
}

fn columns_of(ops: &[Operator], dim: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(dim * dim, ops.len());
    for (j, op) in ops.iter().enumerate() {
        m.set_column(j, &vec(op));
    }
    m
}

fn operators_of(basis: &DMatrix<C64>, dim: usize) -> Vec<Operator> {
    basis
        .column_iter()
        .map(|c| unvec_unchecked(&c.into_owned(), dim))
        .collect()
}

/// Orthonormal basis of the kernel of a positive semidefinite matrix.
fn psd_nullspace(g: &DMatrix<C64>, rel_tol: f64) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(g);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] <= rel_tol * top)
        .collect();
    DMatrix::from_fn(g.nrows(), keep.len(), |r, c| vectors[(r, keep[c])])
}

/// Orthonormal basis (vectorized columns) of the commutant
/// `{X : [X, g] = 0 ∀g}` of the generator set closed under `†`.
pub fn commutant_basis(gens: &[Operator]) -> Result<DMatrix<C64>> {
    let dim = check_generators(gens)?;
    let n = dim * dim;
    let mut gram = DMatrix::<C64>::zeros(n, n);
    for g in close_under_adjoint(gens) {
        let ad = commutator_superop(&g);
        gram += matmul(&ad.matrix().adjoint(), ad.matrix());
    }
    Ok(psd_nullspace(&gram, NULL_REL_TOL))
}

/// Hilbert-Schmidt orthogonal projector onto the commutant.
pub fn commutant_projector(gens: &[Operator]) -> Result<SuperOperator> {
    let dim = check_generators(gens)?;
    let basis = commutant_basis(gens)?;
    Ok(SuperOperator::wrap(dim, matmul(&basis, &basis.adjoint())))
}

/// Spectral-norm distance between the zero-group projector and the
/// commutant projector of `gens`; small exactly when the kernel projection
/// is the orthogonal projection onto the commutant.
pub fn unital_consistency(sd: &SteadyDecomposition, gens: &[Operator]) -> Result<f64> {
    let pc = commutant_projector(gens)?;
    if pc.dim() != sd.dim() {
        return Err(Error::DimensionMismatch {
            expected: sd.dim(),
            found: pc.dim(),
        });
    }
    Ok(spectral_norm(&(sd.p0() - &pc)))
}

/// One Wedderburn block: `𝟙_{n} ⊗ M_{d}` inside the algebra.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Block {
    /// Multiplicity of the irreducible representation.
    pub n: usize,
    /// Dimension of the irreducible representation.
    pub d: usize,
    #[serde(skip)]
    pub projector: Operator,
}

/// Algebra generated by a set of operators together with its commutant,
/// center and block structure.
#[derive(Clone, Debug)]
pub struct AlgebraDecomposition {
    dim: usize,
    algebra: DMatrix<C64>,
    commutant: DMatrix<C64>,
    center: DMatrix<C64>,
    blocks: Vec<Block>,
    seed: u64,
}

impl AlgebraDecomposition {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn algebra_dim(&self) -> usize {
        self.algebra.ncols()
    }

    pub fn commutant_dim(&self) -> usize {
        self.commutant.ncols()
    }

    pub fn center_dim(&self) -> usize {
        self.center.ncols()
    }

    pub fn algebra_basis(&self) -> Vec<Operator> {
        operators_of(&self.algebra, self.dim)
    }

    pub fn commutant_basis(&self) -> Vec<Operator> {
        operators_of(&self.commutant, self.dim)
    }

    pub fn center_basis(&self) -> Vec<Operator> {
        operators_of(&self.center, self.dim)
    }

    /// Blocks sorted by `(d, n)`.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// `(n_J, d_J)` pairs in block order.
    pub fn block_shapes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| (b.n, b.d)).collect()
    }

    /// `Σ_J (n_J² − 1)`
    pub fn codimension(&self) -> usize {
        self.blocks.iter().map(|b| b.n * b.n - 1).sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Hilbert-Schmidt orthogonal projection onto the commutant.
    pub fn project_commutant(&self, x: &Operator) -> Operator {
        project(&self.commutant, x, self.dim)
    }

    /// Hilbert-Schmidt orthogonal projection onto the center.
    pub fn project_center(&self, x: &Operator) -> Operator {
        project(&self.center, x, self.dim)
    }
}

fn project(basis: &DMatrix<C64>, x: &Operator, dim: usize) -> Operator {
    let v = vec(x);
    let coeffs = basis.adjoint() * v;
    unvec_unchecked(&(basis * coeffs), dim)
}

/// Closes `gens ∪ {I}` (and adjoints) under multiplication, then derives
/// the commutant, center and the block dimensions `(n_J, d_J)`.
///
/// `seed` drives the random central element whose eigenspaces separate the
/// blocks; the result does not depend on it unless blocks are degenerate.
pub fn algebra_closure(gens: &[Operator], seed: u64) -> Result<AlgebraDecomposition> {
    let dim = check_generators(gens)?;
    if dim > 64 {
        return Err(Error::OutOfRange(format!("algebra closure limited to dim 64, got {dim}")));
    }
    let gens = close_under_adjoint(gens);

    let mut seeds = gens.clone();
    seeds.push(Operator::identity(dim));
    let mut basis = orthonormal_span(&columns_of(&seeds, dim), SPAN_REL_TOL);
    loop {
        let current = operators_of(&basis, dim);
        let mut words = current.clone();
        for g in &gens {
            for b in &current {
                words.push(g * b);
            }
        }
        let next = orthonormal_span(&columns_of(&words, dim), SPAN_REL_TOL);
        let grew = next.ncols() > basis.ncols();
        basis = next;
        if !grew {
            break;
        }
        if basis.ncols() == dim * dim {
            break;
        }
    }

    let commutant = commutant_basis(&gens)?;

    // Center: commutant elements with no component outside the algebra.
    let outside = &commutant - &basis * (basis.adjoint() * &commutant);
    let gram = outside.adjoint() * &outside;
    let coeffs = psd_nullspace_abs(&gram, 1e-12);
    let center = orthonormal_span(&(&commutant * coeffs), SPAN_REL_TOL);

    let blocks = find_blocks(dim, &commutant, &center, seed)?;

    let sum_n2: usize = blocks.iter().map(|b| b.n * b.n).sum();
    let sum_d2: usize = blocks.iter().map(|b| b.d * b.d).sum();
    let sum_nd: usize = blocks.iter().map(|b| b.n * b.d).sum();
    if sum_n2 != commutant.ncols() || sum_d2 != basis.ncols() || sum_nd != dim {
        return Err(Error::BlockFactorization(format!(
            "blocks {:?} give Σn²={sum_n2}, Σd²={sum_d2}, Σnd={sum_nd}; expected {}, {}, {dim}",
            blocks.iter().map(|b| (b.n, b.d)).collect::<Vec<_>>(),
            commutant.ncols(),
            basis.ncols()
        )));
    }

    Ok(AlgebraDecomposition {
        dim,
        algebra: basis,
        commutant,
        center,
        blocks,
        seed,
    })
}

fn psd_nullspace_abs(g: &DMatrix<C64>, abs_tol: f64) -> DMatrix<C64> {
    let (values, vectors) = hermitian_eigen(g);
    let keep: Vec<usize> = (0..values.len()).filter(|&i| values[i] <= abs_tol).collect();
    DMatrix::from_fn(g.nrows(), keep.len(), |r, c| vectors[(r, keep[c])])
}

fn find_blocks(
    dim: usize,
    commutant: &DMatrix<C64>,
    center: &DMatrix<C64>,
    seed: u64,
) -> Result<Vec<Block>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z = Operator::zeros(dim);
    for op in operators_of(center, dim) {
        let a: f64 = rng.random_range(-1.0..1.0);
        let b: f64 = rng.random_range(-1.0..1.0);
        z += &op.hermitian_part().scale_re(a);
        z += &op.im_part().scale_re(b);
    }
    let (values, vectors) = hermitian_eigen(z.matrix());
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(c) if (v - values[c[0]]).abs() <= 1e-6 * scale => c.push(i),
            _ => clusters.push(vec![i]),
        }
    }

    let commutant_ops = operators_of(commutant, dim);
    let mut blocks = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let v = DMatrix::from_fn(dim, cluster.len(), |r, c| vectors[(r, cluster[c])]);
        let pi = Operator::wrap(matmul(&v, &v.adjoint()));
        let rank = cluster.len();
        let restricted: Vec<Operator> = commutant_ops.iter().map(|c| &(&pi * c) * &pi).collect();
        let n2 = numerical_rank(&columns_of(&restricted, dim), SPAN_REL_TOL);
        let n = (n2 as f64).sqrt().round() as usize;
        if n == 0 || n * n != n2 || rank % n != 0 {
            return Err(Error::BlockFactorization(format!(
                "block of rank {rank} has commutant dimension {n2}"
            )));
        }
        blocks.push(Block {
            n,
            d: rank / n,
            projector: pi,
        });
    }
    blocks.sort_by_key(|b| (b.d, b.n));
    Ok(blocks)
}

/// Outcome of [`hamiltonian_robustness_check`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RobustnessCheck {
    /// `𝒫₀(V)` lies in the center within tolerance.
    pub robust: bool,
    /// Distance of `𝒫₀(V)` from the center, Frobenius norm.
    pub center_residual: f64,
    /// `‖𝒫₀(V)‖`, Frobenius norm.
    pub projected_norm: f64,
    /// Codimension `Σ_J (n_J² − 1)` of the robust perturbations.
    pub codimension: usize,
}

/// Tests whether the projected perturbation `𝒫₀(V)` is central, in which
/// case it acts trivially on the steady-state manifold of a unital
/// generator whose kernel is the commutant.
pub fn hamiltonian_robustness_check(
    v: &Operator,
    alg: &AlgebraDecomposition,
) -> Result<RobustnessCheck> {
    if v.dim() != alg.dim {
        return Err(Error::DimensionMismatch {
            expected: alg.dim,
            found: v.dim(),
        });
    }
    if !v.is_hermitian(1e-12) {
        return Err(Error::NonHermitian(v.hermitian_residual()));
    }
    let pv = alg.project_commutant(v);
    let center_residual = (&pv - &alg.project_center(&pv)).frobenius_norm();
    Ok(RobustnessCheck {
        robust: center_residual <= 1e-9 * v.frobenius_norm().max(f64::MIN_POSITIVE),
        center_residual,
        projected_norm: pv.frobenius_norm(),
        codimension: alg.codimension(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::{dissipator, LindbladModel};
    use crate::models::pauli::{basis_projector, lowering, sigma_x, sigma_z};
    use crate::steady::zero_group_projector;
    use crate::tensor::kron;

    fn i2() -> Operator {
        Operator::identity(2)
    }

    #[test]
    fn identity_commutes_with_everything() {
        let p = commutant_projector(&[Operator::identity(3)]).unwrap();
        assert!((&p - &SuperOperator::identity(3)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn local_sigma_z_commutant() {
        let g = kron(&i2(), &sigma_z());
        let p = commutant_projector(&[g]).unwrap();
        let m = p.matrix();
        assert!((m * m - m).norm() < 1e-12);
        assert!((m - m.adjoint()).norm() < 1e-12);
        assert_eq!(numerical_rank(m, 1e-9), 8);
        for b in 0..2 {
            let x = kron(&sigma_x(), &basis_projector(b));
            assert!((&p.apply(&x) - &x).frobenius_norm() < 1e-12);
        }
        assert!(p.apply(&kron(&i2(), &sigma_x())).frobenius_norm() < 1e-12);
        let id = Operator::identity(4);
        assert!((&p.apply(&id) - &id).frobenius_norm() < 1e-12);
    }

    #[test]
    fn abelian_algebra() {
        let alg = algebra_closure(&[sigma_z()], 7).unwrap();
        assert_eq!(alg.algebra_dim(), 2);
        assert_eq!(alg.commutant_dim(), 2);
        assert_eq!(alg.center_dim(), 2);
        assert_eq!(alg.block_shapes(), vec![(1, 1), (1, 1)]);
        assert_eq!(alg.codimension(), 0);
    }

    #[test]
    fn local_sigma_z_blocks() {
        let alg = algebra_closure(&[kron(&i2(), &sigma_z())], 3).unwrap();
        assert_eq!(alg.block_shapes(), vec![(2, 1), (2, 1)]);
        assert_eq!(alg.codimension(), 6);
    }

    #[test]
    fn full_matrix_algebra() {
        let alg = algebra_closure(&[sigma_x(), sigma_z()], 1).unwrap();
        assert_eq!(alg.algebra_dim(), 4);
        assert_eq!(alg.block_shapes(), vec![(1, 2)]);
    }

    #[test]
    fn commutant_elements_commute_with_generators() {
        let gens = [kron(&sigma_x(), &sigma_x()), kron(&sigma_z(), &sigma_z())];
        let alg = algebra_closure(&gens, 11).unwrap();
        for c in alg.commutant_basis() {
            for g in &gens {
                assert!(c.commutator(g).frobenius_norm() < 1e-10);
            }
        }
        assert_eq!(alg.center_dim(), alg.blocks().len());
    }

    #[test]
    fn unital_kernel_matches_commutant() {
        let model = LindbladModel::new(2).with_lindblad(sigma_z(), 1.0).unwrap();
        let sd = zero_group_projector(&dissipator(&model), None).unwrap();
        assert!(unital_consistency(&sd, &[sigma_z()]).unwrap() < 1e-8);
    }

    #[test]
    fn non_unital_kernel_differs_from_commutant() {
        let model = LindbladModel::new(2).with_lindblad(lowering(), 1.0).unwrap();
        let sd = zero_group_projector(&dissipator(&model), None).unwrap();
        assert_eq!(sd.kernel_rank(), 1);
        assert_eq!(commutant_basis(&[lowering()]).unwrap().ncols(), 1);
        assert!(unital_consistency(&sd, &[lowering()]).unwrap() > 0.1);
    }

    #[test]
    fn robustness_of_central_and_local_terms() {
        let g = kron(&i2(), &sigma_z());
        let alg = algebra_closure(std::slice::from_ref(&g), 5).unwrap();
        // The generator itself projects into the center.
        assert!(hamiltonian_robustness_check(&g, &alg).unwrap().robust);
        // σx on the first qubit lies in the commutant but not the center.
        let v = kron(&sigma_x(), &i2());
        let check = hamiltonian_robustness_check(&v, &alg).unwrap();
        assert!(!check.robust);
        assert!(check.center_residual > 1.0);
        assert!(hamiltonian_robustness_check(&kron(&lowering(), &i2()), &alg).is_err());
    }
}
