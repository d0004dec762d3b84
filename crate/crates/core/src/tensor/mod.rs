//! Dense complex linear algebra on Hilbert-space operators and on
//! superoperators acting on their column-stacked vectorizations.
//!
//! With `vec` stacking columns, `vec(A X B) = (Bᵀ ⊗ A) vec(X)`; every
//! superoperator formula in this crate is written against that identity.

mod codec;
mod expm;
mod gemm;
mod schur;

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use codec::{decode_matrix, encode_matrix, MatrixJson};
pub use expm::{expm, expm_matrix};
pub(crate) use gemm::matmul;
pub use schur::{eigenvalues, schur_spectral_split, SchurForm, SpectralSplit};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Anything backed by a dense complex matrix.
pub trait MatrixView {
    fn matrix(&self) -> &DMatrix<C64>;
}

impl MatrixView for DMatrix<C64> {
    fn matrix(&self) -> &DMatrix<C64> {
        self
    }
}

fn check_finite(m: &DMatrix<C64>) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

/// A linear operator on a `dim`-dimensional Hilbert space.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    mat: DMatrix<C64>,
}

impl Operator {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        check_finite(&mat)?;
        Ok(Self { mat })
    }

    /// Wraps a matrix known to be square and finite.
    pub(crate) fn wrap(mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), mat.ncols());
        Self { mat }
    }

    /// Builds a `dim × dim` operator from row-major entries.
    pub fn from_rows(dim: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::LengthMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, entries))
    }

    /// Builds a `dim × dim` operator from real row-major entries.
    pub fn from_real_rows(dim: usize, entries: &[f64]) -> Result<Self> {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_rows(dim, &c)
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self::wrap(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(DMatrix::zeros(dim, dim))
    }

    /// `|ψ⟩⟨ψ|` for a normalized copy of `psi`.
    pub fn projector_onto(psi: &[C64]) -> Self {
        let v = DVector::from_column_slice(psi);
        let n = v.norm();
        let v = v / C64::new(n, 0.0);
        Self::wrap(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.mat.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self::wrap(self.mat.transpose())
    }

    pub fn conjugate(&self) -> Self {
        Self::wrap(self.mat.conjugate())
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::wrap(&self.mat * c)
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    /// `[self, other]`
    pub fn commutator(&self, other: &Operator) -> Self {
        self * other - other * self
    }

    /// `{self, other}`
    pub fn anticommutator(&self, other: &Operator) -> Self {
        self * other + other * self
    }

    /// `(X + X†)/2`
    pub fn hermitian_part(&self) -> Self {
        Self::wrap((&self.mat + self.mat.adjoint()) * C64::new(0.5, 0.0))
    }

    /// `Im X := (X − X†)/2i`, a hermitian operator.
    pub fn im_part(&self) -> Self {
        Self::wrap((&self.mat - self.mat.adjoint()) / C64::new(0.0, 2.0))
    }

    /// Frobenius norm of `X − X†`.
    pub fn hermitian_residual(&self) -> f64 {
        (&self.mat - self.mat.adjoint()).norm()
    }

    /// `‖X − X†‖ ≤ rel_tol · ‖X‖`, both in Frobenius norm.
    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermitian_residual() <= rel_tol * self.mat.norm().max(f64::MIN_POSITIVE)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    /// Hilbert-Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Operator) -> C64 {
        self.mat.dotc(&other.mat)
    }

    /// Eigenvalues (ascending) and eigenvectors of a hermitian operator.
    pub fn hermitian_eigen(&self) -> (Vec<f64>, DMatrix<C64>) {
        hermitian_eigen(&self.hermitian_part().mat)
    }
}

impl MatrixView for Operator {
    fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }
}

/// A linear map on operators of a `dim`-dimensional Hilbert space, stored as
/// a `dim² × dim²` matrix acting on column-stacked vectorizations.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperOperator {
    dim: usize,
    mat: DMatrix<C64>,
}

impl SuperOperator {
    pub fn new(mat: DMatrix<C64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::NotSquare {
                rows: mat.nrows(),
                cols: mat.ncols(),
            });
        }
        let dim = exact_sqrt(mat.nrows()).ok_or(Error::NotPerfectSquare(mat.nrows()))?;
        check_finite(&mat)?;
        Ok(Self { dim, mat })
    }

    pub(crate) fn wrap(dim: usize, mat: DMatrix<C64>) -> Self {
        debug_assert_eq!(mat.nrows(), dim * dim);
        Self { dim, mat }
    }

    pub fn identity(dim: usize) -> Self {
        Self::wrap(dim, DMatrix::identity(dim * dim, dim * dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::wrap(dim, DMatrix::zeros(dim * dim, dim * dim))
    }

    /// `X ↦ A X B`
    pub fn sandwich(a: &Operator, b: &Operator) -> Self {
        Self::wrap(a.dim(), kron_matrix(&b.mat.transpose(), &a.mat))
    }

    /// `X ↦ A X`
    pub fn left(a: &Operator) -> Self {
        Self::sandwich(a, &Operator::identity(a.dim()))
    }

    /// `X ↦ X B`
    pub fn right(b: &Operator) -> Self {
        Self::sandwich(&Operator::identity(b.dim()), b)
    }

    /// Hilbert-space dimension `d` (the matrix is `d² × d²`).
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        unvec_unchecked(&(&self.mat * vec(x)), self.dim)
    }

    pub fn adjoint(&self) -> Self {
        Self::wrap(self.dim, self.mat.adjoint())
    }

    pub fn scale(&self, c: C64) -> Self {
        Self::wrap(self.dim, &self.mat * c)
    }

    pub fn scale_re(&self, x: f64) -> Self {
        self.scale(C64::new(x, 0.0))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn expm(&self) -> Result<Self> {
        Ok(Self::wrap(self.dim, expm_matrix(&self.mat)?))
    }

    /// Integer power by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Self {
        let mut acc = Self::identity(self.dim);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = &acc * &base;
            }
            n >>= 1;
            if n > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// The functional `X ↦ Tr X` applied after `self`: returns `(vec I)† · self`.
    pub fn trace_functional_residual(&self) -> f64 {
        let id = vec(&Operator::identity(self.dim));
        (id.adjoint() * &self.mat).norm()
    }
}

impl MatrixView for SuperOperator {
    fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }
}

macro_rules! impl_binops {
    ($ty:ident, $ctor:expr) => {
        impl Add<&$ty> for &$ty {
            type Output = $ty;
            fn add(self, rhs: &$ty) -> $ty {
                $ctor(self, &self.mat + &rhs.mat)
            }
        }
        impl Sub<&$ty> for &$ty {
            type Output = $ty;
            fn sub(self, rhs: &$ty) -> $ty {
                $ctor(self, &self.mat - &rhs.mat)
            }
        }
        impl Mul<&$ty> for &$ty {
            type Output = $ty;
            fn mul(self, rhs: &$ty) -> $ty {
                $ctor(self, matmul(&self.mat, &rhs.mat))
            }
        }
        impl Add for $ty {
            type Output = $ty;
            fn add(self, rhs: $ty) -> $ty {
                &self + &rhs
            }
        }
        impl Sub for $ty {
            type Output = $ty;
            fn sub(self, rhs: $ty) -> $ty {
                &self - &rhs
            }
        }
        impl Mul for $ty {
            type Output = $ty;
            fn mul(self, rhs: $ty) -> $ty {
                &self * &rhs
            }
        }
        impl AddAssign<&$ty> for $ty {
            fn add_assign(&mut self, rhs: &$ty) {
                self.mat += &rhs.mat;
            }
        }
        impl Neg for &$ty {
            type Output = $ty;
            fn neg(self) -> $ty {
                $ctor(self, -&self.mat)
            }
        }
        impl Mul<C64> for &$ty {
            type Output = $ty;
            fn mul(self, rhs: C64) -> $ty {
                $ctor(self, &self.mat * rhs)
            }
        }
    };
}

impl_binops!(Operator, |_: &Operator, m| Operator::wrap(m));
impl_binops!(SuperOperator, |s: &SuperOperator, m| SuperOperator::wrap(
    s.dim, m
));

/// A validated quantum state: hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    pub const TOL: f64 = 1e-10;

    pub fn new(op: Operator) -> Result<Self> {
        let herm = op.hermitian_residual();
        if herm > Self::TOL {
            return Err(Error::InvalidState(format!("hermiticity residual {herm:e}")));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > Self::TOL {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let (evals, _) = op.hermitian_eigen();
        if let Some(&min) = evals.first() {
            if min < -Self::TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
            }
        }
        Ok(Self { op })
    }

    pub fn pure(psi: &[C64]) -> Self {
        Self {
            op: Operator::projector_onto(psi),
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            op: Operator::identity(dim).scale_re(1.0 / dim as f64),
        }
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn into_operator(self) -> Operator {
        self.op
    }
}

fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

pub(crate) fn kron_matrix(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    a.kronecker(b)
}

/// Kronecker product `a ⊗ b`; `a` is the slow (leftmost) factor.
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    Operator::wrap(kron_matrix(&a.mat, &b.mat))
}

/// Kronecker product of a list of operators, leftmost first.
pub fn kron_all<'a>(ops: impl IntoIterator<Item = &'a Operator>) -> Operator {
    ops.into_iter()
        .fold(None, |acc: Option<Operator>, op| {
            Some(match acc {
                None => op.clone(),
                Some(a) => kron(&a, op),
            })
        })
        .unwrap_or_else(|| Operator::identity(1))
}

/// Column-stacking vectorization.
pub fn vec(x: &Operator) -> DVector<C64> {
    DVector::from_column_slice(x.mat.as_slice())
}

/// Inverse of [`vec`]; fails unless the length is a perfect square.
pub fn unvec(v: &DVector<C64>) -> Result<Operator> {
    let d = exact_sqrt(v.len())
        .filter(|&d| d > 0)
        .ok_or(Error::NotPerfectSquare(v.len()))?;
    Ok(unvec_unchecked(v, d))
}

pub(crate) fn unvec_unchecked(v: &DVector<C64>, d: usize) -> Operator {
    Operator::wrap(DMatrix::from_column_slice(d, d, v.as_slice()))
}

/// Traces out every subsystem not listed in `keep` (0-based indices into
/// `dims`, site 0 being the leftmost tensor factor).
pub fn partial_trace(x: &Operator, dims: &[usize], keep: &[usize]) -> Result<Operator> {
    if dims.is_empty() || dims.contains(&0) {
        return Err(Error::Subsystems("dimensions must be positive".into()));
    }
    let total: usize = dims.iter().product();
    if total != x.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            found: total,
        });
    }
    let mut kept = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() {
            return Err(Error::Subsystems(format!("subsystem index {k} out of range")));
        }
        if kept[k] {
            return Err(Error::Subsystems(format!("subsystem {k} listed twice")));
        }
        kept[k] = true;
    }
    let kept_dims: Vec<usize> = dims
        .iter()
        .zip(&kept)
        .filter_map(|(&d, &k)| k.then_some(d))
        .collect();
    let out_dim: usize = kept_dims.iter().product();

    // Split a flat index into (kept index, traced index).
    let split = |mut idx: usize| -> (usize, usize) {
        let (mut k_idx, mut k_stride) = (0, 1);
        let (mut t_idx, mut t_stride) = (0, 1);
        for (s, &d) in dims.iter().enumerate().rev() {
            let digit = idx % d;
            idx /= d;
            if kept[s] {
                k_idx += digit * k_stride;
                k_stride *= d;
            } else {
                t_idx += digit * t_stride;
                t_stride *= d;
            }
        }
        (k_idx, t_idx)
    };
    let parts: Vec<(usize, usize)> = (0..total).map(split).collect();
    let mut out = DMatrix::<C64>::zeros(out_dim, out_dim);
    for (r, &(kr, tr)) in parts.iter().enumerate() {
        for (c, &(kc, tc)) in parts.iter().enumerate() {
            if tr == tc {
                out[(kr, kc)] += x.mat[(r, c)];
            }
        }
    }
    Ok(Operator::wrap(out))
}

/// Largest singular value.
pub fn spectral_norm<M: MatrixView + ?Sized>(m: &M) -> f64 {
    let m = m.matrix();
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Sum of singular values.
pub fn trace_norm<M: MatrixView + ?Sized>(m: &M) -> f64 {
    m.matrix().clone().singular_values().sum()
}

/// `½ ‖ρ − σ‖₁`
pub fn trace_distance(rho: &Operator, sigma: &Operator) -> f64 {
    0.5 * trace_norm(&(rho - sigma))
}

/// Eigen-decomposition of a hermitian matrix, eigenvalues ascending.
pub fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Orthonormal basis (as columns) of the span of `columns`, discarding
/// directions whose Gram eigenvalue falls below `rel_tol` times the largest.
pub(crate) fn orthonormal_span(columns: &DMatrix<C64>, rel_tol: f64) -> DMatrix<C64> {
    if columns.ncols() == 0 {
        return DMatrix::zeros(columns.nrows(), 0);
    }
    let svd = columns.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| smax > 0.0 && svd.singular_values[i] > rel_tol * smax)
        .collect();
    DMatrix::from_fn(columns.nrows(), keep.len(), |r, c| u[(r, keep[c])])
}

/// Numerical rank with singular values above `rel_tol` times the largest.
pub(crate) fn numerical_rank(m: &DMatrix<C64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * smax).count()
}
