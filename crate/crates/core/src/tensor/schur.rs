//! Spectral projectors from an ordered complex Schur form.
//!
//! The Schur form `M = Q T Qᴴ` is reordered so the selected eigenvalues
//! occupy the leading `k × k` block of `T`. The triangular Sylvester
//! equation `T₁₁ Y − Y T₂₂ = −T₁₂` then block-diagonalizes `T` through
//! `V = [[I, Y], [0, I]]`, and the spectral projector onto the selected
//! invariant subspace is `Q [[I, −Y], [0, 0]] Qᴴ`. Nothing here forms an
//! eigenvector matrix, so near-defective non-normal inputs stay stable.

use nalgebra::DMatrix;

use super::{check_finite, matmul, MatrixView, SuperOperator, C64, ZERO};
use crate::error::{Error, Result};

/// QR sweeps allowed per eigenvalue before giving up.
const SWEEPS_PER_EIGENVALUE: usize = 60;

/// Rotation `G = [[c, s], [−s̄, c]]` with `G [x, y]ᵀ = [r, 0]ᵀ`.
fn givens(x: C64, y: C64) -> (f64, C64) {
    let r = x.norm().hypot(y.norm());
    if r == 0.0 {
        return (1.0, ZERO);
    }
    let phase = if x.norm() == 0.0 { C64::new(1.0, 0.0) } else { x / x.norm() };
    (x.norm() / r, phase * y.conj() / r)
}

/// Applies `G` to rows `k`, `k+1` over columns `cols`.
fn rotate_rows(t: &mut DMatrix<C64>, k: usize, (c, s): (f64, C64), cols: std::ops::Range<usize>) {
    for j in cols {
        let (a, b) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = a * c + s * b;
        t[(k + 1, j)] = -s.conj() * a + b * c;
    }
}

/// Applies `Gᴴ` to columns `k`, `k+1` over rows `rows`.
fn rotate_cols(t: &mut DMatrix<C64>, k: usize, (c, s): (f64, C64), rows: std::ops::Range<usize>) {
    for i in rows {
        let (p, q) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = p * c + s.conj() * q;
        t[(i, k + 1)] = -s * p + q * c;
    }
}

/// Eigenvalue of the trailing 2×2 block `[[a, b], [c, d]]` closest to `d`.
fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let (r1, r2) = (half + disc, half - disc);
    let r = if r1.norm() >= r2.norm() { r1 } else { r2 };
    if r.norm() == 0.0 {
        d
    } else {
        d - b * c / r
    }
}

/// Complex Schur decomposition `m = q t qᴴ` with `t` upper triangular.
///
/// Hessenberg reduction followed by single-shift implicit QR. A subdiagonal
/// entry is deflated once it falls below machine precision relative to its
/// diagonal neighbours or to `‖m‖_F`, which keeps repeated zero eigenvalues
/// from stalling the iteration.
pub(crate) fn complex_schur(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    check_finite(m)?;
    let n = m.nrows();
    if n <= 1 {
        return Ok((DMatrix::identity(n, n), m.clone()));
    }
    let (mut q, mut t) = nalgebra::linalg::Hessenberg::new(m.clone()).unpack();
    for j in 0..n {
        for i in j + 2..n {
            t[(i, j)] = ZERO;
        }
    }
    let ulp = f64::EPSILON;
    let small = ulp * t.norm().max(f64::MIN_POSITIVE);
    let mut hi = n - 1;
    let mut sweeps = 0usize;
    let mut since_deflation = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = t[(lo, lo - 1)].norm();
            let diag = t[(lo, lo)].norm() + t[(lo - 1, lo - 1)].norm();
            if sub <= ulp * diag || sub <= small {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        sweeps += 1;
        since_deflation += 1;
        if sweeps > SWEEPS_PER_EIGENVALUE * n {
            return Err(Error::NoConvergence);
        }
        let mu = if since_deflation.is_multiple_of(11) {
            t[(hi, hi)] + t[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)])
        };
        let mut x = t[(lo, lo)] - mu;
        let mut y = t[(lo + 1, lo)];
        for k in lo..hi {
            let g = givens(x, y);
            let first_col = if k == lo { lo } else { k - 1 };
            rotate_rows(&mut t, k, g, first_col..n);
            rotate_cols(&mut t, k, g, 0..(k + 3).min(hi + 1));
            rotate_cols(&mut q, k, g, 0..n);
            if k > lo {
                t[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
    }
    for j in 0..n {
        for i in j + 1..n {
            t[(i, j)] = ZERO;
        }
    }
    Ok((q, t))
}

/// Eigenvalues of a general complex square matrix, in Schur order.
pub fn eigenvalues<M: MatrixView + ?Sized>(m: &M) -> Result<Vec<C64>> {
    let m = m.matrix();
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let (_, t) = complex_schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Swaps the adjacent diagonal entries `k`, `k+1` of the upper triangular
/// `t`, updating the Schur vectors `q` so that `q t qᴴ` is unchanged.
fn swap_adjacent(t: &mut DMatrix<C64>, q: &mut DMatrix<C64>, k: usize) {
    let n = t.nrows();
    let a = t[(k, k)];
    let c = t[(k + 1, k + 1)];
    let b = t[(k, k + 1)];
    let (v1, v2) = (b, c - a);
    let norm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if norm == 0.0 {
        return;
    }
    let (v1, v2) = (v1 / norm, v2 / norm);
    // G = [[v1, −v̄2], [v2, v̄1]] has first column ∝ the eigenvector of `c`.
    let g = [[v1, -v2.conj()], [v2, v1.conj()]];

    // T ← T G on columns k, k+1 (rows 0..=k+1).
    for r in 0..=k + 1 {
        let (x, y) = (t[(r, k)], t[(r, k + 1)]);
        t[(r, k)] = x * g[0][0] + y * g[1][0];
        t[(r, k + 1)] = x * g[0][1] + y * g[1][1];
    }
    // T ← Gᴴ T on rows k, k+1 (columns k..n).
    for col in k..n {
        let (x, y) = (t[(k, col)], t[(k + 1, col)]);
        t[(k, col)] = g[0][0].conj() * x + g[1][0].conj() * y;
        t[(k + 1, col)] = g[0][1].conj() * x + g[1][1].conj() * y;
    }
    t[(k + 1, k)] = ZERO;
    t[(k, k)] = c;
    t[(k + 1, k + 1)] = a;
    for r in 0..n {
        let (x, y) = (q[(r, k)], q[(r, k + 1)]);
        q[(r, k)] = x * g[0][0] + y * g[1][0];
        q[(r, k + 1)] = x * g[0][1] + y * g[1][1];
    }
}

/// Solves `t11 Y − Y t22 = rhs` for upper triangular `t11`, `t22`.
fn triangular_sylvester(
    t11: &DMatrix<C64>,
    t22: &DMatrix<C64>,
    rhs: &DMatrix<C64>,
) -> DMatrix<C64> {
    let k = t11.nrows();
    let m = t22.nrows();
    let mut y = DMatrix::<C64>::zeros(k, m);
    for j in 0..m {
        // (t11 − t22[j,j]) y_j = rhs_j + Σ_{l<j} y_l t22[l,j]
        let mut col: Vec<C64> = (0..k).map(|i| rhs[(i, j)]).collect();
        for l in 0..j {
            let w = t22[(l, j)];
            if w != ZERO {
                for (i, c) in col.iter_mut().enumerate() {
                    *c += y[(i, l)] * w;
                }
            }
        }
        let shift = t22[(j, j)];
        for i in (0..k).rev() {
            let mut acc = col[i];
            for p in i + 1..k {
                acc -= t11[(i, p)] * y[(p, j)];
            }
            y[(i, j)] = acc / (t11[(i, i)] - shift);
        }
    }
    y
}

/// Inverse of a nonsingular upper triangular matrix.
fn triangular_inverse(t: &DMatrix<C64>) -> DMatrix<C64> {
    let n = t.nrows();
    let mut inv = DMatrix::<C64>::zeros(n, n);
    for j in 0..n {
        inv[(j, j)] = t[(j, j)].inv();
        for i in (0..j).rev() {
            let mut acc = ZERO;
            for p in i + 1..=j {
                acc += t[(i, p)] * inv[(p, j)];
            }
            inv[(i, j)] = -acc / t[(i, i)];
        }
    }
    inv
}

/// Ordered Schur data for a selected eigenvalue cluster.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    dim: usize,
    q: DMatrix<C64>,
    t: DMatrix<C64>,
    k: usize,
    /// Solution of `T₁₁ Y − Y T₂₂ = −T₁₂`.
    y: DMatrix<C64>,
    projector: SuperOperator,
}

impl SpectralSplit {
    /// The (generally oblique) spectral projector onto the cluster.
    pub fn projector(&self) -> &SuperOperator {
        &self.projector
    }

    pub fn cluster_size(&self) -> usize {
        self.k
    }

    /// Unitary Schur basis `Q`, cluster directions first.
    pub fn schur_basis(&self) -> &DMatrix<C64> {
        &self.q
    }

    /// Reordered upper triangular Schur form `T`.
    pub fn schur_form(&self) -> &DMatrix<C64> {
        &self.t
    }

    /// Orthonormal basis of the invariant subspace of the cluster, i.e. of
    /// the range of the projector.
    pub fn range_basis(&self) -> DMatrix<C64> {
        self.q.columns(0, self.k).into_owned()
    }

    /// Orthonormal basis of the orthogonal complement of the range; it
    /// spans the complementary invariant subspace only for normal inputs.
    pub fn complement_basis(&self) -> DMatrix<C64> {
        let n = self.q.ncols();
        self.q.columns(self.k, n - self.k).into_owned()
    }

    /// `W` with `projector = range_basis · W`; rows of `W` are coordinates
    /// of the projection in the range basis.
    pub fn range_coordinates(&self) -> DMatrix<C64> {
        let n = self.q.ncols();
        let q1 = self.range_basis();
        let q2 = self.complement_basis();
        let mut w = q1.adjoint();
        if n > self.k {
            w -= matmul(&self.y, &q2.adjoint());
        }
        w
    }

    pub fn cluster_eigenvalues(&self) -> Vec<C64> {
        (0..self.k).map(|i| self.t[(i, i)]).collect()
    }

    pub fn other_eigenvalues(&self) -> Vec<C64> {
        (self.k..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Inverse of the input restricted to the complementary invariant
    /// subspace, extended by zero on the cluster: with `m` the split
    /// matrix, `R m = m R = I − P` when the cluster eigenvalues vanish.
    pub fn complement_inverse(&self) -> SuperOperator {
        let n = self.t.nrows();
        let k = self.k;
        let mut st = DMatrix::<C64>::zeros(n, n);
        if k < n {
            let t22 = self.t.view((k, k), (n - k, n - k)).into_owned();
            let t22_inv = triangular_inverse(&t22);
            let top = matmul(&self.y, &t22_inv);
            st.view_mut((0, k), (k, n - k)).copy_from(&top);
            st.view_mut((k, k), (n - k, n - k)).copy_from(&t22_inv);
        }
        let m = matmul(&matmul(&self.q, &st), &self.q.adjoint());
        SuperOperator::wrap(self.dim, m)
    }
}

/// Complex Schur form of a superoperator, ready to be split by cluster.
#[derive(Clone, Debug)]
pub struct SchurForm {
    dim: usize,
    q: DMatrix<C64>,
    t: DMatrix<C64>,
}

impl SchurForm {
    pub fn new(m: &SuperOperator) -> Result<Self> {
        let (q, t) = complex_schur(m.matrix())?;
        Ok(Self { dim: m.dim(), q, t })
    }

    /// Eigenvalues in Schur order.
    pub fn eigenvalues(&self) -> Vec<C64> {
        self.t.diagonal().iter().copied().collect()
    }

    /// Spectral projector onto the invariant subspace of the eigenvalues
    /// accepted by `select`.
    ///
    /// Every selected eigenvalue must lie at least `10·tol` from every
    /// rejected one, otherwise the split is refused as ill-separated.
    pub fn split(self, select: impl Fn(C64) -> bool, tol: f64) -> Result<SpectralSplit> {
        let Self { dim, mut q, mut t } = self;
        let n = t.nrows();

        let eig: Vec<C64> = t.diagonal().iter().copied().collect();
        let chosen: Vec<bool> = eig.iter().map(|&z| select(z)).collect();
        let required = 10.0 * tol;
        let mut distance = f64::INFINITY;
        for (i, &zi) in eig.iter().enumerate() {
            if !chosen[i] {
                continue;
            }
            for (j, &zj) in eig.iter().enumerate() {
                if !chosen[j] {
                    distance = distance.min((zi - zj).norm());
                }
            }
        }
        if distance < required {
            return Err(Error::IllSeparated { distance, required });
        }

        // Bubble each selected eigenvalue up to the end of the leading block.
        let mut flags = chosen;
        let mut k = 0;
        for i in 0..n {
            if flags[i] {
                let mut pos = i;
                while pos > k {
                    swap_adjacent(&mut t, &mut q, pos - 1);
                    flags.swap(pos - 1, pos);
                    pos -= 1;
                }
                k += 1;
            }
        }

        let y = if k > 0 && k < n {
            let t11 = t.view((0, 0), (k, k)).into_owned();
            let t22 = t.view((k, k), (n - k, n - k)).into_owned();
            let t12 = t.view((0, k), (k, n - k)).into_owned();
            triangular_sylvester(&t11, &t22, &(-t12))
        } else {
            DMatrix::zeros(k, n - k)
        };

        let mut pt = DMatrix::<C64>::zeros(n, n);
        for i in 0..k {
            pt[(i, i)] = C64::new(1.0, 0.0);
        }
        if k > 0 && k < n {
            pt.view_mut((0, k), (k, n - k)).copy_from(&(-&y));
        }
        let p = matmul(&matmul(&q, &pt), &q.adjoint());
        Ok(SpectralSplit {
            dim,
            q,
            t,
            k,
            y,
            projector: SuperOperator::wrap(dim, p),
        })
    }
}

/// Spectral projector of `m` onto the invariant subspace of the eigenvalues
/// accepted by `select`; see [`SchurForm::split`].
pub fn schur_spectral_split(
    m: &SuperOperator,
    select: impl Fn(C64) -> bool,
    tol: f64,
) -> Result<SpectralSplit> {
    SchurForm::new(m)?.split(select, tol)
}
