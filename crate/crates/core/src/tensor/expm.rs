//! Matrix exponential by scaling and squaring with diagonal Padé
//! approximants (Higham 2005, Algorithm 2.3).

use nalgebra::DMatrix;

use super::{check_finite, matmul, MatrixView, Operator, SuperOperator, C64};
use crate::error::{Error, Result};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.53939833006323e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152;

const B3: [f64; 4] = [120., 60., 12., 1.];
const B5: [f64; 6] = [30240., 15120., 3360., 420., 30., 1.];
const B7: [f64; 8] = [17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.];
const B9: [f64; 10] = [
    17643225600.,
    8821612800.,
    2075673600.,
    302702400.,
    30270240.,
    2162160.,
    110880.,
    3960.,
    90.,
    1.,
];
const B13: [f64; 14] = [
    64764752532480000.,
    32382376266240000.,
    7771770303897600.,
    1187353796428800.,
    129060195264000.,
    10559470521600.,
    670442572800.,
    33522128640.,
    1323241920.,
    40840800.,
    960960.,
    16380.,
    182.,
    1.,
];

fn one_norm(a: &DMatrix<C64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn axpy(acc: &mut DMatrix<C64>, coef: f64, x: &DMatrix<C64>) {
    let c = C64::new(coef, 0.0);
    acc.zip_apply(x, |a, b| *a += c * b);
}

fn add_identity(m: &mut DMatrix<C64>, coef: f64) {
    for i in 0..m.nrows() {
        m[(i, i)] += C64::new(coef, 0.0);
    }
}

/// Low-degree approximant: returns (U, V) with U odd and V even in `a`.
fn pade_low(a: &DMatrix<C64>, b: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let a2 = matmul(a, a);
    let mut powers = vec![a2.clone()];
    for _ in 2..b.len() / 2 {
        let last = powers.last().unwrap();
        powers.push(matmul(last, &a2));
    }
    let mut u_inner = DMatrix::<C64>::zeros(n, n);
    let mut v = DMatrix::<C64>::zeros(n, n);
    add_identity(&mut u_inner, b[1]);
    add_identity(&mut v, b[0]);
    for (k, p) in powers.iter().enumerate() {
        let j = 2 * (k + 1);
        axpy(&mut u_inner, b[j + 1], p);
        axpy(&mut v, b[j], p);
    }
    (matmul(a, &u_inner), v)
}

fn pade_13(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let b = &B13;
    let a2 = matmul(a, a);
    let a4 = matmul(&a2, &a2);
    let a6 = matmul(&a4, &a2);

    let mut u_hi = DMatrix::<C64>::zeros(n, n);
    axpy(&mut u_hi, b[13], &a6);
    axpy(&mut u_hi, b[11], &a4);
    axpy(&mut u_hi, b[9], &a2);
    let mut u_inner = matmul(&a6, &u_hi);
    axpy(&mut u_inner, b[7], &a6);
    axpy(&mut u_inner, b[5], &a4);
    axpy(&mut u_inner, b[3], &a2);
    add_identity(&mut u_inner, b[1]);
    let u = matmul(a, &u_inner);

    let mut v_hi = DMatrix::<C64>::zeros(n, n);
    axpy(&mut v_hi, b[12], &a6);
    axpy(&mut v_hi, b[10], &a4);
    axpy(&mut v_hi, b[8], &a2);
    let mut v = matmul(&a6, &v_hi);
    axpy(&mut v, b[6], &a6);
    axpy(&mut v, b[4], &a4);
    axpy(&mut v, b[2], &a2);
    add_identity(&mut v, b[0]);
    (u, v)
}

fn solve_pade(u: DMatrix<C64>, v: DMatrix<C64>) -> Result<DMatrix<C64>> {
    let p = &v + &u;
    let q = v - u;
    q.lu().solve(&p).ok_or(Error::NoConvergence)
}

/// `e^A` for a square complex matrix.
pub fn expm_matrix(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    check_finite(a)?;
    let norm = one_norm(a);
    if norm == 0.0 {
        return Ok(DMatrix::identity(a.nrows(), a.ncols()));
    }
    for (degree, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match degree {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            return solve_pade(u, v);
        }
    }
    let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
    let scaled = a * C64::new(2f64.powi(-s), 0.0);
    let (u, v) = pade_13(&scaled);
    let mut r = solve_pade(u, v)?;
    for _ in 0..s {
        r = matmul(&r, &r);
    }
    check_finite(&r)?;
    Ok(r)
}

/// Matrix exponential of an operator or superoperator.
pub fn expm<M: Exponentiable>(m: &M) -> Result<M> {
    m.exponential()
}

/// Types with a matrix exponential that stays within the type.
pub trait Exponentiable: MatrixView + Sized {
    fn exponential(&self) -> Result<Self>;
}

impl Exponentiable for Operator {
    fn exponential(&self) -> Result<Self> {
        Ok(Operator::wrap(expm_matrix(self.matrix())?))
    }
}

impl Exponentiable for SuperOperator {
    fn exponential(&self) -> Result<Self> {
        self.expm()
    }
}

impl Exponentiable for DMatrix<C64> {
    fn exponential(&self) -> Result<Self> {
        expm_matrix(self)
    }
}
