use nalgebra::DMatrix;

use super::C64;

/// Complex matrix product through `matrixmultiply::zgemm`.
///
/// nalgebra only dispatches real `f32`/`f64` products to an optimized
/// kernel; complex products fall back to a generic loop that is several
/// times slower at the 256 × 256 sizes used for four-qubit superoperators.
pub(crate) fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let (m, k) = a.shape();
    let (kb, n) = b.shape();
    assert_eq!(k, kb, "inner dimensions differ: {k} vs {kb}");
    let mut c = DMatrix::<C64>::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return c;
    }
    // SAFETY: nalgebra's dense storage is contiguous and column-major, so
    // element (i, j) of an r-row matrix lives at offset i + j·r.
    // `Complex<f64>` is `#[repr(C)]` with fields (re, im), which is layout
    // compatible with `[f64; 2]`. The output buffer is exclusively borrowed.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}
