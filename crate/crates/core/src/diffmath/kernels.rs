//! Dense matrix kernels used by the tape. All matrices are row-major.

use crate::scalar::Scalar;

/// `out (n x m) += a (n x k) * b (k x m)`
pub(crate) fn matmul_acc<S: Scalar>(a: &[S], b: &[S], out: &mut [S], n: usize, k: usize, m: usize) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(b.len(), k * m);
    debug_assert_eq!(out.len(), n * m);
    for (a_row, out_row) in a.chunks_exact(k).zip(out.chunks_exact_mut(m)) {
        for (&av, b_row) in a_row.iter().zip(b.chunks_exact(m)) {
            if av == S::zero() {
                continue;
            }
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += av * bv;
            }
        }
    }
}

/// `out (k x m) += a^T * c` where `a` is `n x k` and `c` is `n x m`.
pub(crate) fn matmul_tn_acc<S: Scalar>(a: &[S], c: &[S], out: &mut [S], n: usize, k: usize, m: usize) {
    debug_assert_eq!(a.len(), n * k);
    debug_assert_eq!(c.len(), n * m);
    debug_assert_eq!(out.len(), k * m);
    for (a_row, c_row) in a.chunks_exact(k).zip(c.chunks_exact(m)) {
        for (&av, out_row) in a_row.iter().zip(out.chunks_exact_mut(m)) {
            if av == S::zero() {
                continue;
            }
            for (o, &cv) in out_row.iter_mut().zip(c_row) {
                *o += av * cv;
            }
        }
    }
}

pub(crate) fn transpose<S: Scalar>(a: &[S], rows: usize, cols: usize) -> Vec<S> {
    let mut out = vec![S::zero(); rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = a[r * cols + c];
        }
    }
    out
}
