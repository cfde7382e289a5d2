//! Small dense linear-algebra kernels shared by the model, the threshold
//! computations and the lemma checks.

use nalgebra::{Cholesky, DMatrix};

use crate::error::{Error, Result};

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// `Σ xᵢ·yᵢ + c` accumulated in double-double and rounded once.
///
/// This is the compensated dot product of Ogita, Rump and Oishi. The result
/// is as accurate as if computed in twice the working precision and depends
/// only on the order of the terms, which is fixed (ascending index, `c` last).
pub fn dot2_add(xs: impl IntoIterator<Item = (f64, f64)>, c: f64) -> f64 {
    let mut hi = 0.0;
    let mut lo = 0.0;
    for (x, y) in xs {
        let (p, pe) = two_prod(x, y);
        let (s, se) = two_sum(hi, p);
        hi = s;
        lo += pe + se;
    }
    let (s, se) = two_sum(hi, c);
    s + (lo + se)
}

/// Canonical `A·X + Z`: every entry is one [`dot2_add`] over the shared
/// dimension in ascending order, with the `Z` entry added last.
pub fn canonical_mul_add(a: &DMatrix<f64>, x: &DMatrix<f64>, z: &DMatrix<f64>) -> DMatrix<f64> {
    assert_eq!(a.ncols(), x.nrows(), "inner dimensions differ");
    assert_eq!((a.nrows(), x.ncols()), z.shape(), "addend shape differs");
    DMatrix::from_fn(a.nrows(), x.ncols(), |i, j| {
        dot2_add((0..a.ncols()).map(|s| (a[(i, s)], x[(s, j)])), z[(i, j)])
    })
}

/// `log₂ det(M)` for symmetric positive-definite `M`, as `2·Σ log₂ Lᵢᵢ` of
/// the Cholesky factor.
pub fn log2_det_spd(m: DMatrix<f64>) -> Result<f64> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite matrix entry".into()));
    }
    let chol = Cholesky::new(m)
        .ok_or_else(|| Error::Numeric("matrix is not positive definite".into()))?;
    let l = chol.l_dirty();
    Ok(2.0 * (0..l.nrows()).map(|i| l[(i, i)].log2()).sum::<f64>())
}

/// `log₂ det(I + α·Σ_{i} vᵢvᵢᵀ)` over the given vectors, all of length `dim`.
pub fn log2_det_identity_plus_gram<'a>(
    dim: usize,
    alpha: f64,
    vectors: impl IntoIterator<Item = &'a [f64]>,
) -> Result<f64> {
    let mut m = DMatrix::<f64>::identity(dim, dim);
    for v in vectors {
        debug_assert_eq!(v.len(), dim);
        for a in 0..dim {
            for b in 0..dim {
                m[(a, b)] += alpha * v[a] * v[b];
            }
        }
    }
    log2_det_spd(m)
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn frobenius_sq(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v * v).sum()
}

pub fn column_norm_sq(m: &DMatrix<f64>, j: usize) -> f64 {
    m.column(j).iter().map(|v| v * v).sum()
}

/// `MᵀM`.
pub fn gram(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.tr_mul(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot2_recovers_cancelled_terms() {
        // naive summation returns 0 here
        let terms = [(1e16, 1.0), (1.0, 1.0), (-1e16, 1.0)];
        assert_eq!(dot2_add(terms, 0.0), 1.0);
        assert_eq!(dot2_add([], 3.5), 3.5);
    }

    #[test]
    fn canonical_mul_add_matches_naive_on_small_integers() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 0.0, -1.0]);
        let z = DMatrix::from_row_slice(2, 1, &[0.5, -0.5]);
        let y = canonical_mul_add(&a, &x, &z);
        assert_eq!(y, &a * &x + &z);
    }

    #[test]
    fn log2_det_of_diagonal() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 8.0, 0.5]));
        assert!((log2_det_spd(m).unwrap() - 3.0).abs() < 1e-14);
    }

    #[test]
    fn log2_det_rejects_indefinite_and_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(log2_det_spd(m), Err(Error::Numeric(_))));
        let m = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(log2_det_spd(m), Err(Error::Numeric(_))));
    }

    #[test]
    fn identity_plus_gram_rank_one() {
        let v = [3.0, 4.0];
        let got = log2_det_identity_plus_gram(2, 2.0, [&v[..]]).unwrap();
        assert!((got - (1.0f64 + 2.0 * 25.0).log2()).abs() < 1e-13);
    }
}
