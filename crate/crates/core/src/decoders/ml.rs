//! Exhaustive least-squares decoder.
//!
//! For every k-subset `S` the fit `min_G ‖Y − A_S·G‖_F²` is the squared norm
//! of `Y` projected off the column space of `A_S`. The projection uses a
//! Gram-Schmidt QR with one reorthogonalization pass; a column whose
//! orthogonalized norm falls below `1e−10` of its original norm marks `A_S`
//! as rank deficient and the subset is skipped.

use nalgebra::DMatrix;

use super::{fold_supports, DecodeResult, DecodeStatus, DecoderLimits};
use crate::error::{Error, Result};
use crate::subset::binomial;

const RANK_TOL: f64 = 1e-10;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Reusable buffers for one projection.
struct Projector {
    n: usize,
    q: Vec<f64>,
    r: Vec<f64>,
}

impl Projector {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            q: vec![0.0; n * k],
            r: vec![0.0; n],
        }
    }

    /// Orthonormal basis of `A_S` into `self.q`; false if rank deficient.
    fn factor(&mut self, a: &[f64], support: &[usize]) -> bool {
        let n = self.n;
        for (j, &col) in support.iter().enumerate() {
            let (done, rest) = self.q.split_at_mut(j * n);
            let v = &mut rest[..n];
            v.copy_from_slice(&a[col * n..(col + 1) * n]);
            let original = dot(v, v).sqrt();
            if original == 0.0 {
                return false;
            }
            for _pass in 0..2 {
                for prev in done.chunks_exact(n) {
                    let c = dot(prev, v);
                    axpy(-c, prev, v);
                }
            }
            let norm = dot(v, v).sqrt();
            if norm <= RANK_TOL * original {
                return false;
            }
            v.iter_mut().for_each(|x| *x /= norm);
        }
        true
    }

    /// `‖Y − Q·Qᵀ·Y‖_F²` for the first `k` basis vectors.
    fn residual(&mut self, y: &[f64], k: usize) -> f64 {
        let n = self.n;
        let mut total = 0.0;
        for col in y.chunks_exact(n) {
            self.r.copy_from_slice(col);
            for _pass in 0..2 {
                for q in self.q[..k * n].chunks_exact(n) {
                    let c = dot(q, &self.r);
                    axpy(-c, q, &mut self.r);
                }
            }
            total += dot(&self.r, &self.r);
        }
        total
    }
}

fn check_shapes(y: &DMatrix<f64>, a: &DMatrix<f64>, k: usize) -> Result<()> {
    if a.nrows() != y.nrows() {
        return Err(Error::invalid(format!(
            "A has {} rows but Y has {}",
            a.nrows(),
            y.nrows()
        )));
    }
    if k == 0 || k > a.ncols() {
        return Err(Error::invalid(format!("need 1 <= k <= m, got k = {k}, m = {}", a.ncols())));
    }
    if y.ncols() == 0 || y.nrows() == 0 {
        return Err(Error::invalid("Y is empty"));
    }
    Ok(())
}

/// Least-squares residual `‖Y − A_S·Ĝ‖_F²` of every k-subset in
/// lexicographic order; `None` for rank-deficient `A_S`.
pub fn ml_residuals(y: &DMatrix<f64>, a: &DMatrix<f64>, k: usize) -> Result<Vec<(Vec<usize>, Option<f64>)>> {
    check_shapes(y, a, k)?;
    let n = a.nrows();
    Ok(fold_supports(
        a.ncols(),
        k,
        Vec::new,
        |acc: &mut Vec<(Vec<usize>, Option<f64>)>, _, s| {
            let mut p = Projector::new(n, k);
            let res = p.factor(a.as_slice(), s).then(|| p.residual(y.as_slice(), k));
            acc.push((s.to_vec(), res));
        },
        |mut l, r| {
            l.extend(r);
            l
        },
    ))
}

struct Best {
    residual: f64,
    rank: u128,
    support: Vec<usize>,
}

struct MlAcc {
    best: Option<Best>,
    skipped: u128,
    projector: Projector,
}

impl MlAcc {
    fn new(n: usize, k: usize) -> Self {
        Self {
            best: None,
            skipped: 0,
            projector: Projector::new(n, k),
        }
    }

    fn offer(&mut self, residual: f64, rank: u128, support: &[usize]) {
        let better = match &self.best {
            None => true,
            Some(b) => residual
                .total_cmp(&b.residual)
                .then(rank.cmp(&b.rank))
                .is_lt(),
        };
        if better {
            self.best = Some(Best {
                residual,
                rank,
                support: support.to_vec(),
            });
        }
    }

    fn merge(mut self, other: MlAcc) -> MlAcc {
        self.skipped += other.skipped;
        if let Some(b) = other.best {
            self.offer(b.residual, b.rank, &b.support);
        }
        self
    }
}

/// Exhaustive least-squares support estimate: the k-subset with the
/// smallest projection residual, ties to the lexicographically smallest.
///
/// Needs `n ≥ k` for any subset to be usable; when every `A_S` is rank
/// deficient the decode fails with [`Error::Decode`].
pub fn decode_ml(y: &DMatrix<f64>, a: &DMatrix<f64>, k: usize, limits: &DecoderLimits) -> Result<DecodeResult> {
    check_shapes(y, a, k)?;
    let (n, m) = a.shape();
    let needed = binomial(m, k);
    if needed > limits.test_budget {
        return Err(Error::BudgetExceeded {
            needed,
            budget: limits.test_budget,
        });
    }
    let acc = fold_supports(
        m,
        k,
        || MlAcc::new(n, k),
        |acc: &mut MlAcc, rank, s| {
            if acc.projector.factor(a.as_slice(), s) {
                let res = acc.projector.residual(y.as_slice(), k);
                acc.offer(res, rank, s);
            } else {
                log::debug!("skipping rank-deficient support {:?}", s);
                acc.skipped += 1;
            }
        },
        MlAcc::merge,
    );
    if acc.skipped > 0 {
        log::warn!("least-squares decoder skipped {} rank-deficient supports", acc.skipped);
    }
    let best = acc.best.ok_or_else(|| {
        Error::Decode(format!(
            "all {needed} candidate supports are rank deficient (n = {n}, k = {k})"
        ))
    })?;
    Ok(DecodeResult {
        support: best.support,
        status: DecodeStatus::UniqueAccept,
        residual: best.residual / (n * y.ncols()) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::draw_gaussian;
    use crate::rng::SimRng;

    #[test]
    fn noiseless_fit_is_exact() {
        let mut rng = SimRng::new(5);
        let a = draw_gaussian(6, 9, 1.0, &mut rng);
        let g = DMatrix::from_row_slice(2, 3, &[1.0, -2.0, 0.5, 3.0, 1.0, -1.0]);
        let mut x = DMatrix::zeros(9, 3);
        x.set_row(2, &g.row(0));
        x.set_row(7, &g.row(1));
        let y = &a * &x;
        let out = decode_ml(&y, &a, 2, &DecoderLimits::default()).unwrap();
        assert_eq!(out.support, vec![2, 7]);
        assert!(out.residual < 1e-24);
        assert_eq!(out.status, DecodeStatus::UniqueAccept);
    }

    #[test]
    fn underdetermined_is_an_error() {
        let mut rng = SimRng::new(6);
        let a = draw_gaussian(1, 5, 1.0, &mut rng);
        let y = draw_gaussian(1, 2, 1.0, &mut rng);
        assert!(matches!(
            decode_ml(&y, &a, 2, &DecoderLimits::default()),
            Err(Error::Decode(_))
        ));
    }

    #[test]
    fn duplicate_columns_are_skipped() {
        let mut rng = SimRng::new(7);
        let mut a = draw_gaussian(5, 4, 1.0, &mut rng);
        let c0 = a.column(0).clone_owned();
        a.set_column(1, &c0);
        let res = ml_residuals(&a.columns(0, 1).clone_owned(), &a, 2).unwrap();
        assert_eq!(res[0].0, vec![0, 1]);
        assert!(res[0].1.is_none());
        assert!(res[1..].iter().all(|(_, r)| r.is_some()));
    }

    #[test]
    fn budget_is_enforced() {
        let a = DMatrix::from_element(3, 10, 1.0);
        let y = DMatrix::from_element(3, 1, 1.0);
        let tight = DecoderLimits {
            test_budget: 44,
            ..DecoderLimits::default()
        };
        assert!(matches!(
            decode_ml(&y, &a, 2, &tight),
            Err(Error::BudgetExceeded { needed: 45, budget: 44 })
        ));
    }

    #[test]
    fn shape_errors() {
        let a = DMatrix::from_element(3, 4, 1.0);
        let y = DMatrix::from_element(2, 1, 1.0);
        assert!(decode_ml(&y, &a, 1, &DecoderLimits::default()).is_err());
        let y = DMatrix::from_element(3, 1, 1.0);
        assert!(decode_ml(&y, &a, 5, &DecoderLimits::default()).is_err());
    }
}
