//! The recovery threshold `c(W)` and the closed-form bounds built on it.
//!
//! ```text
//! c(W) = min over nonempty T ⊆ [k] of  1/(2|T|) · log₂ det(I + α·W_Tᵀ W_T),   α = σa²/σz²
//! ```
//!
//! `W_T` is the submatrix of rows in `T`. Support recovery succeeds
//! asymptotically when `(log₂ m)/n` stays below `c(W)` and fails when it
//! stays above. All values are in bits.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::log2_det_identity_plus_gram;
use crate::model::{SignalValueMatrix, WMode};
use crate::subset::{Subset, MAX_SUBSET_K};

fn check_variances(sigma_a_sq: f64, sigma_z_sq: f64) -> Result<f64> {
    for (name, v) in [("sigma_a_sq", sigma_a_sq), ("sigma_z_sq", sigma_z_sq)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(sigma_a_sq / sigma_z_sq)
}

fn check_subset_count(k: usize) -> Result<()> {
    if k > MAX_SUBSET_K {
        return Err(Error::TooManySubsets {
            k,
            limit: MAX_SUBSET_K,
        });
    }
    Ok(())
}

/// `c(W)` with its minimizer and every per-subset term.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub c_of_w: f64,
    pub argmin_subset: Subset,
    /// All nonempty subsets in canonical order (size, then lexicographic).
    pub per_subset: Vec<(Subset, f64)>,
}

impl ThresholdReport {
    pub fn value(&self, subset: Subset) -> Option<f64> {
        self.per_subset
            .iter()
            .find(|(s, _)| *s == subset)
            .map(|(_, v)| *v)
    }
}

/// `1/(2|T|) · log₂ det(I + α·W_Tᵀ W_T)` for one nonempty `T`.
pub fn subset_term(w: &SignalValueMatrix, subset: Subset, alpha: f64) -> Result<f64> {
    debug_assert!(!subset.is_empty());
    let log_det = log2_det_identity_plus_gram(w.l(), alpha, subset.indices().map(|i| w.row(i)))?;
    // det ≥ 1 exactly; clamp rounding below zero
    Ok((log_det / (2.0 * subset.len() as f64)).max(0.0))
}

/// Exhaustive evaluation of `c(W)` over all `2ᵏ − 1` nonempty row subsets.
///
/// Ties in the minimum go to the smallest subset in canonical order.
pub fn c_of_w(w: &SignalValueMatrix, sigma_a_sq: f64, sigma_z_sq: f64) -> Result<ThresholdReport> {
    let alpha = check_variances(sigma_a_sq, sigma_z_sq)?;
    check_subset_count(w.k())?;
    let per_subset = Subset::all_nonempty(w.k())
        .into_iter()
        .map(|t| Ok((t, subset_term(w, t, alpha)?)))
        .collect::<Result<Vec<_>>>()?;
    let (argmin_subset, c) = per_subset
        .iter()
        .fold(None, |best: Option<(Subset, f64)>, &(t, v)| match best {
            Some((_, bv)) if bv <= v => best,
            _ => Some((t, v)),
        })
        .expect("k >= 1 gives at least one subset");
    Ok(ThresholdReport {
        c_of_w: c,
        argmin_subset,
        per_subset,
    })
}

/// Measurements per vector that put `(log₂ m)/n` at or below
/// `(1 − margin)·c(W)`: `⌈log₂ m / ((1 − margin)·c(W))⌉`, at least 1.
pub fn sufficient_n(
    w: &SignalValueMatrix,
    sigma_a_sq: f64,
    sigma_z_sq: f64,
    m: usize,
    margin: f64,
) -> Result<u64> {
    if m < w.k() {
        return Err(Error::invalid(format!("m = {m} is smaller than k = {}", w.k())));
    }
    let c = c_of_w(w, sigma_a_sq, sigma_z_sq)?.c_of_w;
    n_for_rate(m, (1.0 - margin_checked(margin)?) * c)
}

fn margin_checked(margin: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&margin) {
        return Err(Error::invalid(format!("margin must lie in [0, 1), got {margin}")));
    }
    Ok(margin)
}

/// `⌈log₂ m / rate⌉`, at least 1.
pub fn n_for_rate(m: usize, rate: f64) -> Result<u64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::invalid(format!("rate must be positive, got {rate}")));
    }
    let n = ((m as f64).log2() / rate).ceil();
    if !(n < u64::MAX as f64) {
        return Err(Error::invalid("required measurement count overflows"));
    }
    Ok((n as u64).max(1))
}

/// Per-subset terms for `W = [w, …, w]` (`l` identical columns), from the
/// rank-one closed form `1/(2|T|) · log₂(1 + l·α·‖w_T‖²)`.
pub fn identical_columns_bound(
    w: &[f64],
    l: usize,
    sigma_a_sq: f64,
    sigma_z_sq: f64,
) -> Result<Vec<(Subset, f64)>> {
    let alpha = check_variances(sigma_a_sq, sigma_z_sq)?;
    if l == 0 {
        return Err(Error::invalid("l must be at least 1"));
    }
    if w.is_empty() {
        return Err(Error::invalid("w is empty"));
    }
    if let Some(i) = w.iter().position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::invalid(format!("entry {} of w must be finite and nonzero", i + 1)));
    }
    check_subset_count(w.len())?;
    Ok(Subset::all_nonempty(w.len())
        .into_iter()
        .map(|t| {
            let norm_sq: f64 = t.indices().map(|i| w[i] * w[i]).sum();
            let v = (1.0 + l as f64 * alpha * norm_sq).log2() / (2.0 * t.len() as f64);
            (t, v)
        })
        .collect())
}

/// Two-column `W = [1, w₂]` with `w₂` equal to `+1` on the first `k/2`
/// rows and `−1` on the rest. `k` must be even.
pub fn orthogonal_halves_matrix(k: usize) -> Result<SignalValueMatrix> {
    if k < 2 || !k.is_multiple_of(2) {
        return Err(Error::invalid(format!("k must be even and at least 2, got {k}")));
    }
    let rows: Vec<Vec<f64>> = (0..k)
        .map(|i| vec![1.0, if i < k / 2 { 1.0 } else { -1.0 }])
        .collect();
    SignalValueMatrix::from_rows(&rows, WMode::Strict)
}

/// `c(W)` of [`orthogonal_halves_matrix`], by enumeration. Equals
/// `(1/k)·log₂(1 + k·α)`.
pub fn corollary3_threshold(k: usize, sigma_a_sq: f64, sigma_z_sq: f64) -> Result<f64> {
    Ok(c_of_w(&orthogonal_halves_matrix(k)?, sigma_a_sq, sigma_z_sq)?.c_of_w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundsCase {
    /// `W = 1 ∈ R^{k×1}`.
    #[serde(rename = "i_smv")]
    Smv,
    /// `W = [1, 1]`.
    #[serde(rename = "ii_mmv_identical")]
    MmvIdentical,
    /// `W` from [`orthogonal_halves_matrix`].
    #[serde(rename = "iii_mmv_orthogonal")]
    MmvOrthogonal,
}

impl BoundsCase {
    pub fn label(self) -> &'static str {
        match self {
            BoundsCase::Smv => "i_smv",
            BoundsCase::MmvIdentical => "ii_mmv_identical",
            BoundsCase::MmvOrthogonal => "iii_mmv_orthogonal",
        }
    }
}

/// One row of the SMV/MMV comparison. `None` when the case does not apply
/// (odd `k` for the orthogonal-halves case).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsRow {
    pub case: BoundsCase,
    /// Threshold rate `c` of the case, bits.
    pub rate: Option<f64>,
    /// `log₂ m / c`: measurements needed for `m` columns.
    pub lower_bound_n: Option<f64>,
    /// `2^{n·c}`: columns manageable with `n` measurements.
    pub upper_bound_m: Option<f64>,
}

/// The three comparison rows for given `k`, `n`, `m` and variances:
///
/// | case | upper bound on m |
/// |------|------------------|
/// | SMV, `W = 1` | `(1 + kα)^{n/(2k)}` |
/// | MMV, `W = [1, 1]` | `(1 + 2kα)^{n/(2k)}` |
/// | MMV, orthogonal halves | `(1 + kα)^{n/k}` |
///
/// and the matching lower bounds `n > log₂ m / c` on the measurement count.
pub fn bounds_table(
    k: usize,
    n: f64,
    m: f64,
    sigma_a_sq: f64,
    sigma_z_sq: f64,
) -> Result<[BoundsRow; 3]> {
    let alpha = check_variances(sigma_a_sq, sigma_z_sq)?;
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::invalid(format!("n must be nonnegative, got {n}")));
    }
    if !(m.is_finite() && m >= 1.0) {
        return Err(Error::invalid(format!("m must be at least 1, got {m}")));
    }
    let kf = k as f64;
    let row = |case, base: f64, exponent_per_n: f64| {
        let rate = exponent_per_n * base.log2();
        BoundsRow {
            case,
            rate: Some(rate),
            lower_bound_n: Some(m.log2() / rate),
            upper_bound_m: Some(base.powf(n * exponent_per_n)),
        }
    };
    let third = if k.is_multiple_of(2) {
        row(BoundsCase::MmvOrthogonal, 1.0 + kf * alpha, 1.0 / kf)
    } else {
        BoundsRow {
            case: BoundsCase::MmvOrthogonal,
            rate: None,
            lower_bound_n: None,
            upper_bound_m: None,
        }
    };
    Ok([
        row(BoundsCase::Smv, 1.0 + kf * alpha, 1.0 / (2.0 * kf)),
        row(BoundsCase::MmvIdentical, 1.0 + 2.0 * kf * alpha, 1.0 / (2.0 * kf)),
        third,
    ])
}

/// Rates, per-user gain vectors and powers of a SIMO multiple-access channel.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTuple {
    pub rates: Vec<f64>,
    pub gains: Vec<Vec<f64>>,
    pub sigma_c_sq: f64,
    pub sigma_z_sq: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacViolation {
    pub subset: Subset,
    pub sum_rate: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MacVerdict {
    InRegion,
    Violated(Vec<MacViolation>),
}

/// `½·log₂ det(I + (σc²/σz²)·Σ_{i∈T} hᵢhᵢᵀ)`.
pub fn mac_subset_capacity(gains: &[Vec<f64>], subset: Subset, snr: f64) -> Result<f64> {
    let l = gains.first().map_or(0, Vec::len);
    Ok(0.5 * log2_det_identity_plus_gram(l, snr, subset.indices().map(|i| gains[i].as_slice()))?)
}

/// Checks every sum-rate constraint of the capacity region. A constraint
/// counts as met when `Σ_{i∈T} Rᵢ ≤ bound·(1 + 1e−12)`.
pub fn mac_region_check(t: &RateTuple) -> Result<MacVerdict> {
    let snr = check_variances(t.sigma_c_sq, t.sigma_z_sq)?;
    let k = t.rates.len();
    if k == 0 || t.gains.len() != k {
        return Err(Error::invalid(format!(
            "{} rates but {} gain vectors",
            k,
            t.gains.len()
        )));
    }
    check_subset_count(k)?;
    let l = t.gains[0].len();
    if l == 0 || t.gains.iter().any(|h| h.len() != l || h.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("gain vectors must be finite with one common length"));
    }
    if t.rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(Error::invalid("rates must be finite and nonnegative"));
    }
    let mut violations = Vec::new();
    for subset in Subset::all_nonempty(k) {
        let sum_rate: f64 = subset.indices().map(|i| t.rates[i]).sum();
        let bound = mac_subset_capacity(&t.gains, subset, snr)?;
        if sum_rate > bound * (1.0 + 1e-12) {
            violations.push(MacViolation {
                subset,
                sum_rate,
                bound,
            });
        }
    }
    Ok(if violations.is_empty() {
        MacVerdict::InRegion
    } else {
        MacVerdict::Violated(violations)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(rows: &[&[f64]], mode: WMode) -> SignalValueMatrix {
        SignalValueMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), mode)
            .unwrap()
    }

    #[test]
    fn rank_bottleneck_examples() {
        let expected = 0.5 * 1.1f64.log2();
        let w1 = w(&[&[0.1], &[5.0]], WMode::Strict);
        let r1 = c_of_w(&w1, 10.0, 1.0).unwrap();
        assert!((r1.c_of_w - expected).abs() < 1e-12);
        let w2 = w(&[&[0.1, 0.0], &[5.0, 6.0]], WMode::Generalized);
        let r2 = c_of_w(&w2, 10.0, 1.0).unwrap();
        assert!((r2.c_of_w - expected).abs() < 1e-12);
        assert_eq!(r2.argmin_subset.one_based(), vec![1]);
        assert_eq!(r2.per_subset.len(), 3);
    }

    #[test]
    fn scalar_c() {
        let r = c_of_w(&w(&[&[1.0]], WMode::Strict), 1.0, 1.0).unwrap();
        assert!((r.c_of_w - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ties_go_to_smallest_subset() {
        // singletons {1} and {2} have bit-identical terms and beat {1,2}
        let r = c_of_w(&w(&[&[1.0, 0.0], &[0.0, 1.0]], WMode::Generalized), 1.0, 2.0).unwrap();
        assert_eq!(r.per_subset[0].1, r.per_subset[1].1);
        assert!(r.per_subset[2].1 >= r.per_subset[0].1 - 1e-15);
        let best = r
            .per_subset
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .unwrap();
        assert_eq!(r.argmin_subset, best.0);
        assert_eq!(r.c_of_w, best.1);
    }

    #[test]
    fn refuses_large_k_and_bad_variances() {
        let big = SignalValueMatrix::column(&[1.0; 21], WMode::Strict).unwrap();
        assert!(matches!(
            c_of_w(&big, 1.0, 1.0),
            Err(Error::TooManySubsets { k: 21, .. })
        ));
        let one = w(&[&[1.0]], WMode::Strict);
        assert!(c_of_w(&one, 0.0, 1.0).is_err());
        assert!(c_of_w(&one, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn sufficient_n_examples() {
        let one = w(&[&[1.0]], WMode::Strict);
        assert_eq!(sufficient_n(&one, 1.0, 1.0, 1024, 0.0).unwrap(), 20);
        let w1 = w(&[&[0.1], &[5.0]], WMode::Strict);
        assert_eq!(sufficient_n(&w1, 10.0, 1.0, 1024, 0.5).unwrap(), 291);
        let mut last = 0;
        for margin in [0.0, 0.3, 0.6, 0.9, 0.99, 0.999] {
            let n = sufficient_n(&w1, 10.0, 1.0, 1024, margin).unwrap();
            assert!(n >= last);
            last = n;
        }
        assert!(sufficient_n(&w1, 10.0, 1.0, 1024, 1.0).is_err());
        assert!(sufficient_n(&w1, 10.0, 1.0, 1024, -0.1).is_err());
        assert!(sufficient_n(&w1, 10.0, 1.0, 1, 0.1).is_err());
    }

    #[test]
    fn identical_columns_examples() {
        let smv = identical_columns_bound(&[2.0, -1.0], 1, 3.0, 1.0).unwrap();
        for (t, v) in &smv {
            let norm_sq: f64 = t.indices().map(|i| [4.0, 1.0][i]).sum();
            let expected = (1.0 + 3.0 * norm_sq).log2() / (2.0 * t.len() as f64);
            assert!((v - expected).abs() < 1e-15);
        }
        let two = identical_columns_bound(&[1.0, 1.0], 2, 10.0, 1.0).unwrap();
        let full = two.iter().find(|(t, _)| t.len() == 2).unwrap().1;
        assert!((full - 0.25 * 41f64.log2()).abs() < 1e-15);
        assert!(identical_columns_bound(&[1.0, 0.0], 2, 1.0, 1.0).is_err());
        assert!(identical_columns_bound(&[1.0], 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn orthogonal_halves_examples() {
        let v = corollary3_threshold(2, 10.0, 1.0).unwrap();
        assert!((v - 0.5 * 21f64.log2()).abs() < 1e-12);
        assert!((v - 2.196).abs() < 1e-3);
        let v = corollary3_threshold(4, 1.0, 1.0).unwrap();
        assert!((v - 0.25 * 5f64.log2()).abs() < 1e-12);
        assert!(corollary3_threshold(3, 1.0, 1.0).is_err());
        assert!(corollary3_threshold(0, 1.0, 1.0).is_err());

        let ident = c_of_w(&w(&[&[1.0, 1.0], &[1.0, 1.0]], WMode::Strict), 10.0, 1.0).unwrap();
        assert!((ident.c_of_w - 0.25 * 41f64.log2()).abs() < 1e-12);
        assert!(corollary3_threshold(2, 10.0, 1.0).unwrap() > ident.c_of_w);
    }

    #[test]
    fn bounds_table_examples() {
        let rows = bounds_table(2, 20.0, 1024.0, 10.0, 1.0).unwrap();
        assert_eq!(rows[0].upper_bound_m, Some(4_084_101.0));
        assert_eq!(rows[1].upper_bound_m, Some(41f64.powi(5)));
        assert_eq!(rows[2].upper_bound_m, Some(21f64.powi(10)));
        let r0 = rows[0].upper_bound_m.unwrap();
        assert_eq!(rows[2].upper_bound_m.unwrap(), r0 * r0);
        for row in &rows {
            let n = row.lower_bound_n.unwrap();
            assert!((n * row.rate.unwrap() - 10.0).abs() < 1e-12);
        }
        let zero = bounds_table(2, 0.0, 1024.0, 10.0, 1.0).unwrap();
        assert!(zero.iter().all(|r| r.upper_bound_m == Some(1.0)));
        let odd = bounds_table(3, 20.0, 1024.0, 10.0, 1.0).unwrap();
        assert!(odd[2].upper_bound_m.is_none() && odd[0].upper_bound_m.is_some());
    }

    #[test]
    fn mac_examples() {
        let zero = RateTuple {
            rates: vec![0.0, 0.0],
            gains: vec![vec![1.0, 2.0], vec![-1.0, 0.5]],
            sigma_c_sq: 1.0,
            sigma_z_sq: 1.0,
        };
        assert_eq!(mac_region_check(&zero).unwrap(), MacVerdict::InRegion);

        let scalar = RateTuple {
            rates: vec![0.6],
            gains: vec![vec![1.0]],
            sigma_c_sq: 1.0,
            sigma_z_sq: 1.0,
        };
        match mac_region_check(&scalar).unwrap() {
            MacVerdict::Violated(v) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].subset.one_based(), vec![1]);
                assert!((v[0].bound - 0.5).abs() < 1e-15);
            }
            other => panic!("expected violation, got {other:?}"),
        }
        let ok = RateTuple {
            rates: vec![0.5],
            ..scalar
        };
        assert_eq!(mac_region_check(&ok).unwrap(), MacVerdict::InRegion);
    }

    #[test]
    fn mac_rejects_bad_input() {
        let bad = RateTuple {
            rates: vec![0.1, 0.2],
            gains: vec![vec![1.0]],
            sigma_c_sq: 1.0,
            sigma_z_sq: 1.0,
        };
        assert!(mac_region_check(&bad).is_err());
        let neg = RateTuple {
            rates: vec![-0.1],
            gains: vec![vec![1.0]],
            sigma_c_sq: 1.0,
            sigma_z_sq: 1.0,
        };
        assert!(mac_region_check(&neg).is_err());
    }
}
