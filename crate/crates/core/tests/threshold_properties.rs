use mmv_core::threshold::{mac_subset_capacity, orthogonal_halves_matrix};
use mmv_core::{
    c_of_w, corollary3_threshold, identical_columns_bound, mac_region_check, RateTuple,
    SignalValueMatrix, Subset, WMode,
};
use proptest::prelude::*;

/// Laplace expansion along the first row.
fn det_cofactor(m: &[Vec<f64>]) -> f64 {
    let n = m.len();
    if n == 1 {
        return m[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<f64>> = m[1..]
                .iter()
                .map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * m[0][j] * det_cofactor(&minor)
        })
        .sum()
}

/// `min_T (1/(2|T|))·log₂det(I + α·W_TᵀW_T)` by bitmask enumeration.
fn c_oracle(rows: &[Vec<f64>], alpha: f64) -> f64 {
    let (k, l) = (rows.len(), rows[0].len());
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let mut g = vec![vec![0.0; l]; l];
        for (i, row) in rows.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            for a in 0..l {
                for b in 0..l {
                    g[a][b] += alpha * row[a] * row[b];
                }
            }
        }
        for (a, row) in g.iter_mut().enumerate() {
            row[a] += 1.0;
        }
        let v = det_cofactor(&g).log2() / (2.0 * mask.count_ones() as f64);
        best = best.min(v);
    }
    best
}

fn nonzero() -> impl Strategy<Value = f64> {
    prop_oneof![-4.0..-0.1f64, 0.1..4.0f64]
}

fn w_rows(max_k: usize, max_l: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_k, 1..=max_l).prop_flat_map(|(k, l)| prop::collection::vec(prop::collection::vec(nonzero(), l), k))
}

#[test]
fn golden_values_match_oracle() {
    let cases: [(&[&[f64]], f64); 4] = [
        (&[&[0.1], &[5.0]], 10.0),
        (&[&[2.0, 2.0], &[-2.0, 2.0]], 10.0),
        (&[&[1.0, 0.5, -0.3], &[0.2, 2.0, 1.0], &[-1.0, 1.0, 1.0]], 0.7),
        (&[&[0.3], &[-0.4], &[1.5], &[2.5]], 3.0),
    ];
    for (rows, alpha) in cases {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        let w = SignalValueMatrix::from_rows(&rows, WMode::Strict).unwrap();
        let got = c_of_w(&w, alpha, 1.0).unwrap().c_of_w;
        let want = c_oracle(&rows, alpha);
        assert!((got - want).abs() < 1e-12 * want.max(1.0), "{got} vs {want}");
    }
}

#[test]
fn orthogonal_halves_against_oracle() {
    for k in [2usize, 4, 6] {
        let w = orthogonal_halves_matrix(k).unwrap();
        for alpha in [0.1, 1.0, 10.0] {
            let want = c_oracle(w.rows(), alpha);
            assert!((corollary3_threshold(k, alpha, 1.0).unwrap() - want).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn c_of_w_matches_oracle(rows in w_rows(4, 3), alpha in 0.05..20.0f64) {
        let w = SignalValueMatrix::from_rows(&rows, WMode::Strict).unwrap();
        let got = c_of_w(&w, alpha, 1.0).unwrap();
        let want = c_oracle(&rows, alpha);
        prop_assert!((got.c_of_w - want).abs() <= 1e-10 * want.max(1.0));
        prop_assert_eq!(got.value(got.argmin_subset), Some(got.c_of_w));
    }

    #[test]
    fn depends_only_on_snr(rows in w_rows(3, 3), alpha in 0.05..20.0f64, scale in 0.01..100.0f64) {
        let w = SignalValueMatrix::from_rows(&rows, WMode::Strict).unwrap();
        let a = c_of_w(&w, alpha, 1.0).unwrap().c_of_w;
        let b = c_of_w(&w, alpha * scale, scale).unwrap().c_of_w;
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }

    #[test]
    fn adding_a_column_never_lowers_any_term(
        rows in w_rows(4, 3),
        extra in prop::collection::vec(nonzero(), 4),
        alpha in 0.05..20.0f64,
    ) {
        let w = SignalValueMatrix::from_rows(&rows, WMode::Strict).unwrap();
        let wider: Vec<Vec<f64>> = rows.iter().zip(&extra).map(|(r, e)| {
            let mut r = r.clone();
            r.push(*e);
            r
        }).collect();
        let w2 = SignalValueMatrix::from_rows(&wider, WMode::Strict).unwrap();
        let (a, b) = (c_of_w(&w, alpha, 1.0).unwrap(), c_of_w(&w2, alpha, 1.0).unwrap());
        for (s, v) in &a.per_subset {
            prop_assert!(b.value(*s).unwrap() >= v - 1e-12);
        }
        prop_assert!(b.c_of_w >= a.c_of_w - 1e-12);
    }

    #[test]
    fn identical_columns_identity(
        w in prop::collection::vec(nonzero(), 1..=4),
        l in 1usize..=6,
        alpha in prop::sample::select(vec![0.1, 1.0, 10.0]),
    ) {
        let rows: Vec<Vec<f64>> = w.iter().map(|v| vec![*v; l]).collect();
        let m = SignalValueMatrix::from_rows(&rows, WMode::Strict).unwrap();
        let report = c_of_w(&m, alpha, 1.0).unwrap();
        for (s, v) in &report.per_subset {
            let norm_sq: f64 = s.indices().map(|i| w[i] * w[i]).sum();
            let want = (1.0 + l as f64 * alpha * norm_sq).log2() / (2.0 * s.len() as f64);
            prop_assert!((v - want).abs() <= 1e-10 * want.max(1.0));
        }
        let closed = identical_columns_bound(&w, l, alpha, 1.0).unwrap();
        for (s, v) in closed {
            let got = report.value(s).unwrap();
            prop_assert!((got - v).abs() <= 1e-10 * v.max(1.0));
        }
    }

    #[test]
    fn mac_bounds_are_scaled_threshold_terms(rows in w_rows(4, 3), alpha in 0.05..20.0f64) {
        let w = SignalValueMatrix::from_rows(&rows, WMode::Strict).unwrap();
        let report = c_of_w(&w, alpha, 1.0).unwrap();
        for (s, v) in &report.per_subset {
            let cap = mac_subset_capacity(&rows, *s, alpha).unwrap();
            prop_assert!((cap - v * s.len() as f64).abs() <= 1e-10 * cap.max(1.0));
        }
        // equal rates c(W) sit inside the region
        let t = RateTuple { rates: vec![report.c_of_w; rows.len()], gains: rows.clone(), sigma_c_sq: alpha, sigma_z_sq: 1.0 };
        prop_assert_eq!(mac_region_check(&t).unwrap(), mmv_core::threshold::MacVerdict::InRegion);
    }

    #[test]
    fn single_user_region_is_scalar_capacity(h in prop::collection::vec(nonzero(), 1..=4), snr in 0.05..20.0f64) {
        let cap = mac_subset_capacity(std::slice::from_ref(&h), Subset::from_indices([0]), snr).unwrap();
        let norm_sq: f64 = h.iter().map(|v| v * v).sum();
        prop_assert!((cap - 0.5 * (1.0 + snr * norm_sq).log2()).abs() < 1e-12 * cap.max(1.0));
    }
}
