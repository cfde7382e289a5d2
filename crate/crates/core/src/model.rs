//! Signal and measurement model.
//!
//! A k-row-sparse signal `X ∈ R^{m×l}` carries the rows of the signal value
//! matrix `W` on a uniformly random support, and is observed as
//! `Y = A·X + Z` with i.i.d. Gaussian `A` and `Z`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, WViolation};
use crate::linalg::canonical_mul_add;
use crate::rng::SimRng;

/// Which entries of `W` may be zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WMode {
    /// Every entry nonzero.
    #[default]
    Strict,
    /// Zero entries allowed, but no all-zero row or column.
    Generalized,
}

/// Checks the entries of a candidate `W` against `mode`.
///
/// Non-finite or empty input is an [`Error::InvalidInput`]; a structural
/// violation is reported as [`Error::InvalidSignal`] naming the first
/// offending entry, row or column (row-major scan, rows before columns).
pub fn validate_w(entries: &DMatrix<f64>, mode: WMode) -> Result<()> {
    let (k, l) = entries.shape();
    if k == 0 || l == 0 {
        return Err(Error::invalid("signal value matrix is empty"));
    }
    for i in 0..k {
        for j in 0..l {
            if !entries[(i, j)].is_finite() {
                return Err(Error::invalid(format!(
                    "entry ({},{}) is not finite",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    match mode {
        WMode::Strict => {
            for i in 0..k {
                for j in 0..l {
                    if entries[(i, j)] == 0.0 {
                        return Err(Error::InvalidSignal(WViolation::ZeroEntry {
                            row: i + 1,
                            col: j + 1,
                        }));
                    }
                }
            }
        }
        WMode::Generalized => {
            if let Some(i) = (0..k).find(|&i| entries.row(i).iter().all(|v| *v == 0.0)) {
                return Err(Error::InvalidSignal(WViolation::ZeroRow { row: i + 1 }));
            }
            if let Some(j) = (0..l).find(|&j| entries.column(j).iter().all(|v| *v == 0.0)) {
                return Err(Error::InvalidSignal(WViolation::ZeroColumn { col: j + 1 }));
            }
        }
    }
    Ok(())
}

/// The k×l matrix of nonzero-row values, validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalValueMatrix {
    entries: DMatrix<f64>,
    rows: Vec<Vec<f64>>,
    mode: WMode,
}

impl SignalValueMatrix {
    pub fn new(entries: DMatrix<f64>, mode: WMode) -> Result<Self> {
        validate_w(&entries, mode)?;
        let rows = (0..entries.nrows())
            .map(|i| entries.row(i).iter().copied().collect())
            .collect();
        Ok(Self {
            entries,
            rows,
            mode,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], mode: WMode) -> Result<Self> {
        let k = rows.len();
        let l = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != l) {
            return Err(Error::invalid("rows of W have different lengths"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(k, l, &flat), mode)
    }

    /// Column vector `[w₁, …, w_k]ᵀ`.
    pub fn column(values: &[f64], mode: WMode) -> Result<Self> {
        Self::new(DMatrix::from_column_slice(values.len(), 1, values), mode)
    }

    pub fn k(&self) -> usize {
        self.entries.nrows()
    }

    pub fn l(&self) -> usize {
        self.entries.ncols()
    }

    pub fn mode(&self) -> WMode {
        self.mode
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Euclidean norm of column `j`.
    pub fn column_norm(&self, j: usize) -> f64 {
        self.entries.column(j).norm()
    }
}

/// Dimensions, variances, decoder tolerance and seed of one problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    pub m: usize,
    pub n: usize,
    pub sigma_a_sq: f64,
    pub sigma_z_sq: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl ProblemConfig {
    /// Config with the default decoder tolerance `ε = 0.25·σz/σa`.
    pub fn new(m: usize, n: usize, sigma_a_sq: f64, sigma_z_sq: f64, seed: u64) -> Self {
        Self {
            m,
            n,
            sigma_a_sq,
            sigma_z_sq,
            epsilon: default_epsilon(sigma_a_sq, sigma_z_sq),
            seed,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.sigma_a_sq / self.sigma_z_sq
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.m < k {
            return Err(Error::invalid(format!("m = {} is smaller than k = {k}", self.m)));
        }
        if self.n == 0 {
            return Err(Error::invalid("n must be at least 1"));
        }
        for (name, v) in [
            ("sigma_a_sq", self.sigma_a_sq),
            ("sigma_z_sq", self.sigma_z_sq),
            ("epsilon", self.epsilon),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

pub fn default_epsilon(sigma_a_sq: f64, sigma_z_sq: f64) -> f64 {
    0.25 * (sigma_z_sq / sigma_a_sq).sqrt()
}

/// One realized trial: planted support plus `A`, `X`, `Z` and `Y = A·X + Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseInstance {
    support: Vec<usize>,
    x: DMatrix<f64>,
    a: DMatrix<f64>,
    z: DMatrix<f64>,
    y: DMatrix<f64>,
}

impl SparseInstance {
    /// Assemble an instance from its parts, checking shapes and support.
    /// `support` is 0-based and is stored sorted.
    pub fn from_parts(
        mut support: Vec<usize>,
        a: DMatrix<f64>,
        x: DMatrix<f64>,
        z: DMatrix<f64>,
        y: DMatrix<f64>,
    ) -> Result<Self> {
        let (n, m) = a.shape();
        let l = x.ncols();
        if x.nrows() != m || z.shape() != (n, l) || y.shape() != (n, l) {
            return Err(Error::invalid(format!(
                "inconsistent shapes: A {:?}, X {:?}, Z {:?}, Y {:?}",
                a.shape(),
                x.shape(),
                z.shape(),
                y.shape()
            )));
        }
        support.sort_unstable();
        if support.windows(2).any(|w| w[0] == w[1]) || support.iter().any(|&s| s >= m) {
            return Err(Error::invalid("support must hold distinct indices in [m]"));
        }
        Ok(Self {
            support,
            x,
            a,
            z,
            y,
        })
    }

    /// Sorted, 0-based.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn support_one_based(&self) -> Vec<usize> {
        self.support.iter().map(|s| s + 1).collect()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn m(&self) -> usize {
        self.a.ncols()
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn l(&self) -> usize {
        self.y.ncols()
    }

    /// Rows of `X` off the support are zero and `Y` equals the canonical
    /// `A·X + Z` bit for bit.
    pub fn is_consistent(&self) -> bool {
        let off_support_zero = (0..self.m())
            .filter(|r| self.support.binary_search(r).is_err())
            .all(|r| self.x.row(r).iter().all(|v| *v == 0.0));
        off_support_zero && canonical_mul_add(&self.a, &self.x, &self.z) == self.y
    }
}

/// `k` distinct indices of `[m]` in draw order (partial Fisher-Yates);
/// every ordered k-tuple is equally likely.
pub fn sample_ordered_support(m: usize, k: usize, rng: &mut SimRng) -> Result<Vec<usize>> {
    if k == 0 || k > m {
        return Err(Error::invalid(format!("need 1 <= k <= m, got k = {k}, m = {m}")));
    }
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..k {
        let j = i + rng.index(m - i);
        pool.swap(i, j);
    }
    pool.truncate(k);
    Ok(pool)
}

/// Uniformly random size-`k` subset of `[m]`, sorted ascending, 0-based.
pub fn sample_support(m: usize, k: usize, rng: &mut SimRng) -> Result<Vec<usize>> {
    let mut s = sample_ordered_support(m, k, rng)?;
    s.sort_unstable();
    Ok(s)
}

/// Draws one instance. Order of draws: the ordered support, then `A`
/// row-major, then `Z` row-major. Row `j` of `W` is placed at the `j`-th
/// drawn index.
pub fn generate_instance(
    w: &SignalValueMatrix,
    cfg: &ProblemConfig,
    rng: &mut SimRng,
) -> Result<SparseInstance> {
    cfg.validate(w.k())?;
    let placement = sample_ordered_support(cfg.m, w.k(), rng)?;
    let a = draw_gaussian(cfg.n, cfg.m, cfg.sigma_a_sq, rng);
    finish_instance(w, cfg, placement, a, rng)
}

/// Like [`generate_instance`] but with a caller-supplied measurement matrix.
/// Draws the ordered support, then `Z`.
pub fn generate_instance_with_matrix(
    w: &SignalValueMatrix,
    cfg: &ProblemConfig,
    a: DMatrix<f64>,
    rng: &mut SimRng,
) -> Result<SparseInstance> {
    cfg.validate(w.k())?;
    if a.shape() != (cfg.n, cfg.m) {
        return Err(Error::invalid(format!(
            "measurement matrix is {:?}, expected ({}, {})",
            a.shape(),
            cfg.n,
            cfg.m
        )));
    }
    let placement = sample_ordered_support(cfg.m, w.k(), rng)?;
    finish_instance(w, cfg, placement, a, rng)
}

fn finish_instance(
    w: &SignalValueMatrix,
    cfg: &ProblemConfig,
    placement: Vec<usize>,
    a: DMatrix<f64>,
    rng: &mut SimRng,
) -> Result<SparseInstance> {
    let l = w.l();
    let z = draw_gaussian(cfg.n, l, cfg.sigma_z_sq, rng);
    let mut x = DMatrix::zeros(cfg.m, l);
    for (j, &s) in placement.iter().enumerate() {
        for i in 0..l {
            x[(s, i)] = w.entries()[(j, i)];
        }
    }
    let y = canonical_mul_add(&a, &x, &z);
    SparseInstance::from_parts(placement, a, x, z, y)
}

/// `rows × cols` matrix of i.i.d. N(0, variance), filled row-major.
pub fn draw_gaussian(rows: usize, cols: usize, variance: f64, rng: &mut SimRng) -> DMatrix<f64> {
    let flat: Vec<f64> = (0..rows * cols).map(|_| rng.normal(variance)).collect();
    DMatrix::from_row_slice(rows, cols, &flat)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(rows: &[&[f64]], mode: WMode) -> Result<SignalValueMatrix> {
        SignalValueMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>(), mode)
    }

    #[test]
    fn validation_examples() {
        assert!(w(&[&[0.1], &[5.0]], WMode::Strict).is_ok());
        let err = w(&[&[0.1, 0.0], &[5.0, 6.0]], WMode::Strict).unwrap_err();
        assert!(matches!(
            err,
            Error::InvalidSignal(WViolation::ZeroEntry { row: 1, col: 2 })
        ));
        assert!(w(&[&[0.1, 0.0], &[5.0, 6.0]], WMode::Generalized).is_ok());
        let err = w(&[&[0.0, 0.0], &[1.0, 1.0]], WMode::Generalized).unwrap_err();
        assert!(matches!(err, Error::InvalidSignal(WViolation::ZeroRow { row: 1 })));
        let err = w(&[&[0.0, 1.0], &[0.0, 1.0]], WMode::Generalized).unwrap_err();
        assert!(matches!(err, Error::InvalidSignal(WViolation::ZeroColumn { col: 1 })));
    }

    #[test]
    fn validation_input_errors() {
        assert!(matches!(
            w(&[&[1.0, f64::NAN]], WMode::Generalized),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            SignalValueMatrix::new(DMatrix::zeros(0, 3), WMode::Strict),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            SignalValueMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]], WMode::Strict),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn forced_support() {
        let mut rng = SimRng::new(3);
        for _ in 0..10 {
            assert_eq!(sample_support(2, 2, &mut rng).unwrap(), vec![0, 1]);
        }
        assert!(sample_support(2, 3, &mut rng).is_err());
        assert!(sample_support(2, 0, &mut rng).is_err());
    }

    #[test]
    fn scalar_instance() {
        let w = w(&[&[1.0]], WMode::Strict).unwrap();
        let cfg = ProblemConfig::new(1, 1, 1.0, 0.5, 9);
        let inst = generate_instance(&w, &cfg, &mut SimRng::new(cfg.seed)).unwrap();
        assert_eq!(inst.support(), &[0]);
        assert_eq!(inst.x()[(0, 0)], 1.0);
        assert_eq!(inst.y()[(0, 0)], inst.a()[(0, 0)] + inst.z()[(0, 0)]);
        assert!(inst.is_consistent());
    }

    #[test]
    fn instance_is_deterministic() {
        let w = w(&[&[2.0, 2.0], &[-2.0, 2.0]], WMode::Strict).unwrap();
        let cfg = ProblemConfig::new(20, 15, 1.0, 0.1, 11);
        let a = generate_instance(&w, &cfg, &mut SimRng::new(cfg.seed)).unwrap();
        let b = generate_instance(&w, &cfg, &mut SimRng::new(cfg.seed)).unwrap();
        assert_eq!(a, b);
        let c = generate_instance(&w, &cfg, &mut SimRng::new(cfg.seed + 1)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(ProblemConfig::new(1, 1, 1.0, 1.0, 0).validate(2).is_err());
        assert!(ProblemConfig::new(3, 0, 1.0, 1.0, 0).validate(2).is_err());
        assert!(ProblemConfig::new(3, 1, 0.0, 1.0, 0).validate(2).is_err());
        assert!(ProblemConfig::new(3, 1, 1.0, 1.0, 0)
            .with_epsilon(-1.0)
            .validate(2)
            .is_err());
        assert!((ProblemConfig::new(3, 1, 4.0, 1.0, 0).epsilon - 0.125).abs() < 1e-15);
    }

    #[test]
    fn fixed_matrix_shape_checked() {
        let w = w(&[&[1.0]], WMode::Strict).unwrap();
        let cfg = ProblemConfig::new(4, 3, 1.0, 1.0, 0);
        let mut rng = SimRng::new(0);
        assert!(generate_instance_with_matrix(&w, &cfg, DMatrix::zeros(3, 5), &mut rng).is_err());
        let a = DMatrix::from_element(3, 4, 1.0);
        let inst = generate_instance_with_matrix(&w, &cfg, a.clone(), &mut rng).unwrap();
        assert_eq!(inst.a(), &a);
    }
}
