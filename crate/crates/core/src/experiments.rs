//! Seeded Monte Carlo estimates of the support recovery error rate across
//! `(m, n)` schedules.
//!
//! Grid point `m` uses the stream `derive_seed(master_seed, m)`; its trial
//! `t` draws the instance from `derive_seed(point_seed, t)`. Trials run in
//! parallel and are aggregated by counting, so a curve depends only on its
//! schedule.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decoders::{decode_ml, decode_net, fallback_support, DecoderLimits};
use crate::error::{Error, Result};
use crate::io::fmt_sig17;
use crate::model::{
    default_epsilon, draw_gaussian, generate_instance, generate_instance_with_matrix,
    ProblemConfig, SignalValueMatrix, WMode,
};
use crate::rng::{derive_seed, SimRng};
use crate::subset::binomial;
use crate::threshold::{c_of_w, n_for_rate, orthogonal_halves_matrix};

/// Largest `m` a schedule may contain.
pub const MAX_M: usize = 512;
/// Largest `k` and `l` a schedule may use.
pub const MAX_K: usize = 4;
pub const MAX_L: usize = 4;
pub const MAX_TRIALS: u64 = 10_000;

const WILSON_Z: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecoderKind {
    #[default]
    Ml,
    Net,
}

impl DecoderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DecoderKind::Ml => "ml",
            DecoderKind::Net => "net",
        }
    }
}

fn default_trials() -> u64 {
    100
}

fn default_sigma_a_sq() -> f64 {
    1.0
}

fn default_budget() -> u64 {
    DecoderLimits::default().test_budget as u64
}

fn default_net_cap() -> usize {
    DecoderLimits::default().net_point_cap
}

/// One phase-transition sweep. `W`, `alpha`, `m_grid` and `ratio` are
/// required; everything else has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    /// Rows of the `k × l` signal value matrix.
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    #[serde(default)]
    pub mode: WMode,
    /// `σa²/σz²`.
    pub alpha: f64,
    pub m_grid: Vec<usize>,
    /// Target value of `log₂m / (n·c(W))`.
    pub ratio: f64,
    #[serde(default = "default_trials")]
    pub trials_per_point: u64,
    #[serde(default)]
    pub decoder: DecoderKind,
    #[serde(default)]
    pub master_seed: u64,
    /// `σa²`; the noise variance is `σa²/alpha`.
    #[serde(default = "default_sigma_a_sq")]
    pub sigma_a_sq: f64,
    /// Net decoder tolerance, `0.25·σz/σa` when absent.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_budget")]
    pub test_budget: u64,
    #[serde(default = "default_net_cap")]
    pub net_point_cap: usize,
    /// Draw `A` once per grid point instead of once per trial.
    #[serde(default)]
    pub fixed_a: bool,
}

impl Schedule {
    /// A schedule with every optional field at its default.
    pub fn new(w: Vec<Vec<f64>>, alpha: f64, m_grid: Vec<usize>, ratio: f64) -> Self {
        Self {
            w,
            mode: WMode::default(),
            alpha,
            m_grid,
            ratio,
            trials_per_point: default_trials(),
            decoder: DecoderKind::default(),
            master_seed: 0,
            sigma_a_sq: default_sigma_a_sq(),
            epsilon: None,
            test_budget: default_budget(),
            net_point_cap: default_net_cap(),
            fixed_a: false,
        }
    }

    pub fn sigma_z_sq(&self) -> f64 {
        self.sigma_a_sq / self.alpha
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
            .unwrap_or_else(|| default_epsilon(self.sigma_a_sq, self.sigma_z_sq()))
    }

    /// Checks the schedule and returns its validated `W`.
    pub fn validate(&self) -> Result<SignalValueMatrix> {
        let w = SignalValueMatrix::from_rows(&self.w, self.mode)?;
        if w.k() > MAX_K || w.l() > MAX_L {
            return Err(Error::invalid(format!(
                "W is {}x{}, at most {MAX_K}x{MAX_L} is supported",
                w.k(),
                w.l()
            )));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("ratio", self.ratio),
            ("sigma_a_sq", self.sigma_a_sq),
            ("epsilon", self.epsilon()),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        check_grid(&self.m_grid, w.k())?;
        check_trials(self.trials_per_point)?;
        Ok(w)
    }

    fn limits(&self) -> DecoderLimits {
        DecoderLimits {
            net_point_cap: self.net_point_cap,
            test_budget: u128::from(self.test_budget),
        }
    }
}

fn check_grid(m_grid: &[usize], k: usize) -> Result<()> {
    if m_grid.is_empty() {
        return Err(Error::invalid("m_grid is empty"));
    }
    if m_grid.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::invalid("m_grid must be strictly increasing"));
    }
    if m_grid[0] < k {
        return Err(Error::invalid(format!("m = {} is smaller than k = {k}", m_grid[0])));
    }
    if m_grid[m_grid.len() - 1] > MAX_M {
        return Err(Error::invalid(format!("m may not exceed {MAX_M}")));
    }
    Ok(())
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(Error::invalid(format!(
            "trials_per_point must be in 1..={MAX_TRIALS}, got {trials}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointStatus {
    Ok,
    /// The decoder's work budget or net size cap was exceeded.
    Skipped,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhasePoint {
    pub m: usize,
    pub n: usize,
    /// Trials run: `trials_per_point`, or 0 when skipped.
    pub trials: u64,
    pub errors: u64,
    pub error_rate: Option<f64>,
    pub wilson_halfwidth: Option<f64>,
    pub status: PointStatus,
    /// Why the point was skipped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseCurve {
    pub points: Vec<PhasePoint>,
    pub ratio: f64,
    pub decoder: DecoderKind,
    pub c_of_w: f64,
}

pub const CSV_HEADER: [&str; 7] = ["m", "n", "trials", "errors", "error_rate", "wilson_halfwidth", "status"];

impl PhaseCurve {
    /// `(m, error_rate)` of the points that ran.
    pub fn rates(&self) -> Vec<(usize, f64)> {
        self.points
            .iter()
            .filter_map(|p| p.error_rate.map(|e| (p.m, e)))
            .collect()
    }

    /// Spearman correlation between `m` and the error rate over the points
    /// that ran.
    pub fn trend(&self) -> f64 {
        let (ms, es): (Vec<f64>, Vec<f64>) =
            self.rates().into_iter().map(|(m, e)| (m as f64, e)).unzip();
        spearman(&ms, &es)
    }

    /// CSV with [`CSV_HEADER`]; rates of skipped points are left empty.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(CSV_HEADER)?;
        let opt = |v: Option<f64>| v.map(fmt_sig17).unwrap_or_default();
        for p in &self.points {
            wr.write_record([
                p.m.to_string(),
                p.n.to_string(),
                p.trials.to_string(),
                p.errors.to_string(),
                opt(p.error_rate),
                opt(p.wilson_halfwidth),
                p.status.as_str().to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// Half-width of the 95% Wilson score interval for `errors` out of
/// `trials`.
pub fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    if trials == 0 {
        return f64::NAN;
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt()
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; 0 when either
/// side has no variance or fewer than two values.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "spearman needs paired samples");
    if x.len() < 2 {
        return 0.0;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Everything a grid point needs besides `(m, n)`.
struct Runner<'a> {
    w: &'a SignalValueMatrix,
    sigma_a_sq: f64,
    sigma_z_sq: f64,
    epsilon: f64,
    decoder: DecoderKind,
    limits: DecoderLimits,
    trials: u64,
    master_seed: u64,
    fixed_a: bool,
}

impl Runner<'_> {
    fn skipped(m: usize, n: usize, reason: String) -> PhasePoint {
        log::warn!("skipping grid point m = {m}, n = {n}: {reason}");
        PhasePoint {
            m,
            n,
            trials: 0,
            errors: 0,
            error_rate: None,
            wilson_halfwidth: None,
            status: PointStatus::Skipped,
            reason: Some(reason),
        }
    }

    fn trial(&self, cfg: &ProblemConfig, a: Option<&nalgebra::DMatrix<f64>>, rng: &mut SimRng) -> Result<bool> {
        let k = self.w.k();
        let inst = match a {
            Some(a) => generate_instance_with_matrix(self.w, cfg, a.clone(), rng)?,
            None => generate_instance(self.w, cfg, rng)?,
        };
        let decoded = match self.decoder {
            DecoderKind::Ml => decode_ml(inst.y(), inst.a(), k, &self.limits),
            DecoderKind::Net => decode_net(inst.y(), inst.a(), k, cfg, &self.limits),
        };
        let estimate = match decoded {
            Ok(d) => d.support,
            Err(Error::Decode(_)) => fallback_support(k),
            Err(e) => return Err(e),
        };
        Ok(estimate != inst.support())
    }

    fn point(&self, m: usize, n: usize) -> Result<PhasePoint> {
        let k = self.w.k();
        if self.decoder == DecoderKind::Ml && binomial(m, k) > self.limits.test_budget {
            let reason = Error::BudgetExceeded {
                needed: binomial(m, k),
                budget: self.limits.test_budget,
            };
            return Ok(Self::skipped(m, n, reason.to_string()));
        }
        let point_seed = derive_seed(self.master_seed, m as u64);
        let cfg = ProblemConfig::new(m, n, self.sigma_a_sq, self.sigma_z_sq, point_seed)
            .with_epsilon(self.epsilon);
        let shared_a = self.fixed_a.then(|| {
            let mut rng = SimRng::derived(point_seed, u64::MAX);
            draw_gaussian(n, m, self.sigma_a_sq, &mut rng)
        });
        let outcomes: Vec<Result<bool>> = (0..self.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = SimRng::derived(point_seed, t);
                self.trial(&cfg, shared_a.as_ref(), &mut rng)
            })
            .collect();
        let mut errors = 0;
        for o in outcomes {
            match o {
                Ok(wrong) => errors += u64::from(wrong),
                Err(e @ (Error::BudgetExceeded { .. } | Error::NetTooLarge { .. })) => {
                    return Ok(Self::skipped(m, n, e.to_string()));
                }
                Err(e) => return Err(e),
            }
        }
        Ok(PhasePoint {
            m,
            n,
            trials: self.trials,
            errors,
            error_rate: Some(errors as f64 / self.trials as f64),
            wilson_halfwidth: Some(wilson_halfwidth(errors, self.trials)),
            status: PointStatus::Ok,
            reason: None,
        })
    }
}

/// Runs every grid point with `n = ⌈log₂m / (ratio·c(W))⌉`.
pub fn run_phase(schedule: &Schedule) -> Result<PhaseCurve> {
    let w = schedule.validate()?;
    let c = c_of_w(&w, schedule.sigma_a_sq, schedule.sigma_z_sq())?.c_of_w;
    if !(c > 0.0) {
        return Err(Error::invalid(format!("c(W) = {c} is not positive")));
    }
    let runner = Runner {
        w: &w,
        sigma_a_sq: schedule.sigma_a_sq,
        sigma_z_sq: schedule.sigma_z_sq(),
        epsilon: schedule.epsilon(),
        decoder: schedule.decoder,
        limits: schedule.limits(),
        trials: schedule.trials_per_point,
        master_seed: schedule.master_seed,
        fixed_a: schedule.fixed_a,
    };
    let points = schedule
        .m_grid
        .iter()
        .map(|&m| {
            let n = n_for_rate(m, schedule.ratio * c)? as usize;
            runner.point(m, n)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseCurve {
        points,
        ratio: schedule.ratio,
        decoder: schedule.decoder,
        c_of_w: c,
    })
}

/// The three signal cases of the SMV/MMV comparison, in table order.
#[derive(Debug, Clone, PartialEq)]
pub struct SmvMmvComparison {
    /// `k×1` ones, `k×2` ones, `k×2` orthogonal halves.
    pub cases: [SignalValueMatrix; 3],
    pub curves: [PhaseCurve; 3],
    /// Rate used for the common `n`: `sqrt(c_smv · c_orthogonal)`.
    pub reference_c: f64,
}

/// Runs the single-vector case `W = 1_k`, the identical-columns case
/// `W = [1_k, 1_k]` and the orthogonal-halves case on one common schedule
/// `n = ⌈log₂m / c_ref⌉`, with `c_ref` the geometric mean of the first and
/// last thresholds, so that every `(m, n)` lies between their transitions.
///
/// All three cases use the same master seed; with the draw order of
/// [`generate_instance`] the supports and measurement matrices coincide
/// across cases trial by trial. Each curve's `ratio` is `c_ref / c(W)`.
pub fn compare_smv_mmv(
    k: usize,
    alpha: f64,
    m_grid: &[usize],
    trials: u64,
    decoder: DecoderKind,
    master_seed: u64,
) -> Result<SmvMmvComparison> {
    if k == 0 || !k.is_multiple_of(2) || k > MAX_K {
        return Err(Error::invalid(format!("k must be even and at most {MAX_K}, got {k}")));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::invalid(format!("alpha must be positive, got {alpha}")));
    }
    check_grid(m_grid, k)?;
    check_trials(trials)?;
    let (sigma_a_sq, sigma_z_sq) = (1.0, 1.0 / alpha);
    let cases = [
        SignalValueMatrix::from_rows(&vec![vec![1.0]; k], WMode::Strict)?,
        SignalValueMatrix::from_rows(&vec![vec![1.0, 1.0]; k], WMode::Strict)?,
        orthogonal_halves_matrix(k)?,
    ];
    let cs = cases
        .iter()
        .map(|w| c_of_w(w, sigma_a_sq, sigma_z_sq).map(|r| r.c_of_w))
        .collect::<Result<Vec<_>>>()?;
    let reference_c = (cs[0] * cs[2]).sqrt();
    let ns = m_grid
        .iter()
        .map(|&m| n_for_rate(m, reference_c).map(|n| n as usize))
        .collect::<Result<Vec<_>>>()?;
    let run = |i: usize| -> Result<PhaseCurve> {
        let runner = Runner {
            w: &cases[i],
            sigma_a_sq,
            sigma_z_sq,
            epsilon: default_epsilon(sigma_a_sq, sigma_z_sq),
            decoder,
            limits: DecoderLimits::default(),
            trials,
            master_seed,
            fixed_a: false,
        };
        let points = m_grid
            .iter()
            .zip(&ns)
            .map(|(&m, &n)| runner.point(m, n))
            .collect::<Result<Vec<_>>>()?;
        Ok(PhaseCurve {
            points,
            ratio: reference_c / cs[i],
            decoder,
            c_of_w: cs[i],
        })
    };
    let curves = [run(0)?, run(1)?, run(2)?];
    Ok(SmvMmvComparison {
        cases,
        curves,
        reference_c,
    })
}
