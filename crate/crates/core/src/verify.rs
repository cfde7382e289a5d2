//! Numerical checks of the inequalities the achievability argument rests
//! on: a Chernoff-type tail bound for Gaussian perturbations, covering-net
//! properties, an eigenvalue bound for Gram determinants and Hadamard's
//! inequality.
//!
//! Monte Carlo checks draw trial `t` from `SimRng::derived(seed, t)` and
//! aggregate by summation, so reports do not depend on thread count.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::decoders::{build_net, estimate_amplitudes};
use crate::error::{Error, Result};
use crate::linalg::{gram, symmetric_eigenvalues};
use crate::model::{draw_gaussian, generate_instance, ProblemConfig, SignalValueMatrix};
use crate::rng::SimRng;

/// Outcome of one check or sweep; passing means `violations == 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaCheckReport {
    pub name: String,
    pub seed: u64,
    pub trials: u64,
    pub violations: u64,
    /// Smallest slack seen; negative exactly when something failed.
    pub worst_margin: f64,
}

impl LemmaCheckReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }

    /// Sum of trials and violations, minimum of margins.
    pub fn combine(name: &str, seed: u64, parts: &[LemmaCheckReport]) -> LemmaCheckReport {
        LemmaCheckReport {
            name: name.to_string(),
            seed,
            trials: parts.iter().map(|p| p.trials).sum(),
            violations: parts.iter().map(|p| p.violations).sum(),
            worst_margin: parts
                .iter()
                .map(|p| p.worst_margin)
                .fold(f64::INFINITY, f64::min),
        }
    }
}

// ---------------------------------------------------------------------------
// Gaussian perturbation tail bound
// ---------------------------------------------------------------------------

/// `log₂` of the tail bound
/// `P((1/(n·l))·‖B − D‖_F² ≤ γ) ≤ 2^{−(n/2)·log₂(Π_j [BᵀB/n]_jj / γ^l)}`.
pub fn lemma1_log2_bound(b: &DMatrix<f64>, gamma: f64) -> Result<f64> {
    let (n, l) = b.shape();
    if n == 0 || l == 0 {
        return Err(Error::invalid("B is empty"));
    }
    let log2_diag: Vec<f64> = (0..l)
        .map(|j| (b.column(j).norm_squared() / n as f64).log2())
        .collect();
    let log2_alpha = log2_diag.iter().sum::<f64>() / l as f64;
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::invalid(format!("gamma must be positive, got {gamma}")));
    }
    if !(log2_alpha > gamma.log2()) {
        return Err(Error::invalid(format!(
            "gamma = {gamma} must be below the geometric mean {} of the column energies",
            log2_alpha.exp2()
        )));
    }
    Ok(-(n as f64 / 2.0) * (log2_diag.iter().sum::<f64>() - l as f64 * gamma.log2()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Outcome {
    pub report: LemmaCheckReport,
    pub estimate: f64,
    pub bound: f64,
    pub standard_error: f64,
}

/// Monte Carlo estimate of `P((1/(n·l))·‖B − D‖_F² ≤ γ)` where column `j`
/// of `D` is `N(0, θ_j·I)` (identically zero when `θ_j = 0`), compared with
/// the bound plus three binomial standard errors evaluated at the bound.
pub fn check_lemma1(
    b: &DMatrix<f64>,
    theta: &[f64],
    gamma: f64,
    trials: u64,
    seed: u64,
) -> Result<Lemma1Outcome> {
    let (n, l) = b.shape();
    if theta.len() != l {
        return Err(Error::invalid(format!("theta has {} entries, B has {l} columns", theta.len())));
    }
    if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::invalid("theta entries must be finite and nonnegative"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be positive"));
    }
    let bound = lemma1_log2_bound(b, gamma)?.exp2();
    let limit = gamma * (n * l) as f64;
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = SimRng::derived(seed, t);
            let mut total = 0.0;
            for (j, &th) in theta.iter().enumerate() {
                for i in 0..n {
                    let d = if th > 0.0 { rng.normal(th) } else { 0.0 };
                    let diff = b[(i, j)] - d;
                    total += diff * diff;
                }
            }
            u64::from(total <= limit)
        })
        .sum();
    let estimate = hits as f64 / trials as f64;
    let standard_error = (bound * (1.0 - bound) / trials as f64).sqrt();
    let margin = bound + 3.0 * standard_error - estimate;
    Ok(Lemma1Outcome {
        report: LemmaCheckReport {
            name: "lemma1".into(),
            seed,
            trials,
            violations: u64::from(margin < 0.0),
            worst_margin: margin,
        },
        estimate,
        bound,
        standard_error,
    })
}

/// A fixed tail-bound configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Config {
    pub label: &'static str,
    pub b: DMatrix<f64>,
    pub theta: Vec<f64>,
    pub gamma: f64,
}

/// The three standard configurations:
///
/// 1. `n = 4, l = 1`, `B = 1`, `θ = 1`, `γ = 0.5`: bound `2⁻²`;
/// 2. `n = 10, l = 2`, column energies `(2, 1)`, `θ = (0.5, 2)`, `γ = 1`:
///    bound `2⁻⁵`;
/// 3. `n = 50, l = 2`, column energies `(4, 4)`, `θ = (1, 1)`, `γ = 1`:
///    bound `2⁻¹⁰⁰`.
pub fn lemma1_configs() -> Vec<Lemma1Config> {
    let cols = |n: usize, values: &[f64]| {
        DMatrix::from_fn(n, values.len(), |_, j| values[j])
    };
    vec![
        Lemma1Config {
            label: "n4_l1",
            b: cols(4, &[1.0]),
            theta: vec![1.0],
            gamma: 0.5,
        },
        Lemma1Config {
            label: "n10_l2",
            b: cols(10, &[2f64.sqrt(), 1.0]),
            theta: vec![0.5, 2.0],
            gamma: 1.0,
        },
        Lemma1Config {
            label: "n50_l2",
            b: cols(50, &[2.0, 2.0]),
            theta: vec![1.0, 1.0],
            gamma: 1.0,
        },
    ]
}

pub fn lemma1_suite(trials: u64, seed: u64) -> Result<(LemmaCheckReport, Vec<Lemma1Outcome>)> {
    let outcomes = lemma1_configs()
        .iter()
        .enumerate()
        .map(|(i, c)| {
            check_lemma1(&c.b, &c.theta, c.gamma, trials, crate::rng::derive_seed(seed, i as u64))
        })
        .collect::<Result<Vec<_>>>()?;
    let parts: Vec<LemmaCheckReport> = outcomes.iter().map(|o| o.report.clone()).collect();
    Ok((LemmaCheckReport::combine("lemma1", seed, &parts), outcomes))
}

/// Envelope `max_θ g(p, θ) = −p·l·γ − n·l/2 − (n·l/2)·ln(−2pα/n)` of the
/// Chernoff exponent on `p ≤ −n/(2α)` (natural log).
pub fn lemma1_envelope(p: f64, n: f64, l: f64, alpha: f64, gamma: f64) -> f64 {
    -p * l * gamma - n * l / 2.0 - n * l / 2.0 * (-2.0 * p * alpha / n).ln()
}

/// `∂/∂p` of [`lemma1_envelope`]: `−l·γ − n·l/(2p)`.
pub fn lemma1_envelope_slope(p: f64, n: f64, l: f64, gamma: f64) -> f64 {
    -l * gamma - n * l / (2.0 * p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryCheck {
    pub p_star: f64,
    pub slope: f64,
    pub finite_difference_slope: f64,
    pub value: f64,
    pub closed_form: f64,
}

/// Evaluates the envelope at `p* = −n/(2γ)`, where its slope vanishes and
/// its value is `−(n·l/2)·ln(α/γ)`.
pub fn lemma1_stationary_check(n: f64, l: f64, alpha: f64, gamma: f64) -> Result<StationaryCheck> {
    if !(n > 0.0 && l > 0.0 && alpha > gamma && gamma > 0.0) {
        return Err(Error::invalid("need n, l > 0 and alpha > gamma > 0"));
    }
    let p_star = -n / (2.0 * gamma);
    let h = 1e-5 * p_star.abs();
    let fd = (lemma1_envelope(p_star + h, n, l, alpha, gamma)
        - lemma1_envelope(p_star - h, n, l, alpha, gamma))
        / (2.0 * h);
    Ok(StationaryCheck {
        p_star,
        slope: lemma1_envelope_slope(p_star, n, l, gamma),
        finite_difference_slope: fd,
        value: lemma1_envelope(p_star, n, l, alpha, gamma),
        closed_form: -(n * l / 2.0) * (alpha / gamma).ln(),
    })
}

// ---------------------------------------------------------------------------
// Gram determinant bounds
// ---------------------------------------------------------------------------

fn all_finite(m: &DMatrix<f64>) -> bool {
    m.iter().all(|v| v.is_finite())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma3Outcome {
    pub lhs: f64,
    pub rhs: f64,
    pub sigma_b_sq: f64,
    pub passed: bool,
    /// `lhs − rhs·(1 − 1e−9)`, relative to `|rhs|` when nonzero.
    pub margin: f64,
}

/// `det((BD)ᵀBD) ≥ (σ_b²)^r · det(DᵀD)` with `σ_b²` the smallest
/// eigenvalue of `BᵀB`, for `B: p×q`, `D: q×r`, `p ≥ q ≥ r`.
pub fn check_lemma3(b: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<Lemma3Outcome> {
    let (p, q) = b.shape();
    let r = d.ncols();
    if d.nrows() != q {
        return Err(Error::invalid(format!("B is {p}x{q} but D has {} rows", d.nrows())));
    }
    if !(p >= q && q >= r && r >= 1) {
        return Err(Error::invalid(format!("need p >= q >= r >= 1, got ({p}, {q}, {r})")));
    }
    if !all_finite(b) || !all_finite(d) {
        return Err(Error::invalid("non-finite entry"));
    }
    let sigma_b_sq = symmetric_eigenvalues(&gram(b))[0];
    let bd = b * d;
    let lhs = gram(&bd).determinant();
    let rhs = sigma_b_sq.powi(r as i32) * gram(d).determinant();
    let slack = lhs - rhs * (1.0 - 1e-9);
    let margin = if rhs != 0.0 { slack / rhs.abs() } else { slack };
    Ok(Lemma3Outcome {
        lhs,
        rhs,
        sigma_b_sq,
        passed: slack >= 0.0,
        margin,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HadamardOutcome {
    pub det: f64,
    pub diagonal_product: f64,
    pub passed: bool,
    pub margin: f64,
}

/// `det(M) ≤ Π Mᵢᵢ` for symmetric positive semidefinite `M`.
pub fn check_hadamard(m: &DMatrix<f64>) -> Result<HadamardOutcome> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::invalid("M must be square and nonempty"));
    }
    if !all_finite(m) {
        return Err(Error::invalid("non-finite entry"));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-12 {
        return Err(Error::invalid(format!("M is not symmetric (max deviation {asym:e})")));
    }
    let scale = m.amax().max(1.0);
    if symmetric_eigenvalues(m)[0] < -1e-10 * scale {
        return Err(Error::invalid("M is not positive semidefinite"));
    }
    let det = m.determinant();
    let diagonal_product: f64 = m.diagonal().iter().product();
    let bound = diagonal_product * (1.0 + 1e-9);
    let margin = if diagonal_product != 0.0 {
        (bound - det) / diagonal_product.abs()
    } else {
        bound - det
    };
    Ok(HadamardOutcome {
        det,
        diagonal_product,
        passed: det <= bound,
        margin,
    })
}

/// Shapes `(p, q, r)` cycled through by [`lemma3_sweep`].
pub const LEMMA3_SHAPES: [(usize, usize, usize); 2] = [(6, 4, 2), (8, 5, 3)];

/// Random Gaussian `B`, `D` over [`LEMMA3_SHAPES`].
pub fn lemma3_sweep(trials: u64, seed: u64) -> Result<LemmaCheckReport> {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (p, q, r) = LEMMA3_SHAPES[(t % LEMMA3_SHAPES.len() as u64) as usize];
            let mut rng = SimRng::derived(seed, t);
            let b = draw_gaussian(p, q, 1.0, &mut rng);
            let d = draw_gaussian(q, r, 1.0, &mut rng);
            check_lemma3(&b, &d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize("lemma3", seed, outcomes.iter().map(|o| (o.passed, o.margin))))
}

/// Gram matrices `VᵀV` of random `(l+2)×l` Gaussians, `l` cycling 2..=5.
pub fn hadamard_sweep(trials: u64, seed: u64) -> Result<LemmaCheckReport> {
    let outcomes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let l = 2 + (t % 4) as usize;
            let mut rng = SimRng::derived(seed, t);
            let v = draw_gaussian(l + 2, l, 1.0, &mut rng);
            let mut g = gram(&v);
            // exact symmetry
            g = (&g + g.transpose()) * 0.5;
            check_hadamard(&g)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize("hadamard", seed, outcomes.iter().map(|o| (o.passed, o.margin))))
}

fn summarize(name: &str, seed: u64, items: impl Iterator<Item = (bool, f64)>) -> LemmaCheckReport {
    let mut trials = 0;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for (passed, margin) in items {
        trials += 1;
        violations += u64::from(!passed);
        worst = worst.min(margin);
    }
    LemmaCheckReport {
        name: name.into(),
        seed,
        trials,
        violations,
        worst_margin: worst,
    }
}

// ---------------------------------------------------------------------------
// Covering nets
// ---------------------------------------------------------------------------

/// Net sizes over an increasing radius schedule at fixed `ζ`; each strict
/// decrease is a violation. Margin is the smallest size step.
pub fn check_net_sizes(
    k: usize,
    zeta: f64,
    radii: &[f64],
    cap: usize,
) -> Result<(LemmaCheckReport, Vec<usize>)> {
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("radii must be strictly increasing"));
    }
    let sizes = radii
        .iter()
        .map(|&r| build_net(k, r, zeta, cap).map(|q| q.len()))
        .collect::<Result<Vec<_>>>()?;
    let steps: Vec<f64> = sizes.windows(2).map(|w| w[1] as f64 - w[0] as f64).collect();
    let report = LemmaCheckReport {
        name: "lemma2_sizes".into(),
        seed: 0,
        trials: sizes.len() as u64,
        violations: steps.iter().filter(|s| **s < 0.0).count() as u64,
        worst_margin: steps.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ok((report, sizes))
}

/// Fraction of trials in which, for every column `i`, the net
/// `Q(ρ̂ᵢ, ζ)` holds a point within `ζ` of `wᵢ`, for each `n` in `ns`.
///
/// The fraction should grow with `n`. A drop of more than three standard
/// errors of the difference between consecutive points is a violation.
pub fn check_net_convergence(
    w: &SignalValueMatrix,
    sigma_a_sq: f64,
    sigma_z_sq: f64,
    zeta: f64,
    ns: &[usize],
    trials: u64,
    seed: u64,
) -> Result<(LemmaCheckReport, Vec<f64>)> {
    if trials == 0 || ns.is_empty() {
        return Err(Error::invalid("need at least one trial and one n"));
    }
    let k = w.k();
    let columns: Vec<Vec<f64>> = (0..w.l())
        .map(|j| w.entries().column(j).iter().copied().collect())
        .collect();
    let mut freqs = Vec::with_capacity(ns.len());
    for (idx, &n) in ns.iter().enumerate() {
        let cfg = ProblemConfig::new(k, n, sigma_a_sq, sigma_z_sq, seed);
        let point_seed = crate::rng::derive_seed(seed, idx as u64);
        let hits = (0..trials)
            .into_par_iter()
            .map(|t| -> Result<u64> {
                let mut rng = SimRng::derived(point_seed, t);
                let inst = generate_instance(w, &cfg, &mut rng)?;
                let rho = estimate_amplitudes(inst.y(), &cfg).rho_hat;
                for (col, r) in columns.iter().zip(&rho) {
                    let net = build_net(k, *r, zeta, 10_000_000)?;
                    if net.min_distance(col) >= zeta {
                        return Ok(0);
                    }
                }
                Ok(1)
            })
            .collect::<Result<Vec<u64>>>()?
            .into_iter()
            .sum::<u64>();
        freqs.push(hits as f64 / trials as f64);
    }
    let tn = trials as f64;
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    for pair in freqs.windows(2) {
        let se = (pair[0] * (1.0 - pair[0]) / tn + pair[1] * (1.0 - pair[1]) / tn).sqrt();
        let margin = pair[1] - pair[0] + 3.0 * se;
        violations += u64::from(margin < 0.0);
        worst = worst.min(margin);
    }
    let report = LemmaCheckReport {
        name: "lemma2_convergence".into(),
        seed,
        trials: trials * ns.len() as u64,
        violations,
        worst_margin: worst,
    };
    Ok((report, freqs))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NetConsistency {
    pub report: LemmaCheckReport,
    pub radii: Vec<f64>,
    pub sizes: Vec<usize>,
    pub ns: Vec<usize>,
    pub frequencies: Vec<f64>,
}

/// Default net consistency sweep: sizes for `k = 2, ζ = 0.5,
/// r ∈ {0.5, 1, 2, 4}` and convergence for `W = [[2, 2], [−2, 2]]`,
/// `σa²/σz² = 10`, `ζ = 0.5`, `n ∈ {10, 40, 160, 640}`.
pub fn check_net_consistency(trials: u64, seed: u64) -> Result<NetConsistency> {
    let radii = vec![0.5, 1.0, 2.0, 4.0];
    let ns = vec![10, 40, 160, 640];
    let (size_report, sizes) = check_net_sizes(2, 0.5, &radii, 10_000_000)?;
    let w = SignalValueMatrix::from_rows(
        &[vec![2.0, 2.0], vec![-2.0, 2.0]],
        crate::model::WMode::Strict,
    )?;
    let (conv, frequencies) = check_net_convergence(&w, 1.0, 0.1, 0.5, &ns, trials, seed)?;
    Ok(NetConsistency {
        report: LemmaCheckReport::combine("lemma2", seed, &[size_report, conv]),
        radii,
        sizes,
        ns,
        frequencies,
    })
}
