//! Quantization-net decoder.
//!
//! Column norms of `W` are estimated from the energy of `Y`, each column is
//! quantized with a covering net of the ball of that radius, and a support
//! is accepted when some quantized `Ŵ` fits `Y` to within
//! `σz² + ε²σa²` mean squared error.

use nalgebra::DMatrix;

use super::{fallback_support, fold_supports, DecodeResult, DecodeStatus, DecoderLimits};
use crate::error::{Error, Result};
use crate::linalg::column_norm_sq;
use crate::model::ProblemConfig;
use crate::subset::binomial;

/// Per-column amplitude estimates `ρ̂ᵢ = sqrt(|‖Yᵢ‖²/n − σz²| / σa²)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeEstimate {
    pub rho_hat: Vec<f64>,
}

/// For `k = 1` this estimates `|w₁ᵢ|`, for `k ≥ 2` the column norm `‖wᵢ‖`,
/// since `E‖Yᵢ‖²/n = σa²‖wᵢ‖² + σz²`.
pub fn estimate_amplitudes(y: &DMatrix<f64>, cfg: &ProblemConfig) -> AmplitudeEstimate {
    let n = y.nrows() as f64;
    let rho_hat = (0..y.ncols())
        .map(|i| ((column_norm_sq(y, i) / n - cfg.sigma_z_sq).abs() / cfg.sigma_a_sq).sqrt())
        .collect();
    AmplitudeEstimate { rho_hat }
}

/// A finite covering set of the closed ball `B_k(r)`: every point of the
/// ball lies within `ζ/2` of some net point.
///
/// Built from the cubic grid of spacing `ζ/√k` through the origin (cell
/// half-diagonal `ζ/2`): grid points in `B_k(r + ζ/2)` are kept and those
/// outside `B_k(r)` are radially projected onto its surface. Projection is
/// non-expansive, so covering survives it; the kept grid set only grows
/// with `r`, so `|points|` is non-decreasing in `r`. Points are not
/// deduplicated.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonNet {
    k: usize,
    radius: f64,
    zeta: f64,
    points: Vec<f64>,
}

impl EpsilonNet {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn zeta(&self) -> f64 {
        self.zeta
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.k..(i + 1) * self.k]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.k)
    }

    /// Distance from `b` to the nearest net point.
    pub fn min_distance(&self, b: &[f64]) -> f64 {
        self.points()
            .map(|p| p.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
            .fold(f64::INFINITY, f64::min)
            .sqrt()
    }
}

/// Depth-first walk over integer grid coordinates inside the outer ball,
/// pruned by the squared norm of the coordinates fixed so far.
struct GridWalker {
    spacing: f64,
    outer_sq: f64,
    reach: i64,
    cap: usize,
    coord: Vec<i64>,
    points: Vec<f64>,
}

impl GridWalker {
    /// False once the cap is exceeded.
    fn visit(&mut self, dim: usize, partial_sq: f64) -> bool {
        if dim == self.coord.len() {
            if self.points.len() / self.coord.len() >= self.cap {
                return false;
            }
            let spacing = self.spacing;
            self.points.extend(self.coord.iter().map(|&c| c as f64 * spacing));
            return true;
        }
        for c in -self.reach..=self.reach {
            let x = c as f64 * self.spacing;
            let sq = partial_sq + x * x;
            if sq > self.outer_sq {
                continue;
            }
            self.coord[dim] = c;
            if !self.visit(dim + 1, sq) {
                return false;
            }
        }
        true
    }
}

/// Grid covering net of `B_k(r)` with covering radius `ζ/2`.
///
/// `r = 0` gives the degenerate net at the origin. Fails with
/// [`Error::NetTooLarge`] once more than `cap` points would be produced.
pub fn build_net(k: usize, r: f64, zeta: f64, cap: usize) -> Result<EpsilonNet> {
    if k == 0 {
        return Err(Error::invalid("net dimension k must be at least 1"));
    }
    if !(r.is_finite() && r >= 0.0) {
        return Err(Error::invalid(format!("net radius must be nonnegative, got {r}")));
    }
    if !(zeta.is_finite() && zeta > 0.0) {
        return Err(Error::invalid(format!("net resolution must be positive, got {zeta}")));
    }
    let spacing = zeta / (k as f64).sqrt();
    let outer = r + zeta / 2.0;
    let outer_sq = outer * outer * (1.0 + 1e-12);
    let reach = (outer / spacing).floor() as i64 + 1;

    let mut walker = GridWalker {
        spacing,
        outer_sq,
        reach,
        cap,
        coord: vec![0; k],
        points: Vec::new(),
    };
    if !walker.visit(0, 0.0) {
        return Err(Error::NetTooLarge { k, r, zeta, cap });
    }
    let mut points = walker.points;

    for p in points.chunks_exact_mut(k) {
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > r {
            let scale = if norm > 0.0 { r / norm } else { 0.0 };
            p.iter_mut().for_each(|v| *v *= scale);
        }
    }
    Ok(EpsilonNet {
        k,
        radius: r,
        zeta,
        points,
    })
}

fn check_inputs(y: &DMatrix<f64>, a: &DMatrix<f64>, k: usize, cfg: &ProblemConfig) -> Result<()> {
    if a.nrows() != y.nrows() || y.nrows() == 0 || y.ncols() == 0 {
        return Err(Error::invalid(format!(
            "A is {:?} but Y is {:?}",
            a.shape(),
            y.shape()
        )));
    }
    if k == 0 || k > a.ncols() {
        return Err(Error::invalid(format!("need 1 <= k <= m, got k = {k}, m = {}", a.ncols())));
    }
    for (name, v) in [
        ("sigma_a_sq", cfg.sigma_a_sq),
        ("sigma_z_sq", cfg.sigma_z_sq),
        ("epsilon", cfg.epsilon),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(())
}

struct NetAcc {
    accepted: u64,
    first: Option<(u128, Vec<usize>, f64)>,
    rank0_residual: Option<f64>,
    scratch: Scratch,
}

impl NetAcc {
    fn new(k: usize, l: usize) -> Self {
        Self {
            accepted: 0,
            first: None,
            rank0_residual: None,
            scratch: Scratch::new(k, l),
        }
    }

    fn record(&mut self, rank: u128, support: &[usize], residual: f64, accept: bool) {
        if rank == 0 {
            self.rank0_residual = Some(residual);
        }
        if accept {
            self.accepted += 1;
            if self.first.as_ref().is_none_or(|(r, _, _)| rank < *r) {
                self.first = Some((rank, support.to_vec(), residual));
            }
        }
    }

    fn merge(mut self, other: NetAcc) -> NetAcc {
        self.accepted += other.accepted;
        if other.rank0_residual.is_some() {
            self.rank0_residual = other.rank0_residual;
        }
        if let Some((rank, s, res)) = other.first {
            if self.first.as_ref().is_none_or(|(r, _, _)| rank < *r) {
                self.first = Some((rank, s, res));
            }
        }
        self
    }
}

/// Per-support Gram data, reused across candidates.
struct Scratch {
    gram: Vec<f64>,
    cross: Vec<f64>,
}

impl Scratch {
    fn new(k: usize, l: usize) -> Self {
        Self {
            gram: vec![0.0; k * k],
            cross: vec![0.0; k * l],
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest `‖Y − A_S·Ŵ‖_F²` over `Ŵ` with column `i` drawn from `nets[i]`.
///
/// The objective separates over columns, so the joint minimum is the sum
/// of per-column minima of `‖Yᵢ‖² − 2·ŵᵀA_SᵀYᵢ + ŵᵀA_SᵀA_Sŵ`.
fn net_fit(
    a: &[f64],
    y: &[f64],
    y_norm_sq: &[f64],
    n: usize,
    support: &[usize],
    nets: &[EpsilonNet],
    scratch: &mut Scratch,
) -> f64 {
    let k = support.len();
    for (p, &sp) in support.iter().enumerate() {
        let ap = &a[sp * n..(sp + 1) * n];
        for (q, &sq) in support.iter().enumerate().skip(p) {
            let g = dot(ap, &a[sq * n..(sq + 1) * n]);
            scratch.gram[p * k + q] = g;
            scratch.gram[q * k + p] = g;
        }
        for (i, yi) in y.chunks_exact(n).enumerate() {
            scratch.cross[i * k + p] = dot(ap, yi);
        }
    }
    let mut total = 0.0;
    for (i, net) in nets.iter().enumerate() {
        let cross = &scratch.cross[i * k..(i + 1) * k];
        let best = net
            .points()
            .map(|w| {
                let mut quad = 0.0;
                for p in 0..k {
                    let row = &scratch.gram[p * k..(p + 1) * k];
                    quad += w[p] * dot(row, w);
                }
                quad - 2.0 * dot(w, cross)
            })
            .fold(f64::INFINITY, f64::min);
        total += (y_norm_sq[i] + best).max(0.0);
    }
    total
}

/// Smallest `‖Y − a_s·[±ρ̂₁, …, ±ρ̂_l]‖_F²` over all `2^l` sign patterns,
/// plus whether any pattern meets `limit`.
fn sign_pattern_fit(a_col: &[f64], y: &[f64], n: usize, rho: &[f64], limit: f64) -> (f64, bool) {
    let l = rho.len();
    // per-column residual with the + and − sign
    let terms: Vec<[f64; 2]> = y
        .chunks_exact(n)
        .zip(rho)
        .map(|(yi, &r)| {
            let mut plus = 0.0;
            let mut minus = 0.0;
            for (yv, av) in yi.iter().zip(a_col) {
                let d = yv - av * r;
                let e = yv + av * r;
                plus += d * d;
                minus += e * e;
            }
            [plus, minus]
        })
        .collect();
    let mut best = f64::INFINITY;
    let mut any = false;
    for pattern in 0u64..(1u64 << l) {
        let total: f64 = terms
            .iter()
            .enumerate()
            .map(|(i, t)| t[((pattern >> i) & 1) as usize])
            .sum();
        any |= total <= limit;
        best = best.min(total);
    }
    (best, any)
}

/// Threshold decoder built on amplitude estimates and covering nets.
///
/// A support is accepted when
/// `(1/(n·l))·‖Y − A_S·Ŵ‖_F² ≤ σz² + ε²σa²` for some admissible `Ŵ`:
///
/// - `k = 1`: `Ŵ = [±ρ̂₁, …, ±ρ̂_l]`, all `2^l` sign patterns;
/// - `k ≥ 2`: column `i` of `Ŵ` ranges over the net `Q(ρ̂ᵢ, ε)` in `R^k`.
///
/// A unique accepted support is returned as is. With none or several, the
/// estimate falls back to `{1, …, k}` and the status says which case hit.
/// The reported residual is the best mean squared fit of the returned
/// support.
pub fn decode_net(
    y: &DMatrix<f64>,
    a: &DMatrix<f64>,
    k: usize,
    cfg: &ProblemConfig,
    limits: &DecoderLimits,
) -> Result<DecodeResult> {
    check_inputs(y, a, k, cfg)?;
    let (n, m) = a.shape();
    let l = y.ncols();
    let nl = (n * l) as f64;
    let limit = nl * (cfg.sigma_z_sq + cfg.epsilon * cfg.epsilon * cfg.sigma_a_sq);
    let rho = estimate_amplitudes(y, cfg).rho_hat;
    let supports = binomial(m, k);
    let (a_s, y_s) = (a.as_slice(), y.as_slice());

    let acc = if k == 1 {
        if l >= 64 {
            return Err(Error::invalid(format!("l = {l} sign patterns cannot be enumerated")));
        }
        let needed = (m as u128).saturating_mul(1u128 << l);
        if needed > limits.test_budget {
            return Err(Error::BudgetExceeded {
                needed,
                budget: limits.test_budget,
            });
        }
        fold_supports(
            m,
            1,
            || NetAcc::new(1, l),
            |acc: &mut NetAcc, rank, s| {
                let col = &a_s[s[0] * n..(s[0] + 1) * n];
                let (res, ok) = sign_pattern_fit(col, y_s, n, &rho, limit);
                acc.record(rank, s, res, ok);
            },
            NetAcc::merge,
        )
    } else {
        let nets = rho
            .iter()
            .map(|&r| build_net(k, r, cfg.epsilon, limits.net_point_cap))
            .collect::<Result<Vec<_>>>()?;
        let per_support: u128 = nets.iter().map(|q| q.len() as u128).sum();
        let needed = supports.saturating_mul(per_support);
        if needed > limits.test_budget {
            return Err(Error::BudgetExceeded {
                needed,
                budget: limits.test_budget,
            });
        }
        let y_norm_sq: Vec<f64> = (0..l).map(|i| column_norm_sq(y, i)).collect();
        fold_supports(
            m,
            k,
            || NetAcc::new(k, l),
            |acc: &mut NetAcc, rank, s| {
                let res = net_fit(a_s, y_s, &y_norm_sq, n, s, &nets, &mut acc.scratch);
                acc.record(rank, s, res, res <= limit);
            },
            NetAcc::merge,
        )
    };

    let fallback = || {
        let res = acc.rank0_residual.expect("rank 0 is always visited");
        (fallback_support(k), res / nl)
    };
    let (support, residual, status) = match (acc.accepted, &acc.first) {
        (1, Some((_, s, res))) => (s.clone(), res / nl, DecodeStatus::UniqueAccept),
        (0, _) => {
            let (s, r) = fallback();
            (s, r, DecodeStatus::NoneFoundArbitrary)
        }
        _ => {
            let (s, r) = fallback();
            (s, r, DecodeStatus::MultipleFoundArbitrary)
        }
    };
    Ok(DecodeResult {
        support,
        status,
        residual,
    })
}
