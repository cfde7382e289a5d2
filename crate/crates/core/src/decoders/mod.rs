//! Support recovery maps `Y ↦ Ŝ` for a known sparsity level `k`.
//!
//! Both decoders scan all k-subsets of `[m]`. The scan is split into fixed
//! chunks of consecutive lexicographic ranks that run on the rayon pool and
//! are merged in rank order, so the result never depends on thread count.

mod ml;
mod net;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use ml::{decode_ml, ml_residuals};
pub use net::{build_net, decode_net, estimate_amplitudes, AmplitudeEstimate, EpsilonNet};

use crate::subset::{binomial, next_combination, unrank_combination};

/// Caps on decoder work.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecoderLimits {
    /// Largest number of points a single ε-net may hold.
    pub net_point_cap: usize,
    /// Largest number of candidate tests one decode may run.
    pub test_budget: u128,
}

impl Default for DecoderLimits {
    fn default() -> Self {
        Self {
            net_point_cap: 10_000_000,
            test_budget: 100_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecodeStatus {
    /// Exactly one candidate passed (always the case for the LS decoder).
    UniqueAccept,
    /// No candidate passed; the estimate is the fallback support.
    NoneFoundArbitrary,
    /// Several candidates passed; the estimate is the fallback support.
    MultipleFoundArbitrary,
}

impl DecodeStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            DecodeStatus::UniqueAccept => "unique-accept",
            DecodeStatus::NoneFoundArbitrary => "none-found-arbitrary",
            DecodeStatus::MultipleFoundArbitrary => "multiple-found-arbitrary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    /// Sorted, 0-based, always `k` entries.
    pub support: Vec<usize>,
    pub status: DecodeStatus,
    /// Mean squared fit residual `‖Y − A_Ŝ·Ĝ‖_F² / (n·l)` of the estimate.
    pub residual: f64,
}

impl DecodeResult {
    pub fn support_one_based(&self) -> Vec<usize> {
        self.support.iter().map(|s| s + 1).collect()
    }
}

/// The support reported when a decoder has to pick arbitrarily: `{1, …, k}`.
pub fn fallback_support(k: usize) -> Vec<usize> {
    (0..k).collect()
}

const CHUNK: u128 = 512;

/// Folds `step` over every k-combination of `[m]` in lexicographic order,
/// chunked for parallelism. `merge` combines chunk results left to right.
pub(crate) fn fold_supports<Acc, I, S, M>(m: usize, k: usize, init: I, step: S, merge: M) -> Acc
where
    Acc: Send,
    I: Fn() -> Acc + Sync,
    S: Fn(&mut Acc, u128, &[usize]) + Sync,
    M: Fn(Acc, Acc) -> Acc,
{
    let total = binomial(m, k);
    let chunks = total.div_ceil(CHUNK);
    let partials: Vec<Acc> = (0..chunks as u64)
        .into_par_iter()
        .map(|c| {
            let start = c as u128 * CHUNK;
            let end = (start + CHUNK).min(total);
            let mut acc = init();
            let mut combo = unrank_combination(m, k, start);
            let mut rank = start;
            loop {
                step(&mut acc, rank, &combo);
                rank += 1;
                if rank >= end || !next_combination(&mut combo, m) {
                    break;
                }
            }
            acc
        })
        .collect();
    partials.into_iter().fold(init(), merge)
}
