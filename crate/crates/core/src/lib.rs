//! Support recovery of row-sparse signals from multiple measurement vectors.
//!
//! The crate covers the whole pipeline of a recovery experiment:
//!
//! - [`model`]: signal value matrices, problem configuration and seeded
//!   instance generation for `Y = A·X + Z`;
//! - [`threshold`]: the recovery threshold `c(W)` and its closed-form
//!   special cases, the SMV/MMV bounds table and the SIMO MAC region check;
//! - [`decoders`]: exhaustive least-squares and quantization-net support
//!   decoders;
//! - [`verify`]: numerical checks of the supporting inequalities;
//! - [`experiments`]: seeded Monte Carlo sweeps of the error rate across
//!   `(m, n)` schedules.

pub mod decoders;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod model;
pub mod rng;
pub mod subset;
pub mod threshold;
pub mod verify;

pub use decoders::{
    build_net, decode_ml, decode_net, estimate_amplitudes, AmplitudeEstimate, DecodeResult,
    DecodeStatus, DecoderLimits, EpsilonNet,
};
pub use error::{Error, Result, WViolation};
pub use experiments::{compare_smv_mmv, run_phase, DecoderKind, PhaseCurve, PhasePoint, Schedule};
pub use model::{
    generate_instance, sample_support, validate_w, ProblemConfig, SignalValueMatrix,
    SparseInstance, WMode,
};
pub use rng::SimRng;
pub use subset::Subset;
pub use threshold::{
    bounds_table, c_of_w, corollary3_threshold, identical_columns_bound, mac_region_check,
    sufficient_n, BoundsRow, RateTuple, ThresholdReport,
};
pub use verify::LemmaCheckReport;
