//! Masked evaluation of `Σ x_j a_j + y Π a_j` across non-colluding nodes.
//!
//! Users split the linear part into additive shares and hide the product
//! part inside Θ-valued (or complex) hyper-vectors built from a normalized
//! Fourier basis. Nodes only multiply what they receive; the display sums the
//! node outputs and evaluates.

pub mod baseline;
pub mod engine;
pub mod masks;
pub mod multi_node;
pub mod privacy;
pub mod residual;
pub mod types;

use num_complex::Complex64;
use thiserror::Error;

use crate::fourier::FourierError;
use crate::theta::ThetaError;

pub use baseline::{baseline_round, baseline_with_masks, BaselineMode};
pub use engine::{
    bracket_sign, display, n_party_round, node_output, scaled_code, two_party_round,
    user_packets,
};
pub use masks::{
    chain_deviation, check_telescoping, sample_masks, sample_supplementary, split_secret,
    telescoping_chain, unit_supplementary, TELESCOPE_TOLERANCE,
};
pub use multi_node::{layout, lift_masks, multi_node_round, Layout};
pub use privacy::{check_privacy, rerun, simulate_views, tolerated, PrivacyVerdict, Simulation};
pub use residual::{
    check_transcript, residual_diagnostic, residual_oracle, ResidualReport, RESIDUAL_TOLERANCE,
};
pub use types::{
    expected_value, Basis, CategoryOutput, HyperVector, Lane, MaskPair, MaskSet, MaskUnit, Mode,
    NodeId, ProtocolKind, SecretInput, Supplementary, Transcript, UserMasks, View,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("user {user} has code 0, which product mode cannot split")]
    ZeroCodeInProductMode { user: usize },
    #[error("basis is not normalized: α₀ⁿ/2 + Mₙ − 1 = {deviation:e}")]
    UnnormalizedBasis { deviation: f64 },
    #[error("user count {0} is out of range")]
    NOutOfRange(usize),
    #[error("supplementary chain does not multiply to 1 (deviation {deviation:e})")]
    TelescopeViolation { deviation: f64 },
    #[error("protocol residual {protocol} disagrees with the expansion {oracle}")]
    OracleMismatch { protocol: Complex64, oracle: Complex64 },
    #[error("corrupted set exceeds the threshold: {0}")]
    SubsetTooLarge(String),
    #[error("no simulation found: {0}")]
    SimulationFailed(String),
    #[error("node {0} does not exist in this scheme")]
    UnknownNode(NodeId),
    #[error("malformed masks: {0}")]
    MaskShape(String),
    #[error("invalid node count {0}")]
    InvalidNodeCount(usize),
    #[error(transparent)]
    Theta(#[from] ThetaError),
    #[error(transparent)]
    Fourier(#[from] FourierError),
}

/// Applies `f` to the real display value of a run, for callers that map the
/// bilinear output through an outer function.
pub fn wrapped_display(t: &Transcript, f: impl Fn(f64) -> f64) -> f64 {
    f(t.display.re)
}
