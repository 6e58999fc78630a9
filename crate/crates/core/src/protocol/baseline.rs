use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::theta::ThetaExpr;

use super::masks::{multiplicative, split_with};
use super::types::{
    HyperVector, MaskPair, MaskSet, MaskUnit, Mode, NodeId, ProtocolKind, SecretInput,
    Transcript, UserMasks,
};
use super::ProtocolError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    Sum,
    Product,
}

/// Multiplicative split: `|a|·ω₁, ω₂, …, sign(a)/Πω`.
fn split_product(code: f64, parts: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut factors: Vec<f64> = (0..parts.saturating_sub(1)).map(|_| multiplicative(rng)).collect();
    let prod: f64 = factors.iter().product();
    if let Some(first) = factors.first_mut() {
        *first *= code.abs();
        factors.push(code.signum() / prod);
    } else {
        factors.push(code);
    }
    factors
}

fn check(codes: &[f64], mode: BaselineMode, node_count: usize) -> Result<(), ProtocolError> {
    if node_count == 0 {
        return Err(ProtocolError::InvalidNodeCount(node_count));
    }
    if mode == BaselineMode::Product {
        if let Some(user) = codes.iter().position(|c| *c == 0.0) {
            return Err(ProtocolError::ZeroCodeInProductMode { user });
        }
    }
    Ok(())
}

/// Splits every code across `node_count` nodes, additively or
/// multiplicatively, and recombines the node partials at the display.
pub fn baseline_round(
    codes: &[f64],
    mode: BaselineMode,
    node_count: usize,
    seed: u64,
) -> Result<Transcript, ProtocolError> {
    check(codes, mode, node_count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let users = codes
        .iter()
        .map(|&c| UserMasks {
            shares: match mode {
                BaselineMode::Sum => split_with(c, node_count, &mut rng),
                BaselineMode::Product => split_product(c, node_count, &mut rng),
            },
            zero: MaskPair::new(0.0, 0.0),
            stream: Vec::new(),
            supplementary: None,
        })
        .collect();
    baseline_with_masks(codes, mode, &MaskSet { users })
}

/// Runs the baseline scheme with explicit shares.
pub fn baseline_with_masks(
    codes: &[f64],
    mode: BaselineMode,
    masks: &MaskSet,
) -> Result<Transcript, ProtocolError> {
    let node_count = masks.users.first().map_or(0, |u| u.shares.len());
    check(codes, mode, node_count)?;
    if masks.users.len() != codes.len()
        || masks.users.iter().any(|u| u.shares.len() != node_count)
    {
        return Err(ProtocolError::MaskShape("one share per user and node required".into()));
    }
    let messages: Vec<HyperVector> = masks
        .users
        .iter()
        .enumerate()
        .flat_map(|(j, u)| {
            u.shares.iter().enumerate().map(move |(k, s)| HyperVector {
                from: j,
                to: NodeId::Node(k + 1),
                share: *s,
                zero_entry: ThetaExpr::zero(),
                stream_entries: Vec::new(),
                root_order: None,
            })
        })
        .collect();
    let partial = |k: usize| {
        let shares = messages.iter().filter(|h| h.to == NodeId::Node(k)).map(|h| h.share);
        match mode {
            BaselineMode::Sum => shares.sum::<f64>(),
            BaselineMode::Product => shares.product::<f64>(),
        }
    };
    let partials: Vec<f64> = (1..=node_count).map(partial).collect();
    let (shown, expected) = match mode {
        BaselineMode::Sum => (partials.iter().sum::<f64>(), codes.iter().sum::<f64>()),
        BaselineMode::Product => (partials.iter().product::<f64>(), codes.iter().product::<f64>()),
    };
    Ok(Transcript {
        kind: ProtocolKind::Baseline,
        n: codes.len(),
        y: 0.0,
        iota: 0,
        mode: Mode::Rank1,
        unit: MaskUnit::Imaginary,
        inputs: codes.iter().map(|c| SecretInput::new(*c, 1.0)).collect(),
        masks: masks.clone(),
        messages,
        category_outputs: Vec::new(),
        node_outputs: partials.iter().map(|p| ThetaExpr::real(*p)).collect(),
        display: Complex64::new(shown, 0.0),
        expected,
        residual: Complex64::new(shown - expected, 0.0),
        baseline: Some(mode),
    })
}
