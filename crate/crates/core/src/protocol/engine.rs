use num_complex::Complex64;

use crate::theta::ThetaExpr;

use super::types::{
    expected_value, Basis, HyperVector, Lane, MaskSet, MaskUnit, NodeId, ProtocolKind,
    SecretInput, Transcript, UserMasks,
};
use super::ProtocolError;

/// `+1` for `y ≥ 0`, `−1` otherwise; applied to the whole node bracket.
pub fn bracket_sign(y: f64) -> f64 {
    if y < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// `|y|^{1/n}·a_j`, the code scaling every user applies.
pub fn scaled_code(y: f64, n: usize, code: f64) -> f64 {
    y.abs().powf(1.0 / n as f64) * code
}

pub(crate) fn validate(
    inputs: &[SecretInput],
    masks: &MaskSet,
    basis: &Basis,
    share_count: usize,
) -> Result<(), ProtocolError> {
    let n = inputs.len();
    if n < 2 {
        return Err(ProtocolError::NOutOfRange(n));
    }
    if basis.n != n {
        return Err(ProtocolError::MaskShape(format!(
            "basis is normalized for {} users, got {n}",
            basis.n
        )));
    }
    if masks.users.len() != n {
        return Err(ProtocolError::MaskShape(format!(
            "{} mask records for {n} users",
            masks.users.len()
        )));
    }
    for (j, u) in masks.users.iter().enumerate() {
        if u.shares.len() != share_count {
            return Err(ProtocolError::MaskShape(format!(
                "user {j} has {} shares, expected {share_count}",
                u.shares.len()
            )));
        }
        if u.stream.len() != basis.stream_len() {
            return Err(ProtocolError::MaskShape(format!(
                "user {j} has {} stream masks, expected {}",
                u.stream.len(),
                basis.stream_len()
            )));
        }
    }
    Ok(())
}

/// Zero-mode and stream entries of one user on one lane.
pub(crate) fn lane_entries(
    lane: Lane,
    input: &SecretInput,
    masks: &UserMasks,
    y: f64,
    basis: &Basis,
    unit: MaskUnit,
) -> (ThetaExpr, Vec<ThetaExpr>) {
    let c = scaled_code(y, basis.n, input.code);
    let zero = lane.entry(basis.zero_coefficient(c), masks.zero, unit);
    let stream = masks
        .stream
        .iter()
        .enumerate()
        .map(|(m, pair)| lane.entry(basis.stream_coefficient(c, m), *pair, unit))
        .collect();
    (zero, stream)
}

/// The four hyper-vectors user `j` sends to nodes 1..4.
pub fn user_packets(
    j: usize,
    input: &SecretInput,
    masks: &UserMasks,
    y: f64,
    basis: &Basis,
    unit: MaskUnit,
) -> Vec<HyperVector> {
    Lane::ALL
        .iter()
        .map(|&lane| {
            let (zero_entry, stream_entries) = lane_entries(lane, input, masks, y, basis, unit);
            HyperVector {
                from: j,
                to: NodeId::Node(lane.index() + 1),
                share: masks.shares[lane.index()],
                zero_entry,
                stream_entries,
                root_order: None,
            }
        })
        .collect()
}

/// `S ± (⅛·W₀·Z + ¼·Σₘ wₘ·Pₘ)` from precomputed products.
pub(crate) fn node_value(
    share_sum: f64,
    zero_product: &ThetaExpr,
    stream_products: &[ThetaExpr],
    y: f64,
    basis: &Basis,
) -> Result<ThetaExpr, ProtocolError> {
    let mut bracket = zero_product.scale_real(basis.zero_weight() / 8.0);
    for (w, p) in basis.stream_weights().iter().zip(stream_products) {
        bracket = bracket.add(&p.scale_real(w / 4.0))?;
    }
    Ok(ThetaExpr::real(share_sum).add(&bracket.scale_real(bracket_sign(y)))?)
}

fn product<'a, I: IntoIterator<Item = &'a ThetaExpr>>(items: I) -> Result<ThetaExpr, ProtocolError> {
    items
        .into_iter()
        .try_fold(ThetaExpr::one(), |acc, e| acc.star_mul(e))
        .map_err(ProtocolError::from)
}

/// What a four-node-scheme node computes from the packets it received.
pub fn node_output(
    packets: &[&HyperVector],
    y: f64,
    basis: &Basis,
) -> Result<ThetaExpr, ProtocolError> {
    let share_sum: f64 = packets.iter().map(|p| p.share).sum();
    let zero = product(packets.iter().map(|p| &p.zero_entry))?;
    let streams = (0..basis.stream_len())
        .map(|m| product(packets.iter().map(|p| &p.stream_entries[m])))
        .collect::<Result<Vec<_>, _>>()?;
    node_value(share_sum, &zero, &streams, y, basis)
}

/// `EvalT[N₁ + N₂ + N₃ + N₄]`.
pub fn display(outputs: &[ThetaExpr]) -> Result<Complex64, ProtocolError> {
    let total = outputs
        .iter()
        .try_fold(ThetaExpr::zero(), |acc, e| acc.add(e))?;
    Ok(total.eval_t()?)
}

pub(crate) fn four_node_round(
    kind: ProtocolKind,
    inputs: &[SecretInput],
    y: f64,
    masks: &MaskSet,
    basis: &Basis,
    unit: MaskUnit,
) -> Result<Transcript, ProtocolError> {
    validate(inputs, masks, basis, 4)?;
    let messages: Vec<HyperVector> = inputs
        .iter()
        .zip(&masks.users)
        .enumerate()
        .flat_map(|(j, (inp, m))| user_packets(j, inp, m, y, basis, unit))
        .collect();
    let node_outputs = (1..=4)
        .map(|k| {
            let packets: Vec<&HyperVector> =
                messages.iter().filter(|h| h.to == NodeId::Node(k)).collect();
            node_output(&packets, y, basis)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let shown = display(&node_outputs)?;
    let expected = expected_value(inputs, y);
    Ok(Transcript {
        kind,
        n: inputs.len(),
        y,
        iota: 0,
        mode: basis.mode,
        unit,
        inputs: inputs.to_vec(),
        masks: masks.clone(),
        messages,
        category_outputs: Vec::new(),
        node_outputs,
        display: shown,
        expected,
        residual: shown - expected,
        baseline: None,
    })
}

/// Two users, complex-unit masks.
pub fn two_party_round(
    alice: SecretInput,
    bob: SecretInput,
    y: f64,
    masks: &MaskSet,
    basis: &Basis,
) -> Result<Transcript, ProtocolError> {
    four_node_round(ProtocolKind::TwoParty, &[alice, bob], y, masks, basis, MaskUnit::Imaginary)
}

/// `n` users, `Θ^[1]` masks.
pub fn n_party_round(
    inputs: &[SecretInput],
    y: f64,
    masks: &MaskSet,
    basis: &Basis,
) -> Result<Transcript, ProtocolError> {
    four_node_round(ProtocolKind::NParty, inputs, y, masks, basis, MaskUnit::Theta)
}
