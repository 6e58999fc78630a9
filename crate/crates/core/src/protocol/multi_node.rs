use crate::theta::ThetaExpr;

use super::engine::{display, lane_entries, n_party_round, node_value, validate};
use super::masks::check_telescoping;
use super::types::{
    expected_value, Basis, CategoryOutput, HyperVector, Lane, MaskSet, MaskUnit, NodeId,
    ProtocolKind, SecretInput, Transcript, UserMasks,
};
use super::ProtocolError;

/// Node counts of the category scheme for a given `ι`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub iota: usize,
    /// Nodes per category, `κ = 3ι`.
    pub kappa: usize,
    /// `f = 1 + 4ι`.
    pub f: usize,
    /// Total nodes `N = 4(1 + 3ι)`.
    pub nodes: usize,
    /// Shares per user, `4κ = 12ι`.
    pub shares: usize,
}

pub fn layout(iota: usize) -> Layout {
    let kappa = 3 * iota;
    Layout {
        iota,
        kappa,
        f: 1 + 4 * iota,
        nodes: 4 * (1 + kappa),
        shares: if iota == 0 { 4 } else { 4 * kappa },
    }
}

fn check_supplementary(j: usize, masks: &UserMasks, kappa: usize) -> Result<(), ProtocolError> {
    let sup = masks.supplementary.as_ref().ok_or_else(|| {
        ProtocolError::MaskShape(format!("user {j} has no supplementary masks"))
    })?;
    let shaped = |chains: &Vec<Vec<f64>>| {
        chains.len() == 4 && chains.iter().all(|c| c.len() == kappa && c.iter().all(|v| *v > 0.0))
    };
    if !shaped(&sup.zero) || !shaped(&sup.stream) {
        return Err(ProtocolError::MaskShape(format!(
            "user {j} supplementary masks must be 4 positive chains of length {kappa}"
        )));
    }
    check_telescoping(sup)
}

/// The `4κ` packets user `j` sends to the category nodes.
pub fn category_packets(
    j: usize,
    input: &SecretInput,
    masks: &UserMasks,
    y: f64,
    basis: &Basis,
    kappa: usize,
) -> Vec<HyperVector> {
    let sup = masks
        .supplementary
        .as_ref()
        .expect("validated supplementary masks");
    let mut out = Vec::with_capacity(4 * kappa);
    for lane in Lane::ALL {
        let c = lane.index();
        let (zero, stream) = lane_entries(lane, input, masks, y, basis, MaskUnit::Theta);
        for s in 0..kappa {
            out.push(HyperVector {
                from: j,
                to: NodeId::Category { category: c, slot: s },
                share: masks.shares[c * kappa + s],
                zero_entry: zero.scale_real(sup.zero[c][s]),
                stream_entries: stream.iter().map(|e| e.scale_real(sup.stream[c][s])).collect(),
                root_order: Some(kappa as u32),
            });
        }
    }
    out
}

fn root_of_product<'a, I: IntoIterator<Item = &'a ThetaExpr>>(
    items: I,
    kappa: usize,
) -> Result<ThetaExpr, ProtocolError> {
    let prod = items
        .into_iter()
        .try_fold(ThetaExpr::one(), |acc, e| acc.star_mul(e))?;
    Ok(ThetaExpr::root_of(&prod, kappa as u32)?)
}

/// A category node: share sum plus the `κ`-th roots of the masked products.
pub fn slot_output(
    node: NodeId,
    packets: &[&HyperVector],
    kappa: usize,
    stream_len: usize,
) -> Result<CategoryOutput, ProtocolError> {
    let NodeId::Category { category, .. } = node else {
        return Err(ProtocolError::MaskShape(format!("{node} is not a category node")));
    };
    Ok(CategoryOutput {
        from: node,
        to: NodeId::SecondLevel(category + 1),
        share_sum: packets.iter().map(|p| p.share).sum(),
        zero_root: root_of_product(packets.iter().map(|p| &p.zero_entry), kappa)?,
        stream_roots: (0..stream_len)
            .map(|m| root_of_product(packets.iter().map(|p| &p.stream_entries[m]), kappa))
            .collect::<Result<_, _>>()?,
    })
}

/// A second-level node: multiplies its category's roots, which collapse.
pub fn second_level_output(
    outputs: &[&CategoryOutput],
    y: f64,
    basis: &Basis,
) -> Result<ThetaExpr, ProtocolError> {
    let share_sum: f64 = outputs.iter().map(|o| o.share_sum).sum();
    let collapse = |pick: &dyn Fn(&CategoryOutput) -> &ThetaExpr| {
        outputs
            .iter()
            .try_fold(ThetaExpr::one(), |acc, o| acc.star_mul(pick(o)))
    };
    let zero = collapse(&|o| &o.zero_root)?;
    let streams = (0..basis.stream_len())
        .map(|m| collapse(&|o| &o.stream_roots[m]))
        .collect::<Result<Vec<_>, _>>()?;
    node_value(share_sum, &zero, &streams, y, basis)
}

/// The `4(1+3ι)`-node scheme. `ι = 0` is the four-node scheme.
pub fn multi_node_round(
    inputs: &[SecretInput],
    y: f64,
    iota: usize,
    masks: &MaskSet,
    basis: &Basis,
) -> Result<Transcript, ProtocolError> {
    if iota == 0 {
        return n_party_round(inputs, y, masks, basis);
    }
    let lay = layout(iota);
    let kappa = lay.kappa;
    validate(inputs, masks, basis, lay.shares)?;
    for (j, m) in masks.users.iter().enumerate() {
        check_supplementary(j, m, kappa)?;
    }
    let messages: Vec<HyperVector> = inputs
        .iter()
        .zip(&masks.users)
        .enumerate()
        .flat_map(|(j, (inp, m))| category_packets(j, inp, m, y, basis, kappa))
        .collect();
    let mut category_outputs = Vec::with_capacity(4 * kappa);
    for c in 0..4 {
        for s in 0..kappa {
            let node = NodeId::Category { category: c, slot: s };
            let packets: Vec<&HyperVector> = messages.iter().filter(|h| h.to == node).collect();
            category_outputs.push(slot_output(node, &packets, kappa, basis.stream_len())?);
        }
    }
    let node_outputs = (1..=4)
        .map(|k| {
            let outs: Vec<&CategoryOutput> = category_outputs
                .iter()
                .filter(|o| o.to == NodeId::SecondLevel(k))
                .collect();
            second_level_output(&outs, y, basis)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let shown = display(&node_outputs)?;
    let expected = expected_value(inputs, y);
    Ok(Transcript {
        kind: ProtocolKind::MultiNode,
        n: inputs.len(),
        y,
        iota,
        mode: basis.mode,
        unit: MaskUnit::Theta,
        inputs: inputs.to_vec(),
        masks: masks.clone(),
        messages,
        category_outputs,
        node_outputs,
        display: shown,
        expected,
        residual: shown - expected,
        baseline: None,
    })
}

/// Re-expresses four-node masks for the category scheme: the base masks are
/// kept and the `4` shares are spread over `4κ` slots.
pub fn lift_masks(masks: &MaskSet, iota: usize, seed: u64) -> MaskSet {
    use rand::SeedableRng;
    let kappa = 3 * iota;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    MaskSet {
        users: masks
            .users
            .iter()
            .map(|u| {
                let total: f64 = u.shares.iter().sum();
                UserMasks {
                    shares: super::masks::split_with(total, 4 * kappa, &mut rng),
                    zero: u.zero,
                    stream: u.stream.clone(),
                    supplementary: Some(super::masks::sample_supplementary(kappa, &mut rng)),
                }
            })
            .collect(),
    }
}
