//! Constructive simulatability of corrupted views.
//!
//! Given a run and a set of corrupted nodes, we look for shares and masks
//! under which different secrets produce exactly the views those nodes saw.
//! Each lane of a user is classified by what the adversary observes:
//!
//! * fixed: the lane values are seen outright (a four-node node, a complete
//!   category, or the lane's second-level node);
//! * scalable: some category slots are seen, each through an unknown positive
//!   supplementary mask, so the values may change by a common factor `t > 0`;
//! * free: nothing about the lane is seen.
//!
//! The mask pairs and scale factors solve a small linear system per user
//! (least squares through an SVD), and the result is confirmed by re-running
//! the protocol and comparing views.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::baseline::{baseline_with_masks, BaselineMode};
use super::engine::{n_party_round, scaled_code, two_party_round};
use super::multi_node::{layout, multi_node_round};
use super::types::{
    Basis, Lane, MaskPair, MaskSet, NodeId, ProtocolKind, SecretInput, Transcript, UserMasks,
};
use super::ProtocolError;

/// Views must agree to this relative tolerance.
pub const VIEW_TOLERANCE: f64 = 1e-12;

/// Least-squares residual above which a mask system counts as inconsistent.
const SOLVE_TOLERANCE: f64 = 1e-9;

/// Column weight of the scale unknowns; keeps `t` near 1 when masks suffice.
const SCALE_WEIGHT: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum LaneState {
    Free,
    Scalable,
    Fixed,
}

fn known_node(t: &Transcript, node: NodeId) -> bool {
    match (t.kind, node) {
        (ProtocolKind::Baseline, NodeId::Node(k)) => {
            k >= 1 && k <= t.masks.users.first().map_or(0, |u| u.shares.len())
        }
        (ProtocolKind::TwoParty | ProtocolKind::NParty, NodeId::Node(k)) => (1..=4).contains(&k),
        (ProtocolKind::MultiNode, NodeId::Category { category, slot }) => {
            category < 4 && slot < layout(t.iota).kappa
        }
        (ProtocolKind::MultiNode, NodeId::SecondLevel(k)) => (1..=4).contains(&k),
        _ => false,
    }
}

/// The tolerated-corruption predicate of each scheme. `Ok` when the set is
/// within the threshold, otherwise the reason it is not.
pub fn tolerated(t: &Transcript, corrupted: &[NodeId]) -> Result<(), ProtocolError> {
    for node in corrupted {
        if !known_node(t, *node) {
            return Err(ProtocolError::UnknownNode(*node));
        }
    }
    let set: BTreeSet<NodeId> = corrupted.iter().copied().collect();
    let too_large = |why: String| Err(ProtocolError::SubsetTooLarge(why));
    match t.kind {
        ProtocolKind::Baseline => {
            let nodes = t.masks.users.first().map_or(0, |u| u.shares.len());
            if set.len() >= nodes {
                return too_large("every node is corrupted".into());
            }
        }
        ProtocolKind::TwoParty | ProtocolKind::NParty => {
            if set.len() > 1 {
                return too_large(format!("{} of 4 nodes corrupted; at most 1 tolerated", set.len()));
            }
        }
        ProtocolKind::MultiNode => {
            let kappa = layout(t.iota).kappa;
            let honest_categories = (0..4)
                .filter(|&c| {
                    (0..kappa).any(|s| !set.contains(&NodeId::Category { category: c, slot: s }))
                })
                .count();
            if honest_categories < 3 {
                return too_large(format!(
                    "honest category nodes remain in only {honest_categories} categories"
                ));
            }
            if (1..=4).all(|k| set.contains(&NodeId::SecondLevel(k))) {
                return too_large("every second-level node is corrupted".into());
            }
        }
    }
    Ok(())
}

/// Alternative inputs and masks produced by [`simulate_views`].
#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub inputs: Vec<SecretInput>,
    pub masks: MaskSet,
}

fn lane_states(t: &Transcript, set: &BTreeSet<NodeId>) -> [LaneState; 4] {
    let mut states = [LaneState::Free; 4];
    for (c, state) in states.iter_mut().enumerate() {
        *state = match t.kind {
            ProtocolKind::MultiNode => {
                let kappa = layout(t.iota).kappa;
                let seen = (0..kappa)
                    .filter(|&s| set.contains(&NodeId::Category { category: c, slot: s }))
                    .count();
                if set.contains(&NodeId::SecondLevel(c + 1)) || seen == kappa {
                    LaneState::Fixed
                } else if seen > 0 {
                    LaneState::Scalable
                } else {
                    LaneState::Free
                }
            }
            _ => {
                if set.contains(&NodeId::Node(c + 1)) {
                    LaneState::Fixed
                } else {
                    LaneState::Free
                }
            }
        };
    }
    states
}

/// Components `(grade 0, grade 1)` of a lane entry and their Jacobian rows
/// with respect to `(p, q)`.
fn lane_components(lane: Lane, c: f64, m: MaskPair) -> ([f64; 2], [[f64; 2]; 2]) {
    let s = lane.sign();
    if lane.is_hat() {
        ([c - s * m.q, s * m.p], [[0.0, -s], [s, 0.0]])
    } else {
        ([c + s * m.p, s * m.q], [[s, 0.0], [0.0, s]])
    }
}

/// Solves for new mask pairs (one per stream index, or the zero pair) and
/// per-lane scale factors.
fn solve_pairs(
    pairs: &[MaskPair],
    old_coef: &[f64],
    new_coef: &[f64],
    states: &[LaneState; 4],
) -> Result<(Vec<MaskPair>, [f64; 4]), String> {
    let scalable: Vec<usize> = (0..4).filter(|&l| states[l] == LaneState::Scalable).collect();
    let watched: Vec<usize> = (0..4).filter(|&l| states[l] != LaneState::Free).collect();
    let mut scales = [1.0; 4];
    if watched.is_empty() {
        return Ok((pairs.to_vec(), scales));
    }
    let k = pairs.len();
    let cols = 2 * k + scalable.len();
    let rows = 2 * k * watched.len();
    let mut a = DMatrix::<f64>::zeros(rows, cols);
    let mut b = DVector::<f64>::zeros(rows);
    let mut r = 0;
    for &l in &watched {
        let lane = Lane::from_index(l).expect("lane index");
        for m in 0..k {
            let (old, _) = lane_components(lane, old_coef[m], pairs[m]);
            let (moved, jac) = lane_components(lane, new_coef[m], pairs[m]);
            for comp in 0..2 {
                a[(r, 2 * m)] = jac[comp][0];
                a[(r, 2 * m + 1)] = jac[comp][1];
                if let Some(pos) = scalable.iter().position(|&x| x == l) {
                    a[(r, 2 * k + pos)] = -old[comp] * SCALE_WEIGHT;
                }
                b[r] = old[comp] - moved[comp];
                r += 1;
            }
        }
    }
    let svd = a.clone().svd(true, true);
    let x = svd.solve(&b, 1e-12)?;
    let misfit = (&a * &x - &b).norm();
    let scale = b.norm().max(1.0);
    if misfit > SOLVE_TOLERANCE * scale {
        return Err(format!("mask equations are inconsistent (misfit {misfit:.3e})"));
    }
    let new_pairs = (0..k)
        .map(|m| MaskPair::new(pairs[m].p + x[2 * m], pairs[m].q + x[2 * m + 1]))
        .collect();
    for (pos, &l) in scalable.iter().enumerate() {
        let t = 1.0 + x[2 * k + pos] * SCALE_WEIGHT;
        if !(t > 0.0) {
            return Err(format!("lane {} needs a non-positive mask factor", l + 1));
        }
        scales[l] = t;
    }
    Ok((new_pairs, scales))
}

fn pinned_shares(t: &Transcript, set: &BTreeSet<NodeId>) -> Vec<bool> {
    match t.kind {
        ProtocolKind::MultiNode => {
            let kappa = layout(t.iota).kappa;
            (0..4 * kappa)
                .map(|i| {
                    let (c, s) = (i / kappa, i % kappa);
                    set.contains(&NodeId::Category { category: c, slot: s })
                        || set.contains(&NodeId::SecondLevel(c + 1))
                })
                .collect()
        }
        _ => {
            let count = t.masks.users.first().map_or(0, |u| u.shares.len());
            (1..=count).map(|k| set.contains(&NodeId::Node(k))).collect()
        }
    }
}

fn adjust_shares(
    shares: &[f64],
    pinned: &[bool],
    old_total: f64,
    new_total: f64,
    mode: Option<BaselineMode>,
) -> Result<Vec<f64>, String> {
    let slot = pinned
        .iter()
        .position(|p| !p)
        .ok_or_else(|| "no unobserved share can absorb the change".to_string())?;
    let mut out = shares.to_vec();
    match mode {
        Some(BaselineMode::Product) => {
            if old_total == 0.0 || new_total == 0.0 {
                return Err("multiplicative shares cannot encode zero".into());
            }
            out[slot] *= new_total / old_total;
        }
        _ => out[slot] += new_total - old_total,
    }
    Ok(out)
}

fn adjust_chain(chain: &mut [f64], seen: &[bool], t: f64) -> Result<(), String> {
    if t == 1.0 {
        return Ok(());
    }
    let hidden = seen
        .iter()
        .position(|s| !s)
        .ok_or_else(|| "every slot of a scaled lane is observed".to_string())?;
    let count = seen.iter().filter(|s| **s).count() as i32;
    for (v, s) in chain.iter_mut().zip(seen) {
        if *s {
            *v /= t;
        }
    }
    chain[hidden] *= t.powi(count);
    Ok(())
}

/// Builds inputs with codes `alt_secrets` and masks under which every
/// corrupted node sees what it saw in `t`.
pub fn simulate_views(
    t: &Transcript,
    basis: Option<&Basis>,
    corrupted: &[NodeId],
    alt_secrets: &[f64],
) -> Result<Simulation, ProtocolError> {
    tolerated(t, corrupted)?;
    if alt_secrets.len() != t.n {
        return Err(ProtocolError::MaskShape(format!(
            "{} alternative secrets for {} users",
            alt_secrets.len(),
            t.n
        )));
    }
    let set: BTreeSet<NodeId> = corrupted.iter().copied().collect();
    let inputs: Vec<SecretInput> = t
        .inputs
        .iter()
        .zip(alt_secrets)
        .map(|(s, a)| SecretInput::new(*a, s.weight))
        .collect();
    let pinned = pinned_shares(t, &set);
    let fail = |j: usize, why: String| ProtocolError::SimulationFailed(format!("user {j}: {why}"));

    let mut users = Vec::with_capacity(t.n);
    for (j, (old, user)) in t.inputs.iter().zip(&t.masks.users).enumerate() {
        let new = inputs[j];
        let (old_total, new_total) = match t.baseline {
            Some(_) => (old.code, new.code),
            None => (old.weight * old.code, new.weight * new.code),
        };
        let shares = adjust_shares(&user.shares, &pinned, old_total, new_total, t.baseline)
            .map_err(|e| fail(j, e))?;
        if t.kind == ProtocolKind::Baseline {
            users.push(UserMasks { shares, ..user.clone() });
            continue;
        }
        let states = lane_states(t, &set);
        let (c_old, c_new) = (scaled_code(t.y, t.n, old.code), scaled_code(t.y, t.n, new.code));
        let basis = basis
            .ok_or_else(|| ProtocolError::MaskShape("simulation needs the basis".into()))?;
        let (zero, zero_scales) = solve_pairs(
            &[user.zero],
            &[basis.zero_coefficient(c_old)],
            &[basis.zero_coefficient(c_new)],
            &states,
        )
        .map_err(|e| fail(j, e))?;
        let k = user.stream.len();
        let old_coef: Vec<f64> = (0..k).map(|m| basis.stream_coefficient(c_old, m)).collect();
        let new_coef: Vec<f64> = (0..k).map(|m| basis.stream_coefficient(c_new, m)).collect();
        let (stream, stream_scales) =
            solve_pairs(&user.stream, &old_coef, &new_coef, &states).map_err(|e| fail(j, e))?;
        let mut supplementary = user.supplementary.clone();
        if let Some(sup) = supplementary.as_mut() {
            let kappa = layout(t.iota).kappa;
            for c in 0..4 {
                let seen: Vec<bool> = (0..kappa)
                    .map(|s| set.contains(&NodeId::Category { category: c, slot: s }))
                    .collect();
                adjust_chain(&mut sup.zero[c], &seen, zero_scales[c]).map_err(|e| fail(j, e))?;
                adjust_chain(&mut sup.stream[c], &seen, stream_scales[c])
                    .map_err(|e| fail(j, e))?;
            }
        }
        users.push(UserMasks { shares, zero: zero[0], stream, supplementary });
    }
    Ok(Simulation { inputs, masks: MaskSet { users } })
}

/// Re-runs the scheme of `t` with other inputs and masks.
pub fn rerun(
    t: &Transcript,
    basis: Option<&Basis>,
    inputs: &[SecretInput],
    masks: &MaskSet,
) -> Result<Transcript, ProtocolError> {
    let need_basis = || {
        basis.ok_or_else(|| ProtocolError::MaskShape("re-running needs the basis".into()))
    };
    match t.kind {
        ProtocolKind::Baseline => {
            let codes: Vec<f64> = inputs.iter().map(|s| s.code).collect();
            baseline_with_masks(&codes, t.baseline.unwrap_or(BaselineMode::Sum), masks)
        }
        ProtocolKind::TwoParty => two_party_round(inputs[0], inputs[1], t.y, masks, need_basis()?),
        ProtocolKind::NParty => n_party_round(inputs, t.y, masks, need_basis()?),
        ProtocolKind::MultiNode => multi_node_round(inputs, t.y, t.iota, masks, need_basis()?),
    }
}

/// Outcome of a constructive privacy check.
#[derive(Clone, Debug, PartialEq)]
pub enum PrivacyVerdict {
    /// Alternative secrets reproduce every corrupted view.
    Pass,
    /// The set is within the threshold but no simulation was found.
    Fail(String),
    /// The set exceeds the scheme's threshold.
    SubsetTooLarge(String),
}

impl PrivacyVerdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, PrivacyVerdict::Pass)
    }

    pub fn label(&self) -> &'static str {
        match self {
            PrivacyVerdict::Pass => "PASS",
            PrivacyVerdict::Fail(_) => "FAIL",
            PrivacyVerdict::SubsetTooLarge(_) => "SubsetTooLarge",
        }
    }
}

/// Simulates with `alt_secrets` and confirms the views by re-running.
pub fn check_privacy(
    t: &Transcript,
    basis: Option<&Basis>,
    corrupted: &[NodeId],
    alt_secrets: &[f64],
) -> Result<PrivacyVerdict, ProtocolError> {
    let sim = match simulate_views(t, basis, corrupted, alt_secrets) {
        Ok(sim) => sim,
        Err(ProtocolError::SubsetTooLarge(why)) => return Ok(PrivacyVerdict::SubsetTooLarge(why)),
        Err(ProtocolError::SimulationFailed(why)) => return Ok(PrivacyVerdict::Fail(why)),
        Err(e) => return Err(e),
    };
    let again = rerun(t, basis, &sim.inputs, &sim.masks)?;
    for node in corrupted {
        if !t.view(*node).matches(&again.view(*node), VIEW_TOLERANCE) {
            return Ok(PrivacyVerdict::Fail(format!("view of {node} differs after simulation")));
        }
    }
    Ok(PrivacyVerdict::Pass)
}
