use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

use crate::fourier::{
    cosine_coefficients, moment, normalize_eta, normalized_cosine, CoefficientSet,
};
use crate::theta::ThetaExpr;

use super::ProtocolError;

/// Normalization is accepted when `α₀ⁿ/2 + Mₙ` is this close to 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Tolerance used when building a basis from the closed-form family.
pub const BASIS_TOLERANCE: f64 = 1e-14;

/// A user's secret code and its public linear weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecretInput {
    pub code: f64,
    pub weight: f64,
}

impl SecretInput {
    pub fn new(code: f64, weight: f64) -> Self {
        Self { code, weight }
    }
}

/// `Σ x_j a_j + y Π a_j`.
pub fn expected_value(inputs: &[SecretInput], y: f64) -> f64 {
    let linear: f64 = inputs.iter().map(|s| s.weight * s.code).sum();
    let product: f64 = inputs.iter().map(|s| s.code).product();
    linear + y * product
}

/// The pair `(p, q)` of a mask `ω = p + u·q`, `ω̂ = u·p − q`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskPair {
    pub p: f64,
    pub q: f64,
}

impl MaskPair {
    pub fn new(p: f64, q: f64) -> Self {
        Self { p, q }
    }
}

/// What plays the role of `u` in the masks: the complex unit for two users,
/// `Θ^[1]` for the n-user schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskUnit {
    Imaginary,
    Theta,
}

impl MaskUnit {
    pub fn expr(self) -> ThetaExpr {
        match self {
            MaskUnit::Imaginary => ThetaExpr::scalar(Complex64::new(0.0, 1.0)),
            MaskUnit::Theta => ThetaExpr::theta(1),
        }
    }
}

/// The four first-level lanes: `+ω`, `−ω`, `+ω̂`, `−ω̂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Lane {
    Plus,
    Minus,
    HatPlus,
    HatMinus,
}

impl Lane {
    pub const ALL: [Lane; 4] = [Lane::Plus, Lane::Minus, Lane::HatPlus, Lane::HatMinus];

    /// Zero-based position; node `k` (1-based) serves lane `k−1`.
    pub fn index(self) -> usize {
        match self {
            Lane::Plus => 0,
            Lane::Minus => 1,
            Lane::HatPlus => 2,
            Lane::HatMinus => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Lane> {
        Lane::ALL.get(i).copied()
    }

    pub fn sign(self) -> f64 {
        match self {
            Lane::Plus | Lane::HatPlus => 1.0,
            Lane::Minus | Lane::HatMinus => -1.0,
        }
    }

    pub fn is_hat(self) -> bool {
        matches!(self, Lane::HatPlus | Lane::HatMinus)
    }

    /// Category letter used by the multi-node scheme.
    pub fn category(self) -> char {
        ['A', 'B', 'C', 'D'][self.index()]
    }

    /// `c ± ω` or `c ± ω̂` as a theta-scalar.
    pub fn entry(self, c: f64, mask: MaskPair, unit: MaskUnit) -> ThetaExpr {
        let u = unit.expr();
        let (x, y) = if self.is_hat() { (-mask.q, mask.p) } else { (mask.p, mask.q) };
        let s = self.sign();
        ThetaExpr::real(c + s * x)
            .add(&u.scale_real(s * y))
            .expect("root-free operands")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Every masked stream is a scalar multiple of the shared `αₘ`.
    Rank1,
    /// Full per-index entries for `m = 1..=truncation`.
    Dense { truncation: usize },
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Rank1 => write!(f, "rank1"),
            Mode::Dense { truncation } => write!(f, "dense({truncation})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolKind {
    Baseline,
    TwoParty,
    NParty,
    MultiNode,
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProtocolKind::Baseline => "baseline",
            ProtocolKind::TwoParty => "two-party",
            ProtocolKind::NParty => "n-party",
            ProtocolKind::MultiNode => "multi-node",
        };
        f.write_str(s)
    }
}

/// Every computing party of every scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeId {
    /// A node of the baseline or four-node schemes (1-based).
    Node(usize),
    /// First-level node `slot` (0-based) of category `category` (0..4).
    Category { category: usize, slot: usize },
    /// Second-level node `N_k` (1-based) of the multi-node scheme.
    SecondLevel(usize),
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Node(k) => write!(f, "N{k}"),
            NodeId::Category { category, slot } => {
                write!(f, "{}{}", ['A', 'B', 'C', 'D'][*category], slot + 1)
            }
            NodeId::SecondLevel(k) => write!(f, "L{k}"),
        }
    }
}

impl std::str::FromStr for NodeId {
    type Err = String;

    /// `N3`, `B2`, `L1` (case-insensitive), or a bare node number.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || format!("unrecognised node `{s}`");
        if let Ok(k) = s.parse::<usize>() {
            return if k >= 1 { Ok(NodeId::Node(k)) } else { Err(bad()) };
        }
        let mut chars = s.chars();
        let head = chars.next().ok_or_else(bad)?.to_ascii_uppercase();
        let k: usize = chars.as_str().parse().map_err(|_| bad())?;
        if k == 0 {
            return Err(bad());
        }
        match head {
            'N' => Ok(NodeId::Node(k)),
            'L' => Ok(NodeId::SecondLevel(k)),
            'A' | 'B' | 'C' | 'D' => Ok(NodeId::Category {
                category: (head as u8 - b'A') as usize,
                slot: k - 1,
            }),
            _ => Err(bad()),
        }
    }
}

/// Multiplicative masks of one user for the multi-node scheme, indexed
/// `[category][slot]`. Each chain multiplies to 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Supplementary {
    pub zero: Vec<Vec<f64>>,
    pub stream: Vec<Vec<f64>>,
}

/// Everything one user chooses: additive shares and masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UserMasks {
    pub shares: Vec<f64>,
    pub zero: MaskPair,
    /// One pair in rank-1 mode, `truncation` pairs in dense mode.
    pub stream: Vec<MaskPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supplementary: Option<Supplementary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaskSet {
    pub users: Vec<UserMasks>,
}

/// A user→node packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperVector {
    pub from: usize,
    pub to: NodeId,
    pub share: f64,
    pub zero_entry: ThetaExpr,
    pub stream_entries: Vec<ThetaExpr>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root_order: Option<u32>,
}

/// A category→second-level packet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryOutput {
    pub from: NodeId,
    pub to: NodeId,
    pub share_sum: f64,
    pub zero_root: ThetaExpr,
    pub stream_roots: Vec<ThetaExpr>,
}

/// Shared Fourier data the nodes use, with its precomputed weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub coefficients: CoefficientSet,
    pub n: usize,
    pub mode: Mode,
    pub alpha0: f64,
    /// `Σ αₘⁿ`, truncated to the dense length in dense mode.
    pub moment: f64,
}

impl Basis {
    /// The closed-form family `cos(πτx/l)` normalized for `n` users.
    pub fn new(tau: f64, l: f64, n: usize, mode: Mode) -> Result<Self, ProtocolError> {
        if n < 2 {
            return Err(ProtocolError::NOutOfRange(n));
        }
        let cs = match mode {
            Mode::Rank1 => normalized_cosine(tau, l, n as u32, BASIS_TOLERANCE)?,
            Mode::Dense { truncation } => {
                if truncation == 0 {
                    return Err(ProtocolError::MaskShape("dense truncation must be positive".into()));
                }
                let dense = cosine_coefficients(tau, l, n as u32)?.to_dense(truncation);
                let (_, mut sets) = normalize_eta(&vec![dense; n], BASIS_TOLERANCE)?;
                sets.swap_remove(0)
            }
        };
        Self::from_coefficients(cs, n, mode)
    }

    /// Wraps a coefficient set, rejecting it unless `α₀ⁿ/2 + Mₙ = 1`.
    pub fn from_coefficients(
        cs: CoefficientSet,
        n: usize,
        mode: Mode,
    ) -> Result<Self, ProtocolError> {
        if n < 2 {
            return Err(ProtocolError::NOutOfRange(n));
        }
        let cs = match mode {
            Mode::Rank1 => cs,
            Mode::Dense { truncation } => match cs.cosine_len() {
                Some(len) if len == truncation => cs,
                _ => cs.to_dense(truncation),
            },
        };
        let m = moment(&cs, n as u32, BASIS_TOLERANCE)?.value;
        let alpha0 = cs.alpha0();
        let deviation = alpha0.powi(n as i32) / 2.0 + m - 1.0;
        if deviation.abs() > NORMALIZATION_TOLERANCE {
            return Err(ProtocolError::UnnormalizedBasis { deviation });
        }
        Ok(Self { coefficients: cs, n, mode, alpha0, moment: m })
    }

    pub fn stream_len(&self) -> usize {
        match self.mode {
            Mode::Rank1 => 1,
            Mode::Dense { truncation } => truncation,
        }
    }

    /// Weight of the zero-mode product in each node bracket.
    pub fn zero_weight(&self) -> f64 {
        match self.mode {
            Mode::Rank1 => self.alpha0.powi(self.n as i32),
            Mode::Dense { .. } => 1.0,
        }
    }

    /// Weights of the stream products in each node bracket.
    pub fn stream_weights(&self) -> Vec<f64> {
        match self.mode {
            Mode::Rank1 => vec![self.moment],
            Mode::Dense { truncation } => vec![1.0; truncation],
        }
    }

    /// Real part of the zero-mode entry before masking.
    pub fn zero_coefficient(&self, scaled_code: f64) -> f64 {
        match self.mode {
            Mode::Rank1 => scaled_code,
            Mode::Dense { .. } => scaled_code * self.alpha0,
        }
    }

    /// Real part of the `m`-th stream entry (0-based) before masking.
    pub fn stream_coefficient(&self, scaled_code: f64, m: usize) -> f64 {
        match self.mode {
            Mode::Rank1 => scaled_code,
            Mode::Dense { .. } => scaled_code * self.coefficients.alpha(m as u64 + 1),
        }
    }
}

/// Full record of one protocol run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub kind: ProtocolKind,
    pub n: usize,
    pub y: f64,
    pub iota: usize,
    pub mode: Mode,
    pub unit: MaskUnit,
    pub inputs: Vec<SecretInput>,
    pub masks: MaskSet,
    pub messages: Vec<HyperVector>,
    pub category_outputs: Vec<CategoryOutput>,
    pub node_outputs: Vec<ThetaExpr>,
    pub display: Complex64,
    pub expected: f64,
    pub residual: Complex64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<super::baseline::BaselineMode>,
}

impl Transcript {
    /// All packets `node` receives, in commit order.
    pub fn view(&self, node: NodeId) -> View {
        View {
            node,
            messages: self.messages.iter().filter(|m| m.to == node).cloned().collect(),
            category_outputs: self
                .category_outputs
                .iter()
                .filter(|c| c.to == node)
                .cloned()
                .collect(),
        }
    }

    /// First-level and second-level nodes of this run.
    pub fn nodes(&self) -> Vec<NodeId> {
        let mut ids: Vec<NodeId> = self.messages.iter().map(|m| m.to).collect();
        ids.extend(self.category_outputs.iter().map(|c| c.to));
        ids.sort();
        ids.dedup();
        ids
    }
}

/// What a node observes during a run.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub node: NodeId,
    pub messages: Vec<HyperVector>,
    pub category_outputs: Vec<CategoryOutput>,
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn theta_close(a: &ThetaExpr, b: &ThetaExpr, tol: f64) -> bool {
    let scale = a.norm().max(b.norm()).max(1.0);
    if !a.approx_eq(b, tol * scale) {
        return false;
    }
    a.root_factors()
        .iter()
        .zip(b.root_factors())
        .all(|(x, y)| close(x.scale(), y.scale(), tol) && x.base().approx_eq(y.base(), tol))
}

impl View {
    /// Entry-wise comparison with relative tolerance `tol`.
    pub fn matches(&self, other: &View, tol: f64) -> bool {
        self.node == other.node
            && self.messages.len() == other.messages.len()
            && self.category_outputs.len() == other.category_outputs.len()
            && self.messages.iter().zip(&other.messages).all(|(a, b)| {
                a.from == b.from
                    && close(a.share, b.share, tol)
                    && theta_close(&a.zero_entry, &b.zero_entry, tol)
                    && a.stream_entries.len() == b.stream_entries.len()
                    && a.stream_entries
                        .iter()
                        .zip(&b.stream_entries)
                        .all(|(x, y)| theta_close(x, y, tol))
            })
            && self.category_outputs.iter().zip(&other.category_outputs).all(|(a, b)| {
                a.from == b.from
                    && close(a.share_sum, b.share_sum, tol)
                    && theta_close(&a.zero_root, &b.zero_root, tol)
                    && a.stream_roots
                        .iter()
                        .zip(&b.stream_roots)
                        .all(|(x, y)| theta_close(x, y, tol))
            })
    }
}
