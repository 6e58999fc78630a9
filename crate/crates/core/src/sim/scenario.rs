use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::protocol::{
    BaselineMode, Basis, MaskSet, Mode, NodeId, ProtocolKind, SecretInput,
};

use super::SimError;

/// Default dense truncation when `mode = "dense"` gives none.
pub const DEFAULT_TRUNCATION: usize = 32;

/// Largest dense truncation a scenario may request.
pub const MAX_TRUNCATION: usize = 4096;

/// Parses `0.25`, `1/6` or `-3/4`.
pub fn parse_rational(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let value = match s.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
            let den: f64 = den.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
            if den == 0.0 {
                return Err(format!("zero denominator in `{s}`"));
            }
            num / den
        }
        None => s.parse().map_err(|_| format!("`{s}` is not a number"))?,
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn de_rational<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Number(f64),
        Text(String),
    }
    match Raw::deserialize(d)? {
        Raw::Number(v) => Ok(v),
        Raw::Text(s) => parse_rational(&s).map_err(serde::de::Error::custom),
    }
}

fn ser_nodes<S: Serializer>(nodes: &[NodeId], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(nodes.iter().map(|n| n.to_string()))
}

fn de_nodes<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<NodeId>, D::Error> {
    Vec::<String>::deserialize(d)?
        .iter()
        .map(|s| s.parse().map_err(serde::de::Error::custom))
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    #[default]
    Rank1,
    Dense,
}

fn one() -> f64 {
    1.0
}

fn default_tau() -> f64 {
    1.0 / 6.0
}

fn default_tolerance() -> f64 {
    1e-8
}

fn default_node_count() -> usize {
    4
}

/// A complete, seeded run description, read from TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub protocol: ProtocolKind,
    /// Must equal `secrets.len()` when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub iota: usize,
    #[serde(default = "default_tau", deserialize_with = "de_rational")]
    pub tau: f64,
    #[serde(default = "one", deserialize_with = "de_rational")]
    pub l: f64,
    pub secrets: Vec<f64>,
    /// Linear weights; all 1 when empty.
    #[serde(default)]
    pub weights: Vec<f64>,
    #[serde(default = "one", deserialize_with = "de_rational")]
    pub y: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default)]
    pub mode: ModeName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<usize>,
    #[serde(default, serialize_with = "ser_nodes", deserialize_with = "de_nodes")]
    pub corrupted: Vec<NodeId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline_mode: Option<BaselineMode>,
    #[serde(default = "default_node_count")]
    pub node_count: usize,
    /// Explicit shares and masks; sampled from `seed` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub masks: Option<MaskSet>,
}

impl Scenario {
    /// A sampled-mask scenario with defaults for everything else.
    pub fn new(protocol: ProtocolKind, secrets: Vec<f64>) -> Self {
        Self {
            protocol,
            n: None,
            iota: 0,
            tau: default_tau(),
            l: 1.0,
            secrets,
            weights: Vec::new(),
            y: 1.0,
            seed: 0,
            tolerance: default_tolerance(),
            mode: ModeName::Rank1,
            truncation: None,
            corrupted: Vec::new(),
            baseline_mode: None,
            node_count: default_node_count(),
            masks: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        toml::from_str(text).map_err(|e| SimError::ConfigInvalid(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, SimError> {
        toml::to_string_pretty(self).map_err(|e| SimError::ConfigInvalid(e.to_string()))
    }

    pub fn user_count(&self) -> usize {
        self.secrets.len()
    }

    pub fn protocol_mode(&self) -> Mode {
        match self.mode {
            ModeName::Rank1 => Mode::Rank1,
            ModeName::Dense => Mode::Dense {
                truncation: self.truncation.unwrap_or(DEFAULT_TRUNCATION),
            },
        }
    }

    pub fn inputs(&self) -> Vec<SecretInput> {
        self.secrets
            .iter()
            .enumerate()
            .map(|(j, a)| SecretInput::new(*a, self.weights.get(j).copied().unwrap_or(1.0)))
            .collect()
    }

    /// Checks the parameter combination against the protocol preconditions.
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::ConfigInvalid(msg));
        let n = self.user_count();
        if let Some(declared) = self.n {
            if declared != n {
                return bad(format!("n = {declared} but {n} secrets given"));
            }
        }
        if !self.weights.is_empty() && self.weights.len() != n {
            return bad(format!("{} weights for {n} secrets", self.weights.len()));
        }
        if self.secrets.iter().chain(&self.weights).any(|v| !v.is_finite()) {
            return bad("secrets and weights must be finite".into());
        }
        if !(self.tolerance > 0.0) {
            return bad("tolerance must be positive".into());
        }
        let min_users = if self.protocol == ProtocolKind::Baseline { 1 } else { 2 };
        if n < min_users {
            return bad(format!("{} needs at least {min_users} users, got {n}", self.protocol));
        }
        match self.protocol {
            ProtocolKind::Baseline => {
                if self.node_count == 0 {
                    return bad("node_count must be positive".into());
                }
            }
            kind => {
                if kind == ProtocolKind::TwoParty && n != 2 {
                    return bad(format!("two-party runs need exactly 2 secrets, got {n}"));
                }
                if !(self.tau > 0.0 && self.tau < 1.0) {
                    return bad(format!("tau = {} is outside (0, 1)", self.tau));
                }
                if !(self.l > 0.0) || !self.l.is_finite() {
                    return bad(format!("l = {} must be positive", self.l));
                }
                if !self.y.is_finite() {
                    return bad("y must be finite".into());
                }
                if kind != ProtocolKind::MultiNode && self.iota != 0 {
                    return bad(format!("iota applies only to multi-node runs ({kind})"));
                }
                if let Mode::Dense { truncation } = self.protocol_mode() {
                    if truncation == 0 || truncation > MAX_TRUNCATION {
                        return bad(format!("truncation must be in 1..={MAX_TRUNCATION}"));
                    }
                }
            }
        }
        if self.protocol != ProtocolKind::Baseline && self.baseline_mode.is_some() {
            return bad("baseline_mode applies only to baseline runs".into());
        }
        Ok(())
    }

    /// The shared coefficient basis, or `None` for the baseline scheme.
    pub fn basis(&self) -> Result<Option<Basis>, SimError> {
        if self.protocol == ProtocolKind::Baseline {
            return Ok(None);
        }
        Ok(Some(Basis::new(self.tau, self.l, self.user_count(), self.protocol_mode())?))
    }
}
