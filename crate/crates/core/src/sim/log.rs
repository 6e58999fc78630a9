use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::protocol::{NodeId, Transcript};

/// A simulated party.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Party {
    /// User `j` (0-based), shown as `U{j+1}`.
    User(usize),
    Node(NodeId),
    Display,
}

impl Party {
    pub fn is_node(self) -> bool {
        matches!(self, Party::Node(_))
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::User(j) => write!(f, "U{}", j + 1),
            Party::Node(n) => write!(f, "{n}"),
            Party::Display => f.write_str("display"),
        }
    }
}

impl FromStr for Party {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "display" {
            return Ok(Party::Display);
        }
        if let Some(rest) = s.strip_prefix('U') {
            let j: usize = rest.parse().map_err(|_| format!("bad user `{s}`"))?;
            return j.checked_sub(1).map(Party::User).ok_or_else(|| format!("bad user `{s}`"));
        }
        s.parse().map(Party::Node)
    }
}

impl From<Party> for String {
    fn from(p: Party) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for Party {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    UserToNode,
    /// Category node to its second-level node, inside the node hierarchy.
    CategoryToSecondLevel,
    NodeToDisplay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    HyperVector,
    CategoryOutput,
    NodeOutput,
}

/// Where a payload lives in the transcript, with a content digest.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PayloadRef {
    pub kind: PayloadKind,
    pub index: usize,
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub phase: Phase,
    pub from: Party,
    pub to: Party,
    pub payload: PayloadRef,
}

impl Record {
    /// A node-to-node record outside the category→second-level hop.
    pub fn is_internode(&self) -> bool {
        match (self.from, self.to) {
            (
                Party::Node(NodeId::Category { category, .. }),
                Party::Node(NodeId::SecondLevel(k)),
            ) if self.phase == Phase::CategoryToSecondLevel => k != category + 1,
            (Party::Node(_), Party::Node(_)) => true,
            _ => false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageCounts {
    pub user_to_node: usize,
    pub category_to_second_level: usize,
    pub node_to_display: usize,
    pub node_to_node: usize,
}

/// Ordered record of every simulated message.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MessageLog {
    pub records: Vec<Record>,
}

pub(crate) fn digest<T: Serialize>(payload: &T) -> String {
    let text = serde_json::to_string(payload).expect("payload serializes");
    let mut h = DefaultHasher::new();
    text.hash(&mut h);
    format!("{:016x}", h.finish())
}

impl MessageLog {
    /// Appends a batch and restores the commit order `(phase, sender, receiver)`.
    pub fn commit(&mut self, batch: Vec<Record>) {
        self.records.extend(batch);
        self.records
            .sort_by(|a, b| (a.phase, a.from, a.to).cmp(&(b.phase, b.from, b.to)));
    }

    pub fn counts(&self) -> MessageCounts {
        let mut c = MessageCounts::default();
        for r in &self.records {
            if r.is_internode() {
                c.node_to_node += 1;
                continue;
            }
            match r.phase {
                Phase::UserToNode => c.user_to_node += 1,
                Phase::CategoryToSecondLevel => c.category_to_second_level += 1,
                Phase::NodeToDisplay => c.node_to_display += 1,
            }
        }
        c
    }

    /// Records addressed to `to`.
    pub fn received_by(&self, to: Party) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(move |r| r.to == to)
    }

    /// One user→node message per (user, first-level node) and one
    /// node→display message per output node.
    pub fn check_pattern(&self, users: usize, first_level: &[NodeId], outputs: usize) -> Result<(), String> {
        let mut pairs: BTreeMap<(Party, Party), usize> = BTreeMap::new();
        let mut to_display: BTreeMap<Party, usize> = BTreeMap::new();
        for r in &self.records {
            match r.phase {
                Phase::UserToNode => *pairs.entry((r.from, r.to)).or_default() += 1,
                Phase::NodeToDisplay => *to_display.entry(r.from).or_default() += 1,
                Phase::CategoryToSecondLevel => {}
            }
        }
        for j in 0..users {
            for node in first_level {
                let got = pairs.get(&(Party::User(j), Party::Node(*node))).copied().unwrap_or(0);
                if got != 1 {
                    return Err(format!("{} sent {got} messages to {node}", Party::User(j)));
                }
            }
        }
        if pairs.len() != users * first_level.len() {
            return Err("user messages reach unexpected parties".into());
        }
        if to_display.len() != outputs || to_display.values().any(|c| *c != 1) {
            return Err(format!("expected one display message from each of {outputs} nodes"));
        }
        Ok(())
    }

    /// The records a run of `t` produces, in commit order.
    pub fn from_transcript(t: &Transcript, output_nodes: &[NodeId]) -> Self {
        let mut log = MessageLog::default();
        log.commit(
            t.messages
                .iter()
                .enumerate()
                .map(|(i, h)| Record {
                    phase: Phase::UserToNode,
                    from: Party::User(h.from),
                    to: Party::Node(h.to),
                    payload: PayloadRef { kind: PayloadKind::HyperVector, index: i, digest: digest(h) },
                })
                .collect(),
        );
        log.commit(
            t.category_outputs
                .iter()
                .enumerate()
                .map(|(i, c)| Record {
                    phase: Phase::CategoryToSecondLevel,
                    from: Party::Node(c.from),
                    to: Party::Node(c.to),
                    payload: PayloadRef { kind: PayloadKind::CategoryOutput, index: i, digest: digest(c) },
                })
                .collect(),
        );
        log.commit(
            output_nodes
                .iter()
                .zip(&t.node_outputs)
                .enumerate()
                .map(|(i, (node, out))| Record {
                    phase: Phase::NodeToDisplay,
                    from: Party::Node(*node),
                    to: Party::Display,
                    payload: PayloadRef { kind: PayloadKind::NodeOutput, index: i, digest: digest(out) },
                })
                .collect(),
        );
        log
    }
}
