//! Deterministic message-passing simulation over the protocol rounds.
//!
//! A run computes the transcript with the pure round functions, then replays
//! the user → node → (second level) → display phases as independent parties
//! on an [`Executor`]. Every replayed node output must equal the transcript's
//! bit for bit, whatever the schedule.

pub mod log;
pub mod report;
pub mod scenario;

use std::time::Instant;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::protocol::engine::node_output;
use crate::protocol::multi_node::{second_level_output, slot_output};
use crate::protocol::{
    baseline_round, baseline_with_masks, check_privacy, display, layout, multi_node_round,
    n_party_round, sample_masks, two_party_round, BaselineMode, Basis, CategoryOutput,
    HyperVector, NodeId, PrivacyVerdict, ProtocolError, ProtocolKind, Transcript,
};
use crate::theta::ThetaExpr;

pub use log::{MessageCounts, MessageLog, Party, PayloadKind, PayloadRef, Phase, Record};
pub use report::{Report, FAIL, PASS, SKIPPED};
pub use scenario::{parse_rational, ModeName, Scenario};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("replayed {party} disagrees with the transcript")]
    Replay { party: String },
    #[error("message pattern violated: {0}")]
    Pattern(String),
    #[error("cannot write output: {0}")]
    Output(String),
}

/// How simulated parties are scheduled within a phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Executor {
    #[default]
    Sequential,
    /// A seeded random order on one thread.
    Shuffled(u64),
    /// One scoped thread per party.
    Threads,
}

impl Executor {
    /// Runs `f(0..count)` under this schedule; results come back in index order.
    pub fn map<T: Send, F: Fn(usize) -> T + Sync>(&self, count: usize, f: F) -> Vec<T> {
        match self {
            Executor::Sequential => (0..count).map(f).collect(),
            Executor::Shuffled(seed) => {
                let mut order: Vec<usize> = (0..count).collect();
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
                let mut slots: Vec<Option<T>> = (0..count).map(|_| None).collect();
                for i in order {
                    slots[i] = Some(f(i));
                }
                slots.into_iter().map(|s| s.expect("every slot ran")).collect()
            }
            Executor::Threads => {
                let f = &f;
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..count).map(|i| scope.spawn(move || f(i))).collect();
                    handles
                        .into_iter()
                        .map(|h| h.join().expect("party thread panicked"))
                        .collect()
                })
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    pub executor: Executor,
    /// Adds `elapsed_ms` to the report (which then is no longer reproducible).
    pub timing: bool,
}

/// Nodes whose outputs reach the display.
pub fn output_nodes(t: &Transcript) -> Vec<NodeId> {
    match t.kind {
        ProtocolKind::MultiNode if t.iota > 0 => (1..=4).map(NodeId::SecondLevel).collect(),
        _ => (1..=t.node_outputs.len()).map(NodeId::Node).collect(),
    }
}

/// Nodes that receive user messages.
pub fn first_level_nodes(t: &Transcript) -> Vec<NodeId> {
    match t.kind {
        ProtocolKind::MultiNode if t.iota > 0 => {
            let kappa = layout(t.iota).kappa;
            (0..4)
                .flat_map(|c| (0..kappa).map(move |s| NodeId::Category { category: c, slot: s }))
                .collect()
        }
        _ => output_nodes(t),
    }
}

/// Runs the scenario's protocol with its (explicit or seeded) masks.
pub fn execute_protocol(s: &Scenario) -> Result<(Transcript, Option<Basis>), SimError> {
    s.validate()?;
    let inputs = s.inputs();
    if s.protocol == ProtocolKind::Baseline {
        let mode = s.baseline_mode.unwrap_or(BaselineMode::Sum);
        let t = match &s.masks {
            Some(m) => baseline_with_masks(&s.secrets, mode, m)?,
            None => baseline_round(&s.secrets, mode, s.node_count, s.seed)?,
        };
        return Ok((t, None));
    }
    let basis = s.basis()?.expect("non-baseline basis");
    let masks = match &s.masks {
        Some(m) => m.clone(),
        None => sample_masks(&inputs, basis.mode, s.iota, s.seed),
    };
    let t = match s.protocol {
        ProtocolKind::TwoParty => two_party_round(inputs[0], inputs[1], s.y, &masks, &basis)?,
        ProtocolKind::NParty => n_party_round(&inputs, s.y, &masks, &basis)?,
        ProtocolKind::MultiNode => multi_node_round(&inputs, s.y, s.iota, &masks, &basis)?,
        ProtocolKind::Baseline => unreachable!(),
    };
    Ok((t, Some(basis)))
}

fn replay_mismatch(party: impl ToString) -> SimError {
    SimError::Replay { party: party.to_string() }
}

/// Re-executes every node from its inbox and the display from the node outputs.
pub fn replay(t: &Transcript, basis: Option<&Basis>, exec: &Executor) -> Result<(), SimError> {
    let inbox = |node: NodeId| -> Vec<&HyperVector> {
        t.messages.iter().filter(|h| h.to == node).collect()
    };
    let outputs: Vec<ThetaExpr> = match (t.kind, basis) {
        (ProtocolKind::Baseline, _) => {
            let nodes = output_nodes(t);
            let partials = exec.map(nodes.len(), |i| {
                let shares = inbox(nodes[i]).into_iter().map(|h| h.share);
                match t.baseline {
                    Some(BaselineMode::Product) => shares.product::<f64>(),
                    _ => shares.sum::<f64>(),
                }
            });
            let shown = match t.baseline {
                Some(BaselineMode::Product) => partials.iter().product::<f64>(),
                _ => partials.iter().sum::<f64>(),
            };
            if Complex64::new(shown, 0.0) != t.display {
                return Err(replay_mismatch(Party::Display));
            }
            partials.into_iter().map(ThetaExpr::real).collect()
        }
        (ProtocolKind::MultiNode, Some(basis)) if t.iota > 0 => {
            let kappa = layout(t.iota).kappa;
            let slots = first_level_nodes(t);
            let cats = exec.map(slots.len(), |i| {
                slot_output(slots[i], &inbox(slots[i]), kappa, basis.stream_len())
            });
            let cats: Vec<CategoryOutput> = cats.into_iter().collect::<Result<_, _>>()?;
            for (i, c) in cats.iter().enumerate() {
                if t.category_outputs.get(i) != Some(c) {
                    return Err(replay_mismatch(c.from));
                }
            }
            let tops = output_nodes(t);
            let outs = exec.map(tops.len(), |i| {
                let mine: Vec<&CategoryOutput> = cats.iter().filter(|c| c.to == tops[i]).collect();
                second_level_output(&mine, t.y, basis)
            });
            outs.into_iter().collect::<Result<_, _>>()?
        }
        (_, Some(basis)) => {
            let nodes = output_nodes(t);
            let outs = exec.map(nodes.len(), |i| node_output(&inbox(nodes[i]), t.y, basis));
            outs.into_iter().collect::<Result<_, _>>()?
        }
        (_, None) => {
            return Err(SimError::ConfigInvalid("replay needs the basis".into()));
        }
    };
    for (node, (mine, theirs)) in output_nodes(t).iter().zip(outputs.iter().zip(&t.node_outputs)) {
        if mine != theirs {
            return Err(replay_mismatch(node));
        }
    }
    if t.kind != ProtocolKind::Baseline && display(&outputs)? != t.display {
        return Err(replay_mismatch(Party::Display));
    }
    Ok(())
}

/// Simulates the corrupted views with a random alternative secret vector
/// drawn from `seed`. The log must show every corrupted node receiving what
/// the transcript says it received.
pub fn privacy_check(
    t: &Transcript,
    basis: Option<&Basis>,
    log: &MessageLog,
    corrupted: &[NodeId],
    seed: u64,
) -> Result<PrivacyVerdict, SimError> {
    for node in corrupted {
        let logged = log.received_by(Party::Node(*node)).count();
        let view = t.view(*node);
        if logged != view.messages.len() + view.category_outputs.len() {
            return Ok(PrivacyVerdict::Fail(format!("log and transcript disagree on {node}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_a17e);
    let alt: Vec<f64> = (0..t.n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    Ok(check_privacy(t, basis, corrupted, &alt)?)
}

/// `PASS` iff the log holds no node-to-node record outside the tagged
/// category→second-level hop.
pub fn assert_no_internode_traffic(log: &MessageLog) -> Result<(), String> {
    match log.records.iter().find(|r| r.is_internode()) {
        None => Ok(()),
        Some(r) => Err(format!("node-to-node message {} → {}", r.from, r.to)),
    }
}

pub fn run(s: &Scenario) -> Result<(Transcript, MessageLog, Report), SimError> {
    run_with(s, &RunOptions::default())
}

pub fn run_with(
    s: &Scenario,
    opts: &RunOptions,
) -> Result<(Transcript, MessageLog, Report), SimError> {
    let start = Instant::now();
    let (t, basis) = execute_protocol(s)?;
    replay(&t, basis.as_ref(), &opts.executor)?;
    let log = MessageLog::from_transcript(&t, &output_nodes(&t));
    log.check_pattern(t.n, &first_level_nodes(&t), t.node_outputs.len())
        .map_err(SimError::Pattern)?;

    let (privacy, privacy_detail) = if s.corrupted.is_empty() {
        (SKIPPED.to_string(), None)
    } else {
        match privacy_check(&t, basis.as_ref(), &log, &s.corrupted, s.seed)? {
            PrivacyVerdict::Pass => (PASS.to_string(), None),
            v @ (PrivacyVerdict::Fail(_) | PrivacyVerdict::SubsetTooLarge(_)) => {
                let label = v.label().to_string();
                let why = match v {
                    PrivacyVerdict::Fail(w) | PrivacyVerdict::SubsetTooLarge(w) => w,
                    PrivacyVerdict::Pass => unreachable!(),
                };
                (label, Some(why))
            }
        }
    };
    let internode = match assert_no_internode_traffic(&log) {
        Ok(()) => PASS.to_string(),
        Err(_) => FAIL.to_string(),
    };
    let (residual, correct) = Report::correctness(&t, s.tolerance);
    let verdict = if correct && internode == PASS && privacy != FAIL { PASS } else { FAIL };
    let mode = match t.baseline {
        Some(BaselineMode::Sum) => "sum".to_string(),
        Some(BaselineMode::Product) => "product".to_string(),
        None => t.mode.to_string(),
    };
    let report = Report {
        protocol: t.kind.to_string(),
        n: t.n,
        iota: t.iota,
        mode,
        seed: s.seed,
        display_re: t.display.re,
        display_im: t.display.im,
        expected: t.expected,
        residual,
        tolerance: s.tolerance,
        correct,
        privacy,
        privacy_detail,
        internode,
        messages: log.counts(),
        verdict: verdict.to_string(),
        elapsed_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };
    Ok((t, log, report))
}

/// The two-party worked example shipped with the crate.
pub const WORKED_EXAMPLE: &str = include_str!("../../data/worked_example.toml");

/// Reference node values of the worked example, printed to four decimals.
pub const WORKED_NODE_VALUES: [(usize, f64, f64); 3] = [
    (2, 11.1887, 16.153),
    (3, 20.7616, -13.2477),
    (4, -40.7457, 46.2424),
];

/// Node values are printed to four decimals; this is the agreement allowed.
pub const WORKED_NODE_TOLERANCE: f64 = 2e-3;

/// Expected display of the worked example.
pub const WORKED_DISPLAY: f64 = -54.08;

#[derive(Clone, Debug, PartialEq)]
pub struct WorkedExample {
    pub report: Report,
    /// `(node, computed, reference)`.
    pub nodes: Vec<(usize, Complex64, Complex64)>,
    pub display_ok: bool,
    pub nodes_ok: bool,
}

impl WorkedExample {
    pub fn passed(&self) -> bool {
        self.display_ok && self.nodes_ok && self.report.passed()
    }
}

pub fn worked_example() -> Result<WorkedExample, SimError> {
    let s = Scenario::from_toml(WORKED_EXAMPLE)?;
    let (t, _, report) = run(&s)?;
    let nodes: Vec<_> = WORKED_NODE_VALUES
        .iter()
        .map(|&(k, re, im)| -> Result<_, SimError> {
            let got = t.node_outputs[k - 1].eval_t().map_err(ProtocolError::from)?;
            Ok((k, got, Complex64::new(re, im)))
        })
        .collect::<Result<_, _>>()?;
    let nodes_ok = nodes.iter().all(|(_, got, want)| {
        (got.re - want.re).abs() <= WORKED_NODE_TOLERANCE
            && (got.im - want.im).abs() <= WORKED_NODE_TOLERANCE
    });
    let display_ok =
        (t.display.re - WORKED_DISPLAY).abs() <= 1e-6 && t.display.im.abs() <= 1e-9;
    Ok(WorkedExample { report, nodes, display_ok, nodes_ok })
}
