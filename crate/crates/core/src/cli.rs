//! The `fmpc` command-line driver.
//!
//! Exit codes: 0 when the verdict is PASS, 1 when it is FAIL, 2 on usage or
//! configuration errors.

use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chebyshev::{interp_2d, ChebModel};
use crate::fourier::{parseval_constants, CoefficientSet};
use crate::protocol::{
    residual_diagnostic, sample_masks, BaselineMode, Basis, Mode, NodeId, ProtocolError,
    ProtocolKind, SecretInput, RESIDUAL_TOLERANCE,
};
use crate::sim::{
    parse_rational, run_with, worked_example, Executor, ModeName, RunOptions, Scenario, SimError,
    FAIL, PASS,
};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fmpc", version, about = "Masked multi-party evaluation of Σ x_j a_j + y Π a_j")]
pub struct Cli {
    /// Extra diagnostics on stderr (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Two users, four nodes, complex masks.
    RunTwoParty(RunArgs),
    /// n users, four nodes, Θ masks.
    RunNParty(RunArgs),
    /// n users, 4(1+3ι) nodes in four categories plus a second level.
    RunMultiNode(RunArgs),
    /// Plain additive or multiplicative splitting.
    RunBaseline(RunArgs),
    /// Checks the generalized Parseval identity along two independent paths.
    VerifyIdentity(IdentityArgs),
    /// Compares the n-user mask residual with a subset-expansion oracle.
    DiagnoseResidual(ResidualArgs),
    /// Chebyshev lowering of a two-variable function with its error bound.
    Approx(ApproxArgs),
    /// The shipped two-party worked example.
    #[command(name = "paper-example", alias = "worked-example")]
    WorkedExample(OutputArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Rank1,
    Dense,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Machine-readable JSON report.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Scenario file (TOML); flags override its fields.
    #[arg(long, value_name = "PATH")]
    pub scenario: Option<PathBuf>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub iota: Option<usize>,
    /// Basis parameter in (0, 1), e.g. `1/6`.
    #[arg(long, value_name = "RATIONAL", value_parser = parse_rational)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub truncation: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Comma-separated secret codes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub secrets: Option<Vec<f64>>,
    /// Comma-separated linear weights.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub weights: Option<Vec<f64>>,
    /// Product weight.
    #[arg(long, value_parser = parse_rational, allow_hyphen_values = true)]
    pub y: Option<f64>,
    /// Comma-separated corrupted nodes, e.g. `N1` or `A1,B2,L3`.
    #[arg(long, value_delimiter = ',')]
    pub corrupt: Option<Vec<NodeId>>,
    /// Baseline: multiply instead of add.
    #[arg(long)]
    pub product: bool,
    /// Baseline: number of nodes.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Run each phase's parties on their own threads.
    #[arg(long)]
    pub threads: bool,
    /// Include `elapsed_ms` in the report.
    #[arg(long)]
    pub timing: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct IdentityArgs {
    /// A single input count; all of 2..=6 when omitted.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Dense truncation of the random sets.
    #[arg(long, default_value_t = 32)]
    pub truncation: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ResidualArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "RATIONAL", value_parser = parse_rational, default_value = "0.3")]
    pub tau: f64,
    #[arg(long, value_enum, default_value = "rank1")]
    pub mode: ModeArg,
    #[arg(long, default_value_t = 8)]
    pub truncation: usize,
    /// Agreement tolerance, relative to the size of the expanded terms.
    #[arg(long, default_value_t = RESIDUAL_TOLERANCE)]
    pub tolerance: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ApproxFunction {
    /// a²
    Square,
    /// sin(2a)
    Sin2x,
    /// exp(a)
    Exp,
    /// a·b·cos(a + b)
    AbCos,
}

impl ApproxFunction {
    pub fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            ApproxFunction::Square => a * a,
            ApproxFunction::Sin2x => (2.0 * a).sin(),
            ApproxFunction::Exp => a.exp(),
            ApproxFunction::AbCos => a * b * (a + b).cos(),
        }
    }

    /// Bounds on `|∂ᵃ^{m+1}Φ|` and `|∂ᵇ^{m′+1}Φ|` over the square.
    pub fn derivative_bounds(self, m: usize, m2: usize) -> (f64, f64) {
        match self {
            ApproxFunction::Square => (if m <= 1 { 2.0 } else { 0.0 }, 0.0),
            ApproxFunction::Sin2x => (2f64.powi(m as i32 + 1), 0.0),
            ApproxFunction::Exp => (std::f64::consts::E, 0.0),
            ApproxFunction::AbCos => ((m + 2) as f64, (m2 + 2) as f64),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ApproxArgs {
    #[arg(long, value_enum, default_value = "ab-cos")]
    pub function: ApproxFunction,
    /// Degree along a.
    #[arg(long, default_value_t = 8)]
    pub m: usize,
    /// Degree along b.
    #[arg(long, default_value_t = 8)]
    pub m2: usize,
    /// Points per side of the evaluation grid.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// A failure that maps to an exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::ConfigInvalid(_)
            | SimError::Protocol(
                ProtocolError::NOutOfRange(_)
                | ProtocolError::MaskShape(_)
                | ProtocolError::UnknownNode(_)
                | ProtocolError::InvalidNodeCount(_)
                | ProtocolError::ZeroCodeInProductMode { .. }
                | ProtocolError::Fourier(_),
            ) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        SimError::Protocol(e).into()
    }
}

fn emit<T: Serialize>(value: &T, out: &OutputArgs) -> Result<(), CliError> {
    let text = if out.json {
        serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| e.to_string())
    } else {
        toml::to_string_pretty(value).map_err(|e| e.to_string())
    }
    .map_err(CliError::Runtime)?;
    match &out.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn verdict_code(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

fn default_users(kind: ProtocolKind) -> usize {
    match kind {
        ProtocolKind::TwoParty | ProtocolKind::Baseline => 2,
        _ => 3,
    }
}

/// Builds the scenario from a file (if any) and flag overrides.
pub fn scenario_from_args(kind: ProtocolKind, args: &RunArgs) -> Result<Scenario, CliError> {
    let mut s = match &args.scenario {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let s = Scenario::from_toml(&text)?;
            if s.protocol != kind {
                return Err(CliError::Usage(format!(
                    "scenario is for {} but the subcommand runs {kind}",
                    s.protocol
                )));
            }
            s
        }
        None => Scenario::new(kind, Vec::new()),
    };
    if let Some(seed) = args.seed {
        s.seed = seed;
    }
    if let Some(v) = args.iota {
        s.iota = v;
    }
    if let Some(v) = args.tau {
        s.tau = v;
    }
    if let Some(v) = args.tolerance {
        s.tolerance = v;
    }
    if let Some(v) = args.y {
        s.y = v;
    }
    if let Some(mode) = args.mode {
        s.mode = match mode {
            ModeArg::Rank1 => ModeName::Rank1,
            ModeArg::Dense => ModeName::Dense,
        };
    }
    if let Some(v) = args.truncation {
        s.truncation = Some(v);
    }
    if let Some(v) = &args.corrupt {
        s.corrupted = v.clone();
    }
    if args.product {
        s.baseline_mode = Some(BaselineMode::Product);
    }
    if let Some(v) = args.nodes {
        s.node_count = v;
    }
    if let Some(v) = &args.secrets {
        s.secrets = v.clone();
    }
    if let Some(v) = &args.weights {
        s.weights = v.clone();
    }
    let n = args.n.or(s.n).unwrap_or(if s.secrets.is_empty() {
        default_users(kind)
    } else {
        s.secrets.len()
    });
    if s.secrets.len() != n {
        if args.secrets.is_some() {
            return Err(CliError::Usage(format!("--n {n} but {} secrets given", s.secrets.len())));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        s.secrets = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        if s.weights.len() != n {
            s.weights = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        }
        s.masks = None;
    }
    s.n = Some(n);
    s.validate()?;
    Ok(s)
}

fn run_protocol(kind: ProtocolKind, args: &RunArgs, verbose: u8) -> Result<i32, CliError> {
    let s = scenario_from_args(kind, args)?;
    let opts = RunOptions {
        executor: if args.threads { Executor::Threads } else { Executor::Sequential },
        timing: args.timing,
    };
    let (t, _, report) = run_with(&s, &opts)?;
    if verbose > 0 {
        for (k, out) in t.node_outputs.iter().enumerate() {
            eprintln!("node output {}: {} terms", k + 1, out.term_count());
        }
        if let Some(why) = &report.privacy_detail {
            eprintln!("privacy: {why}");
        }
    }
    emit(&report, &args.output)?;
    Ok(verdict_code(report.passed()))
}

#[derive(Debug, Serialize)]
struct IdentityRow {
    n: usize,
    trials: usize,
    max_relative_error: f64,
    verdict: String,
}

#[derive(Debug, Serialize)]
struct IdentityReport {
    tolerance: f64,
    truncation: usize,
    seed: u64,
    verdict: String,
    rows: Vec<IdentityRow>,
}

/// A random dense coefficient set with entries in `[−1, 1]`.
pub fn random_dense_set(rng: &mut ChaCha8Rng, m: usize) -> CoefficientSet {
    let alpha0 = rng.gen_range(-1.0..1.0);
    let cosine = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let sine = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    CoefficientSet::dense(alpha0, cosine, sine)
}

/// Largest relative disagreement between the pipeline and product paths.
pub fn identity_error(sets: &[CoefficientSet]) -> Result<f64, CliError> {
    let (pipe, prod) = parseval_constants(sets, 1e-14)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    Ok(rel(pipe.c, prod.c).max(rel(pipe.s, prod.s)))
}

fn verify_identity(args: &IdentityArgs, verbose: u8) -> Result<i32, CliError> {
    let ns: Vec<usize> = match args.n {
        Some(n) if n < 2 => return Err(CliError::Usage(format!("--n must be ≥ 2, got {n}"))),
        Some(n) => vec![n],
        None => (2..=6).collect(),
    };
    if args.truncation == 0 || args.trials == 0 {
        return Err(CliError::Usage("--truncation and --trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut rows = Vec::new();
    for n in ns {
        let mut worst = 0.0f64;
        for trial in 0..args.trials {
            let sets: Vec<_> = (0..n).map(|_| random_dense_set(&mut rng, args.truncation)).collect();
            let err = identity_error(&sets)?;
            if verbose > 1 {
                eprintln!("n = {n} trial {trial}: {err:.3e}");
            }
            worst = worst.max(err);
        }
        let ok = worst <= args.tolerance;
        rows.push(IdentityRow {
            n,
            trials: args.trials,
            max_relative_error: worst,
            verdict: if ok { PASS } else { FAIL }.to_string(),
        });
    }
    let pass = rows.iter().all(|r| r.verdict == PASS);
    let report = IdentityReport {
        tolerance: args.tolerance,
        truncation: args.truncation,
        seed: args.seed,
        verdict: if pass { PASS } else { FAIL }.to_string(),
        rows,
    };
    emit(&report, &args.output)?;
    Ok(verdict_code(pass))
}

#[derive(Debug, Serialize)]
struct ResidualOutput {
    n: usize,
    seed: u64,
    expected: f64,
    display_re: f64,
    display_im: f64,
    protocol_re: f64,
    protocol_im: f64,
    oracle_re: f64,
    oracle_im: f64,
    difference: f64,
    scale: f64,
    tolerance: f64,
    verdict: String,
}

fn diagnose_residual(args: &ResidualArgs) -> Result<i32, CliError> {
    let n = args.n;
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be ≥ 2, got {n}")));
    }
    let mode = match args.mode {
        ModeArg::Rank1 => Mode::Rank1,
        ModeArg::Dense => Mode::Dense { truncation: args.truncation },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let inputs: Vec<SecretInput> = (0..n)
        .map(|_| SecretInput::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)))
        .collect();
    let y = rng.gen_range(0.5..3.0);
    let basis = Basis::new(args.tau, 1.0, n, mode)?;
    let masks = sample_masks(&inputs, mode, 0, args.seed);
    let (report, pass) = match residual_diagnostic(&inputs, y, &masks, &basis) {
        Ok(r) => (r, true),
        Err(ProtocolError::OracleMismatch { .. }) => {
            let t = crate::protocol::n_party_round(&inputs, y, &masks, &basis)?;
            let (oracle, scale) =
                crate::protocol::residual_oracle(&inputs, y, &masks, &basis, t.unit)?;
            let r = crate::protocol::ResidualReport {
                display: t.display,
                expected: t.expected,
                protocol: t.residual,
                oracle,
                scale: scale.max(1.0),
            };
            (r, false)
        }
        Err(e) => return Err(e.into()),
    };
    let pass = pass && report.difference() <= args.tolerance * report.scale;
    emit(
        &ResidualOutput {
            n,
            seed: args.seed,
            expected: report.expected,
            display_re: report.display.re,
            display_im: report.display.im,
            protocol_re: report.protocol.re,
            protocol_im: report.protocol.im,
            oracle_re: report.oracle.re,
            oracle_im: report.oracle.im,
            difference: report.difference(),
            scale: report.scale,
            tolerance: args.tolerance,
            verdict: if pass { PASS } else { FAIL }.to_string(),
        },
        &args.output,
    )?;
    Ok(verdict_code(pass))
}

#[derive(Debug, Serialize)]
struct ApproxOutput {
    function: ApproxFunction,
    m: usize,
    m2: usize,
    bound: f64,
    grid_error: f64,
    verdict: String,
    coefficients: Vec<Vec<f64>>,
}

/// Interpolates `f` at degrees `(m, m2)` with its derivative bounds.
pub fn approx_model(f: ApproxFunction, m: usize, m2: usize) -> Result<ChebModel, CliError> {
    let (da, db) = f.derivative_bounds(m, m2);
    Ok(interp_2d(|a, b| f.eval(a, b), m, m2)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .with_derivative_bounds(da, db))
}

fn approx(args: &ApproxArgs) -> Result<i32, CliError> {
    if args.grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    let model = approx_model(args.function, args.m, args.m2)?;
    let bound = model.bound.unwrap_or(f64::INFINITY);
    let grid_error = model.grid_error(|a, b| args.function.eval(a, b), args.grid);
    let pass = grid_error <= bound;
    emit(
        &ApproxOutput {
            function: args.function,
            m: args.m,
            m2: args.m2,
            bound,
            grid_error,
            verdict: if pass { PASS } else { FAIL }.to_string(),
            coefficients: model.coefficients,
        },
        &args.output,
    )?;
    Ok(verdict_code(pass))
}

#[derive(Debug, Serialize)]
struct NodeLine {
    node: String,
    computed_re: f64,
    computed_im: f64,
    reference_re: f64,
    reference_im: f64,
}

#[derive(Debug, Serialize)]
struct ExampleOutput {
    display_re: f64,
    display_im: f64,
    expected: f64,
    display_ok: bool,
    nodes_ok: bool,
    verdict: String,
    nodes: Vec<NodeLine>,
}

fn worked_example_command(args: &OutputArgs) -> Result<i32, CliError> {
    let w = worked_example()?;
    let pass = w.passed();
    emit(
        &ExampleOutput {
            display_re: w.report.display_re,
            display_im: w.report.display_im,
            expected: w.report.expected,
            display_ok: w.display_ok,
            nodes_ok: w.nodes_ok,
            verdict: if pass { PASS } else { FAIL }.to_string(),
            nodes: w
                .nodes
                .iter()
                .map(|(k, got, want)| NodeLine {
                    node: format!("N{k}"),
                    computed_re: got.re,
                    computed_im: got.im,
                    reference_re: want.re,
                    reference_im: want.im,
                })
                .collect(),
        },
        args,
    )?;
    Ok(verdict_code(pass))
}

/// Runs a parsed command and returns its exit code.
pub fn execute(cli: &Cli) -> i32 {
    let v = cli.verbose;
    let result = match &cli.command {
        Command::RunTwoParty(a) => run_protocol(ProtocolKind::TwoParty, a, v),
        Command::RunNParty(a) => run_protocol(ProtocolKind::NParty, a, v),
        Command::RunMultiNode(a) => run_protocol(ProtocolKind::MultiNode, a, v),
        Command::RunBaseline(a) => run_protocol(ProtocolKind::Baseline, a, v),
        Command::VerifyIdentity(a) => verify_identity(a, v),
        Command::DiagnoseResidual(a) => diagnose_residual(a),
        Command::Approx(a) => approx(a),
        Command::WorkedExample(a) => worked_example_command(a),
    };
    match result {
        Ok(code) => code,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            eprintln!("usage: fmpc <COMMAND> [OPTIONS]; see `fmpc --help`");
            EXIT_USAGE
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            EXIT_FAIL
        }
    }
}

/// Parses `argv` and runs it.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => execute(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            code
        }
    }
}
