//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::time::Instant;

use fmpc::chebyshev::cheb_nodes;
use fmpc::cli::{approx_model, identity_error, random_dense_set, ApproxFunction};
use fmpc::fourier::{
    cosine_coefficients, moment, moment_closed_form_n2, normalized_cosine, series_product_sum,
};
use fmpc::protocol::{
    chain_deviation, expected_value, lift_masks, n_party_round, residual_diagnostic,
    sample_masks, two_party_round, BaselineMode, Basis, Mode, NodeId, ProtocolKind, SecretInput,
    RESIDUAL_TOLERANCE,
};
use fmpc::sim::{self, Scenario, PASS};
use fmpc::theta::{eval_grade, ThetaExpr};
use fmpc::Complex64;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self { pass, detail: detail.into() }
    }
}

fn random_inputs(rng: &mut ChaCha8Rng, n: usize) -> Vec<SecretInput> {
    (0..n)
        .map(|_| SecretInput::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)))
        .collect()
}

fn nonzero(rng: &mut ChaCha8Rng) -> f64 {
    let v: f64 = rng.gen_range(0.01..10.0);
    if rng.gen_bool(0.5) {
        v
    } else {
        -v
    }
}

fn worked_example() -> Outcome {
    let start = Instant::now();
    let w = match sim::worked_example() {
        Ok(w) => w,
        Err(e) => return Outcome::new(false, e.to_string()),
    };
    let secs = start.elapsed().as_secs_f64();
    let r = &w.report;
    let display_ok = (r.display_re - sim::WORKED_DISPLAY).abs() <= 1e-6 && r.display_im.abs() <= 1e-9;
    let worst_node = w
        .nodes
        .iter()
        .map(|(_, got, want)| (got.re - want.re).abs().max((got.im - want.im).abs()))
        .fold(0.0, f64::max);
    Outcome::new(
        display_ok && w.nodes_ok && secs < 1.0,
        format!(
            "display {:.9}{:+.1e}i, worst node deviation {worst_node:.1e}, {secs:.3}s",
            r.display_re, r.display_im
        ),
    )
}

fn normalization() -> Outcome {
    let mut worst = 0.0f64;
    for k in 1..=9 {
        let tau = k as f64 / 10.0;
        for n in 2..=5u32 {
            let cs = match normalized_cosine(tau, 1.0, n, 1e-15) {
                Ok(cs) => cs,
                Err(e) => return Outcome::new(false, format!("τ={tau} n={n}: {e}")),
            };
            let m = match moment(&cs, n, 1e-15) {
                Ok(m) => m.value,
                Err(e) => return Outcome::new(false, format!("τ={tau} n={n}: {e}")),
            };
            worst = worst.max((cs.alpha0().powi(n as i32) / 2.0 + m - 1.0).abs());
        }
    }
    Outcome::new(worst <= 1e-9, format!("max |α₀ⁿ/2 + Mₙ − 1| = {worst:.2e}"))
}

fn closed_form_moment() -> Outcome {
    let cs = cosine_coefficients(1.0 / 6.0, 1.0, 2).expect("valid rule");
    let closed = moment_closed_form_n2(&cs).expect("single-factor rule");
    let summed = series_product_sum(&[&cs, &cs], 1e-15, 20_000_000).expect("converges");
    let diff = (closed - summed.value).abs();
    Outcome::new(
        diff <= 1e-10,
        format!("closed {closed:.15e}, truncated {:.15e} ({} terms), diff {diff:.1e}", summed.value, summed.terms),
    )
}

fn parseval_dual_path() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for n in 2..=6 {
        let start = Instant::now();
        for _ in 0..20 {
            let sets: Vec<_> = (0..n).map(|_| random_dense_set(&mut rng, 32)).collect();
            match identity_error(&sets) {
                Ok(e) => worst = worst.max(e),
                Err(e) => return Outcome::new(false, format!("n={n}: {e}")),
            }
        }
        slowest = slowest.max(start.elapsed().as_secs_f64());
    }
    Outcome::new(
        worst <= 1e-9 && slowest < 1.0,
        format!("max relative disagreement {worst:.2e}, slowest n {slowest:.3}s"),
    )
}

fn theta_strategy() -> impl Strategy<Value = ThetaExpr> {
    let coefficient = (0.05f64..1.0, 0.0f64..std::f64::consts::TAU)
        .prop_map(|(r, t)| Complex64::from_polar(r, t));
    prop::collection::vec((0u32..=64, coefficient), 1..6).prop_map(ThetaExpr::from_terms)
}

fn theta_suite() -> Outcome {
    let config = Config { cases: 1000, failure_persistence: None, ..Config::default() };
    let mut runner = TestRunner::new_with_rng(
        config,
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let three = (theta_strategy(), theta_strategy(), theta_strategy());
    let laws = runner.run(&three, |(a, b, c)| {
        let ab = a.star_mul(&b).unwrap();
        prop_assert!(ab.approx_eq(&b.star_mul(&a).unwrap(), 1e-14), "commutativity");
        let left = a.star_mul(&b.star_mul(&c).unwrap()).unwrap();
        let right = ab.star_mul(&c).unwrap();
        prop_assert!(left.approx_eq(&right, 1e-13), "associativity");
        let dist_l = a.star_mul(&b.add(&c).unwrap()).unwrap();
        let dist_r = ab.add(&a.star_mul(&c).unwrap()).unwrap();
        prop_assert!(dist_l.approx_eq(&dist_r, 1e-13), "distributivity");
        let lin = b.add(&c).unwrap().eval_t().unwrap() - b.eval_t().unwrap() - c.eval_t().unwrap();
        prop_assert!(lin.norm() <= 1e-13, "EvalT linearity");
        let direct: Complex64 = a.terms().map(|(g, k)| k * eval_grade(g)).sum();
        prop_assert!((a.eval_t().unwrap() - direct).norm() <= 1e-14, "grade map");
        prop_assert_eq!(a.star_mul(&ThetaExpr::one()).unwrap(), a.clone());
        Ok(())
    });
    if let Err(e) = laws {
        return Outcome::new(false, e.to_string());
    }

    // (x₁ + iy₁Θ) ∗ (x₂ + iy₂Θ²), expanded by hand
    let (x1, y1, x2, y2) = (0.7, -1.3, 2.1, 0.4);
    let i = Complex64::new(0.0, 1.0);
    let re = |v: f64| Complex64::new(v, 0.0);
    let a = ThetaExpr::from_terms([(0, re(x1)), (1, i * y1)]);
    let b = ThetaExpr::from_terms([(0, re(x2)), (2, i * y2)]);
    let p = a.star_mul(&b).unwrap();
    let symbolic = ThetaExpr::from_terms([
        (0, re(x1 * x2)),
        (1, i * (x2 * y1)),
        (2, i * (x1 * y2)),
        (3, re(-y1 * y2)),
    ]);
    let numeric = Complex64::new(x1 * x2 - x2 * y1, -(x1 * y2 + y1 * y2));
    let ok = p.approx_eq(&symbolic, 1e-15) && (p.eval_t().unwrap() - numeric).norm() < 1e-15;
    Outcome::new(ok, "ring laws over 1000 cases, worked product symbolic and numeric")
}

fn correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for n in [2usize, 3] {
        let basis = Basis::new(if n == 2 { 1.0 / 6.0 } else { 0.3 }, 1.0, n, Mode::Rank1).unwrap();
        for trial in 0..100u64 {
            let ins = random_inputs(&mut rng, n);
            let y = nonzero(&mut rng);
            let masks = sample_masks(&ins, Mode::Rank1, 0, trial);
            let t = if n == 2 {
                two_party_round(ins[0], ins[1], y, &masks, &basis)
            } else {
                n_party_round(&ins, y, &masks, &basis)
            };
            let t = match t {
                Ok(t) => t,
                Err(e) => return Outcome::new(false, e.to_string()),
            };
            let want = expected_value(&ins, y);
            worst = worst.max((t.display - want).norm() / (1.0 + want.abs()));
        }
    }
    let ins = [SecretInput::new(1.7, 2.0), SecretInput::new(-0.6, -1.5), SecretInput::new(2.4, 0.5)];
    let basis = Basis::new(0.3, 1.0, 3, Mode::Rank1).unwrap();
    let displays: Vec<Complex64> = (0..50)
        .map(|seed| n_party_round(&ins, -2.5, &sample_masks(&ins, Mode::Rank1, 0, seed), &basis).unwrap().display)
        .collect();
    let spread = displays.iter().map(|d| (d - displays[0]).norm()).fold(0.0, f64::max);
    Outcome::new(
        worst <= 1e-8 && spread <= 1e-8,
        format!("worst scaled error {worst:.2e}, display spread over 50 seeds {spread:.2e}"),
    )
}

fn residual_honesty() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut smallest_residual = f64::INFINITY;
    for n in 4..=6 {
        let basis = Basis::new(0.35, 1.0, n, Mode::Rank1).unwrap();
        for trial in 0..20u64 {
            let ins = random_inputs(&mut rng, n);
            let y = nonzero(&mut rng);
            let masks = sample_masks(&ins, Mode::Rank1, 0, trial);
            match residual_diagnostic(&ins, y, &masks, &basis) {
                Ok(r) => {
                    worst = worst.max(r.difference() / r.scale);
                    smallest_residual = smallest_residual.min(r.protocol.norm());
                }
                Err(e) => return Outcome::new(false, format!("n={n}: {e}")),
            }
        }
    }
    let spot = ThetaExpr::linear(1.0, 1.0)
        .power(4)
        .add(&ThetaExpr::linear(-1.0, 1.0).power(4))
        .unwrap()
        .eval_t()
        .unwrap();
    let spot_ok = spot == Complex64::new(-12.0, 0.0);
    Outcome::new(
        worst <= RESIDUAL_TOLERANCE && spot_ok,
        format!(
            "max |protocol − oracle| / scale {worst:.2e}, smallest nonzero residual {smallest_residual:.2e}, spot {spot}"
        ),
    )
}

fn multi_node() -> Outcome {
    let mut worst_display = 0.0f64;
    let mut worst_chain = 0.0f64;
    let mut counts = Vec::new();
    for iota in [1usize, 2] {
        for n in [2usize, 3] {
            let mut s = Scenario::new(ProtocolKind::MultiNode, (0..n).map(|j| 1.3 - 0.9 * j as f64).collect());
            s.iota = iota;
            s.y = -1.7;
            s.seed = 40 + iota as u64;
            let (t, log, report) = match sim::run(&s) {
                Ok(r) => r,
                Err(e) => return Outcome::new(false, e.to_string()),
            };
            let basis = s.basis().unwrap().unwrap();
            let base = sample_masks(&s.inputs(), Mode::Rank1, 0, s.seed);
            let four = n_party_round(&s.inputs(), s.y, &base, &basis).unwrap();
            let lifted = multi_node_round_display(&s, &base, iota, &basis);
            worst_display = worst_display
                .max((t.display - four.display).norm())
                .max((lifted - four.display).norm());
            for u in &t.masks.users {
                let sup = u.supplementary.as_ref().expect("multi-node masks");
                for chain in sup.zero.iter().chain(&sup.stream) {
                    worst_chain = worst_chain.max(chain_deviation(chain));
                }
            }
            let kappa = 3 * iota;
            let records = log.counts().category_to_second_level;
            counts.push((iota, records));
            if records != 4 * kappa || report.internode != PASS {
                return Outcome::new(false, format!("ι={iota}: {records} category records, want {}", 4 * kappa));
            }
        }
    }
    Outcome::new(
        worst_display <= 1e-8 && worst_chain <= 1e-12,
        format!(
            "max display gap {worst_display:.2e}, max chain deviation {worst_chain:.2e}, category records {counts:?}"
        ),
    )
}

fn multi_node_round_display(s: &Scenario, base: &fmpc::protocol::MaskSet, iota: usize, basis: &Basis) -> Complex64 {
    fmpc::protocol::multi_node_round(&s.inputs(), s.y, iota, &lift_masks(base, iota, s.seed), basis)
        .unwrap()
        .display
}

fn chebyshev() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (f, m, m2) in [
        (ApproxFunction::Square, 1, 0),
        (ApproxFunction::Square, 4, 0),
        (ApproxFunction::Sin2x, 8, 0),
        (ApproxFunction::Exp, 6, 0),
        (ApproxFunction::AbCos, 8, 8),
        (ApproxFunction::AbCos, 12, 12),
    ] {
        let model = approx_model(f, m, m2).unwrap();
        let bound = model.bound.unwrap();
        let err = model.grid_error(|a, b| f.eval(a, b), 201);
        ok &= err <= bound + 1e-15;
        lines.push(format!("{f:?}({m},{m2}) {err:.1e}≤{bound:.1e}"));
    }
    let sq = approx_model(ApproxFunction::Square, 1, 0).unwrap();
    let sq_err = sq.grid_error(|a, _| a * a, 201);
    let exact = (sq_err - 0.5).abs() <= 1e-12 && (sq.bound.unwrap() - 0.5).abs() <= 1e-12;
    let h2 = 2f64.sqrt() / 2.0;
    let h3 = 3f64.sqrt() / 2.0;
    let c8 = (2.0 + 2f64.sqrt()).sqrt() / 2.0;
    let s8 = (2.0 - 2f64.sqrt()).sqrt() / 2.0;
    let want: [&[f64]; 4] = [&[0.0], &[h2, -h2], &[h3, 0.0, -h3], &[c8, s8, -s8, -c8]];
    let node_gap = want
        .iter()
        .enumerate()
        .flat_map(|(m, w)| cheb_nodes(m).into_iter().zip(w.iter()).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max);
    Outcome::new(
        ok && exact && node_gap <= 1e-15,
        format!("{}; x² at m=1 error {sq_err}; node gap {node_gap:.1e}", lines.join(", ")),
    )
}

struct PrivacyCase {
    label: &'static str,
    scenario: Scenario,
    tolerated: bool,
}

fn privacy_cases() -> Vec<PrivacyCase> {
    let node = |s: &str| s.parse::<NodeId>().unwrap();
    let with = |kind: ProtocolKind, secrets: Vec<f64>, corrupt: &[&str], seed: u64| {
        let mut s = Scenario::new(kind, secrets);
        s.corrupted = corrupt.iter().map(|c| node(c)).collect();
        s.seed = seed;
        s.y = -2.0;
        if kind == ProtocolKind::MultiNode {
            s.iota = 1;
        }
        s
    };
    let mut cases = Vec::new();
    for k in ["N1", "N2", "N3", "N4"] {
        cases.push(PrivacyCase {
            label: "two-party single node",
            scenario: with(ProtocolKind::TwoParty, vec![2.2, 4.1], &[k], 3),
            tolerated: true,
        });
    }
    cases.push(PrivacyCase {
        label: "n-party single node",
        scenario: with(ProtocolKind::NParty, vec![1.2, -0.4, 2.5], &["N3"], 4),
        tolerated: true,
    });
    for mode in [BaselineMode::Sum, BaselineMode::Product] {
        let mut s = with(ProtocolKind::Baseline, vec![1.5, 2.5, -0.5], &["N1", "N2", "N3"], 5);
        s.baseline_mode = Some(mode);
        cases.push(PrivacyCase { label: "baseline, one honest node", scenario: s, tolerated: true });
    }
    cases.push(PrivacyCase {
        label: "multi-node partial category",
        scenario: with(ProtocolKind::MultiNode, vec![1.2, 0.7], &["A1", "A2"], 6),
        tolerated: true,
    });
    cases.push(PrivacyCase {
        label: "multi-node second-level node",
        scenario: with(ProtocolKind::MultiNode, vec![1.2, 0.7], &["L2"], 7),
        tolerated: true,
    });
    cases.push(PrivacyCase {
        label: "multi-node second-level node with its own category slot",
        scenario: with(ProtocolKind::MultiNode, vec![1.2, 0.7], &["A1", "L1"], 13),
        tolerated: true,
    });
    cases.push(PrivacyCase {
        label: "multi-node second-level node plus a slot of another category",
        scenario: with(ProtocolKind::MultiNode, vec![1.2, 0.7], &["A1", "L2"], 14),
        tolerated: true,
    });
    cases.push(PrivacyCase {
        label: "multi-node whole category plus one slot elsewhere",
        scenario: with(ProtocolKind::MultiNode, vec![1.2, 0.7], &["D1", "D2", "D3", "A1"], 8),
        tolerated: true,
    });
    cases.push(PrivacyCase {
        label: "multi-node maximal tolerated set",
        scenario: with(ProtocolKind::MultiNode, vec![1.2, 0.7], &["D1", "D2", "D3", "A1", "B1", "C1"], 9),
        tolerated: true,
    });
    cases.push(PrivacyCase {
        label: "two-party two nodes",
        scenario: with(ProtocolKind::TwoParty, vec![2.2, 4.1], &["N1", "N2"], 10),
        tolerated: false,
    });
    let mut all = with(ProtocolKind::Baseline, vec![1.5, 2.5], &["N1", "N2", "N3", "N4"], 11);
    all.baseline_mode = Some(BaselineMode::Sum);
    cases.push(PrivacyCase { label: "baseline all nodes", scenario: all, tolerated: false });
    cases.push(PrivacyCase {
        label: "multi-node two whole categories",
        scenario: with(
            ProtocolKind::MultiNode,
            vec![1.2, 0.7],
            &["C1", "C2", "C3", "D1", "D2", "D3"],
            12,
        ),
        tolerated: false,
    });
    cases
}

fn privacy() -> Outcome {
    let mut failures = Vec::new();
    let mut checked = 0;
    for case in privacy_cases() {
        checked += 1;
        let (_, _, report) = match sim::run(&case.scenario) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("{}: {e}", case.label));
                continue;
            }
        };
        if report.internode != PASS {
            failures.push(format!("{}: node-to-node traffic", case.label));
        }
        let good = if case.tolerated {
            report.privacy == PASS
        } else {
            report.privacy != PASS
        };
        if !good {
            let why = report.privacy_detail.unwrap_or_default();
            failures.push(format!("{} → {} ({why})", case.label, report.privacy));
        }
    }
    if failures.is_empty() {
        Outcome::new(true, format!("{checked} corruption sets behave as expected, no node-to-node traffic"))
    } else {
        Outcome::new(false, failures.join("; "))
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("worked example", worked_example),
        ("normalization identity", normalization),
        ("closed-form second moment", closed_form_moment),
        ("Parseval dual path", parseval_dual_path),
        ("Θ-algebra suite", theta_suite),
        ("protocol correctness n=2,3", correctness),
        ("residual honesty n=4..6", residual_honesty),
        ("multi-node equivalence", multi_node),
        ("Chebyshev bounds", chebyshev),
        ("privacy simulatability", privacy),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let out = check();
        let tag = if out.pass { "PASS" } else { "FAIL" };
        println!("{tag} {:>2} {name}: {}", k + 1, out.detail);
        failed += usize::from(!out.pass);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
