use fmpc::protocol::ProtocolKind;
use fmpc::sim::{run, run_with, Executor, RunOptions, Scenario};

fn scenario(kind: ProtocolKind, seed: u64) -> Scenario {
    let mut s = Scenario::new(kind, vec![1.4, -0.8, 2.3]);
    s.weights = vec![0.5, 1.5, -2.0];
    s.y = -1.25;
    s.seed = seed;
    if kind == ProtocolKind::MultiNode {
        s.iota = 1;
    }
    s
}

fn serialized(s: &Scenario, opts: &RunOptions) -> (String, String, String) {
    let (t, log, report) = run_with(s, opts).unwrap();
    (
        serde_json::to_string(&t).unwrap(),
        serde_json::to_string(&log).unwrap(),
        report.to_text().unwrap(),
    )
}

#[test]
fn same_seed_same_bytes() {
    for kind in [ProtocolKind::NParty, ProtocolKind::MultiNode] {
        let s = scenario(kind, 17);
        let first = serialized(&s, &RunOptions::default());
        assert_eq!(first, serialized(&s, &RunOptions::default()));
        let toml_a = toml::to_string(&run(&s).unwrap().1).unwrap();
        let toml_b = toml::to_string(&run(&s).unwrap().1).unwrap();
        assert_eq!(toml_a, toml_b);
    }
}

#[test]
fn schedule_does_not_matter() {
    let s = scenario(ProtocolKind::MultiNode, 5);
    let base = serialized(&s, &RunOptions::default());
    for executor in [Executor::Shuffled(1), Executor::Shuffled(99), Executor::Threads] {
        let opts = RunOptions { executor, ..RunOptions::default() };
        assert_eq!(serialized(&s, &opts), base);
    }
}

#[test]
fn seeds_change_views_not_display() {
    let (ta, la, ra) = run(&scenario(ProtocolKind::NParty, 1)).unwrap();
    let (tb, lb, rb) = run(&scenario(ProtocolKind::NParty, 2)).unwrap();
    assert!((ta.display - tb.display).norm() < 1e-8);
    assert_ne!(la, lb);
    assert_eq!(ra.verdict, "PASS");
    assert_eq!(rb.verdict, "PASS");
}

#[test]
fn message_complexity() {
    let (_, log, _) = run(&scenario(ProtocolKind::NParty, 3)).unwrap();
    let c = log.counts();
    assert_eq!((c.user_to_node, c.node_to_display, c.node_to_node), (12, 4, 0));

    let (_, log, _) = run(&scenario(ProtocolKind::MultiNode, 3)).unwrap();
    let c = log.counts();
    assert_eq!(c.user_to_node, 3 * 12);
    assert_eq!(c.category_to_second_level, 12);
    assert_eq!((c.node_to_display, c.node_to_node), (4, 0));
}

#[test]
fn scenario_round_trips_through_toml() {
    let s = scenario(ProtocolKind::MultiNode, 8);
    let text = s.to_toml().unwrap();
    assert_eq!(Scenario::from_toml(&text).unwrap(), s);
    assert!(Scenario::from_toml("protocol = \"n-party\"\nsecrets = [1.0]\nbogus = 1").is_err());
}
