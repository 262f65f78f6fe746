use proptest::prelude::*;

use dcfsim::config::ScenarioConfig;
use dcfsim::frame::{FrameType, NodeId};
use dcfsim::scenario::{generate_random_scenario, FlowSpec, NodeSpec, Simulation};
use dcfsim::trace::{check_invariants, TraceKind, TraceRecord};

fn config(nodes: Vec<NodeSpec>, flows: Vec<FlowSpec>, duration: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig {
        duration,
        trace: true,
        nodes,
        flows,
        ..ScenarioConfig::default()
    };
    c.measure.start = 0.0;
    c.fill_defaults();
    c
}

fn assert_clean(cfg: &ScenarioConfig, trace: &[TraceRecord]) {
    let v = check_invariants(trace, &cfg.mac_params());
    assert!(v.is_empty(), "{} violations, first: {}", v.len(), v[0]);
}

/// After every ACK reception the sender's cw is back at cw_min.
fn assert_cw_reset_after_ack(cfg: &ScenarioConfig, trace: &[TraceRecord]) {
    let cw_min = cfg.mac.cw_min;
    let mut cw = std::collections::HashMap::new();
    for r in trace {
        match r.kind {
            TraceKind::Cw { cw: c } => {
                cw.insert(r.node, c);
            }
            TraceKind::AckRx { .. } => {
                assert_eq!(*cw.get(&r.node).unwrap_or(&cw_min), cw_min, "at t={}", r.time);
            }
            _ => {}
        }
    }
}

#[test]
fn two_node_saturated_flow_never_collides() {
    let cfg = config(
        vec![NodeSpec::at(0, 0.0, 0.0), NodeSpec::at(1, 120.0, 0.0)],
        vec![FlowSpec::saturated(0, 1)],
        5.0,
    );
    let out = Simulation::run_config(&cfg).unwrap();
    let collisions = out
        .trace
        .iter()
        .filter(|r| matches!(r.kind, TraceKind::Collision { .. }))
        .count();
    assert_eq!(collisions, 0);
    assert_eq!(out.metrics.flows[0].total.retransmissions, 0);
    assert_clean(&cfg, &out.trace);
    assert_cw_reset_after_ack(&cfg, &out.trace);
}

#[test]
fn saturated_source_keeps_mac_busy() {
    let cfg = config(
        vec![NodeSpec::at(0, 0.0, 0.0), NodeSpec::at(1, 120.0, 0.0)],
        vec![FlowSpec::saturated(0, 1)],
        2.0,
    );
    let out = Simulation::run_config(&cfg).unwrap();
    // Every ACK is followed by a hand-off to the MAC at the same instant.
    let acks: Vec<f64> = out
        .trace
        .iter()
        .filter(|r| matches!(r.kind, TraceKind::AckRx { .. }))
        .map(|r| r.time)
        .collect();
    let to_mac: Vec<f64> = out
        .trace
        .iter()
        .filter(|r| matches!(r.kind, TraceKind::ToMac { .. }))
        .map(|r| r.time)
        .collect();
    assert!(acks.len() > 1000);
    for t in &acks {
        assert!(to_mac.iter().any(|m| m == t), "no hand-off at {t}");
    }
}

#[test]
fn deliveries_preserve_fifo_order() {
    let cfg = config(
        vec![
            NodeSpec::at(0, 0.0, 0.0),
            NodeSpec::at(1, 100.0, 0.0),
            NodeSpec::at(2, 50.0, 80.0),
        ],
        vec![FlowSpec::saturated(0, 1), FlowSpec::saturated(2, 1)],
        3.0,
    );
    let out = Simulation::run_config(&cfg).unwrap();
    let mut last = [None::<u64>; 2];
    for r in &out.trace {
        if let TraceKind::DataRx {
            flow,
            seq,
            duplicate: false,
            ..
        } = r.kind
        {
            if let Some(prev) = last[flow] {
                assert!(seq > prev, "flow {flow}: {seq} after {prev}");
            }
            last[flow] = Some(seq);
        }
    }
    assert!(last.iter().all(Option::is_some));
    assert_clean(&cfg, &out.trace);
    assert!(out.metrics.conservation_violations().is_empty());
}

#[test]
fn rts_cts_exchange_carries_traffic() {
    let mut cfg = config(
        vec![NodeSpec::at(0, 0.0, 0.0), NodeSpec::at(1, 100.0, 0.0)],
        vec![FlowSpec::saturated(0, 1)],
        3.0,
    );
    cfg.mac.rts_threshold = 0;
    let out = Simulation::run_config(&cfg).unwrap();
    let kinds = |ft: FrameType| {
        out.trace
            .iter()
            .filter(|r| matches!(r.kind, TraceKind::TxStart { ftype, .. } if ftype == ft))
            .count()
    };
    let (rts, cts, data, ack) = (
        kinds(FrameType::Rts),
        kinds(FrameType::Cts),
        kinds(FrameType::Data),
        kinds(FrameType::Ack),
    );
    assert!(data > 1000);
    // The run may end with a handshake in progress.
    assert!(rts - data <= 1 && cts - data <= 1, "{rts} {cts} {data}");
    assert!(data - ack <= 1);
    // Basic access is faster than the four-way handshake.
    cfg.mac.rts_threshold = 3000;
    let basic = Simulation::run_config(&cfg).unwrap();
    assert!(basic.metrics.flows[0].throughput_bps > out.metrics.flows[0].throughput_bps);
    assert_clean(&cfg, &out.trace);
}

#[test]
fn rts_cts_shields_hidden_terminals() {
    // Shrink sensing range to the decode range so that 0 and 2, 400 m
    // apart, cannot hear each other while both reach 1 in the middle.
    let nodes = vec![
        NodeSpec::at(0, 0.0, 0.0),
        NodeSpec::at(1, 200.0, 0.0),
        NodeSpec::at(2, 400.0, 0.0),
    ];
    let flows = vec![FlowSpec::saturated(0, 1), FlowSpec::saturated(2, 1)];
    let mut basic = config(nodes, flows, 5.0);
    basic.phy.cs_thresh = basic.phy.rx_thresh.map(|r| r * 0.9);
    basic.measure.start = 1.0;
    let mut rts = basic.clone();
    rts.mac.rts_threshold = 0;
    let b = Simulation::run_config(&basic).unwrap();
    let r = Simulation::run_config(&rts).unwrap();
    // Share of DATA frames lost to overlap at the receiver.
    let data_loss = |o: &dcfsim::scenario::RunOutput| {
        let lost = o
            .trace
            .iter()
            .filter(|t| t.node == NodeId(1))
            .filter(|t| matches!(t.kind, TraceKind::Collision { frame, .. } if frame.ftype == FrameType::Data))
            .count();
        let sent = o
            .trace
            .iter()
            .filter(|t| matches!(t.kind, TraceKind::TxStart { ftype: FrameType::Data, .. }))
            .count();
        lost as f64 / sent as f64
    };
    let (lb, lr) = (data_loss(&b), data_loss(&r));
    assert!(lb > 0.1, "basic loss {lb}");
    assert!(lr < lb / 4.0, "rts loss {lr} vs basic {lb}");
    assert_clean(&rts, &r.trace);
    assert_clean(&basic, &b.trace);
}

#[test]
fn capture_resolves_identically_without_fading() {
    let mut cfg = ScenarioConfig::preset("fig8_capture").unwrap();
    cfg.mac.eifs_enabled = false;
    cfg.duration = 3.0;
    cfg.trace = true;
    let out = Simulation::run_config(&cfg).unwrap();
    let strong = NodeId(0);
    let mut captures = 0;
    for r in &out.trace {
        match r.kind {
            TraceKind::Capture { kept, lost, .. } if r.node == NodeId(2) => {
                assert_eq!(kept.src, strong);
                assert_eq!(lost.src, NodeId(1));
                captures += 1;
            }
            TraceKind::Collision { frame, .. } if r.node == NodeId(2) => {
                panic!("collision at the base station: {frame:?}");
            }
            _ => {}
        }
    }
    assert!(captures > 0);
    assert_clean(&cfg, &out.trace);
}

#[test]
fn identical_seeds_give_identical_state_sequences() {
    let cfg = ScenarioConfig {
        trace: true,
        duration: 2.0,
        ..generate_random_scenario(8, (400.0, 400.0), 5, 3).unwrap()
    };
    let a = Simulation::run_config(&cfg).unwrap();
    let b = Simulation::run_config(&cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    let mut other = cfg.clone();
    other.seed = 4;
    let c = Simulation::run_config(&other).unwrap();
    assert_ne!(a.trace, c.trace);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// Random topologies, with and without fading, EIFS or RTS/CTS, never
    /// break a MAC invariant and always balance their books.
    #[test]
    fn random_scenarios_hold_invariants(
        seed in 1u64..10_000,
        n in 2usize..9,
        flows in 1usize..5,
        fading in any::<bool>(),
        eifs in any::<bool>(),
        rts in any::<bool>(),
    ) {
        let flows = flows.min(n * (n - 1));
        let mut cfg = generate_random_scenario(n, (600.0, 600.0), flows, seed).unwrap();
        cfg.duration = 2.0;
        cfg.measure.start = 0.5;
        cfg.trace = true;
        for f in &mut cfg.flows {
            if seed % 2 == 0 {
                f.interval = 0.0;
            }
        }
        if fading {
            cfg.radio.fading = dcfsim::radio::FadingModel::Rayleigh;
        }
        cfg.mac.eifs_enabled = eifs;
        if rts {
            cfg.mac.rts_threshold = 0;
        }
        let out = Simulation::run_config(&cfg).unwrap();
        let v = check_invariants(&out.trace, &cfg.mac_params());
        prop_assert!(v.is_empty(), "{}", v[0]);
        prop_assert!(out.metrics.conservation_violations().is_empty(), "{:?}", out.metrics.conservation_violations());
        for f in &out.metrics.flows {
            prop_assert!(f.window.delivered_bytes <= f.window.data_tx.max(f.total.data_tx) * f.payload as u64);
        }
    }
}
