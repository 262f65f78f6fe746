use super::{FlowSpec, NodeSpec};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::frame::NodeId;
use crate::sim::SimRng;

/// Payload and inter-packet interval of generated CBR flows.
const GEN_PAYLOAD: u32 = 512;
const GEN_INTERVAL: f64 = 0.05;

/// Uniform random static topology in a `width x height` area with
/// `n_flows` CBR flows between distinct random node pairs.
pub fn generate_random_scenario(n_nodes: usize, area: (f64, f64), n_flows: usize, seed: u64) -> Result<ScenarioConfig> {
    if seed == 0 {
        return Err(Error::input("seed cannot be 0"));
    }
    if n_nodes < 2 {
        return Err(Error::input(format!("need at least 2 nodes, got {n_nodes}")));
    }
    let (w, h) = area;
    if !(w > 0.0 && h > 0.0) || !w.is_finite() || !h.is_finite() {
        return Err(Error::input(format!("area must be positive, got {w} x {h}")));
    }
    let pairs = n_nodes * (n_nodes - 1);
    if n_flows > pairs {
        return Err(Error::input(format!("{n_flows} flows requested but only {pairs} ordered pairs exist")));
    }
    let mut rng = SimRng::new(seed);
    let nodes = (0..n_nodes)
        .map(|i| NodeSpec::at(i as u32, rng.uniform(0.0, w), rng.uniform(0.0, h)))
        .collect();
    let mut used = std::collections::HashSet::new();
    let mut flows = Vec::with_capacity(n_flows);
    while flows.len() < n_flows {
        let src = rng.index(n_nodes);
        let dst = rng.index(n_nodes);
        if src == dst || !used.insert((src, dst)) {
            continue;
        }
        flows.push(FlowSpec {
            src: NodeId(src as u32),
            dst: NodeId(dst as u32),
            payload: GEN_PAYLOAD,
            interval: GEN_INTERVAL,
            start: rng.uniform(0.0, 1.0),
            stop: None,
        });
    }
    let mut cfg = ScenarioConfig {
        seed,
        nodes,
        flows,
        ..ScenarioConfig::default()
    };
    cfg.fill_defaults();
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = generate_random_scenario(10, (500.0, 500.0), 4, 7).unwrap();
        let b = generate_random_scenario(10, (500.0, 500.0), 4, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_random_scenario(10, (500.0, 500.0), 4, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn seed_zero_rejected() {
        assert!(matches!(
            generate_random_scenario(10, (500.0, 500.0), 2, 0),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn positions_inside_area() {
        for seed in 1..50 {
            let c = generate_random_scenario(2, (500.0, 500.0), 1, seed).unwrap();
            for n in &c.nodes {
                assert!((0.0..=500.0).contains(&n.x) && (0.0..=500.0).contains(&n.y));
            }
            assert_ne!(c.flows[0].src, c.flows[0].dst);
        }
    }
}
