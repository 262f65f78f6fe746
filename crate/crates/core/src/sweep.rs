//! Parameter sweeps to CSV.
//!
//! Columns, in order:
//!
//! ```text
//! param,value,replication,seed,total_throughput_bps,
//! flow0_throughput_bps,flow0_share,flow0_captures,flow0_collisions,flow0_retry_drops,flow0_queue_drops,
//! flow1_...
//! ```
//!
//! One row per (value, replication), in value-major order. Replication `r`
//! runs with `seed + r`. Counters cover the measurement window.

use std::io::Write;

use rayon::prelude::*;

use crate::config::{ScenarioConfig, SweepParam, SweepSpec, SweepValue};
use crate::error::Result;
use crate::scenario::{Metrics, Simulation};

pub const FLOW_COLUMNS: [&str; 6] = ["throughput_bps", "share", "captures", "collisions", "retry_drops", "queue_drops"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: String,
    pub value: String,
    pub replication: u32,
    pub seed: u64,
    pub metrics: Metrics,
}

pub fn header(n_flows: usize) -> Vec<String> {
    let mut h: Vec<String> = ["param", "value", "replication", "seed", "total_throughput_bps"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for i in 0..n_flows {
        h.extend(FLOW_COLUMNS.iter().map(|c| format!("flow{i}_{c}")));
    }
    h
}

impl SweepRow {
    pub fn record(&self) -> Vec<String> {
        let mut r = vec![
            self.param.clone(),
            self.value.clone(),
            self.replication.to_string(),
            self.seed.to_string(),
            self.metrics.total_throughput_bps.to_string(),
        ];
        for f in &self.metrics.flows {
            r.push(f.throughput_bps.to_string());
            r.push(f.share.to_string());
            r.push(f.window.captures.to_string());
            r.push(f.window.collisions.to_string());
            r.push(f.window.retry_drops.to_string());
            r.push(f.window.queue_drops.to_string());
        }
        r
    }
}

/// The config for one sweep point.
pub fn point_config(base: &ScenarioConfig, param: SweepParam, value: &SweepValue, replication: u32) -> Result<ScenarioConfig> {
    let mut cfg = base.clone();
    cfg.sweep = None;
    cfg.apply(param, value)?;
    cfg.seed = cfg.seed.wrapping_add(replication as u64);
    cfg.validate()?;
    Ok(cfg)
}

/// Run every point (in parallel) and return rows in deterministic order.
pub fn run_sweep(base: &ScenarioConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points: Vec<(&SweepValue, u32)> = spec
        .values
        .iter()
        .flat_map(|v| (0..spec.replications).map(move |r| (v, r)))
        .collect();
    points
        .par_iter()
        .map(|&(value, replication)| {
            let cfg = point_config(base, spec.param, value, replication)?;
            let out = Simulation::run_config(&cfg)?;
            Ok(SweepRow {
                param: spec.param.to_string(),
                value: value.to_string(),
                replication,
                seed: cfg.seed,
                metrics: out.metrics,
            })
        })
        .collect()
}

/// A single run as a one-row table with the sweep schema.
pub fn single_row(cfg: &ScenarioConfig, metrics: Metrics) -> SweepRow {
    SweepRow {
        param: "-".into(),
        value: "-".into(),
        replication: 0,
        seed: cfg.seed,
        metrics,
    }
}

pub fn write_csv<W: Write>(w: W, n_flows: usize, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    out.write_record(header(n_flows))?;
    for r in rows {
        out.write_record(r.record())?;
    }
    out.flush()?;
    Ok(())
}
