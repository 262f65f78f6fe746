use std::collections::HashMap;

use crate::frame::{FrameType, NodeId};
use crate::sim::SimTime;
use crate::trace::{TraceKind, TraceRecord};

/// Per-flow event counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub offered: u64,
    pub queue_drops: u64,
    pub to_mac: u64,
    /// DATA transmissions, first attempts and retries.
    pub data_tx: u64,
    pub retransmissions: u64,
    pub acked: u64,
    pub retry_drops: u64,
    pub delivered_frames: u64,
    pub delivered_bytes: u64,
    /// This flow's DATA frame survived an overlap at its addressee.
    pub captures: u64,
    /// This flow's DATA frame was the one discarded by a capture.
    pub capture_losses: u64,
    /// This flow's DATA frame was destroyed by a collision at its addressee.
    pub collisions: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct NodeCounters {
    pub data_tx: u64,
    pub retransmissions: u64,
    pub retry_drops: u64,
    pub queue_drops: u64,
    /// Collisions seen by this node's receiver (any frame).
    pub collisions_observed: u64,
    /// Captures resolved by this node's receiver.
    pub captures_observed: u64,
    /// Captures, anywhere, in which this node's frame was kept.
    pub captures_won: u64,
    /// This node's frames lost to collisions at their addressee.
    pub collided: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct FlowKey {
    src: NodeId,
    dst: NodeId,
    payload: u32,
}

/// Turns the trace stream into counters. Everything is counted twice: over
/// the whole run (for conservation checks) and inside the measurement
/// window (for reported throughput and counters).
#[derive(Debug, Clone, Default)]
pub struct MetricsCollector {
    t0: SimTime,
    t1: SimTime,
    flows: Vec<FlowKey>,
    node_ids: Vec<NodeId>,
    node_index: HashMap<NodeId, usize>,
    flow_total: Vec<FlowCounters>,
    flow_window: Vec<FlowCounters>,
    node_window: Vec<NodeCounters>,
}

impl MetricsCollector {
    /// `flows` is `(src, dst, payload)` in flow-index order.
    pub fn new(nodes: &[NodeId], flows: &[(NodeId, NodeId, u32)], window: (SimTime, SimTime)) -> Self {
        MetricsCollector {
            t0: window.0,
            t1: window.1,
            flows: flows
                .iter()
                .map(|&(src, dst, payload)| FlowKey { src, dst, payload })
                .collect(),
            node_ids: nodes.to_vec(),
            node_index: nodes.iter().enumerate().map(|(i, &n)| (n, i)).collect(),
            flow_total: vec![FlowCounters::default(); flows.len()],
            flow_window: vec![FlowCounters::default(); flows.len()],
            node_window: vec![NodeCounters::default(); nodes.len()],
        }
    }

    pub fn window(&self) -> (SimTime, SimTime) {
        (self.t0, self.t1)
    }

    fn in_window(&self, t: SimTime) -> bool {
        t >= self.t0 && t <= self.t1
    }

    fn flow(&mut self, f: Option<usize>, windowed: bool, mut update: impl FnMut(&mut FlowCounters)) {
        let Some(f) = f.filter(|&f| f < self.flows.len()) else {
            return;
        };
        update(&mut self.flow_total[f]);
        if windowed {
            update(&mut self.flow_window[f]);
        }
    }

    fn node(&mut self, n: NodeId, windowed: bool, update: impl FnOnce(&mut NodeCounters)) {
        if !windowed {
            return;
        }
        if let Some(&i) = self.node_index.get(&n) {
            update(&mut self.node_window[i]);
        }
    }

    pub fn observe(&mut self, rec: &TraceRecord) {
        let w = self.in_window(rec.time);
        let at = rec.node;
        match rec.kind {
            TraceKind::Offered { flow, .. } => self.flow(Some(flow), w, |c| c.offered += 1),
            TraceKind::QueueDrop { flow, .. } => {
                self.flow(Some(flow), w, |c| c.queue_drops += 1);
                self.node(at, w, |c| c.queue_drops += 1);
            }
            TraceKind::ToMac { flow, .. } => self.flow(Some(flow), w, |c| c.to_mac += 1),
            TraceKind::TxStart {
                ftype: FrameType::Data,
                retry,
                flow,
                ..
            } => {
                self.flow(flow, w, |c| {
                    c.data_tx += 1;
                    c.retransmissions += retry as u64;
                });
                self.node(at, w, |c| {
                    c.data_tx += 1;
                    c.retransmissions += retry as u64;
                });
            }
            TraceKind::AckRx { flow, .. } => self.flow(flow, w, |c| c.acked += 1),
            TraceKind::RetryDrop { flow, .. } => {
                self.flow(flow, w, |c| c.retry_drops += 1);
                self.node(at, w, |c| c.retry_drops += 1);
            }
            TraceKind::DataRx {
                flow, bytes, duplicate, ..
            } => {
                if !duplicate {
                    self.flow(Some(flow), w, |c| {
                        c.delivered_frames += 1;
                        c.delivered_bytes += bytes as u64;
                    });
                }
            }
            TraceKind::Capture { kept, lost, .. } => {
                self.node(at, w, |c| c.captures_observed += 1);
                self.node(kept.src, w, |c| c.captures_won += 1);
                if kept.ftype == FrameType::Data && kept.dst == at {
                    self.flow(kept.flow, w, |c| c.captures += 1);
                }
                if lost.ftype == FrameType::Data && lost.dst == at {
                    self.flow(lost.flow, w, |c| c.capture_losses += 1);
                }
            }
            TraceKind::Collision { frame, .. } => {
                self.node(at, w, |c| c.collisions_observed += 1);
                if frame.dst == at {
                    self.node(frame.src, w, |c| c.collided += 1);
                    if frame.ftype == FrameType::Data {
                        self.flow(frame.flow, w, |c| c.collisions += 1);
                    }
                }
            }
            _ => {}
        }
    }

    /// Close the books. `in_flight[f]` counts flow `f`'s frames still queued
    /// or held by a MAC when the run ended.
    pub fn finish(self, in_flight: &[u64]) -> Metrics {
        let span = self.t1 - self.t0;
        let mut flows: Vec<FlowMetrics> = self
            .flows
            .iter()
            .enumerate()
            .map(|(i, k)| {
                let window = self.flow_window[i];
                FlowMetrics {
                    flow: i,
                    src: k.src,
                    dst: k.dst,
                    payload: k.payload,
                    throughput_bps: if span > 0.0 {
                        8.0 * window.delivered_bytes as f64 / span
                    } else {
                        0.0
                    },
                    share: 0.0,
                    window,
                    total: self.flow_total[i],
                    in_flight: in_flight.get(i).copied().unwrap_or(0),
                }
            })
            .collect();
        let total: f64 = flows.iter().map(|f| f.throughput_bps).sum();
        for f in &mut flows {
            f.share = if total > 0.0 { f.throughput_bps / total } else { 0.0 };
        }
        let nodes = self
            .node_ids
            .iter()
            .zip(self.node_window)
            .map(|(&id, counters)| NodeMetrics { id, counters })
            .collect();
        Metrics {
            window: (self.t0, self.t1),
            total_throughput_bps: total,
            flows,
            nodes,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowMetrics {
    pub flow: usize,
    pub src: NodeId,
    pub dst: NodeId,
    pub payload: u32,
    /// `8 * delivered_bytes / window length`.
    pub throughput_bps: f64,
    /// Fraction of the total delivered throughput.
    pub share: f64,
    pub window: FlowCounters,
    pub total: FlowCounters,
    pub in_flight: u64,
}

impl FlowMetrics {
    /// offered = acked + retry drops + queue drops + in flight, over the
    /// whole run.
    pub fn conserved(&self) -> bool {
        let t = &self.total;
        t.offered == t.acked + t.retry_drops + t.queue_drops + self.in_flight
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeMetrics {
    pub id: NodeId,
    pub counters: NodeCounters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub window: (SimTime, SimTime),
    pub total_throughput_bps: f64,
    pub flows: Vec<FlowMetrics>,
    pub nodes: Vec<NodeMetrics>,
}

impl Metrics {
    /// Flows whose books do not balance, with a description.
    pub fn conservation_violations(&self) -> Vec<String> {
        self.flows
            .iter()
            .filter(|f| !f.conserved())
            .map(|f| {
                let t = &f.total;
                format!(
                    "flow {}: offered {} != acked {} + retry drops {} + queue drops {} + in flight {}",
                    f.flow, t.offered, t.acked, t.retry_drops, t.queue_drops, f.in_flight
                )
            })
            .collect()
    }
}
