//! Structured event trace.
//!
//! Every MAC state transition and frame outcome becomes a [`TraceRecord`].
//! The [`Recorder`] always feeds records to the metrics collector and keeps
//! them in memory only when tracing is enabled. [`check_invariants`] replays
//! a stored trace against the protocol invariants.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use crate::frame::{FrameType, NodeId};
use crate::mac::{MacParams, MacState};
use crate::scenario::MetricsCollector;
use crate::sim::SimTime;

#[derive(Debug, Clone, PartialEq)]
pub enum TraceKind {
    RxState { from: MacState, to: MacState },
    TxState { from: MacState, to: MacState },
    Nav { expiry: SimTime },
    Cw { cw: u32 },
    BackoffStart { slots: u32, frozen: bool },
    TxStart { ftype: FrameType, uid: u64, dst: NodeId, retry: bool, flow: Option<usize> },
    RxStart { ftype: FrameType, uid: u64, src: NodeId, power: f64, error: bool },
    /// The ongoing reception survived an overlapping, weaker frame.
    Capture { kept_uid: u64, kept: FrameRef, lost_uid: u64, lost: FrameRef },
    /// A frame destroyed by overlap at this receiver.
    Collision { uid: u64, frame: FrameRef },
    /// Errored or collided reception finished; `eifs` tells whether the
    /// EIFS deferral was applied.
    RxError { uid: u64, ftype: FrameType, eifs: bool },
    /// Frame heard while our own transmitter was on; silently dropped.
    RxMissed { uid: u64 },
    DataRx { uid: u64, src: NodeId, flow: usize, seq: u64, bytes: u32, duplicate: bool },
    AckRx { uid: u64, flow: Option<usize>, seq: u64 },
    Retransmit { uid: u64, flow: Option<usize>, attempt: u32 },
    RetryDrop { uid: u64, flow: Option<usize> },
    Offered { flow: usize, seq: u64 },
    QueueDrop { flow: usize, seq: u64 },
    ToMac { flow: usize, seq: u64 },
    /// A handler ran with nothing to do.
    Spurious { what: &'static str },
}

/// Who a frame belongs to, for attributing captures and collisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameRef {
    pub ftype: FrameType,
    pub src: NodeId,
    pub dst: NodeId,
    pub flow: Option<usize>,
}

impl TraceKind {
    pub fn name(&self) -> &'static str {
        match self {
            TraceKind::RxState { .. } => "rx-state",
            TraceKind::TxState { .. } => "tx-state",
            TraceKind::Nav { .. } => "nav",
            TraceKind::Cw { .. } => "cw",
            TraceKind::BackoffStart { .. } => "backoff",
            TraceKind::TxStart { .. } => "tx",
            TraceKind::RxStart { .. } => "rx",
            TraceKind::Capture { .. } => "capture",
            TraceKind::Collision { .. } => "collision",
            TraceKind::RxError { .. } => "rx-error",
            TraceKind::RxMissed { .. } => "rx-missed",
            TraceKind::DataRx { .. } => "deliver",
            TraceKind::AckRx { .. } => "ack",
            TraceKind::Retransmit { .. } => "retx",
            TraceKind::RetryDrop { .. } => "retry-drop",
            TraceKind::Offered { .. } => "offer",
            TraceKind::QueueDrop { .. } => "queue-drop",
            TraceKind::ToMac { .. } => "to-mac",
            TraceKind::Spurious { .. } => "spurious",
        }
    }

    fn uid(&self) -> Option<u64> {
        match *self {
            TraceKind::TxStart { uid, .. }
            | TraceKind::RxStart { uid, .. }
            | TraceKind::Capture { kept_uid: uid, .. }
            | TraceKind::Collision { uid, .. }
            | TraceKind::RxError { uid, .. }
            | TraceKind::RxMissed { uid }
            | TraceKind::DataRx { uid, .. }
            | TraceKind::AckRx { uid, .. }
            | TraceKind::Retransmit { uid, .. }
            | TraceKind::RetryDrop { uid, .. } => Some(uid),
            _ => None,
        }
    }
}

fn flow_str(flow: Option<usize>) -> String {
    flow.map_or_else(|| "-".to_string(), |f| f.to_string())
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceKind::RxState { from, to } | TraceKind::TxState { from, to } => {
                write!(f, "{from}->{to}")
            }
            TraceKind::Nav { expiry } => write!(f, "until={expiry:.9}"),
            TraceKind::Cw { cw } => write!(f, "cw={cw}"),
            TraceKind::BackoffStart { slots, frozen } => write!(f, "slots={slots} frozen={frozen}"),
            TraceKind::TxStart { ftype, dst, retry, flow, .. } => {
                write!(f, "{ftype} dst={dst} retry={retry} flow={}", flow_str(*flow))
            }
            TraceKind::RxStart { ftype, src, power, error, .. } => {
                write!(f, "{ftype} src={src} pr={power:.6e} error={error}")
            }
            TraceKind::Capture { kept, lost_uid, lost, .. } => write!(
                f,
                "kept={}:{} lost={lost_uid}:{}:{}",
                kept.ftype, kept.src, lost.ftype, lost.src
            ),
            TraceKind::Collision { frame, .. } => {
                write!(f, "{} src={} dst={} flow={}", frame.ftype, frame.src, frame.dst, flow_str(frame.flow))
            }
            TraceKind::RxError { ftype, eifs, .. } => write!(f, "{ftype} eifs={eifs}"),
            TraceKind::RxMissed { .. } => f.write_str("own-tx"),
            TraceKind::DataRx { src, flow, seq, bytes, duplicate, .. } => {
                write!(f, "src={src} flow={flow} seq={seq} bytes={bytes} dup={duplicate}")
            }
            TraceKind::AckRx { flow, seq, .. } => write!(f, "flow={} seq={seq}", flow_str(*flow)),
            TraceKind::Retransmit { flow, attempt, .. } => {
                write!(f, "flow={} attempt={attempt}", flow_str(*flow))
            }
            TraceKind::RetryDrop { flow, .. } => write!(f, "flow={}", flow_str(*flow)),
            TraceKind::Offered { flow, seq }
            | TraceKind::QueueDrop { flow, seq }
            | TraceKind::ToMac { flow, seq } => write!(f, "flow={flow} seq={seq}"),
            TraceKind::Spurious { what } => f.write_str(what),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: SimTime,
    pub node: NodeId,
    pub kind: TraceKind,
}

impl fmt::Display for TraceRecord {
    /// `time node kind uid detail`, space separated; `-` when no frame uid.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let uid = self.kind.uid().map_or_else(|| "-".to_string(), |u| u.to_string());
        write!(f, "{:.9} {} {} {} {}", self.time, self.node, self.kind.name(), uid, self.kind)
    }
}

/// Sink for trace records.
#[derive(Debug, Clone, Default)]
pub struct Recorder {
    pub metrics: MetricsCollector,
    records: Option<Vec<TraceRecord>>,
}

impl Recorder {
    pub fn new(metrics: MetricsCollector, keep_trace: bool) -> Self {
        Recorder {
            metrics,
            records: keep_trace.then(Vec::new),
        }
    }

    pub fn record(&mut self, time: SimTime, node: NodeId, kind: TraceKind) {
        let rec = TraceRecord { time, node, kind };
        self.metrics.observe(&rec);
        if let Some(v) = self.records.as_mut() {
            v.push(rec);
        }
    }

    pub fn records(&self) -> &[TraceRecord] {
        self.records.as_deref().unwrap_or(&[])
    }

    pub fn take_records(&mut self) -> Vec<TraceRecord> {
        self.records.as_mut().map(std::mem::take).unwrap_or_default()
    }
}

pub fn write_trace<W: Write>(mut w: W, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(w, "{r}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub time: SimTime,
    pub node: NodeId,
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] t={:.9} node={}: {}", self.invariant, self.time, self.node, self.detail)
    }
}

/// Replay a trace against the MAC invariants:
///
/// * `state-domain`: rx transitions stay in {IDLE, RECV, COLL}, tx
///   transitions in {IDLE, SEND, RTS, CTS, ACK}, and each transition starts
///   from the state the previous one ended in;
/// * `nav-monotonic`: a node's NAV expiry never moves backwards;
/// * `cw-bounds`: cw stays in `[cw_min, cw_max]`;
/// * `retry-bound`: no DATA frame goes on air more than limit + 1 times;
/// * `time-order`: record times never decrease.
pub fn check_invariants(records: &[TraceRecord], mac: &MacParams) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut rx: HashMap<NodeId, MacState> = HashMap::new();
    let mut tx: HashMap<NodeId, MacState> = HashMap::new();
    let mut nav: HashMap<NodeId, SimTime> = HashMap::new();
    let mut data_tx: HashMap<u64, u32> = HashMap::new();
    let max_tx = mac.short_retry_limit.max(mac.long_retry_limit) + 1;
    let mut last_time = f64::NEG_INFINITY;
    let mut bad = |r: &TraceRecord, inv: &'static str, detail: String| {
        out.push(Violation {
            time: r.time,
            node: r.node,
            invariant: inv,
            detail,
        })
    };
    for r in records {
        if r.time < last_time {
            bad(r, "time-order", format!("{} after {}", r.time, last_time));
        }
        last_time = r.time;
        match &r.kind {
            TraceKind::RxState { from, to } => {
                if !from.is_rx_state() || !to.is_rx_state() {
                    bad(r, "state-domain", format!("rx {from}->{to}"));
                }
                let cur = rx.entry(r.node).or_insert(MacState::Idle);
                if cur != from {
                    bad(r, "state-domain", format!("rx transition from {from} but state was {cur}"));
                }
                *cur = *to;
            }
            TraceKind::TxState { from, to } => {
                if !from.is_tx_state() || !to.is_tx_state() {
                    bad(r, "state-domain", format!("tx {from}->{to}"));
                }
                let cur = tx.entry(r.node).or_insert(MacState::Idle);
                if cur != from {
                    bad(r, "state-domain", format!("tx transition from {from} but state was {cur}"));
                }
                *cur = *to;
            }
            TraceKind::Nav { expiry } => {
                let prev = nav.entry(r.node).or_insert(0.0);
                if *expiry < *prev {
                    bad(r, "nav-monotonic", format!("nav {expiry} < previous {prev}"));
                }
                *prev = expiry.max(*prev);
            }
            TraceKind::Cw { cw } => {
                if *cw < mac.cw_min || *cw > mac.cw_max {
                    bad(r, "cw-bounds", format!("cw={cw}"));
                }
            }
            TraceKind::TxStart { ftype: FrameType::Data, uid, .. } => {
                let n = data_tx.entry(*uid).or_insert(0);
                *n += 1;
                if *n > max_tx {
                    bad(r, "retry-bound", format!("frame {uid} transmitted {n} times"));
                }
            }
            _ => {}
        }
    }
    out
}
