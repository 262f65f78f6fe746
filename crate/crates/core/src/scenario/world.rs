use super::{Ifq, Metrics, MetricsCollector};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::event::SimEvent;
use crate::frame::{Direction, Frame, FrameType, MacHeader, NodeId, Payload, TxInfo};
use crate::mac::{Mac, MacCtx, MacOutput, MacParams};
use crate::phy::{PhyParams, ReceptionClass, WirelessChannel, WirelessPhy};
use crate::radio::{FadingModel, RadioParams};
use crate::sim::{Event, Scheduler, SimRng};
use crate::trace::{Recorder, TraceKind, TraceRecord};

struct Node {
    id: NodeId,
    phy: WirelessPhy,
    mac: Mac,
    ifq: Ifq,
}

struct Flow {
    src: usize,
    dst: NodeId,
    payload: u32,
    interval: f64,
    start: f64,
    stop: f64,
    seq: u64,
}

impl Flow {
    fn active(&self, now: f64) -> bool {
        now >= self.start && now < self.stop
    }
}

/// Result of a finished run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    /// Empty unless tracing was enabled.
    pub trace: Vec<TraceRecord>,
    pub events: u64,
}

/// One simulation instance: nodes, channel, traffic and the event loop.
pub struct Simulation {
    sched: Scheduler<SimEvent>,
    rng: SimRng,
    rec: Recorder,
    nodes: Vec<Node>,
    channel: WirelessChannel,
    flows: Vec<Flow>,
    phy: PhyParams,
    fading: FadingModel,
    cp_thresh: f64,
    mac_params: MacParams,
    next_uid: u64,
    duration: f64,
    out: Vec<MacOutput>,
}

impl Simulation {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let positions = cfg.positions()?;
        let base = cfg.radio_params();
        let phy = cfg.phy_params();
        let mac_params = cfg.mac_params();
        let radios: Vec<RadioParams> = cfg
            .nodes
            .iter()
            .map(|n| RadioParams {
                pt: n.pt.unwrap_or(base.pt),
                ..base
            })
            .collect();
        let heights: Vec<f64> = positions.iter().map(|p| p.z).collect();
        let dist_cst = WirelessChannel::sensing_range(phy.cs_thresh, &radios, &heights)?;
        let nodes = cfg
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| Node {
                id: n.id,
                phy: WirelessPhy::new(positions[i], radios[i]),
                mac: Mac::new(n.id, i, mac_params.clone()),
                ifq: Ifq::new(cfg.ifq.capacity),
            })
            .collect();
        let flows = cfg
            .flows
            .iter()
            .map(|f| Flow {
                src: cfg.node_index(f.src).expect("validated"),
                dst: f.dst,
                payload: f.payload,
                interval: f.interval,
                start: f.start,
                stop: f.stop.unwrap_or(cfg.duration).min(cfg.duration),
                seq: 0,
            })
            .collect();
        let ids: Vec<NodeId> = cfg.nodes.iter().map(|n| n.id).collect();
        let keys: Vec<_> = cfg.flows.iter().map(|f| (f.src, f.dst, f.payload)).collect();
        let collector = MetricsCollector::new(&ids, &keys, cfg.window());
        Ok(Simulation {
            sched: Scheduler::new(),
            rng: SimRng::new(cfg.seed),
            rec: Recorder::new(collector, cfg.trace),
            nodes,
            channel: WirelessChannel::new(positions, dist_cst),
            flows,
            cp_thresh: phy.cp_thresh_linear(),
            phy,
            fading: cfg.radio.fading,
            mac_params,
            next_uid: 0,
            duration: cfg.duration,
            out: Vec::new(),
        })
    }

    /// Run a config start to finish.
    pub fn run_config(cfg: &ScenarioConfig) -> Result<RunOutput> {
        Simulation::new(cfg)?.run()
    }

    pub fn mac_params(&self) -> &MacParams {
        &self.mac_params
    }

    pub fn dist_cst(&self) -> f64 {
        self.channel.dist_cst()
    }

    pub fn run(mut self) -> Result<RunOutput> {
        for i in 0..self.flows.len() {
            let start = self.flows[i].start;
            self.sched.schedule(start, SimEvent::Traffic { flow: i })?;
        }
        let t_end = self.duration;
        while let Some(ev) = self.sched.next_event(t_end) {
            self.dispatch(ev)?;
        }
        self.sched.run_until(t_end, |_, _| Ok(()))?;

        let mut in_flight = vec![0u64; self.flows.len()];
        for n in &self.nodes {
            for f in n.ifq.iter().filter_map(|f| f.payload) {
                in_flight[f.flow] += 1;
            }
            if let Some(f) = n.mac.pending_flow() {
                in_flight[f] += 1;
            }
        }
        let trace = self.rec.take_records();
        let events = self.sched.dispatched();
        Ok(RunOutput {
            metrics: self.rec.metrics.finish(&in_flight),
            trace,
            events,
        })
    }

    fn dispatch(&mut self, ev: Event<SimEvent>) -> Result<()> {
        match ev.payload {
            SimEvent::Traffic { flow } => self.traffic(flow),
            SimEvent::Arrival { node, frame } => self.arrival(node, *frame),
            SimEvent::Mac { node, timer } => {
                let mut ctx = MacCtx {
                    sched: &mut self.sched,
                    rng: &mut self.rng,
                    rec: &mut self.rec,
                    out: &mut self.out,
                    next_uid: &mut self.next_uid,
                };
                self.nodes[node].mac.on_timer(&mut ctx, timer, ev.uid)?;
                self.drain(node)
            }
        }
    }

    fn arrival(&mut self, node: usize, mut frame: Frame) -> Result<()> {
        let n = &mut self.nodes[node];
        let class = n.phy.send_up(&mut frame, &self.phy, self.fading, &mut self.rng)?;
        if class == ReceptionClass::NotSensed {
            return Ok(());
        }
        let mut ctx = MacCtx {
            sched: &mut self.sched,
            rng: &mut self.rng,
            rec: &mut self.rec,
            out: &mut self.out,
            next_uid: &mut self.next_uid,
        };
        n.mac.recv(&mut ctx, frame)?;
        self.drain(node)
    }

    /// Act on whatever the MAC asked for during its last entry point.
    fn drain(&mut self, node: usize) -> Result<()> {
        while !self.out.is_empty() {
            let batch: Vec<MacOutput> = std::mem::take(&mut self.out);
            for o in batch {
                match o {
                    MacOutput::Transmit(frame) => self.transmit(node, frame)?,
                    MacOutput::Deliver(_) => {}
                    MacOutput::Upstream => {
                        self.nodes[node].ifq.resume()?;
                        self.pump(node)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn transmit(&mut self, node: usize, mut frame: Frame) -> Result<()> {
        let now = self.sched.now();
        self.nodes[node].phy.send_down(&mut frame, now, self.cp_thresh)?;
        for d in self.channel.deliver(node) {
            self.sched.schedule(
                d.delay,
                SimEvent::Arrival {
                    node: d.receiver,
                    frame: Box::new(frame.clone()),
                },
            )?;
        }
        Ok(())
    }

    fn new_packet(&mut self, flow: usize) -> Frame {
        let f = &mut self.flows[flow];
        let seq = f.seq;
        f.seq += 1;
        let uid = self.next_uid;
        self.next_uid += 1;
        Frame {
            uid,
            direction: Direction::Down,
            size: f.payload + self.mac_params.header_bytes,
            error: false,
            header: MacHeader {
                frame_type: FrameType::Data,
                duration_us: 0,
                src: self.nodes[f.src].id,
                dst: f.dst,
                retry: false,
                seq: 0,
            },
            txinfo: TxInfo::default(),
            airtime: 0.0,
            payload: Some(Payload {
                flow,
                seq,
                bytes: f.payload,
            }),
        }
    }

    /// Offer one packet of `flow` to its source's queue.
    fn offer(&mut self, flow: usize) {
        let frame = self.new_packet(flow);
        let node = self.flows[flow].src;
        let id = self.nodes[node].id;
        let now = self.sched.now();
        let seq = frame.payload.map_or(0, |p| p.seq);
        self.rec.record(now, id, TraceKind::Offered { flow, seq });
        if self.nodes[node].ifq.enqueue(frame).is_err() {
            self.rec.record(now, id, TraceKind::QueueDrop { flow, seq });
        }
    }

    /// Top up the queue of `node` from its active saturated flows.
    fn saturate(&mut self, node: usize) {
        let now = self.sched.now();
        let sources: Vec<usize> = (0..self.flows.len())
            .filter(|&i| {
                let f = &self.flows[i];
                f.src == node && f.interval == 0.0 && f.active(now)
            })
            .collect();
        if sources.is_empty() {
            return;
        }
        let mut k = 0;
        while !self.nodes[node].ifq.is_full() {
            self.offer(sources[k % sources.len()]);
            k += 1;
        }
    }

    fn traffic(&mut self, flow: usize) -> Result<()> {
        let now = self.sched.now();
        let (node, interval) = (self.flows[flow].src, self.flows[flow].interval);
        if !self.flows[flow].active(now) {
            return Ok(());
        }
        if interval > 0.0 {
            self.offer(flow);
            if now + interval < self.flows[flow].stop {
                self.sched.schedule(interval, SimEvent::Traffic { flow })?;
            }
        } else {
            self.saturate(node);
        }
        self.pump(node)
    }

    /// Hand the next queued frame to the MAC if it is free.
    fn pump(&mut self, node: usize) -> Result<()> {
        let Some(frame) = self.nodes[node].ifq.dequeue() else {
            return Ok(());
        };
        let now = self.sched.now();
        let n = &mut self.nodes[node];
        if let Some(p) = frame.payload {
            self.rec.record(now, n.id, TraceKind::ToMac { flow: p.flow, seq: p.seq });
        }
        let mut ctx = MacCtx {
            sched: &mut self.sched,
            rng: &mut self.rng,
            rec: &mut self.rec,
            out: &mut self.out,
            next_uid: &mut self.next_uid,
        };
        n.mac.send(&mut ctx, frame)?;
        self.saturate(node);
        self.drain(node)
    }
}
