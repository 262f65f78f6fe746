use std::collections::HashMap;

use super::{usec, BackoffTimer, MacParams, MacState, MacTimer};
use crate::error::{Error, Result};
use crate::event::SimEvent;
use crate::frame::{Direction, Frame, FrameType, MacHeader, NodeId, TxInfo};
use crate::sim::{EventId, Scheduler, SimRng, SimTime, Timer};
use crate::trace::{FrameRef, Recorder, TraceKind};

/// What the MAC asks of the rest of the node after an entry point returns.
#[derive(Debug, Clone, PartialEq)]
pub enum MacOutput {
    /// Put this frame on the air now.
    Transmit(Frame),
    /// A DATA frame for us; pass the payload up.
    Deliver(Frame),
    /// The outstanding upstream frame is finished (acked or dropped); the
    /// interface queue may hand over the next one.
    Upstream,
}

/// Borrowed simulation services a MAC entry point works against.
pub struct MacCtx<'a> {
    pub sched: &'a mut Scheduler<SimEvent>,
    pub rng: &'a mut SimRng,
    pub rec: &'a mut Recorder,
    pub out: &'a mut Vec<MacOutput>,
    pub next_uid: &'a mut u64,
}

impl MacCtx<'_> {
    fn now(&self) -> SimTime {
        self.sched.now()
    }

    fn uid(&mut self) -> u64 {
        let u = *self.next_uid;
        *self.next_uid += 1;
        u
    }
}

fn frame_ref(f: &Frame) -> FrameRef {
    FrameRef {
        ftype: f.frame_type(),
        src: f.header.src,
        dst: f.header.dst,
        flow: f.payload.map(|p| p.flow),
    }
}

// Relative slack on the inclusive capture comparison so that an exact 10x
// power ratio is not lost to rounding in the path-loss arithmetic.
const CAPTURE_REL_EPS: f64 = 1e-9;

/// Per-node DCF state machine.
#[derive(Debug, Clone)]
pub struct Mac {
    addr: NodeId,
    node: usize,
    p: MacParams,
    rx_state: MacState,
    tx_state: MacState,
    nav: SimTime,
    cw: u32,
    ssrc: u32,
    slrc: u32,
    pkt_rx: Option<Frame>,
    pkt_tx: Option<Frame>,
    pkt_rts: Option<Frame>,
    pkt_ctrl: Option<Frame>,
    /// Our own transmitter is on.
    tx_active: bool,
    /// Upstream handed us `pkt_tx` and is waiting for the completion callback.
    callback: bool,
    backoff: BackoffTimer,
    defer: Timer,
    ifs: Timer,
    nav_timer: Timer,
    recv_timer: Timer,
    send_timer: Timer,
    seq: u32,
    seq_cache: HashMap<NodeId, u32>,
}

impl Mac {
    pub fn new(addr: NodeId, node: usize, params: MacParams) -> Self {
        Mac {
            addr,
            node,
            rx_state: MacState::Idle,
            tx_state: MacState::Idle,
            nav: 0.0,
            cw: params.cw_min,
            ssrc: 0,
            slrc: 0,
            pkt_rx: None,
            pkt_tx: None,
            pkt_rts: None,
            pkt_ctrl: None,
            tx_active: false,
            callback: false,
            backoff: BackoffTimer::new(params.slot_time),
            defer: Timer::new("defer"),
            ifs: Timer::new("interface"),
            nav_timer: Timer::new("nav"),
            recv_timer: Timer::new("recv"),
            send_timer: Timer::new("send"),
            seq: 0,
            seq_cache: HashMap::new(),
            p: params,
        }
    }

    pub fn addr(&self) -> NodeId {
        self.addr
    }

    pub fn params(&self) -> &MacParams {
        &self.p
    }

    pub fn rx_state(&self) -> MacState {
        self.rx_state
    }

    pub fn tx_state(&self) -> MacState {
        self.tx_state
    }

    pub fn nav(&self) -> SimTime {
        self.nav
    }

    pub fn cw(&self) -> u32 {
        self.cw
    }

    pub fn backoff(&self) -> &BackoffTimer {
        &self.backoff
    }

    pub fn has_pending_tx(&self) -> bool {
        self.pkt_tx.is_some()
    }

    /// Flow of the DATA frame currently held by the MAC, if any.
    pub fn pending_flow(&self) -> Option<usize> {
        self.pkt_tx.as_ref().and_then(|f| f.payload).map(|p| p.flow)
    }

    /// Upstream is blocked on us.
    pub fn awaiting_callback(&self) -> bool {
        self.callback
    }

    /// Medium idle as far as this station can tell: nothing on our
    /// transmitter, nothing being received, NAV expired.
    pub fn is_idle(&self, now: SimTime) -> bool {
        self.tx_state == MacState::Idle && self.rx_state == MacState::Idle && self.nav <= now
    }

    fn ev(&self, timer: MacTimer) -> SimEvent {
        SimEvent::Mac {
            node: self.node,
            timer,
        }
    }

    fn trace(&self, ctx: &mut MacCtx, kind: TraceKind) {
        let now = ctx.now();
        ctx.rec.record(now, self.addr, kind);
    }

    // ---- state bookkeeping ------------------------------------------------

    fn set_rx_state(&mut self, ctx: &mut MacCtx, to: MacState) -> Result<()> {
        if !to.is_rx_state() {
            return Err(Error::fault(format!("node {}: rx_state cannot become {to}", self.addr)));
        }
        let from = self.rx_state;
        self.rx_state = to;
        self.trace(ctx, TraceKind::RxState { from, to });
        self.check_backoff_timer(ctx)
    }

    fn set_tx_state(&mut self, ctx: &mut MacCtx, to: MacState) -> Result<()> {
        if !to.is_tx_state() {
            return Err(Error::fault(format!("node {}: tx_state cannot become {to}", self.addr)));
        }
        let from = self.tx_state;
        self.tx_state = to;
        if from != to {
            self.trace(ctx, TraceKind::TxState { from, to });
        }
        self.check_backoff_timer(ctx)
    }

    /// Freeze the backoff while the medium is busy; restart it (behind a
    /// DIFS) once the medium is idle again.
    pub fn check_backoff_timer(&mut self, ctx: &mut MacCtx) -> Result<()> {
        let idle = self.is_idle(ctx.now());
        if idle && self.backoff.is_paused() {
            let ev = self.ev(MacTimer::Backoff);
            self.backoff.resume(ctx.sched, self.p.difs, ev)?;
        } else if !idle && self.backoff.is_counting() {
            self.backoff.pause(ctx.sched)?;
        }
        Ok(())
    }

    /// Extend the NAV to `now + us` if that is later than the current one.
    pub fn set_nav(&mut self, ctx: &mut MacCtx, us: u32) -> Result<()> {
        let now = ctx.now();
        let t = us as f64 * 1e-6;
        if now + t > self.nav {
            self.nav = now + t;
            if self.nav_timer.is_busy() {
                self.nav_timer.cancel(ctx.sched)?;
            }
            let ev = self.ev(MacTimer::Nav);
            self.nav_timer.start(ctx.sched, t, ev)?;
            self.trace(ctx, TraceKind::Nav { expiry: self.nav });
        }
        Ok(())
    }

    fn start_backoff(&mut self, ctx: &mut MacCtx, difs: f64) -> Result<()> {
        let idle = self.is_idle(ctx.now());
        let ev = self.ev(MacTimer::Backoff);
        let slots = self.backoff.start(ctx.sched, ctx.rng, self.cw, idle, difs, ev)?;
        self.trace(ctx, TraceKind::BackoffStart { slots, frozen: !idle });
        Ok(())
    }

    fn inc_cw(&mut self, ctx: &mut MacCtx) {
        self.cw = (2 * (self.cw + 1) - 1).min(self.p.cw_max);
        self.trace(ctx, TraceKind::Cw { cw: self.cw });
    }

    fn rst_cw(&mut self, ctx: &mut MacCtx) {
        if self.cw != self.p.cw_min {
            self.cw = self.p.cw_min;
            self.trace(ctx, TraceKind::Cw { cw: self.cw });
        }
    }

    fn discipline(&self, now: SimTime) -> Result<()> {
        if self.backoff.is_counting() && !self.is_idle(now) {
            return Err(Error::fault(format!(
                "node {}: backoff counting while medium busy (tx {}, rx {}, nav {})",
                self.addr, self.tx_state, self.rx_state, self.nav
            )));
        }
        Ok(())
    }

    // ---- frame construction ----------------------------------------------

    fn control_frame(&self, ctx: &mut MacCtx, ftype: FrameType, dst: NodeId, duration_us: u32) -> Frame {
        let size = match ftype {
            FrameType::Rts => self.p.rts_bytes,
            FrameType::Cts => self.p.cts_bytes,
            _ => self.p.ack_bytes,
        };
        Frame {
            uid: ctx.uid(),
            direction: Direction::Down,
            size,
            error: false,
            header: MacHeader {
                frame_type: ftype,
                duration_us,
                src: self.addr,
                dst,
                retry: false,
                seq: 0,
            },
            txinfo: TxInfo::default(),
            airtime: self.p.basic_txtime(size),
            payload: None,
        }
    }

    fn make_rts(&self, ctx: &mut MacCtx, data: &Frame) -> Frame {
        let dur = 3.0 * self.p.sifs + self.p.cts_time() + data.airtime + self.p.ack_time();
        self.control_frame(ctx, FrameType::Rts, data.header.dst, usec(dur))
    }

    // ---- downward entry ---------------------------------------------------

    /// Accept a DATA frame from upstream and start contending for it.
    pub fn send(&mut self, ctx: &mut MacCtx, mut frame: Frame) -> Result<()> {
        if frame.direction != Direction::Down || frame.frame_type() != FrameType::Data {
            return Err(Error::fault(format!("node {}: send() wants a downward DATA frame", self.addr)));
        }
        if self.pkt_tx.is_some() {
            return Err(Error::fault(format!(
                "node {}: send() while frame {} is still pending",
                self.addr,
                self.pkt_tx.as_ref().map_or(0, |f| f.uid)
            )));
        }
        self.callback = true;
        frame.header.src = self.addr;
        frame.header.seq = self.seq;
        self.seq = self.seq.wrapping_add(1);
        frame.airtime = self.p.data_txtime(frame.size);
        frame.header.duration_us = if frame.header.dst.is_broadcast() {
            0
        } else {
            usec(self.p.sifs + self.p.ack_time())
        };
        if !frame.header.dst.is_broadcast() && self.p.uses_rts(frame.size) {
            let rts = self.make_rts(ctx, &frame);
            self.pkt_rts = Some(rts);
        }
        self.pkt_tx = Some(frame);

        let now = ctx.now();
        if !self.backoff.is_busy() {
            if self.is_idle(now) {
                if !self.defer.is_busy() {
                    self.start_backoff(ctx, self.p.difs)?;
                }
            } else {
                self.start_backoff(ctx, 0.0)?;
            }
        }
        self.discipline(now)
    }

    // ---- upward entry -----------------------------------------------------

    /// A frame copy reached the MAC (already classified sensed or decodable).
    pub fn recv(&mut self, ctx: &mut MacCtx, mut frame: Frame) -> Result<()> {
        if frame.direction != Direction::Up {
            return Err(Error::fault(format!("node {}: recv() wants an upward frame", self.addr)));
        }
        if self.tx_active {
            frame.error = true;
        }
        self.trace(
            ctx,
            TraceKind::RxStart {
                ftype: frame.frame_type(),
                uid: frame.uid,
                src: frame.header.src,
                power: frame.rx_power(),
                error: frame.error,
            },
        );
        if self.rx_state == MacState::Idle {
            let ev = self.ev(MacTimer::Recv);
            self.recv_timer.start(ctx.sched, frame.airtime, ev)?;
            self.pkt_rx = Some(frame);
            self.set_rx_state(ctx, MacState::Recv)?;
        } else {
            let current = self
                .pkt_rx
                .as_ref()
                .ok_or_else(|| Error::fault(format!("node {}: receiving with no pktRx", self.addr)))?;
            let ratio = frame.txinfo.capture_threshold;
            if current.rx_power() >= frame.rx_power() * ratio * (1.0 - CAPTURE_REL_EPS) {
                self.capture(ctx, frame)?;
            } else {
                self.collision(ctx, frame)?;
            }
        }
        self.discipline(ctx.now())
    }

    fn capture(&mut self, ctx: &mut MacCtx, frame: Frame) -> Result<()> {
        let kept = self.pkt_rx.as_ref().expect("capture with pktRx");
        let kind = TraceKind::Capture {
            kept_uid: kept.uid,
            kept: frame_ref(kept),
            lost_uid: frame.uid,
            lost: frame_ref(&frame),
        };
        self.trace(ctx, kind);
        self.set_nav(ctx, usec(frame.airtime))
    }

    fn collision(&mut self, ctx: &mut MacCtx, mut frame: Frame) -> Result<()> {
        match self.rx_state {
            MacState::Recv => {
                let rx = self.pkt_rx.as_mut().expect("collision with pktRx");
                rx.error = true;
                let kind = TraceKind::Collision {
                    uid: rx.uid,
                    frame: frame_ref(rx),
                };
                self.set_rx_state(ctx, MacState::Coll)?;
                self.trace(ctx, kind);
            }
            MacState::Coll => {}
            s => {
                return Err(Error::fault(format!("node {}: collision in rx_state {s}", self.addr)));
            }
        }
        frame.error = true;
        self.trace(
            ctx,
            TraceKind::Collision {
                uid: frame.uid,
                frame: frame_ref(&frame),
            },
        );
        // Keep whichever frame occupies the medium longest.
        let now = ctx.now();
        if frame.airtime > self.recv_timer.time_left(now) {
            self.recv_timer.cancel(ctx.sched)?;
            let ev = self.ev(MacTimer::Recv);
            self.recv_timer.start(ctx.sched, frame.airtime, ev)?;
            self.pkt_rx = Some(frame);
        }
        Ok(())
    }

    // ---- timer dispatch ---------------------------------------------------

    pub fn on_timer(&mut self, ctx: &mut MacCtx, timer: MacTimer, id: EventId) -> Result<()> {
        match timer {
            MacTimer::Backoff => {
                self.backoff.fire(id)?;
                self.backoff_handler(ctx)?;
            }
            MacTimer::Defer => {
                self.defer.fire(id)?;
                self.defer_handler(ctx)?;
            }
            MacTimer::Interface => {
                self.ifs.fire(id)?;
                self.tx_active = false;
            }
            MacTimer::Nav => {
                self.nav_timer.fire(id)?;
                self.check_backoff_timer(ctx)?;
            }
            MacTimer::Recv => {
                self.recv_timer.fire(id)?;
                self.recv_timer_handler(ctx)?;
            }
            MacTimer::Send => {
                self.send_timer.fire(id)?;
                self.send_timer_handler(ctx)?;
            }
        }
        self.discipline(ctx.now())
    }

    fn backoff_handler(&mut self, ctx: &mut MacCtx) -> Result<()> {
        if self.pkt_ctrl.is_some() {
            // A CTS/ACK is already queued behind the defer timer.
            return Ok(());
        }
        if self.check_pkt_rts(ctx)? || self.check_pkt_tx(ctx)? {
            return Ok(());
        }
        self.trace(ctx, TraceKind::Spurious { what: "backoff expired with nothing pending" });
        Ok(())
    }

    fn defer_handler(&mut self, ctx: &mut MacCtx) -> Result<()> {
        if self.check_pkt_ctrl(ctx)? {
            return Ok(());
        }
        if self.backoff.is_busy() {
            return Ok(());
        }
        if self.check_pkt_rts(ctx)? || self.check_pkt_tx(ctx)? {
            return Ok(());
        }
        self.trace(ctx, TraceKind::Spurious { what: "defer expired with nothing pending" });
        Ok(())
    }

    fn check_pkt_ctrl(&mut self, ctx: &mut MacCtx) -> Result<bool> {
        let Some(ctrl) = self.pkt_ctrl.as_ref() else {
            return Ok(false);
        };
        if matches!(self.tx_state, MacState::Cts | MacState::Ack) {
            return Ok(false);
        }
        let (ftype, duration_us) = (ctrl.frame_type(), ctrl.header.duration_us);
        let timeout = match ftype {
            FrameType::Cts => {
                if !self.is_idle(ctx.now()) {
                    self.pkt_ctrl = None;
                    return Ok(true);
                }
                self.set_tx_state(ctx, MacState::Cts)?;
                let dur = duration_us as f64 * 1e-6;
                (self.p.cts_time() + 2.0 * self.p.max_prop_delay + dur - self.p.sifs - self.p.ack_time())
                    .max(self.p.cts_time())
            }
            FrameType::Ack => {
                self.set_tx_state(ctx, MacState::Ack)?;
                self.p.ack_time()
            }
            t => return Err(Error::fault(format!("node {}: {t} queued as control frame", self.addr))),
        };
        let frame = self.pkt_ctrl.clone().expect("checked above");
        self.transmit(ctx, frame, timeout)?;
        Ok(true)
    }

    fn check_pkt_rts(&mut self, ctx: &mut MacCtx) -> Result<bool> {
        let Some(rts) = self.pkt_rts.as_ref() else {
            return Ok(false);
        };
        if !self.is_idle(ctx.now()) {
            self.inc_cw(ctx);
            self.start_backoff(ctx, 0.0)?;
            return Ok(true);
        }
        let frame = rts.clone();
        self.set_tx_state(ctx, MacState::Rts)?;
        let timeout = self.p.rts_time() + self.p.sifs + self.p.cts_time() + 2.0 * self.p.max_prop_delay;
        self.transmit(ctx, frame, timeout)?;
        Ok(true)
    }

    fn check_pkt_tx(&mut self, ctx: &mut MacCtx) -> Result<bool> {
        let Some(data) = self.pkt_tx.as_ref() else {
            return Ok(false);
        };
        let unicast = !data.header.dst.is_broadcast();
        if !self.is_idle(ctx.now()) {
            if unicast && self.p.uses_rts(data.size) {
                let data = data.clone();
                self.pkt_rts = Some(self.make_rts(ctx, &data));
            }
            self.inc_cw(ctx);
            self.start_backoff(ctx, 0.0)?;
            return Ok(true);
        }
        let frame = data.clone();
        self.set_tx_state(ctx, MacState::Send)?;
        let timeout = if unicast {
            frame.airtime + self.p.sifs + self.p.ack_time() + 2.0 * self.p.max_prop_delay
        } else {
            frame.airtime
        };
        self.transmit(ctx, frame, timeout)?;
        Ok(true)
    }

    fn transmit(&mut self, ctx: &mut MacCtx, mut frame: Frame, timeout: f64) -> Result<()> {
        self.tx_active = true;
        // Anything we were receiving is lost under our own carrier.
        if self.rx_state != MacState::Idle {
            if let Some(rx) = self.pkt_rx.as_mut() {
                rx.error = true;
            }
        }
        frame.direction = Direction::Down;
        self.trace(
            ctx,
            TraceKind::TxStart {
                ftype: frame.frame_type(),
                uid: frame.uid,
                dst: frame.header.dst,
                retry: frame.header.retry,
                flow: frame.payload.map(|p| p.flow),
            },
        );
        let airtime = frame.airtime;
        ctx.out.push(MacOutput::Transmit(frame));
        let ev = self.ev(MacTimer::Send);
        self.send_timer.start(ctx.sched, timeout, ev)?;
        let ev = self.ev(MacTimer::Interface);
        self.ifs.start(ctx.sched, airtime, ev)
    }

    // ---- reception completion --------------------------------------------

    fn recv_timer_handler(&mut self, ctx: &mut MacCtx) -> Result<()> {
        let pkt = self
            .pkt_rx
            .take()
            .ok_or_else(|| Error::fault(format!("node {}: recv timer with empty pktRx", self.addr)))?;
        if self.tx_active {
            self.trace(ctx, TraceKind::RxMissed { uid: pkt.uid });
        } else if self.rx_state == MacState::Coll || pkt.error {
            let eifs = self.p.eifs_enabled;
            self.trace(
                ctx,
                TraceKind::RxError {
                    uid: pkt.uid,
                    ftype: pkt.frame_type(),
                    eifs,
                },
            );
            if eifs {
                self.set_nav(ctx, usec(self.p.eifs + pkt.airtime))?;
            }
        } else {
            let dst = pkt.header.dst;
            if dst != self.addr {
                self.set_nav(ctx, pkt.header.duration_us)?;
            }
            if dst == self.addr || dst.is_broadcast() {
                match pkt.frame_type() {
                    FrameType::Rts => self.recv_rts(ctx, pkt)?,
                    FrameType::Cts => self.recv_cts(ctx)?,
                    FrameType::Data => self.recv_data(ctx, pkt)?,
                    FrameType::Ack => self.recv_ack(ctx, pkt)?,
                }
            }
        }
        self.rx_resume(ctx)
    }

    fn recv_rts(&mut self, ctx: &mut MacCtx, rts: Frame) -> Result<()> {
        if self.tx_state != MacState::Idle || self.pkt_ctrl.is_some() {
            return Ok(());
        }
        let dur = rts.header.duration_us as f64 * 1e-6 - self.p.sifs - self.p.cts_time();
        let cts = self.control_frame(ctx, FrameType::Cts, rts.header.src, usec(dur));
        self.pkt_ctrl = Some(cts);
        if self.defer.is_busy() {
            self.defer.cancel(ctx.sched)?;
        }
        self.tx_resume(ctx)
    }

    fn recv_cts(&mut self, ctx: &mut MacCtx) -> Result<()> {
        if self.tx_state != MacState::Rts {
            return Ok(());
        }
        self.pkt_rts = None;
        if self.send_timer.is_busy() {
            self.send_timer.cancel(ctx.sched)?;
        }
        self.ssrc = 0;
        self.tx_resume(ctx)
    }

    fn recv_data(&mut self, ctx: &mut MacCtx, pkt: Frame) -> Result<()> {
        let src = pkt.header.src;
        if !pkt.header.dst.is_broadcast() {
            if self.p.uses_rts(pkt.size) {
                if self.tx_state != MacState::Cts {
                    return Ok(());
                }
                self.pkt_ctrl = None;
                if self.send_timer.is_busy() {
                    self.send_timer.cancel(ctx.sched)?;
                }
                self.pkt_ctrl = Some(self.control_frame(ctx, FrameType::Ack, src, 0));
                self.tx_resume(ctx)?;
            } else {
                if self.pkt_ctrl.is_some() {
                    return Ok(());
                }
                self.pkt_ctrl = Some(self.control_frame(ctx, FrameType::Ack, src, 0));
                if !self.send_timer.is_busy() {
                    self.tx_resume(ctx)?;
                }
            }
        }
        let duplicate = !pkt.header.dst.is_broadcast() && self.seq_cache.get(&src) == Some(&pkt.header.seq);
        if !pkt.header.dst.is_broadcast() {
            self.seq_cache.insert(src, pkt.header.seq);
        }
        if let Some(pl) = pkt.payload {
            self.trace(
                ctx,
                TraceKind::DataRx {
                    uid: pkt.uid,
                    src,
                    flow: pl.flow,
                    seq: pl.seq,
                    bytes: pl.bytes,
                    duplicate,
                },
            );
        }
        if !duplicate {
            ctx.out.push(MacOutput::Deliver(pkt));
        }
        Ok(())
    }

    fn recv_ack(&mut self, ctx: &mut MacCtx, ack: Frame) -> Result<()> {
        if self.tx_state != MacState::Send {
            return Ok(());
        }
        let Some(data) = self.pkt_tx.take() else {
            return Err(Error::fault(format!("node {}: ACK {} with no pending DATA", self.addr, ack.uid)));
        };
        if self.send_timer.is_busy() {
            self.send_timer.cancel(ctx.sched)?;
        }
        if self.p.uses_rts(data.size) {
            self.slrc = 0;
        } else {
            self.ssrc = 0;
        }
        self.rst_cw(ctx);
        self.trace(
            ctx,
            TraceKind::AckRx {
                uid: data.uid,
                flow: data.payload.map(|p| p.flow),
                seq: data.payload.map_or(0, |p| p.seq),
            },
        );
        // Post-transmission backoff; frozen until rx_resume sees the medium idle.
        if !self.backoff.is_busy() {
            self.start_backoff(ctx, 0.0)?;
        }
        self.tx_resume(ctx)
    }

    // ---- response timeout ------------------------------------------------

    fn send_timer_handler(&mut self, ctx: &mut MacCtx) -> Result<()> {
        match self.tx_state {
            MacState::Rts => self.retransmit_rts(ctx)?,
            MacState::Send => self.retransmit_data(ctx)?,
            MacState::Cts | MacState::Ack => self.pkt_ctrl = None,
            MacState::Idle => {}
            s => return Err(Error::fault(format!("node {}: send timer in tx_state {s}", self.addr))),
        }
        self.tx_resume(ctx)
    }

    fn retransmit_rts(&mut self, ctx: &mut MacCtx) -> Result<()> {
        self.ssrc += 1;
        if self.ssrc >= self.p.short_retry_limit {
            self.pkt_rts = None;
            if let Some(data) = self.pkt_tx.take() {
                self.trace(
                    ctx,
                    TraceKind::RetryDrop {
                        uid: data.uid,
                        flow: data.payload.map(|p| p.flow),
                    },
                );
            }
            self.ssrc = 0;
            self.rst_cw(ctx);
        } else {
            if let Some(rts) = self.pkt_rts.as_mut() {
                rts.header.retry = true;
            }
            self.inc_cw(ctx);
            if !self.backoff.is_busy() {
                self.start_backoff(ctx, 0.0)?;
            }
        }
        Ok(())
    }

    fn retransmit_data(&mut self, ctx: &mut MacCtx) -> Result<()> {
        let Some(data) = self.pkt_tx.as_ref() else {
            return Err(Error::fault(format!("node {}: DATA timeout with no pending frame", self.addr)));
        };
        if data.header.dst.is_broadcast() {
            self.pkt_tx = None;
            self.rst_cw(ctx);
            if !self.backoff.is_busy() {
                self.start_backoff(ctx, 0.0)?;
            }
            return Ok(());
        }
        let long = self.p.uses_rts(data.size);
        let (count, limit) = if long {
            self.slrc += 1;
            (self.slrc, self.p.long_retry_limit)
        } else {
            self.ssrc += 1;
            (self.ssrc, self.p.short_retry_limit)
        };
        if count >= limit {
            let data = self.pkt_tx.take().expect("checked above");
            self.trace(
                ctx,
                TraceKind::RetryDrop {
                    uid: data.uid,
                    flow: data.payload.map(|p| p.flow),
                },
            );
            if long {
                self.slrc = 0;
            } else {
                self.ssrc = 0;
            }
            self.rst_cw(ctx);
        } else {
            let data = self.pkt_tx.as_mut().expect("checked above");
            data.header.retry = true;
            let (uid, flow) = (data.uid, data.payload.map(|p| p.flow));
            if long {
                let data = data.clone();
                self.pkt_rts = Some(self.make_rts(ctx, &data));
            }
            self.trace(ctx, TraceKind::Retransmit { uid, flow, attempt: count });
            self.inc_cw(ctx);
            if !self.backoff.is_busy() {
                self.start_backoff(ctx, 0.0)?;
            }
        }
        Ok(())
    }

    // ---- resumption ------------------------------------------------------

    fn tx_resume(&mut self, ctx: &mut MacCtx) -> Result<()> {
        if self.pkt_ctrl.is_some() {
            if !self.defer.is_busy() {
                let ev = self.ev(MacTimer::Defer);
                self.defer.start(ctx.sched, self.p.sifs, ev)?;
            }
        } else if self.pkt_rts.is_some() {
            if !self.backoff.is_busy() {
                self.start_backoff(ctx, self.p.difs)?;
            }
        } else if let Some(data) = self.pkt_tx.as_ref() {
            if !self.backoff.is_busy() {
                if data.header.dst.is_broadcast() || !self.p.uses_rts(data.size) {
                    self.start_backoff(ctx, self.p.difs)?;
                } else if !self.defer.is_busy() {
                    // CTS received: DATA follows after SIFS.
                    let ev = self.ev(MacTimer::Defer);
                    self.defer.start(ctx.sched, self.p.sifs, ev)?;
                }
            }
        } else if self.callback {
            self.callback = false;
            ctx.out.push(MacOutput::Upstream);
        }
        self.set_tx_state(ctx, MacState::Idle)
    }

    fn rx_resume(&mut self, ctx: &mut MacCtx) -> Result<()> {
        if self.pkt_rx.is_some() || self.recv_timer.is_busy() {
            return Err(Error::fault(format!("node {}: rx_resume with reception pending", self.addr)));
        }
        self.set_rx_state(ctx, MacState::Idle)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frame::Payload;
    use crate::scenario::MetricsCollector;

    struct Harness {
        sched: Scheduler<SimEvent>,
        rng: SimRng,
        rec: Recorder,
        out: Vec<MacOutput>,
        uid: u64,
    }

    impl Harness {
        fn new() -> Self {
            Harness {
                sched: Scheduler::new(),
                rng: SimRng::new(1),
                rec: Recorder::new(MetricsCollector::default(), true),
                out: Vec::new(),
                uid: 100,
            }
        }

        fn ctx(&mut self) -> MacCtx<'_> {
            MacCtx {
                sched: &mut self.sched,
                rng: &mut self.rng,
                rec: &mut self.rec,
                out: &mut self.out,
                next_uid: &mut self.uid,
            }
        }

        fn advance(&mut self, t: f64) {
            assert!(self.sched.peek_time().is_none_or(|e| e > t), "would skip events");
            self.sched.run_until(t, |_, _| Ok(())).unwrap();
        }

        /// Run the single MAC's timers until `t`.
        fn run(&mut self, mac: &mut Mac, t: f64) {
            while let Some(ev) = self.sched.next_event(t) {
                if let SimEvent::Mac { timer, .. } = ev.payload {
                    let mut c = self.ctx();
                    mac.on_timer(&mut c, timer, ev.uid).unwrap();
                }
            }
            self.sched.run_until(t, |_, _| Ok(())).unwrap();
        }
    }

    fn frame(ftype: FrameType, src: u32, dst: u32, size: u32, airtime: f64, power: f64) -> Frame {
        let mut f = Frame {
            uid: 1,
            direction: Direction::Up,
            size,
            error: false,
            header: MacHeader {
                frame_type: ftype,
                duration_us: 0,
                src: NodeId(src),
                dst: NodeId(dst),
                retry: false,
                seq: 0,
            },
            txinfo: TxInfo::stamp(0.28, 1.0, Default::default(), 0.328, 10.0),
            airtime,
            payload: None,
        };
        f.txinfo.set_rx_power(power);
        f
    }

    fn data_down(dst: u32, bytes: u32) -> Frame {
        let mut f = frame(FrameType::Data, 0, dst, bytes + 28, 0.0, 0.0);
        f.direction = Direction::Down;
        f.txinfo = TxInfo::default();
        f.payload = Some(Payload { flow: 0, seq: 0, bytes });
        f
    }

    #[test]
    fn fresh_node_is_idle() {
        let m = Mac::new(NodeId(0), 0, MacParams::default());
        assert!(m.is_idle(0.0));
        assert_eq!(m.cw(), 31);
    }

    #[test]
    fn receiving_makes_medium_busy() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        m.recv(&mut h.ctx(), frame(FrameType::Data, 1, 0, 1028, 1e-3, 1e-9)).unwrap();
        assert_eq!(m.rx_state(), MacState::Recv);
        assert!(!m.is_idle(h.sched.now()));
    }

    #[test]
    fn nav_blocks_until_expiry() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        m.set_nav(&mut h.ctx(), 10).unwrap();
        assert!(!m.is_idle(0.0));
        h.run(&mut m, 10e-6);
        assert!(m.is_idle(h.sched.now()));
    }

    #[test]
    fn set_nav_only_extends() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        m.set_nav(&mut h.ctx(), 50).unwrap();
        let first = m.nav();
        m.set_nav(&mut h.ctx(), 30).unwrap();
        assert_eq!(m.nav(), first);
        m.set_nav(&mut h.ctx(), 80).unwrap();
        assert!((m.nav() - 80e-6).abs() < 1e-15);
        // Only one NAV expiry remains queued (the restarted one).
        assert_eq!(h.sched.pending(), 1);
        h.run(&mut m, 1e-3);
        m.set_nav(&mut h.ctx(), 0).unwrap();
        assert!(m.is_idle(h.sched.now()));
    }

    #[test]
    fn backoff_pauses_when_busy_and_resumes_with_difs() {
        let mut h = Harness::new();
        let p = MacParams::default();
        let mut m = Mac::new(NodeId(0), 0, p.clone());
        m.send(&mut h.ctx(), data_down(1, 1000)).unwrap();
        assert!(m.backoff().is_counting());
        // Medium goes busy during the DIFS lead-in.
        h.advance(10e-6);
        m.recv(&mut h.ctx(), frame(FrameType::Ack, 2, 3, 14, 304e-6, 1e-9)).unwrap();
        assert!(m.backoff().is_paused());
        let slots = m.backoff().slots();
        // Reception ends -> resume with DIFS, fire DIFS + slots later.
        h.run(&mut m, 10e-6 + 304e-6);
        assert!(m.backoff().is_counting());
        let fire_at = h.sched.peek_time().unwrap();
        let expect = 10e-6 + 304e-6 + p.difs + slots as f64 * p.slot_time;
        assert!((fire_at - expect).abs() < 1e-12, "{fire_at} vs {expect}");
    }

    #[test]
    fn idle_send_transmits_after_difs_plus_draw() {
        let mut h = Harness::new();
        let p = MacParams::default();
        let mut m = Mac::new(NodeId(0), 0, p.clone());
        m.send(&mut h.ctx(), data_down(1, 1000)).unwrap();
        let slots = m.backoff().slots();
        h.run(&mut m, 0.01);
        let tx = h
            .rec
            .records()
            .iter()
            .find(|r| matches!(r.kind, TraceKind::TxStart { .. }))
            .unwrap();
        assert!((tx.time - (p.difs + slots as f64 * p.slot_time)).abs() < 1e-12);
        assert!(matches!(h.out[0], MacOutput::Transmit(ref f) if f.frame_type() == FrameType::Data));
    }

    #[test]
    fn busy_medium_send_starts_frozen() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        m.recv(&mut h.ctx(), frame(FrameType::Data, 1, 2, 1028, 1e-3, 1e-9)).unwrap();
        m.send(&mut h.ctx(), data_down(1, 1000)).unwrap();
        assert!(m.backoff().is_paused());
    }

    #[test]
    fn large_frame_goes_out_as_rts_first() {
        let mut h = Harness::new();
        let p = MacParams {
            rts_threshold: 500,
            ..MacParams::default()
        };
        let mut m = Mac::new(NodeId(0), 0, p);
        m.send(&mut h.ctx(), data_down(1, 1000)).unwrap();
        h.run(&mut m, 0.01);
        assert!(matches!(h.out[0], MacOutput::Transmit(ref f) if f.frame_type() == FrameType::Rts));
        assert_eq!(m.tx_state(), MacState::Idle, "RTS timeout must have fired by now");
    }

    #[test]
    fn capture_keeps_first_frame_and_sets_nav() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        m.recv(&mut h.ctx(), frame(FrameType::Data, 1, 0, 1028, 1e-3, 1e-9)).unwrap();
        let mut weak = frame(FrameType::Data, 2, 0, 1028, 1e-3, 1e-10);
        weak.uid = 2;
        m.recv(&mut h.ctx(), weak).unwrap();
        assert_eq!(m.rx_state(), MacState::Recv);
        assert!((m.nav() - 1e-3).abs() < 1e-12);
        assert!(h.rec.records().iter().any(|r| matches!(r.kind, TraceKind::Capture { .. })));
    }

    #[test]
    fn comparable_powers_collide() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        m.recv(&mut h.ctx(), frame(FrameType::Data, 1, 0, 1028, 1e-3, 1e-9)).unwrap();
        m.recv(&mut h.ctx(), frame(FrameType::Data, 2, 0, 1028, 1.5e-3, 5e-10)).unwrap();
        assert_eq!(m.rx_state(), MacState::Coll);
        let collisions = h
            .rec
            .records()
            .iter()
            .filter(|r| matches!(r.kind, TraceKind::Collision { .. }))
            .count();
        assert_eq!(collisions, 2);
        // Reception now ends with the longer frame; EIFS + its airtime follow.
        h.run(&mut m, 1.5e-3);
        assert_eq!(m.rx_state(), MacState::Idle);
        assert!((m.nav() - (1.5e-3 + 364e-6 + 1.5e-3)).abs() < 1e-9);
        assert!(h.out.is_empty());
    }

    #[test]
    fn errored_frame_defers_eifs_plus_airtime() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        let mut f = frame(FrameType::Data, 1, 0, 1028, 1.28e-3, 2e-11);
        f.error = true;
        m.recv(&mut h.ctx(), f).unwrap();
        h.run(&mut m, 1.28e-3);
        assert!((m.nav() - 1.28e-3 - 1.644e-3).abs() < 1e-9);

        let mut h = Harness::new();
        let p = MacParams {
            eifs_enabled: false,
            ..MacParams::default()
        };
        let mut m = Mac::new(NodeId(0), 0, p);
        let mut f = frame(FrameType::Data, 1, 0, 1028, 1.28e-3, 2e-11);
        f.error = true;
        m.recv(&mut h.ctx(), f).unwrap();
        h.run(&mut m, 1.28e-3);
        assert_eq!(m.nav(), 0.0);
    }

    #[test]
    fn overheard_data_sets_nav_from_duration() {
        let mut h = Harness::new();
        let mut m = Mac::new(NodeId(0), 0, MacParams::default());
        let mut f = frame(FrameType::Data, 1, 2, 1028, 1e-3, 1e-9);
        f.header.duration_us = 300;
        m.recv(&mut h.ctx(), f).unwrap();
        h.run(&mut m, 1e-3);
        assert!((m.nav() - (1e-3 + 300e-6)).abs() < 1e-12);
        assert!(h.out.is_empty());
    }

    #[test]
    fn data_for_me_is_acked_after_sifs() {
        let mut h = Harness::new();
        let p = MacParams::default();
        let mut m = Mac::new(NodeId(0), 0, p.clone());
        let mut f = frame(FrameType::Data, 1, 0, 1028, 1e-3, 1e-9);
        f.payload = Some(Payload { flow: 0, seq: 0, bytes: 1000 });
        m.recv(&mut h.ctx(), f).unwrap();
        h.run(&mut m, 1e-3 + p.sifs);
        assert!(matches!(h.out[0], MacOutput::Deliver(_)));
        match &h.out[1] {
            MacOutput::Transmit(ack) => {
                assert_eq!(ack.frame_type(), FrameType::Ack);
                assert_eq!(ack.header.dst, NodeId(1));
            }
            other => panic!("expected ACK, got {other:?}"),
        }
        let tx = h
            .rec
            .records()
            .iter()
            .find(|r| matches!(r.kind, TraceKind::TxStart { .. }))
            .unwrap();
        assert!((tx.time - (1e-3 + p.sifs)).abs() < 1e-12);
    }

    #[test]
    fn ack_timeouts_grow_cw_then_drop() {
        let mut h = Harness::new();
        let p = MacParams {
            cw_max: 255,
            ..MacParams::default()
        };
        let mut m = Mac::new(NodeId(0), 0, p.clone());
        m.send(&mut h.ctx(), data_down(1, 1000)).unwrap();
        let mut cws = vec![m.cw()];
        let mut t = 0.0;
        while !h.out.contains(&MacOutput::Upstream) {
            t += 1e-3;
            h.run(&mut m, t);
            if *cws.last().unwrap() != m.cw() {
                cws.push(m.cw());
            }
            assert!(t < 1.0);
        }
        // 31 -> 63 -> 127 -> 255 (capped) ... then reset after the drop.
        assert_eq!(cws, vec![31, 63, 127, 255, 31]);
        let sends = h.out.iter().filter(|o| matches!(o, MacOutput::Transmit(_))).count();
        assert_eq!(sends as u32, p.short_retry_limit);
        assert!(h.rec.records().iter().any(|r| matches!(r.kind, TraceKind::RetryDrop { .. })));
        assert!(!m.has_pending_tx());
    }

    #[test]
    fn long_frames_use_the_long_retry_limit() {
        let mut h = Harness::new();
        let p = MacParams {
            rts_threshold: 0,
            ..MacParams::default()
        };
        let mut m = Mac::new(NodeId(0), 0, p.clone());
        m.send(&mut h.ctx(), data_down(1, 1000)).unwrap();
        // Fake a CTS every time the RTS goes out so DATA is what times out.
        let mut t = 0.0;
        let mut data_tx = 0;
        while !h.out.contains(&MacOutput::Upstream) {
            t += 10e-6;
            h.run(&mut m, t);
            let sent: Vec<_> = h.out.drain(..).collect();
            for o in &sent {
                if let MacOutput::Transmit(f) = o {
                    match f.frame_type() {
                        FrameType::Rts => {
                            let at = t + f.airtime + p.sifs;
                            h.run(&mut m, at);
                            m.recv(&mut h.ctx(), frame(FrameType::Cts, 1, 0, 14, 304e-6, 1e-9)).unwrap();
                            h.run(&mut m, at + 304e-6);
                            t = at + 304e-6;
                        }
                        FrameType::Data => data_tx += 1,
                        _ => {}
                    }
                }
            }
            if sent.contains(&MacOutput::Upstream) {
                break;
            }
            assert!(t < 2.0);
        }
        assert_eq!(data_tx, p.long_retry_limit);
    }
}
