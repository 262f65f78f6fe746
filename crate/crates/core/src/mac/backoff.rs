use crate::error::{Error, Result};
use crate::sim::{EventId, Scheduler, SimRng, SimTime, TimerState};

/// Slot-quantized backoff counter.
///
/// The residual is kept as a whole number of slots: pausing deducts only
/// the slots that fully elapsed after the DIFS lead-in, so stations that
/// resume together stay aligned on a common slot grid.
#[derive(Debug, Clone)]
pub struct BackoffTimer {
    slot: f64,
    state: TimerState,
    slots: u32,
    /// Time the slot countdown began (after any DIFS lead-in).
    count_start: SimTime,
    pending: Option<EventId>,
}

// Guards floor() against times that land a hair short of a slot boundary.
const SLOT_EPS: f64 = 1e-6;

impl BackoffTimer {
    pub fn new(slot: f64) -> Self {
        BackoffTimer {
            slot,
            state: TimerState::Idle,
            slots: 0,
            count_start: 0.0,
            pending: None,
        }
    }

    pub fn state(&self) -> TimerState {
        self.state
    }

    pub fn is_busy(&self) -> bool {
        self.state != TimerState::Idle
    }

    pub fn is_paused(&self) -> bool {
        self.state == TimerState::Paused
    }

    pub fn is_counting(&self) -> bool {
        self.state == TimerState::Counting
    }

    /// Whole slots left (as of the last start/pause/resume).
    pub fn slots(&self) -> u32 {
        self.slots
    }

    fn misuse(&self, op: &str) -> Error {
        Error::fault(format!("backoff timer: {op} while {:?}", self.state))
    }

    /// Draw `U{0..=cw}` slots. When the medium is idle the countdown starts
    /// after `difs`; otherwise the timer starts frozen.
    pub fn start<E>(
        &mut self,
        sched: &mut Scheduler<E>,
        rng: &mut SimRng,
        cw: u32,
        idle: bool,
        difs: f64,
        payload: E,
    ) -> Result<u32> {
        if self.state != TimerState::Idle {
            return Err(self.misuse("start"));
        }
        self.slots = rng.uniform_slots(cw);
        if idle {
            self.arm(sched, difs, payload)?;
        } else {
            self.state = TimerState::Paused;
        }
        Ok(self.slots)
    }

    fn arm<E>(&mut self, sched: &mut Scheduler<E>, lead_in: f64, payload: E) -> Result<()> {
        let delay = lead_in + self.slots as f64 * self.slot;
        self.pending = Some(sched.schedule(delay, payload)?);
        self.count_start = sched.now() + lead_in;
        self.state = TimerState::Counting;
        Ok(())
    }

    pub fn pause<E>(&mut self, sched: &mut Scheduler<E>) -> Result<()> {
        if self.state != TimerState::Counting {
            return Err(self.misuse("pause"));
        }
        let elapsed = (sched.now() - self.count_start) / self.slot;
        let done = if elapsed <= 0.0 {
            0
        } else {
            ((elapsed + SLOT_EPS).floor() as u32).min(self.slots)
        };
        self.slots -= done;
        if let Some(id) = self.pending.take() {
            sched.cancel(id);
        }
        self.state = TimerState::Paused;
        Ok(())
    }

    pub fn resume<E>(&mut self, sched: &mut Scheduler<E>, difs: f64, payload: E) -> Result<()> {
        if self.state != TimerState::Paused {
            return Err(self.misuse("resume"));
        }
        self.arm(sched, difs, payload)
    }

    pub fn cancel<E>(&mut self, sched: &mut Scheduler<E>) -> Result<()> {
        if self.state == TimerState::Idle {
            return Err(self.misuse("cancel"));
        }
        if let Some(id) = self.pending.take() {
            sched.cancel(id);
        }
        self.slots = 0;
        self.state = TimerState::Idle;
        Ok(())
    }

    pub fn fire(&mut self, id: EventId) -> Result<()> {
        if self.state != TimerState::Counting || self.pending != Some(id) {
            return Err(Error::fault(format!(
                "backoff timer: stray expiry {id:?} (state {:?})",
                self.state
            )));
        }
        self.pending = None;
        self.slots = 0;
        self.state = TimerState::Idle;
        Ok(())
    }
}
