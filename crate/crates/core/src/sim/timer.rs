use super::scheduler::{EventId, Scheduler, SimTime};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerState {
    Idle,
    Counting,
    Paused,
}

/// A one-shot timer backed by a scheduler event.
///
/// Every transition is checked: starting a busy timer, pausing one that is
/// not counting and so on are reported as [`Error::Fault`] because they mean
/// the owning state machine lost track of its own timers.
#[derive(Debug, Clone)]
pub struct Timer {
    name: &'static str,
    state: TimerState,
    expiry: SimTime,
    remaining: f64,
    pending: Option<EventId>,
}

impl Timer {
    pub fn new(name: &'static str) -> Self {
        Timer {
            name,
            state: TimerState::Idle,
            expiry: 0.0,
            remaining: 0.0,
            pending: None,
        }
    }

    pub fn state(&self) -> TimerState {
        self.state
    }

    pub fn is_idle(&self) -> bool {
        self.state == TimerState::Idle
    }

    pub fn is_counting(&self) -> bool {
        self.state == TimerState::Counting
    }

    pub fn is_paused(&self) -> bool {
        self.state == TimerState::Paused
    }

    /// Counting or paused.
    pub fn is_busy(&self) -> bool {
        self.state != TimerState::Idle
    }

    pub fn expiry(&self) -> SimTime {
        self.expiry
    }

    /// Time left while paused; zero otherwise.
    pub fn remaining(&self) -> f64 {
        if self.is_paused() {
            self.remaining
        } else {
            0.0
        }
    }

    /// Time until expiry while counting.
    pub fn time_left(&self, now: SimTime) -> f64 {
        if self.is_counting() {
            (self.expiry - now).max(0.0)
        } else {
            0.0
        }
    }

    fn misuse(&self, op: &str) -> Error {
        Error::fault(format!(
            "timer '{}': {op} while {:?}",
            self.name, self.state
        ))
    }

    pub fn start<E>(&mut self, sched: &mut Scheduler<E>, delay: f64, payload: E) -> Result<()> {
        if self.state != TimerState::Idle {
            return Err(self.misuse("start"));
        }
        let id = sched.schedule(delay, payload)?;
        self.state = TimerState::Counting;
        self.expiry = sched.now() + delay;
        self.pending = Some(id);
        Ok(())
    }

    pub fn pause<E>(&mut self, sched: &mut Scheduler<E>) -> Result<()> {
        if self.state != TimerState::Counting {
            return Err(self.misuse("pause"));
        }
        let remaining = self.expiry - sched.now();
        if remaining <= 0.0 {
            return Err(self.misuse("pause at or after expiry"));
        }
        if let Some(id) = self.pending.take() {
            sched.cancel(id);
        }
        self.remaining = remaining;
        self.state = TimerState::Paused;
        Ok(())
    }

    /// Restart a paused timer; it fires `extra_defer + remaining` from now.
    pub fn resume<E>(&mut self, sched: &mut Scheduler<E>, extra_defer: f64, payload: E) -> Result<()> {
        if self.state != TimerState::Paused {
            return Err(self.misuse("resume"));
        }
        let delay = extra_defer + self.remaining;
        let id = sched.schedule(delay, payload)?;
        self.expiry = sched.now() + delay;
        self.pending = Some(id);
        self.remaining = 0.0;
        self.state = TimerState::Counting;
        Ok(())
    }

    pub fn cancel<E>(&mut self, sched: &mut Scheduler<E>) -> Result<()> {
        match self.state {
            TimerState::Idle => Err(self.misuse("cancel")),
            _ => {
                if let Some(id) = self.pending.take() {
                    sched.cancel(id);
                }
                self.remaining = 0.0;
                self.state = TimerState::Idle;
                Ok(())
            }
        }
    }

    /// Acknowledge that the scheduler dispatched this timer's event.
    pub fn fire(&mut self, id: EventId) -> Result<()> {
        if self.state != TimerState::Counting || self.pending != Some(id) {
            return Err(Error::fault(format!(
                "timer '{}': stray expiry {:?} (state {:?}, pending {:?})",
                self.name, id, self.state, self.pending
            )));
        }
        self.pending = None;
        self.state = TimerState::Idle;
        Ok(())
    }
}
