//! Centralized discrete-event scheduler.
//!
//! Events are kept in a binary heap keyed on `(time, uid)`, so events that
//! share a timestamp are dispatched in the order they were scheduled. The
//! virtual clock only moves forward when an event is popped (or when
//! [`Scheduler::run_until`] reaches its horizon).

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use crate::error::{Error, Result};

/// Virtual time in seconds.
pub type SimTime = f64;

/// Identifier handed out by [`Scheduler::schedule`]; strictly increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(pub u64);

#[derive(Debug, Clone)]
pub struct Event<E> {
    pub time: SimTime,
    pub uid: EventId,
    pub payload: E,
}

struct Entry<E>(Event<E>);

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<E> Eq for Entry<E> {}

impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for Entry<E> {
    // BinaryHeap is a max-heap; invert so the earliest (time, uid) is on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.uid.cmp(&self.0.uid))
    }
}

pub struct Scheduler<E> {
    now: SimTime,
    next_uid: u64,
    queue: BinaryHeap<Entry<E>>,
    cancelled: HashSet<EventId>,
    dispatched: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: 0.0,
            next_uid: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            dispatched: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of live (not cancelled) events still queued.
    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    /// Total events handed out by `next_event` / `run_until` so far.
    pub fn dispatched(&self) -> u64 {
        self.dispatched
    }

    /// Enqueue `payload` to fire `delay` seconds from now.
    pub fn schedule(&mut self, delay: f64, payload: E) -> Result<EventId> {
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(Error::input(format!(
                "schedule delay must be a finite non-negative number, got {delay}"
            )));
        }
        let uid = EventId(self.next_uid);
        self.next_uid += 1;
        self.queue.push(Entry(Event {
            time: self.now + delay,
            uid,
            payload,
        }));
        Ok(uid)
    }

    /// Remove a queued event. Returns false when `id` is not pending
    /// (already dispatched or already cancelled).
    pub fn cancel(&mut self, id: EventId) -> bool {
        if id.0 >= self.next_uid || self.cancelled.contains(&id) {
            return false;
        }
        if !self.queue.iter().any(|e| e.0.uid == id) {
            return false;
        }
        self.cancelled.insert(id)
    }

    fn discard_cancelled_head(&mut self) {
        while let Some(top) = self.queue.peek() {
            if self.cancelled.remove(&top.0.uid) {
                self.queue.pop();
            } else {
                break;
            }
        }
    }

    /// Time of the next live event, if any.
    pub fn peek_time(&mut self) -> Option<SimTime> {
        self.discard_cancelled_head();
        self.queue.peek().map(|e| e.0.time)
    }

    /// Pop the next event whose time is `<= t_end`, advancing the clock to it.
    pub fn next_event(&mut self, t_end: SimTime) -> Option<Event<E>> {
        self.discard_cancelled_head();
        match self.queue.peek() {
            Some(top) if top.0.time <= t_end => {
                let ev = self.queue.pop().expect("peeked").0;
                self.now = ev.time;
                self.dispatched += 1;
                Some(ev)
            }
            _ => None,
        }
    }

    /// Dispatch every event with `time <= t_end` in (time, uid) order, then
    /// park the clock at `t_end`. The handler may schedule further events.
    /// Returns the number of events dispatched.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> Result<u64>
    where
        F: FnMut(&mut Self, Event<E>) -> Result<()>,
    {
        if t_end < self.now {
            return Err(Error::input(format!(
                "run_until({t_end}) is earlier than the current clock {}",
                self.now
            )));
        }
        let mut count = 0;
        while let Some(ev) = self.next_event(t_end) {
            handler(self, ev)?;
            count += 1;
        }
        self.now = t_end;
        Ok(count)
    }
}
