use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::frame::Frame;

/// Drop-tail interface queue between the traffic sources and the MAC.
///
/// `blocked` is set while the MAC holds a frame and cleared by the MAC's
/// completion callback.
#[derive(Debug, Clone)]
pub struct Ifq {
    capacity: usize,
    queue: VecDeque<Frame>,
    blocked: bool,
}

impl Ifq {
    pub fn new(capacity: usize) -> Self {
        Ifq {
            capacity,
            queue: VecDeque::with_capacity(capacity),
            blocked: false,
        }
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.queue.len() >= self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_blocked(&self) -> bool {
        self.blocked
    }

    pub fn iter(&self) -> impl Iterator<Item = &Frame> {
        self.queue.iter()
    }

    /// Append a frame; hands it back when the queue is full.
    #[allow(clippy::result_large_err)]
    pub fn enqueue(&mut self, frame: Frame) -> std::result::Result<(), Frame> {
        if self.is_full() {
            return Err(frame);
        }
        self.queue.push_back(frame);
        Ok(())
    }

    /// Next frame for the MAC, if the MAC is free and one is waiting.
    pub fn dequeue(&mut self) -> Option<Frame> {
        if self.blocked {
            return None;
        }
        let f = self.queue.pop_front()?;
        self.blocked = true;
        Some(f)
    }

    /// MAC completion callback.
    pub fn resume(&mut self) -> Result<()> {
        if !self.blocked {
            return Err(Error::fault("interface queue callback with no frame outstanding"));
        }
        self.blocked = false;
        Ok(())
    }
}
