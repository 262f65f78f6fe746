//! Discrete-event core: virtual clock, event queue, timers and the seeded RNG.

mod rng;
mod scheduler;
mod timer;

pub use rng::SimRng;
pub use scheduler::{Event, EventId, Scheduler, SimTime};
pub use timer::{Timer, TimerState};
