use crate::frame::Frame;
use crate::mac::MacTimer;

/// Everything the simulation scheduler can dispatch. Node and flow fields
/// are indices into the simulation's node and flow tables.
#[derive(Debug, Clone)]
pub enum SimEvent {
    /// First bit of a frame copy reaches a receiver's interface.
    Arrival { node: usize, frame: Box<Frame> },
    Mac { node: usize, timer: MacTimer },
    Traffic { flow: usize },
}
