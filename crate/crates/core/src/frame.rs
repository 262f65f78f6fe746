//! Simulated packets: common header, 802.11 MAC header and the transmit
//! stamp every copy carries across the channel.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub const BROADCAST: NodeId = NodeId(u32::MAX);

    pub fn is_broadcast(self) -> bool {
        self == Self::BROADCAST
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_broadcast() {
            f.write_str("bcast")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Position { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameType {
    Rts,
    Cts,
    Data,
    Ack,
}

impl FrameType {
    pub fn is_control(self) -> bool {
        !matches!(self, FrameType::Data)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameType::Rts => "RTS",
            FrameType::Cts => "CTS",
            FrameType::Data => "DATA",
            FrameType::Ack => "ACK",
        }
    }
}

impl fmt::Display for FrameType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacHeader {
    pub frame_type: FrameType,
    /// NAV field in microseconds.
    pub duration_us: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub retry: bool,
    pub seq: u32,
}

/// Transmit-side stamp plus the receive power filled in by the receiving
/// interface.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TxInfo {
    pub tx_power: f64,
    pub gt: f64,
    pub antenna_height: f64,
    pub tx_position: Position,
    pub lambda: f64,
    /// Linear capture ratio (10 dB -> 10.0).
    pub capture_threshold: f64,
    rx_power: Option<f64>,
}

impl TxInfo {
    pub fn stamp(
        tx_power: f64,
        gt: f64,
        tx_position: Position,
        lambda: f64,
        capture_threshold: f64,
    ) -> Self {
        TxInfo {
            tx_power,
            gt,
            antenna_height: tx_position.z,
            tx_position,
            lambda,
            capture_threshold,
            rx_power: None,
        }
    }

    pub fn rx_power(&self) -> Option<f64> {
        self.rx_power
    }

    /// Record the received power. Returns false (and leaves the value alone)
    /// if it was already set.
    pub fn set_rx_power(&mut self, pr: f64) -> bool {
        if self.rx_power.is_some() {
            return false;
        }
        self.rx_power = Some(pr);
        true
    }
}

/// Upper-layer payload carried by a DATA frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Payload {
    pub flow: usize,
    pub seq: u64,
    pub bytes: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub uid: u64,
    pub direction: Direction,
    /// Bytes on the air (MAC header included).
    pub size: u32,
    pub error: bool,
    pub header: MacHeader,
    pub txinfo: TxInfo,
    /// Airtime as computed by the sender, seconds.
    pub airtime: f64,
    pub payload: Option<Payload>,
}

impl Frame {
    pub fn frame_type(&self) -> FrameType {
        self.header.frame_type
    }

    pub fn rx_power(&self) -> f64 {
        self.txinfo.rx_power().unwrap_or(0.0)
    }
}
