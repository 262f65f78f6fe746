//! Experiment assembly: node placement, traffic, the interface queue,
//! metrics and the simulation loop that ties the stack together.

mod generate;
mod ifq;
mod metrics;
mod world;

use serde::{Deserialize, Serialize};

use crate::frame::NodeId;

pub use generate::generate_random_scenario;
pub use ifq::Ifq;
pub use metrics::{FlowCounters, FlowMetrics, Metrics, MetricsCollector, NodeMetrics};
pub use world::{RunOutput, Simulation};

/// A static node. Either absolute (`x`, `y`) or placed relative to another
/// node with `polar`, in which case the layout distance sets the radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: NodeId,
    #[serde(default)]
    pub x: f64,
    #[serde(default)]
    pub y: f64,
    /// Antenna height; defaults to the radio's antenna height.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    /// Transmit power override, watts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polar: Option<Polar>,
}

/// `position = pos(from) + (distance + offset) * (cos bearing, sin bearing)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polar {
    pub from: NodeId,
    #[serde(default)]
    pub bearing_deg: f64,
    /// Added to the layout distance, meters.
    #[serde(default)]
    pub offset: f64,
}

impl NodeSpec {
    pub fn at(id: u32, x: f64, y: f64) -> Self {
        NodeSpec {
            id: NodeId(id),
            x,
            y,
            z: None,
            pt: None,
            polar: None,
        }
    }
}

/// A one-hop CBR flow. `interval == 0` means saturated: the source keeps
/// the interface queue full.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(default = "default_payload")]
    pub payload: u32,
    #[serde(default)]
    pub interval: f64,
    #[serde(default)]
    pub start: f64,
    /// Defaults to the run duration.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
}

pub const DEFAULT_PAYLOAD: u32 = 1000;

fn default_payload() -> u32 {
    DEFAULT_PAYLOAD
}

impl FlowSpec {
    pub fn saturated(src: u32, dst: u32) -> Self {
        FlowSpec {
            src: NodeId(src),
            dst: NodeId(dst),
            payload: DEFAULT_PAYLOAD,
            interval: 0.0,
            start: 0.0,
            stop: None,
        }
    }

    pub fn is_saturated(&self) -> bool {
        self.interval == 0.0
    }
}
