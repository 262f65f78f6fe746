#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Discrete-event simulator for the IEEE 802.11 DCF.
//!
//! The stack mirrors the classic ns-2 wireless node: a centralized event
//! scheduler ([`sim`]), path-loss and fading math ([`radio`]), a
//! threshold-based interface and broadcast channel ([`phy`]), the DCF MAC
//! state machine with two-signal capture ([`mac`]), and experiment assembly
//! ([`scenario`], [`config`], [`sweep`]).
//!
//! ```no_run
//! use dcfsim::{config::ScenarioConfig, scenario::Simulation};
//!
//! let cfg = ScenarioConfig::preset("baseline_single_flow")?;
//! let out = Simulation::run_config(&cfg)?;
//! println!("{:.0} bit/s", out.metrics.total_throughput_bps);
//! # Ok::<(), dcfsim::Error>(())
//! ```

pub mod config;
pub mod error;
pub mod event;
pub mod frame;
pub mod mac;
pub mod phy;
pub mod radio;
pub mod scenario;
pub mod sim;
pub mod sweep;
pub mod trace;

pub use error::{Error, Result};
