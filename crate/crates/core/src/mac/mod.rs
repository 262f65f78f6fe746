//! 802.11 DCF: CSMA/CA with binary exponential backoff, virtual carrier
//! sense, RTS/CTS/DATA/ACK exchange and the two-signal capture model.

mod backoff;
mod dcf;

use std::fmt;

pub use backoff::BackoffTimer;
pub use dcf::{Mac, MacCtx, MacOutput};

use crate::error::{Error, Result};
use crate::phy::{txtime, PhyParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MacState {
    Idle,
    Recv,
    Send,
    Rts,
    Cts,
    Ack,
    Coll,
}

impl MacState {
    pub fn is_rx_state(self) -> bool {
        matches!(self, MacState::Idle | MacState::Recv | MacState::Coll)
    }

    pub fn is_tx_state(self) -> bool {
        matches!(
            self,
            MacState::Idle | MacState::Send | MacState::Rts | MacState::Cts | MacState::Ack
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MacState::Idle => "IDLE",
            MacState::Recv => "RECV",
            MacState::Send => "SEND",
            MacState::Rts => "RTS",
            MacState::Cts => "CTS",
            MacState::Ack => "ACK",
            MacState::Coll => "COLL",
        }
    }
}

impl fmt::Display for MacState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// The six per-node timers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MacTimer {
    Backoff,
    Defer,
    /// Interface busy while our own frame is on the air.
    Interface,
    Nav,
    Recv,
    Send,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacParams {
    pub slot_time: f64,
    pub sifs: f64,
    pub difs: f64,
    pub eifs: f64,
    pub cw_min: u32,
    pub cw_max: u32,
    pub short_retry_limit: u32,
    pub long_retry_limit: u32,
    /// Frames larger than this (bytes on air) use RTS/CTS.
    pub rts_threshold: u32,
    pub cp_thresh_db: f64,
    pub eifs_enabled: bool,
    pub basic_rate: f64,
    pub data_rate: f64,
    pub plcp_overhead: f64,
    /// Allowance added per hop when arming response timeouts.
    pub max_prop_delay: f64,
    pub header_bytes: u32,
    pub rts_bytes: u32,
    pub cts_bytes: u32,
    pub ack_bytes: u32,
}

impl Default for MacParams {
    fn default() -> Self {
        let phy = PhyParams::default();
        let sifs = 10e-6;
        let slot_time = 20e-6;
        let difs = sifs + 2.0 * slot_time;
        let ack_bytes = 14;
        let eifs = default_eifs(sifs, difs, ack_bytes, phy.basic_rate, phy.plcp_overhead);
        MacParams {
            slot_time,
            sifs,
            difs,
            eifs,
            cw_min: 31,
            cw_max: 1023,
            short_retry_limit: 7,
            long_retry_limit: 4,
            rts_threshold: 3000,
            cp_thresh_db: phy.cp_thresh_db,
            eifs_enabled: true,
            basic_rate: phy.basic_rate,
            data_rate: phy.data_rate,
            plcp_overhead: phy.plcp_overhead,
            max_prop_delay: 2e-6,
            header_bytes: 28,
            rts_bytes: 20,
            cts_bytes: 14,
            ack_bytes,
        }
    }
}

/// SIFS + DIFS + ACK airtime at the basic rate.
pub fn default_eifs(sifs: f64, difs: f64, ack_bytes: u32, basic_rate: f64, plcp: f64) -> f64 {
    sifs + difs + plcp + 8.0 * ack_bytes as f64 / basic_rate
}

impl MacParams {
    pub fn validate(&self) -> Result<()> {
        let expect_difs = self.sifs + 2.0 * self.slot_time;
        if (self.difs - expect_difs).abs() > 1e-12 {
            return Err(Error::input(format!(
                "difs ({}) must equal sifs + 2*slot_time ({expect_difs})",
                self.difs
            )));
        }
        if self.eifs + 1e-12 < self.difs {
            return Err(Error::input(format!("eifs ({}) must be >= difs ({})", self.eifs, self.difs)));
        }
        if !(self.slot_time > 0.0) || !(self.sifs > 0.0) {
            return Err(Error::input("slot_time and sifs must be positive"));
        }
        if self.cw_min == 0 || self.cw_min > self.cw_max {
            return Err(Error::input(format!(
                "need 0 < cw_min <= cw_max, got {} / {}",
                self.cw_min, self.cw_max
            )));
        }
        if self.short_retry_limit == 0 || self.long_retry_limit == 0 {
            return Err(Error::input("retry limits must be at least 1"));
        }
        if !(self.basic_rate > 0.0) || !(self.data_rate > 0.0) {
            return Err(Error::input("rates must be positive"));
        }
        if !(self.max_prop_delay >= 0.0) || !(self.plcp_overhead >= 0.0) {
            return Err(Error::input("max_prop_delay and plcp_overhead must be non-negative"));
        }
        for (name, v) in [
            ("header_bytes", self.header_bytes),
            ("rts_bytes", self.rts_bytes),
            ("cts_bytes", self.cts_bytes),
            ("ack_bytes", self.ack_bytes),
        ] {
            if v == 0 {
                return Err(Error::input(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    pub fn cp_thresh_linear(&self) -> f64 {
        10f64.powf(self.cp_thresh_db / 10.0)
    }

    pub fn data_txtime(&self, size: u32) -> f64 {
        txtime(size, self.data_rate, self.plcp_overhead).unwrap_or(self.plcp_overhead)
    }

    pub fn basic_txtime(&self, size: u32) -> f64 {
        txtime(size, self.basic_rate, self.plcp_overhead).unwrap_or(self.plcp_overhead)
    }

    pub fn ack_time(&self) -> f64 {
        self.basic_txtime(self.ack_bytes)
    }

    pub fn cts_time(&self) -> f64 {
        self.basic_txtime(self.cts_bytes)
    }

    pub fn rts_time(&self) -> f64 {
        self.basic_txtime(self.rts_bytes)
    }

    pub fn uses_rts(&self, size: u32) -> bool {
        size > self.rts_threshold
    }
}

/// Seconds to the integer microseconds carried in a duration field.
pub fn usec(t: f64) -> u32 {
    if t <= 0.0 {
        0
    } else {
        (t * 1e6 + 0.5).floor() as u32
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_timing_constants() {
        let p = MacParams::default();
        p.validate().unwrap();
        assert!((p.difs - 50e-6).abs() < 1e-15);
        assert!((p.eifs - 364e-6).abs() < 1e-12);
        assert!((p.ack_time() - 304e-6).abs() < 1e-12);
        assert!((p.cp_thresh_linear() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn validation_catches_inconsistent_ifs() {
        let p = MacParams {
            difs: 40e-6,
            ..MacParams::default()
        };
        assert!(p.validate().is_err());
        let p = MacParams {
            eifs: 20e-6,
            ..MacParams::default()
        };
        assert!(p.validate().is_err());
        let p = MacParams {
            cw_min: 64,
            cw_max: 32,
            ..MacParams::default()
        };
        assert!(p.validate().is_err());
    }

    #[test]
    fn usec_rounds_to_nearest() {
        assert_eq!(usec(314e-6), 314);
        assert_eq!(usec(1.6444e-3), 1644);
        assert_eq!(usec(-1.0), 0);
    }

    #[test]
    fn state_domains() {
        for s in [MacState::Idle, MacState::Recv, MacState::Coll] {
            assert!(s.is_rx_state());
        }
        for s in [MacState::Send, MacState::Rts, MacState::Cts, MacState::Ack] {
            assert!(s.is_tx_state() && !s.is_rx_state());
        }
        assert!(!MacState::Coll.is_tx_state());
    }
}
