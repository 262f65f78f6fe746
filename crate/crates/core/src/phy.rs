//! Wireless interface and shared channel.
//!
//! The sending interface stamps a [`TxInfo`] on the frame; the channel hands
//! an independent copy to every node inside carrier-sense range, delayed by
//! the propagation time; each receiving interface computes the received
//! power and sorts the copy into one of three classes.

use crate::error::{Error, Result};
use crate::frame::{Direction, Frame, Position, TxInfo};
use crate::radio::{self, FadingModel, RadioParams, SPEED_OF_LIGHT};
use crate::sim::{SimRng, SimTime};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams {
    /// Carrier-sense threshold, watts.
    pub cs_thresh: f64,
    /// Receive threshold, watts.
    pub rx_thresh: f64,
    pub cp_thresh_db: f64,
    /// DATA rate, bits/s.
    pub data_rate: f64,
    /// Control-frame rate, bits/s.
    pub basic_rate: f64,
    /// PLCP preamble + header time added to every frame, seconds.
    pub plcp_overhead: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            cs_thresh: radio::default_cs_thresh(),
            rx_thresh: radio::default_rx_thresh(),
            cp_thresh_db: 10.0,
            data_rate: 11e6,
            basic_rate: 1e6,
            plcp_overhead: 192e-6,
        }
    }
}

impl PhyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cs_thresh > 0.0) {
            return Err(Error::input("cs_thresh must be positive"));
        }
        if !(self.rx_thresh > self.cs_thresh) {
            return Err(Error::input(format!(
                "rx_thresh ({}) must exceed cs_thresh ({})",
                self.rx_thresh, self.cs_thresh
            )));
        }
        if !(self.data_rate > 0.0) || !(self.basic_rate > 0.0) {
            return Err(Error::input("rates must be positive"));
        }
        if !(self.plcp_overhead >= 0.0) {
            return Err(Error::input("plcp_overhead must be non-negative"));
        }
        if !self.cp_thresh_db.is_finite() {
            return Err(Error::input("cp_thresh_db must be finite"));
        }
        Ok(())
    }

    /// Capture threshold as a linear power ratio.
    pub fn cp_thresh_linear(&self) -> f64 {
        10f64.powf(self.cp_thresh_db / 10.0)
    }

    /// Airtime of a DATA-rate frame.
    pub fn txtime(&self, size: u32) -> Result<f64> {
        txtime(size, self.data_rate, self.plcp_overhead)
    }

    /// Airtime of a basic-rate (control) frame.
    pub fn txtime_basic(&self, size: u32) -> Result<f64> {
        txtime(size, self.basic_rate, self.plcp_overhead)
    }
}

/// `plcp + 8 * size / rate`.
pub fn txtime(size: u32, rate: f64, plcp_overhead: f64) -> Result<f64> {
    if size == 0 {
        return Err(Error::input("frame size must be positive"));
    }
    if !(rate > 0.0) {
        return Err(Error::input(format!("rate must be positive, got {rate}")));
    }
    Ok(plcp_overhead + 8.0 * size as f64 / rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReceptionClass {
    /// Below the carrier-sense threshold; dropped at the interface.
    NotSensed,
    /// Heard but not decodable; handed to the MAC with the error flag set.
    SensedError,
    Decodable,
}

/// Half-open threshold partition: `[0, cs)`, `[cs, rx)`, `[rx, inf)`.
pub fn classify(pr: f64, phy: &PhyParams) -> ReceptionClass {
    if pr < phy.cs_thresh {
        ReceptionClass::NotSensed
    } else if pr < phy.rx_thresh {
        ReceptionClass::SensedError
    } else {
        ReceptionClass::Decodable
    }
}

/// Per-node network interface.
#[derive(Debug, Clone)]
pub struct WirelessPhy {
    pub position: Position,
    pub radio: RadioParams,
    tx_until: SimTime,
}

impl WirelessPhy {
    pub fn new(position: Position, radio: RadioParams) -> Self {
        WirelessPhy {
            position,
            radio: RadioParams {
                ht: position.z,
                hr: position.z,
                ..radio
            },
            tx_until: f64::NEG_INFINITY,
        }
    }

    pub fn is_transmitting(&self, now: SimTime) -> bool {
        now + TX_OVERLAP_SLACK < self.tx_until
    }

    /// Stamp the frame and mark the interface busy for its airtime.
    pub fn send_down(&mut self, frame: &mut Frame, now: SimTime, cp_thresh: f64) -> Result<()> {
        if frame.direction != Direction::Down {
            return Err(Error::fault(format!("frame {} sent down with direction Up", frame.uid)));
        }
        if self.is_transmitting(now) {
            return Err(Error::fault(format!(
                "interface at {:?} asked to transmit frame {} while busy until {}",
                self.position, frame.uid, self.tx_until
            )));
        }
        frame.txinfo = TxInfo::stamp(self.radio.pt, self.radio.gt, self.position, self.radio.lambda, cp_thresh);
        frame.error = false;
        self.tx_until = now + frame.airtime;
        Ok(())
    }

    /// Mean (path-loss) power of `frame` at this interface.
    pub fn mean_rx_power(&self, frame: &Frame) -> Result<f64> {
        let tx = &frame.txinfo;
        let link = RadioParams {
            pt: tx.tx_power,
            gt: tx.gt,
            gr: self.radio.gr,
            ht: tx.antenna_height,
            hr: self.position.z,
            loss: self.radio.loss,
            lambda: tx.lambda,
        };
        radio::two_ray_pr(&link, tx.tx_position.distance(&self.position))
    }

    /// Receive-side processing: path loss, fading, threshold classification.
    /// Sets `rx_power`, the direction and the error flag on `frame`.
    pub fn send_up(
        &self,
        frame: &mut Frame,
        phy: &PhyParams,
        fading: FadingModel,
        rng: &mut SimRng,
    ) -> Result<ReceptionClass> {
        let mean = self.mean_rx_power(frame)?;
        let pr = radio::apply_fading(fading, mean, rng)?;
        if !frame.txinfo.set_rx_power(pr) {
            return Err(Error::fault(format!("rx power of frame {} set twice", frame.uid)));
        }
        frame.direction = Direction::Up;
        let class = classify(pr, phy);
        match class {
            ReceptionClass::SensedError => frame.error = true,
            ReceptionClass::Decodable => frame.error = false,
            ReceptionClass::NotSensed => {}
        }
        Ok(class)
    }
}

/// Tolerance for back-to-back transmissions scheduled at the same instant
/// their predecessor ends.
const TX_OVERLAP_SLACK: f64 = 1e-12;

/// One scheduled copy of a transmitted frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub receiver: usize,
    pub delay: f64,
}

/// The shared medium: knows every interface position and the sensing range.
#[derive(Debug, Clone)]
pub struct WirelessChannel {
    positions: Vec<Position>,
    dist_cst: f64,
}

impl WirelessChannel {
    pub fn new(positions: Vec<Position>, dist_cst: f64) -> Self {
        WirelessChannel { positions, dist_cst }
    }

    /// Sensing range from the strongest transmitter and highest antenna.
    pub fn sensing_range(cs_thresh: f64, radios: &[RadioParams], heights: &[f64]) -> Result<f64> {
        let highest = heights.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
        let strongest = radios
            .iter()
            .max_by(|a, b| (a.pt * a.gt).total_cmp(&(b.pt * b.gt)))
            .copied()
            .unwrap_or_default();
        let p = RadioParams {
            ht: highest,
            hr: highest,
            ..strongest
        };
        radio::get_dist(cs_thresh, &p)
    }

    pub fn dist_cst(&self) -> f64 {
        self.dist_cst
    }

    pub fn positions(&self) -> &[Position] {
        &self.positions
    }

    /// Receivers (other than `sender`) within sensing range, with their
    /// propagation delays.
    pub fn deliver(&self, sender: usize) -> Vec<Delivery> {
        let origin = self.positions[sender];
        self.positions
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != sender)
            .filter_map(|(i, p)| {
                let d = origin.distance(p);
                (d <= self.dist_cst).then(|| Delivery {
                    receiver: i,
                    delay: d / SPEED_OF_LIGHT,
                })
            })
            .collect()
    }
}
