//! Propagation math: free-space (Friis) and two-ray ground path loss,
//! threshold-to-range inversion and per-reception Rayleigh fading.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimRng;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Legacy ns-2 radio: 914 MHz, 0.28183815 W, unity gains, 1.5 m antennas.
pub const DEFAULT_FREQUENCY_HZ: f64 = 914e6;
pub const DEFAULT_PT: f64 = 0.281_838_15;
pub const DEFAULT_ANTENNA_HEIGHT: f64 = 1.5;

/// Distances at which the default receive and carrier-sense thresholds are
/// derived.
pub const DEFAULT_RX_RANGE: f64 = 250.0;
pub const DEFAULT_CS_RANGE: f64 = 550.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioParams {
    /// Transmit power, watts.
    pub pt: f64,
    pub gt: f64,
    pub gr: f64,
    /// Transmitter / receiver antenna heights, meters.
    pub ht: f64,
    pub hr: f64,
    /// System loss factor, >= 1.
    pub loss: f64,
    /// Carrier wavelength, meters.
    pub lambda: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            pt: DEFAULT_PT,
            gt: 1.0,
            gr: 1.0,
            ht: DEFAULT_ANTENNA_HEIGHT,
            hr: DEFAULT_ANTENNA_HEIGHT,
            loss: 1.0,
            lambda: SPEED_OF_LIGHT / DEFAULT_FREQUENCY_HZ,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("pt", self.pt),
            ("gt", self.gt),
            ("gr", self.gr),
            ("ht", self.ht),
            ("hr", self.hr),
            ("lambda", self.lambda),
        ];
        for (name, v) in fields {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("radio parameter {name} must be positive, got {v}")));
            }
        }
        if !(self.loss >= 1.0) || !self.loss.is_finite() {
            return Err(Error::input(format!(
                "system loss factor must be >= 1, got {}",
                self.loss
            )));
        }
        Ok(())
    }
}

fn check_distance(d: f64) -> Result<()> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::input(format!("distance must be positive, got {d}")));
    }
    Ok(())
}

/// Friis free-space received power, `Pt Gt Gr λ² / ((4π d)² L)`.
pub fn friis_pr(p: &RadioParams, d: f64) -> Result<f64> {
    check_distance(d)?;
    let m = p.lambda / (4.0 * PI * d);
    Ok(p.pt * p.gt * p.gr * m * m / p.loss)
}

/// Distance beyond which the ground reflection dominates, `4π ht hr / λ`.
pub fn crossover_dist(ht: f64, hr: f64, lambda: f64) -> Result<f64> {
    for (name, v) in [("ht", ht), ("hr", hr), ("lambda", lambda)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::input(format!("{name} must be positive, got {v}")));
        }
    }
    Ok(4.0 * PI * ht * hr / lambda)
}

fn fourth_power_pr(p: &RadioParams, d: f64) -> f64 {
    let h2 = p.ht * p.ht * p.hr * p.hr;
    let d2 = d * d;
    p.pt * p.gt * p.gr * h2 / (d2 * d2 * p.loss)
}

/// Two-ray ground received power: Friis below the crossover distance,
/// `Pt Gt Gr ht² hr² / (d⁴ L)` at and beyond it.
pub fn two_ray_pr(p: &RadioParams, d: f64) -> Result<f64> {
    check_distance(d)?;
    let xover = crossover_dist(p.ht, p.hr, p.lambda)?;
    if d < xover {
        friis_pr(p, d)
    } else {
        Ok(fourth_power_pr(p, d))
    }
}

/// Distance at which [`two_ray_pr`] equals `threshold`.
///
/// The power at the crossover decides the regime: thresholds weaker than it
/// are reached on the fourth-power branch, stronger ones on the Friis branch.
pub fn get_dist(threshold: f64, p: &RadioParams) -> Result<f64> {
    if !(threshold > 0.0) || !threshold.is_finite() {
        return Err(Error::input(format!("threshold must be positive, got {threshold}")));
    }
    p.validate()?;
    let xover = crossover_dist(p.ht, p.hr, p.lambda)?;
    let base = p.pt * p.gt * p.gr / p.loss;
    if threshold <= fourth_power_pr(p, xover) {
        Ok((base * p.ht * p.ht * p.hr * p.hr / threshold).powf(0.25))
    } else {
        Ok((base / threshold).sqrt() * p.lambda / (4.0 * PI))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FadingModel {
    #[default]
    None,
    Rayleigh,
}

impl std::str::FromStr for FadingModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "off" | "false" => Ok(FadingModel::None),
            "rayleigh" | "on" | "true" => Ok(FadingModel::Rayleigh),
            other => Err(Error::input(format!("unknown fading model '{other}'"))),
        }
    }
}

impl std::fmt::Display for FadingModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FadingModel::None => "none",
            FadingModel::Rayleigh => "rayleigh",
        })
    }
}

/// Rayleigh fading makes received power exponential about the path-loss
/// mean; every call is an independent draw.
pub fn apply_fading(model: FadingModel, pr_mean: f64, rng: &mut SimRng) -> Result<f64> {
    if !(pr_mean > 0.0) || !pr_mean.is_finite() {
        return Err(Error::input(format!("mean power must be positive, got {pr_mean}")));
    }
    match model {
        FadingModel::None => Ok(pr_mean),
        FadingModel::Rayleigh => rng.exponential(pr_mean),
    }
}

/// Default receive threshold: the two-ray power at 250 m with default radio.
pub fn default_rx_thresh() -> f64 {
    two_ray_pr(&RadioParams::default(), DEFAULT_RX_RANGE).expect("valid defaults")
}

/// Default carrier-sense threshold: the two-ray power at 550 m.
pub fn default_cs_thresh() -> f64 {
    two_ray_pr(&RadioParams::default(), DEFAULT_CS_RANGE).expect("valid defaults")
}
