//! Scenario configuration files (TOML).
//!
//! ```toml
//! seed = 1
//! duration = 10.0
//! trace = false
//!
//! [measure]          # throughput window; end defaults to the run end
//! start = 1.0
//!
//! [radio]
//! pt = 0.28183815    # watts
//! gt = 1.0
//! gr = 1.0
//! antenna_height = 1.5
//! system_loss = 1.0
//! frequency = 914e6
//! fading = "none"    # or "rayleigh"
//!
//! [phy]              # thresholds default to the 250 m / 550 m ranges
//! cp_thresh_db = 10.0
//! data_rate = 11e6
//! basic_rate = 1e6
//! plcp_overhead = 192e-6
//!
//! [mac]
//! eifs_enabled = true
//! rts_threshold = 3000
//!
//! [ifq]
//! capacity = 50
//!
//! [layout]           # radius for polar-placed nodes
//! distance = 100.0
//!
//! [[nodes]]
//! id = 0
//! x = 0.0
//! y = 0.0
//!
//! [[nodes]]
//! id = 1
//! polar = { from = 0, bearing_deg = 0.0 }
//!
//! [[flows]]
//! src = 1
//! dst = 0
//! payload = 1000
//! interval = 0.0     # 0 = saturated
//!
//! [sweep]            # optional; used by `dcfsim sweep`
//! param = "distance"
//! values = [50, 100, 150]
//! replications = 1
//! ```
//!
//! Parsing fills every absolute default (thresholds, DIFS, EIFS, antenna
//! heights), so `emit` writes a self-contained file and
//! `parse(emit(c)) == c`. The measurement window end and flow stop times
//! are left unset to mean "end of run".

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{NodeId, Position};
use crate::mac::{default_eifs, MacParams};
use crate::phy::PhyParams;
use crate::radio::{self, FadingModel, RadioParams, SPEED_OF_LIGHT};
use crate::scenario::{FlowSpec, NodeSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_duration")]
    pub duration: f64,
    #[serde(default)]
    pub trace: bool,
    #[serde(default)]
    pub measure: MeasureConfig,
    #[serde(default)]
    pub radio: RadioConfig,
    #[serde(default)]
    pub phy: PhyConfig,
    #[serde(default)]
    pub mac: MacConfig,
    #[serde(default)]
    pub ifq: IfqConfig,
    #[serde(default)]
    pub layout: LayoutConfig,
    #[serde(default)]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub flows: Vec<FlowSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSpec>,
}

fn default_seed() -> u64 {
    1
}

fn default_duration() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureConfig {
    pub start: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<f64>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        MeasureConfig { start: 1.0, end: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RadioConfig {
    pub pt: f64,
    pub gt: f64,
    pub gr: f64,
    pub antenna_height: f64,
    pub system_loss: f64,
    /// Carrier frequency, Hz.
    pub frequency: f64,
    pub fading: FadingModel,
}

impl Default for RadioConfig {
    fn default() -> Self {
        let r = RadioParams::default();
        RadioConfig {
            pt: r.pt,
            gt: r.gt,
            gr: r.gr,
            antenna_height: r.ht,
            system_loss: r.loss,
            frequency: radio::DEFAULT_FREQUENCY_HZ,
            fading: FadingModel::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhyConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cs_thresh: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rx_thresh: Option<f64>,
    pub cp_thresh_db: f64,
    pub data_rate: f64,
    pub basic_rate: f64,
    pub plcp_overhead: f64,
}

impl Default for PhyConfig {
    fn default() -> Self {
        let p = PhyParams::default();
        PhyConfig {
            cs_thresh: None,
            rx_thresh: None,
            cp_thresh_db: p.cp_thresh_db,
            data_rate: p.data_rate,
            basic_rate: p.basic_rate,
            plcp_overhead: p.plcp_overhead,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacConfig {
    pub slot_time: f64,
    pub sifs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub difs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eifs: Option<f64>,
    pub eifs_enabled: bool,
    pub cw_min: u32,
    pub cw_max: u32,
    pub short_retry_limit: u32,
    pub long_retry_limit: u32,
    pub rts_threshold: u32,
    pub max_prop_delay: f64,
    pub header_bytes: u32,
    pub rts_bytes: u32,
    pub cts_bytes: u32,
    pub ack_bytes: u32,
}

impl Default for MacConfig {
    fn default() -> Self {
        let m = MacParams::default();
        MacConfig {
            slot_time: m.slot_time,
            sifs: m.sifs,
            difs: None,
            eifs: None,
            eifs_enabled: m.eifs_enabled,
            cw_min: m.cw_min,
            cw_max: m.cw_max,
            short_retry_limit: m.short_retry_limit,
            long_retry_limit: m.long_retry_limit,
            rts_threshold: m.rts_threshold,
            max_prop_delay: m.max_prop_delay,
            header_bytes: m.header_bytes,
            rts_bytes: m.rts_bytes,
            cts_bytes: m.cts_bytes,
            ack_bytes: m.ack_bytes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IfqConfig {
    pub capacity: usize,
}

impl Default for IfqConfig {
    fn default() -> Self {
        IfqConfig { capacity: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayoutConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distance: Option<f64>,
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    Distance,
    Fading,
    Eifs,
    Seed,
    RtsThreshold,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::Distance => "distance",
            SweepParam::Fading => "fading",
            SweepParam::Eifs => "eifs",
            SweepParam::Seed => "seed",
            SweepParam::RtsThreshold => "rts_threshold",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SweepParam::Distance),
            "fading" => Ok(SweepParam::Fading),
            "eifs" | "eifs_enabled" => Ok(SweepParam::Eifs),
            "seed" => Ok(SweepParam::Seed),
            "rts_threshold" => Ok(SweepParam::RtsThreshold),
            other => Err(Error::input(format!(
                "unknown sweep parameter '{other}' (distance, fading, eifs, seed, rts_threshold)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SweepValue {
    Bool(bool),
    Num(f64),
    Text(String),
}

impl fmt::Display for SweepValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepValue::Bool(b) => write!(f, "{b}"),
            SweepValue::Num(x) => write!(f, "{x}"),
            SweepValue::Text(s) => f.write_str(s),
        }
    }
}

impl SweepValue {
    /// Interpret a command-line token.
    pub fn parse_token(s: &str) -> SweepValue {
        let s = s.trim();
        if let Ok(b) = s.parse::<bool>() {
            SweepValue::Bool(b)
        } else if let Ok(x) = s.parse::<f64>() {
            SweepValue::Num(x)
        } else {
            SweepValue::Text(s.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<SweepValue>,
    #[serde(default = "default_replications")]
    pub replications: u32,
}

fn default_replications() -> u32 {
    1
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("sweep replications must be >= 1".into()));
        }
        let mut probe = ScenarioConfig::default();
        probe.layout.distance = Some(1.0);
        for v in &self.values {
            probe.apply(self.param, v)?;
        }
        Ok(())
    }
}

pub const PRESETS: [(&str, &str); 3] = [
    ("fig6_analog", include_str!("../configs/fig6_analog.toml")),
    ("fig8_capture", include_str!("../configs/fig8_capture.toml")),
    ("baseline_single_flow", include_str!("../configs/baseline_single_flow.toml")),
];

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: default_seed(),
            duration: default_duration(),
            trace: false,
            measure: MeasureConfig::default(),
            radio: RadioConfig::default(),
            phy: PhyConfig::default(),
            mac: MacConfig::default(),
            ifq: IfqConfig::default(),
            layout: LayoutConfig::default(),
            nodes: Vec::new(),
            flows: Vec::new(),
            sweep: None,
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    /// Parse, fill defaults and validate.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.fill_defaults();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn preset(name: &str) -> Result<Self> {
        PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::parse(text))
            .unwrap_or_else(|| {
                let names: Vec<_> = PRESETS.iter().map(|(n, _)| *n).collect();
                Err(Error::input(format!("unknown preset '{name}' (have: {})", names.join(", "))))
            })
    }

    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Make every derivable absolute default explicit.
    pub fn fill_defaults(&mut self) {
        self.phy.cs_thresh.get_or_insert_with(radio::default_cs_thresh);
        self.phy.rx_thresh.get_or_insert_with(radio::default_rx_thresh);
        let m = &mut self.mac;
        let difs = *m.difs.get_or_insert(m.sifs + 2.0 * m.slot_time);
        let eifs = default_eifs(m.sifs, difs, m.ack_bytes, self.phy.basic_rate, self.phy.plcp_overhead);
        m.eifs.get_or_insert(eifs);
        for n in &mut self.nodes {
            n.z.get_or_insert(self.radio.antenna_height);
        }
    }

    pub fn radio_params(&self) -> RadioParams {
        RadioParams {
            pt: self.radio.pt,
            gt: self.radio.gt,
            gr: self.radio.gr,
            ht: self.radio.antenna_height,
            hr: self.radio.antenna_height,
            loss: self.radio.system_loss,
            lambda: SPEED_OF_LIGHT / self.radio.frequency,
        }
    }

    pub fn phy_params(&self) -> PhyParams {
        PhyParams {
            cs_thresh: self.phy.cs_thresh.unwrap_or_else(radio::default_cs_thresh),
            rx_thresh: self.phy.rx_thresh.unwrap_or_else(radio::default_rx_thresh),
            cp_thresh_db: self.phy.cp_thresh_db,
            data_rate: self.phy.data_rate,
            basic_rate: self.phy.basic_rate,
            plcp_overhead: self.phy.plcp_overhead,
        }
    }

    pub fn mac_params(&self) -> MacParams {
        let m = &self.mac;
        let difs = m.difs.unwrap_or(m.sifs + 2.0 * m.slot_time);
        MacParams {
            slot_time: m.slot_time,
            sifs: m.sifs,
            difs,
            eifs: m
                .eifs
                .unwrap_or_else(|| default_eifs(m.sifs, difs, m.ack_bytes, self.phy.basic_rate, self.phy.plcp_overhead)),
            cw_min: m.cw_min,
            cw_max: m.cw_max,
            short_retry_limit: m.short_retry_limit,
            long_retry_limit: m.long_retry_limit,
            rts_threshold: m.rts_threshold,
            cp_thresh_db: self.phy.cp_thresh_db,
            eifs_enabled: m.eifs_enabled,
            basic_rate: self.phy.basic_rate,
            data_rate: self.phy.data_rate,
            plcp_overhead: self.phy.plcp_overhead,
            max_prop_delay: m.max_prop_delay,
            header_bytes: m.header_bytes,
            rts_bytes: m.rts_bytes,
            cts_bytes: m.cts_bytes,
            ack_bytes: m.ack_bytes,
        }
    }

    /// Measurement window `(start, end)`.
    pub fn window(&self) -> (f64, f64) {
        (self.measure.start, self.measure.end.unwrap_or(self.duration))
    }

    /// Absolute node positions, resolving polar placements in file order.
    pub fn positions(&self) -> Result<Vec<Position>> {
        let mut out: Vec<Position> = Vec::with_capacity(self.nodes.len());
        for (i, n) in self.nodes.iter().enumerate() {
            let z = n.z.unwrap_or(self.radio.antenna_height);
            let pos = match &n.polar {
                None => Position::new(n.x, n.y, z),
                Some(p) => {
                    let base = self.nodes[..i]
                        .iter()
                        .position(|m| m.id == p.from)
                        .map(|j| out[j])
                        .ok_or_else(|| {
                            cfg_err(format!("node {}: polar anchor {} must be listed earlier", n.id, p.from))
                        })?;
                    let d = self
                        .layout
                        .distance
                        .ok_or_else(|| cfg_err(format!("node {} is polar-placed but [layout] distance is unset", n.id)))?;
                    let r = d + p.offset;
                    let b = p.bearing_deg.to_radians();
                    Position::new(base.x + r * b.cos(), base.y + r * b.sin(), z)
                }
            };
            out.push(pos);
        }
        Ok(out)
    }

    /// Index of node `id` in `nodes`.
    pub fn node_index(&self, id: NodeId) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || !self.duration.is_finite() {
            return Err(cfg_err(format!("duration must be positive, got {}", self.duration)));
        }
        let (t0, t1) = self.window();
        if !(t0 >= 0.0) || !(t1 > t0) || t1 > self.duration {
            return Err(cfg_err(format!(
                "measurement window [{t0}, {t1}] must satisfy 0 <= start < end <= duration ({})",
                self.duration
            )));
        }
        if !(self.radio.frequency > 0.0) {
            return Err(cfg_err("radio frequency must be positive"));
        }
        self.radio_params().validate().map_err(|e| cfg_err(format!("[radio] {e}")))?;
        self.phy_params().validate().map_err(|e| cfg_err(format!("[phy] {e}")))?;
        self.mac_params().validate().map_err(|e| cfg_err(format!("[mac] {e}")))?;
        if self.ifq.capacity == 0 {
            return Err(cfg_err("[ifq] capacity must be at least 1"));
        }
        if let Some(d) = self.layout.distance {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(cfg_err(format!("[layout] distance must be non-negative, got {d}")));
            }
        }
        let mut ids = HashSet::new();
        for n in &self.nodes {
            if n.id.is_broadcast() {
                return Err(cfg_err(format!("node id {} is reserved for broadcast", u32::MAX)));
            }
            if !ids.insert(n.id) {
                return Err(cfg_err(format!("duplicate node id {}", n.id)));
            }
            if let Some(pt) = n.pt {
                if !(pt > 0.0) {
                    return Err(cfg_err(format!("node {}: pt must be positive", n.id)));
                }
            }
            if let Some(z) = n.z {
                if !(z > 0.0) {
                    return Err(cfg_err(format!("node {}: antenna height must be positive", n.id)));
                }
            }
        }
        let positions = self.positions()?;
        if positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(cfg_err("node positions must be finite"));
        }
        for (i, f) in self.flows.iter().enumerate() {
            if f.src == f.dst {
                return Err(cfg_err(format!("flow {i}: src and dst are both {}", f.src)));
            }
            if !ids.contains(&f.src) {
                return Err(cfg_err(format!("flow {i}: unknown src node {}", f.src)));
            }
            if !ids.contains(&f.dst) && !f.dst.is_broadcast() {
                return Err(cfg_err(format!("flow {i}: unknown dst node {}", f.dst)));
            }
            if f.payload == 0 {
                return Err(cfg_err(format!("flow {i}: payload must be positive")));
            }
            if !(f.interval >= 0.0) || !f.interval.is_finite() {
                return Err(cfg_err(format!("flow {i}: interval must be >= 0")));
            }
            let stop = f.stop.unwrap_or(self.duration);
            if !(f.start >= 0.0) || !(stop > f.start) {
                return Err(cfg_err(format!("flow {i}: need 0 <= start < stop, got {} / {stop}", f.start)));
            }
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        Ok(())
    }

    /// Set one sweepable parameter.
    pub fn apply(&mut self, param: SweepParam, value: &SweepValue) -> Result<()> {
        let bad = || Error::input(format!("sweep value '{value}' does not fit parameter {param}"));
        match (param, value) {
            (SweepParam::Distance, SweepValue::Num(d)) if *d >= 0.0 => self.layout.distance = Some(*d),
            (SweepParam::Fading, SweepValue::Text(s)) => self.radio.fading = s.parse()?,
            (SweepParam::Fading, SweepValue::Bool(b)) => {
                self.radio.fading = if *b { FadingModel::Rayleigh } else { FadingModel::None }
            }
            (SweepParam::Eifs, SweepValue::Bool(b)) => self.mac.eifs_enabled = *b,
            (SweepParam::Seed, SweepValue::Num(x)) if *x >= 0.0 && x.fract() == 0.0 => self.seed = *x as u64,
            (SweepParam::RtsThreshold, SweepValue::Num(x)) if *x >= 0.0 && x.fract() == 0.0 => {
                self.mac.rts_threshold = *x as u32
            }
            _ => return Err(bad()),
        }
        Ok(())
    }
}
