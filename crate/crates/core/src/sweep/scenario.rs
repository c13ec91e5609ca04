use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::biphoton::{BellTarget, TruncationPolicy};
use crate::cavity::{CavitySpec, LossEntry};
use crate::error::{Error, Result};
use crate::materials::{DispersionModel, MaterialRegistry};
use crate::phasematch::{solve_poling_period, CrystalSpec, PmKind, PmType};
use crate::resonator::SourceConfig;
use crate::units::{hz_to_omega, omega_from_wavelength};

pub const NEAR_DEGENERATE_TOML: &str = include_str!("../../data/scenarios/near-degenerate.toml");
pub const NON_DEGENERATE_TOML: &str = include_str!("../../data/scenarios/non-degenerate.toml");

pub const BUILTIN_SCENARIOS: [&str; 2] = ["near-degenerate", "non-degenerate"];

fn two() -> u8 {
    2
}

/// Source geometry and frequencies. The signal is given either as a vacuum
/// wavelength or as an offset from the degenerate point `ω_p/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceParams {
    pub pm: PmKind,
    pub pump_wavelength_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_wavelength_m: Option<f64>,
    /// `(ω_s − ω_p/2) / 2π`, Hz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_offset_hz: Option<f64>,
    pub temperature_k: f64,
    pub joint_length_m: f64,
    /// `l₁ / (l₁ + l₂)`
    pub length_ratio: f64,
    #[serde(default)]
    pub air_path_m: f64,
    #[serde(default)]
    pub delay2_m: f64,
    #[serde(default)]
    pub delay4_m: f64,
    #[serde(default = "two")]
    pub passes: u8,
}

impl SourceParams {
    pub fn pump_omega(&self) -> f64 {
        omega_from_wavelength(self.pump_wavelength_m)
    }

    pub fn signal_omega(&self) -> Result<f64> {
        match (self.signal_wavelength_m, self.signal_offset_hz) {
            (Some(w), None) => Ok(omega_from_wavelength(w)),
            (None, Some(df)) => Ok(0.5 * self.pump_omega() + hz_to_omega(df)),
            _ => Err(Error::InvalidConfig(
                "give exactly one of signal_wavelength_m and signal_offset_hz".into(),
            )),
        }
    }

    fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !(self.pump_wavelength_m > 0.0) {
            out.push("source.pump_wavelength_m must be > 0".into());
        }
        if let Err(e) = self.signal_omega() {
            out.push(format!("source: {e}"));
        } else if let Ok(ws) = self.signal_omega() {
            if !(ws > 0.0 && ws < self.pump_omega()) {
                out.push("source: signal frequency must lie between 0 and the pump frequency".into());
            }
        }
        if !(self.temperature_k > 0.0) {
            out.push("source.temperature_k must be > 0".into());
        }
        if !(self.joint_length_m > 0.0) {
            out.push("source.joint_length_m must be > 0".into());
        }
        if !(self.length_ratio > 0.0 && self.length_ratio < 1.0) {
            out.push("source.length_ratio must lie in (0, 1)".into());
        }
        if !(self.air_path_m >= 0.0) {
            out.push("source.air_path_m must be >= 0".into());
        }
        if !(self.delay2_m >= 0.0) || !(self.delay4_m >= 0.0) {
            out.push("source.delay2_m and source.delay4_m must be >= 0".into());
        }
        if !(self.passes == 1 || self.passes == 2) {
            out.push("source.passes must be 1 or 2".into());
        }
        out
    }

    /// Two-crystal configuration with both crystals poled for the center
    /// frequencies (when a positive period exists).
    pub fn source_config(&self, material: &Arc<DispersionModel>) -> Result<SourceConfig> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(Error::ScenarioValidation(problems));
        }
        let pm = PmType::from_kind(self.pm);
        let wp = self.pump_omega();
        let ws = self.signal_omega()?;
        let l1 = self.joint_length_m * self.length_ratio;
        let l2 = self.joint_length_m - l1;
        let mut c1 = CrystalSpec::new(Arc::clone(material), l1, self.temperature_k);
        if let Ok(period) = solve_poling_period(wp, ws, pm, &c1, self.temperature_k) {
            c1.poling_period_m = period;
        }
        let mut c2 = CrystalSpec::new(Arc::clone(material), l2, self.temperature_k);
        c2.poling_period_m = c1.poling_period_m;
        let mut cfg = SourceConfig::new(c1, c2, self.air_path_m, pm, wp, ws)?;
        cfg.passes_per_roundtrip = self.passes;
        cfg.with_idler_delays(self.delay2_m, self.delay4_m)
    }
}

/// A sweepable scenario field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Parameter {
    LengthRatio,
    JointLengthM,
    /// Sets both idler delays Δl₂ = Δl₄.
    DelayM,
    Delay2M,
    Delay4M,
    TemperatureK,
    AirPathM,
    SignalOffsetHz,
    /// Sets R₁ = R₂.
    Reflectivity,
    /// Replaces the loss ledger by a single round-trip loss η.
    Loss,
    EffectiveLengthM,
}

impl Parameter {
    pub const ALL: [Parameter; 11] = [
        Parameter::LengthRatio,
        Parameter::JointLengthM,
        Parameter::DelayM,
        Parameter::Delay2M,
        Parameter::Delay4M,
        Parameter::TemperatureK,
        Parameter::AirPathM,
        Parameter::SignalOffsetHz,
        Parameter::Reflectivity,
        Parameter::Loss,
        Parameter::EffectiveLengthM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Parameter::LengthRatio => "length_ratio",
            Parameter::JointLengthM => "joint_length",
            Parameter::DelayM => "delay",
            Parameter::Delay2M => "delay2",
            Parameter::Delay4M => "delay4",
            Parameter::TemperatureK => "temperature",
            Parameter::AirPathM => "air_path",
            Parameter::SignalOffsetHz => "signal_offset",
            Parameter::Reflectivity => "reflectivity",
            Parameter::Loss => "loss",
            Parameter::EffectiveLengthM => "effective_length",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Parameter::LengthRatio | Parameter::Reflectivity | Parameter::Loss => "1",
            Parameter::TemperatureK => "K",
            Parameter::SignalOffsetHz => "Hz",
            _ => "m",
        }
    }

    pub fn apply(self, scenario: &mut Scenario, value: f64) {
        let s = &mut scenario.source;
        match self {
            Parameter::LengthRatio => s.length_ratio = value,
            Parameter::JointLengthM => s.joint_length_m = value,
            Parameter::DelayM => {
                s.delay2_m = value;
                s.delay4_m = value;
            }
            Parameter::Delay2M => s.delay2_m = value,
            Parameter::Delay4M => s.delay4_m = value,
            Parameter::TemperatureK => s.temperature_k = value,
            Parameter::AirPathM => s.air_path_m = value,
            Parameter::SignalOffsetHz => {
                s.signal_offset_hz = Some(value);
                s.signal_wavelength_m = None;
            }
            Parameter::Reflectivity => {
                scenario.cavity.r1 = value;
                scenario.cavity.r2 = value;
            }
            Parameter::Loss => scenario.cavity.ledger = vec![LossEntry::new("round trip", value, 1)],
            Parameter::EffectiveLengthM => scenario.cavity.effective_length_m = value,
        }
    }
}

impl fmt::Display for Parameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An output column of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    #[serde(alias = "bandwidth")]
    Bandwidth1,
    Bandwidth2,
    Cluster1,
    Cluster2,
    Cluster1SecondOrder,
    Cluster2SecondOrder,
    Joint,
    #[serde(alias = "fidelity_single")]
    FidelitySingle1,
    FidelitySingle2,
    FidelityBell,
    Finesse,
    Linewidth,
    Sensitivity,
    PolingPeriod,
}

impl Quantity {
    pub const ALL: [Quantity; 14] = [
        Quantity::Bandwidth1,
        Quantity::Bandwidth2,
        Quantity::Cluster1,
        Quantity::Cluster2,
        Quantity::Cluster1SecondOrder,
        Quantity::Cluster2SecondOrder,
        Quantity::Joint,
        Quantity::FidelitySingle1,
        Quantity::FidelitySingle2,
        Quantity::FidelityBell,
        Quantity::Finesse,
        Quantity::Linewidth,
        Quantity::Sensitivity,
        Quantity::PolingPeriod,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Quantity::Bandwidth1 => "bandwidth1",
            Quantity::Bandwidth2 => "bandwidth2",
            Quantity::Cluster1 => "cluster1",
            Quantity::Cluster2 => "cluster2",
            Quantity::Cluster1SecondOrder => "cluster1_second_order",
            Quantity::Cluster2SecondOrder => "cluster2_second_order",
            Quantity::Joint => "joint",
            Quantity::FidelitySingle1 => "fidelity_single1",
            Quantity::FidelitySingle2 => "fidelity_single2",
            Quantity::FidelityBell => "fidelity_bell",
            Quantity::Finesse => "finesse",
            Quantity::Linewidth => "linewidth",
            Quantity::Sensitivity => "sensitivity",
            Quantity::PolingPeriod => "poling_period",
        }
    }

    pub fn unit(self) -> &'static str {
        match self {
            Quantity::FidelitySingle1 | Quantity::FidelitySingle2 | Quantity::FidelityBell | Quantity::Finesse => "1",
            Quantity::Sensitivity => "Hz/K",
            Quantity::PolingPeriod => "m",
            _ => "Hz",
        }
    }

    pub fn needs_comb(self) -> bool {
        matches!(
            self,
            Quantity::FidelitySingle1 | Quantity::FidelitySingle2 | Quantity::FidelityBell
        )
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Quantity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "bandwidth" => "bandwidth1",
            "fidelity_single" => "fidelity_single1",
            other => other,
        };
        Quantity::ALL
            .into_iter()
            .find(|q| q.name() == alias)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown quantity '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

/// One sweep axis: `start..=stop` by `step`, or `points` samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisSpec {
    pub parameter: Parameter,
    pub start: f64,
    pub stop: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default)]
    pub scale: Scale,
}

impl AxisSpec {
    pub fn linear(parameter: Parameter, start: f64, stop: f64, points: usize) -> AxisSpec {
        AxisSpec {
            parameter,
            start,
            stop,
            step: None,
            points: Some(points),
            scale: Scale::Linear,
        }
    }

    pub fn log(parameter: Parameter, start: f64, stop: f64, points: usize) -> AxisSpec {
        AxisSpec {
            scale: Scale::Log,
            ..AxisSpec::linear(parameter, start, stop, points)
        }
    }

    pub(crate) fn problems(&self, index: usize) -> Vec<String> {
        let at = format!("axes[{index}] ({})", self.parameter);
        let mut out = Vec::new();
        if !self.start.is_finite() || !self.stop.is_finite() {
            out.push(format!("{at}: start and stop must be finite"));
        }
        match (self.step, self.points) {
            (Some(step), None) => {
                if !(step > 0.0) {
                    out.push(format!("{at}: step must be > 0"));
                }
                if self.stop < self.start {
                    out.push(format!("{at}: stop must be >= start"));
                }
                if self.scale == Scale::Log {
                    out.push(format!("{at}: log scale needs `points`, not `step`"));
                }
                if step > 0.0 && (self.stop - self.start) / step > 1e7 {
                    out.push(format!("{at}: more than 1e7 points"));
                }
            }
            (None, Some(points)) => {
                if points == 0 {
                    out.push(format!("{at}: points must be >= 1"));
                }
            }
            _ => out.push(format!("{at}: give exactly one of `step` and `points`")),
        }
        if self.scale == Scale::Log && !(self.start > 0.0 && self.stop > 0.0) {
            out.push(format!("{at}: log scale needs positive bounds"));
        }
        out
    }

    /// Grid values in order.
    pub fn values(&self) -> Vec<f64> {
        match (self.step, self.points, self.scale) {
            (Some(step), _, _) => {
                let n = ((self.stop - self.start) / step * (1.0 + 1e-12)).floor() as usize;
                // (s/h + k)·h keeps round grids like 0.05, 0.10, ... exact
                (0..=n).map(|k| (self.start / step + k as f64) * step).collect()
            }
            (None, Some(1), _) => vec![self.start],
            (None, Some(n), Scale::Linear) => (0..n)
                .map(|k| self.start + (self.stop - self.start) * k as f64 / (n - 1) as f64)
                .collect(),
            (None, Some(n), Scale::Log) => {
                let (a, b) = (self.start.ln(), self.stop.ln());
                (0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect()
            }
            (None, None, _) => Vec::new(),
        }
    }
}

/// A complete, strictly parsed design scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default = "default_material")]
    pub material: String,
    pub source: SourceParams,
    pub cavity: CavitySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<BellTarget>,
    #[serde(default)]
    pub truncation: TruncationPolicy,
    #[serde(default)]
    pub axes: Vec<AxisSpec>,
    #[serde(default)]
    pub outputs: Vec<Quantity>,
}

fn default_material() -> String {
    "MgO:CLN".into()
}

impl Scenario {
    pub fn builtin(name: &str) -> Result<Scenario> {
        let text = match name {
            "near-degenerate" => NEAR_DEGENERATE_TOML,
            "non-degenerate" => NON_DEGENERATE_TOML,
            other => return Err(Error::InvalidConfig(format!("no built-in scenario '{other}'"))),
        };
        Scenario::from_toml_str(text)
    }

    pub fn from_toml_str(text: &str) -> Result<Scenario> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Scenario> {
        Scenario::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// Built-in name or path to a scenario file.
    pub fn resolve(name_or_path: &str) -> Result<Scenario> {
        if BUILTIN_SCENARIOS.contains(&name_or_path) {
            Scenario::builtin(name_or_path)
        } else {
            Scenario::load(name_or_path)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Output(e.to_string()))
    }

    /// SHA-256 of the canonical JSON form.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("scenario serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn target(&self) -> BellTarget {
        self.target.unwrap_or_else(|| BellTarget::default_for(self.source.pm))
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = self.source.problems();
        if let Err(e) = self.cavity.validate() {
            problems.push(format!("cavity: {e}"));
        }
        if self.outputs.is_empty() {
            problems.push("outputs: at least one quantity is required".into());
        }
        if self.axes.len() > 2 {
            problems.push("axes: at most two sweep axes are supported".into());
        }
        for (i, axis) in self.axes.iter().enumerate() {
            problems.extend(axis.problems(i));
        }
        if self.axes.len() == 2 && self.axes[0].parameter == self.axes[1].parameter {
            problems.push("axes: the two axes sweep the same parameter".into());
        }
        if let Some(t) = self.target {
            if let Err(e) = t.check_compatible(self.source.pm) {
                problems.push(format!("target: {e}"));
            }
        }
        if !(self.truncation.rel_tol > 0.0) || self.truncation.max_order == 0 {
            problems.push("truncation: rel_tol must be > 0 and max_order >= 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ScenarioValidation(problems))
        }
    }

    pub fn material(&self, registry: &MaterialRegistry) -> Result<Arc<DispersionModel>> {
        registry.get(&self.material)
    }
}
