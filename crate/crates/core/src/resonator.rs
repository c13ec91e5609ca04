//! Cavity algebra for the four down-converted modes of a two-crystal source.
//!
//! Crystal 2 is rotated by 90° relative to crystal 1. Modes 1 and 2 are the
//! signal and idler generated in crystal 1, modes 3 and 4 those generated in
//! crystal 2. A mode's round-trip phase in units of π is its mode number
//!
//! ```text
//! m_j(ω) = ω / (π c) · (l₁ n_a(ω) + l₂ n_b(ω) + l_air + Δl_j)
//! ```
//!
//! where `(a, b)` are the axes the mode's polarization sees in each crystal.
//! Cluster spacings are returned in Hz; internally the mode-number algebra
//! runs in rad/s.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{Axis, IndexDispersion};
use crate::phasematch::{CrystalSpec, PmType, SpdcProcess};
use crate::roots::quadratic_roots;
use crate::units::{omega_to_hz, Magnitude, C};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ModeId {
    M1,
    M2,
    M3,
    M4,
}

impl ModeId {
    pub const ALL: [ModeId; 4] = [ModeId::M1, ModeId::M2, ModeId::M3, ModeId::M4];

    pub fn index(self) -> usize {
        match self {
            ModeId::M1 => 0,
            ModeId::M2 => 1,
            ModeId::M3 => 2,
            ModeId::M4 => 3,
        }
    }

    pub fn is_signal(self) -> bool {
        matches!(self, ModeId::M1 | ModeId::M3)
    }

    /// Crystal (1 or 2) in which the photon of this mode is generated.
    pub fn source_crystal(self) -> CrystalIndex {
        match self {
            ModeId::M1 | ModeId::M2 => CrystalIndex::First,
            ModeId::M3 | ModeId::M4 => CrystalIndex::Second,
        }
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.index() + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CrystalIndex {
    First,
    Second,
}

impl CrystalIndex {
    /// The signal/idler mode pair generated in this crystal.
    pub fn pair(self) -> ModePair {
        match self {
            CrystalIndex::First => ModePair::FIRST,
            CrystalIndex::Second => ModePair::SECOND,
        }
    }
}

/// A signal/idler mode pair, `(1, 2)` or `(3, 4)` in either order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModePair(ModeId, ModeId);

impl ModePair {
    pub const FIRST: ModePair = ModePair(ModeId::M1, ModeId::M2);
    pub const SECOND: ModePair = ModePair(ModeId::M3, ModeId::M4);

    pub fn new(a: ModeId, b: ModeId) -> Result<ModePair> {
        let valid = matches!(
            (a, b),
            (ModeId::M1, ModeId::M2) | (ModeId::M2, ModeId::M1) | (ModeId::M3, ModeId::M4) | (ModeId::M4, ModeId::M3)
        );
        if valid {
            Ok(ModePair(a, b))
        } else {
            Err(Error::InvalidConfig(format!("({a}, {b}) is not a signal/idler pair")))
        }
    }

    /// (signal mode, idler mode)
    pub fn ordered(self) -> (ModeId, ModeId) {
        if self.0.is_signal() {
            (self.0, self.1)
        } else {
            (self.1, self.0)
        }
    }

    pub fn modes(self) -> (ModeId, ModeId) {
        (self.0, self.1)
    }
}

/// Two crystals in one standing-wave cavity.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceConfig {
    pub crystal1: CrystalSpec,
    pub crystal2: CrystalSpec,
    pub air_path_m: f64,
    pub pm: PmType,
    /// Extra dispersionless path Δl_j per mode (m), indexed by [`ModeId::index`].
    pub extra_delays_m: [f64; 4],
    pump_omega: f64,
    signal_omega: f64,
    pub passes_per_roundtrip: u8,
}

impl SourceConfig {
    /// `crystal2` is marked as rotated regardless of its input flag.
    pub fn new(
        crystal1: CrystalSpec,
        mut crystal2: CrystalSpec,
        air_path_m: f64,
        pm: PmType,
        pump_omega: f64,
        signal_omega: f64,
    ) -> Result<SourceConfig> {
        crystal2.rotated = true;
        let mut crystal1 = crystal1;
        crystal1.rotated = false;
        let cfg = SourceConfig {
            crystal1,
            crystal2,
            air_path_m,
            pm,
            extra_delays_m: [0.0; 4],
            pump_omega,
            signal_omega,
            passes_per_roundtrip: 2,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.crystal1.length_m > 0.0) {
            problems.push("crystal1 length must be > 0".to_string());
        }
        if !(self.crystal2.length_m > 0.0) {
            problems.push("crystal2 length must be > 0".to_string());
        }
        if !(self.air_path_m >= 0.0) {
            problems.push("air path must be >= 0".to_string());
        }
        if self.extra_delays_m.iter().any(|d| !(*d >= 0.0)) {
            problems.push("extra delays must be >= 0".to_string());
        }
        if !(self.pump_omega > 0.0 && self.signal_omega > 0.0 && self.signal_omega < self.pump_omega) {
            problems.push("need 0 < signal < pump frequency".to_string());
        }
        if !(self.passes_per_roundtrip == 1 || self.passes_per_roundtrip == 2) {
            problems.push("passes per round trip must be 1 or 2".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(problems.join("; ")))
        }
    }

    pub fn pump_omega(&self) -> f64 {
        self.pump_omega
    }
    pub fn signal_omega(&self) -> f64 {
        self.signal_omega
    }
    pub fn idler_omega(&self) -> f64 {
        self.pump_omega - self.signal_omega
    }

    pub fn set_frequencies(&mut self, pump_omega: f64, signal_omega: f64) -> Result<()> {
        self.pump_omega = pump_omega;
        self.signal_omega = signal_omega;
        self.validate()
    }

    /// Sets Δl₂ and Δl₄, the idler-mode delays.
    pub fn with_idler_delays(mut self, delay2_m: f64, delay4_m: f64) -> Result<SourceConfig> {
        self.extra_delays_m[ModeId::M2.index()] = delay2_m;
        self.extra_delays_m[ModeId::M4.index()] = delay4_m;
        self.validate()?;
        Ok(self)
    }

    pub fn crystal(&self, which: CrystalIndex) -> &CrystalSpec {
        match which {
            CrystalIndex::First => &self.crystal1,
            CrystalIndex::Second => &self.crystal2,
        }
    }

    pub fn crystal_mut(&mut self, which: CrystalIndex) -> &mut CrystalSpec {
        match which {
            CrystalIndex::First => &mut self.crystal1,
            CrystalIndex::Second => &mut self.crystal2,
        }
    }

    /// The SPDC process of one crystal, in that crystal's own frame.
    pub fn process(&self, which: CrystalIndex) -> Result<SpdcProcess> {
        SpdcProcess::new(
            self.pump_omega,
            self.signal_omega,
            self.crystal(which).clone(),
            self.pm,
            self.passes_per_roundtrip,
        )
    }

    pub fn center_omega(&self, mode: ModeId) -> f64 {
        if mode.is_signal() {
            self.signal_omega
        } else {
            self.idler_omega()
        }
    }

    /// Lab-frame polarization of a mode, expressed as the axis of crystal 1.
    pub fn mode_polarization(&self, mode: ModeId) -> Axis {
        let generated = if mode.is_signal() { self.pm.signal() } else { self.pm.idler() };
        match mode.source_crystal() {
            CrystalIndex::First => generated,
            CrystalIndex::Second => generated.rotated(),
        }
    }

    fn crystal_terms(&self, mode: ModeId, omega: f64) -> Result<[(f64, IndexDispersion, &CrystalSpec); 2]> {
        let pol = self.mode_polarization(mode);
        let eval = |c: &CrystalSpec| {
            if c.length_m == 0.0 {
                // an absent crystal contributes no path and needs no index
                return Ok(IndexDispersion {
                    n: 0.0,
                    dn_domega: 0.0,
                    d2n_domega2: 0.0,
                    dn_dt: 0.0,
                });
            }
            c.material.dispersion(c.axis_for(pol), omega, c.temperature_k)
        };
        Ok([
            (self.crystal1.length_m, eval(&self.crystal1)?, &self.crystal1),
            (self.crystal2.length_m, eval(&self.crystal2)?, &self.crystal2),
        ])
    }

    /// One-way optical path `l₁ n_a + l₂ n_b + l_air + Δl_j`, m.
    pub fn optical_path(&self, mode: ModeId, omega: f64) -> Result<f64> {
        let [(l1, d1, _), (l2, d2, _)] = self.crystal_terms(mode, omega)?;
        Ok((l1 * d1.n + l2 * d2.n) + self.air_path_m + self.extra_delays_m[mode.index()])
    }

    /// One-way group path `Σ l n_g + l_air + Δl_j`, m.
    pub fn group_path(&self, mode: ModeId, omega: f64) -> Result<f64> {
        let [(l1, d1, _), (l2, d2, _)] = self.crystal_terms(mode, omega)?;
        Ok((l1 * d1.group_index(omega) + l2 * d2.group_index(omega))
            + self.air_path_m
            + self.extra_delays_m[mode.index()])
    }

    pub fn mode_number(&self, mode: ModeId, omega: f64) -> Result<f64> {
        Ok(omega / (PI * C) * self.optical_path(mode, omega)?)
    }

    /// ∂m_j/∂ω, s/rad.
    pub fn mode_number_slope(&self, mode: ModeId, omega: f64) -> Result<f64> {
        Ok(self.group_path(mode, omega)? / (PI * C))
    }

    /// ∂²m_j/∂ω², s²/rad².
    pub fn mode_number_curvature(&self, mode: ModeId, omega: f64) -> Result<f64> {
        let [(l1, d1, _), (l2, d2, _)] = self.crystal_terms(mode, omega)?;
        let dpath = l1 * d1.dn_domega + l2 * d2.dn_domega;
        let d2path = l1 * d1.d2n_domega2 + l2 * d2.d2n_domega2;
        Ok((2.0 * dpath + omega * d2path) / (PI * C))
    }

    /// ∂m_j/∂T for a common temperature change of both crystals, 1/K.
    /// Includes the thermal expansion of the crystal lengths.
    pub fn mode_number_temperature_slope(&self, mode: ModeId, omega: f64) -> Result<f64> {
        let mut dpath = 0.0;
        for (l, d, c) in self.crystal_terms(mode, omega)? {
            let m = &c.material;
            let growth = m.expansion_factor_derivative(c.temperature_k)? / m.expansion_factor(c.temperature_k)?;
            dpath += l * (d.dn_dt + d.n * growth);
        }
        Ok(omega / (PI * C) * dpath)
    }

    /// Free spectral range of mode `j` at `omega`, Hz: `1 / (2π |∂m_j/∂ω|)`.
    pub fn fsr(&self, mode: ModeId, omega: f64) -> Result<f64> {
        Ok(1.0 / (2.0 * PI * self.mode_number_slope(mode, omega)?.abs()))
    }

    /// FSR of each mode at its center frequency.
    pub fn fsrs(&self) -> Result<[f64; 4]> {
        let mut out = [0.0; 4];
        for mode in ModeId::ALL {
            out[mode.index()] = self.fsr(mode, self.center_omega(mode))?;
        }
        Ok(out)
    }

    /// `Ω = FSR_a FSR_b / |FSR_a − FSR_b|`, Hz, evaluated through the
    /// reciprocal `|1/FSR_a − 1/FSR_b|` so that equal FSRs give `Infinite`.
    pub fn cluster_spacing_first_order(&self, pair: ModePair) -> Result<Magnitude> {
        let (s, i) = pair.ordered();
        let inv_s = 2.0 * PI * self.mode_number_slope(s, self.center_omega(s))?;
        let inv_i = 2.0 * PI * self.mode_number_slope(i, self.center_omega(i))?;
        Ok(Magnitude::from_reciprocal(inv_s - inv_i))
    }

    /// Joint (quadruple-resonance) cluster spacing: the first-order formula
    /// applied to the two pair cluster spacings.
    pub fn joint_cluster_spacing(&self) -> Result<Magnitude> {
        let a = self.cluster_spacing_first_order(ModePair::FIRST)?;
        let b = self.cluster_spacing_first_order(ModePair::SECOND)?;
        Ok(joint_from_pairs(a, b))
    }

    /// Derivatives of the joint mode number `m_s + m_i` at fixed pump:
    /// `(∂m/∂ω_s, ∂²m/∂ω_s², ∂m/∂T)`.
    pub fn joint_mode_derivatives(&self, pair: ModePair) -> Result<(f64, f64, f64)> {
        let (s, i) = pair.ordered();
        let ws = self.signal_omega;
        let wi = self.idler_omega();
        let slope = self.mode_number_slope(s, ws)? - self.mode_number_slope(i, wi)?;
        let curvature = self.mode_number_curvature(s, ws)? + self.mode_number_curvature(i, wi)?;
        let thermal =
            self.mode_number_temperature_slope(s, ws)? + self.mode_number_temperature_slope(i, wi)?;
        Ok((slope, curvature, thermal))
    }

    /// Smallest positive `Ω` (Hz) solving
    /// `m' Ω + ½ m'' Ω² + (∂m/∂T) ΔT = ±1` over both signs and both roots.
    pub fn cluster_spacing_second_order(&self, pair: ModePair, temperature_offset_k: f64) -> Result<f64> {
        let (slope, curvature, thermal) = self.joint_mode_derivatives(pair)?;
        second_order_root(slope, curvature, thermal * temperature_offset_k).map(omega_to_hz)
    }

    /// Shift of the double-resonance frequency per kelvin, Hz/K.
    pub fn temperature_sensitivity(&self, pair: ModePair) -> Result<f64> {
        let (slope, _, thermal) = self.joint_mode_derivatives(pair)?;
        if slope == 0.0 {
            return Err(Error::DegenerateSlope);
        }
        Ok(omega_to_hz(-thermal / slope))
    }
}

pub fn joint_from_pairs(a: Magnitude, b: Magnitude) -> Magnitude {
    Magnitude::from_reciprocal(a.reciprocal() - b.reciprocal())
}

/// Minimum positive root (rad/s) of `b Ω + ½ c Ω² + d = ±1`.
pub fn second_order_root(slope: f64, curvature: f64, offset: f64) -> Result<f64> {
    [1.0, -1.0]
        .iter()
        .flat_map(|s| quadratic_roots(0.5 * curvature, slope, offset - s))
        .filter(|r| r.is_finite() && *r > 0.0)
        .min_by(|a, b| a.total_cmp(b))
        .ok_or(Error::NoRealRoot)
}
