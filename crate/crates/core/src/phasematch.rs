//! Quasi-phase-matching and SPDC bandwidth for a single periodically poled
//! crystal.
//!
//! The phase mismatch is `Δk = k_p - k_s - k_i - 2π/Λ(T)`, with indices taken
//! along the axes of the [`PmType`] in the crystal's own frame.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::{Axis, DispersionModel};
use crate::units::{omega_to_hz, C};

/// Half-width at half-maximum of `sinc²(ξ)`: the root of `sinc²(ξ) = 1/2`.
/// Often quoted rounded to 1.39.
pub const XI_HWHM: f64 = 1.391_557_378_251_51;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PmKind {
    #[serde(rename = "type-0")]
    Type0,
    #[serde(rename = "type-i")]
    TypeI,
    #[serde(rename = "type-ii")]
    TypeII,
}

impl fmt::Display for PmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PmKind::Type0 => "type-0",
            PmKind::TypeI => "type-I",
            PmKind::TypeII => "type-II",
        })
    }
}

/// Phase-matching configuration: which crystal axis each wave travels on,
/// in the frame of the crystal that generates the pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PmType {
    kind: PmKind,
    pump: Axis,
    signal: Axis,
    idler: Axis,
}

impl PmType {
    pub fn new(kind: PmKind, pump: Axis, signal: Axis, idler: Axis) -> Result<PmType> {
        let ok = match kind {
            PmKind::Type0 => pump == signal && signal == idler,
            PmKind::TypeI => signal == idler && pump != signal,
            PmKind::TypeII => signal != idler,
        };
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "axes pump={pump} signal={signal} idler={idler} are not {kind}"
            )));
        }
        Ok(PmType {
            kind,
            pump,
            signal,
            idler,
        })
    }

    /// All three waves on the ordinary axis of the generating crystal.
    pub fn type0() -> PmType {
        PmType::new(PmKind::Type0, Axis::Ordinary, Axis::Ordinary, Axis::Ordinary).unwrap()
    }

    /// Extraordinary pump, ordinary signal and idler.
    pub fn type_i() -> PmType {
        PmType::new(PmKind::TypeI, Axis::Extraordinary, Axis::Ordinary, Axis::Ordinary).unwrap()
    }

    /// Ordinary pump and signal, extraordinary idler (o → o + e).
    pub fn type_ii() -> PmType {
        PmType::new(PmKind::TypeII, Axis::Ordinary, Axis::Ordinary, Axis::Extraordinary).unwrap()
    }

    pub fn from_kind(kind: PmKind) -> PmType {
        match kind {
            PmKind::Type0 => PmType::type0(),
            PmKind::TypeI => PmType::type_i(),
            PmKind::TypeII => PmType::type_ii(),
        }
    }

    pub fn kind(&self) -> PmKind {
        self.kind
    }
    pub fn pump(&self) -> Axis {
        self.pump
    }
    pub fn signal(&self) -> Axis {
        self.signal
    }
    pub fn idler(&self) -> Axis {
        self.idler
    }
}

/// One nonlinear crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalSpec {
    pub length_m: f64,
    /// Poling period at the material's expansion reference temperature.
    pub poling_period_m: f64,
    pub temperature_k: f64,
    /// Crystal axes rotated by 90° about the beam relative to the lab frame.
    pub rotated: bool,
    pub material: Arc<DispersionModel>,
}

impl CrystalSpec {
    pub fn new(material: Arc<DispersionModel>, length_m: f64, temperature_k: f64) -> CrystalSpec {
        CrystalSpec {
            length_m,
            poling_period_m: f64::INFINITY,
            temperature_k,
            rotated: false,
            material,
        }
    }

    /// Axis seen by light polarized along lab axis `lab`.
    pub fn axis_for(&self, lab: Axis) -> Axis {
        if self.rotated {
            lab.rotated()
        } else {
            lab
        }
    }
}

/// An SPDC process `ω_p → ω_s + ω_i` in one crystal.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdcProcess {
    pump_omega: f64,
    signal_omega: f64,
    idler_omega: f64,
    pub crystal: CrystalSpec,
    pub pm: PmType,
    passes_per_roundtrip: u8,
}

impl SpdcProcess {
    /// The idler frequency is derived as `ω_p - ω_s`.
    pub fn new(pump_omega: f64, signal_omega: f64, crystal: CrystalSpec, pm: PmType, passes: u8) -> Result<SpdcProcess> {
        if !(pump_omega > 0.0 && signal_omega > 0.0 && signal_omega < pump_omega) {
            return Err(Error::InvalidConfig(format!(
                "need 0 < signal ({signal_omega:e}) < pump ({pump_omega:e}) rad/s"
            )));
        }
        if !(passes == 1 || passes == 2) {
            return Err(Error::InvalidConfig(format!("passes per round trip must be 1 or 2, got {passes}")));
        }
        if !(crystal.length_m > 0.0) {
            return Err(Error::InvalidConfig("crystal length must be positive".into()));
        }
        Ok(SpdcProcess {
            pump_omega,
            signal_omega,
            idler_omega: pump_omega - signal_omega,
            crystal,
            pm,
            passes_per_roundtrip: passes,
        })
    }

    pub fn pump_omega(&self) -> f64 {
        self.pump_omega
    }
    pub fn signal_omega(&self) -> f64 {
        self.signal_omega
    }
    pub fn idler_omega(&self) -> f64 {
        self.idler_omega
    }
    pub fn passes_per_roundtrip(&self) -> u8 {
        self.passes_per_roundtrip
    }

    /// Interaction length entering the bandwidth: passes × crystal length.
    pub fn effective_length(&self) -> f64 {
        self.passes_per_roundtrip as f64 * self.crystal.length_m
    }

    /// Same process with the signal moved to `signal_omega` (pump fixed).
    pub fn with_signal(&self, signal_omega: f64) -> Result<SpdcProcess> {
        SpdcProcess::new(
            self.pump_omega,
            signal_omega,
            self.crystal.clone(),
            self.pm,
            self.passes_per_roundtrip,
        )
    }

    fn material(&self) -> &DispersionModel {
        &self.crystal.material
    }

    /// `k_p - k_s - k_i` without the grating term, rad/m.
    pub fn wavevector_mismatch(&self) -> Result<f64> {
        let t = self.crystal.temperature_k;
        let m = self.material();
        let n_p = m.index_at(self.pm.pump, self.pump_omega, t)?;
        let n_s = m.index_at(self.pm.signal, self.signal_omega, t)?;
        let n_i = m.index_at(self.pm.idler, self.idler_omega, t)?;
        Ok((n_p * self.pump_omega - n_s * self.signal_omega - n_i * self.idler_omega) / C)
    }

    /// Phase mismatch `Δk` in rad/m.
    pub fn phase_mismatch(&self) -> Result<f64> {
        let period = self.material().poled_period(self.crystal.poling_period_m, self.crystal.temperature_k)?;
        Ok(self.wavevector_mismatch()? - 2.0 * std::f64::consts::PI / period)
    }

    /// `(∂Δk/∂ω_s)` at fixed pump: `(n_g,i(ω_i) - n_g,s(ω_s)) / c`, s/m.
    pub fn signal_slope(&self) -> Result<f64> {
        let t = self.crystal.temperature_k;
        let m = self.material();
        let ng_s = m.group_index(self.pm.signal, self.signal_omega, t)?;
        let ng_i = m.group_index(self.pm.idler, self.idler_omega, t)?;
        Ok((ng_i - ng_s) / C)
    }

    /// FWHM SPDC bandwidth in Hz from the linear expansion of `Δk` in the
    /// signal frequency, `|∂Δk/∂ω_s| Δω_s = 2 ξ_HWHM / l_eff`.
    pub fn spdc_bandwidth(&self) -> Result<f64> {
        let slope = self.signal_slope()?;
        if slope == 0.0 || !slope.is_finite() {
            return Err(Error::DegenerateSlope);
        }
        let half_width = 2.0 * XI_HWHM / (self.effective_length() * slope.abs());
        Ok(omega_to_hz(2.0 * half_width))
    }

    /// `∂Δk/∂T` in rad/(m·K), including the thermal expansion of the grating.
    pub fn temperature_detuning_slope(&self) -> Result<f64> {
        let t = self.crystal.temperature_k;
        let m = self.material();
        let dp = m.index_derivative_temperature(self.pm.pump, self.pump_omega, t)?;
        let ds = m.index_derivative_temperature(self.pm.signal, self.signal_omega, t)?;
        let di = m.index_derivative_temperature(self.pm.idler, self.idler_omega, t)?;
        let optical = (dp * self.pump_omega - ds * self.signal_omega - di * self.idler_omega) / C;
        let period = m.poled_period(self.crystal.poling_period_m, t)?;
        let dperiod = self.crystal.poling_period_m * m.expansion_factor_derivative(t)?;
        let grating = if period.is_finite() {
            2.0 * std::f64::consts::PI * dperiod / (period * period)
        } else {
            0.0
        };
        Ok(optical + grating)
    }
}

/// Poling period (at the material's expansion reference temperature) that
/// phase-matches `pump → signal + idler` at `temperature_k`.
pub fn solve_poling_period(
    pump_omega: f64,
    signal_omega: f64,
    pm: PmType,
    crystal: &CrystalSpec,
    temperature_k: f64,
) -> Result<f64> {
    let mut template = crystal.clone();
    template.temperature_k = temperature_k;
    let process = SpdcProcess::new(pump_omega, signal_omega, template, pm, 1)?;
    let mismatch = process.wavevector_mismatch()?;
    if !(mismatch > 0.0) {
        return Err(Error::NoPositivePeriod { mismatch });
    }
    let period_at_t = 2.0 * std::f64::consts::PI / mismatch;
    Ok(period_at_t / crystal.material.expansion_factor(temperature_k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::test_models;
    use crate::roots::bisect;
    use crate::units::{hz_to_omega, omega_from_wavelength};

    const T: f64 = 313.15;

    fn crystal(length: f64) -> CrystalSpec {
        CrystalSpec::new(Arc::new(DispersionModel::mgo_cln()), length, T)
    }

    fn matched(pump_nm: f64, signal_nm: f64, pm: PmType, length: f64) -> SpdcProcess {
        let wp = omega_from_wavelength(pump_nm * 1e-9);
        let ws = omega_from_wavelength(signal_nm * 1e-9);
        let mut c = crystal(length);
        c.poling_period_m = solve_poling_period(wp, ws, pm, &c, T).unwrap();
        SpdcProcess::new(wp, ws, c, pm, 2).unwrap()
    }

    #[test]
    fn xi_hwhm_is_half_max_of_sinc_squared() {
        let s = XI_HWHM.sin() / XI_HWHM;
        assert!((s * s - 0.5).abs() < 1e-14);
        assert!((XI_HWHM - 1.39).abs() < 0.002);
    }

    #[test]
    fn pm_type_axis_rules() {
        assert!(PmType::new(PmKind::Type0, Axis::Ordinary, Axis::Ordinary, Axis::Extraordinary).is_err());
        assert!(PmType::new(PmKind::TypeII, Axis::Ordinary, Axis::Ordinary, Axis::Ordinary).is_err());
        let t2 = PmType::type_ii();
        assert_ne!(t2.signal(), t2.idler());
        let t0 = PmType::type0();
        assert!(t0.pump() == t0.signal() && t0.signal() == t0.idler());
    }

    #[test]
    fn energy_conservation_is_exact() {
        let p = matched(519.0, 780.24, PmType::type_ii(), 4e-3);
        assert_eq!(p.idler_omega(), p.pump_omega() - p.signal_omega());
        assert_eq!(p.signal_omega() + p.idler_omega(), p.pump_omega());
    }

    #[test]
    fn invalid_process_rejected() {
        let c = crystal(1e-3);
        assert!(SpdcProcess::new(1.0, 2.0, c.clone(), PmType::type0(), 2).is_err());
        assert!(SpdcProcess::new(2.0, 1.0, c, PmType::type0(), 3).is_err());
    }

    #[test]
    fn solved_period_zeroes_mismatch() {
        for (pump, signal, pm) in [
            (775.0, 1550.0, PmType::type_ii()),
            (519.0, 780.24, PmType::type_ii()),
            (519.0, 780.24, PmType::type0()),
        ] {
            let p = matched(pump, signal, pm, 4e-3);
            let dk = p.phase_mismatch().unwrap();
            assert!(dk.abs() < 1e-6, "{dk}");
            assert!(dk.abs() * p.crystal.length_m < 1e-8);
        }
    }

    #[test]
    fn poling_period_regressions() {
        // frozen from an independent evaluation of the coefficient table at 313.15 K
        let wp = omega_from_wavelength(775e-9);
        let ws = wp / 2.0 + hz_to_omega(40e6);
        let c = crystal(4e-3);
        let near = solve_poling_period(wp, ws, PmType::type_ii(), &c, T).unwrap();
        assert!(near > 1e-6 && near < 100e-6, "{near}");
        let non = solve_poling_period(
            omega_from_wavelength(519e-9),
            omega_from_wavelength(780.24e-9),
            PmType::type_ii(),
            &c,
            T,
        )
        .unwrap();
        assert!(non > 1e-6 && non < 100e-6, "{non}");
        assert!((near - NEAR_DEGENERATE_PERIOD).abs() < 1e-12, "{near:e}");
        assert!((non - NON_DEGENERATE_PERIOD).abs() < 1e-12, "{non:e}");
    }

    const NEAR_DEGENERATE_PERIOD: f64 = 9.116_987_299_512_734e-6;
    const NON_DEGENERATE_PERIOD: f64 = 4.640_616_776_891_178e-6;

    #[test]
    fn no_positive_period_for_anomalous_combination() {
        // identical indices everywhere: k_p - k_s - k_i = 0
        let toy = Arc::new(test_models::constant(2.0, 2.0, 0.0, 0.0));
        let c = CrystalSpec::new(toy, 1e-3, 300.0);
        let err = solve_poling_period(3e15, 1e15, PmType::type0(), &c, 300.0).unwrap_err();
        assert!(matches!(err, Error::NoPositivePeriod { .. }));
    }

    #[test]
    fn doubling_period_changes_only_grating_term() {
        let p = matched(519.0, 780.24, PmType::type_ii(), 4e-3);
        let mut q = p.clone();
        q.crystal.poling_period_m *= 2.0;
        let period = p.crystal.material.poled_period(p.crystal.poling_period_m, T).unwrap();
        let expected = std::f64::consts::PI / period;
        let diff = q.phase_mismatch().unwrap() - p.phase_mismatch().unwrap();
        assert!(((diff - expected) / expected).abs() < 1e-9);
    }

    #[test]
    fn detuning_flips_sign_with_linear_slope() {
        let p = matched(519.0, 780.24, PmType::type_ii(), 4e-3);
        let d = hz_to_omega(1e9);
        let up = p.with_signal(p.signal_omega() + d).unwrap().phase_mismatch().unwrap();
        let down = p.with_signal(p.signal_omega() - d).unwrap().phase_mismatch().unwrap();
        assert!(up.signum() != down.signum());
        let linear = p.signal_slope().unwrap() * d;
        assert!(((up - linear) / linear).abs() < 0.01);
        assert!(((down + linear) / linear).abs() < 0.01);
        // antisymmetric up to the quadratic correction
        assert!((up + down).abs() < 1e-3 * up.abs());
    }

    #[test]
    fn bandwidth_scales_inversely_with_length() {
        let base = matched(519.0, 780.24, PmType::type_ii(), 1e-3);
        let b0 = base.spdc_bandwidth().unwrap();
        for k in [2.0, 3.7, 10.0] {
            let mut p = base.clone();
            p.crystal.length_m *= k;
            let b = p.spdc_bandwidth().unwrap();
            assert!(((b * k - b0) / b0).abs() < 1e-9);
        }
        let mut single = base.clone();
        single.passes_per_roundtrip = 1;
        assert!((single.spdc_bandwidth().unwrap() / b0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_slope_detected() {
        let toy = Arc::new(test_models::constant(2.2, 2.2, 0.0, 0.0));
        let c = CrystalSpec::new(toy, 1e-3, 300.0);
        let p = SpdcProcess::new(3e15, 1.5e15, c, PmType::type0(), 2).unwrap();
        assert!(matches!(p.spdc_bandwidth(), Err(Error::DegenerateSlope)));
    }

    /// Half-maximum of sinc²(Δk(ω_s) l_eff / 2) located by scanning the full
    /// mismatch, without the linear expansion.
    fn brute_force_fwhm(p: &SpdcProcess) -> f64 {
        let l_eff = p.effective_length();
        let ws = p.signal_omega();
        let dk0 = p.phase_mismatch().unwrap();
        let intensity = |d: f64| -> f64 {
            let dk = p.with_signal(ws + d).unwrap().phase_mismatch().unwrap() - dk0;
            let x = dk * l_eff / 2.0;
            if x == 0.0 {
                1.0
            } else {
                (x.sin() / x).powi(2)
            }
        };
        let guess = hz_to_omega(p.spdc_bandwidth().unwrap());
        let f = |d: f64| Ok(intensity(d) - 0.5);
        let hi = bisect(0.0, guess, 1e-12, f).unwrap();
        let lo = bisect(-guess, 0.0, 1e-12, f).unwrap();
        omega_to_hz(hi - lo)
    }

    #[test]
    fn linear_bandwidth_matches_half_max_scan() {
        let p = matched(519.0, 780.24, PmType::type_ii(), 4e-3);
        let linear = p.spdc_bandwidth().unwrap();
        let scanned = brute_force_fwhm(&p);
        assert!(((linear - scanned) / scanned).abs() < 0.02, "{linear} {scanned}");
    }

    #[test]
    fn temperature_slope_matches_finite_difference() {
        let p = matched(519.0, 780.24, PmType::type_ii(), 4e-3);
        let analytic = p.temperature_detuning_slope().unwrap();
        let h = 0.01;
        let at = |t: f64| {
            let mut q = p.clone();
            q.crystal.temperature_k = t;
            q.phase_mismatch().unwrap()
        };
        let numeric = (at(T + h) - at(T - h)) / (2.0 * h);
        assert!(((analytic - numeric) / numeric).abs() < 1e-5, "{analytic} {numeric}");
    }

    #[test]
    fn temperature_slope_vanishes_for_static_toy() {
        let toy = Arc::new(test_models::constant(2.3, 2.1, 0.0, 0.0));
        let mut c = CrystalSpec::new(toy, 1e-3, 300.0);
        c.poling_period_m = 10e-6;
        let p = SpdcProcess::new(3e15, 1e15, c, PmType::type_ii(), 2).unwrap();
        assert_eq!(p.temperature_detuning_slope().unwrap(), 0.0);
    }
}
