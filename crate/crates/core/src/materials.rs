//! Crystal dispersion models.
//!
//! A [`DispersionModel`] is a temperature-dependent Sellmeier equation per
//! crystal axis together with the thermal expansion of the poling period.
//! Models are read from TOML coefficient files (see `data/mgo_cln.toml` for
//! the key names); parsing rejects unknown keys.
//!
//! Internally every evaluation works in angular frequency (rad/s) and Kelvin.
//! Wavelengths are accepted only at the API boundary.
//!
//! The index form, with wavelength `λ` in µm and temperature `t` in °C, is
//!
//! ```text
//! f   = (t - t0) (t + t0 + 2 k)
//! n^2 = a1 + b1 f + (a2 + b2 f) / (λ^2 - (a3 + b3 f)^2)
//!          + (a4 + b4 f) / (λ^2 - a5^2) - a6 λ^2
//! ```
//!
//! which covers the Jundt and Gayer parametrisations, and reduces to a
//! constant index when only `a1` is non-zero.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::units::{omega_from_wavelength, wavelength_from_omega, CELSIUS_ZERO_K};

/// The default MgO:CLN coefficient file shipped with the crate.
pub const MGO_CLN_TOML: &str = include_str!("../data/mgo_cln.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Ordinary,
    Extraordinary,
}

impl Axis {
    /// The orthogonal axis, i.e. what a fixed polarization sees in a crystal
    /// rotated by 90° about the beam.
    pub fn rotated(self) -> Axis {
        match self {
            Axis::Ordinary => Axis::Extraordinary,
            Axis::Extraordinary => Axis::Ordinary,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Ordinary => "o",
            Axis::Extraordinary => "e",
        })
    }
}

/// Sellmeier coefficients of one axis (λ in µm).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisCoefficients {
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
    #[serde(default)]
    pub a3: f64,
    #[serde(default)]
    pub a4: f64,
    #[serde(default)]
    pub a5: f64,
    #[serde(default)]
    pub a6: f64,
    #[serde(default)]
    pub b1: f64,
    #[serde(default)]
    pub b2: f64,
    #[serde(default)]
    pub b3: f64,
    #[serde(default)]
    pub b4: f64,
}

/// Temperature parametrisation `f = (t - t0)(t + t0 + 2 kelvin_offset)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalParameters {
    pub t0_celsius: f64,
    pub kelvin_offset: f64,
}

/// Poling-period (and crystal length) expansion
/// `L(T) = L_ref (1 + a ΔT + b ΔT²)` with `ΔT = T - reference_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpansionCoefficients {
    pub reference_k: f64,
    pub linear_per_k: f64,
    pub quadratic_per_k2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Validity {
    pub wavelength_m: [f64; 2],
    pub temperature_k: [f64; 2],
}

impl Validity {
    pub fn contains(&self, wavelength_m: f64, temperature_k: f64) -> bool {
        let [wl_lo, wl_hi] = self.wavelength_m;
        let [t_lo, t_hi] = self.temperature_k;
        wavelength_m >= wl_lo && wavelength_m <= wl_hi && temperature_k >= t_lo && temperature_k <= t_hi
    }
}

/// Index and its derivatives at one (axis, ω, T) point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexDispersion {
    pub n: f64,
    /// ∂n/∂ω, s/rad.
    pub dn_domega: f64,
    /// ∂²n/∂ω², s²/rad².
    pub d2n_domega2: f64,
    /// ∂n/∂T, 1/K.
    pub dn_dt: f64,
}

impl IndexDispersion {
    /// Group index `n + ω ∂n/∂ω`.
    pub fn group_index(&self, omega: f64) -> f64 {
        self.n + omega * self.dn_domega
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionModel {
    pub name: String,
    pub reference: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_pairing: Option<String>,
    pub validity: Validity,
    pub thermal: ThermalParameters,
    pub expansion: ExpansionCoefficients,
    pub ordinary: AxisCoefficients,
    pub extraordinary: AxisCoefficients,
}

impl DispersionModel {
    /// The default 5% MgO:CLN model.
    pub fn mgo_cln() -> DispersionModel {
        DispersionModel::from_toml_str(MGO_CLN_TOML).expect("bundled coefficient file is valid")
    }

    pub fn from_toml_str(text: &str) -> Result<DispersionModel> {
        let model: DispersionModel = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DispersionModel> {
        DispersionModel::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Output(e.to_string()))
    }

    /// SHA-256 of the canonical serialized form.
    pub fn fingerprint(&self) -> String {
        let text = self.to_toml_string().unwrap_or_default();
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    fn validate(&self) -> Result<()> {
        let [wl_lo, wl_hi] = self.validity.wavelength_m;
        let [t_lo, t_hi] = self.validity.temperature_k;
        if !(wl_lo > 0.0 && wl_hi > wl_lo) {
            return Err(Error::InvalidModel(format!("{}: empty wavelength range", self.name)));
        }
        if !(t_lo > 0.0 && t_hi >= t_lo) {
            return Err(Error::InvalidModel(format!("{}: empty temperature range", self.name)));
        }
        let all = [self.ordinary, self.extraordinary]
            .iter()
            .flat_map(|c| [c.a1, c.a2, c.a3, c.a4, c.a5, c.a6, c.b1, c.b2, c.b3, c.b4])
            .chain([
                self.expansion.linear_per_k,
                self.expansion.quadratic_per_k2,
                self.expansion.reference_k,
                self.thermal.t0_celsius,
                self.thermal.kelvin_offset,
            ])
            .all(f64::is_finite);
        if !all {
            return Err(Error::InvalidModel(format!("{}: non-finite coefficient", self.name)));
        }
        Ok(())
    }

    pub fn coefficients(&self, axis: Axis) -> &AxisCoefficients {
        match axis {
            Axis::Ordinary => &self.ordinary,
            Axis::Extraordinary => &self.extraordinary,
        }
    }

    fn check(&self, axis: Option<Axis>, omega: f64, temperature_k: f64) -> Result<()> {
        let wavelength_m = wavelength_from_omega(omega);
        if omega > 0.0 && self.validity.contains(wavelength_m, temperature_k) {
            Ok(())
        } else {
            Err(Error::OutOfValidityRange {
                axis,
                wavelength_m,
                temperature_k,
            })
        }
    }

    fn thermal_f(&self, temperature_k: f64) -> (f64, f64) {
        let t = temperature_k - CELSIUS_ZERO_K;
        let ThermalParameters {
            t0_celsius: t0,
            kelvin_offset: k,
        } = self.thermal;
        let f = (t - t0) * (t + t0 + 2.0 * k);
        let df_dt = 2.0 * t + 2.0 * k;
        (f, df_dt)
    }

    /// Index and its ω- and T-derivatives, all from the closed-form
    /// differentiation of the Sellmeier expression.
    pub fn dispersion(&self, axis: Axis, omega: f64, temperature_k: f64) -> Result<IndexDispersion> {
        self.check(Some(axis), omega, temperature_k)?;
        let c = self.coefficients(axis);
        let (f, df_dt) = self.thermal_f(temperature_k);
        let wl_um = wavelength_from_omega(omega) * 1e6;
        let l = wl_um * wl_um;

        let s = c.a3 + c.b3 * f;
        let num1 = c.a2 + c.b2 * f;
        let num2 = c.a4 + c.b4 * f;
        let d1 = l - s * s;
        let d2 = l - c.a5 * c.a5;

        let u = c.a1 + c.b1 * f + num1 / d1 + num2 / d2 - c.a6 * l;
        if !(u > 1.0) {
            return Err(Error::InvalidModel(format!(
                "{}: n^2 = {u} at {wl_um} um, {temperature_k} K",
                self.name
            )));
        }
        let n = u.sqrt();

        // derivatives of n^2 with respect to L = λ² (µm²)
        let g_l = -num1 / (d1 * d1) - num2 / (d2 * d2) - c.a6;
        let g_ll = 2.0 * num1 / (d1 * d1 * d1) + 2.0 * num2 / (d2 * d2 * d2);
        // dL/dω = -2L/ω, d²L/dω² = 6L/ω²
        let dl_dw = -2.0 * l / omega;
        let d2l_dw2 = 6.0 * l / (omega * omega);
        let u_w = g_l * dl_dw;
        let u_ww = g_ll * dl_dw * dl_dw + g_l * d2l_dw2;
        let dn_domega = u_w / (2.0 * n);
        let d2n_domega2 = (u_ww - 2.0 * dn_domega * dn_domega) / (2.0 * n);

        let g_f = c.b1 + c.b2 / d1 + num1 * 2.0 * s * c.b3 / (d1 * d1) + c.b4 / d2;
        let dn_dt = g_f * df_dt / (2.0 * n);

        Ok(IndexDispersion {
            n,
            dn_domega,
            d2n_domega2,
            dn_dt,
        })
    }

    /// Refractive index at a vacuum wavelength (m) and temperature (K).
    pub fn refractive_index(&self, axis: Axis, wavelength_m: f64, temperature_k: f64) -> Result<f64> {
        self.index_at(axis, omega_from_wavelength(wavelength_m), temperature_k)
    }

    pub fn index_at(&self, axis: Axis, omega: f64, temperature_k: f64) -> Result<f64> {
        Ok(self.dispersion(axis, omega, temperature_k)?.n)
    }

    /// ∂n/∂ω in s/rad.
    pub fn index_derivative_omega(&self, axis: Axis, omega: f64, temperature_k: f64) -> Result<f64> {
        Ok(self.dispersion(axis, omega, temperature_k)?.dn_domega)
    }

    pub fn index_second_derivative_omega(&self, axis: Axis, omega: f64, temperature_k: f64) -> Result<f64> {
        Ok(self.dispersion(axis, omega, temperature_k)?.d2n_domega2)
    }

    pub fn index_derivative_temperature(&self, axis: Axis, omega: f64, temperature_k: f64) -> Result<f64> {
        Ok(self.dispersion(axis, omega, temperature_k)?.dn_dt)
    }

    pub fn group_index(&self, axis: Axis, omega: f64, temperature_k: f64) -> Result<f64> {
        Ok(self.dispersion(axis, omega, temperature_k)?.group_index(omega))
    }

    fn check_temperature(&self, temperature_k: f64) -> Result<()> {
        let [lo, hi] = self.validity.temperature_k;
        if temperature_k >= lo && temperature_k <= hi {
            Ok(())
        } else {
            Err(Error::OutOfValidityRange {
                axis: None,
                wavelength_m: f64::NAN,
                temperature_k,
            })
        }
    }

    /// Relative length `L(T)/L_ref` from thermal expansion.
    pub fn expansion_factor(&self, temperature_k: f64) -> Result<f64> {
        self.check_temperature(temperature_k)?;
        let dt = temperature_k - self.expansion.reference_k;
        Ok(1.0 + self.expansion.linear_per_k * dt + self.expansion.quadratic_per_k2 * dt * dt)
    }

    /// d(L(T)/L_ref)/dT.
    pub fn expansion_factor_derivative(&self, temperature_k: f64) -> Result<f64> {
        self.check_temperature(temperature_k)?;
        let dt = temperature_k - self.expansion.reference_k;
        Ok(self.expansion.linear_per_k + 2.0 * self.expansion.quadratic_per_k2 * dt)
    }

    /// Poling period at `temperature_k` of a grating with period
    /// `period_at_reference` at the expansion reference temperature.
    pub fn poled_period(&self, period_at_reference: f64, temperature_k: f64) -> Result<f64> {
        Ok(period_at_reference * self.expansion_factor(temperature_k)?)
    }
}

/// Named collection of dispersion models. Immutable once built; models are
/// shared via `Arc` so sweep workers can hold them freely.
#[derive(Debug, Clone, Default)]
pub struct MaterialRegistry {
    models: BTreeMap<String, Arc<DispersionModel>>,
}

impl MaterialRegistry {
    /// Registry holding the bundled MgO:CLN model.
    pub fn builtin() -> MaterialRegistry {
        let mut registry = MaterialRegistry::default();
        registry.insert(DispersionModel::mgo_cln());
        registry
    }

    pub fn insert(&mut self, model: DispersionModel) -> Arc<DispersionModel> {
        let model = Arc::new(model);
        self.models.insert(model.name.clone(), Arc::clone(&model));
        model
    }

    pub fn load_file(&mut self, path: impl AsRef<Path>) -> Result<Arc<DispersionModel>> {
        Ok(self.insert(DispersionModel::load(path)?))
    }

    pub fn get(&self, name: &str) -> Result<Arc<DispersionModel>> {
        self.models
            .get(name)
            .cloned()
            .ok_or_else(|| Error::UnknownMaterial(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}


#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn matches_independent_evaluation() {
        // reference values evaluated independently from the published
        // coefficient table (double precision, λ in µm, T in °C)
        let m = DispersionModel::mgo_cln();
        let ne = m.refractive_index(Axis::Extraordinary, 1550e-9, 298.15).unwrap();
        assert!((ne - 2.130703032091356).abs() < 1e-13, "{ne}");
        let no = m.refractive_index(Axis::Ordinary, 1550e-9, 298.15).unwrap();
        assert!((no - 2.2088684121784823).abs() < 1e-13, "{no}");
        let no720 = m.refractive_index(Axis::Ordinary, 720e-9, 303.15).unwrap();
        let ne720 = m.refractive_index(Axis::Extraordinary, 720e-9, 303.15).unwrap();
        assert!((no720 - 2.2651198127878427).abs() < 1e-13);
        assert!((ne720 - 2.1794028591633747).abs() < 1e-13);
    }

    #[test]
    fn below_validity_is_error() {
        let m = DispersionModel::mgo_cln();
        for axis in [Axis::Ordinary, Axis::Extraordinary] {
            let err = m.refractive_index(axis, 300e-9, 313.15).unwrap_err();
            assert!(matches!(err, Error::OutOfValidityRange { axis: Some(a), .. } if a == axis));
        }
        assert!(m.refractive_index(Axis::Ordinary, 1550e-9, 200.0).is_err());
    }

    #[test]
    fn temperature_derivative_sign_and_fd() {
        let m = DispersionModel::mgo_cln();
        let w = omega_from_wavelength(1550e-9);
        let n1 = m.index_at(Axis::Extraordinary, w, 313.15).unwrap();
        let n2 = m.index_at(Axis::Extraordinary, w, 314.15).unwrap();
        assert!(n2 > n1);
        let analytic = m.index_derivative_temperature(Axis::Extraordinary, w, 313.15).unwrap();
        assert!(analytic > 0.0);
        let numeric = fd(|t| m.index_at(Axis::Extraordinary, w, t).unwrap(), 313.15, 1e-3);
        assert!(((analytic - numeric) / numeric).abs() < 1e-6);
    }

    #[test]
    fn omega_derivative_matches_central_difference() {
        let m = DispersionModel::mgo_cln();
        for axis in [Axis::Ordinary, Axis::Extraordinary] {
            for wl in [519e-9, 780.24e-9, 1550e-9, 3000e-9] {
                let w = omega_from_wavelength(wl);
                let analytic = m.index_derivative_omega(axis, w, 313.15).unwrap();
                let numeric = fd(|x| m.index_at(axis, x, 313.15).unwrap(), w, 1e-6 * w);
                assert!(((analytic - numeric) / numeric).abs() < 1e-6, "{axis} {wl}");
                // normal dispersion across the visible/near-IR
                assert!(analytic > 0.0);
            }
        }
    }

    #[test]
    fn second_derivative_matches_central_difference() {
        let m = DispersionModel::mgo_cln();
        for wl in [780.24e-9, 1550e-9] {
            let w = omega_from_wavelength(wl);
            let analytic = m.index_second_derivative_omega(Axis::Ordinary, w, 313.15).unwrap();
            let numeric = fd(
                |x| m.index_derivative_omega(Axis::Ordinary, x, 313.15).unwrap(),
                w,
                1e-5 * w,
            );
            assert!(((analytic - numeric) / numeric).abs() < 1e-6);
        }
    }

    #[test]
    fn omega_and_wavelength_queries_agree() {
        let m = DispersionModel::mgo_cln();
        let wl = 1064e-9;
        let a = m.refractive_index(Axis::Ordinary, wl, 330.0).unwrap();
        let b = m.index_at(Axis::Ordinary, omega_from_wavelength(wl), 330.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn poled_period_expansion() {
        let m = DispersionModel::mgo_cln();
        assert_eq!(m.poled_period(20e-6, 298.15).unwrap(), 20e-6);
        let ratio = m.poled_period(1.0, 398.15).unwrap();
        // 1 + 1.54e-5 * 100 + 5.3e-9 * 100^2
        assert!((ratio - 1.001593).abs() < 1e-15);
        let flat = test_models::constant(2.2, 2.1, 0.0, 0.0);
        assert_eq!(flat.poled_period(7e-6, 500.0).unwrap(), 7e-6);
        assert!(m.poled_period(1.0, 100.0).is_err());
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let m = DispersionModel::mgo_cln();
        let text = m.to_toml_string().unwrap();
        let back = DispersionModel::from_toml_str(&text).unwrap();
        assert_eq!(m, back);
        let w = omega_from_wavelength(987.6e-9);
        for axis in [Axis::Ordinary, Axis::Extraordinary] {
            assert_eq!(
                m.dispersion(axis, w, 350.0).unwrap(),
                back.dispersion(axis, w, 350.0).unwrap()
            );
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = format!("{MGO_CLN_TOML}\nextra_key = 1\n");
        assert!(matches!(DispersionModel::from_toml_str(&text), Err(Error::Parse(_))));
        let text = MGO_CLN_TOML.replace("b4 = 1.516e-4", "b4 = 1.516e-4\nb5 = 0.0");
        assert!(DispersionModel::from_toml_str(&text).is_err());
    }

    #[test]
    fn registry_lookup() {
        let r = MaterialRegistry::builtin();
        assert_eq!(r.names().collect::<Vec<_>>(), vec!["MgO:CLN"]);
        assert!(matches!(r.get("BBO"), Err(Error::UnknownMaterial(_))));
    }

    proptest! {
        #[test]
        fn index_bounded_inside_validity(wl in 0.5e-6f64..4.0e-6, t in 293.15f64..473.15) {
            let m = DispersionModel::mgo_cln();
            for axis in [Axis::Ordinary, Axis::Extraordinary] {
                let n = m.refractive_index(axis, wl, t).unwrap();
                prop_assert!(n > 1.0 && n < 3.0);
            }
        }
    }

    #[test]
    fn derivative_grid_against_finite_differences() {
        let m = DispersionModel::mgo_cln();
        for i in 0..100 {
            let wl = 0.52e-6 + (3.9e-6 - 0.52e-6) * i as f64 / 99.0;
            let t = 295.0 + 170.0 * ((i * 37) % 100) as f64 / 99.0;
            let w = omega_from_wavelength(wl);
            for axis in [Axis::Ordinary, Axis::Extraordinary] {
                let analytic = m.index_derivative_omega(axis, w, t).unwrap();
                let numeric = fd(|x| m.index_at(axis, x, t).unwrap(), w, 1e-6 * w);
                assert!(((analytic - numeric) / numeric).abs() < 1e-6, "{axis} {wl} {t}");
            }
        }
    }
}
