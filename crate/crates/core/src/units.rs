//! Physical constants, unit conversions and the finite-or-infinite result type.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Speed of light in vacuum, m/s.
pub const C: f64 = 299_792_458.0;

pub const CELSIUS_ZERO_K: f64 = 273.15;

/// Angular frequency (rad/s) of light with the given vacuum wavelength (m).
pub fn omega_from_wavelength(wavelength_m: f64) -> f64 {
    2.0 * std::f64::consts::PI * C / wavelength_m
}

/// Vacuum wavelength (m) of light with the given angular frequency (rad/s).
pub fn wavelength_from_omega(omega: f64) -> f64 {
    2.0 * std::f64::consts::PI * C / omega
}

pub fn hz_to_omega(hz: f64) -> f64 {
    2.0 * std::f64::consts::PI * hz
}

pub fn omega_to_hz(omega: f64) -> f64 {
    omega / (2.0 * std::f64::consts::PI)
}

/// A non-negative quantity that may legitimately diverge, e.g. a cluster
/// spacing between two modes with identical free spectral ranges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Magnitude {
    Finite(f64),
    Infinite,
}

impl Magnitude {
    /// Builds a magnitude from its reciprocal; a zero reciprocal diverges.
    pub fn from_reciprocal(inv: f64) -> Self {
        let inv = inv.abs();
        if inv == 0.0 || !(1.0 / inv).is_finite() {
            Magnitude::Infinite
        } else {
            Magnitude::Finite(1.0 / inv)
        }
    }

    pub fn reciprocal(self) -> f64 {
        match self {
            Magnitude::Finite(v) => 1.0 / v,
            Magnitude::Infinite => 0.0,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Magnitude::Finite(v) => Some(v),
            Magnitude::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Magnitude::Infinite)
    }

    /// Value as `f64`, with `f64::INFINITY` for the divergent case.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Magnitude {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Magnitude::Finite(v) => write!(f, "{v:e}"),
            Magnitude::Infinite => f.write_str("inf"),
        }
    }
}
