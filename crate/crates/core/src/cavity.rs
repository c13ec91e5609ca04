//! Finesse, linewidth and loss bookkeeping for a standing-wave cavity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{Magnitude, C};

/// One loss contribution, e.g. an AR-coated crystal face.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossEntry {
    pub label: String,
    /// Fractional power loss per pass through this element.
    pub loss: f64,
    /// Passes per round trip.
    #[serde(default = "one")]
    pub passes: u32,
}

fn one() -> u32 {
    1
}

impl LossEntry {
    pub fn new(label: impl Into<String>, loss: f64, passes: u32) -> LossEntry {
        LossEntry {
            label: label.into(),
            loss,
            passes,
        }
    }
}

/// Round-trip loss composed two ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBudget {
    /// `1 − Π (1 − loss)^passes`
    pub multiplicative: f64,
    /// `Σ passes · loss`
    pub additive: f64,
}

pub fn loss_budget(ledger: &[LossEntry]) -> Result<LossBudget> {
    let mut survive = 1.0;
    let mut additive = 0.0;
    for e in ledger {
        if !(0.0..1.0).contains(&e.loss) {
            return Err(Error::InvalidReflectivity(format!("loss '{}' = {} not in [0, 1)", e.label, e.loss)));
        }
        survive *= (1.0 - e.loss).powi(e.passes as i32);
        additive += e.passes as f64 * e.loss;
    }
    Ok(LossBudget {
        multiplicative: 1.0 - survive,
        additive,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySpec {
    pub r1: f64,
    pub r2: f64,
    pub effective_length_m: f64,
    #[serde(default)]
    pub ledger: Vec<LossEntry>,
}

impl CavitySpec {
    pub fn new(r1: f64, r2: f64, effective_length_m: f64, ledger: Vec<LossEntry>) -> Result<CavitySpec> {
        let spec = CavitySpec {
            r1,
            r2,
            effective_length_m,
            ledger,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Cavity whose whole round-trip loss is a single entry `eta`.
    pub fn with_round_trip_loss(r1: f64, r2: f64, effective_length_m: f64, eta: f64) -> Result<CavitySpec> {
        CavitySpec::new(r1, r2, effective_length_m, vec![LossEntry::new("round trip", eta, 1)])
    }

    /// `faces` AR-coated surfaces, each crossed once per round trip.
    pub fn with_coated_faces(r: f64, effective_length_m: f64, faces: u32, loss_per_face: f64) -> Result<CavitySpec> {
        CavitySpec::new(r, r, effective_length_m, vec![LossEntry::new("AR face", loss_per_face, faces)])
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("R1", self.r1), ("R2", self.r2)] {
            if !(r > 0.0 && r <= 1.0) {
                return Err(Error::InvalidReflectivity(format!("{name} = {r} not in (0, 1]")));
            }
        }
        if !(self.effective_length_m > 0.0) {
            return Err(Error::InvalidConfig("effective cavity length must be > 0".into()));
        }
        loss_budget(&self.ledger).map(|_| ())
    }

    /// Round-trip loss η (multiplicative composition).
    pub fn eta(&self) -> Result<f64> {
        Ok(loss_budget(&self.ledger)?.multiplicative)
    }

    pub fn fsr(&self) -> f64 {
        C / (2.0 * self.effective_length_m)
    }

    pub fn finesse(&self) -> Result<Magnitude> {
        self.validate()?;
        finesse(self.r1 * self.r2 * (1.0 - self.eta()?))
    }

    /// FWHM linewidth `FSR / F`, Hz.
    pub fn linewidth(&self) -> Result<f64> {
        match self.finesse()? {
            Magnitude::Finite(f) => Ok(self.fsr() / f),
            Magnitude::Infinite => Err(Error::InfiniteFinesse),
        }
    }
}

/// `F = π / arccos((4√x − x − 1) / (2√x))` for round-trip survival `x`.
///
/// The arccos argument is `1 − ε` with `ε = (1 − √x)² / (2√x)`, and
/// `arccos(1 − ε) = 2 asin(√(ε/2))` avoids the cancellation near `x = 1`.
pub fn finesse(x: f64) -> Result<Magnitude> {
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::InvalidReflectivity(format!("R1·R2·(1−η) = {x} not in (0, 1]")));
    }
    let s = x.sqrt();
    let gap = (1.0 - x) / (1.0 + s);
    let eps = gap * gap / (2.0 * s);
    if eps > 2.0 {
        return Err(Error::InvalidReflectivity(format!(
            "R1·R2·(1−η) = {x} is too lossy for a resonance"
        )));
    }
    let angle = 2.0 * (eps / 2.0).sqrt().asin();
    Ok(Magnitude::from_reciprocal(angle / std::f64::consts::PI))
}

/// `L_geometric + Σ l (n − 1)` over `(length, index)` pairs, m.
pub fn effective_length(geometric_length_m: f64, elements: &[(f64, f64)]) -> f64 {
    geometric_length_m + elements.iter().map(|(l, n)| l * (n - 1.0)).sum::<f64>()
}

/// Finesse needed for a linewidth `linewidth_hz` at effective length `length_m`.
pub fn required_finesse(length_m: f64, linewidth_hz: f64) -> f64 {
    C / (2.0 * length_m * linewidth_hz)
}
