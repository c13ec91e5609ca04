//! Frequency-comb biphoton amplitudes and state fidelities.
//!
//! Each crystal emits a comb of signal/idler pairs at `ω_s + jΩ_α`,
//! `ω_i − jΩ_α`, spaced by that crystal's double-resonance cluster spacing
//! `Ω_α`. The comb amplitudes are `A_j = sinc(l_α Δk_j / 2)` with the
//! group-index (linear) form of `Δk_j`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phasematch::{PmKind, XI_HWHM};
use crate::resonator::{CrystalIndex, SourceConfig};
use crate::units::{hz_to_omega, Magnitude};

const PI: f64 = std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BellTarget {
    #[default]
    PsiMinus,
    PsiPlus,
    PhiMinus,
    PhiPlus,
}

impl BellTarget {
    /// Relative phase between the crystal-2 and crystal-1 terms.
    pub fn relative_phase(self) -> f64 {
        match self {
            BellTarget::PsiMinus | BellTarget::PhiMinus => PI,
            BellTarget::PsiPlus | BellTarget::PhiPlus => 0.0,
        }
    }

    /// ψ± need orthogonal signal and idler polarizations, Φ± parallel ones.
    pub fn check_compatible(self, kind: PmKind) -> Result<()> {
        let psi = matches!(self, BellTarget::PsiMinus | BellTarget::PsiPlus);
        if psi == (kind == PmKind::TypeII) {
            Ok(())
        } else {
            Err(Error::IncompatibleTarget {
                target: self.to_string(),
                pm: kind.to_string(),
            })
        }
    }

    /// The natural target for a phase-matching type.
    pub fn default_for(kind: PmKind) -> BellTarget {
        match kind {
            PmKind::TypeII => BellTarget::PsiMinus,
            PmKind::Type0 | PmKind::TypeI => BellTarget::PhiMinus,
        }
    }
}

impl fmt::Display for BellTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BellTarget::PsiMinus => "psi-minus",
            BellTarget::PsiPlus => "psi-plus",
            BellTarget::PhiMinus => "phi-minus",
            BellTarget::PhiPlus => "phi-plus",
        })
    }
}

impl FromStr for BellTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psi-minus" => Ok(BellTarget::PsiMinus),
            "psi-plus" => Ok(BellTarget::PsiPlus),
            "phi-minus" => Ok(BellTarget::PhiMinus),
            "phi-plus" => Ok(BellTarget::PhiPlus),
            other => Err(Error::InvalidConfig(format!("unknown Bell target '{other}'"))),
        }
    }
}

/// Where to stop summing comb lines.
///
/// Line `j` is dropped once the sinc envelope `1/ξ_j²` falls below
/// `rel_tol` times the running total, for both crystals, or at `max_order`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationPolicy {
    pub rel_tol: f64,
    pub max_order: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            rel_tol: 1e-8,
            max_order: 100_000,
        }
    }
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Comb of one crystal, amplitudes for `j ∈ [−N, N]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CrystalComb {
    pub signal_omega: f64,
    pub idler_omega: f64,
    pub step: Magnitude,
    /// `ξ_1 = l Δk_1 / 2`, the sinc argument of the first side line.
    pub xi_step: f64,
    amplitudes: Vec<f64>,
}

impl CrystalComb {
    pub fn single_mode(signal_omega: f64, idler_omega: f64) -> CrystalComb {
        CrystalComb {
            signal_omega,
            idler_omega,
            step: Magnitude::Infinite,
            xi_step: 0.0,
            amplitudes: vec![1.0],
        }
    }

    /// Sinc comb with the given per-line phase step, `order` lines each side.
    pub fn sinc(signal_omega: f64, idler_omega: f64, step: Magnitude, xi_step: f64, order: usize) -> CrystalComb {
        let n = order as i64;
        let amplitudes = (-n..=n).map(|j| sinc(j as f64 * xi_step)).collect();
        CrystalComb {
            signal_omega,
            idler_omega,
            step,
            xi_step,
            amplitudes,
        }
    }

    pub fn order(&self) -> usize {
        self.amplitudes.len() / 2
    }

    /// `A_j`, zero outside the truncated range.
    pub fn amplitude(&self, j: i64) -> f64 {
        let idx = j + self.order() as i64;
        if idx < 0 {
            return 0.0;
        }
        self.amplitudes.get(idx as usize).copied().unwrap_or(0.0)
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn power(&self) -> f64 {
        // pairwise from the outside in keeps the small tail terms
        let n = self.order();
        let mut total = 0.0;
        for k in (1..=n).rev() {
            let a = self.amplitudes[n - k];
            let b = self.amplitudes[n + k];
            total += a * a + b * b;
        }
        total + self.amplitudes[n] * self.amplitudes[n]
    }

    fn scale(&mut self, factor: f64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }
}

/// Number of side lines needed by `policy` for the given sinc steps.
pub fn truncation_order(xi_steps: &[f64], policy: &TruncationPolicy) -> usize {
    let mut order = 0usize;
    for &xi in xi_steps {
        if xi == 0.0 {
            continue;
        }
        let mut total = 1.0;
        let mut j = 0usize;
        while j < policy.max_order {
            j += 1;
            let x = j as f64 * xi;
            let line = sinc(x);
            total += 2.0 * line * line;
            if 1.0 / (x * x) < policy.rel_tol * total {
                break;
            }
        }
        order = order.max(j);
    }
    order
}

/// Two-crystal state `Σ_j A_j¹ |s_j, i_j⟩₁ + e^{iφ} Σ_j A_j² |s_j, i_j⟩₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeComb {
    pub crystals: [CrystalComb; 2],
    /// Phase φ of crystal 2's comb relative to crystal 1.
    pub relative_phase: f64,
    /// Overall phase, physically irrelevant.
    pub global_phase: f64,
}

impl AmplitudeComb {
    /// Jointly normalizes the two combs. Their central amplitudes must be
    /// equal in magnitude (balanced pumping) before the call.
    pub fn new(mut crystals: [CrystalComb; 2], relative_phase: f64) -> Result<AmplitudeComb> {
        let a0 = crystals[0].amplitude(0).abs();
        let b0 = crystals[1].amplitude(0).abs();
        if a0 == 0.0 || ((a0 - b0) / a0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("central comb amplitudes must be balanced".into()));
        }
        let total = crystals[0].power() + crystals[1].power();
        let k = 1.0 / total.sqrt();
        crystals[0].scale(k);
        crystals[1].scale(k);
        Ok(AmplitudeComb {
            crystals,
            relative_phase,
            global_phase: 0.0,
        })
    }

    pub fn crystal(&self, which: CrystalIndex) -> &CrystalComb {
        match which {
            CrystalIndex::First => &self.crystals[0],
            CrystalIndex::Second => &self.crystals[1],
        }
    }

    pub fn norm_squared(&self) -> f64 {
        self.crystals[0].power() + self.crystals[1].power()
    }

    pub fn with_global_phase(mut self, phase: f64) -> AmplitudeComb {
        self.global_phase = phase;
        self
    }
}

/// `Δk_j` for comb line `j` of one crystal, rad/m, from the group-index
/// expansion `j · 2πΩ · (n_g,i − n_g,s) / c` in that crystal's own frame.
pub fn comb_mismatch(cfg: &SourceConfig, crystal: CrystalIndex, j: i64, step_hz: f64) -> Result<f64> {
    let slope = cfg.process(crystal)?.signal_slope()?;
    Ok(j as f64 * hz_to_omega(step_hz) * slope)
}

/// Sinc argument of the first side line, `l_α Δk_1 / 2`. The single-pass
/// length is used: the comb lines are the cavity-selected frequencies, and
/// the double-pass factor is already part of the bandwidth they are
/// compared against.
pub fn comb_xi_step(cfg: &SourceConfig, crystal: CrystalIndex, step_hz: f64) -> Result<f64> {
    let l = cfg.crystal(crystal).length_m;
    Ok(0.5 * l * comb_mismatch(cfg, crystal, 1, step_hz)?)
}

/// Builds both crystals' combs at the pair cluster spacings of `cfg`.
pub fn build_comb(cfg: &SourceConfig, target: BellTarget, policy: &TruncationPolicy) -> Result<AmplitudeComb> {
    target.check_compatible(cfg.pm.kind())?;
    let mut steps = [Magnitude::Infinite; 2];
    let mut xis = [0.0; 2];
    for (k, which) in [CrystalIndex::First, CrystalIndex::Second].into_iter().enumerate() {
        steps[k] = cfg.cluster_spacing_first_order(which.pair())?;
        if let Magnitude::Finite(step) = steps[k] {
            xis[k] = comb_xi_step(cfg, which, step)?.abs();
        }
    }
    build_from_steps(cfg.signal_omega(), cfg.idler_omega(), steps, xis, target, policy)
}

/// Builds the combs from explicit steps and sinc arguments.
pub fn build_from_steps(
    signal_omega: f64,
    idler_omega: f64,
    steps: [Magnitude; 2],
    xi_steps: [f64; 2],
    target: BellTarget,
    policy: &TruncationPolicy,
) -> Result<AmplitudeComb> {
    let order = truncation_order(&xi_steps, policy);
    let make = |k: usize| match steps[k] {
        Magnitude::Infinite => CrystalComb::single_mode(signal_omega, idler_omega),
        Magnitude::Finite(_) if xi_steps[k] == 0.0 => CrystalComb::single_mode(signal_omega, idler_omega),
        step => CrystalComb::sinc(signal_omega, idler_omega, step, xi_steps[k], order),
    };
    AmplitudeComb::new([make(0), make(1)], target.relative_phase())
}

/// `|A_0^α|² / Σ_j |A_j^α|²`: overlap of one crystal's output with the
/// single-frequency product state.
pub fn single_crystal_fidelity(comb: &AmplitudeComb, crystal: CrystalIndex) -> f64 {
    let c = comb.crystal(crystal);
    let a0 = c.amplitude(0);
    (a0 * a0 / c.power()).clamp(0.0, 1.0)
}

/// `|⟨Bell|Ψ⟩|²` at the central frequencies. Only the `j = 0` lines of the
/// two combs overlap with the target.
pub fn bell_fidelity(comb: &AmplitudeComb, target: BellTarget, pm: PmKind) -> Result<f64> {
    target.check_compatible(pm)?;
    let a = comb.crystals[0].amplitude(0);
    let b = comb.crystals[1].amplitude(0);
    let dphi = comb.relative_phase - target.relative_phase();
    let (sg, cg) = comb.global_phase.sin_cos();
    let re = a + b * dphi.cos();
    let im = b * dphi.sin();
    let (re, im) = (re * cg - im * sg, re * sg + im * cg);
    let norm = comb.norm_squared();
    Ok(((re * re + im * im) / (2.0 * norm)).clamp(0.0, 1.0))
}

/// Single-crystal fidelity for a comb spaced at `ratio` times the SPDC
/// bandwidth (FWHM, double-pass). The first side line then sits at
/// `ξ_1 = ratio · ξ_HWHM`.
pub fn fidelity_vs_ratio(ratio: f64, policy: &TruncationPolicy) -> Result<f64> {
    if !(ratio > 0.0) {
        return Err(Error::InvalidConfig("cluster/bandwidth ratio must be positive".into()));
    }
    let xi = ratio * XI_HWHM;
    let comb = build_from_steps(
        1.0,
        1.0,
        [Magnitude::Finite(ratio), Magnitude::Infinite],
        [xi, 0.0],
        BellTarget::PsiMinus,
        policy,
    )?;
    Ok(single_crystal_fidelity(&comb, CrystalIndex::First))
}

/// Closed form of `Σ_j sinc²(j a)` for `0 < a ≤ π`.
pub fn sinc_comb_sum(a: f64) -> Option<f64> {
    (a > 0.0 && a <= PI).then(|| PI / a)
}
