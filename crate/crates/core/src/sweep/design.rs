//! Grid search for source/cavity parameters meeting a linewidth and a
//! fidelity target.
//!
//! The Bell fidelity depends only on (length ratio, Δl) and the cavity
//! linewidth only on (R, L_eff), so the two sub-grids are evaluated
//! separately and combined.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, with_workers, Cell, Parameter, Provenance, Quantity, Scenario};
use crate::cavity::{required_finesse, CavitySpec};
use crate::error::{Error, Result};
use crate::materials::MaterialRegistry;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeSpec {
    pub start: f64,
    pub stop: f64,
    #[serde(default)]
    pub step: Option<f64>,
    #[serde(default)]
    pub points: Option<usize>,
}

/// Grid values given as an explicit list or as a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValues {
    List(Vec<f64>),
    Range(RangeSpec),
}

impl GridValues {
    fn values(&self, what: &str) -> Result<Vec<f64>> {
        let v = match self {
            GridValues::List(v) => v.clone(),
            GridValues::Range(r) => {
                let axis = super::AxisSpec {
                    parameter: Parameter::LengthRatio,
                    start: r.start,
                    stop: r.stop,
                    step: r.step,
                    points: r.points,
                    scale: super::Scale::Linear,
                };
                let problems = axis.problems(0);
                if !problems.is_empty() {
                    return Err(Error::ScenarioValidation(
                        problems.into_iter().map(|p| p.replacen("axes[0] (length_ratio)", what, 1)).collect(),
                    ));
                }
                axis.values()
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::ScenarioValidation(vec![format!(
                "grid.{what}: needs at least one finite value"
            )]));
        }
        Ok(v)
    }
}

fn default_ratio() -> GridValues {
    GridValues::Range(RangeSpec {
        start: 0.05,
        stop: 0.95,
        step: Some(0.05),
        points: None,
    })
}
fn default_delay() -> GridValues {
    GridValues::Range(RangeSpec {
        start: 0.0,
        stop: 1e-3,
        step: Some(50e-6),
        points: None,
    })
}
fn default_reflectivity() -> GridValues {
    GridValues::List(vec![0.999, 0.9995, 0.9998])
}
fn default_length() -> GridValues {
    GridValues::List(vec![30e-3, 53e-3, 100e-3])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignGrid {
    #[serde(default = "default_ratio")]
    pub length_ratio: GridValues,
    #[serde(default = "default_delay")]
    pub delay_m: GridValues,
    #[serde(default = "default_reflectivity")]
    pub reflectivity: GridValues,
    #[serde(default = "default_length")]
    pub effective_length_m: GridValues,
}

impl Default for DesignGrid {
    fn default() -> Self {
        DesignGrid {
            length_ratio: default_ratio(),
            delay_m: default_delay(),
            reflectivity: default_reflectivity(),
            effective_length_m: default_length(),
        }
    }
}

fn default_scenario() -> String {
    "non-degenerate".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConstraints {
    /// Built-in scenario name or path to a scenario file.
    #[serde(default = "default_scenario")]
    pub scenario: String,
    pub target_linewidth_hz: f64,
    pub target_fidelity: f64,
    #[serde(default)]
    pub grid: DesignGrid,
}

impl DesignConstraints {
    pub fn from_toml_str(text: &str) -> Result<DesignConstraints> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<DesignConstraints> {
        DesignConstraints::from_toml_str(&std::fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.target_linewidth_hz > 0.0) {
            problems.push("target_linewidth_hz must be > 0".to_string());
        }
        if !(self.target_fidelity >= 0.0 && self.target_fidelity <= 1.0) {
            problems.push("target_fidelity must lie in [0, 1]".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::ScenarioValidation(problems))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignPoint {
    pub length_ratio: f64,
    pub delay_m: f64,
    pub reflectivity: f64,
    pub effective_length_m: f64,
    pub linewidth_hz: f64,
    pub fidelity_bell: f64,
    pub joint_cluster_hz: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignReport {
    pub provenance: Provenance,
    pub target_linewidth_hz: f64,
    pub target_fidelity: f64,
    pub evaluated: usize,
    pub meets_linewidth: usize,
    pub meets_fidelity: usize,
    pub feasible: Vec<DesignPoint>,
    /// `[min, max]` of each parameter over the feasible set.
    pub length_ratio_range: Option<[f64; 2]>,
    pub delay_range_m: Option<[f64; 2]>,
    pub recommended: Option<DesignPoint>,
    pub diagnosis: Vec<String>,
}

impl DesignReport {
    pub fn is_feasible(&self) -> bool {
        !self.feasible.is_empty()
    }

    pub fn contains(&self, ratio: f64, delay_m: f64, reflectivity: f64, length_m: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1e-12);
        self.feasible.iter().any(|p| {
            close(p.length_ratio, ratio)
                && close(p.delay_m, delay_m)
                && close(p.reflectivity, reflectivity)
                && close(p.effective_length_m, length_m)
        })
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "target linewidth {:.4e} Hz, target Bell fidelity {}\n{} grid points, {} meet the linewidth, {} meet the fidelity, {} feasible\n",
            self.target_linewidth_hz,
            self.target_fidelity,
            self.evaluated,
            self.meets_linewidth,
            self.meets_fidelity,
            self.feasible.len()
        );
        if let (Some(r), Some(d)) = (self.length_ratio_range, self.delay_range_m) {
            out += &format!(
                "feasible length ratio {:.3}..{:.3}, idler delay {:.1}..{:.1} um\n",
                r[0],
                r[1],
                d[0] * 1e6,
                d[1] * 1e6
            );
        }
        if let Some(p) = &self.recommended {
            out += &format!(
                "recommended: ratio {:.3}, delay {:.1} um, R {}, L_eff {:.1} mm -> linewidth {:.3} MHz, fidelity {:.4}, joint cluster {}\n",
                p.length_ratio,
                p.delay_m * 1e6,
                p.reflectivity,
                p.effective_length_m * 1e3,
                p.linewidth_hz / 1e6,
                p.fidelity_bell,
                p.joint_cluster_hz
            );
        }
        for d in &self.diagnosis {
            out += &format!("diagnosis: {d}\n");
        }
        out
    }
}

/// Searches the constraint grid. An empty feasible set is a valid answer
/// and comes with a diagnosis naming the binding constraint.
pub fn design_query(constraints: &DesignConstraints, registry: &MaterialRegistry, workers: usize) -> Result<DesignReport> {
    constraints.validate()?;
    let base = Scenario::resolve(&constraints.scenario)?;
    let material = base.material(registry)?;
    let grid = &constraints.grid;
    let ratios = grid.length_ratio.values("length_ratio")?;
    let delays = grid.delay_m.values("delay_m")?;
    let rs = grid.reflectivity.values("reflectivity")?;
    let lengths = grid.effective_length_m.values("effective_length_m")?;

    let source_points: Vec<(f64, f64)> = ratios.iter().flat_map(|r| delays.iter().map(move |d| (*r, *d))).collect();
    let fidelity_cells = with_workers(workers, || {
        source_points
            .par_iter()
            .map(|(ratio, delay)| {
                let mut s = base.clone();
                Parameter::LengthRatio.apply(&mut s, *ratio);
                Parameter::DelayM.apply(&mut s, *delay);
                evaluate(&s, &material, &[Quantity::FidelityBell, Quantity::Joint])
            })
            .collect::<Vec<_>>()
    })?;

    let cavity_points: Vec<(f64, f64, Option<f64>)> = rs
        .iter()
        .flat_map(|r| {
            let base = &base;
            lengths.iter().map(move |l| {
                let lw = CavitySpec::new(*r, *r, *l, base.cavity.ledger.clone())
                    .and_then(|c| c.linewidth())
                    .ok();
                (*r, *l, lw)
            })
        })
        .collect();

    let fidelity_ok = |f: Option<f64>| constraints.target_fidelity <= 0.0 || f.is_some_and(|f| f >= constraints.target_fidelity);
    let linewidth_ok = |lw: Option<f64>| lw.is_some_and(|lw| lw <= constraints.target_linewidth_hz);

    let good_sources: Vec<usize> = (0..source_points.len())
        .filter(|&k| fidelity_ok(fidelity_cells[k][0].finite()))
        .collect();
    let good_cavities: Vec<usize> = (0..cavity_points.len())
        .filter(|&k| linewidth_ok(cavity_points[k].2))
        .collect();

    let mut feasible = Vec::new();
    for &i in &good_sources {
        for &j in &good_cavities {
            let (ratio, delay) = source_points[i];
            let (r, l, lw) = cavity_points[j];
            feasible.push(DesignPoint {
                length_ratio: ratio,
                delay_m: delay,
                reflectivity: r,
                effective_length_m: l,
                linewidth_hz: lw.expect("checked"),
                fidelity_bell: fidelity_cells[i][0].finite().unwrap_or(f64::NAN),
                joint_cluster_hz: fidelity_cells[i][1].clone(),
            });
        }
    }

    let range = |f: &dyn Fn(&DesignPoint) -> f64| {
        (!feasible.is_empty()).then(|| {
            feasible
                .iter()
                .map(f)
                .fold([f64::INFINITY, f64::NEG_INFINITY], |[a, b], v| [a.min(v), b.max(v)])
        })
    };
    let length_ratio_range = range(&|p| p.length_ratio);
    let delay_range_m = range(&|p| p.delay_m);
    // highest fidelity, then the narrowest linewidth
    let recommended = feasible
        .iter()
        .max_by(|a, b| {
            a.fidelity_bell
                .total_cmp(&b.fidelity_bell)
                .then(b.linewidth_hz.total_cmp(&a.linewidth_hz))
        })
        .cloned();

    let mut diagnosis = Vec::new();
    if good_cavities.is_empty() {
        let best = cavity_points.iter().filter_map(|c| c.2).fold(f64::INFINITY, f64::min);
        let l_max = lengths.iter().cloned().fold(0.0, f64::max);
        diagnosis.push(format!(
            "finesse bound: narrowest linewidth on the grid is {best:.4e} Hz; {:.4e} Hz at L_eff = {l_max} m needs finesse {:.4e}",
            constraints.target_linewidth_hz,
            required_finesse(l_max, constraints.target_linewidth_hz)
        ));
    }
    if good_sources.is_empty() {
        let best = fidelity_cells
            .iter()
            .filter_map(|c| c[0].finite())
            .fold(0.0, f64::max);
        diagnosis.push(format!(
            "fidelity bound: highest Bell fidelity on the grid is {best:.4}, target {}",
            constraints.target_fidelity
        ));
    }

    Ok(DesignReport {
        provenance: Provenance::new(&base, &material),
        target_linewidth_hz: constraints.target_linewidth_hz,
        target_fidelity: constraints.target_fidelity,
        evaluated: source_points.len() * cavity_points.len(),
        meets_linewidth: good_cavities.len() * source_points.len(),
        meets_fidelity: good_sources.len() * cavity_points.len(),
        feasible,
        length_ratio_range,
        delay_range_m,
        recommended,
        diagnosis,
    })
}
