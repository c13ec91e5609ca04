//! Scenarios, parameter sweeps, figure reproduction and design queries.
//!
//! A [`Scenario`] fixes a source, a cavity and a list of output quantities;
//! up to two [`AxisSpec`]s turn it into a grid. Each grid cell is evaluated
//! independently and carries its own status, so divergent cluster spacings
//! and numerical failures show up as `inf` or `error:<code>` cells rather
//! than aborting the sweep.

mod design;
mod figures;
mod scenario;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::biphoton::{bell_fidelity, build_comb, single_crystal_fidelity, AmplitudeComb};
use crate::error::{Error, Result};
use crate::materials::{DispersionModel, MaterialRegistry};
use crate::phasematch::solve_poling_period;
use crate::resonator::{CrystalIndex, ModePair, SourceConfig};
use crate::units::Magnitude;

pub use design::{design_query, DesignConstraints, DesignGrid, DesignPoint, DesignReport, GridValues, RangeSpec};
pub use figures::{figure, reproduce_figure, Figure, FigureFiles, Panel, Series, FIGURE_IDS};
pub use scenario::{
    AxisSpec, Parameter, Quantity, Scale, Scenario, SourceParams, BUILTIN_SCENARIOS, NEAR_DEGENERATE_TOML,
    NON_DEGENERATE_TOML,
};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Value of one sweep cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum Cell {
    Ok(f64),
    Infinite,
    Error(String),
}

impl Cell {
    pub fn from_result(r: Result<f64>) -> Cell {
        match r {
            Ok(v) if v.is_finite() => Cell::Ok(v),
            Ok(_) => Cell::Infinite,
            Err(e) => Cell::Error(e.code().to_string()),
        }
    }

    pub fn from_magnitude(r: Result<Magnitude>) -> Cell {
        Cell::from_result(r.map(Magnitude::value))
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Cell::Ok(v) => Some(*v),
            Cell::Infinite => Some(f64::INFINITY),
            Cell::Error(_) => None,
        }
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Cell::Ok(v) => Some(*v),
            _ => None,
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Ok(v) => write!(f, "{v}"),
            Cell::Infinite => f.write_str("inf"),
            Cell::Error(code) => write!(f, "error:{code}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// Where a result came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: String,
    pub scenario_sha256: String,
    pub material: String,
    pub coefficients_sha256: String,
    pub tool_version: String,
}

impl Provenance {
    pub fn new(scenario: &Scenario, material: &DispersionModel) -> Provenance {
        Provenance {
            scenario: scenario.name.clone(),
            scenario_sha256: scenario.fingerprint(),
            material: material.name.clone(),
            coefficients_sha256: material.fingerprint(),
            tool_version: TOOL_VERSION.to_string(),
        }
    }

    pub fn comment_lines(&self) -> Vec<String> {
        vec![
            format!("# scenario: {}", self.scenario),
            format!("# scenario_sha256: {}", self.scenario_sha256),
            format!("# material: {}", self.material),
            format!("# coefficients_sha256: {}", self.coefficients_sha256),
            format!("# tool_version: {}", self.tool_version),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisColumn {
    pub parameter: Parameter,
    pub unit: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub coords: Vec<f64>,
    pub cells: Vec<Cell>,
}

/// Table of a 0-, 1- or 2-D sweep. Rows run over the grid with the first
/// axis outermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub axes: Vec<AxisColumn>,
    pub quantities: Vec<Quantity>,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn column(&self, q: Quantity) -> Option<Vec<Cell>> {
        let k = self.quantities.iter().position(|x| *x == q)?;
        Some(self.rows.iter().map(|r| r.cells[k].clone()).collect())
    }

    pub fn coords(&self, axis: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.coords[axis]).collect()
    }

    pub fn header(&self) -> Vec<String> {
        let axes = self.axes.iter().map(|a| format!("{}[{}]", a.parameter.name(), a.unit));
        let qs = self.quantities.iter().map(|q| format!("{}[{}]", q.name(), q.unit()));
        axes.chain(qs).collect()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        for line in self.provenance.comment_lines() {
            writeln!(out, "{line}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        let err = |e: csv::Error| Error::Output(e.to_string());
        w.write_record(self.header()).map_err(err)?;
        for row in &self.rows {
            let fields = row
                .coords
                .iter()
                .map(|v| v.to_string())
                .chain(row.cells.iter().map(Cell::to_string));
            w.write_record(fields).map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Output(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Output(e.to_string()))
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Csv => self.to_csv_string(),
            OutputFormat::Json => self.to_json_string().map(|s| s + "\n"),
        }
    }

    /// Writes `<dir>/<scenario name>.<ext>` and returns the path.
    pub fn write_to_dir(&self, dir: &Path, format: OutputFormat) -> Result<PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.{}", file_stem(&self.provenance.scenario), format.extension()));
        std::fs::write(&path, self.render(format)?)?;
        Ok(path)
    }
}

pub(crate) fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

/// All requested quantities at one scenario point.
pub fn evaluate(scenario: &Scenario, material: &Arc<DispersionModel>, quantities: &[Quantity]) -> Vec<Cell> {
    let cfg = match scenario.source.source_config(material) {
        Ok(cfg) => cfg,
        Err(e) => return vec![Cell::Error(e.code().to_string()); quantities.len()],
    };
    let comb = quantities
        .iter()
        .any(|q| q.needs_comb())
        .then(|| build_comb(&cfg, scenario.target(), &scenario.truncation).map_err(|e| e.code()));
    quantities
        .iter()
        .map(|&q| evaluate_quantity(q, scenario, &cfg, comb.as_ref()))
        .collect()
}

fn evaluate_quantity(
    q: Quantity,
    scenario: &Scenario,
    cfg: &SourceConfig,
    comb: Option<&std::result::Result<AmplitudeComb, &'static str>>,
) -> Cell {
    let fidelity = |f: &dyn Fn(&AmplitudeComb) -> Result<f64>| match comb {
        Some(Ok(c)) => Cell::from_result(f(c)),
        Some(Err(code)) => Cell::Error(code.to_string()),
        None => Cell::Error("internal".into()),
    };
    match q {
        Quantity::Bandwidth1 => Cell::from_result(cfg.process(CrystalIndex::First).and_then(|p| p.spdc_bandwidth())),
        Quantity::Bandwidth2 => Cell::from_result(cfg.process(CrystalIndex::Second).and_then(|p| p.spdc_bandwidth())),
        Quantity::Cluster1 => Cell::from_magnitude(cfg.cluster_spacing_first_order(ModePair::FIRST)),
        Quantity::Cluster2 => Cell::from_magnitude(cfg.cluster_spacing_first_order(ModePair::SECOND)),
        Quantity::Cluster1SecondOrder => Cell::from_result(cfg.cluster_spacing_second_order(ModePair::FIRST, 0.0)),
        Quantity::Cluster2SecondOrder => Cell::from_result(cfg.cluster_spacing_second_order(ModePair::SECOND, 0.0)),
        Quantity::Joint => Cell::from_magnitude(cfg.joint_cluster_spacing()),
        Quantity::FidelitySingle1 => fidelity(&|c| Ok(single_crystal_fidelity(c, CrystalIndex::First))),
        Quantity::FidelitySingle2 => fidelity(&|c| Ok(single_crystal_fidelity(c, CrystalIndex::Second))),
        Quantity::FidelityBell => fidelity(&|c| bell_fidelity(c, scenario.target(), scenario.source.pm)),
        Quantity::Finesse => Cell::from_magnitude(scenario.cavity.finesse()),
        Quantity::Linewidth => Cell::from_result(scenario.cavity.linewidth()),
        Quantity::Sensitivity => Cell::from_result(cfg.temperature_sensitivity(ModePair::FIRST)),
        Quantity::PolingPeriod => Cell::from_result(solve_poling_period(
            cfg.pump_omega(),
            cfg.signal_omega(),
            cfg.pm,
            &cfg.crystal1,
            cfg.crystal1.temperature_k,
        )),
    }
}

/// Grid points in row order (first axis outermost).
fn grid(axes: &[AxisSpec]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Runs `f` on a pool of `workers` threads (`0` picks the rayon default).
pub(crate) fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if workers > 0 {
        builder = builder.num_threads(workers);
    }
    let pool = builder.build().map_err(|e| Error::InvalidConfig(e.to_string()))?;
    Ok(pool.install(f))
}

/// Evaluates every grid cell of `scenario`. Output does not depend on the
/// number of workers.
pub fn run_sweep(scenario: &Scenario, registry: &MaterialRegistry, workers: usize) -> Result<SweepResult> {
    scenario.validate()?;
    let material = scenario.material(registry)?;
    let points = grid(&scenario.axes);
    let rows = with_workers(workers, || {
        points
            .par_iter()
            .map(|coords| {
                let mut s = scenario.clone();
                for (axis, v) in scenario.axes.iter().zip(coords) {
                    axis.parameter.apply(&mut s, *v);
                }
                SweepRow {
                    coords: coords.clone(),
                    cells: evaluate(&s, &material, &scenario.outputs),
                }
            })
            .collect::<Vec<_>>()
    })?;
    Ok(SweepResult {
        provenance: Provenance::new(scenario, &material),
        axes: scenario
            .axes
            .iter()
            .map(|a| AxisColumn {
                parameter: a.parameter,
                unit: a.parameter.unit().to_string(),
                values: a.values(),
            })
            .collect(),
        quantities: scenario.outputs.clone(),
        rows,
    })
}
