//! Regeneration of the design curves as CSV tables and SVG plots.

use std::io::Write;
use std::path::{Path, PathBuf};

use plotters::prelude::*;
use rayon::prelude::*;
use serde::Serialize;

use super::{run_sweep, with_workers, AxisSpec, Cell, Parameter, Quantity, Scenario, TOOL_VERSION};
use crate::biphoton::{fidelity_vs_ratio, TruncationPolicy};
use crate::cavity::{required_finesse, CavitySpec};
use crate::error::{Error, Result};
use crate::materials::MaterialRegistry;
use crate::phasematch::PmKind;

pub const FIGURE_IDS: [&str; 10] = ["2b", "3a", "3b", "4a", "4b", "4c", "4d", "5", "6", "7"];

const RATIO_POINTS: usize = 199;
const LENGTH_POINTS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub dashed: bool,
    pub x: Vec<f64>,
    pub y: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn series(&self, label: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.label == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Figure {
    pub id: String,
    pub title: String,
    pub x_name: String,
    pub x_unit: String,
    pub y_name: String,
    pub y_unit: String,
    pub log_y: bool,
    pub panels: Vec<Panel>,
    pub material: String,
    pub coefficients_sha256: String,
}

pub struct FigureFiles {
    pub csv: PathBuf,
    pub svg: PathBuf,
}

struct Ctx<'a> {
    registry: &'a MaterialRegistry,
    material: &'a str,
    workers: usize,
}

impl Ctx<'_> {
    fn scenario(&self, name: &str, pm: PmKind) -> Result<Scenario> {
        let mut s = Scenario::builtin(name)?;
        s.material = self.material.to_string();
        s.source.pm = pm;
        s.target = None;
        Ok(s)
    }

    /// One sweep, returned as `(label, dashed, quantity)` series.
    fn sweep(&self, mut s: Scenario, axis: AxisSpec, wanted: &[(&str, bool, Quantity)]) -> Result<Vec<Series>> {
        s.axes = vec![axis];
        s.outputs = wanted.iter().map(|w| w.2).collect();
        let r = run_sweep(&s, self.registry, self.workers)?;
        let x = r.coords(0);
        Ok(wanted
            .iter()
            .map(|(label, dashed, q)| Series {
                label: label.to_string(),
                dashed: *dashed,
                x: x.clone(),
                y: r.column(*q).expect("requested column"),
            })
            .collect())
    }
}

fn ratio_axis() -> AxisSpec {
    AxisSpec::linear(Parameter::LengthRatio, 0.005, 0.995, RATIO_POINTS)
}

fn joint_length_axis() -> AxisSpec {
    AxisSpec::linear(Parameter::JointLengthM, 5e-3, 30e-3, LENGTH_POINTS)
}

fn pair_series() -> Vec<(&'static str, bool, Quantity)> {
    vec![
        ("joint cluster spacing", false, Quantity::Joint),
        ("cluster spacing 1", false, Quantity::Cluster1),
        ("cluster spacing 2", false, Quantity::Cluster2),
        ("SPDC bandwidth 1", true, Quantity::Bandwidth1),
        ("SPDC bandwidth 2", true, Quantity::Bandwidth2),
    ]
}

fn frequency_figure(id: &str, title: &str, x: (&str, &str), panels: Vec<Panel>) -> Figure {
    Figure {
        id: id.into(),
        title: title.into(),
        x_name: x.0.into(),
        x_unit: x.1.into(),
        y_name: "frequency".into(),
        y_unit: "Hz".into(),
        log_y: true,
        panels,
        material: String::new(),
        coefficients_sha256: String::new(),
    }
}

/// Single-crystal bandwidth and cluster spacing vs joint length for type-II
/// and type-0.
fn length_comparison(ctx: &Ctx, id: &str, scenario: &str, type0_second_order: bool) -> Result<Figure> {
    let mut series = ctx.sweep(
        ctx.scenario(scenario, PmKind::TypeII)?,
        joint_length_axis(),
        &[
            ("type-II cluster spacing", false, Quantity::Cluster1),
            ("type-II SPDC bandwidth", true, Quantity::Bandwidth1),
        ],
    )?;
    let cluster0 = if type0_second_order {
        Quantity::Cluster1SecondOrder
    } else {
        Quantity::Cluster1
    };
    series.extend(ctx.sweep(
        ctx.scenario(scenario, PmKind::Type0)?,
        joint_length_axis(),
        &[
            ("type-0 cluster spacing", false, cluster0),
            ("type-0 SPDC bandwidth", true, Quantity::Bandwidth1),
        ],
    )?);
    Ok(frequency_figure(
        id,
        &format!("{scenario}: crystal 1, length ratio 0.4"),
        ("joint_length", "m"),
        vec![Panel {
            title: String::new(),
            series,
        }],
    ))
}

fn ratio_comparison(ctx: &Ctx, id: &str, scenario: &str, pm: PmKind) -> Result<Figure> {
    let series = ctx.sweep(ctx.scenario(scenario, pm)?, ratio_axis(), &pair_series())?;
    Ok(frequency_figure(
        id,
        &format!("{scenario} {pm}: joint length 10 mm"),
        ("length_ratio", "1"),
        vec![Panel {
            title: String::new(),
            series,
        }],
    ))
}

fn build(ctx: &Ctx, id: &str) -> Result<Figure> {
    match id {
        "2b" => {
            let policy = TruncationPolicy::default();
            let x: Vec<f64> = (10..=200).map(|k| k as f64 * 0.025).collect();
            let y = with_workers(ctx.workers, || {
                x.par_iter()
                    .map(|r| Cell::from_result(fidelity_vs_ratio(*r, &policy)))
                    .collect::<Vec<_>>()
            })?;
            Ok(Figure {
                id: id.into(),
                title: "single-crystal fidelity with the product state".into(),
                x_name: "cluster_spacing_over_bandwidth".into(),
                x_unit: "1".into(),
                y_name: "fidelity".into(),
                y_unit: "1".into(),
                log_y: false,
                panels: vec![Panel {
                    title: String::new(),
                    series: vec![Series {
                        label: "fidelity".into(),
                        dashed: false,
                        x,
                        y,
                    }],
                }],
                material: String::new(),
                coefficients_sha256: String::new(),
            })
        }
        "3a" => length_comparison(ctx, id, "near-degenerate", true),
        "3b" => ratio_comparison(ctx, id, "near-degenerate", PmKind::TypeII),
        "4a" => length_comparison(ctx, id, "non-degenerate", false),
        "4b" => ratio_comparison(ctx, id, "non-degenerate", PmKind::TypeII),
        "4c" => ratio_comparison(ctx, id, "non-degenerate", PmKind::Type0),
        "4d" => {
            let series = ctx.sweep(
                ctx.scenario("non-degenerate", PmKind::TypeII)?,
                AxisSpec::linear(Parameter::DelayM, 0.0, 1e-3, 201),
                &pair_series()[1..],
            )?;
            Ok(frequency_figure(
                id,
                "non-degenerate type-II: idler path delay, ratio 0.4",
                ("delay", "m"),
                vec![Panel {
                    title: String::new(),
                    series,
                }],
            ))
        }
        "5" => {
            let x: Vec<f64> = (0..LENGTH_POINTS)
                .map(|k| 10e-3 + 190e-3 * k as f64 / (LENGTH_POINTS - 1) as f64)
                .collect();
            let series = [1e6, 2e6, 4e6, 10e6]
                .iter()
                .map(|&lw| Series {
                    label: format!("{} MHz", lw / 1e6),
                    dashed: false,
                    x: x.clone(),
                    y: x.iter().map(|l| Cell::Ok(required_finesse(*l, lw))).collect(),
                })
                .collect();
            Ok(Figure {
                id: id.into(),
                title: "finesse required for a target linewidth".into(),
                x_name: "cavity_length".into(),
                x_unit: "m".into(),
                y_name: "finesse".into(),
                y_unit: "1".into(),
                log_y: true,
                panels: vec![Panel {
                    title: String::new(),
                    series,
                }],
                material: String::new(),
                coefficients_sha256: String::new(),
            })
        }
        "6" => {
            let x: Vec<f64> = (0..=200).map(|k| 0.02 * k as f64 / 200.0).collect();
            let series = [0.999, 0.9995, 0.9998]
                .iter()
                .map(|&r| Series {
                    label: format!("R = {r}"),
                    dashed: false,
                    x: x.clone(),
                    y: x
                        .iter()
                        .map(|eta| {
                            Cell::from_result(
                                CavitySpec::with_round_trip_loss(r, r, 53e-3, *eta).and_then(|c| c.linewidth()),
                            )
                        })
                        .collect(),
                })
                .collect();
            Ok(Figure {
                id: id.into(),
                title: "cavity linewidth vs intracavity loss, 53 mm".into(),
                x_name: "loss".into(),
                x_unit: "1".into(),
                y_name: "linewidth".into(),
                y_unit: "Hz".into(),
                log_y: false,
                panels: vec![Panel {
                    title: String::new(),
                    series,
                }],
                material: String::new(),
                coefficients_sha256: String::new(),
            })
        }
        "7" => {
            let mut panels = Vec::new();
            for pm in [PmKind::TypeII, PmKind::Type0] {
                for scenario in ["near-degenerate", "non-degenerate"] {
                    panels.push(Panel {
                        title: format!("{scenario} {pm}"),
                        series: ctx.sweep(
                            ctx.scenario(scenario, pm)?,
                            ratio_axis(),
                            &[
                                ("first order", false, Quantity::Cluster1),
                                ("second order", true, Quantity::Cluster1SecondOrder),
                            ],
                        )?,
                    });
                }
            }
            Ok(frequency_figure(
                id,
                "cluster spacing: first vs second order, joint length 10 mm",
                ("length_ratio", "1"),
                panels,
            ))
        }
        other => Err(Error::UnknownFigure(other.to_string())),
    }
}

/// Computes the data behind figure `id`.
pub fn figure(id: &str, registry: &MaterialRegistry, material: &str, workers: usize) -> Result<Figure> {
    if !FIGURE_IDS.contains(&id) {
        return Err(Error::UnknownFigure(id.to_string()));
    }
    let model = registry.get(material)?;
    let ctx = Ctx {
        registry,
        material,
        workers,
    };
    let mut fig = build(&ctx, id)?;
    fig.material = model.name.clone();
    fig.coefficients_sha256 = model.fingerprint();
    Ok(fig)
}

impl Figure {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# figure: {}", self.id)?;
        writeln!(out, "# title: {}", self.title)?;
        writeln!(out, "# material: {}", self.material)?;
        writeln!(out, "# coefficients_sha256: {}", self.coefficients_sha256)?;
        writeln!(out, "# tool_version: {TOOL_VERSION}")?;
        let err = |e: csv::Error| Error::Output(e.to_string());
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "panel".to_string(),
            "series".to_string(),
            format!("{}[{}]", self.x_name, self.x_unit),
            format!("{}[{}]", self.y_name, self.y_unit),
        ])
        .map_err(err)?;
        for p in &self.panels {
            for s in &p.series {
                for (x, y) in s.x.iter().zip(&s.y) {
                    w.write_record([p.title.clone(), s.label.clone(), x.to_string(), y.to_string()])
                        .map_err(err)?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_svg(&self, path: &Path) -> Result<()> {
        draw(self, path).map_err(|e| Error::Output(format!("plot {}: {e}", self.id)))
    }
}

/// Writes `fig<id>.csv` and `fig<id>.svg` into `out_dir`.
pub fn reproduce_figure(
    id: &str,
    registry: &MaterialRegistry,
    material: &str,
    out_dir: &Path,
    workers: usize,
) -> Result<FigureFiles> {
    let fig = figure(id, registry, material, workers)?;
    std::fs::create_dir_all(out_dir)?;
    let csv = out_dir.join(format!("fig{id}.csv"));
    let svg = out_dir.join(format!("fig{id}.svg"));
    fig.write_csv(std::io::BufWriter::new(std::fs::File::create(&csv)?))?;
    fig.write_svg(&svg)?;
    Ok(FigureFiles { csv, svg })
}

/// Display scaling for an SI unit: `(divisor, label)`.
fn display_unit(unit: &str, name: &str, max_abs: f64) -> (f64, String) {
    match unit {
        "Hz" => {
            for (f, p) in [(1e12, "THz"), (1e9, "GHz"), (1e6, "MHz"), (1e3, "kHz")] {
                if max_abs >= f {
                    return (f, p.into());
                }
            }
            (1.0, "Hz".into())
        }
        "m" if max_abs < 2e-3 => (1e-6, "µm".into()),
        "m" => (1e-3, "mm".into()),
        "1" if name == "loss" => (1e-2, "%".into()),
        u => (1.0, u.into()),
    }
}

fn axis_label(name: &str, unit: &str) -> String {
    let name = name.replace('_', " ");
    if unit == "1" {
        name
    } else {
        format!("{name} [{unit}]")
    }
}

fn tick(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn draw(fig: &Figure, path: &Path) -> std::result::Result<(), Box<dyn std::error::Error>> {
    let (rows, cols) = match fig.panels.len() {
        4 => (2, 2),
        n => (1, n.max(1)),
    };
    let root = SVGBackend::new(path, (cols as u32 * 720, rows as u32 * 520)).into_drawing_area();
    root.fill(&WHITE)?;
    let root = root.titled(&fig.title, ("sans-serif", 20))?;
    let areas = root.split_evenly((rows, cols));
    for (panel, area) in fig.panels.iter().zip(areas.iter()) {
        draw_panel(fig, panel, area)?;
    }
    root.present()?;
    Ok(())
}

fn draw_panel<DB: DrawingBackend>(
    fig: &Figure,
    panel: &Panel,
    area: &DrawingArea<DB, plotters::coord::Shift>,
) -> std::result::Result<(), Box<dyn std::error::Error>>
where
    DB::ErrorType: 'static,
{
    let xs = panel.series.iter().flat_map(|s| s.x.iter().copied());
    let x_max = xs.clone().fold(0.0f64, |m, v| m.max(v.abs()));
    let (x_div, x_unit) = display_unit(&fig.x_unit, &fig.x_name, x_max);
    let x_lo = xs.clone().fold(f64::INFINITY, f64::min) / x_div;
    let x_hi = xs.fold(f64::NEG_INFINITY, f64::max) / x_div;

    let finite: Vec<f64> = panel
        .series
        .iter()
        .flat_map(|s| s.y.iter().filter_map(Cell::finite))
        .filter(|v| !fig.log_y || *v > 0.0)
        .collect();
    let y_max_abs = finite.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (y_div, y_unit) = display_unit(&fig.y_unit, &fig.y_name, y_max_abs);
    let tf = |v: f64| if fig.log_y { (v / y_div).log10() } else { v / y_div };
    let (mut y_lo, mut y_hi) = finite
        .iter()
        .map(|v| tf(*v))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y_lo.is_finite() || !y_hi.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if fig.log_y {
        y_lo = y_lo.floor();
        y_hi = y_hi.ceil().max(y_lo + 1.0);
    } else {
        let pad = 0.05 * (y_hi - y_lo).max(1e-12);
        y_lo -= pad;
        y_hi += pad;
    }

    let mut chart = ChartBuilder::on(area)
        .caption(&panel.title, ("sans-serif", 16))
        .margin(12)
        .x_label_area_size(44)
        .y_label_area_size(70)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)?;
    let x_fmt = |v: &f64| tick(*v);
    let y_fmt = |v: &f64| if fig.log_y { format!("{:.0e}", 10f64.powf(*v)) } else { tick(*v) };
    chart
        .configure_mesh()
        .x_desc(axis_label(&fig.x_name, &x_unit))
        .y_desc(axis_label(&fig.y_name, &y_unit))
        .x_label_formatter(&x_fmt)
        .y_label_formatter(&y_fmt)
        .draw()?;

    for (i, s) in panel.series.iter().enumerate() {
        let color = Palette99::pick(i).to_rgba();
        let style = color.stroke_width(2);
        // divergent cells are clipped to the top edge, failed cells break the line
        let mut segments: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
        for (x, y) in s.x.iter().zip(&s.y) {
            let y = match y {
                Cell::Ok(v) if !fig.log_y || *v > 0.0 => tf(*v).clamp(y_lo, y_hi),
                Cell::Infinite => y_hi,
                _ => {
                    segments.push(Vec::new());
                    continue;
                }
            };
            segments.last_mut().expect("non-empty").push((x / x_div, y));
        }
        let mut first = true;
        for seg in segments.into_iter().filter(|s| !s.is_empty()) {
            let anno = if s.dashed {
                chart.draw_series(DashedLineSeries::new(seg, 8, 5, style))?
            } else {
                chart.draw_series(LineSeries::new(seg, style))?
            };
            if first {
                anno.label(s.label.clone())
                    .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 18, y)], style));
                first = false;
            }
        }
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.85))
        .border_style(BLACK)
        .position(SeriesLabelPosition::UpperRight)
        .draw()?;
    Ok(())
}
