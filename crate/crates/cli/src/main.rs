use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cavity_spdc::biphoton::BellTarget;
use cavity_spdc::materials::MaterialRegistry;
use cavity_spdc::phasematch::PmKind;
use cavity_spdc::sweep::{
    design_query, reproduce_figure, run_sweep, Cell, DesignConstraints, OutputFormat, Parameter, Quantity, Scenario,
    SweepResult, FIGURE_IDS,
};
use cavity_spdc::{exit_code_for, Error, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cavity-spdc", version, about = "Design curves for cavity-enhanced SPDC photon-pair sources")]
struct Cli {
    /// Write results into this directory instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,
    /// Worker threads for sweeps (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// Extra dispersion model file; scenarios use it in place of the built-in crystal.
    #[arg(long, global = true)]
    material: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// SPDC bandwidth of both crystals and the poling period.
    Bandwidth(PointArgs),
    /// Pair and joint cluster spacings, second-order spacings and temperature sensitivity.
    Cluster(PointArgs),
    /// Single-crystal and Bell-state fidelities.
    Fidelity {
        #[command(flatten)]
        point: PointArgs,
        /// Bell target (psi-minus, psi-plus, phi-minus, phi-plus).
        #[arg(long)]
        target: Option<BellTarget>,
    },
    /// Finesse and linewidth of the cavity.
    Cavity(PointArgs),
    /// Run a scenario file (or built-in scenario name) over its axes.
    Sweep {
        scenario: String,
    },
    /// Regenerate one design figure, or `all`, as CSV + SVG.
    ReproduceFigure {
        id: String,
    },
    /// Grid search for parameters meeting a linewidth and fidelity target.
    DesignQuery {
        constraints: PathBuf,
    },
    /// Inspect dispersion models.
    Materials {
        #[command(subcommand)]
        action: MaterialsAction,
    },
}

#[derive(Subcommand)]
enum MaterialsAction {
    List,
    Show { name: Option<String> },
}

#[derive(Args, Clone)]
struct PointArgs {
    /// Built-in scenario name or scenario file.
    #[arg(long, default_value = "non-degenerate")]
    scenario: String,
    #[arg(long, value_parser = parse_pm)]
    pm: Option<PmKind>,
    /// l1 / (l1 + l2)
    #[arg(long)]
    ratio: Option<f64>,
    /// l1 + l2 in metres.
    #[arg(long)]
    joint_length: Option<f64>,
    /// Idler delay Δl2 = Δl4 in metres.
    #[arg(long)]
    delay: Option<f64>,
    /// Kelvin.
    #[arg(long)]
    temperature: Option<f64>,
    /// Signal minus half the pump frequency, Hz.
    #[arg(long)]
    signal_offset: Option<f64>,
    /// R1 = R2.
    #[arg(long)]
    reflectivity: Option<f64>,
    /// Round-trip loss, replacing the scenario's loss ledger.
    #[arg(long)]
    loss: Option<f64>,
    /// Effective cavity length in metres.
    #[arg(long)]
    effective_length: Option<f64>,
}

fn parse_format(s: &str) -> std::result::Result<OutputFormat, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_pm(s: &str) -> std::result::Result<PmKind, String> {
    match s.to_ascii_lowercase().as_str() {
        "type-0" | "type0" | "0" => Ok(PmKind::Type0),
        "type-i" | "typei" | "i" => Ok(PmKind::TypeI),
        "type-ii" | "typeii" | "ii" => Ok(PmKind::TypeII),
        _ => Err(format!("unknown phase matching '{s}' (type-0, type-i, type-ii)")),
    }
}

impl PointArgs {
    fn scenario(&self, outputs: Vec<Quantity>) -> Result<Scenario> {
        let mut s = Scenario::resolve(&self.scenario)?;
        if let Some(pm) = self.pm {
            s.source.pm = pm;
            s.target = None;
        }
        let overrides = [
            (Parameter::LengthRatio, self.ratio),
            (Parameter::JointLengthM, self.joint_length),
            (Parameter::DelayM, self.delay),
            (Parameter::TemperatureK, self.temperature),
            (Parameter::SignalOffsetHz, self.signal_offset),
            (Parameter::Reflectivity, self.reflectivity),
            (Parameter::Loss, self.loss),
            (Parameter::EffectiveLengthM, self.effective_length),
        ];
        for (p, v) in overrides {
            if let Some(v) = v {
                p.apply(&mut s, v);
            }
        }
        s.axes.clear();
        s.outputs = outputs;
        Ok(s)
    }
}

fn registry(material: Option<&Path>) -> Result<(MaterialRegistry, Option<String>)> {
    let mut reg = MaterialRegistry::builtin();
    let name = match material {
        Some(p) => Some(reg.load_file(p)?.name.clone()),
        None => None,
    };
    Ok((reg, name))
}

fn emit(cli: &Cli, result: &SweepResult) -> Result<()> {
    match &cli.out {
        Some(dir) => {
            let path = result.write_to_dir(dir, cli.format)?;
            println!("{}", path.display());
        }
        None => print!("{}", result.render(cli.format)?),
    }
    Ok(())
}

/// Point evaluations report numeric failures through the exit code.
fn point(cli: &Cli, args: &PointArgs, outputs: Vec<Quantity>, target: Option<BellTarget>) -> Result<i32> {
    let (reg, material) = registry(cli.material.as_deref())?;
    let mut s = args.scenario(outputs)?;
    if let Some(m) = material {
        s.material = m;
    }
    if target.is_some() {
        s.target = target;
    }
    let result = run_sweep(&s, &reg, cli.workers)?;
    emit(cli, &result)?;
    let code = result
        .rows
        .iter()
        .flat_map(|r| &r.cells)
        .filter_map(|c| match c {
            Cell::Error(code) => Some(exit_code_for(code)),
            _ => None,
        })
        .max()
        .unwrap_or(0);
    Ok(code)
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Bandwidth(a) => point(
            cli,
            a,
            vec![Quantity::Bandwidth1, Quantity::Bandwidth2, Quantity::PolingPeriod],
            None,
        ),
        Command::Cluster(a) => point(
            cli,
            a,
            vec![
                Quantity::Cluster1,
                Quantity::Cluster2,
                Quantity::Joint,
                Quantity::Cluster1SecondOrder,
                Quantity::Cluster2SecondOrder,
                Quantity::Sensitivity,
            ],
            None,
        ),
        Command::Fidelity { point: a, target } => point(
            cli,
            a,
            vec![Quantity::FidelitySingle1, Quantity::FidelitySingle2, Quantity::FidelityBell],
            *target,
        ),
        Command::Cavity(a) => point(cli, a, vec![Quantity::Finesse, Quantity::Linewidth], None),
        Command::Sweep { scenario } => {
            let (reg, material) = registry(cli.material.as_deref())?;
            let mut s = Scenario::resolve(scenario)?;
            if let Some(m) = material {
                s.material = m;
            }
            emit(cli, &run_sweep(&s, &reg, cli.workers)?)?;
            Ok(0)
        }
        Command::ReproduceFigure { id } => {
            let (reg, material) = registry(cli.material.as_deref())?;
            let material = material.unwrap_or_else(|| "MgO:CLN".to_string());
            let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("figures"));
            let ids: Vec<&str> = if id == "all" { FIGURE_IDS.to_vec() } else { vec![id.as_str()] };
            for id in ids {
                let files = reproduce_figure(id, &reg, &material, &out, cli.workers)?;
                println!("{}", files.csv.display());
                println!("{}", files.svg.display());
            }
            Ok(0)
        }
        Command::DesignQuery { constraints } => {
            let (reg, _) = registry(cli.material.as_deref())?;
            let c = DesignConstraints::load(constraints)?;
            let report = design_query(&c, &reg, cli.workers)?;
            let text = match cli.format {
                OutputFormat::Json => {
                    serde_json::to_string_pretty(&report).map_err(|e| Error::Output(e.to_string()))? + "\n"
                }
                OutputFormat::Csv => report.summary(),
            };
            match &cli.out {
                Some(dir) => {
                    std::fs::create_dir_all(dir)?;
                    let ext = if cli.format == OutputFormat::Json { "json" } else { "txt" };
                    let path = dir.join(format!("design_query.{ext}"));
                    std::fs::write(&path, text)?;
                    println!("{}", path.display());
                }
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Materials { action } => {
            let (reg, loaded) = registry(cli.material.as_deref())?;
            match action {
                MaterialsAction::List => {
                    for name in reg.names() {
                        let m = reg.get(name)?;
                        println!("{name}\t{}", m.fingerprint());
                    }
                }
                MaterialsAction::Show { name } => {
                    let name = name.clone().or(loaded).unwrap_or_else(|| "MgO:CLN".to_string());
                    let m = reg.get(&name)?;
                    println!("# sha256: {}", m.fingerprint());
                    print!("{}", m.to_toml_string()?);
                }
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
