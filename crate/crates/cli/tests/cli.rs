use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cavity-spdc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Header and first data row of a CSV result, skipping provenance comments.
fn table(o: &Output) -> (Vec<String>, Vec<String>) {
    let text = stdout(o);
    let mut rows = text.lines().filter(|l| !l.starts_with('#'));
    let split = |l: &str| l.split(',').map(str::to_string).collect::<Vec<_>>();
    (split(rows.next().unwrap()), split(rows.next().unwrap()))
}

#[test]
fn cavity_design_point() {
    let o = run(&["cavity"]);
    assert!(o.status.success());
    let (header, row) = table(&o);
    assert_eq!(header, ["finesse[1]", "linewidth[Hz]"]);
    let lw: f64 = row[1].parse().unwrap();
    assert!((lw - 3.785e6).abs() < 0.01e6, "{lw}");
    assert!(stdout(&o).contains("# coefficients_sha256: "));
}

#[test]
fn overrides_reach_the_calculation() {
    let (_, base) = table(&run(&["cluster"]));
    let (_, delayed) = table(&run(&["cluster", "--delay", "550e-6"]));
    assert_ne!(base[0], delayed[0]);
    // joint spacing is unaffected by equal idler delays
    let rel = |a: &str, b: &str| {
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        (a - b).abs() / a
    };
    assert!(rel(&base[2], &delayed[2]) < 1e-9);

    let (_, half) = table(&run(&["cluster", "--ratio", "0.5"]));
    assert_eq!(half[2], "inf");
}

#[test]
fn json_output() {
    let o = run(&["fidelity", "--delay", "550e-6", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let bell = v["rows"][0]["cells"][2]["value"].as_f64().unwrap();
    assert!(bell > 0.9 && bell <= 1.0);
    assert_eq!(v["provenance"]["material"], "MgO:CLN");
}

#[test]
fn exit_codes() {
    // validation: Bell target incompatible with type-II
    assert_eq!(run(&["fidelity", "--target", "phi-plus"]).status.code(), Some(2));
    assert_eq!(run(&["bandwidth", "--ratio", "2"]).status.code(), Some(2));
    assert_eq!(run(&["reproduce-figure", "9z"]).status.code(), Some(2));
    // numeric: lossless perfect mirrors have no linewidth
    let o = run(&["cavity", "--reflectivity", "1", "--loss", "0"]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(table(&o).1, ["inf", "error:infinite_finesse"]);
    assert_eq!(run(&["sweep", "/nonexistent/scenario.toml"]).status.code(), Some(1));
}

#[test]
fn sweep_writes_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = dir.path().join("delay.toml");
    let mut text = std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/scenarios/non-degenerate.toml"),
    )
    .unwrap();
    text = text.replace("name = \"non-degenerate\"", "name = \"delay sweep\"");
    text.push_str("\n[[axes]]\nparameter = \"delay_m\"\nstart = 0.0\nstop = 1e-3\npoints = 11\n");
    std::fs::write(&scenario, text).unwrap();

    let out = dir.path().join("out");
    let args = ["sweep", scenario.to_str().unwrap(), "--out", out.to_str().unwrap(), "--workers", "2"];
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("delay_sweep.csv")).unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 12);
    assert!(csv.contains("delay[m],bandwidth1[Hz]"));
}

#[test]
fn design_query_reports_feasible_region() {
    let dir = tempfile::tempdir().unwrap();
    let c = dir.path().join("constraints.toml");
    std::fs::write(
        &c,
        "target_linewidth_hz = 4e6\ntarget_fidelity = 0.9\n[grid]\nlength_ratio = [0.3, 0.4]\ndelay_m = [0.0, 550e-6]\n",
    )
    .unwrap();
    let o = run(&["design-query", c.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("recommended: ratio"), "{text}");

    std::fs::write(&c, "target_linewidth_hz = 1\ntarget_fidelity = 0.9\n[grid]\nlength_ratio = [0.4]\ndelay_m = [550e-6]\n").unwrap();
    let o = run(&["design-query", c.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["feasible"].as_array().unwrap().is_empty());
    assert!(v["diagnosis"][0].as_str().unwrap().starts_with("finesse bound"));
}

#[test]
fn reproduce_single_figure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["reproduce-figure", "5", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(dir.path().join("fig5.csv").exists());
    assert!(dir.path().join("fig5.svg").exists());
}

#[test]
fn materials_listing() {
    let o = run(&["materials", "list"]);
    assert!(stdout(&o).starts_with("MgO:CLN\t"));
    let o = run(&["materials", "show"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("# sha256: "));
}
