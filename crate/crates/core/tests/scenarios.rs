use cavity_spdc::materials::MaterialRegistry;
use cavity_spdc::sweep::{run_sweep, Cell, OutputFormat, Scenario, SweepResult};
use cavity_spdc::Error;

const RATIO_SWEEP: &str = r#"
name = "ratio sweep"
outputs = ["joint", "cluster1", "cluster2", "bandwidth"]

[source]
pm = "type-ii"
pump_wavelength_m = 519e-9
signal_wavelength_m = 780.24e-9
temperature_k = 313.15
joint_length_m = 10e-3
length_ratio = 0.4
air_path_m = 20e-3

[cavity]
r1 = 0.9998
r2 = 0.9998
effective_length_m = 53e-3
ledger = [{ label = "AR face", loss = 0.002, passes = 4 }]

[[axes]]
parameter = "length_ratio"
start = 0.05
stop = 0.95
step = 0.05
"#;

#[test]
fn ratio_sweep_file_marks_divergence_as_inf() {
    let s = Scenario::from_toml_str(RATIO_SWEEP).unwrap();
    let r = run_sweep(&s, &MaterialRegistry::builtin(), 2).unwrap();
    assert_eq!(r.rows.len(), 19);
    let csv = r.to_csv_string().unwrap();
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    assert_eq!(
        lines.next().unwrap(),
        "length_ratio[1],joint[Hz],cluster1[Hz],cluster2[Hz],bandwidth1[Hz]"
    );
    let half = lines.find(|l| l.starts_with("0.5,")).unwrap();
    assert_eq!(half.split(',').nth(1), Some("inf"));
}

#[test]
fn written_files_round_trip() {
    let s = Scenario::from_toml_str(RATIO_SWEEP).unwrap();
    let r = run_sweep(&s, &MaterialRegistry::builtin(), 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = r.write_to_dir(dir.path(), OutputFormat::Json).unwrap();
    assert_eq!(path.file_name().unwrap(), "ratio_sweep.json");
    let back: SweepResult = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(back, r);
    assert!(back.rows.iter().any(|row| row.cells[0] == Cell::Infinite));

    let again = Scenario::from_toml_str(&s.to_toml_string().unwrap()).unwrap();
    assert_eq!(again.fingerprint(), s.fingerprint());
}

#[test]
fn unknown_keys_and_empty_outputs_are_rejected() {
    let typo = RATIO_SWEEP.replace("air_path_m", "air_path");
    assert!(matches!(Scenario::from_toml_str(&typo), Err(Error::Parse(_))));

    let mut s = Scenario::from_toml_str(RATIO_SWEEP).unwrap();
    s.outputs.clear();
    s.source.length_ratio = 1.5;
    match run_sweep(&s, &MaterialRegistry::builtin(), 1) {
        Err(Error::ScenarioValidation(problems)) => {
            assert!(problems.iter().any(|p| p.contains("outputs")));
            assert!(problems.iter().any(|p| p.contains("length_ratio")));
        }
        other => panic!("{other:?}"),
    }
}
