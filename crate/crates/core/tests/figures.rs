use cavity_spdc::materials::MaterialRegistry;
use cavity_spdc::sweep::{figure, reproduce_figure, Cell, Figure, FIGURE_IDS};

fn fig(id: &str) -> Figure {
    figure(id, &MaterialRegistry::builtin(), "MgO:CLN", 0).unwrap()
}

fn finite(y: &[Cell]) -> Vec<f64> {
    y.iter().map(|c| c.finite().expect("finite cell")).collect()
}

#[test]
fn linewidth_curves_are_monotone_and_ordered() {
    let f = fig("6");
    let series = &f.panels[0].series;
    assert_eq!(series.len(), 3);
    let curves: Vec<Vec<f64>> = series.iter().map(|s| finite(&s.y)).collect();
    for c in &curves {
        assert!(c.windows(2).all(|w| w[1] > w[0]));
    }
    // higher reflectivity, narrower line
    for ((a, b), c) in curves[0].iter().zip(&curves[1]).zip(&curves[2]) {
        assert!(a > b && b > c);
    }
}

#[test]
fn second_order_only_departs_near_degeneracy() {
    let f = fig("7");
    assert_eq!(f.panels.len(), 4);
    // ratios below 0.1 push the non-degenerate pair spacing toward its own
    // first-order singularity (FSR difference ~1e-3)
    let max_rel = |title: &str| {
        let p = f.panels.iter().find(|p| p.title == title).unwrap();
        let first = p.series("first order").unwrap();
        let b = &p.series("second order").unwrap().y;
        first
            .y
            .iter()
            .zip(b)
            .zip(&first.x)
            .filter(|(_, x)| **x >= 0.1)
            .map(|(c, _)| c)
            .filter_map(|(a, b)| Some((a.value()? - b.value()?).abs() / a.value()?))
            .fold(0.0f64, |m, d| m.max(if d.is_nan() { f64::INFINITY } else { d }))
    };
    assert!(max_rel("non-degenerate type-II") < 0.05);
    assert!(max_rel("non-degenerate type-0") < 0.05);
    assert!(max_rel("near-degenerate type-0") > 0.2);
}

#[test]
fn joint_spacing_diverges_at_equal_lengths() {
    let f = fig("4b");
    let joint = f.panels[0].series("joint cluster spacing").unwrap();
    let k = joint.x.iter().position(|x| (x - 0.5).abs() < 1e-12).unwrap();
    assert_eq!(joint.y[k], Cell::Infinite);
    assert!(joint.y[k - 1].finite().unwrap() > joint.y[k - 10].finite().unwrap());
}

#[test]
fn delay_sweep_leaves_bandwidths_unchanged() {
    let f = fig("4d");
    let p = &f.panels[0];
    for label in ["SPDC bandwidth 1", "SPDC bandwidth 2"] {
        let y = finite(&p.series(label).unwrap().y);
        assert!(y.iter().all(|v| (v - y[0]).abs() <= 1e-12 * y[0]));
    }
    let c1 = finite(&p.series("cluster spacing 1").unwrap().y);
    assert!(c1.last().unwrap() > &c1[0]);
}

#[test]
fn every_figure_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    for id in FIGURE_IDS {
        let files = reproduce_figure(id, &MaterialRegistry::builtin(), "MgO:CLN", dir.path(), 0).unwrap();
        let csv = std::fs::read_to_string(&files.csv).unwrap();
        assert!(csv.contains("# coefficients_sha256: "), "{id}");
        assert!(csv.lines().any(|l| l.starts_with("panel,series,")), "{id}");
        let svg = std::fs::read_to_string(&files.svg).unwrap();
        assert!(svg.starts_with("<svg"), "{id}");
    }
}

