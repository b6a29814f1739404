use std::fs;
use std::path::Path;

use platelet_abc::abc::{Cov5, Particle, Population, PosteriorCorrelation, PredictiveRow, PredictiveTable};
use platelet_abc::io::*;
use platelet_abc::model::{DepositionSeries, ModelParams, SimulationConfig, Simulator};
use platelet_abc::scheduler::{dynamic_schedule, ExecutorTimeline};
use proptest::prelude::*;

fn small_config() -> SimulationConfig {
    SimulationConfig {
        substrate_rows: 32,
        substrate_cols: 32,
        n_z: 30,
        boundary_layer_thickness: 0.002,
        ..SimulationConfig::default()
    }
}

fn theta() -> ModelParams {
    ModelParams::new(11.0, 75.0, 1.5e-3, 0.9, 4.0)
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn simulated_series_round_trips_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let series = Simulator::new(small_config()).unwrap().run(&theta(), 4).unwrap();
    let path = dir.path().join("series.csv");
    write_series(&path, &series).unwrap();
    let back = load_observed(&path).unwrap();
    assert_eq!(back.series, series);
    assert_eq!(back.provenance, Provenance::Experimental);
}

#[test]
fn header_only_file_has_no_data_rows() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.csv", &format!("{}\n", OBSERVED_HEADER.join(",")));
    let err = load_observed(&p).unwrap_err();
    assert_eq!(err.kind(), "no_data");
    assert!(err.to_string().contains("no data rows"));
}

#[test]
fn missing_column_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "x.csv", "t_s,S_agg_um2,N_agg_per_mm2,N_plt_per_ul\n0,1,2,3\n");
    match load_observed(&p).unwrap_err() {
        IoError::MissingColumn { column, .. } => assert_eq!(column, "N_act_per_ul"),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn bad_cells_report_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let h = OBSERVED_HEADER.join(",");
    let p = write(dir.path(), "a.csv", &format!("{h}\n0,1,2,3,4\n20,1,abc,3,4\n"));
    match load_observed(&p).unwrap_err() {
        IoError::Parse { row, column, .. } => assert_eq!((row, column.as_str()), (2, "N_agg_per_mm2")),
        e => panic!("unexpected {e}"),
    }
    let p = write(dir.path(), "b.csv", &format!("{h}\n20,1,2,3,4\n10,1,2,3,4\n"));
    assert!(matches!(load_observed(&p).unwrap_err(), IoError::Parse { row: 2, .. }));
    let p = write(dir.path(), "c.csv", &format!("{h}\n0,1,2,-3,4\n"));
    assert!(matches!(load_observed(&p).unwrap_err(), IoError::Parse { row: 1, .. }));
    assert_eq!(load_observed(dir.path().join("absent.csv")).unwrap_err().kind(), "io");
}

#[test]
fn columns_may_be_reordered_and_padded() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "x.csv",
        "# provenance=synthetic\nN_act_per_ul, t_s ,S_agg_um2,N_agg_per_mm2,N_plt_per_ul\n4, 0,1,2,3\n",
    );
    let d = load_observed(&p).unwrap();
    assert_eq!(d.provenance, Provenance::Synthetic);
    assert_eq!(d.series.row(0), [1.0, 2.0, 3.0, 4.0]);
}

fn population(rows: &[([f64; 5], f64, f64)]) -> Population {
    let particles = rows
        .iter()
        .map(|&(t, w, d)| Particle {
            theta: ModelParams::from_array(t),
            weight: w,
            discrepancy: d,
            sim_seed: 0,
        })
        .collect();
    Population {
        particles,
        epsilon: 0.1,
        step: 3,
        kernel_cov: Cov5::zeros(),
        history: vec![],
    }
}

#[test]
fn population_weights_survive_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<_> = (0..50)
        .map(|i| {
            let x = i as f64;
            ([5.0 + x / 7.0, 50.0 + x, 1e-3 + x * 1e-5, 0.1 + x / 97.0, x / 13.0], 1.0 / 3.0 + x / 1e3, x / 31.0)
        })
        .collect();
    let pop = population(&rows);
    let path = dir.path().join("posterior.csv");
    write_population(&path, &pop).unwrap();
    let back = load_population(&path).unwrap();
    assert_eq!(back.len(), 50);
    for (a, b) in pop.particles.iter().zip(&back.particles) {
        assert!((a.weight - b.weight).abs() < 1e-12);
        assert_eq!(a.theta, b.theta);
        assert_eq!(a.discrepancy, b.discrepancy);
    }
}

#[test]
fn empty_population_writes_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("posterior.csv");
    write_population(&path, &population(&[])).unwrap();
    assert_eq!(fs::read_to_string(&path).unwrap(), format!("{}\n", POPULATION_HEADER.join(",")));
    assert_eq!(load_population(&path).unwrap_err().kind(), "no_data");
}

#[test]
fn predictive_rows_written_sorted() {
    let dir = tempfile::tempdir().unwrap();
    let row = |t: f64, v: &str| PredictiveRow {
        t_s: t,
        variable: v.into(),
        mean: t + 0.5,
        q25: t,
        q75: t + 1.0,
        min: t - 1.0,
        max: t + 2.0,
    };
    let table = PredictiveTable {
        rows: vec![row(20.0, "S_agg_um2"), row(0.0, "S_agg_um2"), row(60.0, "N_act_per_ul"), row(0.0, "N_plt_per_ul")],
    };
    let path = dir.path().join("predictive.csv");
    write_predictive(&path, &table).unwrap();
    let back = load_predictive(&path).unwrap();
    let keys: Vec<_> = back.rows.iter().map(|r| (r.variable.as_str(), r.t_s)).collect();
    assert_eq!(
        keys,
        [("N_act_per_ul", 60.0), ("N_plt_per_ul", 0.0), ("S_agg_um2", 0.0), ("S_agg_um2", 20.0)]
    );
    assert_eq!(back.rows[3], table.rows[0]);
}

#[test]
fn timeline_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let t = dynamic_schedule(&[0.3, 1.7, 2.2, 0.1, 5.0, 1e-5], 3);
    let path = dir.path().join("timeline.csv");
    write_timeline(&path, &t).unwrap();
    let back: ExecutorTimeline = load_timeline(&path).unwrap();
    assert_eq!(back, t);
}

#[test]
fn correlation_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let corr = PosteriorCorrelation {
        matrix: Cov5::identity(),
        degenerate: [false, false, true, false, false],
    };
    let path = dir.path().join("correlation.csv");
    write_correlation(&path, &corr).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "param,p_Ag,p_Ad,p_T,p_F,a_T,degenerate");
    assert_eq!(lines[3], "p_T,0,0,1,0,0,true");
    assert_eq!(lines.len(), 6);
}

#[test]
fn synth_matches_simulate_and_is_tagged() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config();
    let data = synth_dataset(&theta(), &cfg, 17).unwrap();
    assert_eq!(data.provenance, Provenance::Synthetic);
    assert_eq!(data.series, Simulator::new(cfg.clone()).unwrap().run(&theta(), 17).unwrap());
    let path = dir.path().join("observed.csv");
    write_observed(&path, &data).unwrap();
    assert!(fs::read_to_string(&path).unwrap().starts_with("# provenance=synthetic\n"));
    let back = load_observed(&path).unwrap();
    assert_eq!(back, data);
    back.check_times(&cfg).unwrap();
}

#[test]
fn synth_seeds_give_distinct_datasets() {
    let cfg = SimulationConfig {
        substrate_rows: 16,
        substrate_cols: 16,
        ..small_config()
    };
    let mut seen: Vec<DepositionSeries> = Vec::new();
    for seed in 0..100 {
        let s = synth_dataset(&theta(), &cfg, seed).unwrap().series;
        assert!(!seen.contains(&s), "seed {seed} repeats an earlier dataset");
        seen.push(s);
    }
}

#[test]
fn run_config_paths_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "obs.csv", "t_s,S_agg_um2,N_agg_per_mm2,N_plt_per_ul,N_act_per_ul\n0,0,0,1,1\n");
    let good = write(dir.path(), "run.json", r#"{"schema_version":1,"observed":"obs.csv","out_dir":"out"}"#);
    let cfg = RunConfig::load(&good).unwrap();
    assert_eq!(cfg.observed.unwrap(), dir.path().join("obs.csv"));
    assert_eq!(cfg.out_dir.unwrap(), dir.path().join("out"));

    let bad = write(dir.path(), "v2.json", r#"{"schema_version":2}"#);
    assert!(matches!(RunConfig::load(&bad).unwrap_err(), IoError::Schema { found: 2, expected: 1, .. }));
    let missing = write(dir.path(), "m.json", r#"{"schema_version":1,"observed":"nope.csv"}"#);
    assert_eq!(RunConfig::load(&missing).unwrap_err().kind(), "invalid");
    let workers = write(dir.path(), "w.json", r#"{"scheduler":{"workers":0}}"#);
    assert_eq!(RunConfig::load(&workers).unwrap_err().kind(), "invalid");
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![0.0..1e-6f64, 0.0..1.0f64, 0.0..1e9f64, 1e12..1e20f64]
}

proptest! {
    #[test]
    fn number_format_is_lossless(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }

    #[test]
    fn any_series_round_trips(rows in prop::collection::vec([finite(), finite(), finite(), finite()], 1..12)) {
        let mut s = DepositionSeries::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            s.push(i as f64 * 20.0, *r);
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_series(&path, &s).unwrap();
        prop_assert_eq!(load_observed(&path).unwrap().series, s);
    }
}
