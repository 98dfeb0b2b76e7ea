use aoi_sim::harness::{
    emit_csv, parse_config, run_experiment, write_csv, ExperimentConfig, ExperimentId,
    HarnessError, Protocol,
};
use aoi_sim::{adra_average_aoi, aira_average_aoi};

fn small(id: ExperimentId) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::defaults_for(id);
    cfg.replications = 3;
    match id {
        ExperimentId::E1 => cfg.deltas = vec![1, 4, 8],
        ExperimentId::E2 => cfg.n_values = vec![8, 16],
        ExperimentId::E3 => {
            cfg.n_values = vec![4];
            cfg.gaps_db = vec![0.0, 10.0];
            cfg.horizon = 1_000;
        }
        ExperimentId::Custom => {}
    }
    cfg
}

fn csv_bytes(cfg: &ExperimentConfig) -> Vec<u8> {
    let report = run_experiment(cfg).unwrap();
    let mut buf = Vec::new();
    write_csv(&report, &mut buf).unwrap();
    buf
}

#[test]
fn identical_config_gives_identical_csv() {
    for id in [
        ExperimentId::E1,
        ExperimentId::E2,
        ExperimentId::E3,
        ExperimentId::Custom,
    ] {
        let cfg = small(id);
        assert_eq!(csv_bytes(&cfg), csv_bytes(&cfg), "{id:?}");
    }
}

#[test]
fn seed_changes_results() {
    let cfg = small(ExperimentId::Custom);
    let other = ExperimentConfig {
        master_seed: cfg.master_seed + 1,
        ..cfg.clone()
    };
    assert_ne!(csv_bytes(&cfg), csv_bytes(&other));
}

#[test]
fn csv_files_have_documented_headers() {
    let dir = tempfile::tempdir().unwrap();
    for (id, header) in [
        (
            ExperimentId::E1,
            "n,delta,protocol,empirical_mean,stderr,analytical,abs_diff",
        ),
        (
            ExperimentId::E3,
            "n,delta,protocol,empirical_mean,stderr,analytical,abs_diff,group,gap_db",
        ),
    ] {
        let path = dir.path().join(format!("{}.csv", id.name()));
        emit_csv(&run_experiment(&small(id)).unwrap(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(header));
        let columns = header.split(',').count();
        for line in lines {
            assert_eq!(line.split(',').count(), columns, "{line}");
        }
    }
}

#[test]
fn io_errors_name_the_path() {
    let report = run_experiment(&small(ExperimentId::Custom)).unwrap();
    let path = std::path::Path::new("/nonexistent-dir/out.csv");
    let err = emit_csv(&report, path).unwrap_err();
    assert!(matches!(err, HarnessError::Io { .. }));
    assert!(
        err.to_string().contains("/nonexistent-dir/out.csv"),
        "{err}"
    );
}

#[test]
fn analytical_column_is_direct_reevaluation() {
    let report = run_experiment(&small(ExperimentId::E1)).unwrap();
    assert_eq!(report.rows.len(), 3 * 4);
    for row in &report.rows {
        let direct = match row.protocol {
            Protocol::Aira => aira_average_aoi(row.n as u32, row.p).unwrap(),
            Protocol::Adra => adra_average_aoi(row.n as u32, row.delta, row.p).unwrap(),
        };
        assert_eq!(row.analytical, Some(direct));
        assert_eq!(row.abs_diff(), Some((row.empirical_mean - direct).abs()));
        if row.protocol == Protocol::Aira {
            assert_eq!(row.p, 1.0 / row.n as f64);
            assert_eq!(row.delta, 1);
        }
    }
}

#[test]
fn standard_error_shrinks_with_replications() {
    let base = ExperimentConfig {
        n_values: vec![6],
        deltas: vec![1],
        horizon: 400,
        ..ExperimentConfig::custom()
    };
    let se = |reps: u32| {
        let cfg = ExperimentConfig {
            replications: reps,
            ..base.clone()
        };
        run_experiment(&cfg).unwrap().rows[0].stderr
    };
    let ratio = se(25) / se(400);
    // Expected 4 = sqrt(400 / 25).
    assert!((2.8..5.7).contains(&ratio), "ratio {ratio}");
}

#[test]
fn replications_share_seeds_across_sweep_points() {
    let cfg = small(ExperimentId::E1);
    let report = run_experiment(&cfg).unwrap();
    // AIRA and ADRA with threshold 1 at the same CAP are the same network.
    for pair in report.rows.chunks(4) {
        assert_eq!(pair[0].samples, pair[1].samples);
    }
}

#[test]
fn e2_multiplexes_onto_radios() {
    let report = run_experiment(&small(ExperimentId::E2)).unwrap();
    assert_eq!(report.rows.len(), 4);
    for row in &report.rows {
        match row.protocol {
            Protocol::Aira => assert_eq!(row.delta, 1),
            Protocol::Adra => assert_eq!(row.delta, row.n as u64),
        }
    }
}

#[test]
fn config_file_drives_experiment() {
    let text =
        "n = 5\nhorizon = 300\nreplications = 2\nseed = 11\nprotocol = adra\ndelta = 3\np = 0.25\n";
    let cfg = parse_config(text, ExperimentConfig::custom()).unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.master_seed, 11);
    assert_eq!(report.rows.len(), 1);
    let row = &report.rows[0];
    assert_eq!((row.n, row.delta, row.p), (5, 3, 0.25));
    assert_eq!(row.samples.len(), 2);
}

#[test]
fn paper_faithful_runs_once() {
    let cfg = ExperimentConfig::e1().paper_faithful();
    assert_eq!(cfg.replications, 1);
    assert_eq!(cfg.horizon, 800);
    assert_eq!(cfg.misdetection, 0.02);
    let report = run_experiment(&ExperimentConfig {
        deltas: vec![1],
        ..cfg
    })
    .unwrap();
    assert!(report
        .rows
        .iter()
        .all(|r| r.stderr.is_nan() && r.samples.len() == 1));
}
