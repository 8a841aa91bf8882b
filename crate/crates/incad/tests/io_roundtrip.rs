//! File-format tests: CSV ingestion, result records, snapshots.

mod common;

use incad::config::{Config, DataSettings};
use incad::data::{
    generate_synthetic, load_csv, read_results, write_dataset_csv, write_results, Phase,
    ResultRecord, SyntheticConfig,
};
use incad::rng::RandomSource;
use incad::snapshot::{load_stream, save_stream};
use incad::stream::batch_init;
use proptest::prelude::*;
use std::path::PathBuf;

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("incad-test-{tag}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_file(dir: &std::path::Path, name: &str, content: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn numenta_style_two_column_file_becomes_two_dimensional() {
    let dir = temp_dir("numenta");
    let path = write_file(
        &dir,
        "traffic.csv",
        "timestamp,value\n2015-09-01 13:45:00,10.0\n2015-09-01 13:50:00,11.0\n2015-09-01 13:55:00,300.0\n",
    );
    let ds = load_csv(&path, &DataSettings::default()).unwrap();
    assert_eq!(ds.dim(), 2);
    assert_eq!(ds.len(), 3);
    assert_eq!(ds.feature_names, vec!["t".to_string(), "value".to_string()]);
    assert!(ds.labels.is_none());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn label_column_passes_through() {
    let dir = temp_dir("labels");
    let path = write_file(&dir, "labeled.csv", "x,label\n1.0,0\n2.0,1\n3.0,0\n");
    let ds = load_csv(&path, &DataSettings::default()).unwrap();
    assert_eq!(ds.labels, Some(vec![false, true, false]));
    assert_eq!(ds.dim(), 1);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn features_are_z_scored() {
    let dir = temp_dir("zscore");
    let mut content = String::from("a,b\n");
    let mut gen = RandomSource::from_seed(3);
    for _ in 0..200 {
        content.push_str(&format!(
            "{},{}\n",
            5.0 + 2.0 * gen.standard_normal(),
            -3.0 + 0.5 * gen.standard_normal()
        ));
    }
    let path = write_file(&dir, "data.csv", &content);
    let ds = load_csv(&path, &DataSettings::default()).unwrap();
    for c in 0..2 {
        let n = ds.len() as f64;
        let mean: f64 = ds.points.iter().map(|p| p.coords()[c]).sum::<f64>() / n;
        let var: f64 = ds.points.iter().map(|p| p.coords()[c].powi(2)).sum::<f64>() / n
            - mean * mean;
        common::assert_close(mean, 0.0, 1e-9);
        common::assert_close(var, 1.0, 1e-9);
    }
    // Denormalizing recovers the original coordinates.
    let raw = ds.denormalize(&ds.points[0]);
    let first_line = content.lines().nth(1).unwrap();
    let expected: Vec<f64> = first_line.split(',').map(|v| v.parse().unwrap()).collect();
    common::assert_close(raw[0], expected[0], 1e-9);
    common::assert_close(raw[1], expected[1], 1e-9);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn malformed_rows_are_reported_with_row_number() {
    let dir = temp_dir("malformed");
    let path = write_file(&dir, "bad.csv", "x,y\n1.0,2.0\noops,3.0\n");
    let err = load_csv(&path, &DataSettings::default()).unwrap_err();
    assert!(err.to_string().contains("row 3"), "{err}");

    let ragged = write_file(&dir, "ragged.csv", "x,y\n1.0,2.0\n3.0\n");
    let err = load_csv(&ragged, &DataSettings::default()).unwrap_err();
    assert!(err.to_string().contains("row 3"), "{err}");
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn synthetic_dataset_round_trips_through_csv() {
    let dir = temp_dir("synth");
    let ds = generate_synthetic(&SyntheticConfig::default(), &mut RandomSource::from_seed(17))
        .unwrap();
    let path = dir.join("dataset.csv");
    write_dataset_csv(&ds, &path).unwrap();

    let loaded = load_csv(&path, &DataSettings::default()).unwrap();
    assert_eq!(loaded.len(), 400);
    assert_eq!(loaded.labels.as_ref().unwrap(), ds.labels.as_ref().unwrap());
    assert_eq!(loaded.cluster_ids.as_ref().unwrap(), ds.cluster_ids.as_ref().unwrap());
    // Loading z-scores; denormalization restores the written coordinates.
    for i in [0usize, 150, 310, 399] {
        let raw = loaded.denormalize(&loaded.points[i]);
        let orig = ds.points[i].to_vec();
        common::assert_close(raw[0], orig[0], 1e-9);
        common::assert_close(raw[1], orig[1], 1e-9);
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn results_files_are_line_delimited() {
    let dir = temp_dir("results");
    let records: Vec<ResultRecord> = (0..400)
        .map(|i| ResultRecord {
            index: i,
            point: vec![i as f64, -(i as f64)],
            cluster: 1 + i % 5,
            anomaly_flag: i % 17 == 0,
            p: (i % 10) as f64 / 10.0,
            phase: if i < 300 { Phase::Batch } else { Phase::Stream },
        })
        .collect();
    let path = dir.join("results.jsonl");
    write_results(&records, &path).unwrap();

    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 400);
    let loaded = read_results(&path).unwrap();
    assert_eq!(loaded, records);

    // Empty record list still produces a valid (empty) file.
    let empty_path = dir.join("empty.jsonl");
    write_results(&[], &empty_path).unwrap();
    assert_eq!(read_results(&empty_path).unwrap(), Vec::<ResultRecord>::new());
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn stream_snapshot_round_trips() {
    let dir = temp_dir("stream-snap");
    let mut gen = RandomSource::from_seed(5);
    let data: Vec<incad::Observation> = (0..40)
        .map(|i| {
            incad::Observation::new(vec![
                if i % 2 == 0 { -2.0 } else { 2.0 } + 0.1 * gen.standard_normal(),
            ])
            .unwrap()
        })
        .collect();
    let mut cfg_doc = Config::default();
    cfg_doc.gibbs.sweeps = 5;
    cfg_doc.gibbs.burn_in = 0;
    let cfg = cfg_doc
        .materialize(1, &incad::mvn::sample_covariance(&data))
        .unwrap();
    let stream = batch_init(&data, &cfg, &mut RandomSource::from_seed(2)).unwrap();

    let path = dir.join("stream.json");
    save_stream(&stream, &cfg_doc.hash(), &path).unwrap();
    let restored = load_stream(&path).unwrap();

    assert_eq!(restored.buffer.len(), stream.buffer.len());
    assert_eq!(restored.update_count, stream.update_count);
    assert_eq!(restored.model.flags(), stream.model.flags());
    assert_eq!(restored.config.seed, stream.config.seed);
    assert_eq!(restored.config.sigma_new, stream.config.sigma_new);
    restored.model.check_invariants().unwrap();
    std::fs::remove_dir_all(&dir).ok();
}

proptest! {
    #[test]
    fn record_round_trip_is_identity(
        index in 0usize..10_000,
        point in proptest::collection::vec(-1e6f64..1e6, 1..6),
        cluster in 1usize..50,
        flag in any::<bool>(),
        p in 0.0f64..1.0,
        stream_phase in any::<bool>(),
    ) {
        let record = ResultRecord {
            index,
            point,
            cluster,
            anomaly_flag: flag,
            p,
            phase: if stream_phase { Phase::Stream } else { Phase::Batch },
        };
        let line = serde_json::to_string(&record).unwrap();
        let back: ResultRecord = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(back, record);
    }
}
