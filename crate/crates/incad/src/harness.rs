//! Command implementations behind the CLI.
//!
//! Every command is deterministic under (seed, config, input): fixed seeds
//! produce byte-identical `results.jsonl` files. Outputs land under an
//! output directory with fixed names: `results.jsonl`, `metrics.json`,
//! `state.json`, `sensitivity.csv`, `dataset.csv`. The `INCAD_LOG`
//! environment variable selects verbosity (`quiet`, `info`, `debug`).

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{Config, ModelConfig};
use crate::data::{
    generate_synthetic, load_csv, read_results, write_dataset_csv, write_metrics, write_results,
    LabeledDataset, Phase, ResultRecord, SyntheticConfig,
};
use crate::error::{Error, Result};
use crate::gibbs::{build_tail_model, run_batch_gibbs};
use crate::metrics::{compute_metrics, Metrics};
use crate::model::ModelState;
use crate::mvn::sample_covariance;
use crate::rng::RandomSource;
use crate::snapshot::{save_state, save_stream};
use crate::stream::{batch_init, finalize_small_clusters, stream_update, StreamState};

mod log {
    use std::sync::OnceLock;

    fn level() -> u8 {
        static LEVEL: OnceLock<u8> = OnceLock::new();
        *LEVEL.get_or_init(|| match std::env::var("INCAD_LOG").as_deref() {
            Ok("quiet") => 0,
            Ok("debug") => 2,
            _ => 1,
        })
    }

    pub fn info(msg: impl AsRef<str>) {
        if level() >= 1 {
            eprintln!("incad: {}", msg.as_ref());
        }
    }

    pub fn debug(msg: impl AsRef<str>) {
        if level() >= 2 {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn ensure_out_dir(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn materialize(cfg: &Config, ds: &LabeledDataset) -> Result<ModelConfig> {
    if ds.is_empty() {
        return Err(Error::EmptyData("dataset has no points"));
    }
    let cov = sample_covariance(&ds.points);
    cfg.materialize(ds.dim(), &cov)
}

/// Final per-point records under the final state's tail model.
fn build_records(
    state: &ModelState,
    ds: &LabeledDataset,
    mcfg: &ModelConfig,
    batch_len: usize,
) -> Vec<ResultRecord> {
    let tail = build_tail_model(state, &ds.points, mcfg.tail.q);
    (0..ds.len())
        .map(|i| ResultRecord {
            index: i,
            point: ds.denormalize(&ds.points[i]),
            cluster: state.assignment(i).expect("attached point") + 1,
            anomaly_flag: state.flag(i),
            p: tail.probability(i),
            phase: if i < batch_len { Phase::Batch } else { Phase::Stream },
        })
        .collect()
}

fn metrics_from_labels(
    state: &ModelState,
    ds: &LabeledDataset,
    started: Instant,
    batch_fraction: f64,
) -> Option<Metrics> {
    let truth = ds.labels.as_ref()?;
    let predicted: Vec<bool> = (0..ds.len()).map(|i| state.flag(i)).collect();
    match compute_metrics(&predicted, truth) {
        Ok(m) => Some(
            m.with_runtime(started.elapsed().as_secs_f64())
                .with_batch_fraction(batch_fraction),
        ),
        Err(_) => None,
    }
}

/// Full-dataset batch inference. Returns the metrics when labels exist.
pub fn run_batch(cfg: &Config, input: &Path, out: &Path) -> Result<Option<Metrics>> {
    ensure_out_dir(out)?;
    let started = Instant::now();
    let ds = load_csv(input, &cfg.data)?;
    let mcfg = materialize(cfg, &ds)?;
    log::info(format!(
        "batch: {} points, d={}, {} sweeps",
        ds.len(),
        ds.dim(),
        mcfg.sweeps
    ));
    let mut rng = RandomSource::from_seed(mcfg.seed);
    let mut state = run_batch_gibbs(&ds.points, &mcfg, &mut rng)?;
    // Small clusters count as anomalous in the reported classification.
    state.apply_small_cluster_rule(mcfg.small_cluster_frac);

    let records = build_records(&state, &ds, &mcfg, ds.len());
    write_results(&records, out.join("results.jsonl"))?;
    save_state(&state, &cfg.hash(), out.join("state.json"))?;

    let metrics = metrics_from_labels(&state, &ds, started, 1.0);
    match &metrics {
        Some(m) => {
            write_metrics(m, out.join("metrics.json"))?;
            log::info(format!(
                "batch: K={} f_measure={:.4}",
                state.num_clusters(),
                m.f_measure
            ));
        }
        None => log::info("batch: no labels in input, metrics omitted"),
    }
    Ok(metrics)
}

/// Core of the streaming command, reusable without file output.
pub fn stream_core(cfg: &Config, ds: &LabeledDataset) -> Result<(StreamState, usize)> {
    let mcfg = materialize(cfg, ds)?;
    let n = ds.len();
    let batch_len = ((mcfg.batch_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1));
    let mut rng = RandomSource::from_seed(mcfg.seed);
    let mut stream = batch_init(&ds.points[..batch_len], &mcfg, &mut rng)?;
    log::debug(format!(
        "{{\"event\":\"batch_init\",\"n\":{},\"k\":{}}}",
        batch_len,
        stream.model.num_clusters()
    ));
    for i in batch_len..n {
        stream_update(&mut stream, ds.points[i].clone(), &mut rng)?;
        log::debug(format!(
            "{{\"event\":\"stream_update\",\"n\":{},\"k\":{},\"flagged\":{}}}",
            stream.model.num_points(),
            stream.model.num_clusters(),
            stream.model.flags().iter().filter(|f| **f).count()
        ));
    }
    finalize_small_clusters(&mut stream);
    Ok((stream, batch_len))
}

/// Batch-init on a prefix, stream the rest point by point, finalize.
pub fn run_stream(cfg: &Config, input: &Path, out: &Path) -> Result<Option<Metrics>> {
    ensure_out_dir(out)?;
    let started = Instant::now();
    let ds = load_csv(input, &cfg.data)?;
    log::info(format!(
        "stream: {} points, batch fraction {}",
        ds.len(),
        cfg.stream.batch_fraction
    ));
    let (stream, batch_len) = stream_core(cfg, &ds)?;

    let records = build_records(&stream.model, &ds, &stream.config, batch_len);
    write_results(&records, out.join("results.jsonl"))?;
    save_stream(&stream, &cfg.hash(), out.join("state.json"))?;

    let metrics = metrics_from_labels(&stream.model, &ds, started, cfg.stream.batch_fraction);
    match &metrics {
        Some(m) => {
            write_metrics(m, out.join("metrics.json"))?;
            log::info(format!(
                "stream: K={} f_measure={:.4}",
                stream.model.num_clusters(),
                m.f_measure
            ));
        }
        None => log::info("stream: no labels in input, metrics omitted"),
    }
    Ok(metrics)
}

/// Run the streaming pipeline once per batch fraction and tabulate metrics.
pub fn run_sensitivity(
    cfg: &Config,
    input: &Path,
    out: &Path,
    fractions: &[f64],
) -> Result<Vec<Metrics>> {
    ensure_out_dir(out)?;
    let ds = load_csv(input, &cfg.data)?;
    if ds.labels.is_none() {
        return Err(Error::Data("sensitivity analysis requires a labeled dataset".into()));
    }
    for f in fractions {
        if !(*f > 0.0 && *f < 1.0) {
            return Err(Error::Config(format!("fraction {f} outside (0, 1)")));
        }
    }
    let mut table = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let mut run_cfg = cfg.clone();
        run_cfg.stream.batch_fraction = fraction;
        let started = Instant::now();
        let (stream, _) = stream_core(&run_cfg, &ds)?;
        let metrics = metrics_from_labels(&stream.model, &ds, started, fraction)
            .expect("labels checked above");
        log::info(format!(
            "sensitivity: fraction {:.2} f_measure {:.4} ({:.2}s)",
            fraction, metrics.f_measure, metrics.runtime_seconds
        ));
        table.push(metrics);
    }

    let path = out.join("sensitivity.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    w.write_record([
        "fraction",
        "precision",
        "recall",
        "specificity",
        "accuracy",
        "f_measure",
        "runtime_seconds",
    ])
    .map_err(|e| Error::Data(e.to_string()))?;
    for m in &table {
        w.write_record([
            m.batch_fraction.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.specificity.to_string(),
            m.accuracy.to_string(),
            m.f_measure.to_string(),
            m.runtime_seconds.to_string(),
        ])
        .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(table)
}

/// Generate the labeled synthetic benchmark and write it as CSV.
pub fn run_simulate(cfg: &Config, out: &Path) -> Result<PathBuf> {
    ensure_out_dir(out)?;
    let mut rng = RandomSource::from_seed(cfg.seed);
    let ds = generate_synthetic(&SyntheticConfig::default(), &mut rng)?;
    let path = out.join("dataset.csv");
    write_dataset_csv(&ds, &path)?;
    log::info(format!("simulate: wrote {} points to {}", ds.len(), path.display()));
    Ok(path)
}

/// Score an existing results file against a labeled dataset.
pub fn run_eval(dataset: &Path, results: &Path, out: &Path, data_cfg: &Config) -> Result<Metrics> {
    ensure_out_dir(out)?;
    let started = Instant::now();
    let ds = load_csv(dataset, &data_cfg.data)?;
    let truth = ds
        .labels
        .as_ref()
        .ok_or_else(|| Error::Data("eval requires a labeled dataset".into()))?;
    let mut records = read_results(results)?;
    records.sort_by_key(|r| r.index);
    if records.len() != truth.len() {
        return Err(Error::Data(format!(
            "results hold {} records but dataset has {} rows",
            records.len(),
            truth.len()
        )));
    }
    let predicted: Vec<bool> = records.iter().map(|r| r.anomaly_flag).collect();
    let batch_count = records.iter().filter(|r| r.phase == Phase::Batch).count();
    let metrics = compute_metrics(&predicted, truth)?
        .with_runtime(started.elapsed().as_secs_f64())
        .with_batch_fraction(batch_count as f64 / records.len() as f64);
    write_metrics(&metrics, out.join("metrics.json"))?;
    log::info(format!("eval: f_measure {:.4}", metrics.f_measure));
    Ok(metrics)
}
