//! Dataset ingestion, the labeled synthetic generator, and result emission.
//!
//! CSV files come in with a header row. A timestamp column (native seconds
//! or `YYYY-MM-DD HH:MM:SS`) is converted to seconds since the first record
//! and treated as an ordinary feature, so univariate time series become
//! two-dimensional point clouds. All features are z-scored before modeling;
//! the per-column (mean, std) pairs are kept so emitted records carry the
//! original coordinates.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::config::DataSettings;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::mvn::Observation;
use crate::rng::RandomSource;

#[derive(Debug, Clone)]
pub struct LabeledDataset {
    /// Model-space points (z-scored when loaded from CSV).
    pub points: Vec<Observation>,
    /// Ground-truth anomaly labels, when the source provides them.
    pub labels: Option<Vec<bool>>,
    /// Ground-truth cluster ids, when the source provides them.
    pub cluster_ids: Option<Vec<usize>>,
    pub feature_names: Vec<String>,
    /// Per-feature (mean, std) applied during z-scoring; `None` when the
    /// points are raw.
    pub normalization: Option<Vec<(f64, f64)>>,
}

impl LabeledDataset {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, |p| p.dim())
    }

    /// Map a model-space point back to the original coordinates.
    pub fn denormalize(&self, x: &Observation) -> Vec<f64> {
        match &self.normalization {
            None => x.to_vec(),
            Some(scales) => x
                .coords()
                .iter()
                .zip(scales)
                .map(|(v, (mean, std))| v * std + mean)
                .collect(),
        }
    }

    /// Z-score every feature column (no-op if already normalized), storing
    /// the per-column (mean, std) for later denormalization. Constant
    /// columns keep std 1.
    pub fn z_scored(&self) -> Result<LabeledDataset> {
        if self.normalization.is_some() {
            return Ok(self.clone());
        }
        let dim = self.dim();
        let n = self.len() as f64;
        let mut scales = Vec::with_capacity(dim);
        for c in 0..dim {
            let mean = self.points.iter().map(|p| p.coords()[c]).sum::<f64>() / n;
            let var = self
                .points
                .iter()
                .map(|p| (p.coords()[c] - mean) * (p.coords()[c] - mean))
                .sum::<f64>()
                / n;
            let std = var.sqrt();
            scales.push((mean, if std < 1e-12 { 1.0 } else { std }));
        }
        let points = self
            .points
            .iter()
            .map(|p| {
                Observation::new(
                    p.coords()
                        .iter()
                        .zip(&scales)
                        .map(|(v, (mean, std))| (v - mean) / std)
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset {
            points,
            labels: self.labels.clone(),
            cluster_ids: self.cluster_ids.clone(),
            feature_names: self.feature_names.clone(),
            normalization: Some(scales),
        })
    }
}

/// `YYYY-MM-DD HH:MM:SS` (or with a `T` separator) to seconds since the
/// Unix epoch, or a plain numeric value passed through.
fn parse_timestamp(raw: &str) -> Option<f64> {
    let raw = raw.trim();
    if let Ok(v) = raw.parse::<f64>() {
        return v.is_finite().then_some(v);
    }
    let normalized = raw.replace('T', " ");
    let (date, time) = normalized.split_once(' ')?;
    let mut dmy = date.split('-');
    let year: i64 = dmy.next()?.parse().ok()?;
    let month: i64 = dmy.next()?.parse().ok()?;
    let day: i64 = dmy.next()?.parse().ok()?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return None;
    }
    let mut hms = time.split(':');
    let hour: f64 = hms.next()?.parse().ok()?;
    let minute: f64 = hms.next()?.parse().ok()?;
    let second: f64 = hms.next().unwrap_or("0").parse().ok()?;

    // Days since 1970-01-01 for the proleptic Gregorian calendar.
    let y = if month <= 2 { year - 1 } else { year };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = (month + 9) % 12;
    let doy = (153 * mp + 2) / 5 + day - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    let days = era * 146_097 + doe - 719_468;
    Some(days as f64 * 86_400.0 + hour * 3_600.0 + minute * 60.0 + second)
}

fn parse_label(raw: &str, row: usize) -> Result<bool> {
    match raw.trim() {
        "0" | "false" => Ok(false),
        "1" | "true" => Ok(true),
        other => Err(Error::Data(format!("row {row}: label '{other}' is not 0/1"))),
    }
}

/// Load a CSV file under the given column schema; z-scores every feature.
pub fn load_csv(path: impl AsRef<std::path::Path>, schema: &DataSettings) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let find = |name: &str| headers.iter().position(|h| h == name);
    let named_or_auto = |explicit: &Option<String>, auto: &str| -> Result<Option<usize>> {
        match explicit {
            Some(name) => find(name)
                .map(Some)
                .ok_or_else(|| Error::Data(format!("column '{name}' not found in header"))),
            None => Ok(find(auto)),
        }
    };

    let ts_col = named_or_auto(&schema.timestamp_column, "timestamp")?;
    let label_col = named_or_auto(&schema.label_column, "label")?;
    let cluster_col = named_or_auto(&schema.cluster_column, "cluster")?;

    let feature_cols: Vec<usize> = if schema.features.is_empty() {
        (0..headers.len())
            .filter(|i| Some(*i) != ts_col && Some(*i) != label_col && Some(*i) != cluster_col)
            .collect()
    } else {
        schema
            .features
            .iter()
            .map(|name| {
                find(name).ok_or_else(|| Error::Data(format!("feature column '{name}' not found")))
            })
            .collect::<Result<Vec<_>>>()?
    };
    if feature_cols.is_empty() && ts_col.is_none() {
        return Err(Error::Data("no feature columns selected".into()));
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<bool> = Vec::new();
    let mut clusters: Vec<usize> = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // header is row 1
        let record = record.map_err(|e| Error::Data(format!("row {row}: {e}")))?;
        let mut values = Vec::with_capacity(feature_cols.len() + 1);
        if let Some(c) = ts_col {
            let raw = record.get(c).unwrap_or("");
            let ts = parse_timestamp(raw)
                .ok_or_else(|| Error::Data(format!("row {row}: bad timestamp '{raw}'")))?;
            values.push(ts);
        }
        for &c in &feature_cols {
            let raw = record.get(c).unwrap_or("");
            let v: f64 = raw
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("row {row}: '{raw}' is not a number")))?;
            if !v.is_finite() {
                return Err(Error::Data(format!("row {row}: non-finite feature value")));
            }
            values.push(v);
        }
        if let Some(c) = label_col {
            labels.push(parse_label(record.get(c).unwrap_or(""), row)?);
        }
        if let Some(c) = cluster_col {
            let raw = record.get(c).unwrap_or("");
            let v: usize = raw
                .trim()
                .parse()
                .map_err(|_| Error::Data(format!("row {row}: cluster id '{raw}' is not an integer")))?;
            clusters.push(v);
        }
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    // Timestamps become seconds since the first record before z-scoring.
    if ts_col.is_some() {
        let t0 = rows[0][0];
        for r in rows.iter_mut() {
            r[0] -= t0;
        }
    }

    let dim = rows[0].len();
    let n = rows.len() as f64;
    let mut normalization = Vec::with_capacity(dim);
    for c in 0..dim {
        let mean = rows.iter().map(|r| r[c]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[c] - mean) * (r[c] - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        let std = if std < 1e-12 { 1.0 } else { std };
        normalization.push((mean, std));
    }
    let points = rows
        .into_iter()
        .map(|r| {
            let scaled: Vec<f64> = r
                .iter()
                .zip(&normalization)
                .map(|(v, (mean, std))| (v - mean) / std)
                .collect();
            Observation::new(scaled)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut feature_names = Vec::new();
    if ts_col.is_some() {
        feature_names.push("t".to_string());
    }
    for &c in &feature_cols {
        feature_names.push(headers[c].clone());
    }

    Ok(LabeledDataset {
        points,
        labels: label_col.map(|_| labels),
        cluster_ids: cluster_col.map(|_| clusters),
        feature_names,
        normalization: Some(normalization),
    })
}

/// Shape of the generated 2-D benchmark dataset: a handful of tight normal
/// clusters plus a diffuse blob of labeled anomalies centered at the origin.
/// The first `len - 1` clusters come first, then the anomalies, then the
/// final cluster, so a prefix split naturally reproduces the streaming
/// scenario (model the established clusters, stream the emerging one).
#[derive(Debug, Clone)]
pub struct SyntheticConfig {
    pub cluster_means: Vec<(f64, f64)>,
    pub cluster_sizes: Vec<usize>,
    pub cluster_std: f64,
    pub n_anomalies: usize,
    pub anomaly_mean: (f64, f64),
    pub anomaly_std: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            cluster_means: vec![(10.0, 10.0), (-10.0, 10.0), (-10.0, -10.0), (10.0, -10.0)],
            cluster_sizes: vec![100, 100, 100, 77],
            cluster_std: 1.0,
            n_anomalies: 23,
            anomaly_mean: (0.0, 0.0),
            anomaly_std: 5.0,
        }
    }
}

impl SyntheticConfig {
    pub fn total_points(&self) -> usize {
        self.cluster_sizes.iter().sum::<usize>() + self.n_anomalies
    }

    /// Marker id used for anomalies in `cluster_ids`.
    pub fn anomaly_marker(&self) -> usize {
        self.cluster_means.len()
    }
}

/// Generate the labeled synthetic dataset. Deterministic under the seed.
pub fn generate_synthetic(cfg: &SyntheticConfig, rng: &mut RandomSource) -> Result<LabeledDataset> {
    if cfg.cluster_means.len() != cfg.cluster_sizes.len() {
        return Err(Error::invalid(
            "synthetic",
            "cluster_means and cluster_sizes must have equal length",
        ));
    }
    if cfg.cluster_sizes.contains(&0) || cfg.n_anomalies == 0 {
        return Err(Error::invalid("synthetic", "all block sizes must be positive"));
    }
    let mut points = Vec::with_capacity(cfg.total_points());
    let mut labels = Vec::with_capacity(cfg.total_points());
    let mut cluster_ids = Vec::with_capacity(cfg.total_points());

    let push_gaussian = |rng: &mut RandomSource, mean: (f64, f64), std: f64| {
        let x = mean.0 + std * rng.standard_normal();
        let y = mean.1 + std * rng.standard_normal();
        Observation::new(vec![x, y])
    };

    let k = cfg.cluster_means.len();
    for c in 0..k.saturating_sub(1) {
        for _ in 0..cfg.cluster_sizes[c] {
            points.push(push_gaussian(rng, cfg.cluster_means[c], cfg.cluster_std)?);
            labels.push(false);
            cluster_ids.push(c);
        }
    }
    for _ in 0..cfg.n_anomalies {
        points.push(push_gaussian(rng, cfg.anomaly_mean, cfg.anomaly_std)?);
        labels.push(true);
        cluster_ids.push(cfg.anomaly_marker());
    }
    if k > 0 {
        let c = k - 1;
        for _ in 0..cfg.cluster_sizes[c] {
            points.push(push_gaussian(rng, cfg.cluster_means[c], cfg.cluster_std)?);
            labels.push(false);
            cluster_ids.push(c);
        }
    }

    Ok(LabeledDataset {
        points,
        labels: Some(labels),
        cluster_ids: Some(cluster_ids),
        feature_names: vec!["x1".into(), "x2".into()],
        normalization: None,
    })
}

/// Write a dataset as CSV with feature, label, and cluster columns.
pub fn write_dataset_csv(ds: &LabeledDataset, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut header: Vec<String> = ds.feature_names.clone();
    if ds.labels.is_some() {
        header.push("label".into());
    }
    if ds.cluster_ids.is_some() {
        header.push("cluster".into());
    }
    w.write_record(&header)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    for (i, p) in ds.points.iter().enumerate() {
        let mut row: Vec<String> = p.coords().iter().map(|v| v.to_string()).collect();
        if let Some(labels) = &ds.labels {
            row.push(if labels[i] { "1".into() } else { "0".into() });
        }
        if let Some(ids) = &ds.cluster_ids {
            row.push(ids[i].to_string());
        }
        w.write_record(&row)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Which phase of a run produced a record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Batch,
    Stream,
}

/// One output line per data point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub index: usize,
    pub point: Vec<f64>,
    /// 1-based cluster id in the final state.
    pub cluster: usize,
    pub anomaly_flag: bool,
    /// Anomaly probability under the final tail model.
    pub p: f64,
    pub phase: Phase,
}

/// Line-delimited JSON, one record per line.
pub fn write_results(records: &[ResultRecord], path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::Data(e.to_string()))?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_results(path: impl AsRef<std::path::Path>) -> Result<Vec<ResultRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ResultRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Data(format!("{} line {}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

/// Single metrics document.
pub fn write_metrics(metrics: &Metrics, path: impl AsRef<std::path::Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(metrics).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_metrics(path: impl AsRef<std::path::Path>) -> Result<Metrics> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}
