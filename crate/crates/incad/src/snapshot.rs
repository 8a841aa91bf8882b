//! Versioned, self-describing JSON checkpoints.
//!
//! A state snapshot carries assignments, flags, per-cluster parameters and
//! sufficient statistics, plus the hash of the configuration that produced
//! it. Stream snapshots additionally carry the buffered observations, the
//! update counter, and the materialized model configuration so a stream
//! can resume without re-deriving anything from data.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::model::{ClusterRecord, ModelState};
use crate::mvn::{MvnParams, NiwParams, Observation, SuffStats};
use crate::stream::StreamState;
use crate::tail::TailConfig;

pub const STATE_FORMAT: &str = "incad-state";
pub const STREAM_FORMAT: &str = "incad-stream";
pub const SNAPSHOT_VERSION: u32 = 1;

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn rows_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Snapshot("matrix rows must be square and nonempty".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

#[derive(Serialize, Deserialize)]
struct ClusterSnapshot {
    mean: Vec<f64>,
    covariance: Vec<Vec<f64>>,
    n: usize,
    sum: Vec<f64>,
    sum_outer: Vec<Vec<f64>>,
    anomalous: bool,
}

#[derive(Serialize, Deserialize)]
struct StateSnapshot {
    format: String,
    version: u32,
    config_hash: String,
    z: Vec<usize>,
    a: Vec<bool>,
    clusters: Vec<ClusterSnapshot>,
}

fn state_snapshot(state: &ModelState, config_hash: &str) -> Result<StateSnapshot> {
    let z = state
        .assignments()
        .iter()
        .map(|a| a.ok_or_else(|| Error::Snapshot("cannot snapshot a detached point".into())))
        .collect::<Result<Vec<_>>>()?;
    let clusters = state
        .clusters()
        .iter()
        .map(|c| ClusterSnapshot {
            mean: c.params.mean().iter().copied().collect(),
            covariance: matrix_rows(c.params.covariance()),
            n: c.stats.count(),
            sum: c.stats.sum().iter().copied().collect(),
            sum_outer: matrix_rows(c.stats.sum_outer()),
            anomalous: c.anomalous,
        })
        .collect();
    Ok(StateSnapshot {
        format: STATE_FORMAT.to_string(),
        version: SNAPSHOT_VERSION,
        config_hash: config_hash.to_string(),
        z,
        a: state.flags().to_vec(),
        clusters,
    })
}

fn restore_state(snap: &StateSnapshot) -> Result<ModelState> {
    if snap.format != STATE_FORMAT {
        return Err(Error::Snapshot(format!("unexpected format '{}'", snap.format)));
    }
    if snap.version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
            snap.version
        )));
    }
    let dim = snap
        .clusters
        .first()
        .map(|c| c.mean.len())
        .ok_or_else(|| Error::Snapshot("snapshot has no clusters".into()))?;
    let clusters = snap
        .clusters
        .iter()
        .map(|c| {
            let params = MvnParams::new(
                DVector::from_vec(c.mean.clone()),
                rows_matrix(&c.covariance)?,
            )?;
            let stats = SuffStats::from_parts(
                c.n,
                DVector::from_vec(c.sum.clone()),
                rows_matrix(&c.sum_outer)?,
            )?;
            Ok(ClusterRecord {
                params,
                stats,
                anomalous: c.anomalous,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ModelState::from_parts(dim, snap.z.clone(), snap.a.clone(), clusters)
}

/// Write a model snapshot to `path`.
pub fn save_state(state: &ModelState, config_hash: &str, path: impl AsRef<std::path::Path>) -> Result<()> {
    let snap = state_snapshot(state, config_hash)?;
    let text = serde_json::to_string_pretty(&snap).map_err(|e| Error::Snapshot(e.to_string()))?;
    std::fs::write(path.as_ref(), text + "\n").map_err(|e| Error::io(path, e))
}

/// Load a model snapshot; returns the state and the stored config hash.
pub fn load_state(path: impl AsRef<std::path::Path>) -> Result<(ModelState, String)> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    let snap: StateSnapshot =
        serde_json::from_str(&text).map_err(|e| Error::Snapshot(e.to_string()))?;
    let state = restore_state(&snap)?;
    Ok((state, snap.config_hash))
}

#[derive(Serialize, Deserialize)]
struct ModelConfigSnapshot {
    alpha: f64,
    gamma: f64,
    q: f64,
    ev_prop: f64,
    ev_alpha_scale: f64,
    niw_mu0: Vec<f64>,
    niw_kappa0: f64,
    niw_nu0: f64,
    niw_psi: Vec<Vec<f64>>,
    sigma_new: Vec<Vec<f64>>,
    sweeps: usize,
    burn_in: usize,
    init_clusters: usize,
    init_cov_scale: f64,
    small_cluster_frac: f64,
    refit_per_point: bool,
    tail_passes: usize,
    batch_fraction: f64,
    finalize_every: usize,
    seed: u64,
}

impl ModelConfigSnapshot {
    fn capture(cfg: &ModelConfig) -> Self {
        Self {
            alpha: cfg.alpha,
            gamma: cfg.gamma,
            q: cfg.tail.q,
            ev_prop: cfg.tail.ev_prop,
            ev_alpha_scale: cfg.tail.ev_alpha_scale,
            niw_mu0: cfg.niw.mu0().iter().copied().collect(),
            niw_kappa0: cfg.niw.kappa0(),
            niw_nu0: cfg.niw.nu0(),
            niw_psi: matrix_rows(cfg.niw.psi()),
            sigma_new: matrix_rows(&cfg.sigma_new),
            sweeps: cfg.sweeps,
            burn_in: cfg.burn_in,
            init_clusters: cfg.init_clusters,
            init_cov_scale: cfg.init_cov_scale,
            small_cluster_frac: cfg.small_cluster_frac,
            refit_per_point: cfg.refit_per_point,
            tail_passes: cfg.tail_passes,
            batch_fraction: cfg.batch_fraction,
            finalize_every: cfg.finalize_every,
            seed: cfg.seed,
        }
    }

    fn restore(&self) -> Result<ModelConfig> {
        Ok(ModelConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            tail: TailConfig::new(self.q, self.ev_prop, self.alpha, self.ev_alpha_scale)?,
            niw: NiwParams::new(
                DVector::from_vec(self.niw_mu0.clone()),
                self.niw_kappa0,
                self.niw_nu0,
                rows_matrix(&self.niw_psi)?,
            )?,
            sigma_new: rows_matrix(&self.sigma_new)?,
            sweeps: self.sweeps,
            burn_in: self.burn_in,
            init_clusters: self.init_clusters,
            init_cov_scale: self.init_cov_scale,
            small_cluster_frac: self.small_cluster_frac,
            refit_per_point: self.refit_per_point,
            tail_passes: self.tail_passes,
            batch_fraction: self.batch_fraction,
            finalize_every: self.finalize_every,
            seed: self.seed,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct StreamSnapshot {
    format: String,
    version: u32,
    config_hash: String,
    model: StateSnapshot,
    buffer: Vec<Vec<f64>>,
    update_count: usize,
    config: ModelConfigSnapshot,
}

/// Write a stream checkpoint (model + buffer + config) to `path`.
pub fn save_stream(stream: &StreamState, config_hash: &str, path: impl AsRef<std::path::Path>) -> Result<()> {
    let snap = StreamSnapshot {
        format: STREAM_FORMAT.to_string(),
        version: SNAPSHOT_VERSION,
        config_hash: config_hash.to_string(),
        model: state_snapshot(&stream.model, config_hash)?,
        buffer: stream.buffer.iter().map(|o| o.to_vec()).collect(),
        update_count: stream.update_count,
        config: ModelConfigSnapshot::capture(&stream.config),
    };
    let text = serde_json::to_string_pretty(&snap).map_err(|e| Error::Snapshot(e.to_string()))?;
    std::fs::write(path.as_ref(), text + "\n").map_err(|e| Error::io(path, e))
}

/// Restore a stream checkpoint.
pub fn load_stream(path: impl AsRef<std::path::Path>) -> Result<StreamState> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(&path, e))?;
    let snap: StreamSnapshot =
        serde_json::from_str(&text).map_err(|e| Error::Snapshot(e.to_string()))?;
    if snap.format != STREAM_FORMAT {
        return Err(Error::Snapshot(format!("unexpected format '{}'", snap.format)));
    }
    if snap.version != SNAPSHOT_VERSION {
        return Err(Error::Snapshot(format!(
            "unsupported snapshot version {} (expected {SNAPSHOT_VERSION})",
            snap.version
        )));
    }
    let model = restore_state(&snap.model)?;
    let buffer = snap
        .buffer
        .iter()
        .map(|v| Observation::new(v.clone()))
        .collect::<Result<Vec<_>>>()?;
    if buffer.len() != model.num_points() {
        return Err(Error::Snapshot("buffer length does not match model".into()));
    }
    Ok(StreamState {
        model,
        buffer,
        config: snap.config.restore()?,
        update_count: snap.update_count,
    })
}
