//! Run configuration.
//!
//! One flat, greppable `key = value` document with module-prefixed keys
//! (`tail.q`, `gibbs.gamma`, `stream.batch_fraction`, ...). Every default
//! the model relies on appears in the emitted document, so a config file is
//! a complete record of a run. `#` starts a comment.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mvn::NiwParams;
use crate::tail::{default_ev_prop, TailConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct TailSettings {
    pub q: f64,
    pub ev_prop: f64,
    pub ev_alpha_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GibbsSettings {
    pub alpha: f64,
    pub gamma: f64,
    pub sweeps: usize,
    pub burn_in: usize,
    pub init_clusters: usize,
    pub init_cov_scale: f64,
    pub sigma_new_scale: f64,
    pub refit_per_point: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NiwSettings {
    pub kappa0: f64,
    /// nu0 = d + 1 + nu0_extra; the extra keeps the prior proper for any d.
    pub nu0_extra: f64,
    pub psi_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamSettings {
    pub batch_fraction: f64,
    pub small_cluster_frac: f64,
    pub tail_passes: usize,
    /// Apply the small-cluster rule every this many updates; 0 = only at
    /// end of stream.
    pub finalize_every: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DataSettings {
    /// Feature column names; empty selects every numeric column not used
    /// as timestamp/label/cluster.
    pub features: Vec<String>,
    pub timestamp_column: Option<String>,
    pub label_column: Option<String>,
    pub cluster_column: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub seed: u64,
    pub tail: TailSettings,
    pub gibbs: GibbsSettings,
    pub niw: NiwSettings,
    pub stream: StreamSettings,
    pub data: DataSettings,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 42,
            tail: TailSettings {
                q: 0.05,
                ev_prop: default_ev_prop(),
                ev_alpha_scale: 100.0,
            },
            gibbs: GibbsSettings {
                alpha: 1.0,
                gamma: 0.05,
                sweeps: 100,
                burn_in: 50,
                init_clusters: 10,
                init_cov_scale: 1.0,
                sigma_new_scale: 0.1,
                refit_per_point: false,
            },
            niw: NiwSettings {
                kappa0: 1.0,
                nu0_extra: 2.0,
                psi_scale: 0.5,
            },
            stream: StreamSettings {
                batch_fraction: 0.2,
                small_cluster_frac: 0.05,
                tail_passes: 1,
                finalize_every: 0,
            },
            data: DataSettings::default(),
        }
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64> {
    value
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{value}'")))
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .parse::<usize>()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{value}'")))
}

fn parse_u64(key: &str, value: &str) -> Result<u64> {
    value
        .parse::<u64>()
        .map_err(|_| Error::Config(format!("{key}: expected a non-negative integer, got '{value}'")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true/false, got '{value}'"))),
    }
}

fn opt_string(value: &str) -> Option<String> {
    (!value.is_empty()).then(|| value.to_string())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Self::parse(&text)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "seed" => self.seed = parse_u64(key, value)?,
            "tail.q" => self.tail.q = parse_f64(key, value)?,
            "tail.ev_prop" => self.tail.ev_prop = parse_f64(key, value)?,
            "tail.ev_alpha_scale" => self.tail.ev_alpha_scale = parse_f64(key, value)?,
            "gibbs.alpha" => self.gibbs.alpha = parse_f64(key, value)?,
            "gibbs.gamma" => self.gibbs.gamma = parse_f64(key, value)?,
            "gibbs.sweeps" => self.gibbs.sweeps = parse_usize(key, value)?,
            "gibbs.burn_in" => self.gibbs.burn_in = parse_usize(key, value)?,
            "gibbs.init_clusters" => self.gibbs.init_clusters = parse_usize(key, value)?,
            "gibbs.init_cov_scale" => self.gibbs.init_cov_scale = parse_f64(key, value)?,
            "gibbs.sigma_new_scale" => self.gibbs.sigma_new_scale = parse_f64(key, value)?,
            "gibbs.refit_per_point" => self.gibbs.refit_per_point = parse_bool(key, value)?,
            "niw.kappa0" => self.niw.kappa0 = parse_f64(key, value)?,
            "niw.nu0_extra" => self.niw.nu0_extra = parse_f64(key, value)?,
            "niw.psi_scale" => self.niw.psi_scale = parse_f64(key, value)?,
            "stream.batch_fraction" => self.stream.batch_fraction = parse_f64(key, value)?,
            "stream.small_cluster_frac" => self.stream.small_cluster_frac = parse_f64(key, value)?,
            "stream.tail_passes" => self.stream.tail_passes = parse_usize(key, value)?,
            "stream.finalize_every" => self.stream.finalize_every = parse_usize(key, value)?,
            "data.features" => {
                self.data.features = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "data.timestamp_column" => self.data.timestamp_column = opt_string(value),
            "data.label_column" => self.data.label_column = opt_string(value),
            "data.cluster_column" => self.data.cluster_column = opt_string(value),
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Canonical document: every key, current values, fixed order.
    pub fn document(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("seed", self.seed.to_string());
        push("tail.q", self.tail.q.to_string());
        push("tail.ev_prop", self.tail.ev_prop.to_string());
        push("tail.ev_alpha_scale", self.tail.ev_alpha_scale.to_string());
        push("gibbs.alpha", self.gibbs.alpha.to_string());
        push("gibbs.gamma", self.gibbs.gamma.to_string());
        push("gibbs.sweeps", self.gibbs.sweeps.to_string());
        push("gibbs.burn_in", self.gibbs.burn_in.to_string());
        push("gibbs.init_clusters", self.gibbs.init_clusters.to_string());
        push("gibbs.init_cov_scale", self.gibbs.init_cov_scale.to_string());
        push("gibbs.sigma_new_scale", self.gibbs.sigma_new_scale.to_string());
        push("gibbs.refit_per_point", self.gibbs.refit_per_point.to_string());
        push("niw.kappa0", self.niw.kappa0.to_string());
        push("niw.nu0_extra", self.niw.nu0_extra.to_string());
        push("niw.psi_scale", self.niw.psi_scale.to_string());
        push("stream.batch_fraction", self.stream.batch_fraction.to_string());
        push(
            "stream.small_cluster_frac",
            self.stream.small_cluster_frac.to_string(),
        );
        push("stream.tail_passes", self.stream.tail_passes.to_string());
        push("stream.finalize_every", self.stream.finalize_every.to_string());
        push("data.features", self.data.features.join(","));
        push(
            "data.timestamp_column",
            self.data.timestamp_column.clone().unwrap_or_default(),
        );
        push(
            "data.label_column",
            self.data.label_column.clone().unwrap_or_default(),
        );
        push(
            "data.cluster_column",
            self.data.cluster_column.clone().unwrap_or_default(),
        );
        out
    }

    /// Stable FNV-1a hash of the canonical document, as hex.
    pub fn hash(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.document().bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }

    /// Bind the configuration to a dataset dimension and sample covariance,
    /// producing the runtime model configuration.
    ///
    /// The new-cluster covariance is `sigma_new_scale` times the sample
    /// covariance, falling back to a scaled identity when the sample
    /// covariance is not positive definite (e.g. degenerate data).
    pub fn materialize(&self, dim: usize, sample_cov: &DMatrix<f64>) -> Result<ModelConfig> {
        if dim == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        if self.gibbs.sweeps == 0 || self.gibbs.sweeps <= self.gibbs.burn_in {
            return Err(Error::Config(format!(
                "gibbs.sweeps ({}) must exceed gibbs.burn_in ({})",
                self.gibbs.sweeps, self.gibbs.burn_in
            )));
        }
        if !(0.0..=1.0).contains(&self.gibbs.gamma) {
            return Err(Error::Config(format!(
                "gibbs.gamma must be in [0, 1], got {}",
                self.gibbs.gamma
            )));
        }
        if self.gibbs.init_clusters == 0 {
            return Err(Error::Config("gibbs.init_clusters must be at least 1".into()));
        }
        if !(self.gibbs.init_cov_scale > 0.0 && self.gibbs.sigma_new_scale > 0.0) {
            return Err(Error::Config(
                "gibbs.init_cov_scale and gibbs.sigma_new_scale must be positive".into(),
            ));
        }
        if !(self.stream.batch_fraction > 0.0 && self.stream.batch_fraction < 1.0) {
            return Err(Error::Config(format!(
                "stream.batch_fraction must be in (0, 1), got {}",
                self.stream.batch_fraction
            )));
        }
        if !(0.0..1.0).contains(&self.stream.small_cluster_frac) {
            return Err(Error::Config(format!(
                "stream.small_cluster_frac must be in [0, 1), got {}",
                self.stream.small_cluster_frac
            )));
        }
        if self.stream.tail_passes == 0 {
            return Err(Error::Config("stream.tail_passes must be at least 1".into()));
        }
        if !(self.niw.psi_scale.is_finite() && self.niw.psi_scale > 0.0) {
            return Err(Error::Config("niw.psi_scale must be positive".into()));
        }

        let tail = TailConfig::new(
            self.tail.q,
            self.tail.ev_prop,
            self.gibbs.alpha,
            self.tail.ev_alpha_scale,
        )?;

        let nu0 = dim as f64 + 1.0 + self.niw.nu0_extra;
        let niw = NiwParams::new(
            DVector::zeros(dim),
            self.niw.kappa0,
            nu0,
            DMatrix::identity(dim, dim) * self.niw.psi_scale,
        )?;

        let scaled = sample_cov * self.gibbs.sigma_new_scale;
        let sigma_new = if nalgebra::Cholesky::new(scaled.clone()).is_some() {
            scaled
        } else {
            DMatrix::identity(dim, dim) * self.gibbs.sigma_new_scale
        };

        Ok(ModelConfig {
            alpha: self.gibbs.alpha,
            gamma: self.gibbs.gamma,
            tail,
            niw,
            sigma_new,
            sweeps: self.gibbs.sweeps,
            burn_in: self.gibbs.burn_in,
            init_clusters: self.gibbs.init_clusters,
            init_cov_scale: self.gibbs.init_cov_scale,
            small_cluster_frac: self.stream.small_cluster_frac,
            refit_per_point: self.gibbs.refit_per_point,
            tail_passes: self.stream.tail_passes,
            batch_fraction: self.stream.batch_fraction,
            finalize_every: self.stream.finalize_every,
            seed: self.seed,
        })
    }
}

/// Configuration bound to a dataset: hyperparameters materialized at the
/// data's dimension, ready for the samplers.
#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub alpha: f64,
    pub gamma: f64,
    pub tail: TailConfig,
    pub niw: NiwParams,
    pub sigma_new: DMatrix<f64>,
    pub sweeps: usize,
    pub burn_in: usize,
    pub init_clusters: usize,
    pub init_cov_scale: f64,
    pub small_cluster_frac: f64,
    pub refit_per_point: bool,
    pub tail_passes: usize,
    pub batch_fraction: f64,
    pub finalize_every: usize,
    pub seed: u64,
}
