//! Simultaneous nonparametric clustering and anomaly detection.
//!
//! A Dirichlet-process mixture with a modified Chinese-restaurant-process
//! prior is coupled to an extreme-value tail model on the mixture-density
//! image: points whose density falls in the lower tail receive a
//! probability of being anomalous from a generalized Pareto fit, and that
//! probability boosts their concentration parameter, nudging them into
//! their own clusters. Clustering and anomaly classification are inferred
//! together by a pseudo-Gibbs sampler, in batch or streaming mode.
//!
//! Entry points:
//!
//! - [`gibbs::run_batch_gibbs`] — batch inference over a dataset.
//! - [`stream::batch_init`] / [`stream::stream_update`] — the streaming
//!   extension: initialize on a prefix, fold in points one at a time,
//!   re-evaluating only the density tail.
//! - [`harness`] — the file-based commands behind the `incad` binary.
//!
//! The `examples/` directory has one runnable program per capability; start
//! with `batch_clustering` and `streaming_updates`.

pub mod config;
pub mod data;
pub mod error;
pub mod gibbs;
pub mod harness;
pub mod metrics;
pub mod model;
pub mod mvn;
pub mod rng;
pub mod snapshot;
pub mod special;
pub mod stream;
pub mod tail;

pub use config::{Config, ModelConfig};
pub use data::{LabeledDataset, Phase, ResultRecord, SyntheticConfig};
pub use error::{Error, Result};
pub use metrics::{compute_metrics, Metrics};
pub use model::{ClusterRecord, ModelState};
pub use mvn::{MvnParams, NiwParams, Observation, SuffStats};
pub use rng::RandomSource;
pub use stream::StreamState;
pub use tail::{DensityImage, GpdTailFit, TailConfig, TailModel};
