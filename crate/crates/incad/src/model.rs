//! Mixture model state: cluster assignments, anomaly flags, and per-cluster
//! parameters with incrementally maintained sufficient statistics.
//!
//! The state obeys three invariants after every public operation: cluster
//! sizes sum to the number of attached points, cluster ids are contiguous
//! (no empty clusters survive), and every assignment references a live
//! cluster. A point may be temporarily detached between a `detach` and the
//! following `attach`/`spawn`; exactly the sampler does this, one point at
//! a time.

use nalgebra::DMatrix;

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::mvn::{MvnParams, NiwParams, Observation, SuffStats};
use crate::rng::RandomSource;
use crate::special::log_sum_exp;
use crate::tail::{effective_alpha, mixture_density_image, DensityImage};

/// One live mixture component.
#[derive(Debug, Clone)]
pub struct ClusterRecord {
    pub params: MvnParams,
    pub stats: SuffStats,
    /// Cluster-level anomaly label, derived from member flags during
    /// majority relabeling and small-cluster finalization.
    pub anomalous: bool,
}

impl ClusterRecord {
    pub fn size(&self) -> usize {
        self.stats.count()
    }
}

#[derive(Debug, Clone)]
pub struct ModelState {
    dim: usize,
    assignments: Vec<Option<usize>>,
    flags: Vec<bool>,
    clusters: Vec<ClusterRecord>,
}

impl ModelState {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            assignments: Vec::new(),
            flags: Vec::new(),
            clusters: Vec::new(),
        }
    }

    /// Rebuild a state from snapshot parts, validating the invariants.
    pub fn from_parts(
        dim: usize,
        assignments: Vec<usize>,
        flags: Vec<bool>,
        clusters: Vec<ClusterRecord>,
    ) -> Result<Self> {
        if flags.len() != assignments.len() {
            return Err(Error::Snapshot("flag/assignment length mismatch".into()));
        }
        let state = Self {
            dim,
            assignments: assignments.into_iter().map(Some).collect(),
            flags,
            clusters,
        };
        state.check_invariants()?;
        Ok(state)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points tracked by the state, attached or not.
    pub fn num_points(&self) -> usize {
        self.assignments.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[ClusterRecord] {
        &self.clusters
    }

    pub fn assignment(&self, i: usize) -> Option<usize> {
        self.assignments[i]
    }

    pub fn assignments(&self) -> &[Option<usize>] {
        &self.assignments
    }

    pub fn flag(&self, i: usize) -> bool {
        self.flags[i]
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn set_flag(&mut self, i: usize, value: bool) {
        self.flags[i] = value;
    }

    pub fn cluster_members(&self, k: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter_map(|(i, a)| (*a == Some(k)).then_some(i))
            .collect()
    }

    /// Track a new point with no assignment yet (flag starts false).
    pub fn push_unassigned(&mut self) -> usize {
        self.assignments.push(None);
        self.flags.push(false);
        self.assignments.len() - 1
    }

    /// Add an empty cluster shell; the caller must attach at least one point
    /// before the next invariant check.
    pub fn add_cluster(&mut self, params: MvnParams) -> usize {
        self.clusters.push(ClusterRecord {
            params,
            stats: SuffStats::empty(self.dim),
            anomalous: false,
        });
        self.clusters.len() - 1
    }

    pub fn attach(&mut self, i: usize, x: &Observation, k: usize) -> Result<()> {
        if self.assignments[i].is_some() {
            return Err(Error::invalid("attach", format!("point {i} is already attached")));
        }
        if k >= self.clusters.len() {
            return Err(Error::invalid("attach", format!("cluster {k} does not exist")));
        }
        self.clusters[k].stats.add(x);
        self.assignments[i] = Some(k);
        Ok(())
    }

    /// Remove point i from its cluster. A cluster left empty is deleted and
    /// the remaining ids are compacted, preserving relative order.
    pub fn detach(&mut self, i: usize, x: &Observation) -> Result<()> {
        let k = self.assignments[i]
            .take()
            .ok_or_else(|| Error::invalid("detach", format!("point {i} is already detached")))?;
        self.clusters[k].stats.remove(x)?;
        if self.clusters[k].size() == 0 {
            self.clusters.remove(k);
            for z in self.assignments.iter_mut().flatten() {
                if *z > k {
                    *z -= 1;
                }
            }
        }
        Ok(())
    }

    /// Start a fresh cluster holding point i, centered at the point with the
    /// predefined new-cluster covariance. The covariance is used verbatim
    /// until the next parameter resampling pass.
    pub fn spawn(&mut self, i: usize, x: &Observation, sigma_new: &DMatrix<f64>) -> Result<usize> {
        let params = MvnParams::new(x.coords().clone(), sigma_new.clone())?;
        let k = self.add_cluster(params);
        self.attach(i, x, k)?;
        Ok(k)
    }

    /// Posterior assignment probabilities for a detached point: one entry
    /// per existing cluster plus a final new-cluster entry.
    ///
    /// Entry k is proportional to `n_k F(x|θ_k)`, the new-cluster entry to
    /// `α' ∫F(x|θ)G0(θ)dθ`, where α' is the base concentration for a
    /// normal-flagged point and the effective (tail-boosted) one for an
    /// anomaly-flagged point. The common CRP denominator cancels in the
    /// normalization. The result sums to one.
    pub fn assignment_distribution(
        &self,
        x: &Observation,
        p: f64,
        in_tail: bool,
        flag: bool,
        cfg: &ModelConfig,
    ) -> Result<Vec<f64>> {
        let alpha_prime = if flag {
            effective_alpha(p, &cfg.tail, in_tail)?
        } else {
            cfg.alpha
        };
        let mut log_weights = Vec::with_capacity(self.clusters.len() + 1);
        for cluster in &self.clusters {
            log_weights.push((cluster.size() as f64).ln() + cluster.params.logpdf(x)?);
        }
        let new_cluster = if alpha_prime > 0.0 {
            alpha_prime.ln() + cfg.niw.log_predictive(x)?
        } else {
            f64::NEG_INFINITY
        };
        log_weights.push(new_cluster);

        let norm = log_sum_exp(&log_weights);
        Ok(log_weights.iter().map(|lw| (lw - norm).exp()).collect())
    }

    /// Redraw every cluster's parameters from the conjugate posterior given
    /// its current members. Anomalous and normal clusters share the same
    /// base distribution.
    pub fn resample_cluster_params(
        &mut self,
        niw: &NiwParams,
        rng: &mut RandomSource,
    ) -> Result<()> {
        for cluster in &mut self.clusters {
            let posterior = niw.posterior(&cluster.stats)?;
            cluster.params = posterior.sample(rng)?;
        }
        Ok(())
    }

    /// Posterior probability that a point is anomalous (Bayes over the two
    /// flag values, mixing over assignments):
    ///
    /// ```text
    /// S1 = γ     [ Σ_k n_k F(x|θ_k)/(n+α*−1) + α* m(x)/(n+α*−1) ]
    /// S0 = (1−γ) [ Σ_k n_k F(x|θ_k)/(n+α−1)  + α  m(x)/(n+α−1)  ]
    /// ```
    ///
    /// returning S1/(S1+S0), with m the prior predictive.
    pub fn anomaly_flag_posterior(
        &self,
        x: &Observation,
        p: f64,
        in_tail: bool,
        cfg: &ModelConfig,
    ) -> Result<f64> {
        if cfg.gamma <= 0.0 {
            return Ok(0.0);
        }
        if cfg.gamma >= 1.0 {
            return Ok(1.0);
        }
        let alpha_star = effective_alpha(p, &cfg.tail, in_tail)?;
        let n = self.num_points() as f64;
        let predictive = cfg.niw.log_predictive(x)?;

        let log_side = |alpha: f64| -> Result<f64> {
            let denom = (n + alpha - 1.0).ln();
            let mut terms = Vec::with_capacity(self.clusters.len() + 1);
            for cluster in &self.clusters {
                terms.push((cluster.size() as f64).ln() + cluster.params.logpdf(x)? - denom);
            }
            terms.push(alpha.ln() + predictive - denom);
            Ok(log_sum_exp(&terms))
        };

        let log_s1 = cfg.gamma.ln() + log_side(alpha_star)?;
        let log_s0 = (1.0 - cfg.gamma).ln() + log_side(cfg.alpha)?;
        Ok(1.0 / (1.0 + (log_s0 - log_s1).exp()))
    }

    /// Apply the cluster-level anomaly rule: any cluster in which a strict
    /// majority of members carry the anomaly flag has the flag set on all
    /// members. Ties leave flags unchanged. Idempotent; member flags are
    /// only ever set, while the cluster-level label tracks the current
    /// majority in both directions.
    pub fn majority_relabel(&mut self) {
        let mut size = vec![0usize; self.clusters.len()];
        let mut flagged = vec![0usize; self.clusters.len()];
        for (a, f) in self.assignments.iter().zip(&self.flags) {
            if let Some(k) = a {
                size[*k] += 1;
                if *f {
                    flagged[*k] += 1;
                }
            }
        }
        for (k, cluster) in self.clusters.iter_mut().enumerate() {
            cluster.anomalous = 2 * flagged[k] > size[k];
        }
        for (a, f) in self.assignments.iter().zip(self.flags.iter_mut()) {
            if let Some(k) = a {
                if 2 * flagged[*k] > size[*k] {
                    *f = true;
                }
            }
        }
    }

    /// Set the anomaly flag on every member of cluster k and mark the
    /// cluster anomalous. Never clears flags.
    pub fn flag_cluster(&mut self, k: usize) {
        for (a, f) in self.assignments.iter().zip(self.flags.iter_mut()) {
            if *a == Some(k) {
                *f = true;
            }
        }
        self.clusters[k].anomalous = true;
    }

    /// Small-cluster rule: every cluster holding at most `frac` of the
    /// points has all members flagged anomalous. Boundary inclusive,
    /// idempotent, flag-monotone.
    pub fn apply_small_cluster_rule(&mut self, frac: f64) {
        let limit = frac * self.num_points() as f64 + 1e-9;
        let small: Vec<usize> = self
            .clusters
            .iter()
            .enumerate()
            .filter_map(|(k, c)| (c.size() as f64 <= limit).then_some(k))
            .collect();
        for k in small {
            self.flag_cluster(k);
        }
    }

    /// Mixture density image over `data` with per-cluster weights n_k / N.
    pub fn density_image(&self, data: &[Observation], q: f64) -> Result<DensityImage> {
        let total: usize = self.clusters.iter().map(|c| c.size()).sum();
        if total == 0 || self.clusters.is_empty() {
            return Err(Error::EmptyData("density image requires a populated model"));
        }
        let components: Vec<(f64, &MvnParams)> = self
            .clusters
            .iter()
            .map(|c| (c.size() as f64 / total as f64, &c.params))
            .collect();
        mixture_density_image(&components, data, q)
    }

    /// Mixture log-density of a single point under the current state.
    pub fn mixture_log_density(&self, x: &Observation) -> Result<f64> {
        let total: usize = self.clusters.iter().map(|c| c.size()).sum();
        if total == 0 {
            return Err(Error::EmptyData("mixture density requires a populated model"));
        }
        let mut terms = Vec::with_capacity(self.clusters.len());
        for c in &self.clusters {
            terms.push((c.size() as f64 / total as f64).ln() + c.params.logpdf(x)?);
        }
        Ok(log_sum_exp(&terms))
    }

    /// Verify the structural invariants; used by tests and after restores.
    pub fn check_invariants(&self) -> Result<()> {
        let attached = self.assignments.iter().filter(|a| a.is_some()).count();
        let total: usize = self.clusters.iter().map(|c| c.size()).sum();
        if attached != total {
            return Err(Error::Snapshot(format!(
                "cluster sizes sum to {total} but {attached} points are attached"
            )));
        }
        if self.flags.len() != self.assignments.len() {
            return Err(Error::Snapshot("flag vector length mismatch".into()));
        }
        let mut seen = vec![0usize; self.clusters.len()];
        for k in self.assignments.iter().flatten() {
            if *k >= self.clusters.len() {
                return Err(Error::Snapshot(format!("assignment references dead cluster {k}")));
            }
            seen[*k] += 1;
        }
        for (k, cluster) in self.clusters.iter().enumerate() {
            if cluster.size() == 0 {
                return Err(Error::Snapshot(format!("cluster {k} is empty")));
            }
            if seen[k] != cluster.size() {
                return Err(Error::Snapshot(format!(
                    "cluster {k} stats count {} does not match membership {}",
                    cluster.size(),
                    seen[k]
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use nalgebra::DVector;

    fn obs(v: &[f64]) -> Observation {
        Observation::new(v.to_vec()).unwrap()
    }

    fn test_cfg(dim: usize) -> ModelConfig {
        Config::default()
            .materialize(dim, &DMatrix::identity(dim, dim))
            .unwrap()
    }

    fn simple_state(points: &[Observation], cfg: &ModelConfig) -> ModelState {
        let mut state = ModelState::new(points[0].dim());
        let params = MvnParams::new(
            DVector::zeros(points[0].dim()),
            DMatrix::identity(points[0].dim(), points[0].dim()),
        )
        .unwrap();
        state.add_cluster(params);
        for (i, x) in points.iter().enumerate() {
            state.push_unassigned();
            state.attach(i, x, 0).unwrap();
        }
        let _ = cfg;
        state
    }

    #[test]
    fn detach_singleton_removes_cluster_and_compacts_ids() {
        let cfg = test_cfg(1);
        let pts = [obs(&[0.0]), obs(&[10.0])];
        let mut state = ModelState::new(1);
        state.push_unassigned();
        state.push_unassigned();
        state.spawn(0, &pts[0], &cfg.sigma_new).unwrap();
        state.spawn(1, &pts[1], &cfg.sigma_new).unwrap();
        assert_eq!(state.num_clusters(), 2);

        state.detach(0, &pts[0]).unwrap();
        assert_eq!(state.num_clusters(), 1);
        // The surviving cluster's id compacted from 1 to 0.
        assert_eq!(state.assignment(1), Some(0));
        state.attach(0, &pts[0], 0).unwrap();
        state.check_invariants().unwrap();
    }

    #[test]
    fn detach_then_reattach_restores_partition() {
        let cfg = test_cfg(1);
        let pts = [obs(&[0.0]), obs(&[0.1]), obs(&[5.0])];
        let mut state = simple_state(&pts, &cfg);
        let before_sizes: Vec<usize> = state.clusters().iter().map(|c| c.size()).collect();

        state.detach(1, &pts[1]).unwrap();
        state.attach(1, &pts[1], 0).unwrap();
        let after_sizes: Vec<usize> = state.clusters().iter().map(|c| c.size()).collect();
        assert_eq!(before_sizes, after_sizes);
        assert_eq!(state.assignment(1), Some(0));
        state.check_invariants().unwrap();
    }

    #[test]
    fn detach_recomputes_stats_exactly() {
        let cfg = test_cfg(2);
        let pts = [obs(&[1.0, 2.0]), obs(&[3.0, -1.0]), obs(&[0.5, 0.5])];
        let mut state = simple_state(&pts, &cfg);
        state.detach(2, &pts[2]).unwrap();

        let expected = SuffStats::from_points(2, pts[..2].iter());
        let got = &state.clusters()[0].stats;
        assert_eq!(got.count(), 2);
        assert!((got.sum() - expected.sum()).amax() <= 1e-12);
        assert!((got.sum_outer() - expected.sum_outer()).amax() <= 1e-12);
    }

    #[test]
    fn spawn_centers_cluster_at_point() {
        let cfg = test_cfg(2);
        let mut state = ModelState::new(2);
        state.push_unassigned();
        let x = obs(&[3.0, -4.0]);
        state.spawn(0, &x, &cfg.sigma_new).unwrap();
        assert_eq!(state.num_clusters(), 1);
        assert_eq!(state.assignment(0), Some(0));

        let params = &state.clusters()[0].params;
        // Covariance is the configured matrix, verbatim.
        assert_eq!(params.covariance(), &cfg.sigma_new);
        // Density is maximal at the spawn point.
        let at_mode = params.logpdf(&x).unwrap();
        assert!(params.logpdf(&obs(&[3.5, -4.0])).unwrap() < at_mode);
        state.check_invariants().unwrap();
    }

    #[test]
    fn assignment_distribution_sums_to_one() {
        let cfg = test_cfg(1);
        let pts = [obs(&[0.0]), obs(&[0.2]), obs(&[8.0])];
        let mut state = simple_state(&pts, &cfg);
        state.push_unassigned();
        let x = obs(&[1.0]);
        let probs = state.assignment_distribution(&x, 0.0, false, false, &cfg).unwrap();
        assert_eq!(probs.len(), state.num_clusters() + 1);
        let total: f64 = probs.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12, "sum {total}");
    }

    #[test]
    fn identical_clusters_get_identical_probabilities() {
        let cfg = test_cfg(1);
        let params = MvnParams::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        let mut state = ModelState::new(1);
        state.add_cluster(params.clone());
        state.add_cluster(params);
        let pts = [obs(&[0.1]), obs(&[-0.1]), obs(&[0.2]), obs(&[-0.2])];
        for (i, x) in pts.iter().enumerate() {
            state.push_unassigned();
            state.attach(i, x, i % 2).unwrap();
        }
        state.push_unassigned();
        let probs = state
            .assignment_distribution(&obs(&[0.0]), 0.0, false, false, &cfg)
            .unwrap();
        assert!((probs[0] - probs[1]).abs() <= 1e-12);
    }

    #[test]
    fn vanishing_concentration_kills_new_cluster_probability() {
        let mut cfg = test_cfg(1);
        cfg.alpha = 1e-300;
        let pts = [obs(&[0.0]), obs(&[0.1])];
        let mut state = simple_state(&pts, &cfg);
        state.push_unassigned();
        let probs = state
            .assignment_distribution(&obs(&[0.05]), 0.0, false, false, &cfg)
            .unwrap();
        assert!(probs[probs.len() - 1] < 1e-200);
    }

    #[test]
    fn flag_posterior_degenerate_priors() {
        let pts = [obs(&[0.0]), obs(&[0.5])];
        let mut cfg = test_cfg(1);
        let state = simple_state(&pts, &cfg);

        cfg.gamma = 0.0;
        assert_eq!(
            state.anomaly_flag_posterior(&obs(&[0.1]), 0.0, false, &cfg).unwrap(),
            0.0
        );
        cfg.gamma = 1.0;
        assert_eq!(
            state.anomaly_flag_posterior(&obs(&[0.1]), 0.0, false, &cfg).unwrap(),
            1.0
        );
    }

    #[test]
    fn flag_posterior_balanced_when_alphas_match() {
        // With alpha* = alpha (p=0, not in tail) and gamma = 1/2 the two
        // sides are algebraically identical, so the posterior is exactly 1/2.
        let pts = [obs(&[0.0]), obs(&[0.5]), obs(&[-0.3])];
        let mut cfg = test_cfg(1);
        cfg.gamma = 0.5;
        let state = simple_state(&pts, &cfg);
        let p = state.anomaly_flag_posterior(&obs(&[0.2]), 0.0, false, &cfg).unwrap();
        assert!((p - 0.5).abs() <= 1e-12);
    }

    #[test]
    fn majority_relabel_rules() {
        let cfg = test_cfg(1);
        let pts: Vec<Observation> = (0..9).map(|i| obs(&[i as f64 * 0.01])).collect();
        let mut state = ModelState::new(1);
        let params = MvnParams::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        state.add_cluster(params.clone());
        state.add_cluster(params);
        // Cluster 0: 5 members, 3 flagged. Cluster 1: 4 members, 2 flagged.
        for (i, x) in pts.iter().enumerate() {
            state.push_unassigned();
            state.attach(i, x, if i < 5 { 0 } else { 1 }).unwrap();
        }
        for i in [0, 1, 2, 5, 6] {
            state.set_flag(i, true);
        }
        state.majority_relabel();
        // Strict majority in cluster 0: everyone flagged.
        assert!(state.cluster_members(0).iter().all(|&i| state.flag(i)));
        assert!(state.clusters()[0].anomalous);
        // Tie in cluster 1: unchanged.
        assert_eq!(
            state.cluster_members(1).iter().filter(|&&i| state.flag(i)).count(),
            2
        );
        assert!(!state.clusters()[1].anomalous);

        // Idempotence.
        let flags_before: Vec<bool> = state.flags().to_vec();
        state.majority_relabel();
        assert_eq!(state.flags(), flags_before.as_slice());
        let _ = cfg;
    }

    #[test]
    fn majority_relabel_keeps_flagged_singleton() {
        let cfg = test_cfg(1);
        let x = obs(&[0.0]);
        let mut state = ModelState::new(1);
        state.push_unassigned();
        state.spawn(0, &x, &cfg.sigma_new).unwrap();
        state.set_flag(0, true);
        state.majority_relabel();
        assert!(state.flag(0));
        assert!(state.clusters()[0].anomalous);
    }

    #[test]
    fn resample_is_deterministic_and_concentrates() {
        let cfg = test_cfg(2);
        let mut rng = RandomSource::from_seed(3);
        let pts: Vec<Observation> = (0..1000)
            .map(|_| {
                obs(&[
                    5.0 + 0.01 * rng.standard_normal(),
                    5.0 + 0.01 * rng.standard_normal(),
                ])
            })
            .collect();
        let mut state = simple_state(&pts, &cfg);
        let mut r1 = RandomSource::from_seed(42);
        state.resample_cluster_params(&cfg.niw, &mut r1).unwrap();
        let mean_a = state.clusters()[0].params.mean().clone();

        let mut state2 = simple_state(&pts, &cfg);
        let mut r2 = RandomSource::from_seed(42);
        state2.resample_cluster_params(&cfg.niw, &mut r2).unwrap();
        assert_eq!(&mean_a, state2.clusters()[0].params.mean());

        // Posterior mean pulled to the data: kappa0=1 against n=1000.
        assert!((mean_a[0] - 5.0).abs() < 0.1);
        assert!((mean_a[1] - 5.0).abs() < 0.1);
    }

    #[test]
    fn weak_prior_tracks_sample_mean() {
        let mut niw = None;
        let pts: Vec<Observation> = (0..50).map(|i| obs(&[2.0 + (i % 5) as f64 * 0.1])).collect();
        let stats = SuffStats::from_points(1, pts.iter());
        let prior = NiwParams::new(
            DVector::zeros(1),
            1e-6,
            3.0,
            DMatrix::identity(1, 1),
        )
        .unwrap();
        niw.replace(prior.posterior(&stats).unwrap());
        let posterior = niw.unwrap();
        let sample_mean = stats.mean().unwrap()[0];
        assert!((posterior.mu0()[0] - sample_mean).abs() < 1e-6);
    }
}
