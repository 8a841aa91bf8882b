//! Streaming extension: initialize on a batch prefix, then fold in one
//! point at a time, re-evaluating only the density tail.
//!
//! Each update appends the new point (greedy provisional assignment),
//! recomputes the mixture proportions and density image over everything
//! seen so far, refits the tail, and re-runs the sampler steps for every
//! buffered point whose density falls below the tail threshold. Points
//! outside the tail are never touched, which is what makes an update cheap
//! and the model order-sensitive: the same data in a different order may
//! legitimately settle elsewhere.
//!
//! The final small-cluster rule marks every cluster holding at most
//! `small_cluster_frac` of the data as anomalous.

use crate::config::ModelConfig;
use crate::error::{Error, Result};
use crate::gibbs::{build_tail_model, init_state, gibbs_sweep, reassign_point};
use crate::model::ModelState;
use crate::mvn::Observation;
use crate::rng::RandomSource;
use crate::tail::default_ev_prop;

/// Smallest batch prefix accepted for initialization.
pub const MIN_BATCH_POINTS: usize = 30;

#[derive(Debug, Clone)]
pub struct StreamState {
    pub model: ModelState,
    /// Every observation seen so far, in arrival order. Nothing is dropped.
    pub buffer: Vec<Observation>,
    pub config: ModelConfig,
    pub update_count: usize,
}

/// Batch-initialize on a prefix: the configured number of full sweeps on
/// the prefix, after which the blend weight is pinned to e^{-1/2} for the
/// streaming phase.
pub fn batch_init(
    prefix: &[Observation],
    cfg: &ModelConfig,
    rng: &mut RandomSource,
) -> Result<StreamState> {
    if prefix.len() < MIN_BATCH_POINTS {
        return Err(Error::BatchTooSmall {
            minimum: MIN_BATCH_POINTS,
            have: prefix.len(),
        });
    }
    let mut model = init_state(prefix, cfg)?;
    for _ in 0..cfg.sweeps {
        gibbs_sweep(&mut model, prefix, cfg, rng)?;
    }
    let mut config = cfg.clone();
    config.tail.ev_prop = default_ev_prop();
    Ok(StreamState {
        model,
        buffer: prefix.to_vec(),
        config,
        update_count: 0,
    })
}

/// Fold one new observation into the model.
///
/// The point is first attached greedily (argmax of its assignment
/// distribution, flag 0). The density image and GPD fit are then rebuilt
/// over all buffered data, and every tail point is re-run through the
/// sampler steps: detach, reassign, resample parameters, redraw flag,
/// majority relabel. One pass by default (`tail_passes`).
pub fn stream_update(
    state: &mut StreamState,
    x_new: Observation,
    rng: &mut RandomSource,
) -> Result<()> {
    if x_new.dim() != state.model.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.model.dim(),
            got: x_new.dim(),
        });
    }
    let cfg = state.config.clone();

    let i_new = state.model.push_unassigned();
    state.buffer.push(x_new);
    reassign_point(
        &mut state.model,
        &state.buffer,
        i_new,
        0.0,
        false,
        &cfg,
        rng,
        true,
    )?;

    for _ in 0..cfg.tail_passes {
        let tail = build_tail_model(&state.model, &state.buffer, cfg.tail.q);
        // Every flag refreshes from Bernoulli(p): outside the tail p is
        // zero, so those flags decay to normal without the point being
        // re-evaluated. Only tail points go through reassignment.
        for i in 0..state.model.num_points() {
            if !tail.in_tail(i) {
                state.model.set_flag(i, false);
            }
        }
        let tail_points = tail.image.tail_indices();
        for i in tail_points {
            state.model.detach(i, &state.buffer[i])?;
            let p = tail.probability(i);
            reassign_point(&mut state.model, &state.buffer, i, p, true, &cfg, rng, false)?;
            state.model.resample_cluster_params(&cfg.niw, rng)?;
            let flag = rng.bernoulli(p);
            state.model.set_flag(i, flag);
        }
        state.model.majority_relabel();
    }

    state.update_count += 1;
    if cfg.finalize_every > 0 && state.update_count.is_multiple_of(cfg.finalize_every) {
        finalize_small_clusters(state);
    }
    Ok(())
}

/// Mark every cluster whose size is at most `small_cluster_frac × N` as
/// anomalous, flagging all its members. Inclusive at the boundary,
/// idempotent, and flag-monotone (never clears a flag).
pub fn finalize_small_clusters(state: &mut StreamState) {
    state.model.apply_small_cluster_rule(state.config.small_cluster_frac);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::mvn::MvnParams;
    use nalgebra::{DMatrix, DVector};

    fn obs(v: &[f64]) -> Observation {
        Observation::new(v.to_vec()).unwrap()
    }

    fn materialized(tweak: impl FnOnce(&mut Config)) -> ModelConfig {
        let mut cfg = Config::default();
        tweak(&mut cfg);
        cfg.materialize(1, &DMatrix::identity(1, 1)).unwrap()
    }

    fn two_band_data(n: usize) -> Vec<Observation> {
        let mut rng = RandomSource::from_seed(31);
        (0..n)
            .map(|i| {
                let c = if i % 2 == 0 { -3.0 } else { 3.0 };
                obs(&[c + 0.05 * rng.standard_normal()])
            })
            .collect()
    }

    #[test]
    fn batch_init_rejects_short_prefix() {
        let cfg = materialized(|c| {
            c.gibbs.sweeps = 2;
            c.gibbs.burn_in = 0;
        });
        let data = two_band_data(29);
        let err = batch_init(&data, &cfg, &mut RandomSource::from_seed(1)).unwrap_err();
        match err {
            Error::BatchTooSmall { minimum, have } => {
                assert_eq!(minimum, MIN_BATCH_POINTS);
                assert_eq!(have, 29);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn batch_init_pins_stream_blend_weight() {
        let cfg = materialized(|c| {
            c.gibbs.sweeps = 2;
            c.gibbs.burn_in = 0;
            c.tail.ev_prop = 0.0;
        });
        let data = two_band_data(40);
        let stream = batch_init(&data, &cfg, &mut RandomSource::from_seed(1)).unwrap();
        assert!((stream.config.tail.ev_prop - default_ev_prop()).abs() < 1e-15);
        assert_eq!(stream.buffer.len(), 40);
        stream.model.check_invariants().unwrap();
    }

    #[test]
    fn update_appends_exactly_one_point() {
        let cfg = materialized(|c| {
            c.gibbs.sweeps = 3;
            c.gibbs.burn_in = 0;
        });
        let data = two_band_data(40);
        let mut stream = batch_init(&data, &cfg, &mut RandomSource::from_seed(5)).unwrap();
        let mut rng = RandomSource::from_seed(6);
        for k in 0..10 {
            stream_update(&mut stream, obs(&[3.0 + 0.01 * k as f64]), &mut rng).unwrap();
            assert_eq!(stream.buffer.len(), 41 + k);
            assert_eq!(stream.model.num_points(), 41 + k);
            stream.model.check_invariants().unwrap();
        }
        assert_eq!(stream.update_count, 10);
    }

    #[test]
    fn high_density_insert_joins_largest_cluster_without_flag_churn() {
        // Below 41 points the widened fit threshold would cross the median,
        // so the tail fit defers, every p is zero, and an insert at a
        // cluster mode joins it without any flag changing.
        let cfg = materialized(|c| {
            c.gibbs.sweeps = 5;
            c.gibbs.burn_in = 0;
        });
        let data = two_band_data(34);
        let mut stream = batch_init(&data, &cfg, &mut RandomSource::from_seed(2)).unwrap();
        let flags_before = stream.model.flags().to_vec();
        let k_before = stream.model.num_clusters();

        let largest = (0..stream.model.num_clusters())
            .max_by_key(|&k| stream.model.clusters()[k].size())
            .unwrap();
        let mode = stream.model.clusters()[largest].params.mean()[0];

        let mut rng = RandomSource::from_seed(3);
        stream_update(&mut stream, obs(&[mode]), &mut rng).unwrap();
        let n = stream.model.num_points();
        assert_eq!(stream.model.num_clusters(), k_before);
        assert_eq!(stream.model.assignment(n - 1), Some(largest));
        assert_eq!(&stream.model.flags()[..n - 1], flags_before.as_slice());
    }

    #[test]
    fn finalize_small_clusters_boundary() {
        // 400 points: a 20-point cluster is flagged (20 <= 0.05*400), a
        // 21-point cluster is not.
        let cfg = materialized(|_| {});
        let mut model = ModelState::new(1);
        let params = MvnParams::new(DVector::zeros(1), DMatrix::identity(1, 1)).unwrap();
        for _ in 0..3 {
            model.add_cluster(params.clone());
        }
        let mut buffer = Vec::new();
        for i in 0..400 {
            let k = if i < 20 {
                0
            } else if i < 41 {
                1
            } else {
                2
            };
            let x = obs(&[i as f64]);
            model.push_unassigned();
            model.attach(i, &x, k).unwrap();
            buffer.push(x);
        }
        let mut stream = StreamState {
            model,
            buffer,
            config: cfg,
            update_count: 0,
        };
        finalize_small_clusters(&mut stream);
        assert!(stream.model.cluster_members(0).iter().all(|&i| stream.model.flag(i)));
        assert!(stream.model.clusters()[0].anomalous);
        assert!(stream.model.cluster_members(1).iter().all(|&i| !stream.model.flag(i)));

        // Idempotent and flag-monotone.
        let before = stream.model.flags().to_vec();
        finalize_small_clusters(&mut stream);
        assert_eq!(stream.model.flags(), before.as_slice());
    }
}
