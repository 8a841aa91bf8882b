//! Quadrature and Monte-Carlo oracles for the conjugate machinery.

mod common;

use common::{
    assert_close, log_predictive_quadrature, log_predictive_quadrature_2d, simpson_log_integral,
};
use incad::mvn::{MvnParams, NiwParams, Observation, SuffStats};
use incad::rng::RandomSource;
use nalgebra::{DMatrix, DVector};

fn obs(v: &[f64]) -> Observation {
    Observation::new(v.to_vec()).unwrap()
}

fn niw_1d(mu0: f64, kappa0: f64, nu0: f64, psi: f64) -> NiwParams {
    NiwParams::new(
        DVector::from_vec(vec![mu0]),
        kappa0,
        nu0,
        DMatrix::from_vec(1, 1, vec![psi]),
    )
    .unwrap()
}

#[test]
fn logpdf_matches_quadrature_normalized_gaussian() {
    // Oracle: the density at x is exp(-(x-m)^2 / 2s2) divided by a
    // normalizing constant computed by quadrature, sharing nothing with the
    // closed form.
    let mean = 0.0;
    let var = 4.0;
    let params = MvnParams::new(
        DVector::from_vec(vec![mean]),
        DMatrix::from_vec(1, 1, vec![var]),
    )
    .unwrap();
    let x = 2.0;
    let log_unnorm = |t: f64| -0.5 * (t - mean) * (t - mean) / var;
    let log_z = simpson_log_integral(log_unnorm, mean - 60.0, mean + 60.0, 20_000);
    let oracle = log_unnorm(x) - log_z;
    let got = params.logpdf(&obs(&[x])).unwrap();
    assert_close(got, oracle, 1e-10);
}

#[test]
fn log_predictive_matches_quadrature_at_mode_and_off_mode() {
    let prior = niw_1d(0.0, 1.0, 3.0, 1.0);
    for x in [0.0, 0.5, 1.5, 4.0] {
        let got = prior.log_predictive(&obs(&[x])).unwrap();
        let oracle = log_predictive_quadrature(x, 0.0, 1.0, 3.0, 1.0);
        assert_close(got, oracle, 1e-6);
    }
}

#[test]
fn log_predictive_matches_quadrature_on_varied_configs() {
    let configs = [
        (0.0, 1.0, 3.0, 1.0, 0.7),
        (2.0, 0.5, 2.5, 0.8, 3.1),
        (-1.0, 4.0, 6.0, 2.0, -2.5),
        (0.3, 0.2, 1.5, 0.4, 0.0),
        (5.0, 2.0, 9.0, 3.5, 4.0),
    ];
    for (mu0, kappa0, nu0, psi, x) in configs {
        let prior = niw_1d(mu0, kappa0, nu0, psi);
        let got = prior.log_predictive(&obs(&[x])).unwrap();
        let oracle = log_predictive_quadrature(x, mu0, kappa0, nu0, psi);
        assert_close(got, oracle, 1e-6);
    }
}

#[test]
fn one_dimensional_reduction_agrees_with_full_2d_quadrature() {
    // Validates the oracle itself: integrating the mean explicitly gives
    // the same marginal as the Gaussian-convolution reduction.
    let (mu0, kappa0, nu0, psi, x) = (0.5, 1.5, 4.0, 1.2, 1.7);
    let reduced = log_predictive_quadrature(x, mu0, kappa0, nu0, psi);
    let full = log_predictive_quadrature_2d(x, mu0, kappa0, nu0, psi);
    assert_close(full, reduced, 1e-4);
}

#[test]
fn predictive_density_integrates_to_one() {
    let prior = niw_1d(0.0, 1.0, 4.0, 1.5);
    let log_f = |x: f64| prior.log_predictive(&obs(&[x])).unwrap();
    // Student-t with df = 4: wide but integrable tails; +-300 covers the
    // mass to well past 1e-6.
    let log_total = simpson_log_integral(log_f, -300.0, 300.0, 60_000);
    assert_close(log_total.exp(), 1.0, 1e-4);
}

#[test]
fn sampled_means_average_to_mu0() {
    let prior = NiwParams::new(
        DVector::from_vec(vec![1.0, -2.0]),
        2.0,
        6.0,
        DMatrix::identity(2, 2),
    )
    .unwrap();
    let mut rng = RandomSource::from_seed(100);
    let draws = 10_000;
    let mut sum = [0.0, 0.0];
    let mut sq = [0.0, 0.0];
    for _ in 0..draws {
        let p = prior.sample(&mut rng).unwrap();
        for c in 0..2 {
            sum[c] += p.mean()[c];
            sq[c] += p.mean()[c] * p.mean()[c];
        }
    }
    for c in 0..2 {
        let mean = sum[c] / draws as f64;
        let var = sq[c] / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        let target = prior.mu0()[c];
        assert!(
            (mean - target).abs() <= 3.0 * se,
            "component {c}: {mean} vs {target} (3se = {})",
            3.0 * se
        );
    }
}

#[test]
fn posterior_samples_concentrate_on_posterior_mean() {
    // Fold data, then check that draws from the posterior average to its
    // analytic mean within Monte-Carlo error.
    let prior = niw_1d(0.0, 1.0, 3.0, 1.0);
    let mut stats = SuffStats::empty(1);
    let mut gen = RandomSource::from_seed(8);
    for _ in 0..50 {
        stats.add(&obs(&[3.0 + 0.5 * gen.standard_normal()]));
    }
    let posterior = prior.posterior(&stats).unwrap();
    let analytic_mean = posterior.mu0()[0];

    let mut rng = RandomSource::from_seed(9);
    let draws = 10_000;
    let mut sum = 0.0;
    let mut sq = 0.0;
    for _ in 0..draws {
        let p = posterior.sample(&mut rng).unwrap();
        sum += p.mean()[0];
        sq += p.mean()[0] * p.mean()[0];
    }
    let mean = sum / draws as f64;
    let var = sq / draws as f64 - mean * mean;
    let se = (var / draws as f64).sqrt();
    assert!(
        (mean - analytic_mean).abs() <= 3.0 * se,
        "{mean} vs {analytic_mean} (3se = {})",
        3.0 * se
    );
}

#[test]
fn posterior_matches_incremental_folding() {
    // Folding points one at a time through intermediate posteriors gives
    // the same result as one batched update.
    let prior = niw_1d(0.5, 2.0, 4.0, 1.2);
    let points = [0.3, -1.2, 2.2, 0.9, -0.4];

    let batched = prior
        .posterior(&SuffStats::from_points(
            1,
            points.iter().map(|v| obs(&[*v])).collect::<Vec<_>>().iter(),
        ))
        .unwrap();

    let mut incremental = prior.clone();
    for v in points {
        let mut one = SuffStats::empty(1);
        one.add(&obs(&[v]));
        incremental = incremental.posterior(&one).unwrap();
    }

    assert_close(batched.mu0()[0], incremental.mu0()[0], 1e-9);
    assert_close(batched.kappa0(), incremental.kappa0(), 1e-9);
    assert_close(batched.nu0(), incremental.nu0(), 1e-9);
    assert_close(batched.psi()[(0, 0)], incremental.psi()[(0, 0)], 1e-9);
}
