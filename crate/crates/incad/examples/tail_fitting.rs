//! Tail modeling on the mixture-density image: evaluate densities, fit the
//! generalized Pareto lower tail, and convert low densities into anomaly
//! probabilities and boosted concentration parameters.
//!
//! ```bash
//! cargo run --example tail_fitting
//! ```

use incad::mvn::{MvnParams, Observation};
use incad::tail::{effective_alpha, mixture_density_image, TailConfig, TailModel};
use incad::RandomSource;
use nalgebra::{DMatrix, DVector};

fn main() -> incad::Result<()> {
    // A two-component mixture plus a few outliers.
    let a = MvnParams::new(DVector::from_vec(vec![-2.0, 0.0]), DMatrix::identity(2, 2) * 0.2)?;
    let b = MvnParams::new(DVector::from_vec(vec![2.0, 0.0]), DMatrix::identity(2, 2) * 0.2)?;

    let mut rng = RandomSource::from_seed(5);
    let mut data = Vec::new();
    for i in 0..600 {
        let center = if i % 2 == 0 { -2.0 } else { 2.0 };
        data.push(Observation::new(vec![
            center + 0.45 * rng.standard_normal(),
            0.45 * rng.standard_normal(),
        ])?);
    }
    for _ in 0..12 {
        data.push(Observation::new(vec![
            6.0 * rng.standard_normal(),
            4.0 + 2.0 * rng.standard_normal(),
        ])?);
    }

    let image = mixture_density_image(&[(0.5, &a), (0.5, &b)], &data, 0.05)?;
    println!(
        "density threshold t1 = {:.6} ({} of {} points in the tail)",
        image.threshold,
        image.tail_indices().len(),
        image.len()
    );

    let tail = TailModel::build(image);
    let fit = tail.fit.expect("enough tail points for a fit");
    println!(
        "GPD fit on the lower tail: shape {:.3}, scale {:.5}",
        fit.shape, fit.scale
    );

    let cfg = TailConfig::new(0.05, incad::tail::default_ev_prop(), 1.0, 100.0)?;
    println!("\n point                      density    p(anomalous)  effective alpha");
    for &i in tail.image.tail_indices().iter().rev().take(6) {
        let p = tail.probability(i);
        let alpha = effective_alpha(p, &cfg, true)?;
        let coords = data[i].to_vec();
        println!(
            " ({:7.2}, {:7.2})   {:12.6}      {:8.4}      {:10.2}",
            coords[0],
            coords[1],
            tail.image.density(i),
            p,
            alpha
        );
    }
    println!("\npoints outside the tail keep p = 0 and the base alpha = 1");
    Ok(())
}
