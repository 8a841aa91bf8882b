//! The conjugate building blocks: fold data into sufficient statistics,
//! update a Normal-Inverse-Wishart prior, draw component parameters, and
//! evaluate the Student-t predictive density.
//!
//! ```bash
//! cargo run --example conjugate_basics
//! ```

use incad::mvn::{NiwParams, Observation, SuffStats};
use incad::RandomSource;
use nalgebra::{DMatrix, DVector};

fn main() -> incad::Result<()> {
    let prior = NiwParams::new(DVector::zeros(2), 1.0, 5.0, DMatrix::identity(2, 2) * 0.5)?;

    // Observations around (3, -1).
    let mut rng = RandomSource::from_seed(7);
    let mut stats = SuffStats::empty(2);
    for _ in 0..200 {
        let x = Observation::new(vec![
            3.0 + 0.3 * rng.standard_normal(),
            -1.0 + 0.3 * rng.standard_normal(),
        ])?;
        stats.add(&x);
    }

    let posterior = prior.posterior(&stats)?;
    println!(
        "posterior after {} points: mean ({:.3}, {:.3}), kappa {}, nu {}",
        stats.count(),
        posterior.mu0()[0],
        posterior.mu0()[1],
        posterior.kappa0(),
        posterior.nu0()
    );

    let draw = posterior.sample(&mut rng)?;
    println!(
        "one posterior draw: mean ({:.3}, {:.3}), var diag ({:.3}, {:.3})",
        draw.mean()[0],
        draw.mean()[1],
        draw.covariance()[(0, 0)],
        draw.covariance()[(1, 1)]
    );

    // The predictive is heavy-tailed relative to any single Gaussian draw.
    for coords in [[3.0, -1.0], [4.0, 0.0], [8.0, 4.0]] {
        let x = Observation::new(coords.to_vec())?;
        println!(
            "log predictive at {:?}: prior {:.3}, posterior {:.3}",
            coords,
            prior.log_predictive(&x)?,
            posterior.log_predictive(&x)?
        );
    }
    Ok(())
}
