//! Shared oracle helpers for integration tests.
//!
//! Everything here is deliberately independent of the crate's own numeric
//! paths: a Stirling-series log-gamma (the crate uses Lanczos), a Simpson
//! integrator working on log-integrands, and an inverse-CDF GPD sampler.

#![allow(dead_code)]

pub fn assert_close(actual: f64, expected: f64, tol: f64) {
    assert!(
        (actual - expected).abs() <= tol,
        "expected {expected}, got {actual} (|diff| = {})",
        (actual - expected).abs()
    );
}

/// Stirling-series log-gamma with argument shift, accurate to ~1e-12 for
/// z > 0. Independent of the Lanczos implementation inside the crate.
pub fn ln_gamma_stirling(z: f64) -> f64 {
    assert!(z > 0.0);
    // Shift until the asymptotic series is accurate, then undo.
    let mut shift = 0.0;
    let mut x = z;
    while x < 12.0 {
        shift -= x.ln();
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv / 12.0 - inv * inv2 / 360.0 + inv * inv2 * inv2 / 1260.0
        - inv * inv2 * inv2 * inv2 / 1680.0;
    let half_log_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
    shift + (x - 0.5) * x.ln() - x + half_log_2pi + series
}

/// log of the integral of exp(log_f) over [lo, hi] using composite Simpson
/// with `n` intervals (n even), stabilized by a max shift.
pub fn simpson_log_integral(log_f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2 && n.is_multiple_of(2));
    let h = (hi - lo) / n as f64;
    let mut logs = Vec::with_capacity(n + 1);
    let mut weights = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let x = lo + i as f64 * h;
        logs.push(log_f(x));
        weights.push(if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        });
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = logs
        .iter()
        .zip(&weights)
        .map(|(l, w)| w * (l - m).exp())
        .sum();
    m + (sum * h / 3.0).ln()
}

/// log-density of InverseGamma(shape a, scale b) at v, using the Stirling
/// log-gamma.
pub fn log_inv_gamma_pdf(v: f64, a: f64, b: f64) -> f64 {
    if v <= 0.0 {
        return f64::NEG_INFINITY;
    }
    a * b.ln() - ln_gamma_stirling(a) - (a + 1.0) * v.ln() - b / v
}

/// log-density of N(x; mean, var).
pub fn log_normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + d * d / var)
}

/// Quadrature oracle for the marginal density of one observation under a
/// 1-D Normal-Inverse-Wishart base distribution with hyperparameters
/// (mu0, kappa0, nu0, psi).
///
/// The mean integrates out in closed form (a Gaussian convolution), leaving
/// a one-dimensional integral over the variance, evaluated on a log grid:
///
/// ```text
/// m(x) = ∫ N(x; mu0, v (k0+1)/k0) InvGamma(v; nu0/2, psi/2) dv
/// ```
pub fn log_predictive_quadrature(x: f64, mu0: f64, kappa0: f64, nu0: f64, psi: f64) -> f64 {
    let a = 0.5 * nu0;
    let b = 0.5 * psi;
    let scale = (kappa0 + 1.0) / kappa0;
    let log_f = |s: f64| {
        let v = s.exp();
        log_normal_pdf(x, mu0, v * scale) + log_inv_gamma_pdf(v, a, b) + s
    };
    let center = b.ln();
    simpson_log_integral(log_f, center - 45.0, center + 90.0, 40_000)
}

/// Brute-force 2-D quadrature of the same marginal, integrating the mean
/// explicitly. Slow; used once to validate the 1-D reduction.
pub fn log_predictive_quadrature_2d(x: f64, mu0: f64, kappa0: f64, nu0: f64, psi: f64) -> f64 {
    let a = 0.5 * nu0;
    let b = 0.5 * psi;
    // Outer integral over s = ln v, inner over the mean.
    let log_f = |s: f64| {
        let v = s.exp();
        let mu_sd = (v / kappa0).sqrt();
        let inner = simpson_log_integral(
            |mu| log_normal_pdf(x, mu, v) + log_normal_pdf(mu, mu0, v / kappa0),
            mu0 - 12.0 * mu_sd.max(x.abs() * 0.5 + 1.0),
            mu0 + 12.0 * mu_sd.max(x.abs() * 0.5 + 1.0),
            2_000,
        );
        inner + log_inv_gamma_pdf(v, a, b) + s
    };
    let center = b.ln();
    simpson_log_integral(log_f, center - 30.0, center + 50.0, 1_200)
}

/// Inverse-CDF draw from GPD(shape xi, scale beta) given u in (0,1).
pub fn gpd_quantile(u: f64, xi: f64, beta: f64) -> f64 {
    if xi.abs() < 1e-12 {
        -beta * (1.0 - u).ln()
    } else {
        beta / xi * ((1.0 - u).powf(-xi) - 1.0)
    }
}
