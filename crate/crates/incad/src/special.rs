//! Small special-function kernel: log-gamma via the Lanczos approximation.

pub const LOG_2PI: f64 = 1.837_877_066_409_345_3;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFICIENTS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_7e-7,
];

/// Natural log of the gamma function for z > 0.
pub fn ln_gamma(z: f64) -> f64 {
    debug_assert!(z.is_finite() && z > 0.0, "ln_gamma requires z > 0");

    if z < 0.5 {
        // Reflection keeps the Lanczos argument in its accurate range.
        let sin_term = (std::f64::consts::PI * z).sin();
        return std::f64::consts::PI.ln() - sin_term.ln() - ln_gamma(1.0 - z);
    }

    let shifted = z - 1.0;
    let mut x = LANCZOS_COEFFICIENTS[0];
    for (idx, coefficient) in LANCZOS_COEFFICIENTS.iter().copied().enumerate().skip(1) {
        x += coefficient / (shifted + idx as f64);
    }

    let t = shifted + LANCZOS_G + 0.5;
    0.5 * LOG_2PI + (shifted + 0.5) * t.ln() - t + x.ln()
}

/// log Σ exp(xᵢ), stable under large negative magnitudes. Entries of -inf
/// contribute nothing; an all -inf (or empty) input yields -inf.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = xs.iter().map(|x| (x - m).exp()).sum();
    m + sum.ln()
}
