//! Extreme-value machinery on the mixture-density image.
//!
//! Instead of fitting an extreme-value distribution in the data space (hard
//! for multivariate, multimodal data), the model works on the scalar image
//! `Y = f_X(X)` of mixture density values at the data points. Low density
//! means tail. A generalized Pareto distribution (GPD) is fit to the lower
//! tail of that image via peaks-over-threshold on the exceedances
//! `t1 − f(x)` for points below the q-th percentile density `t1`:
//!
//! ```text
//! G(y) = 1 − (1 + ξ (y − ν) / β)^(−1/ξ)    ξ ≠ 0
//!      = 1 − exp(−(y − ν) / β)             ξ = 0
//! ```
//!
//! The resulting CDF converts a tail point's density into its anomaly
//! probability p, and p in turn drives the point-specific concentration
//! parameter used by the sampler.

use crate::error::{Error, Result};
use crate::special::log_sum_exp;

/// Minimum number of strict exceedances required before a GPD fit is attempted.
pub const MIN_TAIL_POINTS: usize = 20;

/// Anomaly probabilities are clamped below 1 so that 1/(1-p) stays finite.
pub const MAX_ANOMALY_PROBABILITY: f64 = 1.0 - 1e-9;

/// Tail-related knobs: quantile, blend weight, and the concentration scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TailConfig {
    /// Tail quantile in (0, 0.5): points whose mixture density falls below
    /// the q-th percentile are tail points.
    pub q: f64,
    /// Blend weight in [0, 1] between the base concentration and the
    /// probability-driven one.
    pub ev_prop: f64,
    /// Base concentration parameter (> 0).
    pub alpha_base: f64,
    /// Numerator of the probability-driven concentration `scale / (1 - p)`.
    pub ev_alpha_scale: f64,
}

impl TailConfig {
    pub fn new(q: f64, ev_prop: f64, alpha_base: f64, ev_alpha_scale: f64) -> Result<Self> {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::invalid("tail.q", format!("must be in (0, 0.5), got {q}")));
        }
        if !(0.0..=1.0).contains(&ev_prop) {
            return Err(Error::invalid(
                "tail.ev_prop",
                format!("must be in [0, 1], got {ev_prop}"),
            ));
        }
        if !(alpha_base.is_finite() && alpha_base > 0.0) {
            return Err(Error::invalid(
                "gibbs.alpha",
                format!("must be positive, got {alpha_base}"),
            ));
        }
        if !(ev_alpha_scale.is_finite() && ev_alpha_scale > 0.0) {
            return Err(Error::invalid(
                "tail.ev_alpha_scale",
                format!("must be positive, got {ev_alpha_scale}"),
            ));
        }
        Ok(Self {
            q,
            ev_prop,
            alpha_base,
            ev_alpha_scale,
        })
    }
}

/// Default blend weight e^{-1/2}.
pub fn default_ev_prop() -> f64 {
    (-0.5f64).exp()
}

/// Per-point mixture log-densities plus the tail threshold `t1`
/// (the q-th percentile of the linear density values).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityImage {
    pub log_densities: Vec<f64>,
    pub threshold: f64,
}

impl DensityImage {
    pub fn from_log_densities(log_densities: Vec<f64>, q: f64) -> Result<Self> {
        if log_densities.is_empty() {
            return Err(Error::EmptyData("density image requires at least one point"));
        }
        if log_densities.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("density image", "log densities must not be NaN"));
        }
        let mut densities: Vec<f64> = log_densities.iter().map(|v| v.exp()).collect();
        densities.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let threshold = quantile_sorted(&densities, q);
        Ok(Self {
            log_densities,
            threshold,
        })
    }

    /// Construct from explicit parts; used when the threshold is fixed
    /// externally (tests, degenerate inputs).
    pub fn from_parts(log_densities: Vec<f64>, threshold: f64) -> Self {
        Self {
            log_densities,
            threshold,
        }
    }

    pub fn len(&self) -> usize {
        self.log_densities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_densities.is_empty()
    }

    /// Linear density value of point i.
    pub fn density(&self, i: usize) -> f64 {
        self.log_densities[i].exp()
    }

    /// Tail membership is strict: a point exactly at the threshold is not
    /// in the tail.
    pub fn in_tail(&self, i: usize) -> bool {
        self.density(i) < self.threshold
    }

    pub fn tail_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.in_tail(i)).collect()
    }
}

/// Linear-interpolated empirical quantile of an ascending-sorted slice.
fn quantile_sorted(sorted: &[f64], level: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let idx = level * (n - 1) as f64;
    let lo = idx.floor() as usize;
    let hi = idx.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = idx - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

/// Evaluate per-point mixture log-densities for weighted MVN components and
/// attach the q-th percentile threshold.
///
/// `components` holds (weight, params) pairs with weights summing to one.
pub fn mixture_density_image(
    components: &[(f64, &crate::mvn::MvnParams)],
    data: &[crate::mvn::Observation],
    q: f64,
) -> Result<DensityImage> {
    if data.is_empty() {
        return Err(Error::EmptyData("density image requires at least one point"));
    }
    if components.is_empty() {
        return Err(Error::EmptyData("density image requires at least one component"));
    }
    let mut log_densities = Vec::with_capacity(data.len());
    let mut terms = vec![0.0; components.len()];
    for x in data {
        for (slot, (weight, params)) in terms.iter_mut().zip(components) {
            *slot = if *weight > 0.0 {
                weight.ln() + params.logpdf(x)?
            } else {
                f64::NEG_INFINITY
            };
        }
        log_densities.push(log_sum_exp(&terms));
    }
    DensityImage::from_log_densities(log_densities, q)
}

/// Generalized Pareto fit on the lower tail of the density image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpdTailFit {
    /// Location ν in exceedance units (0 when fit on exceedances directly).
    pub location: f64,
    /// Scale β > 0.
    pub scale: f64,
    /// Shape ξ.
    pub shape: f64,
}

impl GpdTailFit {
    pub fn new(location: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::invalid("gpd.scale", format!("must be positive, got {scale}")));
        }
        if !shape.is_finite() || !location.is_finite() {
            return Err(Error::invalid("gpd", "location and shape must be finite"));
        }
        Ok(Self {
            location,
            scale,
            shape,
        })
    }

    /// CDF evaluated at exceedance y.
    pub fn cdf(&self, y: f64) -> f64 {
        let z = y - self.location;
        if z <= 0.0 {
            return 0.0;
        }
        if self.shape.abs() < 1e-9 {
            1.0 - (-z / self.scale).exp()
        } else {
            let t = 1.0 + self.shape * z / self.scale;
            if t <= 0.0 {
                // Past the upper endpoint of a bounded (ξ < 0) tail.
                1.0
            } else {
                1.0 - t.powf(-1.0 / self.shape)
            }
        }
    }
}

const XI_MIN: f64 = -0.9;
const XI_MAX: f64 = 5.0;

/// Profile log-likelihood of the GPD in the reduced parameter η = ξ/β.
/// Given η, the MLE of ξ is the mean of ln(1 + η y); β follows as ξ/η.
fn profile_at(ys: &[f64], eta: f64) -> Option<(f64, f64, f64)> {
    let n = ys.len() as f64;
    if eta == 0.0 {
        let mean = ys.iter().sum::<f64>() / n;
        if mean <= 0.0 {
            return None;
        }
        return Some((0.0, mean, -n * (mean.ln() + 1.0)));
    }
    let mut acc = 0.0;
    for &y in ys {
        let t = 1.0 + eta * y;
        if t <= 0.0 {
            return None;
        }
        acc += t.ln();
    }
    let xi = acc / n;
    if xi == 0.0 {
        return None;
    }
    let beta = xi / eta;
    if !(beta.is_finite() && beta > 0.0) {
        return None;
    }
    let ll = -n * (beta.ln() + xi + 1.0);
    ll.is_finite().then_some((xi, beta, ll))
}

fn method_of_moments(ys: &[f64]) -> (f64, f64) {
    let n = ys.len() as f64;
    let mean = ys.iter().sum::<f64>() / n;
    let var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n;
    if var <= 1e-12 * mean.max(1.0) * mean.max(1.0) {
        // Degenerate spread: treat as exponential with the observed mean.
        return (0.0, mean.max(1e-300));
    }
    let ratio = mean * mean / var;
    let xi = (0.5 * (1.0 - ratio)).clamp(XI_MIN, XI_MAX);
    let beta = (0.5 * mean * (1.0 + ratio)).max(1e-300);
    (xi, beta)
}

/// Maximum-likelihood GPD fit to raw exceedances (all ≥ 0), profiling the
/// likelihood down to one dimension, with a method-of-moments fallback when
/// the optimization yields nothing usable. Shape is bounded to [-0.9, 5].
pub fn fit_gpd_exceedances(exceedances: &[f64]) -> Result<GpdTailFit> {
    if exceedances.is_empty() {
        return Err(Error::InsufficientTail {
            needed: 1,
            have: 0,
        });
    }
    if exceedances.iter().any(|y| !y.is_finite() || *y < 0.0) {
        return Err(Error::invalid("exceedances", "must be finite and non-negative"));
    }
    let mean = exceedances.iter().sum::<f64>() / exceedances.len() as f64;
    let y_max = exceedances.iter().cloned().fold(0.0, f64::max);
    if mean <= 0.0 || y_max <= 0.0 {
        return Err(Error::invalid("exceedances", "must contain positive values"));
    }
    let var = exceedances.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>()
        / exceedances.len() as f64;
    if var <= 1e-12 * mean * mean {
        // Degenerate spread: the profile likelihood runs to the shape
        // boundary, so use the moment fallback directly.
        let (xi, beta) = method_of_moments(exceedances);
        return GpdTailFit::new(0.0, beta, xi);
    }

    // Candidate grid over η, log-spaced on both sides of zero.
    let mut candidates = vec![0.0];
    let steps = 160;
    for k in 0..=steps {
        let u = -10.0 + 20.0 * k as f64 / steps as f64;
        candidates.push(u.exp() / mean);
    }
    for k in 0..=steps {
        // η in (−1/y_max, 0): fractions of the lower bound, log-spaced.
        let w = -18.0 + 18.0 * k as f64 / steps as f64;
        candidates.push(-w.exp().min(1.0 - 1e-9) / y_max);
    }
    candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut best: Option<(f64, f64, f64, f64)> = None; // (eta, xi, beta, ll)
    for &eta in &candidates {
        if let Some((xi, beta, ll)) = profile_at(exceedances, eta) {
            if !(XI_MIN..=XI_MAX).contains(&xi) {
                continue;
            }
            if best.is_none_or(|(_, _, _, b)| ll > b) {
                best = Some((eta, xi, beta, ll));
            }
        }
    }

    let refined = best.map(|(eta_star, ..)| {
        // Golden-section refinement between the neighbors of the best
        // candidate.
        let pos = candidates
            .iter()
            .position(|&e| e == eta_star)
            .expect("candidate present");
        let mut lo = if pos > 0 { candidates[pos - 1] } else { eta_star };
        let mut hi = if pos + 1 < candidates.len() {
            candidates[pos + 1]
        } else {
            eta_star
        };
        let phi = 0.5 * (3.0 - 5.0_f64.sqrt());
        let value = |eta: f64| {
            profile_at(exceedances, eta)
                .filter(|(xi, ..)| (XI_MIN..=XI_MAX).contains(xi))
                .map(|(.., ll)| ll)
                .unwrap_or(f64::NEG_INFINITY)
        };
        for _ in 0..80 {
            let a = lo + phi * (hi - lo);
            let b = hi - phi * (hi - lo);
            if value(a) >= value(b) {
                hi = b;
            } else {
                lo = a;
            }
        }
        0.5 * (lo + hi)
    });

    let mle = refined.and_then(|eta| profile_at(exceedances, eta)).filter(
        |(xi, beta, ll)| {
            (XI_MIN..=XI_MAX).contains(xi) && beta.is_finite() && *beta > 0.0 && ll.is_finite()
        },
    );

    let (xi, beta) = match mle {
        Some((xi, beta, _)) => (xi, beta),
        None => method_of_moments(exceedances),
    };
    GpdTailFit::new(0.0, beta, xi)
}

/// Fit the GPD to the lower tail of a density image: exceedances are
/// `t1 − f(x)` for points strictly below the threshold. Errors when fewer
/// than [`MIN_TAIL_POINTS`] such points exist; the caller may widen the
/// quantile or defer.
pub fn fit_gpd_lower_tail(image: &DensityImage) -> Result<GpdTailFit> {
    let exceedances: Vec<f64> = image
        .log_densities
        .iter()
        .map(|lv| lv.exp())
        .filter(|d| *d < image.threshold)
        .map(|d| image.threshold - d)
        .collect();
    if exceedances.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientTail {
            needed: MIN_TAIL_POINTS,
            have: exceedances.len(),
        });
    }
    fit_gpd_exceedances(&exceedances)
}

/// Anomaly probability of a point with mixture density `fx`:
/// zero at or above the threshold, otherwise the GPD CDF of the exceedance,
/// clamped into [0, 1). Monotone non-increasing in `fx`.
pub fn anomaly_probability(fx: f64, image: &DensityImage, fit: &GpdTailFit) -> f64 {
    if fx >= image.threshold {
        return 0.0;
    }
    fit.cdf(image.threshold - fx).clamp(0.0, MAX_ANOMALY_PROBABILITY)
}

/// Effective concentration parameter for one point.
///
/// Outside the tail this is the base α. Inside the tail it blends the base
/// with the probability-driven term `scale / (1 − p)`:
/// `α(1 − ev_prop) + (scale / (1 − p)) ev_prop`, strictly increasing in p.
pub fn effective_alpha(p: f64, cfg: &TailConfig, in_tail: bool) -> Result<f64> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::ProbabilityRange(p));
    }
    if !in_tail {
        return Ok(cfg.alpha_base);
    }
    Ok(cfg.alpha_base * (1.0 - cfg.ev_prop) + cfg.ev_alpha_scale / (1.0 - p) * cfg.ev_prop)
}

/// Density image plus the tail fit actually usable for probabilities.
///
/// When the q-tail holds fewer than [`MIN_TAIL_POINTS`] points the fit
/// threshold is widened just enough to cover the minimum (never past the
/// median); when even that is impossible the fit is deferred and every
/// probability is zero.
#[derive(Debug, Clone)]
pub struct TailModel {
    pub image: DensityImage,
    pub fit: Option<GpdTailFit>,
    pub fit_threshold: f64,
}

impl TailModel {
    pub fn build(image: DensityImage) -> Self {
        let mut densities: Vec<f64> = image.log_densities.iter().map(|v| v.exp()).collect();
        densities.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = densities.len();

        let strict_below = |t: f64| densities.partition_point(|d| *d < t);

        let mut fit_threshold = image.threshold;
        if strict_below(fit_threshold) < MIN_TAIL_POINTS {
            // Widen to the narrowest threshold with MIN_TAIL_POINTS strict
            // exceedances, capped at the median.
            let widened = (n > MIN_TAIL_POINTS).then(|| {
                let base = densities[MIN_TAIL_POINTS - 1];
                densities[MIN_TAIL_POINTS..]
                    .iter()
                    .find(|d| **d > base)
                    .map(|next| 0.5 * (base + next))
            });
            match widened.flatten() {
                Some(t) if t <= quantile_sorted(&densities, 0.5) => fit_threshold = t,
                _ => {
                    let fit_threshold = image.threshold;
                    return Self {
                        image,
                        fit: None,
                        fit_threshold,
                    };
                }
            }
        }

        let exceedances: Vec<f64> = densities
            .iter()
            .take_while(|d| **d < fit_threshold)
            .map(|d| fit_threshold - d)
            .collect();
        let fit = fit_gpd_exceedances(&exceedances).ok();
        Self {
            image,
            fit,
            fit_threshold,
        }
    }

    /// A model with no usable tail: every point reads as non-tail with
    /// probability zero. Used when the density image itself cannot be
    /// computed.
    pub fn deferred(n: usize) -> Self {
        Self {
            image: DensityImage::from_parts(vec![0.0; n], 0.0),
            fit: None,
            fit_threshold: 0.0,
        }
    }

    /// Whether GPD probabilities are available for this image.
    pub fn available(&self) -> bool {
        self.fit.is_some()
    }

    /// Tail membership of point i under the q-quantile threshold.
    pub fn in_tail(&self, i: usize) -> bool {
        self.image.in_tail(i)
    }

    /// Anomaly probability of point i: zero outside the tail or when the
    /// fit is deferred.
    pub fn probability(&self, i: usize) -> f64 {
        if !self.image.in_tail(i) {
            return 0.0;
        }
        match &self.fit {
            None => 0.0,
            Some(fit) => fit
                .cdf(self.fit_threshold - self.image.density(i))
                .clamp(0.0, MAX_ANOMALY_PROBABILITY),
        }
    }
}
