//! Multivariate-normal likelihoods with Normal-Inverse-Wishart conjugacy.
//!
//! The mixture components are MVN densities `F(x | θ)` whose parameters are
//! drawn from a Normal-Inverse-Wishart base distribution `G0`:
//!
//! ```text
//! Σ ~ InverseWishart(ν0, Ψ)
//! μ | Σ ~ N(μ0, Σ / κ0)
//! ```
//!
//! Conjugacy gives closed forms for the posterior update, for posterior
//! parameter draws, and for the marginal (predictive) density
//! `∫ F(x|θ) G0(θ) dθ`, which is a multivariate Student-t. All density
//! arithmetic is done in log space; covariance work goes through Cholesky
//! factors, and a factorization failure is reported as an error rather than
//! silently regularized.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::rng::RandomSource;
use crate::special::{ln_gamma, LOG_2PI};

/// A d-dimensional data point. Coordinates are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    coords: DVector<f64>,
}

impl Observation {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyData("observation must have at least one coordinate"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation", "coordinates must be finite"));
        }
        Ok(Self {
            coords: DVector::from_vec(coords),
        })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.iter().copied().collect()
    }
}

fn check_symmetric(m: &DMatrix<f64>, context: &'static str) -> Result<()> {
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > 1e-8 * scale {
                return Err(Error::invalid(context, "matrix is not symmetric"));
            }
        }
    }
    Ok(())
}

fn cholesky_lower(m: &DMatrix<f64>, context: &'static str) -> Result<DMatrix<f64>> {
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite { context })
}

fn log_det_from_chol(lower: &DMatrix<f64>) -> f64 {
    2.0 * lower.diagonal().iter().map(|v| v.ln()).sum::<f64>()
}

/// Solve L y = b for lower-triangular L by forward substitution.
fn forward_solve(lower: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let d = b.len();
    let mut y = DVector::zeros(d);
    for i in 0..d {
        let mut acc = b[i];
        for j in 0..i {
            acc -= lower[(i, j)] * y[j];
        }
        y[i] = acc / lower[(i, i)];
    }
    y
}

/// Parameters of one multivariate normal component.
///
/// The Cholesky factor and log-determinant of the covariance are cached at
/// construction so repeated density evaluations stay cheap.
#[derive(Debug, Clone)]
pub struct MvnParams {
    mean: DVector<f64>,
    covariance: DMatrix<f64>,
    chol_lower: DMatrix<f64>,
    log_det: f64,
}

impl MvnParams {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if covariance.nrows() != d || covariance.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: covariance.nrows(),
            });
        }
        check_symmetric(&covariance, "covariance")?;
        let chol_lower = cholesky_lower(&covariance, "cluster covariance")?;
        let log_det = log_det_from_chol(&chol_lower);
        Ok(Self {
            mean,
            covariance,
            chol_lower,
            log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    /// log N(x; mean, covariance).
    pub fn logpdf(&self, x: &Observation) -> Result<f64> {
        let d = self.dim();
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
        let delta = x.coords() - &self.mean;
        let y = forward_solve(&self.chol_lower, &delta);
        let quad = y.norm_squared();
        Ok(-0.5 * (d as f64 * LOG_2PI + self.log_det + quad))
    }
}

/// Incremental sufficient statistics of a set of observations:
/// count, coordinate sum, and summed outer products.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats {
    n: usize,
    sum: DVector<f64>,
    sum_outer: DMatrix<f64>,
}

impl SuffStats {
    pub fn empty(dim: usize) -> Self {
        Self {
            n: 0,
            sum: DVector::zeros(dim),
            sum_outer: DMatrix::zeros(dim, dim),
        }
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.sum.len()
    }

    pub fn sum(&self) -> &DVector<f64> {
        &self.sum
    }

    pub fn sum_outer(&self) -> &DMatrix<f64> {
        &self.sum_outer
    }

    pub fn add(&mut self, x: &Observation) {
        debug_assert_eq!(x.dim(), self.dim());
        self.n += 1;
        self.sum += x.coords();
        self.sum_outer += x.coords() * x.coords().transpose();
    }

    pub fn remove(&mut self, x: &Observation) -> Result<()> {
        if self.n == 0 {
            return Err(Error::EmptyStats);
        }
        debug_assert_eq!(x.dim(), self.dim());
        self.n -= 1;
        self.sum -= x.coords();
        self.sum_outer -= x.coords() * x.coords().transpose();
        if self.n == 0 {
            // Pin the empty statistics to exact zero.
            self.sum.fill(0.0);
            self.sum_outer.fill(0.0);
        }
        Ok(())
    }

    pub fn from_points<'a>(dim: usize, points: impl IntoIterator<Item = &'a Observation>) -> Self {
        let mut stats = Self::empty(dim);
        for x in points {
            stats.add(x);
        }
        stats
    }

    /// Rebuild from raw parts (snapshot restore).
    pub fn from_parts(n: usize, sum: DVector<f64>, sum_outer: DMatrix<f64>) -> Result<Self> {
        let d = sum.len();
        if sum_outer.nrows() != d || sum_outer.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: sum_outer.nrows(),
            });
        }
        check_symmetric(&sum_outer, "sum_outer")?;
        Ok(Self { n, sum, sum_outer })
    }

    pub fn mean(&self) -> Option<DVector<f64>> {
        (self.n > 0).then(|| &self.sum / self.n as f64)
    }

    /// Centered scatter matrix Σᵢ (xᵢ − x̄)(xᵢ − x̄)ᵀ, symmetrized.
    pub fn scatter(&self) -> DMatrix<f64> {
        if self.n == 0 {
            return self.sum_outer.clone();
        }
        let raw = &self.sum_outer - (&self.sum * self.sum.transpose()) / self.n as f64;
        0.5 * (&raw + raw.transpose())
    }
}

/// Mean vector of a set of observations.
pub fn sample_mean(points: &[Observation]) -> DVector<f64> {
    let stats = SuffStats::from_points(points[0].dim(), points.iter());
    stats.mean().expect("nonempty data")
}

/// Unbiased sample covariance (zero matrix for fewer than two points).
pub fn sample_covariance(points: &[Observation]) -> DMatrix<f64> {
    let dim = points[0].dim();
    let stats = SuffStats::from_points(dim, points.iter());
    if stats.count() < 2 {
        return DMatrix::zeros(dim, dim);
    }
    stats.scatter() / (stats.count() as f64 - 1.0)
}

/// Normal-Inverse-Wishart hyperparameters: the base distribution over
/// component means and covariances.
#[derive(Debug, Clone)]
pub struct NiwParams {
    mu0: DVector<f64>,
    kappa0: f64,
    nu0: f64,
    psi: DMatrix<f64>,
    psi_chol: DMatrix<f64>,
    psi_log_det: f64,
}

impl NiwParams {
    pub fn new(mu0: DVector<f64>, kappa0: f64, nu0: f64, psi: DMatrix<f64>) -> Result<Self> {
        let d = mu0.len();
        if psi.nrows() != d || psi.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: psi.nrows(),
            });
        }
        if !(kappa0.is_finite() && kappa0 > 0.0) {
            return Err(Error::invalid("kappa0", format!("must be positive, got {kappa0}")));
        }
        if !(nu0.is_finite() && nu0 > d as f64 - 1.0) {
            return Err(Error::invalid(
                "nu0",
                format!("must exceed d - 1 = {}, got {nu0}", d as f64 - 1.0),
            ));
        }
        check_symmetric(&psi, "psi")?;
        let psi_chol = cholesky_lower(&psi, "psi")?;
        let psi_log_det = log_det_from_chol(&psi_chol);
        Ok(Self {
            mu0,
            kappa0,
            nu0,
            psi,
            psi_chol,
            psi_log_det,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    pub fn kappa0(&self) -> f64 {
        self.kappa0
    }

    pub fn nu0(&self) -> f64 {
        self.nu0
    }

    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// Standard conjugate update. With empty statistics the prior is
    /// returned unchanged.
    pub fn posterior(&self, stats: &SuffStats) -> Result<NiwParams> {
        if stats.count() == 0 {
            return Ok(self.clone());
        }
        if stats.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: stats.dim(),
            });
        }
        let n = stats.count() as f64;
        let xbar = stats.mean().expect("nonempty stats");
        let kappa_n = self.kappa0 + n;
        let nu_n = self.nu0 + n;
        let mu_n = (&self.mu0 * self.kappa0 + stats.sum()) / kappa_n;
        let diff = &xbar - &self.mu0;
        let shrink = (self.kappa0 * n / kappa_n) * (&diff * diff.transpose());
        let psi_n = &self.psi + stats.scatter() + shrink;
        let psi_n = 0.5 * (&psi_n + psi_n.transpose());
        NiwParams::new(mu_n, kappa_n, nu_n, psi_n)
    }

    /// Draw (μ, Σ) from this distribution.
    ///
    /// Σ comes from the inverse-Wishart via the Bartlett factorization
    /// (rejection-free, positive-definite by construction) and μ from
    /// N(μ0, Σ/κ0). Fixed seeds reproduce draws exactly.
    pub fn sample(&self, rng: &mut RandomSource) -> Result<MvnParams> {
        let d = self.dim();

        // Bartlett factor A: lower triangular, chi-square diagonal.
        let mut bartlett = DMatrix::zeros(d, d);
        for j in 0..d {
            let df = self.nu0 - j as f64;
            bartlett[(j, j)] = rng.chi_square(df).sqrt();
            for i in (j + 1)..d {
                bartlett[(i, j)] = rng.standard_normal();
            }
        }

        // With Ψ = M Mᵀ and W = M⁻ᵀ A Aᵀ M⁻¹ ~ Wishart(ν0, Ψ⁻¹), the
        // inverse-Wishart draw is Σ = W⁻¹ = G Gᵀ where G solves A Gᵀ = Mᵀ.
        let m_t = self.psi_chol.transpose();
        let mut g_t = DMatrix::zeros(d, d);
        for col in 0..d {
            let rhs = m_t.column(col).into_owned();
            let solved = forward_solve(&bartlett, &rhs);
            g_t.set_column(col, &solved);
        }
        let g = g_t.transpose();
        let sigma = &g * g.transpose();
        let sigma = 0.5 * (&sigma + sigma.transpose());

        let z = DVector::from_fn(d, |_, _| rng.standard_normal());
        let mean = &self.mu0 + (&g * z) / self.kappa0.sqrt();

        MvnParams::new(mean, sigma)
    }

    /// Log of the marginal density ∫ F(x|θ) G0(θ) dθ: the multivariate
    /// Student-t with df = ν0 − d + 1 and scale Ψ (κ0+1) / (κ0 df).
    pub fn log_predictive(&self, x: &Observation) -> Result<f64> {
        let d = self.dim();
        if x.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.dim(),
            });
        }
        let df = self.nu0 - d as f64 + 1.0;
        let scale_factor = self.psi_log_det + d as f64 * ((self.kappa0 + 1.0) / (self.kappa0 * df)).ln();

        let delta = x.coords() - &self.mu0;
        let y = forward_solve(&self.psi_chol, &delta);
        // δᵀ V⁻¹ δ with V = c Ψ reduces to the Ψ quad form divided by c.
        let quad = y.norm_squared() * self.kappa0 * df / (self.kappa0 + 1.0);

        let dd = d as f64;
        Ok(ln_gamma(0.5 * (df + dd)) - ln_gamma(0.5 * df)
            - 0.5 * dd * (df * std::f64::consts::PI).ln()
            - 0.5 * scale_factor
            - 0.5 * (df + dd) * (quad / df).ln_1p())
    }
}
