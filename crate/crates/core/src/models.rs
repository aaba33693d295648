//! Generative models for the bivariate sequence `{(X_{1,j}, X_{2,j})}`.
//!
//! Every variant produces vectors that are independent across `j`; the
//! variants differ in the within-pair dependence. `rademacher_product` is the
//! concrete dependent-but-uncorrelated pair: `X1 ~ N(0,1)` and `X2 = S * X1`
//! with an independent sign `S`, so the per-index correlation vanishes while
//! `X2^2 = X1^2` exactly.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{self, tag};

const SQRT_12: f64 = 3.4641016151377544;

/// Marginal distribution family; `mu`/`sigma` below are always the mean and
/// standard deviation, whatever the family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarginalFamily {
    Gaussian,
    Rademacher,
    Exponential,
    Uniform,
}

impl MarginalFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MarginalFamily::Gaussian => "gaussian",
            MarginalFamily::Rademacher => "rademacher",
            MarginalFamily::Exponential => "exponential",
            MarginalFamily::Uniform => "uniform",
        }
    }
}

/// Location-scale specification of one coordinate's marginal law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginalSpec {
    family: MarginalFamily,
    mu: f64,
    sigma: f64,
}

impl MarginalSpec {
    pub fn new(family: MarginalFamily, mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() {
            return Err(Error::NonFinite(format!("marginal (mu={mu}, sigma={sigma})")));
        }
        if sigma <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        Ok(Self { family, mu, sigma })
    }

    pub fn standard(family: MarginalFamily) -> Self {
        Self { family, mu: 0.0, sigma: 1.0 }
    }

    pub fn family(&self) -> MarginalFamily {
        self.family
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// All supported families carry a closed-form characteristic function.
    pub fn analytic_cf_available(&self) -> bool {
        true
    }

    /// Characteristic function of the standardized coordinate `(X - mu)/sigma`.
    pub fn standardized_cf(&self, u: f64) -> Complex64 {
        match self.family {
            MarginalFamily::Gaussian => Complex64::new((-0.5 * u * u).exp(), 0.0),
            MarginalFamily::Rademacher => Complex64::new(u.cos(), 0.0),
            // (X - 1) for X ~ Exp(1): e^{-iu} / (1 - iu).
            MarginalFamily::Exponential => {
                Complex64::new(0.0, -u).exp() / Complex64::new(1.0, -u)
            }
            // Uniform stretched to unit variance: sin(sqrt(3) u) / (sqrt(3) u).
            MarginalFamily::Uniform => {
                let a = 3f64.sqrt() * u;
                let v = if a.abs() < 1e-8 { 1.0 - a * a / 6.0 } else { a.sin() / a };
                Complex64::new(v, 0.0)
            }
        }
    }

    /// Draws one standardized (mean 0, variance 1) value.
    pub fn sample_standardized(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.family {
            MarginalFamily::Gaussian => rng.sample(StandardNormal),
            MarginalFamily::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            MarginalFamily::Exponential => {
                let e: f64 = rng.sample(Exp1);
                e - 1.0
            }
            MarginalFamily::Uniform => (rng.gen::<f64>() - 0.5) * SQRT_12,
        }
    }

    /// Draws one value on the raw scale.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        self.mu + self.sigma * self.sample_standardized(rng)
    }

    /// Draws the sum of `len` independent raw-scale values in one shot where
    /// the family is closed under iid summation (Normal, Binomial and Gamma
    /// sums have those exact laws); falls back to a loop otherwise. The result
    /// is equal in distribution to summing `len` calls of [`Self::sample`].
    pub fn sample_sum(&self, len: u64, rng: &mut ChaCha8Rng) -> f64 {
        if len == 0 {
            return 0.0;
        }
        let lf = len as f64;
        match self.family {
            MarginalFamily::Gaussian => {
                let z: f64 = rng.sample(StandardNormal);
                lf * self.mu + self.sigma * lf.sqrt() * z
            }
            MarginalFamily::Rademacher => {
                let b = Binomial::new(len, 0.5).expect("p = 0.5 is valid").sample(rng);
                lf * self.mu + self.sigma * (2.0 * b as f64 - lf)
            }
            MarginalFamily::Exponential => {
                let g = Gamma::new(lf, 1.0).expect("positive shape").sample(rng);
                lf * (self.mu - self.sigma) + self.sigma * g
            }
            MarginalFamily::Uniform => (0..len).map(|_| self.sample(rng)).sum(),
        }
    }
}

/// Per-index correlation schedule `j -> rho_jj`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationSchedule {
    Constant(f64),
    /// `rho_jj = (-1)^(j+1) * amplitude`: positive at odd `j`.
    Alternating(f64),
}

impl CorrelationSchedule {
    pub fn validate(&self) -> Result<()> {
        let a = match self {
            CorrelationSchedule::Constant(r) => *r,
            CorrelationSchedule::Alternating(r) => *r,
        };
        if !a.is_finite() || a.abs() > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "correlation values must lie in [-1, 1], got {a}"
            )));
        }
        Ok(())
    }

    pub fn rho(&self, j: u64) -> f64 {
        match self {
            CorrelationSchedule::Constant(r) => *r,
            CorrelationSchedule::Alternating(a) => {
                if j % 2 == 1 {
                    *a
                } else {
                    -*a
                }
            }
        }
    }

    /// `sum_{j=1..k} rho_jj` in closed form.
    pub fn partial_sum(&self, k: u64) -> f64 {
        match self {
            CorrelationSchedule::Constant(r) => k as f64 * r,
            CorrelationSchedule::Alternating(a) => {
                if k % 2 == 1 {
                    *a
                } else {
                    0.0
                }
            }
        }
    }
}

/// Model variants. See the module docs for the dependence structure each one
/// realizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairVariant {
    GaussianIidCorr { rho: f64 },
    RademacherProduct,
    GaussianVaryingSchedule { schedule: CorrelationSchedule },
    BoundedRademacherPair { rho: f64 },
    IndependentNonGaussian,
}

/// A fully specified bivariate sequence model. Immutable after construction
/// and safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct PairModel {
    variant: PairVariant,
    marginal1: MarginalSpec,
    marginal2: MarginalSpec,
}

impl PairModel {
    /// Correlated Gaussian pairs built from the linear construction
    /// `X2 = rho * Z1 + sqrt(1 - rho^2) * Z2`, rescaled to the requested
    /// moments; the target correlation is exact.
    pub fn gaussian_iid_corr(
        mu1: f64,
        sigma1: f64,
        mu2: f64,
        sigma2: f64,
        rho: f64,
    ) -> Result<Self> {
        CorrelationSchedule::Constant(rho).validate()?;
        Ok(Self {
            variant: PairVariant::GaussianIidCorr { rho },
            marginal1: MarginalSpec::new(MarginalFamily::Gaussian, mu1, sigma1)?,
            marginal2: MarginalSpec::new(MarginalFamily::Gaussian, mu2, sigma2)?,
        })
    }

    /// Dependent but uncorrelated: `X1 ~ N(0,1)`, `X2 = S * X1` with an
    /// independent Rademacher sign `S`.
    pub fn rademacher_product() -> Self {
        Self {
            variant: PairVariant::RademacherProduct,
            marginal1: MarginalSpec::standard(MarginalFamily::Gaussian),
            marginal2: MarginalSpec::standard(MarginalFamily::Gaussian),
        }
    }

    /// Gaussian pairs whose correlation follows `schedule` across `j`.
    pub fn gaussian_varying(
        mu1: f64,
        sigma1: f64,
        mu2: f64,
        sigma2: f64,
        schedule: CorrelationSchedule,
    ) -> Result<Self> {
        schedule.validate()?;
        Ok(Self {
            variant: PairVariant::GaussianVaryingSchedule { schedule },
            marginal1: MarginalSpec::new(MarginalFamily::Gaussian, mu1, sigma1)?,
            marginal2: MarginalSpec::new(MarginalFamily::Gaussian, mu2, sigma2)?,
        })
    }

    /// Both coordinates are +/-1-valued with `P(X1 = X2) = (1 + rho)/2`.
    /// Projections of this pair take four values, so Lindeberg functionals
    /// evaluate by exact finite summation.
    pub fn bounded_rademacher_pair(rho: f64) -> Result<Self> {
        CorrelationSchedule::Constant(rho).validate()?;
        Ok(Self {
            variant: PairVariant::BoundedRademacherPair { rho },
            marginal1: MarginalSpec::standard(MarginalFamily::Rademacher),
            marginal2: MarginalSpec::standard(MarginalFamily::Rademacher),
        })
    }

    /// Independent coordinates with arbitrary marginal families.
    pub fn independent(marginal1: MarginalSpec, marginal2: MarginalSpec) -> Self {
        Self {
            variant: PairVariant::IndependentNonGaussian,
            marginal1,
            marginal2,
        }
    }

    pub fn variant(&self) -> PairVariant {
        self.variant
    }

    pub fn marginal1(&self) -> &MarginalSpec {
        &self.marginal1
    }

    pub fn marginal2(&self) -> &MarginalSpec {
        &self.marginal2
    }

    pub fn marginal(&self, coord: u8) -> &MarginalSpec {
        match coord {
            1 => &self.marginal1,
            2 => &self.marginal2,
            _ => panic!("coordinate must be 1 or 2"),
        }
    }

    /// Short stable identifier used in artifacts.
    pub fn id(&self) -> String {
        match self.variant {
            PairVariant::GaussianIidCorr { rho } => format!("gaussian_iid_corr(rho={rho})"),
            PairVariant::RademacherProduct => "rademacher_product".to_string(),
            PairVariant::GaussianVaryingSchedule { schedule } => match schedule {
                CorrelationSchedule::Constant(r) => format!("gaussian_varying(constant={r})"),
                CorrelationSchedule::Alternating(a) => {
                    format!("gaussian_varying(alternating={a})")
                }
            },
            PairVariant::BoundedRademacherPair { rho } => {
                format!("bounded_rademacher_pair(rho={rho})")
            }
            PairVariant::IndependentNonGaussian => format!(
                "independent({},{})",
                self.marginal1.family().name(),
                self.marginal2.family().name()
            ),
        }
    }

    /// The true `Corr(X_{1,j}, X_{2,j})` implied by the construction.
    pub fn correlation_schedule(&self, j: u64) -> f64 {
        debug_assert!(j >= 1);
        match self.variant {
            PairVariant::GaussianIidCorr { rho } => rho,
            PairVariant::RademacherProduct => 0.0,
            PairVariant::GaussianVaryingSchedule { schedule } => schedule.rho(j),
            PairVariant::BoundedRademacherPair { rho } => rho,
            PairVariant::IndependentNonGaussian => 0.0,
        }
    }

    /// `sum_{j=1..k} rho_jj` in closed form.
    pub fn schedule_partial_sum(&self, k: u64) -> f64 {
        match self.variant {
            PairVariant::GaussianIidCorr { rho } => k as f64 * rho,
            PairVariant::RademacherProduct | PairVariant::IndependentNonGaussian => 0.0,
            PairVariant::GaussianVaryingSchedule { schedule } => schedule.partial_sum(k),
            PairVariant::BoundedRademacherPair { rho } => k as f64 * rho,
        }
    }

    /// Cesaro mean `(1/k) sum_{j<=k} rho_jj` of the schedule.
    pub fn cesaro_mean(&self, k: u64) -> f64 {
        debug_assert!(k >= 1);
        self.schedule_partial_sum(k) / k as f64
    }

    /// Distinct `rho_jj` values among `j = 1..=k` with their multiplicities.
    pub fn schedule_groups(&self, k: u64) -> Vec<(f64, u64)> {
        match self.variant {
            PairVariant::GaussianVaryingSchedule {
                schedule: CorrelationSchedule::Alternating(a),
            } => {
                let odd = k.div_ceil(2);
                let even = k / 2;
                let mut groups = vec![(a, odd)];
                if even > 0 {
                    groups.push((-a, even));
                }
                groups
            }
            _ => vec![(self.correlation_schedule(1), k)],
        }
    }

    /// Draws the `j`-th standardized pair.
    pub fn draw_pair_standardized(&self, j: u64, rng: &mut ChaCha8Rng) -> (f64, f64) {
        match self.variant {
            PairVariant::GaussianIidCorr { rho } => gaussian_pair(rho, rng),
            PairVariant::GaussianVaryingSchedule { schedule } => {
                gaussian_pair(schedule.rho(j), rng)
            }
            PairVariant::RademacherProduct => {
                let z: f64 = rng.sample(StandardNormal);
                let s = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                (z, s * z)
            }
            PairVariant::BoundedRademacherPair { rho } => {
                let x1 = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                let agree = rng.gen::<f64>() < (1.0 + rho) / 2.0;
                (x1, if agree { x1 } else { -x1 })
            }
            PairVariant::IndependentNonGaussian => (
                self.marginal1.sample_standardized(rng),
                self.marginal2.sample_standardized(rng),
            ),
        }
    }

    /// Draws the `j`-th pair on the raw scale.
    pub fn draw_pair(&self, j: u64, rng: &mut ChaCha8Rng) -> (f64, f64) {
        let (a, b) = self.draw_pair_standardized(j, rng);
        (
            self.marginal1.mu() + self.marginal1.sigma() * a,
            self.marginal2.mu() + self.marginal2.sigma() * b,
        )
    }

    /// Samples a block of `n` pairs. Identical `(model, n, seed)` yields a
    /// bit-identical block.
    pub fn sample_block(&self, n: u64, seed: u64) -> Result<Vec<(f64, f64)>> {
        if n == 0 {
            return Err(Error::InvalidParameter("block size must be >= 1".into()));
        }
        let mut rng = rng::stream(seed, &[tag::PAIR_BLOCK, 0]);
        Ok((1..=n).map(|j| self.draw_pair(j, &mut rng)).collect())
    }

    /// Characteristic function of one standardized pair at index `j`.
    pub fn pair_cf(&self, j: u64, s: f64, t: f64) -> Complex64 {
        match self.variant {
            PairVariant::GaussianIidCorr { .. } | PairVariant::GaussianVaryingSchedule { .. } => {
                let r = self.correlation_schedule(j);
                Complex64::new((-0.5 * (s * s + 2.0 * s * t * r + t * t)).exp(), 0.0)
            }
            PairVariant::RademacherProduct => {
                let p = (-0.5 * (s + t) * (s + t)).exp();
                let m = (-0.5 * (s - t) * (s - t)).exp();
                Complex64::new(0.5 * (p + m), 0.0)
            }
            PairVariant::BoundedRademacherPair { rho } => {
                let p = (1.0 + rho) / 2.0;
                Complex64::new(p * (s + t).cos() + (1.0 - p) * (s - t).cos(), 0.0)
            }
            PairVariant::IndependentNonGaussian => {
                self.marginal1.standardized_cf(s) * self.marginal2.standardized_cf(t)
            }
        }
    }
}

fn gaussian_pair(rho: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let z1: f64 = rng.sample(StandardNormal);
    let z2: f64 = rng.sample(StandardNormal);
    (z1, rho * z1 + (1.0 - rho * rho).sqrt() * z2)
}
