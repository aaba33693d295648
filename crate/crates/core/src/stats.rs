//! Statistics built from a realized double sample: standardized means, the
//! Cesaro-averaged cross correlation, the difference/sum statistics and their
//! weight vectors, and batched replication.
//!
//! All standardizations use the true model parameters `(mu_i, sigma_i)`, not
//! plug-in estimates.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::PairModel;
use crate::netpath::{NetPoint, RatioLimit};
use crate::rng::{self, tag};

/// `sqrt(n) * (mean - mu) / sigma`.
pub fn standardized_mean(sample: &[f64], mu: f64, sigma: f64) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let n = sample.len() as f64;
    let mean = sample.iter().sum::<f64>() / n;
    Ok(n.sqrt() * (mean - mu) / sigma)
}

/// Cesaro-averaged cross correlation at an index point:
/// `(1/sqrt(n1*n2)) * sum_{j<=min(n1,n2)} rho_jj`.
pub fn rho_bar(model: &PairModel, point: NetPoint) -> f64 {
    model.schedule_partial_sum(point.n_min()) / point.m_geom()
}

/// Weight pair `(v1, v2)` with `v1^2 + v2^2 = 1`:
/// `v1 = sigma1 / sqrt(sigma1^2 + e * sigma2^2)`,
/// `v2 = sigma2 / sqrt(sigma1^2 / e + sigma2^2)`.
pub fn v_weights(sigma1: f64, sigma2: f64, e: f64) -> Result<(f64, f64)> {
    if !(sigma1 > 0.0 && sigma2 > 0.0) {
        return Err(Error::InvalidParameter(
            "v_weights needs positive scales".into(),
        ));
    }
    if !(e > 0.0) || !e.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "size ratio must be positive and finite, got {e}"
        )));
    }
    let v1 = sigma1 / (sigma1 * sigma1 + e * sigma2 * sigma2).sqrt();
    let v2 = sigma2 / (sigma1 * sigma1 / e + sigma2 * sigma2).sqrt();
    Ok((v1, v2))
}

/// Limit of the weight pair as the size ratio tends to `kappa`; the endpoint
/// cases collapse to `(1, 0)` and `(0, 1)`.
pub fn limit_weights(sigma1: f64, sigma2: f64, kappa: RatioLimit) -> (f64, f64) {
    match kappa {
        RatioLimit::Zero => (1.0, 0.0),
        RatioLimit::Infinity => (0.0, 1.0),
        RatioLimit::Finite(k) => {
            v_weights(sigma1, sigma2, k).expect("finite kappa is positive")
        }
    }
}

/// `2 * sigma1 * sigma2 * rho / (sigma1^2 + sigma2^2)` — the correlation that
/// survives into the variance of the difference statistic on the diagonal.
pub fn rho_star(rho: f64, sigma1: f64, sigma2: f64) -> f64 {
    2.0 * sigma1 * sigma2 * rho / (sigma1 * sigma1 + sigma2 * sigma2)
}

/// Off-diagonal generalization of [`rho_star`]: the coefficient multiplying
/// the averaged correlation in `E[w_hat^2] = 1 - rho_star_at(..) ` at size
/// ratio `e`. Reduces to [`rho_star`] at `e = 1`.
pub fn rho_star_at(rho: f64, sigma1: f64, sigma2: f64, e: f64) -> f64 {
    2.0 * sigma1 * sigma2 * e.sqrt() * rho / (sigma1 * sigma1 + e * sigma2 * sigma2)
}

fn hat_denominator(model: &PairModel, point: NetPoint) -> Result<f64> {
    let s1 = model.marginal1().sigma();
    let s2 = model.marginal2().sigma();
    let d = (s1 * s1 / point.n1() as f64 + s2 * s2 / point.n2() as f64).sqrt();
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::DegenerateDenominator("w_hat/u_hat"));
    }
    Ok(d)
}

/// Normalized difference of centered sample means.
pub fn w_hat(x1bar: f64, x2bar: f64, model: &PairModel, point: NetPoint) -> Result<f64> {
    let d = hat_denominator(model, point)?;
    Ok(((x1bar - model.marginal1().mu()) - (x2bar - model.marginal2().mu())) / d)
}

/// Normalized sum of centered sample means.
pub fn u_hat(x1bar: f64, x2bar: f64, model: &PairModel, point: NetPoint) -> Result<f64> {
    let d = hat_denominator(model, point)?;
    Ok(((x1bar - model.marginal1().mu()) + (x2bar - model.marginal2().mu())) / d)
}

/// One replication's worth of statistics at a fixed index point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStat {
    pub y1: f64,
    pub y2: f64,
    pub w_hat: f64,
    pub u_hat: f64,
}

/// Independent replications of the pair statistic at one index point.
#[derive(Debug, Clone)]
pub struct ReplicationBatch {
    point: NetPoint,
    stats: Vec<PairStat>,
    seed: u64,
    model_id: String,
}

impl ReplicationBatch {
    pub fn point(&self) -> NetPoint {
        self.point
    }

    pub fn stats(&self) -> &[PairStat] {
        &self.stats
    }

    pub fn len(&self) -> usize {
        self.stats.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn y_pairs(&self) -> Vec<(f64, f64)> {
        self.stats.iter().map(|s| (s.y1, s.y2)).collect()
    }

    pub fn w_values(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.w_hat).collect()
    }

    pub fn u_values(&self) -> Vec<f64> {
        self.stats.iter().map(|s| s.u_hat).collect()
    }

    /// Sample Pearson correlation of `(y1, y2)` across replications.
    pub fn corr_y(&self) -> f64 {
        let n = self.stats.len() as f64;
        let my1 = self.stats.iter().map(|s| s.y1).sum::<f64>() / n;
        let my2 = self.stats.iter().map(|s| s.y2).sum::<f64>() / n;
        let mut s11 = 0.0;
        let mut s22 = 0.0;
        let mut s12 = 0.0;
        for s in &self.stats {
            s11 += (s.y1 - my1) * (s.y1 - my1);
            s22 += (s.y2 - my2) * (s.y2 - my2);
            s12 += (s.y1 - my1) * (s.y2 - my2);
        }
        s12 / (s11 * s22).sqrt()
    }

    pub fn var_w(&self) -> f64 {
        sample_variance(self.stats.iter().map(|s| s.w_hat))
    }

    pub fn var_u(&self) -> f64 {
        sample_variance(self.stats.iter().map(|s| s.u_hat))
    }
}

fn sample_variance(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Runs `r` independent replications at `point`.
///
/// Replications fan out across workers; each replication derives its streams
/// from `(seed, replication index)` alone and results are assembled in
/// replication order, so output is identical for any worker count.
///
/// Within a replication the first `min(n1, n2)` pairs are drawn jointly; the
/// surplus of the longer sample only enters through its sum, which is drawn
/// from its exact distribution (see `MarginalSpec::sample_sum`).
pub fn replicate(model: &PairModel, point: NetPoint, r: usize, seed: u64) -> ReplicationBatch {
    assert!(r >= 1, "at least one replication required");
    let stats: Vec<PairStat> = (0..r as u64)
        .into_par_iter()
        .map(|rep| simulate_one(model, point, seed, rep))
        .collect();
    ReplicationBatch {
        point,
        stats,
        seed,
        model_id: model.id(),
    }
}

fn simulate_one(model: &PairModel, point: NetPoint, seed: u64, rep: u64) -> PairStat {
    let mut pair_rng = rng::stream(seed, &[tag::PAIR_BLOCK, rep]);
    let n_min = point.n_min();
    let mut sum1 = 0.0;
    let mut sum2 = 0.0;
    for j in 1..=n_min {
        let (x1, x2) = model.draw_pair(j, &mut pair_rng);
        sum1 += x1;
        sum2 += x2;
    }
    if point.n_max() > n_min {
        let mut tail_rng = rng::stream(seed, &[tag::TAIL, rep]);
        let len = point.n_max() - n_min;
        if point.n1() > point.n2() {
            sum1 += model.marginal1().sample_sum(len, &mut tail_rng);
        } else {
            sum2 += model.marginal2().sample_sum(len, &mut tail_rng);
        }
    }
    let x1bar = sum1 / point.n1() as f64;
    let x2bar = sum2 / point.n2() as f64;
    let m1 = model.marginal1();
    let m2 = model.marginal2();
    let y1 = (point.n1() as f64).sqrt() * (x1bar - m1.mu()) / m1.sigma();
    let y2 = (point.n2() as f64).sqrt() * (x2bar - m2.mu()) / m2.sigma();
    let d = (m1.sigma() * m1.sigma() / point.n1() as f64
        + m2.sigma() * m2.sigma() / point.n2() as f64)
        .sqrt();
    let w = ((x1bar - m1.mu()) - (x2bar - m2.mu())) / d;
    let u = ((x1bar - m1.mu()) + (x2bar - m2.mu())) / d;
    PairStat { y1, y2, w_hat: w, u_hat: u }
}
