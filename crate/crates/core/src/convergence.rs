//! Distance diagnostics between a replication batch and its limit law:
//! sup-distance between characteristic functions on a grid, exact-law
//! Kolmogorov-Smirnov statistics, and a two-sample energy statistic with a
//! permutation-calibrated threshold.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::charfn::{cf_psi_rho, CfGrid, EmpiricalCf};
use crate::error::{Error, Result};
use crate::netpath::NetPoint;
use crate::rng::{self, tag};
use crate::stats::{rho_star_at, ReplicationBatch};

/// CDF of the centered normal law with variance `theta > 0`.
pub fn normal_cdf(x: f64, theta: f64) -> f64 {
    0.5 * libm::erfc(-x / (2.0 * theta).sqrt())
}

/// Sup over the grid of `|empirical value - psi_rho|`.
pub fn cf_sup_distance(emp: &EmpiricalCf, rho: f64) -> f64 {
    assert!(rho.abs() <= 1.0, "correlation must lie in [-1, 1]");
    emp.iter()
        .map(|((s, t), v)| {
            let target = cf_psi_rho(s, t, rho).expect("rho checked above");
            (v - target).norm()
        })
        .fold(0.0, f64::max)
}

/// Kolmogorov-Smirnov statistic of `values` against the centered normal law
/// with variance `theta`. `theta = 0` is scored against the point mass at 0.
pub fn ks_statistic(values: &[f64], theta: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("KS input".into()));
    }
    if !(theta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be nonnegative, got {theta}"
        )));
    }
    let n = values.len() as f64;
    if theta == 0.0 {
        let below = values.iter().filter(|v| **v < 0.0).count() as f64;
        let at_or_below = values.iter().filter(|v| **v <= 0.0).count() as f64;
        return Ok((below / n).max(1.0 - at_or_below / n));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let mut d = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x, theta);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample energy statistic (V-statistic convention, so a sample against
/// itself scores exactly 0):
/// `2*mean|A-B| - mean|A-A'| - mean|B-B'|`.
pub fn energy_statistic(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let (ax, ay): (Vec<f64>, Vec<f64>) = a.iter().copied().unzip();
    let (bx, by): (Vec<f64>, Vec<f64>) = b.iter().copied().unzip();
    energy_from_columns(&ax, &ay, &bx, &by)
}

fn mean_cross(ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    let mut sum = 0.0;
    for i in 0..ax.len() {
        let (xi, yi) = (ax[i], ay[i]);
        let mut row = 0.0;
        for j in 0..bx.len() {
            let dx = xi - bx[j];
            let dy = yi - by[j];
            row += (dx * dx + dy * dy).sqrt();
        }
        sum += row;
    }
    sum / (ax.len() as f64 * bx.len() as f64)
}

fn mean_within(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let mut sum = 0.0;
    for i in 0..n {
        let (xi, yi) = (x[i], y[i]);
        let mut row = 0.0;
        for j in (i + 1)..n {
            let dx = xi - x[j];
            let dy = yi - y[j];
            row += (dx * dx + dy * dy).sqrt();
        }
        sum += row;
    }
    2.0 * sum / (n as f64 * n as f64)
}

fn energy_from_columns(ax: &[f64], ay: &[f64], bx: &[f64], by: &[f64]) -> f64 {
    2.0 * mean_cross(ax, ay, bx, by) - mean_within(ax, ay) - mean_within(bx, by)
}

/// Controls for the energy permutation test.
#[derive(Debug, Clone, Copy)]
pub struct EnergyParams {
    pub permutations: usize,
    /// Each sample is subsampled to at most this many points.
    pub cap: usize,
    /// Quantile of the permutation distribution used as the threshold.
    pub quantile: f64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        Self { permutations: 200, cap: 5000, quantile: 0.99 }
    }
}

/// Result of the permutation-calibrated energy test.
#[derive(Debug, Clone, Copy)]
pub struct EnergyOutcome {
    pub statistic: f64,
    pub threshold: f64,
    pub n_per_sample: usize,
}

/// Energy statistic between `samples` and a fresh equal-size reference sample
/// from the bivariate normal law with correlation `rho`.
pub fn energy_distance(samples: &[(f64, f64)], rho: f64, seed: u64) -> Result<f64> {
    let (batch, reference) = energy_inputs(samples, rho, usize::MAX, seed)?;
    Ok(energy_statistic(&batch, &reference))
}

/// Energy statistic plus its permutation-quantile threshold.
///
/// Permutations run in parallel; each derives its shuffle from
/// `(seed, permutation index)`, so the threshold is worker-count independent.
pub fn energy_permutation_test(
    samples: &[(f64, f64)],
    rho: f64,
    params: &EnergyParams,
    seed: u64,
) -> Result<EnergyOutcome> {
    let (batch, reference) = energy_inputs(samples, rho, params.cap, seed)?;
    let k = batch.len();
    let mut pool_x = Vec::with_capacity(2 * k);
    let mut pool_y = Vec::with_capacity(2 * k);
    for &(x, y) in batch.iter().chain(reference.iter()) {
        pool_x.push(x);
        pool_y.push(y);
    }
    let statistic = energy_from_columns(&pool_x[..k], &pool_y[..k], &pool_x[k..], &pool_y[k..]);

    let mut perms: Vec<f64> = (0..params.permutations as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = rng::stream(seed, &[tag::PERMUTATION, p]);
            let mut idx: Vec<usize> = (0..2 * k).collect();
            // Fisher-Yates with the derived stream.
            for i in (1..idx.len()).rev() {
                let j = rng.gen_range(0..=i);
                idx.swap(i, j);
            }
            let px: Vec<f64> = idx.iter().map(|&i| pool_x[i]).collect();
            let py: Vec<f64> = idx.iter().map(|&i| pool_y[i]).collect();
            energy_from_columns(&px[..k], &py[..k], &px[k..], &py[k..])
        })
        .collect();
    perms.sort_unstable_by(f64::total_cmp);
    let rank = ((params.quantile * params.permutations as f64).ceil() as usize)
        .clamp(1, params.permutations);
    Ok(EnergyOutcome {
        statistic,
        threshold: perms[rank - 1],
        n_per_sample: k,
    })
}

fn energy_inputs(
    samples: &[(f64, f64)],
    rho: f64,
    cap: usize,
    seed: u64,
) -> Result<(Vec<(f64, f64)>, Vec<(f64, f64)>)> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter(
            "energy distance needs at least 2 samples".into(),
        ));
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    let batch: Vec<(f64, f64)> = if samples.len() > cap {
        let mut rng = rng::stream(seed, &[tag::SUBSAMPLE]);
        rand::seq::index::sample(&mut rng, samples.len(), cap)
            .iter()
            .map(|i| samples[i])
            .collect()
    } else {
        samples.to_vec()
    };
    let mut rng = rng::stream(seed, &[tag::REFERENCE]);
    let root = (1.0 - rho * rho).sqrt();
    let reference: Vec<(f64, f64)> = (0..batch.len())
        .map(|_| {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            (z1, rho * z1 + root * z2)
        })
        .collect();
    Ok((batch, reference))
}

/// Inputs for [`assess`]: true model scales, the CF grid, thresholds, energy
/// controls, and the seed for reference/permutation streams.
#[derive(Debug, Clone)]
pub struct AssessParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub grid: CfGrid,
    pub cf_sup_threshold: f64,
    /// KS threshold is `ks_coefficient / sqrt(R)`.
    pub ks_coefficient: f64,
    pub energy: EnergyParams,
    pub seed: u64,
}

impl AssessParams {
    pub fn standard(seed: u64) -> Self {
        Self {
            sigma1: 1.0,
            sigma2: 1.0,
            grid: CfGrid::default_lattice(),
            cf_sup_threshold: 0.03,
            ks_coefficient: 1.63,
            energy: EnergyParams::default(),
            seed,
        }
    }
}

/// Distances of one batch from its target laws, with per-criterion verdicts.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub point: NetPoint,
    pub target_rho: f64,
    /// Variance of the difference-statistic target law.
    pub theta_w: f64,
    /// Variance of the sum-statistic target law.
    pub theta_u: f64,
    pub cf_sup_dist: f64,
    pub ks_w: f64,
    pub ks_u: f64,
    pub energy_dist: f64,
    pub energy_threshold: f64,
    pub cf_threshold: f64,
    pub ks_threshold: f64,
    pub pass_cf: bool,
    pub pass_ks_w: bool,
    pub pass_ks_u: bool,
    pub pass_energy: bool,
}

impl ConvergenceReport {
    /// All four criteria at once.
    pub fn pass(&self) -> bool {
        self.pass_cf && self.pass_ks_w && self.pass_ks_u && self.pass_energy
    }
}

/// Scores a batch against the bivariate normal law with correlation
/// `target_rho`; the difference/sum statistics are scored against the
/// centered normal laws whose variances `1 -/+ c(e) * target_rho` follow from
/// the batch's size ratio (`c(1)` is the diagonal correlation transfer
/// coefficient, and `target_rho = 0` gives the standard normal law).
pub fn assess(
    batch: &ReplicationBatch,
    target_rho: f64,
    params: &AssessParams,
) -> Result<ConvergenceReport> {
    assess_detailed(batch, target_rho, params).map(|(report, _)| report)
}

/// Like [`assess`] but also returns the empirical CF for artifact output.
pub fn assess_detailed(
    batch: &ReplicationBatch,
    target_rho: f64,
    params: &AssessParams,
) -> Result<(ConvergenceReport, EmpiricalCf)> {
    if batch.is_empty() {
        return Err(Error::EmptySample);
    }
    let point = batch.point();
    let ys = batch.y_pairs();
    let emp = crate::charfn::empirical_cf(&ys, &params.grid)?;
    let cf_sup = cf_sup_distance(&emp, target_rho);

    let transfer = rho_star_at(target_rho, params.sigma1, params.sigma2, point.e());
    let theta_w = 1.0 - transfer;
    let theta_u = 1.0 + transfer;
    let ks_w = ks_statistic(&batch.w_values(), theta_w.max(0.0))?;
    let ks_u = ks_statistic(&batch.u_values(), theta_u.max(0.0))?;
    let ks_threshold = params.ks_coefficient / (batch.len() as f64).sqrt();

    let energy = energy_permutation_test(&ys, target_rho, &params.energy, params.seed)?;

    let report = ConvergenceReport {
        point,
        target_rho,
        theta_w,
        theta_u,
        cf_sup_dist: cf_sup,
        ks_w,
        ks_u,
        energy_dist: energy.statistic,
        energy_threshold: energy.threshold,
        cf_threshold: params.cf_sup_threshold,
        ks_threshold,
        pass_cf: cf_sup <= params.cf_sup_threshold,
        pass_ks_w: ks_w <= ks_threshold,
        pass_ks_u: ks_u <= ks_threshold,
        pass_energy: energy.statistic <= energy.threshold,
    };
    Ok((report, emp))
}
