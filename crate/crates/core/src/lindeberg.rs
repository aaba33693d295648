//! Truncated-second-moment (Lindeberg) functionals of the projected pair
//! `W_j = s*(X_{1,j}-mu1)/sigma1 + t*(X_{2,j}-mu2)/sigma2`.
//!
//! Expectations are evaluated exactly for finitely supported projections
//! (the bounded pair model), by adaptive quadrature for Gaussian-projection
//! models, and by seeded Monte Carlo with a reported standard error
//! otherwise.

use crate::error::{Error, Result};
use crate::models::{PairModel, PairVariant};
use crate::rng::{self, tag};

/// Direction `(s, t)` of the projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSpec {
    pub s: f64,
    pub t: f64,
}

impl ProjectionSpec {
    pub fn new(s: f64, t: f64) -> Result<Self> {
        if !s.is_finite() || !t.is_finite() {
            return Err(Error::NonFinite(format!("projection ({s}, {t})")));
        }
        Ok(Self { s, t })
    }
}

/// `s^2 + 2*s*t*rho + t^2`; nonnegative whenever `|rho| <= 1`.
pub fn tau_quadratic(s: f64, t: f64, rho: f64) -> f64 {
    s * s + 2.0 * s * t * rho + t * t
}

/// Projected variance along the diagonal: `s^2 + 2*s*t*rho_bar_k + t^2`
/// with `rho_bar_k` the Cesaro mean of the first `k` schedule values.
pub fn tau_k(model: &PairModel, k: u64, s: f64, t: f64) -> f64 {
    assert!(k >= 1);
    tau_quadratic(s, t, model.cesaro_mean(k))
}

/// How an expectation was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    Exact,
    Quadrature,
    MonteCarlo,
}

/// A functional value together with its evaluation route; `std_error` is
/// populated only on the Monte Carlo route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindebergValue {
    pub value: f64,
    pub std_error: Option<f64>,
    pub method: EvalMethod,
}

/// Monte Carlo fallback controls. The default seed is a fixed constant so
/// repeated evaluations are reproducible without caller plumbing.
#[derive(Debug, Clone, Copy)]
pub struct McSettings {
    pub draws: usize,
    pub seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self { draws: 200_000, seed: 0x11de_be26 }
    }
}

/// One row of a Lindeberg sweep: the normalized functional, its
/// un-normalized companion, and the maximal variance share with its bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindebergReport {
    pub k: u64,
    pub epsilon: f64,
    pub tau_k: f64,
    pub l_k: f64,
    pub script_l: f64,
    pub a_k_sq: f64,
    /// `a_k^2 <= epsilon^2 + L_k(epsilon)`.
    pub bound_ok: bool,
}

/// Distribution of the projection `W_j`, grouped so identically distributed
/// indices are evaluated once.
enum ProjectionLaw {
    /// `(value, probability)` atoms.
    PointMasses(Vec<(f64, f64)>),
    /// `(sd, weight)` components of a centered normal mixture.
    NormalMixture(Vec<(f64, f64)>),
    MonteCarlo,
}

fn projection_law(model: &PairModel, rho: f64, s: f64, t: f64) -> ProjectionLaw {
    match model.variant() {
        PairVariant::GaussianIidCorr { .. } | PairVariant::GaussianVaryingSchedule { .. } => {
            ProjectionLaw::NormalMixture(vec![(tau_quadratic(s, t, rho).max(0.0).sqrt(), 1.0)])
        }
        PairVariant::RademacherProduct => ProjectionLaw::NormalMixture(vec![
            ((s + t).abs(), 0.5),
            ((s - t).abs(), 0.5),
        ]),
        PairVariant::BoundedRademacherPair { rho } => {
            let p = (1.0 + rho) / 2.0;
            let q = (1.0 - rho) / 2.0;
            ProjectionLaw::PointMasses(vec![
                (s + t, p / 2.0),
                (-(s + t), p / 2.0),
                (s - t, q / 2.0),
                (-(s - t), q / 2.0),
            ])
        }
        PairVariant::IndependentNonGaussian => ProjectionLaw::MonteCarlo,
    }
}

/// `E[W^2 * 1{|W| > c}]` for one projection law.
fn truncated_second_moment(
    law: &ProjectionLaw,
    c: f64,
    model: &PairModel,
    spec: ProjectionSpec,
    mc: &McSettings,
) -> (f64, Option<f64>, EvalMethod) {
    match law {
        ProjectionLaw::PointMasses(atoms) => {
            let v = atoms
                .iter()
                .filter(|(value, _)| value.abs() > c)
                .map(|(value, prob)| prob * value * value)
                .sum();
            (v, None, EvalMethod::Exact)
        }
        ProjectionLaw::NormalMixture(components) => {
            let mut v = 0.0;
            for &(sd, weight) in components {
                if sd > 0.0 {
                    v += weight * sd * sd * normal_tail_m2(c / sd);
                }
            }
            (v, None, EvalMethod::Quadrature)
        }
        ProjectionLaw::MonteCarlo => {
            let mut rng = rng::stream(mc.seed, &[tag::LINDEBERG_MC]);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for _ in 0..mc.draws {
                let (a, b) = model.draw_pair_standardized(1, &mut rng);
                let w = spec.s * a + spec.t * b;
                let x = if w.abs() > c { w * w } else { 0.0 };
                sum += x;
                sum_sq += x * x;
            }
            let n = mc.draws as f64;
            let mean = sum / n;
            let var = (sum_sq / n - mean * mean).max(0.0);
            (mean, Some((var / n).sqrt()), EvalMethod::MonteCarlo)
        }
    }
}

/// Sums `count * E[W^2 * 1{|W| > c}]` over schedule groups.
fn grouped_sum(
    model: &PairModel,
    spec: ProjectionSpec,
    k: u64,
    c: f64,
    mc: &McSettings,
) -> (f64, Option<f64>, EvalMethod) {
    let mut total = 0.0;
    let mut se_sq = 0.0;
    let mut has_se = false;
    let mut method = EvalMethod::Exact;
    for (rho, count) in model.schedule_groups(k) {
        let law = projection_law(model, rho, spec.s, spec.t);
        let (v, se, m) = truncated_second_moment(&law, c, model, spec, mc);
        total += count as f64 * v;
        if let Some(se) = se {
            se_sq += (count as f64 * se) * (count as f64 * se);
            has_se = true;
        }
        method = m;
    }
    (total, has_se.then(|| se_sq.sqrt()), method)
}

/// Normalized Lindeberg functional
/// `L_k(eps) = sum_{j<=k} E[((k*tau_k)^{-1/2} W_j)^2 * 1{... > eps}]`.
///
/// Undefined when `tau_k = 0`; that case is reported as
/// [`Error::DegenerateDirection`] rather than a crash.
pub fn lindeberg_l(model: &PairModel, spec: ProjectionSpec, k: u64, epsilon: f64) -> Result<LindebergValue> {
    lindeberg_l_with(model, spec, k, epsilon, &McSettings::default())
}

pub fn lindeberg_l_with(
    model: &PairModel,
    spec: ProjectionSpec,
    k: u64,
    epsilon: f64,
    mc: &McSettings,
) -> Result<LindebergValue> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let tau = tau_k(model, k, spec.s, spec.t);
    if tau <= 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let norm = k as f64 * tau;
    let c = epsilon * norm.sqrt();
    let (total, se, method) = grouped_sum(model, spec, k, c, mc);
    Ok(LindebergValue {
        value: total / norm,
        std_error: se.map(|s| s / norm),
        method,
    })
}

/// Un-normalized companion functional
/// `script_L_k(eps, (s,t)) = (1/k) sum_{j<=k} E[W_j^2 * 1{|W_j| > eps*sqrt(k)}]`.
///
/// Satisfies the scaling law
/// `script_L_k(eps, gamma*(s,t)) = gamma^2 * script_L_k(eps/|gamma|, (s,t))`
/// and is subadditive over direction sums.
pub fn script_l(model: &PairModel, spec: ProjectionSpec, k: u64, epsilon: f64) -> LindebergValue {
    script_l_with(model, spec, k, epsilon, &McSettings::default())
}

pub fn script_l_with(
    model: &PairModel,
    spec: ProjectionSpec,
    k: u64,
    epsilon: f64,
    mc: &McSettings,
) -> LindebergValue {
    assert!(epsilon > 0.0, "epsilon must be positive");
    assert!(k >= 1);
    let c = epsilon * (k as f64).sqrt();
    let (total, se, method) = grouped_sum(model, spec, k, c, mc);
    LindebergValue {
        value: total / k as f64,
        std_error: se.map(|s| s / k as f64),
        method,
    }
}

/// Evaluates the maximal variance share `a_k^2 = max_j Var(W_j) / (k tau_k)`
/// and checks it against `eps^2 + L_k(eps)`.
pub fn max_share_bound(
    model: &PairModel,
    spec: ProjectionSpec,
    k: u64,
    epsilon: f64,
) -> Result<LindebergReport> {
    max_share_bound_with(model, spec, k, epsilon, &McSettings::default())
}

pub fn max_share_bound_with(
    model: &PairModel,
    spec: ProjectionSpec,
    k: u64,
    epsilon: f64,
    mc: &McSettings,
) -> Result<LindebergReport> {
    let tau = tau_k(model, k, spec.s, spec.t);
    if tau <= 0.0 {
        return Err(Error::DegenerateDirection);
    }
    let l = lindeberg_l_with(model, spec, k, epsilon, mc)?;
    let script = script_l_with(model, spec, k, epsilon, mc);
    let max_var = model
        .schedule_groups(k)
        .iter()
        .map(|&(rho, _)| tau_quadratic(spec.s, spec.t, rho))
        .fold(0.0f64, f64::max);
    let a_k_sq = max_var / (k as f64 * tau);
    Ok(LindebergReport {
        k,
        epsilon,
        tau_k: tau,
        l_k: l.value,
        script_l: script.value,
        a_k_sq,
        bound_ok: a_k_sq <= epsilon * epsilon + l.value,
    })
}

const FRAC_1_SQRT_2PI: f64 = 0.3989422804014327;

fn normal_pdf(z: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * z * z).exp()
}

/// `integral_{|z| > x} z^2 phi(z) dz` for `x >= 0`, by adaptive Simpson.
/// The integrand underflows past `z ~ 39`, so a 40-wide window is exhaustive.
pub fn normal_tail_m2(x: f64) -> f64 {
    assert!(x >= 0.0, "threshold must be nonnegative");
    if !x.is_finite() {
        return 0.0;
    }
    let f = |z: f64| z * z * normal_pdf(z);
    2.0 * adaptive_simpson(&f, x, x + 40.0, 1e-14)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, m: f64, b: f64) -> f64 {
    (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let whole = simpson(f, a, m, b);
    let abs_tol = rel_tol * whole.abs() + 1e-300;
    simpson_step(f, a, m, b, whole, abs_tol, 52)
}

fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    m: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let left = simpson(f, a, lm, m);
    let right = simpson(f, m, rm, b);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, lm, m, left, tol / 2.0, depth - 1)
        + simpson_step(f, m, rm, b, right, tol / 2.0, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{CorrelationSchedule, MarginalFamily, MarginalSpec};
    use approx::assert_relative_eq;

    fn closed_form_m2(x: f64) -> f64 {
        // 2 * (x*phi(x) + (1 - Phi(x))) via the complementary error function.
        2.0 * (x * normal_pdf(x) + 0.5 * libm::erfc(x / std::f64::consts::SQRT_2))
    }

    #[test]
    fn tau_quadratic_examples() {
        assert_eq!(tau_quadratic(1.0, 1.0, 0.0), 2.0);
        assert_eq!(tau_quadratic(1.0, 1.0, -1.0), 0.0);
        assert_eq!(tau_quadratic(1.0, 2.0, 0.5), 7.0);
    }

    #[test]
    fn tau_k_examples() {
        let alt = PairModel::gaussian_varying(
            0.0,
            1.0,
            0.0,
            1.0,
            CorrelationSchedule::Alternating(0.9),
        )
        .unwrap();
        assert_eq!(tau_k(&alt, 100, 1.0, 1.0), 2.0);

        let m = PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, 0.3).unwrap();
        for k in [1u64, 5, 999] {
            assert_relative_eq!(
                tau_k(&m, k, 0.7, -1.3),
                tau_quadratic(0.7, -1.3, 0.3),
                max_relative = 1e-14
            );
        }
        assert_eq!(tau_k(&m, 10, 0.0, 0.0), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form_tail() {
        assert_relative_eq!(normal_tail_m2(0.0), 1.0, max_relative = 1e-11);
        for x in [0.1, 0.5, 1.0, 2.0, 3.5, 5.0, 8.0] {
            assert_relative_eq!(normal_tail_m2(x), closed_form_m2(x), max_relative = 1e-9);
        }
        assert_eq!(normal_tail_m2(1e9), 0.0);
    }

    #[test]
    fn bounded_projection_is_exactly_zero_past_small_k() {
        let m = PairModel::bounded_rademacher_pair(0.0).unwrap();
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        for k in 3..20 {
            let l = lindeberg_l(&m, spec, k, 1.0).unwrap();
            assert_eq!(l.value, 0.0);
            assert_eq!(l.method, EvalMethod::Exact);
        }
        // k = 1 keeps the whole mass: |W| = 2 > sqrt(2), so L = 1 exactly.
        let l1 = lindeberg_l(&m, spec, 1, 1.0).unwrap();
        assert_relative_eq!(l1.value, 1.0, max_relative = 1e-15);
    }

    #[test]
    fn huge_epsilon_empties_every_route() {
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        let models = [
            PairModel::bounded_rademacher_pair(0.4).unwrap(),
            PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, 0.2).unwrap(),
            PairModel::rademacher_product(),
            PairModel::independent(
                MarginalSpec::standard(MarginalFamily::Exponential),
                MarginalSpec::standard(MarginalFamily::Uniform),
            ),
        ];
        for m in &models {
            assert_eq!(lindeberg_l(m, spec, 50, 1e9).unwrap().value, 0.0);
            assert_eq!(script_l(m, spec, 50, 1e9).value, 0.0);
        }
    }

    #[test]
    fn gaussian_single_direction_matches_tail_oracle() {
        // W = (X1 - mu)/sigma ~ N(0,1); L_100(0.5) = E[Z^2 1{|Z| > 5}].
        let m = PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, 0.0).unwrap();
        let spec = ProjectionSpec::new(1.0, 0.0).unwrap();
        let l = lindeberg_l(&m, spec, 100, 0.5).unwrap();
        assert_eq!(l.method, EvalMethod::Quadrature);
        assert_relative_eq!(l.value, closed_form_m2(5.0), max_relative = 1e-9);
        assert_relative_eq!(l.value, 1.5440498291190047e-5, max_relative = 1e-9);
    }

    #[test]
    fn degenerate_direction_is_a_condition_not_a_panic() {
        let m = PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, -1.0).unwrap();
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        assert_eq!(
            lindeberg_l(&m, spec, 10, 0.5),
            Err(Error::DegenerateDirection)
        );
        assert!(max_share_bound(&m, spec, 10, 0.5).is_err());
    }

    #[test]
    fn scaling_law_is_exact_on_the_bounded_model() {
        let m = PairModel::bounded_rademacher_pair(0.3).unwrap();
        for k in [1u64, 2, 5, 17] {
            for eps in [0.37, 0.9, 1.7] {
                let lhs = script_l(&m, ProjectionSpec::new(2.0, 2.0).unwrap(), k, eps);
                let rhs = script_l(&m, ProjectionSpec::new(1.0, 1.0).unwrap(), k, eps / 2.0);
                assert_eq!(lhs.value, 4.0 * rhs.value);

                let lhs = script_l(&m, ProjectionSpec::new(-2.0, 4.0).unwrap(), k, eps);
                let rhs = script_l(&m, ProjectionSpec::new(-1.0, 2.0).unwrap(), k, eps / 2.0);
                assert_eq!(lhs.value, 4.0 * rhs.value);
            }
        }
    }

    #[test]
    fn subadditivity_on_the_bounded_model() {
        let m = PairModel::bounded_rademacher_pair(0.3).unwrap();
        // (1,1) + (1,-1) = (2,0).
        for k in [1u64, 3, 9] {
            for eps in [0.37, 0.9, 2.1] {
                let lhs = script_l(&m, ProjectionSpec::new(2.0, 0.0).unwrap(), k, eps).value;
                let a = script_l(&m, ProjectionSpec::new(1.0, 1.0).unwrap(), k, eps / 2.0).value;
                let b = script_l(&m, ProjectionSpec::new(1.0, -1.0).unwrap(), k, eps / 2.0).value;
                assert!(lhs <= 4.0 * a + 4.0 * b, "k={k} eps={eps}: {lhs} > {}", 4.0 * a + 4.0 * b);
            }
        }
    }

    #[test]
    fn scaling_identity_at_gamma_one_is_trivial() {
        let m = PairModel::bounded_rademacher_pair(0.2).unwrap();
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        let a = script_l(&m, spec, 7, 0.9);
        let b = script_l(&m, spec, 7, 0.9);
        assert_eq!(a.value, b.value);
    }

    #[test]
    fn functionals_are_nonincreasing_in_epsilon_and_bounded() {
        let models = [
            PairModel::bounded_rademacher_pair(0.5).unwrap(),
            PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, 0.4).unwrap(),
            PairModel::rademacher_product(),
        ];
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        for m in &models {
            let mut prev = f64::INFINITY;
            for eps in [0.05, 0.1, 0.3, 0.8, 1.5, 4.0] {
                let l = lindeberg_l(m, spec, 25, eps).unwrap().value;
                assert!(l <= prev + 1e-15);
                assert!((0.0..=1.0 + 1e-12).contains(&l), "L out of range: {l}");
                prev = l;
            }
        }
    }

    #[test]
    fn max_share_examples() {
        let m = PairModel::bounded_rademacher_pair(0.0).unwrap();
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        let r = max_share_bound(&m, spec, 100, 0.3).unwrap();
        assert_relative_eq!(r.a_k_sq, 0.01, max_relative = 1e-12);
        assert_eq!(r.l_k, 0.0);
        assert!(r.bound_ok);
        assert!(r.a_k_sq <= 0.09);

        let r1 = max_share_bound(&m, spec, 1, 0.3).unwrap();
        assert_relative_eq!(r1.a_k_sq, 1.0, max_relative = 1e-12);
        assert!(r1.bound_ok);

        let g = PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, 0.25).unwrap();
        for k in [10u64, 100] {
            let r = max_share_bound(&g, ProjectionSpec::new(0.5, -1.5).unwrap(), k, 0.4).unwrap();
            assert_relative_eq!(r.a_k_sq, 1.0 / k as f64, max_relative = 1e-12);
            assert!(r.bound_ok);
        }
    }

    #[test]
    fn monte_carlo_route_reports_standard_error() {
        let m = PairModel::independent(
            MarginalSpec::standard(MarginalFamily::Exponential),
            MarginalSpec::standard(MarginalFamily::Uniform),
        );
        let spec = ProjectionSpec::new(1.0, 1.0).unwrap();
        let l = lindeberg_l(&m, spec, 4, 0.5).unwrap();
        assert_eq!(l.method, EvalMethod::MonteCarlo);
        let se = l.std_error.expect("MC reports a standard error");
        assert!(se > 0.0 && l.value > 0.0);
        // Same settings, same value.
        let l2 = lindeberg_l(&m, spec, 4, 0.5).unwrap();
        assert_eq!(l.value, l2.value);
    }
}
