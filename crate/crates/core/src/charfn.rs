//! Characteristic-function machinery: analytic CFs of the limit laws,
//! empirical CFs on a plane lattice, marginal CF powers, the three-term
//! decomposition of the joint CF over unequal sample sizes, and the Taylor
//! remainder bound for `exp(i*theta)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{PairModel, PairVariant};
use crate::netpath::NetPoint;

/// CF of the standard normal law: `exp(-u^2/2)` (real-valued).
pub fn cf_zeta(u: f64) -> f64 {
    (-0.5 * u * u).exp()
}

/// CF of the bivariate normal law with standard margins and correlation
/// `rho`: `exp(-(s^2 + 2*s*t*rho + t^2)/2)` (real-valued).
pub fn cf_psi_rho(s: f64, t: f64, rho: f64) -> Result<f64> {
    if !(rho.abs() <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "correlation must lie in [-1, 1], got {rho}"
        )));
    }
    Ok((-0.5 * (s * s + 2.0 * s * t * rho + t * t)).exp())
}

/// CF of the centered normal law with variance `theta`; `theta = 0` is the
/// point mass at 0, with CF identically 1.
pub fn cf_normal_theta(u: f64, theta: f64) -> Result<f64> {
    if !(theta >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "variance must be nonnegative, got {theta}"
        )));
    }
    Ok((-0.5 * theta * u * u).exp())
}

/// `z^n` for nonnegative integer `n`, stable for large `n`.
///
/// Real bases keep the sign exact (`sign^n * exp(n*ln|z|)`); complex bases go
/// through the principal logarithm, which is accurate here because every use
/// site evaluates the CF near its value 1 at small arguments.
pub fn complex_powu(z: Complex64, n: u64) -> Complex64 {
    if n == 0 {
        return Complex64::new(1.0, 0.0);
    }
    if z.im == 0.0 {
        if z.re == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mag = (n as f64 * z.re.abs().ln()).exp();
        let sign = if z.re < 0.0 && n % 2 == 1 { -1.0 } else { 1.0 };
        return Complex64::new(sign * mag, 0.0);
    }
    (z.ln() * n as f64).exp()
}

/// `[psi(u/sqrt(n))]^n` — the CF of a standardized mean of `n` iid terms
/// with standardized-term CF `psi`.
pub fn cf_marginal_power(psi: impl Fn(f64) -> Complex64, n: u64, u: f64) -> Complex64 {
    assert!(n >= 1, "power index must be at least 1");
    complex_powu(psi(u / (n as f64).sqrt()), n)
}

/// Finite evaluation lattice in the plane. Always contains the origin and
/// holds no duplicate points.
#[derive(Debug, Clone, PartialEq)]
pub struct CfGrid {
    points: Vec<(f64, f64)>,
}

impl CfGrid {
    /// Symmetric `per_axis x per_axis` lattice on `[-half_width, half_width]^2`.
    /// `per_axis` must be odd so the lattice contains the origin.
    pub fn lattice(half_width: f64, per_axis: usize) -> Result<Self> {
        if !(half_width > 0.0) || per_axis < 3 || per_axis % 2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "lattice needs positive width and odd per_axis >= 3, got ({half_width}, {per_axis})"
            )));
        }
        let step = 2.0 * half_width / (per_axis - 1) as f64;
        let coord = |i: usize| -half_width + step * i as f64;
        let mut points = Vec::with_capacity(per_axis * per_axis);
        for i in 0..per_axis {
            for j in 0..per_axis {
                // Snap the middle index to exactly 0.
                let s = if 2 * i == per_axis - 1 { 0.0 } else { coord(i) };
                let t = if 2 * j == per_axis - 1 { 0.0 } else { coord(j) };
                points.push((s, t));
            }
        }
        Self::from_points(points)
    }

    /// Default lattice: 13 x 13 on `[-3, 3]^2`.
    pub fn default_lattice() -> Self {
        Self::lattice(3.0, 13).expect("default lattice parameters are valid")
    }

    pub fn from_points(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("grid must be nonempty".into()));
        }
        if !points.iter().any(|&(s, t)| s == 0.0 && t == 0.0) {
            return Err(Error::InvalidParameter("grid must contain the origin".into()));
        }
        let mut sorted: Vec<(u64, u64)> = points
            .iter()
            .map(|&(s, t)| (s.to_bits(), t.to_bits()))
            .collect();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("grid contains duplicate points".into()));
        }
        if points.iter().any(|&(s, t)| !s.is_finite() || !t.is_finite()) {
            return Err(Error::NonFinite("grid point".into()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Empirical CF values on a grid.
#[derive(Debug, Clone)]
pub struct EmpiricalCf {
    grid: CfGrid,
    values: Vec<Complex64>,
    n_samples: usize,
}

impl EmpiricalCf {
    pub fn grid(&self) -> &CfGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn iter(&self) -> impl Iterator<Item = ((f64, f64), Complex64)> + '_ {
        self.grid.points.iter().copied().zip(self.values.iter().copied())
    }

    /// Value at an exact grid point, if present.
    pub fn value_at(&self, s: f64, t: f64) -> Option<Complex64> {
        self.grid
            .points
            .iter()
            .position(|&(a, b)| a == s && b == t)
            .map(|i| self.values[i])
    }

    /// Tabulates an analytic CF on a grid. Diagnostic helper: lets distance
    /// code be self-tested against a noise-free "empirical" CF.
    pub fn from_function(grid: &CfGrid, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let values = grid.points.iter().map(|&(s, t)| f(s, t)).collect();
        Self { grid: grid.clone(), values, n_samples: 0 }
    }
}

/// Empirical CF `(1/R) * sum exp(i(s*y1 + t*y2))` of a sample on a grid.
///
/// Grid points are evaluated in parallel; the summation order over samples is
/// fixed per grid point, so the result does not depend on worker count.
pub fn empirical_cf(samples: &[(f64, f64)], grid: &CfGrid) -> Result<EmpiricalCf> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    if samples.iter().any(|&(a, b)| !a.is_finite() || !b.is_finite()) {
        return Err(Error::NonFinite("sample for empirical CF".into()));
    }
    let r = samples.len() as f64;
    let values: Vec<Complex64> = grid
        .points
        .par_iter()
        .map(|&(s, t)| {
            let mut re = 0.0;
            let mut im = 0.0;
            for &(y1, y2) in samples {
                let (sin, cos) = (s * y1 + t * y2).sin_cos();
                re += cos;
                im += sin;
            }
            Complex64::new(re / r, im / r)
        })
        .collect();
    Ok(EmpiricalCf {
        grid: grid.clone(),
        values,
        n_samples: samples.len(),
    })
}

/// The three terms of the joint-CF decomposition over unequal sample sizes.
/// Exactly one term is active at any index point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfDecomposition {
    pub term1: Complex64,
    pub term2: Complex64,
    pub term3: Complex64,
}

impl CfDecomposition {
    pub fn sum(&self) -> Complex64 {
        self.term1 + self.term2 + self.term3
    }
}

/// Decomposes the joint CF at `point` into the equal-size block plus the
/// surplus marginal power of the longer sample:
///
/// * `n1 = n2`: the diagonal CF itself;
/// * `n1 > n2`: `psi_diag(n2, (e^{-1/2} s, t)) * [psi1(s/sqrt(n1))]^(n1-n2)`;
/// * `n1 < n2`: `psi_diag(n1, (s, e^{1/2} t)) * [psi2(t/sqrt(n2))]^(n2-n1)`.
///
/// `joint_diag_cf(k, a, b)` must supply the joint CF of the standardized mean
/// pair over the first `k` indices; `psi1`/`psi2` are the standardized
/// marginal CFs.
pub fn cf_decomposition(
    point: NetPoint,
    joint_diag_cf: impl Fn(u64, f64, f64) -> Complex64,
    psi1: impl Fn(f64) -> Complex64,
    psi2: impl Fn(f64) -> Complex64,
    s: f64,
    t: f64,
) -> CfDecomposition {
    let zero = Complex64::new(0.0, 0.0);
    let e = point.e();
    let n1 = point.n1();
    let n2 = point.n2();
    let surplus = point.n_max() - point.n_min();
    let term1 = if point.j12() == 0 && point.j21() == 0 {
        joint_diag_cf(n1, s, t)
    } else {
        zero
    };
    let term2 = if point.j12() == 1 {
        joint_diag_cf(n2, s / e.sqrt(), t)
            * complex_powu(psi1(s / (n1 as f64).sqrt()), surplus)
    } else {
        zero
    };
    let term3 = if point.j21() == 1 {
        joint_diag_cf(n1, s, e.sqrt() * t)
            * complex_powu(psi2(t / (n2 as f64).sqrt()), surplus)
    } else {
        zero
    };
    CfDecomposition { term1, term2, term3 }
}

/// Analytic joint CF of the standardized mean pair over the first `k` indices
/// of `model`. Available in closed form for every built-in variant.
pub fn model_joint_diag_cf(model: &PairModel, k: u64, a: f64, b: f64) -> Complex64 {
    assert!(k >= 1);
    let kf = k as f64;
    match model.variant() {
        PairVariant::GaussianIidCorr { .. } | PairVariant::GaussianVaryingSchedule { .. } => {
            let rbar = model.cesaro_mean(k);
            Complex64::new((-0.5 * (a * a + 2.0 * a * b * rbar + b * b)).exp(), 0.0)
        }
        PairVariant::RademacherProduct => {
            let sp = a + b;
            let sm = a - b;
            let x = 0.5 * ((-0.5 * sp * sp / kf).exp() + (-0.5 * sm * sm / kf).exp());
            Complex64::new((kf * x.ln()).exp(), 0.0)
        }
        PairVariant::BoundedRademacherPair { .. } => {
            complex_powu(model.pair_cf(1, a / kf.sqrt(), b / kf.sqrt()), k)
        }
        PairVariant::IndependentNonGaussian => {
            cf_marginal_power(|u| model.marginal1().standardized_cf(u), k, a)
                * cf_marginal_power(|u| model.marginal2().standardized_cf(u), k, b)
        }
    }
}

const MAX_FACTORIAL: usize = 171;

fn factorials() -> [f64; MAX_FACTORIAL] {
    let mut f = [1.0; MAX_FACTORIAL];
    for q in 1..MAX_FACTORIAL {
        f[q] = f[q - 1] * q as f64;
    }
    f
}

/// `(|exp(i*theta) - sum_{q<=m} (i*theta)^q/q!|, |theta|^(m+1)/(m+1)!)`.
///
/// For small `|theta|` the difference is summed as the convergent tail series
/// starting at order `m + 1`; the direct evaluation would be pure cancellation
/// noise there and could spuriously exceed the bound.
pub fn taylor_remainder(theta: f64, m: u32) -> (f64, f64) {
    let fact = factorials();
    let m = m as usize;
    assert!(m + 1 < MAX_FACTORIAL, "order too large");
    let bound = theta.abs().powi(m as i32 + 1) / fact[m + 1];
    let i_theta = Complex64::new(0.0, theta);

    let lhs = if theta.abs() <= 1.0 {
        let mut term = i_theta.powu(m as u32 + 1) / fact[m + 1];
        let mut sum = term;
        let mut q = m + 2;
        while term.norm() > 1e-300 && q < MAX_FACTORIAL {
            term *= i_theta / q as f64;
            sum += term;
            q += 1;
        }
        sum.norm()
    } else {
        let mut partial = Complex64::new(0.0, 0.0);
        let mut pow = Complex64::new(1.0, 0.0);
        for q in 0..=m {
            partial += pow / fact[q];
            pow *= i_theta;
        }
        (Complex64::new(0.0, theta).exp() - partial).norm()
    };
    (lhs, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn zeta_examples() {
        assert_eq!(cf_zeta(0.0), 1.0);
        assert_relative_eq!(cf_zeta(1.0), 0.6065306597126334, max_relative = 1e-15);
        for u in [0.1, 1.7, 3.0] {
            assert_eq!(cf_zeta(u), cf_zeta(-u));
        }
    }

    #[test]
    fn psi_rho_examples() {
        assert_relative_eq!(
            cf_psi_rho(1.0, 1.0, 0.0).unwrap(),
            0.36787944117144233,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            cf_psi_rho(1.0, 1.0, 0.8).unwrap(),
            0.16529888822158656,
            max_relative = 1e-15
        );
        for rho in [-0.9, -0.3, 0.0, 0.5, 1.0] {
            assert_eq!(
                cf_psi_rho(1.0, -1.0, rho).unwrap(),
                cf_psi_rho(1.0, 1.0, -rho).unwrap()
            );
        }
        assert!(cf_psi_rho(0.0, 0.0, 1.2).is_err());
    }

    #[test]
    fn psi_rho_at_zero_correlation_is_product_of_margins() {
        for (s, t) in [(0.3, -2.0), (1.0, 1.0), (2.5, 0.5)] {
            assert_relative_eq!(
                cf_psi_rho(s, t, 0.0).unwrap(),
                cf_zeta(s) * cf_zeta(t),
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn normal_theta_examples() {
        assert_eq!(cf_normal_theta(3.7, 0.0).unwrap(), 1.0);
        for u in [0.0, 0.5, 2.0] {
            assert_eq!(cf_normal_theta(u, 1.0).unwrap(), cf_zeta(u));
        }
        assert_relative_eq!(
            cf_normal_theta(1.0, 0.6).unwrap(),
            0.7408182206817179,
            max_relative = 1e-15
        );
        assert!(cf_normal_theta(1.0, -0.1).is_err());
    }

    #[test]
    fn marginal_power_examples() {
        let rademacher = |u: f64| Complex64::new(u.cos(), 0.0);
        let p = cf_marginal_power(rademacher, 1, std::f64::consts::PI);
        assert_relative_eq!(p.re, -1.0, max_relative = 1e-12);
        assert_eq!(p.im, 0.0);

        let p = cf_marginal_power(rademacher, 1_000_000, 1.0);
        assert!((p.re - 0.6065306597126334).abs() < 1e-3);

        let gaussian = |u: f64| Complex64::new(cf_zeta(u), 0.0);
        for n in [1u64, 10, 1_000_000] {
            for u in [0.5, 1.0, 2.0] {
                let p = cf_marginal_power(gaussian, n, u);
                assert_relative_eq!(p.re, cf_zeta(u), max_relative = 1e-13);
                assert_eq!(p.im, 0.0);
            }
        }
    }

    #[test]
    fn lattice_contains_origin_and_rejects_duplicates() {
        let g = CfGrid::default_lattice();
        assert_eq!(g.len(), 169);
        assert!(g.points().contains(&(0.0, 0.0)));
        assert!(g.points().contains(&(1.0, 1.0)));
        assert!(CfGrid::from_points(vec![(0.0, 0.0), (0.0, 0.0)]).is_err());
        assert!(CfGrid::from_points(vec![(1.0, 1.0)]).is_err());
        assert!(CfGrid::lattice(3.0, 12).is_err());
    }

    #[test]
    fn empirical_cf_of_point_mass_at_origin_is_one() {
        let g = CfGrid::default_lattice();
        let e = empirical_cf(&[(0.0, 0.0)], &g).unwrap();
        assert!(e.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert_eq!(e.value_at(0.0, 0.0), Some(Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn empirical_cf_is_exactly_one_at_origin_and_bounded() {
        let samples: Vec<(f64, f64)> = (0..500)
            .map(|i| ((i as f64 * 0.37).sin() * 2.0, (i as f64 * 0.71).cos()))
            .collect();
        let e = empirical_cf(&samples, &CfGrid::default_lattice()).unwrap();
        assert_eq!(e.value_at(0.0, 0.0), Some(Complex64::new(1.0, 0.0)));
        assert!(e.values().iter().all(|v| v.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn empirical_cf_of_symmetrized_sample_is_real() {
        let base: Vec<(f64, f64)> = (0..200)
            .map(|i| ((i as f64 * 0.13).sin() * 1.5, (i as f64 * 0.29).sin()))
            .collect();
        let mut pooled = base.clone();
        pooled.extend(base.iter().map(|&(a, b)| (-a, -b)));
        let e = empirical_cf(&pooled, &CfGrid::default_lattice()).unwrap();
        assert!(e.values().iter().all(|v| v.im.abs() < 1e-14));
    }

    #[test]
    fn empirical_cf_rejects_bad_samples() {
        let g = CfGrid::default_lattice();
        assert!(empirical_cf(&[], &g).is_err());
        assert!(empirical_cf(&[(f64::NAN, 0.0)], &g).is_err());
    }

    #[test]
    fn decomposition_on_diagonal_is_the_diagonal_cf() {
        let m = PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, 0.4).unwrap();
        let p = NetPoint::new(6, 6).unwrap();
        let d = cf_decomposition(
            p,
            |k, a, b| model_joint_diag_cf(&m, k, a, b),
            |u| m.marginal1().standardized_cf(u),
            |u| m.marginal2().standardized_cf(u),
            0.7,
            -1.1,
        );
        assert_eq!(d.term2, Complex64::new(0.0, 0.0));
        assert_eq!(d.term3, Complex64::new(0.0, 0.0));
        assert_eq!(d.sum(), model_joint_diag_cf(&m, 6, 0.7, -1.1));
    }

    #[test]
    fn decomposition_matches_gaussian_joint_cf() {
        let rho = 0.6;
        let m = PairModel::gaussian_iid_corr(0.0, 1.0, 0.0, 1.0, rho).unwrap();
        let p = NetPoint::new(4, 2).unwrap();
        let (s, t) = (1.0, 1.0);
        let d = cf_decomposition(
            p,
            |k, a, b| model_joint_diag_cf(&m, k, a, b),
            |u| m.marginal1().standardized_cf(u),
            |u| m.marginal2().standardized_cf(u),
            s,
            t,
        );
        let expected =
            (-0.5 * (s * s + t * t) - s * t * rho * (2f64 / 4.0).sqrt()).exp();
        assert_relative_eq!(d.sum().re, expected, max_relative = 1e-12);
        assert!(d.sum().im.abs() < 1e-15);
    }

    #[test]
    fn decomposition_sums_to_one_at_origin() {
        let m = PairModel::rademacher_product();
        for (n1, n2) in [(5u64, 5u64), (9, 2), (3, 14)] {
            let d = cf_decomposition(
                NetPoint::new(n1, n2).unwrap(),
                |k, a, b| model_joint_diag_cf(&m, k, a, b),
                |u| m.marginal1().standardized_cf(u),
                |u| m.marginal2().standardized_cf(u),
                0.0,
                0.0,
            );
            assert_relative_eq!(d.sum().re, 1.0, max_relative = 1e-14);
            assert_eq!(d.sum().im, 0.0);
        }
    }

    #[test]
    fn taylor_examples() {
        assert_eq!(taylor_remainder(0.0, 3), (0.0, 0.0));

        let (lhs, bound) = taylor_remainder(std::f64::consts::PI, 0);
        assert_relative_eq!(lhs, 2.0, max_relative = 1e-14);
        assert_relative_eq!(bound, std::f64::consts::PI, max_relative = 1e-15);
        assert!(lhs <= bound);

        let (lhs, bound) = taylor_remainder(1.0, 1);
        assert_relative_eq!(lhs, 0.4862647206538904, max_relative = 1e-12);
        assert_eq!(bound, 0.5);
        assert!(lhs <= bound);
    }

    #[test]
    fn taylor_lhs_vanishes_as_theta_shrinks() {
        let mut prev = f64::INFINITY;
        for &theta in &[1e-1, 1e-3, 1e-6, 1e-12] {
            let (lhs, bound) = taylor_remainder(theta, 2);
            assert!(lhs <= bound);
            assert!(lhs < prev);
            prev = lhs;
        }
        let (lhs, _) = taylor_remainder(1e-12, 2);
        assert!(lhs < 1e-36);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn taylor_bound_holds(theta in -20f64..20.0, m in 0u32..6) {
            let (lhs, bound) = taylor_remainder(theta, m);
            prop_assert!(lhs <= bound, "lhs {lhs} > bound {bound}");
        }

        #[test]
        fn empirical_cf_norm_bounded(seed in 0u64..1000) {
            let samples: Vec<(f64, f64)> = (0..50)
                .map(|i| {
                    let a = ((seed + i) as f64 * 0.618).fract() * 6.0 - 3.0;
                    let b = ((seed + i) as f64 * 0.382).fract() * 6.0 - 3.0;
                    (a, b)
                })
                .collect();
            let e = empirical_cf(&samples, &CfGrid::default_lattice()).unwrap();
            prop_assert!(e.values().iter().all(|v| v.norm() <= 1.0 + 1e-12));
            // Conjugate symmetry on the symmetric lattice.
            for &(s, t) in e.grid().points() {
                let v = e.value_at(s, t).unwrap();
                let w = e.value_at(-s, -t).unwrap();
                prop_assert!((v - w.conj()).norm() < 1e-12);
            }
        }
    }
}
