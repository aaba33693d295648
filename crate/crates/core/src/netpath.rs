//! Sample-size indices `(n1, n2)` and finite paths through the index set.
//!
//! A full two-dimensional net is not enumerable, so convergence "along the
//! net" is probed along several finite paths whose size ratio `e = n1/n2`
//! tends to a declared limit `kappa`, plus the diagonal.

use crate::error::{Error, Result};

/// Largest coordinate a generated path point may reach.
pub const SIZE_BUDGET: u64 = 1_000_000_000;

/// Relative tolerance on `|e - kappa|` at the end of a path with a finite
/// positive limit.
pub const KAPPA_REL_TOL: f64 = 0.05;
/// A path declaring `kappa = 0` must end with `e` at or below this value.
pub const KAPPA_ZERO_MAX: f64 = 0.05;
/// A path declaring `kappa = inf` must end with `e` at or above this value.
pub const KAPPA_INF_MIN: f64 = 20.0;

/// One index of the double sequence: a pair of sample sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NetPoint {
    n1: u64,
    n2: u64,
}

impl NetPoint {
    /// Builds an index point; both sizes must be at least 1.
    pub fn new(n1: u64, n2: u64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "sample sizes must be positive, got ({n1}, {n2})"
            )));
        }
        Ok(Self { n1, n2 })
    }

    pub fn n1(&self) -> u64 {
        self.n1
    }

    pub fn n2(&self) -> u64 {
        self.n2
    }

    /// Size ratio `e = n1 / n2`.
    pub fn e(&self) -> f64 {
        self.n1 as f64 / self.n2 as f64
    }

    /// `min(n1, n2)` — the number of genuinely paired observations.
    pub fn n_min(&self) -> u64 {
        self.n1.min(self.n2)
    }

    pub fn n_max(&self) -> u64 {
        self.n1.max(self.n2)
    }

    /// Geometric mean `sqrt(n1 * n2)`, the normalizer of the Cesaro-averaged
    /// cross correlation.
    pub fn m_geom(&self) -> f64 {
        (self.n1 as f64 * self.n2 as f64).sqrt()
    }

    /// Indicator of `n1 > n2`.
    pub fn j12(&self) -> u8 {
        u8::from(self.n1 > self.n2)
    }

    /// Indicator of `n1 < n2`.
    pub fn j21(&self) -> u8 {
        u8::from(self.n1 < self.n2)
    }
}

/// Declared limit of the size ratio along a path, valued in `[0, inf]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RatioLimit {
    Zero,
    Finite(f64),
    Infinity,
}

impl std::fmt::Display for RatioLimit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RatioLimit::Zero => write!(f, "0"),
            RatioLimit::Finite(v) => write!(f, "{v}"),
            RatioLimit::Infinity => write!(f, "inf"),
        }
    }
}

/// Path generators over the index set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathKind {
    /// `(k*scale, k*scale)`; ratio limit 1.
    Diagonal,
    /// `(p*k*scale, q*k*scale)`; ratio limit `p/q`.
    FixedRatio { p: u64, q: u64 },
    /// `(k*scale, ceil((k*scale)^gamma))`; ratio limit 0 for `gamma > 1`,
    /// infinity for `gamma < 1`.
    Power { gamma: f64 },
}

impl PathKind {
    pub fn name(&self) -> &'static str {
        match self {
            PathKind::Diagonal => "diagonal",
            PathKind::FixedRatio { .. } => "fixed_ratio",
            PathKind::Power { .. } => "power",
        }
    }
}

/// A finite path through the index set with a declared ratio limit.
#[derive(Debug, Clone, PartialEq)]
pub struct NetPath {
    points: Vec<NetPoint>,
    kappa: RatioLimit,
}

impl NetPath {
    /// Wraps explicit points, checking that the ratio actually approaches the
    /// declared limit: the last quartile of points must sit within tolerance
    /// for a finite limit; for the endpoints 0 and infinity the ratio must be
    /// monotone toward the endpoint and past the regime threshold at the end.
    pub fn from_points(points: Vec<NetPoint>, kappa: RatioLimit) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidParameter(
                "a path needs at least 2 points".into(),
            ));
        }
        let es: Vec<f64> = points.iter().map(NetPoint::e).collect();
        match kappa {
            RatioLimit::Finite(k) => {
                if !(k.is_finite() && k > 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "finite ratio limit must be positive, got {k}"
                    )));
                }
                let tail_start = points.len() - points.len().div_ceil(4);
                for &e in &es[tail_start..] {
                    if (e - k).abs() > KAPPA_REL_TOL * k {
                        return Err(Error::InvalidParameter(format!(
                            "ratio {e} misses declared limit {k} beyond tolerance"
                        )));
                    }
                }
            }
            RatioLimit::Zero => {
                if es.windows(2).any(|w| w[1] > w[0]) || *es.last().unwrap() > KAPPA_ZERO_MAX {
                    return Err(Error::InvalidParameter(
                        "ratio must decrease monotonically to the kappa = 0 regime".into(),
                    ));
                }
            }
            RatioLimit::Infinity => {
                if es.windows(2).any(|w| w[1] < w[0]) || *es.last().unwrap() < KAPPA_INF_MIN {
                    return Err(Error::InvalidParameter(
                        "ratio must increase monotonically to the kappa = inf regime".into(),
                    ));
                }
            }
        }
        Ok(Self { points, kappa })
    }

    /// Generates a path of `length` points from one of the built-in kinds.
    pub fn make(kind: PathKind, length: u64, scale: u64) -> Result<Self> {
        if length < 2 {
            return Err(Error::InvalidParameter(format!(
                "path length must be at least 2, got {length}"
            )));
        }
        if scale == 0 {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        let mut points = Vec::with_capacity(length as usize);
        let kappa = match kind {
            PathKind::Diagonal => {
                for k in 1..=length {
                    points.push(budgeted(k * scale, k * scale)?);
                }
                RatioLimit::Finite(1.0)
            }
            PathKind::FixedRatio { p, q } => {
                if p == 0 || q == 0 {
                    return Err(Error::InvalidParameter(
                        "fixed-ratio components must be positive".into(),
                    ));
                }
                for k in 1..=length {
                    points.push(budgeted(p * k * scale, q * k * scale)?);
                }
                RatioLimit::Finite(p as f64 / q as f64)
            }
            PathKind::Power { gamma } => {
                if !(gamma.is_finite() && gamma > 0.0) || gamma == 1.0 {
                    return Err(Error::InvalidParameter(format!(
                        "power exponent must be positive and != 1, got {gamma}"
                    )));
                }
                for k in 1..=length {
                    let n1 = k * scale;
                    let n2f = (n1 as f64).powf(gamma).ceil();
                    if !(n2f >= 1.0 && n2f <= SIZE_BUDGET as f64) {
                        return Err(Error::SizeBudget(format!(
                            "({n1})^{gamma} = {n2f} exceeds {SIZE_BUDGET}"
                        )));
                    }
                    points.push(budgeted(n1, n2f as u64)?);
                }
                if gamma > 1.0 {
                    RatioLimit::Zero
                } else {
                    RatioLimit::Infinity
                }
            }
        };
        Self::from_points(points, kappa)
    }

    pub fn points(&self) -> &[NetPoint] {
        &self.points
    }

    pub fn kappa(&self) -> RatioLimit {
        self.kappa
    }

    pub fn final_point(&self) -> NetPoint {
        *self.points.last().expect("paths have at least 2 points")
    }
}

fn budgeted(n1: u64, n2: u64) -> Result<NetPoint> {
    if n1 > SIZE_BUDGET || n2 > SIZE_BUDGET {
        return Err(Error::SizeBudget(format!("({n1}, {n2})")));
    }
    NetPoint::new(n1, n2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn derived_fields_match_definitions() {
        let p = NetPoint::new(5, 3).unwrap();
        assert_relative_eq!(p.e(), 5.0 / 3.0, max_relative = 1e-15);
        assert_eq!(p.n_min(), 3);
        assert_relative_eq!(p.m_geom(), 15f64.sqrt(), max_relative = 1e-15);
        assert_relative_eq!(p.m_geom(), 3.8729833462074170, max_relative = 1e-12);
        assert_eq!((p.j12(), p.j21()), (1, 0));

        let diag = NetPoint::new(4, 4).unwrap();
        assert_eq!(diag.e(), 1.0);
        assert_eq!((diag.j12(), diag.j21()), (0, 0));
    }

    #[test]
    fn min_over_geom_is_root_of_min_over_max() {
        let p = NetPoint::new(2, 8).unwrap();
        let ratio = p.n_min() as f64 / p.m_geom();
        assert_relative_eq!(ratio, 0.5, max_relative = 1e-15);
        assert_relative_eq!(ratio, (2f64 / 8.0).sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn rejects_zero_sizes() {
        assert!(NetPoint::new(0, 3).is_err());
        assert!(NetPoint::new(3, 0).is_err());
    }

    #[test]
    fn diagonal_path_matches_example() {
        let path = NetPath::make(PathKind::Diagonal, 3, 100).unwrap();
        let sizes: Vec<(u64, u64)> = path.points().iter().map(|p| (p.n1(), p.n2())).collect();
        assert_eq!(sizes, vec![(100, 100), (200, 200), (300, 300)]);
        assert_eq!(path.kappa(), RatioLimit::Finite(1.0));
    }

    #[test]
    fn fixed_ratio_path_matches_example() {
        let path = NetPath::make(PathKind::FixedRatio { p: 2, q: 1 }, 2, 50).unwrap();
        let sizes: Vec<(u64, u64)> = path.points().iter().map(|p| (p.n1(), p.n2())).collect();
        assert_eq!(sizes, vec![(100, 50), (200, 100)]);
        assert_eq!(path.kappa(), RatioLimit::Finite(2.0));
    }

    #[test]
    fn power_path_matches_example() {
        let path = NetPath::make(PathKind::Power { gamma: 2.0 }, 3, 10).unwrap();
        let last = path.final_point();
        assert_eq!((last.n1(), last.n2()), (30, 900));
        assert_relative_eq!(last.e(), 1.0 / 30.0, max_relative = 1e-15);
        assert_eq!(path.kappa(), RatioLimit::Zero);
    }

    #[test]
    fn power_path_with_small_exponent_declares_infinity() {
        let path = NetPath::make(PathKind::Power { gamma: 0.5 }, 3, 300_000).unwrap();
        assert_eq!(path.kappa(), RatioLimit::Infinity);
        assert!(path.final_point().e() >= KAPPA_INF_MIN);
    }

    #[test]
    fn size_budget_is_enforced() {
        let err = NetPath::make(PathKind::Power { gamma: 2.0 }, 2, 40_000).unwrap_err();
        assert!(matches!(err, Error::SizeBudget(_)));
    }

    #[test]
    fn from_points_rejects_ratio_drift() {
        let pts = vec![NetPoint::new(10, 10).unwrap(), NetPoint::new(30, 20).unwrap()];
        assert!(NetPath::from_points(pts, RatioLimit::Finite(1.0)).is_err());
    }

    #[test]
    fn short_power_path_misses_zero_regime() {
        // e = 1/(k*scale) ends at 1/4 > 0.05: not yet in the kappa = 0 regime.
        let err = NetPath::make(PathKind::Power { gamma: 2.0 }, 2, 2).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }
}
