//! Simulation laboratory for the joint asymptotic normality of standardized
//! sample means drawn from two samples whose sizes vary independently.
//!
//! The crate builds every computable object of that problem:
//!
//! * [`models`] — generative bivariate sequence models with a per-index
//!   correlation schedule, including a dependent-but-uncorrelated pair.
//! * [`netpath`] — two-dimensional sample-size indices `(n1, n2)` and finite
//!   paths whose size ratio tends to a declared limit `kappa` in `[0, inf]`.
//! * [`stats`] — standardized means, Cesaro-averaged cross correlations,
//!   the difference/sum statistics `w_hat`/`u_hat` and their weight vectors.
//! * [`charfn`] — analytic and empirical characteristic functions, the
//!   marginal power identity, the three-term CF decomposition over unequal
//!   sample sizes, and the Taylor remainder bound for `exp(i*theta)`.
//! * [`lindeberg`] — truncated-second-moment functionals with exact, quadrature
//!   and Monte Carlo evaluation paths.
//! * [`convergence`] — CF sup-distance, Kolmogorov-Smirnov and energy-distance
//!   diagnostics that score a replication batch against its limit law.
//!
//! All randomness flows through explicit seeds (see [`rng`]); identical seeds
//! give bit-identical results regardless of worker count.

pub mod charfn;
pub mod convergence;
pub mod error;
pub mod lindeberg;
pub mod models;
pub mod netpath;
pub mod rng;
pub mod stats;

pub use charfn::{CfGrid, EmpiricalCf};
pub use convergence::{AssessParams, ConvergenceReport};
pub use error::{Error, Result};
pub use lindeberg::{LindebergReport, ProjectionSpec};
pub use models::{CorrelationSchedule, MarginalFamily, MarginalSpec, PairModel};
pub use netpath::{NetPath, NetPoint, PathKind, RatioLimit};
pub use stats::{PairStat, ReplicationBatch};
