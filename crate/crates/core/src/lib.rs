//! Distributed multi-sensor multi-target tracking with labeled random finite sets.
//!
//! The crate is organised bottom-up:
//!
//! * [`label`], [`gaussian`] and [`density`] hold the shared domain types and the
//!   Gaussian-mixture algebra (products, exponentiation, reduction).
//! * [`assignment`] provides a rectangular Hungarian solver and Murty's ranked
//!   assignment on top of it.
//! * [`filter`] is the local labeled multi-Bernoulli (LMB) filter run by each sensor.
//! * [`matching`] extracts per-label Bernoulli marginals, scores label pairs with the
//!   Rényi divergence and solves the label-space matching between two sensors.
//! * [`fusion`] performs generalized covariance intersection (GCI) on matched label
//!   spaces and iterates it over a sensor network.
//! * [`ospa`] and [`oracle`] are the evaluation metric and the brute-force reference
//!   implementations used to check everything above.

pub mod assignment;
pub mod density;
pub mod error;
pub mod filter;
pub mod fusion;
pub mod gaussian;
pub mod label;
pub mod matching;
pub mod oracle;
pub mod ospa;

pub use density::{BernoulliTrack, Hypothesis, LmbDensity, MdGlmbDensity};
pub use error::{Error, Result};
pub use gaussian::{GaussianComponent, GaussianMixture, ReductionParams, ScaledMixture};
pub use label::Label;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Numerically stable `log(sum(exp(x)))`. Returns `-inf` for an empty or all `-inf` input.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}
