//! Tail-constant computation and p-value correction for the Student one- and
//! two-sample t-, Welch, and F-statistics when the data vector has an
//! arbitrary continuous joint density (non-normal, dependent, or
//! non-homogeneous observations).
//!
//! The central object is the constant `K_g` with `P(T > u) ~ K_g * t(u)` as
//! `u -> infinity`, where `t(u)` is the survival function of the statistic's
//! nominal null distribution. The crate computes `K_g` by closed form,
//! deterministic quadrature, or Monte Carlo, turns it into corrected
//! p-values, bounds the approximation error, and reproduces the tail
//! simulation protocol (raw/corrected p-value eCDFs and the origin-slope
//! estimator of `K_g`).

pub mod density;
pub mod error;
pub mod kg;
pub mod quad;
pub mod rng;
pub mod sim;
pub mod special;
pub mod stats;
pub mod tails;

pub use error::{Error, Result};
