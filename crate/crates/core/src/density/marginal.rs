//! One-dimensional marginal families for i.i.d. joint densities.
//!
//! Parameter constraints follow the closed-form catalog's captions (beta
//! needs both shapes above 1, chi-squared and its inverse need at least 2
//! degrees of freedom, and so on); violations are construction errors, not
//! evaluation errors.

use crate::error::{Error, Result};
use crate::special::{ln_beta, ln_gamma};
use rand::Rng;
use rand_distr::{Beta, Cauchy, ChiSquared, Distribution, Exp, Gamma, LogNormal, Normal};

const FRAC_LN_2PI_2: f64 = 0.918_938_533_204_672_8; // ln(2*pi)/2

#[derive(Debug, Clone, PartialEq)]
pub enum MarginalFamily {
    Normal { mu: f64, sigma: f64 },
    HalfNormal { sigma: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Chi { nu: f64 },
    ChiSquared { nu: f64 },
    InverseChiSquared { nu: f64 },
    /// Fisher F with `mu` numerator and `nu` denominator degrees of freedom.
    FisherF { mu: f64, nu: f64 },
    StudentT { nu: f64 },
    Cauchy,
    Beta { alpha: f64, beta: f64 },
    /// Gamma with shape `alpha` and scale `theta`.
    Gamma { alpha: f64, theta: f64 },
    InverseGamma { alpha: f64, theta: f64 },
    Uniform { a: f64, b: f64 },
    Exponential { lambda: f64 },
    /// Exponential shifted to mean zero: X - 1/lambda for X ~ Exp(lambda).
    CenteredExponential { lambda: f64 },
    Maxwell { sigma: f64 },
    /// Pareto with minimum (scale) `scale` and tail exponent `shape`.
    Pareto { scale: f64, shape: f64 },
}

fn require(cond: bool, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg.into()))
    }
}

impl MarginalFamily {
    /// Validate family-specific parameter constraints.
    pub fn validate(&self) -> Result<()> {
        use MarginalFamily::*;
        let finite = |vals: &[f64]| vals.iter().all(|v| v.is_finite());
        match *self {
            Normal { mu, sigma } => {
                require(finite(&[mu, sigma]) && sigma > 0.0, "normal needs finite mu, sigma > 0")
            }
            HalfNormal { sigma } | Maxwell { sigma } => {
                require(sigma.is_finite() && sigma > 0.0, "sigma must be positive")
            }
            LogNormal { mu, sigma } => {
                require(finite(&[mu, sigma]) && sigma > 0.0, "log-normal needs finite mu, sigma > 0")
            }
            Chi { nu } => require(nu.is_finite() && nu > 0.0, "chi needs nu > 0"),
            ChiSquared { nu } | InverseChiSquared { nu } => {
                require(nu.is_finite() && nu >= 2.0, "chi-squared (and inverse) needs nu >= 2")
            }
            FisherF { mu, nu } => {
                require(finite(&[mu, nu]) && mu > 0.0 && nu > 0.0, "F needs mu > 0 and nu > 0")
            }
            StudentT { nu } => require(nu.is_finite() && nu > 0.0, "student-t needs nu > 0"),
            Cauchy => Ok(()),
            Beta { alpha, beta } => require(
                finite(&[alpha, beta]) && alpha > 1.0 && beta > 1.0,
                "beta needs alpha > 1 and beta > 1",
            ),
            Gamma { alpha, theta } | InverseGamma { alpha, theta } => require(
                finite(&[alpha, theta]) && alpha > 1.0 && theta > 0.0,
                "gamma (and inverse) needs shape alpha > 1 and theta > 0",
            ),
            Uniform { a, b } => {
                require(finite(&[a, b]) && a < b && b > 0.0, "uniform needs a < b and b > 0")
            }
            Exponential { lambda } | CenteredExponential { lambda } => {
                require(lambda.is_finite() && lambda > 0.0, "lambda must be positive")
            }
            Pareto { scale, shape } => require(
                finite(&[scale, shape]) && scale > 0.0 && shape > 0.0,
                "pareto needs scale > 0 and shape > 0",
            ),
        }
    }

    /// Density at `x`; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        use MarginalFamily::*;
        match *self {
            Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z - FRAC_LN_2PI_2).exp() / sigma
            }
            HalfNormal { sigma } => {
                if x < 0.0 {
                    0.0
                } else {
                    let z = x / sigma;
                    (2.0 / std::f64::consts::PI).sqrt() / sigma * (-0.5 * z * z).exp()
                }
            }
            LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z - FRAC_LN_2PI_2).exp() / (x * sigma)
                }
            }
            Chi { nu } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ((1.0 - 0.5 * nu) * 2f64.ln() + (nu - 1.0) * x.ln() - 0.5 * x * x
                        - ln_gamma(0.5 * nu))
                    .exp()
                }
            }
            ChiSquared { nu } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ((0.5 * nu - 1.0) * x.ln() - 0.5 * x - 0.5 * nu * 2f64.ln()
                        - ln_gamma(0.5 * nu))
                    .exp()
                }
            }
            InverseChiSquared { nu } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-0.5 * nu * 2f64.ln() - ln_gamma(0.5 * nu)
                        - (0.5 * nu + 1.0) * x.ln()
                        - 0.5 / x)
                        .exp()
                }
            }
            FisherF { mu, nu } => {
                if x <= 0.0 {
                    0.0
                } else {
                    let (m, k) = (mu, nu);
                    (0.5 * m * (m / k).ln() + (0.5 * m - 1.0) * x.ln()
                        - 0.5 * (m + k) * (m * x / k).ln_1p()
                        - ln_beta(0.5 * m, 0.5 * k))
                    .exp()
                }
            }
            StudentT { nu } => (ln_gamma(0.5 * (nu + 1.0))
                - ln_gamma(0.5 * nu)
                - 0.5 * (nu * std::f64::consts::PI).ln()
                - 0.5 * (nu + 1.0) * (x * x / nu).ln_1p())
            .exp(),
            Cauchy => 1.0 / (std::f64::consts::PI * (1.0 + x * x)),
            Beta { alpha, beta } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    ((alpha - 1.0) * x.ln() + (beta - 1.0) * (-x).ln_1p() - ln_beta(alpha, beta))
                        .exp()
                }
            }
            Gamma { alpha, theta } => {
                if x <= 0.0 {
                    0.0
                } else {
                    ((alpha - 1.0) * x.ln() - x / theta - ln_gamma(alpha) - alpha * theta.ln())
                        .exp()
                }
            }
            InverseGamma { alpha, theta } => {
                if x <= 0.0 {
                    0.0
                } else {
                    (alpha * theta.ln() - (alpha + 1.0) * x.ln() - theta / x - ln_gamma(alpha))
                        .exp()
                }
            }
            Uniform { a, b } => {
                if x < a || x > b {
                    0.0
                } else {
                    1.0 / (b - a)
                }
            }
            Exponential { lambda } => {
                if x < 0.0 {
                    0.0
                } else {
                    lambda * (-lambda * x).exp()
                }
            }
            CenteredExponential { lambda } => {
                let shifted = x + 1.0 / lambda;
                if shifted < 0.0 {
                    0.0
                } else {
                    lambda * (-lambda * shifted).exp()
                }
            }
            Maxwell { sigma } => {
                if x < 0.0 {
                    0.0
                } else {
                    let z = x / sigma;
                    (2.0 / std::f64::consts::PI).sqrt() * z * z * (-0.5 * z * z).exp() / sigma
                }
            }
            Pareto { scale, shape } => {
                if x < scale {
                    0.0
                } else {
                    shape * (scale / x).powf(shape) / x
                }
            }
        }
    }

    /// Rough scale of the distribution bulk; used only to seed quadrature
    /// bracketing and Monte Carlo proposals.
    pub fn scale_hint(&self) -> f64 {
        use MarginalFamily::*;
        match *self {
            Normal { mu, sigma } => sigma + mu.abs(),
            HalfNormal { sigma } | Maxwell { sigma } => sigma,
            LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            Chi { nu } => nu.sqrt(),
            ChiSquared { nu } => nu,
            InverseChiSquared { nu } => 1.0 / nu,
            FisherF { .. } | StudentT { .. } | Cauchy => 1.0,
            Beta { .. } => 1.0,
            Gamma { alpha, theta } => alpha * theta,
            InverseGamma { alpha, theta } => theta / alpha,
            Uniform { a, b } => a.abs().max(b.abs()),
            Exponential { lambda } | CenteredExponential { lambda } => 1.0 / lambda,
            Pareto { scale, shape } => scale * (1.0 + 1.0 / shape),
        }
    }

    /// Prebuilt sampler for this family.
    pub fn sampler(&self) -> Result<MarginalSampler> {
        self.validate()?;
        fn bad(e: impl std::fmt::Debug) -> Error {
            Error::InvalidParameter(format!("{e:?}"))
        }
        Ok(match *self {
            Self::Normal { mu, sigma } => {
                MarginalSampler::Normal(Normal::new(mu, sigma).map_err(bad)?)
            }
            Self::HalfNormal { sigma } => {
                MarginalSampler::HalfNormal(Normal::new(0.0, sigma).map_err(bad)?)
            }
            Self::LogNormal { mu, sigma } => {
                MarginalSampler::LogNormal(LogNormal::new(mu, sigma).map_err(bad)?)
            }
            Self::Chi { nu } => MarginalSampler::Chi(ChiSquared::new(nu).map_err(bad)?),
            Self::ChiSquared { nu } => {
                MarginalSampler::ChiSquared(ChiSquared::new(nu).map_err(bad)?)
            }
            Self::InverseChiSquared { nu } => {
                MarginalSampler::InverseChiSquared(ChiSquared::new(nu).map_err(bad)?)
            }
            Self::FisherF { mu, nu } => {
                MarginalSampler::FisherF(rand_distr::FisherF::new(mu, nu).map_err(bad)?)
            }
            Self::StudentT { nu } => {
                MarginalSampler::StudentT(rand_distr::StudentT::new(nu).map_err(bad)?)
            }
            Self::Cauchy => MarginalSampler::Cauchy(Cauchy::new(0.0, 1.0).map_err(bad)?),
            Self::Beta { alpha, beta } => {
                MarginalSampler::Beta(Beta::new(alpha, beta).map_err(bad)?)
            }
            Self::Gamma { alpha, theta } => {
                MarginalSampler::Gamma(Gamma::new(alpha, theta).map_err(bad)?)
            }
            Self::InverseGamma { alpha, theta } => MarginalSampler::InverseGamma {
                gamma: Gamma::new(alpha, 1.0).map_err(bad)?,
                theta,
            },
            Self::Uniform { a, b } => MarginalSampler::Uniform { a, span: b - a },
            Self::Exponential { lambda } => {
                MarginalSampler::Exponential(Exp::new(lambda).map_err(bad)?)
            }
            Self::CenteredExponential { lambda } => MarginalSampler::CenteredExponential {
                exp: Exp::new(lambda).map_err(bad)?,
                mean: 1.0 / lambda,
            },
            Self::Maxwell { sigma } => MarginalSampler::Maxwell {
                chisq3: ChiSquared::new(3.0).map_err(bad)?,
                sigma,
            },
            Self::Pareto { scale, shape } => {
                MarginalSampler::Pareto(rand_distr::Pareto::new(scale, shape).map_err(bad)?)
            }
        })
    }

    /// Family tag as used in the JSON density schema.
    pub fn name(&self) -> &'static str {
        use MarginalFamily::*;
        match self {
            Normal { .. } => "normal",
            HalfNormal { .. } => "half-normal",
            LogNormal { .. } => "log-normal",
            Chi { .. } => "chi",
            ChiSquared { .. } => "chi-squared",
            InverseChiSquared { .. } => "inverse-chi-squared",
            FisherF { .. } => "f",
            StudentT { .. } => "student-t",
            Cauchy => "cauchy",
            Beta { .. } => "beta",
            Gamma { .. } => "gamma",
            InverseGamma { .. } => "inverse-gamma",
            Uniform { .. } => "uniform",
            Exponential { .. } => "exponential",
            CenteredExponential { .. } => "centered-exponential",
            Maxwell { .. } => "maxwell",
            Pareto { .. } => "pareto",
        }
    }
}

#[derive(Debug, Clone)]
pub enum MarginalSampler {
    Normal(Normal<f64>),
    HalfNormal(Normal<f64>),
    LogNormal(LogNormal<f64>),
    Chi(ChiSquared<f64>),
    ChiSquared(ChiSquared<f64>),
    InverseChiSquared(ChiSquared<f64>),
    FisherF(rand_distr::FisherF<f64>),
    StudentT(rand_distr::StudentT<f64>),
    Cauchy(Cauchy<f64>),
    Beta(Beta<f64>),
    Gamma(Gamma<f64>),
    InverseGamma { gamma: Gamma<f64>, theta: f64 },
    Uniform { a: f64, span: f64 },
    Exponential(Exp<f64>),
    CenteredExponential { exp: Exp<f64>, mean: f64 },
    Maxwell { chisq3: ChiSquared<f64>, sigma: f64 },
    Pareto(rand_distr::Pareto<f64>),
}

impl MarginalSampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use MarginalSampler::*;
        match self {
            Normal(d) => d.sample(rng),
            HalfNormal(d) => d.sample(rng).abs(),
            LogNormal(d) => d.sample(rng),
            Chi(d) => d.sample(rng).sqrt(),
            ChiSquared(d) => d.sample(rng),
            InverseChiSquared(d) => 1.0 / d.sample(rng),
            FisherF(d) => d.sample(rng),
            StudentT(d) => d.sample(rng),
            Cauchy(d) => d.sample(rng),
            Beta(d) => d.sample(rng),
            Gamma(d) => d.sample(rng),
            InverseGamma { gamma, theta } => theta / gamma.sample(rng),
            Uniform { a, span } => {
                let u: f64 = rand::distr::StandardUniform.sample(rng);
                a + span * u
            }
            Exponential(d) => d.sample(rng),
            CenteredExponential { exp, mean } => exp.sample(rng) - mean,
            Maxwell { chisq3, sigma } => sigma * chisq3.sample(rng).sqrt(),
            Pareto(d) => d.sample(rng),
        }
    }
}

/// All families with canonical parameters, for catalog-wide tests.
pub fn catalog_with_defaults() -> Vec<MarginalFamily> {
    use MarginalFamily::*;
    vec![
        Normal { mu: 0.0, sigma: 1.0 },
        Normal { mu: 1.0, sigma: 2.0 },
        HalfNormal { sigma: 1.0 },
        LogNormal { mu: 0.0, sigma: 1.0 },
        Chi { nu: 3.0 },
        ChiSquared { nu: 3.0 },
        InverseChiSquared { nu: 3.0 },
        FisherF { mu: 4.0, nu: 6.0 },
        StudentT { nu: 2.0 },
        Cauchy,
        Beta { alpha: 2.0, beta: 3.0 },
        Gamma { alpha: 2.5, theta: 1.5 },
        InverseGamma { alpha: 2.5, theta: 1.5 },
        Uniform { a: -1.0, b: 1.0 },
        Exponential { lambda: 1.0 },
        CenteredExponential { lambda: 1.0 },
        Maxwell { sigma: 1.0 },
        Pareto { scale: 1.0, shape: 3.0 },
    ]
}
