//! Closed-form tail constants: the i.i.d. one-sample catalog, the
//! zero-mean Gaussian one-sample case, and the tabulated unequal-variance
//! constants for the Student two-sample and Welch statistics.

use super::{Diagnostics, KgResult, Method, TestSpec};
use crate::density::{CovarianceSpec, JointDensitySpec, MarginalFamily};
use crate::error::{Error, Result};
use crate::special::{kummer_m, ln_beta, ln_gamma};

const PI: f64 = std::f64::consts::PI;

/// One-sample t, i.i.d. marginals: the closed-form K_g catalog.
///
/// Each value is the constant in `P(T > u) ~ K_g t_{n-1}(u)` for data with
/// n i.i.d. coordinates from the family.
pub fn table1_kg(family: &MarginalFamily, n: usize) -> Result<f64> {
    family.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    let nf = n as f64;
    use MarginalFamily::*;
    let v = match *family {
        Normal { mu, sigma } => {
            let z = -nf * mu * mu / (2.0 * sigma * sigma);
            let first = kummer_m(0.5 * (1.0 - nf), 0.5, z)?;
            let second = (mu / sigma)
                * (2.0 * nf).sqrt()
                * (ln_gamma(0.5 * (1.0 + nf)) - ln_gamma(0.5 * nf)).exp()
                * kummer_m(1.0 - 0.5 * nf, 1.5, z)?;
            first + second
        }
        HalfNormal { .. } => 2f64.powi(n as i32),
        LogNormal { sigma, .. } => {
            (0.5 * (nf - 1.0) * nf.ln() + 0.5 * PI.ln() - 0.5 * (nf - 3.0) * 2f64.ln()
                - (nf - 1.0) * sigma.ln()
                - ln_gamma(0.5 * nf))
            .exp()
        }
        Chi { nu } => (nf * 2f64.ln() + 0.5 * nf * PI.ln() + ln_gamma(0.5 * nf * nu)
            - 0.5 * nf * (nu - 1.0) * nf.ln()
            - nf * ln_gamma(0.5 * nu)
            - ln_gamma(0.5 * nf))
        .exp(),
        ChiSquared { nu } | InverseChiSquared { nu } => (2f64.ln()
            + 0.5 * nf * PI.ln()
            + ln_gamma(0.5 * nf * nu)
            - 0.5 * nf * (nu - 1.0) * nf.ln()
            - nf * ln_gamma(0.5 * nu)
            - ln_gamma(0.5 * nf))
        .exp(),
        FisherF { mu, nu } => (2f64.ln()
            + 0.5 * nf * (PI * nf).ln()
            + ln_gamma(0.5 * mu * nf)
            + ln_gamma(0.5 * nu * nf)
            + nf * ln_gamma(0.5 * (mu + nu))
            - ln_gamma(0.5 * nf)
            - nf * (ln_gamma(0.5 * mu) + ln_gamma(0.5 * nu))
            - ln_gamma(0.5 * (mu + nu) * nf))
        .exp(),
        StudentT { nu } => (0.5 * nf * nf.ln() + ln_gamma(0.5 * nu * nf)
            - ln_gamma(0.5 * (nu + 1.0) * nf)
            + nf * (ln_gamma(0.5 * (nu + 1.0)) - ln_gamma(0.5 * nu)))
        .exp(),
        Cauchy => (0.5 * nf * nf.ln()
            - (nf - 1.0) * 2f64.ln()
            - 0.5 * (nf - 1.0) * PI.ln()
            - ln_gamma(0.5 * (nf + 1.0)))
        .exp(),
        Beta { alpha, beta } => (2f64.ln()
            + 0.5 * nf * (PI * nf).ln()
            + ln_gamma(alpha * nf)
            + ln_gamma(1.0 + (beta - 1.0) * nf)
            - nf * ln_beta(alpha, beta)
            - ln_gamma(0.5 * nf)
            - ln_gamma(1.0 + (alpha + beta - 1.0) * nf))
        .exp(),
        Gamma { alpha, .. } | InverseGamma { alpha, .. } => (2f64.ln()
            + 0.5 * nf * (1.0 - 2.0 * alpha) * nf.ln()
            + 0.5 * nf * PI.ln()
            + ln_gamma(alpha * nf)
            - nf * ln_gamma(alpha)
            - ln_gamma(0.5 * nf))
        .exp(),
        Uniform { a, b } => {
            let pre = (0.5 * nf * (PI * nf).ln() - ln_gamma(0.5 * nf + 1.0)).exp();
            if a <= 0.0 {
                pre * (b / (b - a)).powi(n as i32)
            } else {
                pre * (b.powi(n as i32) - a.powi(n as i32)) / (b - a).powi(n as i32)
            }
        }
        Exponential { .. } => {
            (2f64.ln() + 0.5 * nf * (PI / nf).ln() + ln_gamma(nf) - ln_gamma(0.5 * nf)).exp()
        }
        CenteredExponential { .. } => (2f64.ln() + 0.5 * nf * (PI / nf).ln() + ln_gamma(nf)
            - nf
            - ln_gamma(0.5 * nf))
        .exp(),
        Maxwell { .. } => {
            (nf * (4.0 / nf).ln() + ln_gamma(1.5 * nf) - ln_gamma(0.5 * nf)).exp()
        }
        Pareto { shape, .. } => {
            (0.5 * nf * (PI * nf).ln() + (nf - 1.0) * shape.ln() - ln_gamma(0.5 * nf + 1.0)).exp()
        }
    };
    Ok(v)
}

/// One-sample t for X ~ MVN(0, Sigma):
/// `K_g = (I Sigma^{-1} I')^{-n/2} / |Sigma|^{1/2}`
/// with `I` the unit diagonal. Follows directly from the radial integral of
/// the Gaussian density along the diagonal.
pub fn kg_ost_gaussian(cov: &CovarianceSpec) -> Result<KgResult> {
    let n = cov.dim();
    let inv_sqrt = 1.0 / (n as f64).sqrt();
    let diag = vec![inv_sqrt; n];
    let q = cov.inv_quadratic_form(&diag);
    let value = (-0.5 * (n as f64) * q.ln() - 0.5 * cov.log_det()).exp();
    KgResult::checked(value, Method::ClosedForm, 0.0, Diagnostics::default())
}

/// Student two-sample t with Sigma = diag(s1^2 ... , s2^2 ...) and
/// k = s1/s2; tabulated for n1, n2 in 2..=6.
pub fn table2_student(n1: usize, n2: usize, k: f64) -> Option<f64> {
    let k2 = k * k;
    let v = match (n1, n2) {
        (2, 2) => (k2 + 1.0) / (2.0 * k),
        (3, 2) => (2.0 * k2 + 3.0).powf(1.5) / (5.0 * 5f64.sqrt() * k2),
        (4, 2) => (k2 + 2.0).powi(2) / (9.0 * k.powi(3)),
        (5, 2) => (2.0 * k2 + 5.0).powf(2.5) / (49.0 * 7f64.sqrt() * k.powi(4)),
        (6, 2) => (k2 + 3.0).powi(3) / (64.0 * k.powi(5)),

        (2, 3) => (3.0 * k2 + 2.0).powf(1.5) / (5.0 * 5f64.sqrt() * k),
        (3, 3) => (k2 + 1.0).powi(2) / (4.0 * k2),
        (4, 3) => (3.0 * k2 + 4.0).powf(2.5) / (49.0 * 7f64.sqrt() * k.powi(3)),
        (5, 3) => (3.0 * k2 + 5.0).powi(3) / (512.0 * k.powi(4)),
        (6, 3) => (k2 + 2.0).powf(3.5) / (27.0 * 3f64.sqrt() * k.powi(5)),

        (2, 4) => (2.0 * k2 + 1.0).powi(2) / (9.0 * k),
        (3, 4) => (4.0 * k2 + 3.0).powf(2.5) / (49.0 * 7f64.sqrt() * k2),
        (4, 4) => (k2 + 1.0).powi(3) / (8.0 * k.powi(3)),
        (5, 4) => (4.0 * k2 + 5.0).powf(3.5) / (2187.0 * k.powi(4)),
        (6, 4) => (2.0 * k2 + 3.0).powi(4) / (625.0 * k.powi(5)),

        (2, 5) => (5.0 * k2 + 2.0).powf(2.5) / (49.0 * 7f64.sqrt() * k),
        (3, 5) => (5.0 * k2 + 3.0).powi(3) / (512.0 * k2),
        (4, 5) => (5.0 * k2 + 4.0).powf(3.5) / (2187.0 * k.powi(3)),
        (5, 5) => (k2 + 1.0).powi(4) / (16.0 * k.powi(4)),
        (6, 5) => (5.0 * k2 + 6.0).powf(4.5) / (14641.0 * 11f64.sqrt() * k.powi(5)),

        (2, 6) => (3.0 * k2 + 1.0).powi(3) / (64.0 * k),
        (3, 6) => (2.0 * k2 + 1.0).powf(3.5) / (27.0 * 3f64.sqrt() * k2),
        (4, 6) => (3.0 * k2 + 2.0).powi(4) / (625.0 * k.powi(3)),
        (5, 6) => (6.0 * k2 + 5.0).powf(4.5) / (14641.0 * 11f64.sqrt() * k.powi(4)),
        (6, 6) => (k2 + 1.0).powi(5) / (32.0 * k.powi(5)),
        _ => return None,
    };
    Some(v)
}

/// Welch statistic with Sigma = diag(s1^2 ..., s2^2 ...) and k = s1/s2;
/// tabulated for n1 in 2..=5, n2 in 2..=6.
pub fn table3_welch(n1: usize, n2: usize, k: f64) -> Option<f64> {
    let k2 = k * k;
    let v = match (n1, n2) {
        (2, 2) => (k2 + 1.0) / (2.0 * k),
        (3, 2) => (2.0 * k2 + 3.0).powf(1.5) / (9.0 * k2),
        (4, 2) => 3.0 * 1.5f64.sqrt() * (k2 + 2.0).powi(2) / (16.0 * k.powi(3)),
        (5, 2) => 4.0 * (2.0 * k2 + 5.0).powf(2.5) / (125.0 * k.powi(4)),

        (2, 3) => (3.0 * k2 + 2.0).powf(1.5) / (9.0 * k),
        (3, 3) => (k2 + 1.0).powi(2) / (4.0 * k2),
        (4, 3) => (3.0 * k2 + 4.0).powf(2.5) / (50.0 * 5f64.sqrt() * k.powi(3)),
        (5, 3) => 4.0 * (3.0 * k2 + 5.0).powi(3) / (1215.0 * k.powi(4)),

        (2, 4) => 3.0 * 1.5f64.sqrt() * (2.0 * k2 + 1.0).powi(2) / (16.0 * k),
        (3, 4) => (4.0 * k2 + 3.0).powf(2.5) / (50.0 * 5f64.sqrt() * k2),
        (4, 4) => (k2 + 1.0).powi(3) / (8.0 * k.powi(3)),
        (5, 4) => 3.0 * (3.0f64 / 35.0).sqrt() * (4.0 * k2 + 5.0).powf(3.5) / (1715.0 * k.powi(4)),

        (2, 5) => 4.0 * (5.0 * k2 + 2.0).powf(2.5) / (125.0 * k),
        (3, 5) => 4.0 * (5.0 * k2 + 3.0).powi(3) / (1215.0 * k2),
        (4, 5) => 3.0 * (3.0f64 / 35.0).sqrt() * (5.0 * k2 + 4.0).powf(3.5) / (1715.0 * k.powi(3)),
        (5, 5) => (k2 + 1.0).powi(4) / (16.0 * k.powi(4)),

        (2, 6) => 25.0 * (5.0f64 / 3.0).sqrt() * (3.0 * k2 + 1.0).powi(3) / (216.0 * k),
        (3, 6) => 25.0 * (5.0f64 / 7.0).sqrt() * (2.0 * k2 + 1.0).powf(3.5) / (343.0 * k2),
        (4, 6) => 25.0 * 2.5f64.sqrt() * (3.0 * k2 + 2.0).powi(4) / (16384.0 * k.powi(3)),
        (5, 6) => 4.0 * (6.0 * k2 + 5.0).powf(4.5) / (177147.0 * k.powi(4)),
        _ => return None,
    };
    Some(v)
}

/// Route recognizer: returns a closed-form K_g when one is known for this
/// (statistic, density) pair.
pub fn kg_closed_form(spec: &TestSpec, g: &JointDensitySpec) -> Result<Option<KgResult>> {
    spec.validate()?;
    if g.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: g.dim() });
    }
    match *spec {
        TestSpec::OneSampleT { n } => {
            if let JointDensitySpec::Iid { marginal, .. } = g {
                let v = table1_kg(marginal, n)?;
                return Ok(Some(KgResult::checked(
                    v,
                    Method::ClosedForm,
                    0.0,
                    Diagnostics::default(),
                )?));
            }
            if let Some(cov) = g.as_zero_mean_gaussian() {
                return Ok(Some(kg_ost_gaussian(&cov)?));
            }
            Ok(None)
        }
        TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } => {
            let Some(cov) = g.as_zero_mean_gaussian() else { return Ok(None) };
            if cov.is_isotropic().is_some() && matches!(spec, TestSpec::TwoSampleT { .. }) {
                return Ok(Some(KgResult::exact(1.0)));
            }
            let Some((s1sq, s2sq)) = cov.two_block_isotropic(n1) else { return Ok(None) };
            let k = (s1sq / s2sq).sqrt();
            let v = match spec {
                TestSpec::TwoSampleT { .. } => table2_student(n1, n2, k),
                _ => table3_welch(n1, n2, k),
            };
            Ok(match v {
                Some(v) => {
                    Some(KgResult::checked(v, Method::ClosedForm, 0.0, Diagnostics::default())?)
                }
                None => None,
            })
        }
        TestSpec::FTest { n1, n2 } => {
            // Independent isotropic Gaussian samples: K_g = (s1/s2)^{n2-1}.
            let Some(cov) = g.as_zero_mean_gaussian() else { return Ok(None) };
            let Some((s1sq, s2sq)) = cov.two_block_isotropic(n1) else { return Ok(None) };
            let v = (s1sq / s2sq).sqrt().powi(n2 as i32 - 1);
            Ok(Some(KgResult::checked(v, Method::ClosedForm, 0.0, Diagnostics::default())?))
        }
    }
}
