//! Deterministic quadrature of the defining K_g integrals.
//!
//! One-sample: `K_g = (2 pi^{n/2} / Gamma(n/2)) int_0^inf r^{n-1} g(r I) dr`.
//!
//! Two-sample (Student or Welch weights):
//! `K_g = C(n1,n2,alpha,beta) int_{-pi/2}^{pi/2} cos(w)^{n-2}`
//! `      int_0^inf r^{n-1} g(r (cos(w-w0) I1 + sin(w-w0) I2)) dr dw`.
//!
//! Gaussian two-sample reduction: a single omega integral of
//! `cos(w)^{n-2} / (v(w) Sigma^{-1} v(w)')^{n/2}`.

use super::frame::omega0;
use super::{Diagnostics, KgOptions, KgResult, Method, TestSpec};
use crate::density::{CovarianceSpec, JointDensitySpec};
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_radial};
use crate::special::ln_gamma;
use std::cell::{Cell, RefCell};

const PI: f64 = std::f64::consts::PI;

/// Median of the per-coordinate bulk scales times sqrt(n): a reasonable
/// radial bracketing hint for rays through the bulk.
fn radial_hint(g: &JointDensitySpec, seed: u64) -> f64 {
    let mut scales = match g.bulk_scales(seed) {
        Ok(s) => s,
        Err(_) => return (g.dim() as f64).sqrt(),
    };
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let med = scales[scales.len() / 2];
    (g.dim() as f64).sqrt() * med.max(1e-3)
}

/// Prefactor of the two-sample K_g integral.
pub(crate) fn tst_prefactor(n1: usize, n2: usize, alpha: f64, beta: f64) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let nf = n1f + n2f;
    (2f64.ln() + 0.5 * (nf - 1.0) * PI.ln()
        + 0.5 * (n1f - 1.0) * ((n1f - 1.0) / alpha).ln()
        + 0.5 * (n2f - 1.0) * ((n2f - 1.0) / beta).ln()
        + 0.5 * (nf - 2.0) * (1.0 / n1f + 1.0 / n2f).ln()
        - ln_gamma(0.5 * (nf - 1.0))
        - 0.5 * (nf - 2.0) * (nf - 2.0).ln())
    .exp()
}

/// One-sample K_g by adaptive quadrature of the radial integral.
pub fn kg_ost_quadrature(g: &JointDensitySpec, n: usize, opts: &KgOptions) -> Result<KgResult> {
    if n < 2 {
        return Err(Error::InvalidParameter("n must be at least 2".into()));
    }
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
    }
    let nf = n as f64;
    let prefactor = (2f64.ln() + 0.5 * nf * PI.ln() - ln_gamma(0.5 * nf)).exp();
    let inv_sqrt = 1.0 / nf.sqrt();
    let mut point = vec![0.0; n];
    let exponent = (n - 1) as i32;
    let hint = radial_hint(g, opts.seed);
    let radial = integrate_radial(
        |r| {
            for p in point.iter_mut() {
                *p = r * inv_sqrt;
            }
            r.powi(exponent) * g.pdf_unchecked(&point)
        },
        opts.abs_tol / prefactor,
        opts.rel_tol,
        hint,
    )?;
    KgResult::checked(
        prefactor * radial.value,
        Method::Quadrature,
        prefactor * radial.abs_error,
        Diagnostics {
            truncation_radius: Some(radial.truncation_radius),
            evaluations: radial.evaluations,
            mc_samples: None,
        },
    )
}

/// Two-sample K_g (Student or Welch weights) by nested quadrature: omega
/// outer, radius inner.
pub fn kg_tst_quadrature(
    g: &JointDensitySpec,
    spec: &TestSpec,
    opts: &KgOptions,
) -> Result<KgResult> {
    let (n1, n2) = match *spec {
        TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } => (n1, n2),
        _ => {
            return Err(Error::InvalidParameter(
                "kg_tst_quadrature needs a two-sample-t or welch spec".into(),
            ))
        }
    };
    spec.validate()?;
    let n = n1 + n2;
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
    }
    let (alpha, beta) = spec.weights().expect("two-sample spec has weights");
    let prefactor = tst_prefactor(n1, n2, alpha, beta);
    let w0 = omega0(n1, n2);
    let hint = radial_hint(g, opts.seed);
    let cos_exp = (n - 2) as i32;
    let r_exp = (n - 1) as i32;
    let (inv_sqrt1, inv_sqrt2) = (1.0 / (n1 as f64).sqrt(), 1.0 / (n2 as f64).sqrt());

    let outer_abs = opts.abs_tol / prefactor;
    let inner_abs = outer_abs / (8.0 * PI);
    let inner_rel = (opts.rel_tol * 0.1).max(1e-13);

    let inner_error = Cell::new(0.0f64);
    let inner_evals = Cell::new(0u64);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let max_radius = Cell::new(0.0f64);

    let mut point = vec![0.0; n];
    let outer = integrate(
        |omega| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let c = omega.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let d1 = (omega - w0).cos() * inv_sqrt1;
            let d2 = (omega - w0).sin() * inv_sqrt2;
            let inner = integrate_radial(
                |r| {
                    for p in point.iter_mut().take(n1) {
                        *p = r * d1;
                    }
                    for p in point.iter_mut().skip(n1) {
                        *p = r * d2;
                    }
                    r.powi(r_exp) * g.pdf_unchecked(&point)
                },
                inner_abs,
                inner_rel,
                hint,
            );
            match inner {
                Ok(res) => {
                    inner_error.set(inner_error.get().max(res.abs_error));
                    inner_evals.set(inner_evals.get() + res.evaluations);
                    max_radius.set(max_radius.get().max(res.truncation_radius));
                    c.powi(cos_exp) * res.value
                }
                Err(e) => {
                    *failure.borrow_mut() = Some(e);
                    0.0
                }
            }
        },
        -0.5 * PI,
        0.5 * PI,
        outer_abs,
        opts.rel_tol,
        2000,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let outer = outer?;
    let err = prefactor * (outer.abs_error + PI * inner_error.get());
    KgResult::checked(
        prefactor * outer.value,
        Method::Quadrature,
        err,
        Diagnostics {
            truncation_radius: Some(max_radius.get()),
            evaluations: outer.evaluations + inner_evals.get(),
            mc_samples: None,
        },
    )
}

/// Two-sample K_g for X ~ MVN(0, Sigma): the one-dimensional omega
/// integral of `cos(w)^{n-2} (v(w) Sigma^{-1} v(w)')^{-n/2}` times
/// `C(n1,n2,alpha,beta) Gamma(n/2) / (2 pi^{n/2} |Sigma|^{1/2})`.
pub fn kg_tst_gaussian(
    cov: &CovarianceSpec,
    spec: &TestSpec,
    opts: &KgOptions,
) -> Result<KgResult> {
    let (n1, n2) = match *spec {
        TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } => (n1, n2),
        _ => {
            return Err(Error::InvalidParameter(
                "kg_tst_gaussian needs a two-sample-t or welch spec".into(),
            ))
        }
    };
    spec.validate()?;
    let n = n1 + n2;
    if cov.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: cov.dim() });
    }
    let (alpha, beta) = spec.weights().expect("two-sample spec has weights");
    let nf = n as f64;
    let prefactor = tst_prefactor(n1, n2, alpha, beta)
        * (ln_gamma(0.5 * nf) - 2f64.ln() - 0.5 * nf * PI.ln() - 0.5 * cov.log_det()).exp();
    let w0 = omega0(n1, n2);
    let (inv_sqrt1, inv_sqrt2) = (1.0 / (n1 as f64).sqrt(), 1.0 / (n2 as f64).sqrt());
    let cos_exp = (n - 2) as i32;
    let mut v = vec![0.0; n];
    let res = integrate(
        |omega| {
            let c = omega.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let d1 = (omega - w0).cos() * inv_sqrt1;
            let d2 = (omega - w0).sin() * inv_sqrt2;
            for p in v.iter_mut().take(n1) {
                *p = d1;
            }
            for p in v.iter_mut().skip(n1) {
                *p = d2;
            }
            let q = cov.inv_quadratic_form(&v);
            c.powi(cos_exp) * q.powf(-0.5 * nf)
        },
        -0.5 * PI,
        0.5 * PI,
        opts.abs_tol / prefactor,
        opts.rel_tol,
        2000,
    )?;
    KgResult::checked(
        prefactor * res.value,
        Method::Quadrature,
        prefactor * res.abs_error,
        Diagnostics { truncation_radius: None, evaluations: res.evaluations, mc_samples: None },
    )
}
