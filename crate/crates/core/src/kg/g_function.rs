//! The ball integrand G behind each statistic's tail:
//! `P(T > u) = integral of G(t) over the ball ||t|| < u^{-alpha/2}`.
//!
//! One-sample (t in R^{n-1}):
//! `G(t) = (n-1)^{(n-1)/2} int_0^inf r^{n-1} g(r A (sqrt(n-1) t, 1)) dr`.
//!
//! Two-sample (t in R^{n-2}): the radial-angular integral with the
//! Jacobian constant `M` and direction built from `c1(w) t, cos(w - w0),
//! c2(w) t, sin(w - w0)` in the rotated coordinates, where
//! `c_i(w) = sqrt(1/n1 + 1/n2) sqrt((n_i - 1)/weight_i) cos(w)`.
//!
//! F (t in R^{n2-1}): an x-space integral with the second sample rotated so
//! its variance coordinates shrink with the ball,
//! `G(t) = (n2-1)^{(n2-1)/2} int s1(x)^{n2-1} int_R g(x, A2 (s1 sqrt(n2-1) t, r)) dr dx`,
//! estimated with common-random-number Monte Carlo over x so that finite
//! differences of G stay smooth.

use super::f_integral::sample_std;
use super::frame::{build_orthogonal_frame, omega0};
use super::{KgOptions, TestSpec};
use crate::density::JointDensitySpec;
use crate::error::{Error, Result};
use crate::quad::{integrate, integrate_radial, integrate_real_line};
use crate::rng;
use rand_distr::{Distribution, StudentT};
use std::cell::{Cell, RefCell};

const PI: f64 = std::f64::consts::PI;

fn t3_pdf(z: f64) -> f64 {
    6.0 * 3f64.sqrt() / (PI * (3.0 + z * z) * (3.0 + z * z))
}

/// Evaluate the statistic's G at `t` (dimension n-1, n-2, or n2-1).
pub fn eval_g(
    spec: &TestSpec,
    g: &JointDensitySpec,
    t: &[f64],
    opts: &KgOptions,
) -> Result<f64> {
    spec.validate()?;
    if g.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: g.dim() });
    }
    if t.len() != spec.ball_dim() {
        return Err(Error::DimensionMismatch { expected: spec.ball_dim(), got: t.len() });
    }
    match *spec {
        TestSpec::OneSampleT { n } => eval_g_ost(g, n, t, opts),
        TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } => {
            eval_g_tst(spec, g, n1, n2, t, opts)
        }
        TestSpec::FTest { n1, n2 } => eval_g_f(g, n1, n2, t, opts),
    }
}

fn eval_g_ost(g: &JointDensitySpec, n: usize, t: &[f64], opts: &KgOptions) -> Result<f64> {
    let frame = build_orthogonal_frame(&TestSpec::OneSampleT { n })?;
    let nf = n as f64;
    let m_const = (nf - 1.0).powf(0.5 * (nf - 1.0));
    let mut w = vec![0.0; n];
    for (wi, ti) in w.iter_mut().zip(t) {
        *wi = (nf - 1.0).sqrt() * ti;
    }
    w[n - 1] = 1.0;
    let mut dir = vec![0.0; n];
    frame.apply(&w, &mut dir);
    let mut scales = g.bulk_scales(opts.seed)?;
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hint = nf.sqrt() * scales[scales.len() / 2];
    let mut point = vec![0.0; n];
    let exp = (n - 1) as i32;
    let res = integrate_radial(
        |r| {
            for (p, d) in point.iter_mut().zip(&dir) {
                *p = r * d;
            }
            r.powi(exp) * g.pdf_unchecked(&point)
        },
        opts.abs_tol / m_const,
        opts.rel_tol,
        hint,
    )?;
    Ok(m_const * res.value)
}

fn eval_g_tst(
    spec: &TestSpec,
    g: &JointDensitySpec,
    n1: usize,
    n2: usize,
    t: &[f64],
    opts: &KgOptions,
) -> Result<f64> {
    let n = n1 + n2;
    let (alpha, beta) = spec.weights().expect("two-sample spec");
    let frame = build_orthogonal_frame(spec)?;
    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let inv_n = 1.0 / n1f + 1.0 / n2f;
    let m_const = ((n1f - 1.0) / alpha).powf(0.5 * (n1f - 1.0))
        * ((n2f - 1.0) / beta).powf(0.5 * (n2f - 1.0))
        * inv_n.powf(0.5 * (nf - 2.0));
    let c1_base = inv_n.sqrt() * ((n1f - 1.0) / alpha).sqrt();
    let c2_base = inv_n.sqrt() * ((n2f - 1.0) / beta).sqrt();
    let w0 = omega0(n1, n2);
    let mut scales = g.bulk_scales(opts.seed)?;
    scales.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let hint = nf.sqrt() * scales[scales.len() / 2];
    let cos_exp = (n - 2) as i32;
    let r_exp = (n - 1) as i32;

    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let inner_err = Cell::new(0.0f64);
    let mut w = vec![0.0; n];
    let mut dir = vec![0.0; n];
    let mut point = vec![0.0; n];
    let outer_abs = opts.abs_tol / m_const;
    let outer = integrate(
        |omega| {
            if failure.borrow().is_some() {
                return 0.0;
            }
            let c = omega.cos();
            if c <= 0.0 {
                return 0.0;
            }
            let c1 = c1_base * c;
            let c2 = c2_base * c;
            for j in 0..n1 - 1 {
                w[j] = c1 * t[j];
            }
            w[n1 - 1] = (omega - w0).cos();
            for j in 0..n2 - 1 {
                w[n1 + j] = c2 * t[n1 - 1 + j];
            }
            w[n - 1] = (omega - w0).sin();
            frame.apply(&w, &mut dir);
            let inner = integrate_radial(
                |r| {
                    for (p, d) in point.iter_mut().zip(&dir) {
                        *p = r * d;
                    }
                    r.powi(r_exp) * g.pdf_unchecked(&point)
                },
                outer_abs / (8.0 * PI),
                (opts.rel_tol * 0.1).max(1e-13),
                hint,
            );
            match inner {
                Ok(res) => {
                    inner_err.set(inner_err.get().max(res.abs_error));
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
    Ok(m_const * outer?.value)
}

/// How many x-space Monte Carlo samples eval_g uses for the F statistic.
fn f_mc_samples(opts: &KgOptions) -> usize {
    (opts.mc_samples as usize / 128).clamp(2048, 16_384)
}

fn eval_g_f(
    g: &JointDensitySpec,
    n1: usize,
    n2: usize,
    t: &[f64],
    opts: &KgOptions,
) -> Result<f64> {
    let n = n1 + n2;
    let frame = build_orthogonal_frame(&TestSpec::FTest { n1, n2 })?;
    let a_mat = frame.matrix();
    let n2f = n2 as f64;
    let m_const = (n2f - 1.0).powf(0.5 * (n2f - 1.0));
    let scales = g.bulk_scales(opts.seed)?;
    let sx: Vec<f64> = scales[..n1].iter().map(|s| 2.5 * s).collect();
    let mut ys: Vec<f64> = scales[n1..].to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sr = n2f.sqrt() * ys[ys.len() / 2];
    let t3 = StudentT::new(3.0).expect("t(3) is valid");
    let samples = f_mc_samples(opts);

    // Common random numbers: the x draws depend only on the seed, never on
    // t, so finite differences of G are smooth in t.
    let mut r = rng::chunk_rng(opts.seed, 0x6676616c); // 'fval'
    let mut x = vec![0.0; n1];
    let mut point = vec![0.0; n];
    let mut w2 = vec![0.0; n2];
    let mut y = vec![0.0; n2];
    let mut acc = 0.0;
    for _ in 0..samples {
        let mut q = 1.0;
        for (xi, si) in x.iter_mut().zip(&sx) {
            let z: f64 = t3.sample(&mut r);
            *xi = si * z;
            q *= t3_pdf(z) / si;
        }
        let s1 = sample_std(&x);
        if s1 == 0.0 {
            continue;
        }
        point[..n1].copy_from_slice(&x);
        let z_scale = s1 * (n2f - 1.0).sqrt();
        for (wi, ti) in w2.iter_mut().zip(t) {
            *wi = z_scale * ti;
        }
        let inner = integrate_real_line(
            |rv| {
                w2[n2 - 1] = rv;
                // y = A2 w2 (block frame: lower-right block acts on w2)
                for i in 0..n2 {
                    let mut dot = 0.0;
                    for j in 0..n2 {
                        dot += a_mat[(n1 + i, n1 + j)] * w2[j];
                    }
                    y[i] = dot;
                }
                point[n1..].copy_from_slice(&y);
                g.pdf_unchecked(&point)
            },
            1e-14,
            1e-9,
            sr,
        )?;
        acc += s1.powi(n2 as i32 - 1) * inner.value / q;
    }
    Ok(m_const * acc / samples as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::MarginalFamily;
    use crate::kg::{kg_ost_quadrature, kg_tst_quadrature, KgOptions};
    use crate::tails::{shrink_ball_k, ShrinkBallContext};
    use approx::assert_relative_eq;

    #[test]
    fn ost_g_closed_form_standard_normal() {
        // For i.i.d. standard normal and n = 3:
        // G(t) = (1/(2 pi)) (1 + 2 ||t||^2)^{-3/2}.
        let g = JointDensitySpec::iid(MarginalFamily::Normal { mu: 0.0, sigma: 1.0 }, 3).unwrap();
        let spec = TestSpec::OneSampleT { n: 3 };
        let opts = KgOptions::default();
        for t in [[0.0, 0.0], [0.05, -0.02], [0.2, 0.1]] {
            let got = eval_g(&spec, &g, &t, &opts).unwrap();
            let norm2 = t[0] * t[0] + t[1] * t[1];
            let want = (1.0 + 2.0 * norm2).powf(-1.5) / (2.0 * PI);
            assert_relative_eq!(got, want, max_relative = 1e-9);
        }
    }

    #[test]
    fn ost_g0_reproduces_kg() {
        let opts = KgOptions::default();
        for (fam, n) in [
            (MarginalFamily::Normal { mu: 0.0, sigma: 1.0 }, 2usize),
            (MarginalFamily::Cauchy, 3),
            (MarginalFamily::Exponential { lambda: 1.0 }, 4),
        ] {
            let g = JointDensitySpec::iid(fam, n).unwrap();
            let spec = TestSpec::OneSampleT { n };
            let g0 = eval_g(&spec, &g, &vec![0.0; n - 1], &opts).unwrap();
            let ctx = ShrinkBallContext::new(n - 1, 1.0, 2.0, g0);
            let via_ball = shrink_ball_k(&ctx);
            let direct = kg_ost_quadrature(&g, n, &opts).unwrap().value;
            assert_relative_eq!(via_ball, direct, max_relative = 1e-7);
        }
    }

    #[test]
    fn tst_g0_reproduces_kg() {
        let opts = KgOptions { rel_tol: 1e-9, abs_tol: 1e-11, ..Default::default() };
        let g = JointDensitySpec::iid(MarginalFamily::Uniform { a: -1.0, b: 1.0 }, 5).unwrap();
        let spec = TestSpec::TwoSampleT { n1: 2, n2: 3 };
        let g0 = eval_g(&spec, &g, &[0.0, 0.0, 0.0], &opts).unwrap();
        let ctx = ShrinkBallContext::new(3, 1.0, 2.0, g0);
        let via_ball = shrink_ball_k(&ctx);
        let direct = kg_tst_quadrature(&g, &spec, &opts).unwrap().value;
        assert_relative_eq!(via_ball, direct, max_relative = 1e-6);
    }

    #[test]
    fn ost_exponential_n2_constant_g() {
        // For i.i.d. exponential with n = 2 the diagonal ray sum is
        // t-independent inside the ball: G(t) = 1/2 for |t| < 1.
        let g = JointDensitySpec::iid(MarginalFamily::Exponential { lambda: 1.0 }, 2).unwrap();
        let spec = TestSpec::OneSampleT { n: 2 };
        let opts = KgOptions::default();
        for t in [0.0, 0.3, -0.6] {
            let got = eval_g(&spec, &g, &[t], &opts).unwrap();
            assert_relative_eq!(got, 0.5, max_relative = 1e-9);
        }
    }

    #[test]
    fn f_g0_reproduces_kg() {
        let g = JointDensitySpec::product(vec![
            JointDensitySpec::iid(MarginalFamily::Normal { mu: 0.0, sigma: 2.0 }, 2).unwrap(),
            JointDensitySpec::iid(MarginalFamily::Normal { mu: 0.0, sigma: 1.0 }, 2).unwrap(),
        ])
        .unwrap();
        let spec = TestSpec::FTest { n1: 2, n2: 2 };
        let opts = KgOptions { mc_samples: 2_000_000, ..Default::default() };
        let g0 = eval_g(&spec, &g, &[0.0], &opts).unwrap();
        // K_{G,1} with (m,k) = (n1-1, n2-1) must reproduce (s1/s2)^{n2-1}.
        let ctx = ShrinkBallContext::new(1, 1.0, 1.0, g0);
        let via_ball = shrink_ball_k(&ctx);
        assert!(
            (via_ball / 2.0 - 1.0).abs() < 0.05,
            "K via ball {via_ball} vs closed form 2"
        );
    }
}
