//! Computable error bounds for the tail approximation.
//!
//! Absolute bound:
//! `|P(T>u) - K_g t(u)| <= d_{alpha,m,k}(u)` with
//! `d = u^{-alpha(k+1)/2} [ C1 sup_{||x|| <= u^{-alpha/2}} ||grad G(x)||`
//! `                        + C2 (K_g/alpha) u^{-alpha/2} ]`.
//!
//! Relative rate: `(P(T>u) - K_g t(u)) / P(T>u) ~ C3 / u^alpha` with
//! `C3 = (alpha k B(m/2,k/2) / (2 (k/m)^{k/2})) L_{G,alpha} / K_g`.
//!
//! The derivatives of G are taken by central finite differences with step
//! `h = max(1e-4, u^{-alpha/2}/8)`; the sup over the closed ball is
//! approximated by the 2k axis points plus 32 seeded random directions on
//! the bounding sphere (and the center).

use super::g_function::eval_g;
use super::{kg_auto, KgOptions, TestSpec};
use crate::density::JointDensitySpec;
use crate::error::{Error, Result};
use crate::rng;
use crate::special::ln_beta;
use crate::tails::{shrink_ball_second_order, ShrinkBallContext};
use rand::Rng;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBound {
    /// The absolute bound d_{alpha,m,k}(u).
    pub d_value: f64,
    /// Relative-error constant: relative error ~ c3 / u^alpha.
    pub c3: f64,
    pub alpha: f64,
    pub m: f64,
    pub k: f64,
    pub u: f64,
    pub kg: f64,
    pub grad_sup_norm: f64,
    pub hess_trace: f64,
}

/// Decide whether finite differences were too noisy to trust: the measured
/// gradient is irreproducible across step halving while its term would
/// materially change the bound.
fn unstable(grad_h: f64, grad_h2: f64, grad_term: f64, c2_term: f64) -> bool {
    let disagree = (grad_h - grad_h2).abs() > 0.5 * grad_h.max(grad_h2).max(1e-300);
    let material = grad_term > 0.05 * c2_term;
    disagree && material
}

fn grad_norm_at(
    spec: &TestSpec,
    g: &JointDensitySpec,
    point: &[f64],
    h: f64,
    opts: &KgOptions,
) -> Result<f64> {
    let k = point.len();
    let mut plus = point.to_vec();
    let mut minus = point.to_vec();
    let mut norm2 = 0.0;
    for j in 0..k {
        plus[j] = point[j] + h;
        minus[j] = point[j] - h;
        let gp = eval_g(spec, g, &plus, opts)?;
        let gm = eval_g(spec, g, &minus, opts)?;
        if !gp.is_finite() || !gm.is_finite() {
            return Err(Error::FiniteDifference("non-finite G evaluation".into()));
        }
        let d = (gp - gm) / (2.0 * h);
        norm2 += d * d;
        plus[j] = point[j];
        minus[j] = point[j];
    }
    Ok(norm2.sqrt())
}

/// d_{alpha,m,k}(u) and C3 for a statistic/density pair.
pub fn error_bounds(
    spec: &TestSpec,
    g: &JointDensitySpec,
    u: f64,
    opts: &KgOptions,
) -> Result<ErrorBound> {
    if !(u > 0.0) {
        return Err(Error::InvalidInput(format!("threshold u must be positive, got {u}")));
    }
    spec.validate()?;
    let (alpha, m, kf) = spec.triple();
    let k = spec.ball_dim();
    let kg = kg_auto(spec, g, opts)?.value;

    let radius = u.powf(-0.5 * alpha);
    let h = (radius / 8.0).max(1e-4);

    // Sup of ||grad G|| over the ball: center, axis points, random
    // directions on the bounding sphere.
    let mut points: Vec<Vec<f64>> = vec![vec![0.0; k]];
    for j in 0..k {
        let mut p = vec![0.0; k];
        p[j] = radius;
        points.push(p.clone());
        p[j] = -radius;
        points.push(p);
    }
    let mut dir_rng = rng::chunk_rng(opts.seed, 0x626f756e); // 'boun'
    for _ in 0..32 {
        let mut p: Vec<f64> = (0..k)
            .map(|_| {
                let u1: f64 = dir_rng.random();
                let u2: f64 = dir_rng.random();
                // Box-Muller; only the direction matters.
                (-2.0 * u1.max(1e-12).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
        for v in p.iter_mut() {
            *v *= radius / norm;
        }
        points.push(p);
    }

    let mut grad_sup = 0.0f64;
    let mut argmax = points[0].clone();
    for p in &points {
        let gn = grad_norm_at(spec, g, p, h, opts)?;
        if gn > grad_sup {
            grad_sup = gn;
            argmax = p.clone();
        }
    }

    // Hessian trace at the origin.
    let g0 = eval_g(spec, g, &vec![0.0; k], opts)?;
    let mut hess_trace = 0.0;
    for j in 0..k {
        let mut p = vec![0.0; k];
        p[j] = h;
        let gp = eval_g(spec, g, &p, opts)?;
        p[j] = -h;
        let gm = eval_g(spec, g, &p, opts)?;
        hess_trace += (gp - 2.0 * g0 + gm) / (h * h);
    }

    let ctx = ShrinkBallContext {
        k,
        m,
        alpha,
        g0,
        grad_sup_norm: grad_sup,
        hess_trace,
    };
    let c1 = ctx.c1();
    let c2 = ctx.c2();
    let grad_term = c1 * grad_sup;
    let c2_term = c2 * (kg / alpha) * radius;

    // Reproducibility probe at the worst point.
    let grad_h2 = grad_norm_at(spec, g, &argmax, 0.5 * h, opts)?;
    if unstable(grad_sup, grad_h2, grad_term, c2_term) {
        return Err(Error::FiniteDifference(format!(
            "gradient estimate irreproducible under step halving \
             ({grad_sup:.3e} vs {grad_h2:.3e}) and material to the bound"
        )));
    }

    let d_value = u.powf(-0.5 * alpha * (kf + 1.0)) * (grad_term + c2_term);
    let l = shrink_ball_second_order(&ctx);
    let c3 = alpha * kf * ln_beta(0.5 * m, 0.5 * kf).exp() / (2.0 * (kf / m).powf(0.5 * kf))
        * l
        / kg;
    Ok(ErrorBound {
        d_value,
        c3,
        alpha,
        m,
        k: kf,
        u,
        kg,
        grad_sup_norm: grad_sup,
        hess_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::MarginalFamily;
    use crate::tails::t_tail;
    use approx::assert_relative_eq;

    #[test]
    fn triples_match_statistics() {
        assert_eq!(TestSpec::OneSampleT { n: 3 }.triple(), (2.0, 1.0, 2.0));
        assert_eq!(TestSpec::TwoSampleT { n1: 2, n2: 3 }.triple(), (2.0, 1.0, 3.0));
        assert_eq!(TestSpec::Welch { n1: 2, n2: 3 }.triple(), (2.0, 1.0, 3.0));
        assert_eq!(TestSpec::FTest { n1: 3, n2: 4 }.triple(), (1.0, 2.0, 3.0));
    }

    #[test]
    fn ost_normal_bound_positive_decreasing() {
        let g = JointDensitySpec::iid(MarginalFamily::Normal { mu: 0.0, sigma: 1.0 }, 3).unwrap();
        let spec = TestSpec::OneSampleT { n: 3 };
        let opts = KgOptions { rel_tol: 1e-9, abs_tol: 1e-12, ..Default::default() };
        let b5 = error_bounds(&spec, &g, 5.0, &opts).unwrap();
        let b10 = error_bounds(&spec, &g, 10.0, &opts).unwrap();
        assert!(b5.d_value > 0.0 && b10.d_value > 0.0);
        assert!(b10.d_value < b5.d_value);
        assert_relative_eq!(b5.kg, 1.0, max_relative = 1e-7);
        // Exact null: P(T>u) = t_2(u) exactly, so L and C3 vanish.
        assert!(b5.c3.abs() < 1e-3, "C3 = {}", b5.c3);
    }

    #[test]
    fn exponential_n2_c3_is_one_third() {
        // i.i.d. exponential, n = 2: G is constant = 1/2 inside the ball,
        // K_g = pi K_{G}..., and the exact residual is t^{-3}/3, giving
        // C3 = 1/3 and a d-bound that reduces to the C2 branch.
        let g = JointDensitySpec::iid(MarginalFamily::Exponential { lambda: 1.0 }, 2).unwrap();
        let spec = TestSpec::OneSampleT { n: 2 };
        let opts = KgOptions::default();
        let b = error_bounds(&spec, &g, 10.0, &opts).unwrap();
        assert_relative_eq!(b.kg, std::f64::consts::PI, max_relative = 1e-8);
        assert_relative_eq!(b.c3, 1.0 / 3.0, max_relative = 1e-3);
        // Gradient is zero, so d = C2 (K/2) u^{-(k+2)} with k = 1.
        let c2 = ShrinkBallContext::new(1, 1.0, 2.0, 0.5).c2();
        let expect = c2 * (b.kg / 2.0) * 10f64.powi(-3);
        assert!((b.d_value - expect).abs() < 0.05 * expect + 1e-9, "{} vs {expect}", b.d_value);
        // And the bound really dominates the exact residual
        // |P(T>u) - K_g t_1(u)| = |1/u - pi t_1(u)| for u > 1.
        for u in [5.0, 10.0, 40.0] {
            let b = error_bounds(&spec, &g, u, &opts).unwrap();
            let resid = (1.0 / u - b.kg * t_tail(1.0, u)).abs();
            assert!(resid <= b.d_value, "u={u}: resid {resid} d {}", b.d_value);
        }
    }

    #[test]
    fn relative_error_quarters_when_u_doubles() {
        // alpha = 2: relative error ~ C3/u^2, so doubling u divides it by
        // about 4. Exact ball integral for the exponential n=2 case:
        // P(T>u) = 1/u.
        let g = JointDensitySpec::iid(MarginalFamily::Exponential { lambda: 1.0 }, 2).unwrap();
        let spec = TestSpec::OneSampleT { n: 2 };
        let opts = KgOptions::default();
        let kg = kg_auto(&spec, &g, &opts).unwrap().value;
        let rel = |u: f64| (1.0 / u - kg * t_tail(1.0, u)) / (1.0 / u);
        for u in [10.0, 20.0] {
            let ratio = rel(u) / rel(2.0 * u);
            assert!((ratio - 4.0).abs() < 1.0, "u={u}: ratio {ratio}");
        }
        // And C3/u^2 predicts the relative error itself.
        let b = error_bounds(&spec, &g, 20.0, &opts).unwrap();
        assert_relative_eq!(rel(20.0), b.c3 / 400.0, max_relative = 5e-3);
    }

    #[test]
    fn instability_rule() {
        // Irreproducible and material: flagged.
        assert!(unstable(1.0, 0.2, 1.0, 1.0));
        // Irreproducible but immaterial: passes.
        assert!(!unstable(1e-9, 2e-10, 1e-9, 1.0));
        // Reproducible: passes.
        assert!(!unstable(1.0, 0.98, 10.0, 1.0));
    }
}
