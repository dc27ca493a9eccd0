//! Reference survival functions (Student t and Fisher F), the two-term
//! asymptotic expansion of the F tail, and the shrinking-ball constants
//! that every tail theorem in the crate reduces to.
//!
//! The shrinking-ball setup: for `F(u) = integral of G over the ball of
//! radius 1/u` and `f(u) = alpha^{-1} F_{m,k}(u^2)`,
//!
//! ```text
//! F(u)/f(u) -> K_{G,alpha} = (alpha k B(m/2,k/2) / (2 (k/m)^{k/2})) Vol(B_k) G(0)
//! |F(u) - K f(u)| <= C1 u^{-(k+1)} sup ||grad G|| + C2 (K/alpha) u^{-(k+2)}
//! u^{k+2} (F(u) - K f(u)) -> L_{G,alpha}
//! ```
//!
//! with `C1 = Vol(B_k)` and `C2 = k(k+m)/(m(k+2)) * (k/m)^{k/2} / B(m/2,k/2)`.

use crate::error::{Error, Result};
use crate::special::{ln_beta, reg_inc_beta, vol_unit_ball};

/// Survival function of Student's t with `k` degrees of freedom: P(T > u).
///
/// `k` may be fractional (Welch's data-estimated degrees of freedom).
pub fn t_tail(k: f64, u: f64) -> f64 {
    assert!(k >= 1.0, "t_tail needs k >= 1");
    if u == 0.0 {
        return 0.5;
    }
    if u < 0.0 {
        return 1.0 - t_tail(k, -u);
    }
    0.5 * reg_inc_beta(0.5 * k, 0.5, k / (k + u * u))
}

/// Survival function of Fisher's F with `(m, k)` degrees of freedom.
pub fn f_tail(m: f64, k: f64, u: f64) -> Result<f64> {
    if m < 1.0 || k < 1.0 {
        return Err(Error::InvalidParameter(format!("f_tail needs m,k >= 1, got ({m},{k})")));
    }
    if u < 0.0 {
        return Err(Error::InvalidInput(format!("f_tail needs u >= 0, got {u}")));
    }
    if u == 0.0 {
        return Ok(1.0);
    }
    Ok(reg_inc_beta(0.5 * k, 0.5 * m, k / (k + m * u)))
}

/// Two-term asymptotic expansion of `f(u) = alpha^{-1} F_{m,k}(u^2)`:
///
/// `(2 (k/m)^{k/2} / (alpha k B(m/2,k/2))) [u^{-k} - (k^2(k+m)/(2m(k+2))) u^{-(k+2)}]`
///
/// Errors below the validity point (second bracketed term not smaller than
/// the first).
pub fn f_tail_expansion(m: f64, k: f64, alpha: f64, u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Err(Error::InvalidInput("expansion needs u > 0".into()));
    }
    let lead = 2.0 * (k / m).powf(0.5 * k) / (alpha * k * ln_beta(0.5 * m, 0.5 * k).exp());
    let first = u.powf(-k);
    let second = k * k * (k + m) / (2.0 * m * (k + 2.0)) * u.powf(-(k + 2.0));
    if second >= first {
        return Err(Error::ExpansionOutOfRange(format!(
            "u = {u} below the expansion's validity point for (m,k) = ({m},{k})"
        )));
    }
    Ok(lead * (first - second))
}

/// Everything the shrinking-ball lemma needs about one integrand G.
#[derive(Debug, Clone, Copy)]
pub struct ShrinkBallContext {
    /// Ball dimension.
    pub k: usize,
    /// Numerator degrees of freedom of the reference F tail.
    pub m: f64,
    /// Tail scaling: 2 for t-based statistics, 1 for F.
    pub alpha: f64,
    /// G(0).
    pub g0: f64,
    /// sup of ||grad G|| over the relevant ball (0 if unknown/constant G).
    pub grad_sup_norm: f64,
    /// trace of the Hessian of G at 0.
    pub hess_trace: f64,
}

impl ShrinkBallContext {
    pub fn new(k: usize, m: f64, alpha: f64, g0: f64) -> Self {
        Self { k, m, alpha, g0, grad_sup_norm: 0.0, hess_trace: 0.0 }
    }

    pub fn c1(&self) -> f64 {
        vol_unit_ball(self.k)
    }

    pub fn c2(&self) -> f64 {
        let k = self.k as f64;
        let m = self.m;
        k * (k + m) / (m * (k + 2.0)) * (k / m).powf(0.5 * k) / ln_beta(0.5 * m, 0.5 * k).exp()
    }
}

/// First-order constant `K_{G,alpha}`.
pub fn shrink_ball_k(ctx: &ShrinkBallContext) -> f64 {
    let k = ctx.k as f64;
    ctx.alpha * k * ln_beta(0.5 * ctx.m, 0.5 * k).exp() / (2.0 * (k / ctx.m).powf(0.5 * k))
        * vol_unit_ball(ctx.k)
        * ctx.g0
}

/// Bound on `|F(u) - K_{G,alpha} f(u)|` for the ball of radius `1/u`
/// (requires `ctx.grad_sup_norm` taken over that same ball).
pub fn shrink_ball_bound(ctx: &ShrinkBallContext, u: f64) -> f64 {
    let k = ctx.k as f64;
    let kg = shrink_ball_k(ctx);
    ctx.c1() * u.powf(-(k + 1.0)) * ctx.grad_sup_norm
        + ctx.c2() * (kg / ctx.alpha) * u.powf(-(k + 2.0))
}

/// Second-order constant `L_{G,alpha}` with
/// `u^{k+2} (F(u) - K f(u)) -> L`.
///
/// Substituting the order-two Taylor expansion of F and the two-term tail
/// expansion of f gives `L = C1 tr(Hess G(0)) / (2(k+2)) + C2 K / alpha`;
/// the second term enters with a plus because the expansion of f carries
/// the `u^{-(k+2)}` term with a minus. (Sanity anchor: for the exact-null
/// Student integrand the residual is identically zero, and this formula
/// indeed yields L = 0 there.)
pub fn shrink_ball_second_order(ctx: &ShrinkBallContext) -> f64 {
    let k = ctx.k as f64;
    let kg = shrink_ball_k(ctx);
    ctx.c1() * ctx.hess_trace / (2.0 * (k + 2.0)) + ctx.c2() * kg / ctx.alpha
}

/// Reference survival function of a test statistic's nominal null
/// distribution, together with the lemma-level scaling exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceTail {
    /// Student t with `k` degrees of freedom (alpha = 2).
    StudentT { k: f64 },
    /// Fisher F with `(m, k)` degrees of freedom (alpha = 1).
    FisherF { m: f64, k: f64 },
}

impl ReferenceTail {
    pub fn alpha(&self) -> f64 {
        match self {
            ReferenceTail::StudentT { .. } => 2.0,
            ReferenceTail::FisherF { .. } => 1.0,
        }
    }

    /// The (alpha, m, k) triple of the error-bound machinery.
    pub fn triple(&self) -> (f64, f64, f64) {
        match *self {
            ReferenceTail::StudentT { k } => (2.0, 1.0, k),
            ReferenceTail::FisherF { m, k } => (1.0, m, k),
        }
    }

    pub fn survival(&self, u: f64) -> Result<f64> {
        match *self {
            ReferenceTail::StudentT { k } => Ok(t_tail(k, u)),
            ReferenceTail::FisherF { m, k } => f_tail(m, k, u),
        }
    }
}
