//! Adaptive Gauss–Kronrod quadrature plus the semi-infinite radial
//! integrator every K_g route is built on.
//!
//! The radial integrator grows its truncation radius geometrically until the
//! estimated tail contribution (integrand at the frontier times the
//! remaining geometric envelope) drops below 1e-3 of the requested
//! tolerance; integrands with polynomial tails get a measured-power
//! extrapolation bound instead of an exponential one. An integrand whose
//! tail refuses to decay faster than 1/r triggers a divergence error rather
//! than a number.

use crate::error::{Error, Result};

// 15-point Kronrod abscissae/weights with the embedded 7-point Gauss rule
// (QUADPACK dqk15 constants).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: u64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = 0.0;
    let mut resabs = kronrod.abs();
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        let fsum = f1 + f2;
        kronrod += WGK[j] * fsum;
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * fsum;
        }
    }
    let value = kronrod * half;
    let mut err = ((kronrod - gauss) * half).abs();
    // QUADPACK-style error rescaling keeps the estimate honest on rough
    // integrands where |K - G| understates the truncation error.
    let resasc = resabs * half.abs();
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        if scale < 1.0 {
            err = resasc * scale;
        }
    }
    (value, err)
}

/// Adaptive integration of `f` over the finite interval `[a, b]`.
///
/// Refinement bisects the segment currently carrying the largest error
/// estimate until `sum(err) <= max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    integrate_seeded(&mut f, &[a, b], abs_tol, rel_tol, max_segments)
}

/// Same as [`integrate`] but starting from a caller-supplied partition
/// (breakpoints must be increasing).
pub fn integrate_seeded<F: FnMut(f64) -> f64>(
    f: &mut F,
    breakpoints: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<QuadResult> {
    assert!(breakpoints.len() >= 2);
    let mut evals: u64 = 0;
    let mut segs: Vec<Segment> = Vec::with_capacity(64);
    for w in breakpoints.windows(2) {
        let (v, e) = gk15(f, w[0], w[1]);
        evals += 15;
        segs.push(Segment { a: w[0], b: w[1], value: v, error: e });
    }
    loop {
        let total: f64 = segs.iter().map(|s| s.value).sum();
        let err: f64 = segs.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * total.abs());
        if err <= target {
            return Ok(QuadResult { value: total, abs_error: err, evaluations: evals });
        }
        if segs.len() >= max_segments {
            // Accept a modest overshoot instead of failing outright; the
            // caller sees the achieved error and can decide.
            if err <= 100.0 * target {
                return Ok(QuadResult { value: total, abs_error: err, evaluations: evals });
            }
            return Err(Error::QuadratureFailure(format!(
                "error {err:.3e} above target {target:.3e} after {} segments",
                segs.len()
            )));
        }
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).unwrap())
            .unwrap();
        let s = segs[idx];
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval exhausted at f64 resolution; freeze its error.
            segs[idx].error = 0.0;
            continue;
        }
        let (v1, e1) = gk15(f, s.a, mid);
        let (v2, e2) = gk15(f, mid, s.b);
        evals += 30;
        segs[idx] = Segment { a: s.a, b: mid, value: v1, error: e1 };
        segs.push(Segment { a: mid, b: s.b, value: v2, error: e2 });
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RadialResult {
    pub value: f64,
    pub abs_error: f64,
    pub evaluations: u64,
    pub truncation_radius: f64,
}

/// Integrate `f` over `[0, infinity)` for a nonnegative integrand that
/// eventually decays (radial K_g integrands).
///
/// `scale_hint` sets the initial bracketing radius; it only affects speed.
pub fn integrate_radial<F: FnMut(f64) -> f64>(
    mut f: F,
    abs_tol: f64,
    rel_tol: f64,
    scale_hint: f64,
) -> Result<RadialResult> {
    let r0 = if scale_hint.is_finite() && scale_hint > 0.0 { scale_hint } else { 1.0 };
    let mut evals: u64 = 0;
    let mut breaks: Vec<f64> = vec![0.0, r0];
    let mut mass_estimate = {
        let (v, _) = gk15(&mut f, 0.0, r0);
        evals += 15;
        v.abs()
    };
    let mut r = r0;
    let give_up_radius = 1e15 * r0;
    loop {
        let next = 2.0 * r;
        let (v, _) = gk15(&mut f, r, next);
        evals += 15;
        mass_estimate += v.abs();
        breaks.push(next);

        let tol_now = abs_tol.max(rel_tol * mass_estimate);
        let y1 = f(r).abs();
        let y2 = f(next).abs();
        evals += 2;
        let tail_bound = if y2 == 0.0 && v == 0.0 {
            0.0
        } else if y2 > 0.0 && y1 > y2 {
            // Measured decay power s (f ~ r^s): remaining geometric envelope
            // sum_j f(next * 2^j) * next * 2^j = f(next) * next / (1 - 2^{1+s}).
            let s = (y2 / y1).log2();
            if s >= -1.02 {
                f64::INFINITY
            } else {
                y2 * next / (1.0 - 2f64.powf(1.0 + s))
            }
        } else if y2 == 0.0 {
            // Support ended inside (r, next]; the panel integral already
            // captured it.
            0.0
        } else {
            f64::INFINITY
        };

        // Never trust an apparently dead tail until well past the hinted
        // bulk scale; mass sitting far from the origin would otherwise be
        // silently dropped.
        if mass_estimate > 0.0 && tail_bound <= 1e-3 * tol_now && next >= 128.0 * r0 {
            break;
        }
        if next > give_up_radius {
            if mass_estimate == 0.0 {
                // No mass anywhere along the ray.
                return Ok(RadialResult {
                    value: 0.0,
                    abs_error: 0.0,
                    evaluations: evals,
                    truncation_radius: next,
                });
            }
            return Err(Error::Divergent(format!(
                "radial integrand still contributes at r = {next:.3e} \
                 (tail bound {tail_bound:.3e}); K_g may be infinite"
            )));
        }
        r = next;
    }
    let truncation_radius = *breaks.last().unwrap();
    let res = integrate_seeded(&mut f, &breaks, abs_tol, rel_tol, 4000)?;
    Ok(RadialResult {
        value: res.value,
        abs_error: res.abs_error,
        evaluations: evals + res.evaluations,
        truncation_radius,
    })
}

/// Integrate `f` over the whole real line by folding onto `[0, infinity)`.
pub fn integrate_real_line<F: FnMut(f64) -> f64>(
    mut f: F,
    abs_tol: f64,
    rel_tol: f64,
    scale_hint: f64,
) -> Result<RadialResult> {
    integrate_radial(move |r| f(r) + f(-r), abs_tol, rel_tol, scale_hint)
}
