//! The F-statistic tail constant
//!
//! `K_g = (Gamma((n1-1)/2) (pi (n1-1))^{(n2-1)/2} / Gamma((n-2)/2))`
//! `      int_{R^{n1}} s1(x)^{n2-1} int_R g(x, r I) dr dx`
//!
//! estimated by importance-sampled Monte Carlo. The integrand grows like
//! `s1(x)^{n2-1}`, which defeats Gaussian proposals, so both `x` and `r`
//! are drawn from heavy-tailed Student-t(3) products scaled to the
//! density's bulk; the standard error comes from the weight variance.

use super::{Diagnostics, KgOptions, KgResult, Method};
use crate::density::JointDensitySpec;
use crate::error::{Error, Result};
use crate::quad::integrate_real_line;
use crate::rng;
use crate::special::ln_gamma;
use rand_distr::{Distribution, StudentT};
use rayon::prelude::*;

const PI: f64 = std::f64::consts::PI;

/// Sample standard deviation (divisor n-1).
pub(crate) fn sample_std(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    (x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn t3_pdf(z: f64) -> f64 {
    6.0 * 3f64.sqrt() / (PI * (3.0 + z * z) * (3.0 + z * z))
}

pub(crate) fn f_prefactor(n1: usize, n2: usize) -> f64 {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    (ln_gamma(0.5 * (n1f - 1.0)) + 0.5 * (n2f - 1.0) * (PI * (n1f - 1.0)).ln()
        - ln_gamma(0.5 * (n1f + n2f - 2.0)))
    .exp()
}

struct ChunkStat {
    sum: f64,
    sum_sq: f64,
    bad: u64,
}

/// Monte Carlo estimate of the F-statistic K_g.
pub fn kg_f_integral(
    g: &JointDensitySpec,
    n1: usize,
    n2: usize,
    opts: &KgOptions,
) -> Result<KgResult> {
    if n1 < 2 || n2 < 2 {
        return Err(Error::InvalidParameter("n1 and n2 must be at least 2".into()));
    }
    let n = n1 + n2;
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
    }
    if opts.mc_samples < 10_000 {
        return Err(Error::InvalidParameter("mc_samples must be at least 10^4".into()));
    }
    let scales = g.bulk_scales(opts.seed)?;
    // Fatten the proposal so the bulk of g sits well inside its core.
    let sx: Vec<f64> = scales[..n1].iter().map(|s| 2.5 * s).collect();
    let mut ys: Vec<f64> = scales[n1..].to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sr = 2.5 * (n2 as f64).sqrt() * ys[ys.len() / 2];
    let prefactor = f_prefactor(n1, n2);
    let inv_sqrt2 = 1.0 / (n2 as f64).sqrt();
    let t3 = StudentT::new(3.0).expect("t(3) is valid");

    let total = opts.mc_samples as usize;
    let chunks = rng::chunk_count(total);
    let stats: Vec<ChunkStat> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = rng::chunk_bounds(c, total);
            let mut r = rng::chunk_rng(opts.seed, c as u64);
            let mut point = vec![0.0; n];
            let mut x = vec![0.0; n1];
            let mut stat = ChunkStat { sum: 0.0, sum_sq: 0.0, bad: 0 };
            for _ in lo..hi {
                let mut q = 1.0;
                for (xi, si) in x.iter_mut().zip(&sx) {
                    let z: f64 = t3.sample(&mut r);
                    *xi = si * z;
                    q *= t3_pdf(z) / si;
                }
                let zr: f64 = t3.sample(&mut r);
                let rv = sr * zr;
                q *= t3_pdf(zr) / sr;
                point[..n1].copy_from_slice(&x);
                for p in point.iter_mut().skip(n1) {
                    *p = rv * inv_sqrt2;
                }
                let w = sample_std(&x).powi(n2 as i32 - 1) * g.pdf_unchecked(&point) / q;
                if w.is_finite() {
                    stat.sum += w;
                    stat.sum_sq += w * w;
                } else {
                    stat.bad += 1;
                }
            }
            stat
        })
        .collect();

    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut bad = 0u64;
    for s in stats {
        sum += s.sum;
        sum_sq += s.sum_sq;
        bad += s.bad;
    }
    if bad > 0 {
        return Err(Error::MonteCarlo(format!("{bad} non-finite importance weights")));
    }
    let nf = total as f64;
    let mean = sum / nf;
    let var = (sum_sq / nf - mean * mean).max(0.0);
    let se = (var / nf).sqrt();
    let value = prefactor * mean;
    let abs_err = prefactor * se;
    if let Some(ceiling) = opts.se_ceiling {
        if abs_err > ceiling {
            return Err(Error::MonteCarlo(format!(
                "standard error {abs_err:.3e} above requested ceiling {ceiling:.3e}"
            )));
        }
    }
    KgResult::checked(
        value,
        Method::MonteCarlo,
        abs_err,
        Diagnostics {
            truncation_radius: None,
            evaluations: opts.mc_samples * (n1 as u64 + 1),
            mc_samples: Some(opts.mc_samples),
        },
    )
}

/// Deterministic cross-check of the F-statistic K_g for n1 = 2 by nested
/// quadrature over (x1, x2, r). Slow; intended for validation.
pub fn kg_f_quadrature_n1_2(g: &JointDensitySpec, n2: usize, opts: &KgOptions) -> Result<KgResult> {
    let n = 2 + n2;
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: g.dim() });
    }
    let scales = g.bulk_scales(opts.seed)?;
    let (sx1, sx2) = (scales[0], scales[1]);
    let mut ys: Vec<f64> = scales[2..].to_vec();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let sr = (n2 as f64).sqrt() * ys[ys.len() / 2];
    let prefactor = f_prefactor(2, n2);
    let inv_sqrt2 = 1.0 / (n2 as f64).sqrt();
    let p_exp = n2 as i32 - 1;

    let rel = opts.rel_tol.max(1e-8);
    let outer = integrate_real_line(
        |x1| {
            let mid = integrate_real_line(
                |x2| {
                    let mut point = vec![0.0; n];
                    point[0] = x1;
                    point[1] = x2;
                    // s1 for two points is |x1 - x2| / sqrt(2)
                    let s1 = (x1 - x2).abs() * std::f64::consts::FRAC_1_SQRT_2;
                    let inner = integrate_real_line(
                        |r| {
                            for p in point.iter_mut().skip(2) {
                                *p = r * inv_sqrt2;
                            }
                            g.pdf_unchecked(&point)
                        },
                        1e-14,
                        rel * 0.01,
                        sr,
                    );
                    match inner {
                        Ok(v) => s1.powi(p_exp) * v.value,
                        Err(_) => f64::NAN,
                    }
                },
                1e-13,
                rel * 0.1,
                sx2,
            );
            match mid {
                Ok(v) => v.value,
                Err(_) => f64::NAN,
            }
        },
        opts.abs_tol / prefactor,
        rel,
        sx1,
    )?;
    KgResult::checked(
        prefactor * outer.value,
        Method::Quadrature,
        prefactor * outer.abs_error,
        Diagnostics {
            truncation_radius: Some(outer.truncation_radius),
            evaluations: outer.evaluations,
            mc_samples: None,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{CovarianceSpec, JointDensitySpec, MarginalFamily};

    fn two_block_gaussian(n1: usize, n2: usize, s1: f64, s2: f64) -> JointDensitySpec {
        let n = n1 + n2;
        let mut rows = vec![vec![0.0; n]; n];
        for (i, row) in rows.iter_mut().enumerate() {
            row[i] = if i < n1 { s1 * s1 } else { s2 * s2 };
        }
        JointDensitySpec::mvn(CovarianceSpec::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn equal_variances_give_one() {
        let g = two_block_gaussian(2, 2, 1.0, 1.0);
        let opts = KgOptions { mc_samples: 200_000, ..Default::default() };
        let r = kg_f_integral(&g, 2, 2, &opts).unwrap();
        assert!(
            (r.value - 1.0).abs() < 3.0 * r.abs_error_estimate,
            "{} +- {}",
            r.value,
            r.abs_error_estimate
        );
    }

    #[test]
    fn sigma_ratio_power_law() {
        // (s1/s2)^{n2-1} for independent isotropic Gaussian samples.
        for (n1, n2, s1, s2) in [(2usize, 3usize, 2.0f64, 1.0f64), (3, 2, 0.5, 1.0)] {
            let g = two_block_gaussian(n1, n2, s1, s2);
            let opts = KgOptions { mc_samples: 400_000, ..Default::default() };
            let r = kg_f_integral(&g, n1, n2, &opts).unwrap();
            let want = (s1 / s2).powi(n2 as i32 - 1);
            assert!(
                (r.value - want).abs() < 3.0 * r.abs_error_estimate,
                "(n1,n2)=({n1},{n2}): {} +- {} vs {want}",
                r.value,
                r.abs_error_estimate
            );
        }
    }

    #[test]
    fn quadrature_cross_check_n1_2() {
        let g = two_block_gaussian(2, 3, 2.0, 1.0);
        let opts = KgOptions { rel_tol: 1e-7, mc_samples: 400_000, ..Default::default() };
        let q = kg_f_quadrature_n1_2(&g, 3, &opts).unwrap();
        let want = 4.0; // (2)^{3-1}
        assert!((q.value / want - 1.0).abs() < 1e-5, "{} vs {want}", q.value);
        let mc = kg_f_integral(&g, 2, 3, &opts).unwrap();
        assert!((mc.value - q.value).abs() < 3.0 * mc.abs_error_estimate);
    }

    #[test]
    fn exponential_blocks_nongaussian() {
        // Independent i.i.d. exponential blocks: K_g factorizes as
        // prefactor * E-type integrals we can build from 1-D quadrature.
        let g = JointDensitySpec::product(vec![
            JointDensitySpec::iid(MarginalFamily::Exponential { lambda: 1.0 }, 2).unwrap(),
            JointDensitySpec::iid(MarginalFamily::Exponential { lambda: 1.0 }, 2).unwrap(),
        ])
        .unwrap();
        let opts = KgOptions { mc_samples: 600_000, ..Default::default() };
        let mc = kg_f_integral(&g, 2, 2, &opts).unwrap();
        let q = kg_f_quadrature_n1_2(&g, 2, &opts).unwrap();
        assert!(
            (mc.value - q.value).abs() < 3.0 * mc.abs_error_estimate,
            "mc {} +- {} vs quad {}",
            mc.value,
            mc.abs_error_estimate,
            q.value
        );
    }

    #[test]
    fn se_ceiling_enforced() {
        let g = two_block_gaussian(2, 2, 1.0, 1.0);
        let opts =
            KgOptions { mc_samples: 10_000, se_ceiling: Some(1e-12), ..Default::default() };
        assert!(matches!(kg_f_integral(&g, 2, 2, &opts), Err(Error::MonteCarlo(_))));
    }
}
