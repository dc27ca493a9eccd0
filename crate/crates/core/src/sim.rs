//! Tail simulation harness: draw N = 10000 r data vectors, compute raw and
//! corrected one-sided p-values, and report their empirical CDFs over the
//! zoomed window [0, 1/r], plus the origin-slope estimator of K_g.
//!
//! Simulation is chunked for parallelism with per-chunk derived seeds, so a
//! given config produces bit-identical output on any thread count.

use crate::density::JointDensitySpec;
use crate::error::{Error, Result};
use crate::kg::{KgResult, TestSpec};
use crate::rng;
use crate::stats::compute_statistic;
use crate::tails::t_tail;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

/// One simulation study cell.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: TestSpec,
    pub density: JointDensitySpec,
    /// Zoom factor r: the eCDF window is [0, 1/r].
    pub zoom_factor: u64,
    /// Number of simulated vectors; the protocol default is 10000 r.
    pub n_samples: u64,
    pub seed: u64,
    /// eCDF evaluation points on (0, 1/r].
    pub grid_points: usize,
    /// Retain every raw p-value (needed for slope estimation or dumping).
    pub keep_pvalues: bool,
}

impl SimConfig {
    pub fn new(spec: TestSpec, density: JointDensitySpec, zoom_factor: u64) -> Self {
        Self {
            spec,
            density,
            zoom_factor,
            n_samples: 10_000 * zoom_factor,
            seed: 20130610,
            grid_points: 512,
            keep_pvalues: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.density.dim() != self.spec.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.dim(),
                got: self.density.dim(),
            });
        }
        if self.zoom_factor == 0 || self.n_samples == 0 || self.grid_points == 0 {
            return Err(Error::InvalidParameter(
                "zoom factor, sample count, and grid points must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct WindowCounts {
    pub raw: u64,
    pub corrected: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub welch: Option<u64>,
}

/// Empirical CDFs of the p-values over [0, 1/r].
#[derive(Debug, Clone)]
pub struct ECdfSeries {
    pub grid: Vec<f64>,
    pub ecdf_raw: Vec<f64>,
    pub ecdf_corrected: Vec<f64>,
    pub ecdf_welch: Option<Vec<f64>>,
    /// p-values that landed in the window.
    pub counts: WindowCounts,
    pub degeneracy_count: u64,
    pub n_samples: u64,
    /// All raw p-values in draw order (only when `keep_pvalues`).
    pub pvalues_raw: Option<Vec<f64>>,
}

impl ECdfSeries {
    /// Empirical CDF of the raw p-values at q (grid points only).
    pub fn ecdf_raw_at(&self, q: f64) -> f64 {
        let idx = self.grid.partition_point(|&g| g < q);
        if idx == 0 {
            0.0
        } else {
            self.ecdf_raw[idx - 1]
        }
    }

    /// CSV rows `q,ecdf_raw,ecdf_corrected[,ecdf_welch]` at full %.12g
    /// precision.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if let Some(welch) = &self.ecdf_welch {
            writeln!(w, "q,ecdf_raw,ecdf_corrected,ecdf_welch")?;
            for i in 0..self.grid.len() {
                writeln!(
                    w,
                    "{},{},{},{}",
                    fmt_g(self.grid[i], 12),
                    fmt_g(self.ecdf_raw[i], 12),
                    fmt_g(self.ecdf_corrected[i], 12),
                    fmt_g(welch[i], 12)
                )?;
            }
        } else {
            writeln!(w, "q,ecdf_raw,ecdf_corrected")?;
            for i in 0..self.grid.len() {
                writeln!(
                    w,
                    "{},{},{}",
                    fmt_g(self.grid[i], 12),
                    fmt_g(self.ecdf_raw[i], 12),
                    fmt_g(self.ecdf_corrected[i], 12)
                )?;
            }
        }
        Ok(())
    }
}

struct ChunkOutcome {
    hist_raw: Vec<u32>,
    hist_corrected: Vec<u32>,
    hist_welch: Option<Vec<u32>>,
    degeneracies: u64,
    pvalues: Option<Vec<f64>>,
    failure: Option<Error>,
}

/// Run the simulation protocol for one config; `kg` supplies the corrected
/// p-value multiplier.
pub fn run_simulation(cfg: &SimConfig, kg: &KgResult) -> Result<ECdfSeries> {
    cfg.validate()?;
    let is_welch = matches!(cfg.spec, TestSpec::Welch { .. });
    let window = 1.0 / cfg.zoom_factor as f64;
    let m = cfg.grid_points;
    let grid: Vec<f64> = (1..=m).map(|j| j as f64 * window / m as f64).collect();
    let sampler = cfg.density.sampler()?;
    let dim = cfg.spec.dim();
    let tail = cfg.spec.reference_tail();
    let kg_value = kg.value;
    let total = cfg.n_samples as usize;
    let chunks = rng::chunk_count(total);

    let outcomes: Vec<ChunkOutcome> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (lo, hi) = rng::chunk_bounds(c, total);
            let mut r = rng::chunk_rng(cfg.seed, c as u64);
            let mut row = vec![0.0; dim];
            let mut out = ChunkOutcome {
                hist_raw: vec![0u32; m + 1],
                hist_corrected: vec![0u32; m + 1],
                hist_welch: is_welch.then(|| vec![0u32; m + 1]),
                degeneracies: 0,
                pvalues: cfg.keep_pvalues.then(|| Vec::with_capacity(hi - lo)),
                failure: None,
            };
            // bucket 0..m-1: grid cells; bucket m: beyond the window
            let bucket = |v: f64| -> usize { grid.partition_point(|&g| g < v).min(m) };
            'draws: for _ in lo..hi {
                let stat = loop {
                    sampler.sample_into(&mut r, &mut row);
                    match compute_statistic(&cfg.spec, &row) {
                        Ok(s) => break s,
                        Err(Error::DegenerateSample(_)) => {
                            out.degeneracies += 1;
                            if out.degeneracies > 1000 {
                                out.failure = Some(Error::DegenerateSample(
                                    "more than 1000 degenerate draws in one chunk".into(),
                                ));
                                break 'draws;
                            }
                        }
                        Err(e) => {
                            out.failure = Some(e);
                            break 'draws;
                        }
                    }
                };
                let p_raw = match tail.survival(stat.t_star) {
                    Ok(p) => p,
                    Err(e) => {
                        out.failure = Some(e);
                        break 'draws;
                    }
                };
                out.hist_raw[bucket(p_raw)] += 1;
                out.hist_corrected[bucket(kg_value * p_raw)] += 1;
                if let Some(hw) = out.hist_welch.as_mut() {
                    let df = stat.welch_df.expect("welch statistic carries df").max(1.0);
                    hw[bucket(t_tail(df, stat.t_star))] += 1;
                }
                if let Some(ps) = out.pvalues.as_mut() {
                    ps.push(p_raw);
                }
            }
            out
        })
        .collect();

    let mut hist_raw = vec![0u64; m + 1];
    let mut hist_corrected = vec![0u64; m + 1];
    let mut hist_welch = is_welch.then(|| vec![0u64; m + 1]);
    let mut degeneracy_count = 0u64;
    let mut pvalues = cfg.keep_pvalues.then(|| Vec::with_capacity(total));
    for out in outcomes {
        if let Some(e) = out.failure {
            return Err(e);
        }
        for (acc, v) in hist_raw.iter_mut().zip(&out.hist_raw) {
            *acc += *v as u64;
        }
        for (acc, v) in hist_corrected.iter_mut().zip(&out.hist_corrected) {
            *acc += *v as u64;
        }
        if let (Some(acc), Some(hw)) = (hist_welch.as_mut(), out.hist_welch.as_ref()) {
            for (a, v) in acc.iter_mut().zip(hw) {
                *a += *v as u64;
            }
        }
        degeneracy_count += out.degeneracies;
        if let (Some(all), Some(ps)) = (pvalues.as_mut(), out.pvalues) {
            all.extend(ps);
        }
    }

    let nf = cfg.n_samples as f64;
    let to_ecdf = |hist: &[u64]| -> (Vec<f64>, u64) {
        let mut acc = 0u64;
        let mut e = Vec::with_capacity(m);
        for &h in hist.iter().take(m) {
            acc += h;
            e.push(acc as f64 / nf);
        }
        (e, acc)
    };
    let (ecdf_raw, in_raw) = to_ecdf(&hist_raw);
    let (ecdf_corrected, in_corr) = to_ecdf(&hist_corrected);
    let (ecdf_welch, in_welch) = match hist_welch {
        Some(h) => {
            let (e, c) = to_ecdf(&h);
            (Some(e), Some(c))
        }
        None => (None, None),
    };
    Ok(ECdfSeries {
        grid,
        ecdf_raw,
        ecdf_corrected,
        ecdf_welch,
        counts: WindowCounts { raw: in_raw, corrected: in_corr, welch: in_welch },
        degeneracy_count,
        n_samples: cfg.n_samples,
        pvalues_raw: pvalues,
    })
}

/// Empirical K_g: the slope of the p-value CDF at the origin,
/// `count(p <= tau) / (N tau)`, with its binomial standard error.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeEstimate {
    pub kg_hat: f64,
    pub tau: f64,
    pub count_below: u64,
    pub standard_error: f64,
    /// Raised when the estimates at tau and tau/5 disagree by more than 3
    /// combined standard errors (bias warning), or when tau/5 catches no
    /// p-values at all.
    pub consistency_flag: bool,
}

pub fn estimate_kg_slope(pvalues: &[f64], tau: f64) -> Result<SlopeEstimate> {
    if !(0.0..1.0).contains(&tau) || tau <= 0.0 {
        return Err(Error::InvalidInput(format!("tau must lie in (0,1), got {tau}")));
    }
    if pvalues.is_empty() {
        return Err(Error::InvalidInput("no p-values supplied".into()));
    }
    let n = pvalues.len() as f64;
    let count = |t: f64| pvalues.iter().filter(|&&p| p <= t).count() as u64;
    let c1 = count(tau);
    if c1 == 0 {
        return Err(Error::EmptyExceedance(tau));
    }
    let kg_hat = c1 as f64 / (n * tau);
    let se = (c1 as f64).sqrt() / (n * tau);
    let tau2 = tau / 5.0;
    let c2 = count(tau2);
    let consistency_flag = if c2 == 0 {
        true
    } else {
        let kg2 = c2 as f64 / (n * tau2);
        let se2 = (c2 as f64).sqrt() / (n * tau2);
        (kg_hat - kg2).abs() > 3.0 * (se * se + se2 * se2).sqrt()
    };
    Ok(SlopeEstimate { kg_hat, tau, count_below: c1, standard_error: se, consistency_flag })
}

/// Default slope threshold: targets at least ~10 expected in-window
/// exceedances under uniformity, clamped to [10/N, 1e-2].
pub fn default_tau(n_samples: u64) -> f64 {
    let n = n_samples as f64;
    (10.0 / n * (n / 1000.0).max(1.0)).clamp(10.0 / n, 1e-2)
}

/// A named study cell from the simulation protocol.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub config: SimConfig,
}

fn tridiag3(sigma: [f64; 3], rho: f64) -> Vec<Vec<f64>> {
    let [s1, s2, s3] = sigma;
    vec![
        vec![s1 * s1, rho * s1 * s2, 0.0],
        vec![rho * s1 * s2, s2 * s2, rho * s2 * s3],
        vec![0.0, rho * s2 * s3, s3 * s3],
    ]
}

fn block5(sigma: [f64; 3], rho: f64) -> Vec<Vec<f64>> {
    let [s1, s2, s3] = sigma;
    vec![
        vec![s1 * s1, rho * s1 * s2, 0.0, 0.0, 0.0],
        vec![rho * s1 * s2, s2 * s2, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, s1 * s1, rho * s1 * s2, 0.0],
        vec![0.0, 0.0, rho * s1 * s2, s2 * s2, rho * s2 * s3],
        vec![0.0, 0.0, 0.0, rho * s2 * s3, s3 * s3],
    ]
}

/// The built-in study matrix mirrored from the simulation protocol:
/// one-sample (uniform / centered exponential / Cauchy at n = 2, 3, 5),
/// two-sample and F grids, the Welch normal grid at three zoom levels, and
/// the dependent/non-homogeneous multivariate normal settings.
///
/// The covariance parameters for the dependent settings are this crate's
/// documented defaults: sigma = (1,1,1) with rho = +/-0.5, and the
/// unequal-variance setting sigma = (1,2,3) with rho = 0.5.
pub fn builtin_scenarios() -> Vec<Scenario> {
    use crate::density::MarginalFamily as MF;
    let mut list = Vec::new();
    let mut push = |name: String, description: String, config: SimConfig| {
        list.push(Scenario { name, description, config });
    };

    let fig2: [(&str, MF); 3] = [
        ("uniform", MF::Uniform { a: -1.0, b: 1.0 }),
        ("cexp", MF::CenteredExponential { lambda: 1.0 }),
        ("cauchy", MF::Cauchy),
    ];
    for (label, fam) in fig2 {
        for n in [2usize, 3, 5] {
            let density = JointDensitySpec::iid(fam.clone(), n).expect("valid scenario density");
            push(
                format!("fig2-{label}-n{n}"),
                format!("one-sample t, i.i.d. {label}, n={n}"),
                SimConfig::new(TestSpec::OneSampleT { n }, density, 1000),
            );
        }
    }

    let fig3: [(&str, MF); 3] = [
        ("uniform", MF::Uniform { a: -1.0, b: 1.0 }),
        ("exp", MF::Exponential { lambda: 1.0 }),
        ("t2", MF::StudentT { nu: 2.0 }),
    ];
    for (label, fam) in fig3 {
        for (n1, n2) in [(2usize, 2usize), (2, 3), (3, 5)] {
            let density =
                JointDensitySpec::iid(fam.clone(), n1 + n2).expect("valid scenario density");
            push(
                format!("fig3-{label}-{n1}-{n2}"),
                format!("two-sample t, i.i.d. {label}, (n1,n2)=({n1},{n2})"),
                SimConfig::new(TestSpec::TwoSampleT { n1, n2 }, density, 1000),
            );
        }
    }

    let fig4: [(&str, MF); 3] = [
        ("uniform", MF::Uniform { a: -1.0, b: 1.0 }),
        ("exp", MF::Exponential { lambda: 1.0 }),
        ("t5", MF::StudentT { nu: 5.0 }),
    ];
    for (label, fam) in fig4 {
        for (n1, n2) in [(2usize, 2usize), (2, 3), (3, 5)] {
            let density =
                JointDensitySpec::iid(fam.clone(), n1 + n2).expect("valid scenario density");
            push(
                format!("fig4-{label}-{n1}-{n2}"),
                format!("F-test, i.i.d. {label}, (n1,n2)=({n1},{n2})"),
                SimConfig::new(TestSpec::FTest { n1, n2 }, density, 1000),
            );
        }
    }

    for (n1, n2) in [(2usize, 2usize), (2, 3), (3, 5)] {
        for zoom in [1000u64, 10_000, 100_000] {
            let density = JointDensitySpec::iid(MF::Normal { mu: 0.0, sigma: 1.0 }, n1 + n2)
                .expect("valid scenario density");
            let name = if zoom == 1000 {
                format!("fig5-welch-{n1}-{n2}")
            } else {
                format!("fig5-welch-{n1}-{n2}-zf{zoom}")
            };
            push(
                name,
                format!("Welch, i.i.d. standard normal, (n1,n2)=({n1},{n2}), zoom {zoom}"),
                SimConfig::new(TestSpec::Welch { n1, n2 }, density, zoom),
            );
        }
    }

    let settings: [(&str, [f64; 3], f64); 3] = [
        ("pos", [1.0, 1.0, 1.0], 0.5),
        ("neg", [1.0, 1.0, 1.0], -0.5),
        ("unequal", [1.0, 2.0, 3.0], 0.5),
    ];
    for (label, sigma, rho) in settings {
        let cov3 = crate::density::CovarianceSpec::from_rows(&tridiag3(sigma, rho))
            .expect("scenario covariance is SPD");
        push(
            format!("fig6-ost-{label}"),
            format!("one-sample t, MVN tridiagonal, sigma={sigma:?}, rho={rho}"),
            SimConfig::new(
                TestSpec::OneSampleT { n: 3 },
                JointDensitySpec::mvn(cov3).expect("dim 3"),
                1000,
            ),
        );
        let cov5 = crate::density::CovarianceSpec::from_rows(&block5(sigma, rho))
            .expect("scenario covariance is SPD");
        push(
            format!("fig6-tst-{label}"),
            format!("two-sample t, MVN block, sigma={sigma:?}, rho={rho}"),
            SimConfig::new(
                TestSpec::TwoSampleT { n1: 2, n2: 3 },
                JointDensitySpec::mvn(cov5).expect("dim 5"),
                1000,
            ),
        );
    }

    list
}

pub fn find_scenario(name: &str) -> Option<Scenario> {
    builtin_scenarios().into_iter().find(|s| s.name == name)
}

/// C-style `%.{sig}g` formatting: `sig` significant digits, fixed or
/// scientific by exponent, trailing zeros trimmed.
pub fn fmt_g(x: f64, sig: usize) -> String {
    assert!(sig >= 1);
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", sig - 1, x);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if exp >= -4 && exp < sig as i32 {
        let prec = (sig as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.prec$}"))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let s = s.trim_end_matches('0');
    s.trim_end_matches('.').to_string()
}
