//! Joint density specifications: i.i.d. marginals, zero-mean multivariate
//! normals, independent block products, and user-supplied densities.
//!
//! The JSON schema is part of the CLI contract:
//!
//! ```json
//! {"kind":"iid","family":"cauchy","params":{},"n":2}
//! {"kind":"mvn","cov":[[1.0,0.5],[0.5,1.0]]}
//! {"kind":"product","blocks":[ ... ]}
//! ```

use super::covariance::CovarianceSpec;
use super::marginal::{MarginalFamily, MarginalSampler};
use crate::error::{Error, Result};
use crate::rng;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

type CustomPdf = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type CustomSampler = Arc<dyn Fn(&mut dyn RngCore, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum JointDensitySpec {
    Iid { marginal: MarginalFamily, n: usize },
    Mvn { cov: Arc<CovarianceSpec> },
    Product { blocks: Vec<JointDensitySpec> },
    /// User-supplied density; must come with both a pdf and a sampler.
    Custom { dim: usize, pdf: CustomPdf, sampler: CustomSampler },
}

impl std::fmt::Debug for JointDensitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Iid { marginal, n } => write!(f, "Iid({marginal:?}, n={n})"),
            Self::Mvn { cov } => write!(f, "Mvn(dim={})", cov.dim()),
            Self::Product { blocks } => f.debug_list().entries(blocks.iter()).finish(),
            Self::Custom { dim, .. } => write!(f, "Custom(dim={dim})"),
        }
    }
}

impl JointDensitySpec {
    pub fn iid(marginal: MarginalFamily, n: usize) -> Result<Self> {
        marginal.validate()?;
        if n < 2 {
            return Err(Error::InvalidParameter(format!("dimension n = {n} must be at least 2")));
        }
        Ok(Self::Iid { marginal, n })
    }

    pub fn mvn(cov: CovarianceSpec) -> Result<Self> {
        if cov.dim() < 2 {
            return Err(Error::InvalidParameter("mvn dimension must be at least 2".into()));
        }
        Ok(Self::Mvn { cov: Arc::new(cov) })
    }

    pub fn product(blocks: Vec<JointDensitySpec>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("product needs at least one block".into()));
        }
        Ok(Self::Product { blocks })
    }

    pub fn custom(dim: usize, pdf: CustomPdf, sampler: CustomSampler) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter("custom dimension must be at least 2".into()));
        }
        Ok(Self::Custom { dim, pdf, sampler })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Iid { n, .. } => *n,
            Self::Mvn { cov } => cov.dim(),
            Self::Product { blocks } => blocks.iter().map(|b| b.dim()).sum(),
            Self::Custom { dim, .. } => *dim,
        }
    }

    /// Joint density at `x`. Rejects dimension mismatches and non-finite
    /// coordinates.
    pub fn pdf(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("pdf input has non-finite coordinates".into()));
        }
        Ok(self.pdf_unchecked(x))
    }

    /// Joint density without input validation; callers guarantee the
    /// dimension matches and coordinates are finite.
    pub fn pdf_unchecked(&self, x: &[f64]) -> f64 {
        match self {
            Self::Iid { marginal, .. } => {
                let mut p = 1.0;
                for &xi in x {
                    p *= marginal.pdf(xi);
                    if p == 0.0 {
                        return 0.0;
                    }
                }
                p
            }
            Self::Mvn { cov } => cov.mvn_pdf(x),
            Self::Product { blocks } => {
                let mut p = 1.0;
                let mut off = 0;
                for b in blocks {
                    let d = b.dim();
                    p *= b.pdf_unchecked(&x[off..off + d]);
                    if p == 0.0 {
                        return 0.0;
                    }
                    off += d;
                }
                p
            }
            Self::Custom { pdf, .. } => pdf(x),
        }
    }

    /// Prebuilt sampler.
    pub fn sampler(&self) -> Result<JointSampler> {
        Ok(match self {
            Self::Iid { marginal, n } => JointSampler::Iid { m: marginal.sampler()?, n: *n },
            Self::Mvn { cov } => JointSampler::Mvn { cov: cov.clone() },
            Self::Product { blocks } => JointSampler::Product {
                parts: blocks.iter().map(|b| b.sampler()).collect::<Result<Vec<_>>>()?,
            },
            Self::Custom { dim, sampler, .. } => {
                JointSampler::Custom { dim: *dim, sampler: sampler.clone() }
            }
        })
    }

    /// Sample `count` rows deterministically from `seed`. Chunks are
    /// generated in parallel with independently derived sub-seeds, so the
    /// output does not depend on the number of worker threads.
    pub fn sample_matrix(&self, seed: u64, count: usize) -> Result<Vec<f64>> {
        if count == 0 {
            return Err(Error::InvalidParameter("sample count must be at least 1".into()));
        }
        let n = self.dim();
        let sampler = self.sampler()?;
        let chunks = rng::chunk_count(count);
        let rows: Vec<Vec<f64>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let (lo, hi) = rng::chunk_bounds(c, count);
                let mut r = rng::chunk_rng(seed, c as u64);
                let mut out = vec![0.0; (hi - lo) * n];
                for i in 0..(hi - lo) {
                    sampler.sample_into(&mut r, &mut out[i * n..(i + 1) * n]);
                }
                out
            })
            .collect();
        Ok(rows.concat())
    }

    /// Robust per-coordinate bulk scales (1.4826 * MAD over 1024 probe
    /// draws with a seed derived from `probe_seed`). Used to scale Monte
    /// Carlo proposals and quadrature bracketing.
    pub fn bulk_scales(&self, probe_seed: u64) -> Result<Vec<f64>> {
        const PROBE: usize = 1024;
        let n = self.dim();
        let sampler = self.sampler()?;
        let mut r = rng::chunk_rng(probe_seed, u64::MAX);
        let mut cols = vec![Vec::with_capacity(PROBE); n];
        let mut row = vec![0.0; n];
        for _ in 0..PROBE {
            sampler.sample_into(&mut r, &mut row);
            for (c, &v) in cols.iter_mut().zip(row.iter()) {
                c.push(v);
            }
        }
        Ok(cols
            .into_iter()
            .map(|mut c| {
                let med = median_inplace(&mut c);
                let mut dev: Vec<f64> = c.iter().map(|v| (v - med).abs()).collect();
                let mad = median_inplace(&mut dev);
                (1.4826 * mad).max(1e-6)
            })
            .collect())
    }

    /// If this density is a zero-mean multivariate normal (possibly
    /// assembled from independent Gaussian blocks), return its covariance.
    pub fn as_zero_mean_gaussian(&self) -> Option<CovarianceSpec> {
        match self {
            Self::Iid { marginal: MarginalFamily::Normal { mu, sigma }, n } if *mu == 0.0 => {
                let m = nalgebra::DMatrix::from_diagonal_element(*n, *n, sigma * sigma);
                CovarianceSpec::new(m).ok()
            }
            Self::Mvn { cov } => Some((**cov).clone()),
            Self::Product { blocks } => {
                let parts: Option<Vec<CovarianceSpec>> =
                    blocks.iter().map(|b| b.as_zero_mean_gaussian()).collect();
                let parts = parts?;
                let n: usize = parts.iter().map(|p| p.dim()).sum();
                let mut m = nalgebra::DMatrix::zeros(n, n);
                let mut off = 0;
                for p in &parts {
                    let d = p.dim();
                    m.view_mut((off, off), (d, d)).copy_from(p.matrix());
                    off += d;
                }
                CovarianceSpec::new(m).ok()
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let shadow = DensityJson::try_from(self)?;
        serde_json::to_value(shadow).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let shadow: DensityJson = serde_json::from_value(v.clone())
            .map_err(|e| Error::InvalidInput(format!("bad density spec: {e}")))?;
        shadow.build()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let shadow: DensityJson = serde_json::from_str(s)
            .map_err(|e| Error::InvalidInput(format!("bad density spec: {e}")))?;
        shadow.build()
    }
}

fn median_inplace(v: &mut [f64]) -> f64 {
    let mid = v.len() / 2;
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[derive(Clone)]
pub enum JointSampler {
    Iid { m: MarginalSampler, n: usize },
    Mvn { cov: Arc<CovarianceSpec> },
    Product { parts: Vec<JointSampler> },
    Custom { dim: usize, sampler: CustomSampler },
}

impl JointSampler {
    pub fn dim(&self) -> usize {
        match self {
            Self::Iid { n, .. } => *n,
            Self::Mvn { cov } => cov.dim(),
            Self::Product { parts } => parts.iter().map(|p| p.dim()).sum(),
            Self::Custom { dim, .. } => *dim,
        }
    }

    pub fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            Self::Iid { m, n } => {
                debug_assert_eq!(out.len(), *n);
                for o in out.iter_mut() {
                    *o = m.sample(rng);
                }
            }
            Self::Mvn { cov } => cov.sample_into(rng, out),
            Self::Product { parts } => {
                let mut off = 0;
                for p in parts {
                    let d = p.dim();
                    p.sample_into(rng, &mut out[off..off + d]);
                    off += d;
                }
            }
            Self::Custom { sampler, .. } => sampler(rng, out),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum DensityJson {
    Iid {
        family: String,
        #[serde(default)]
        params: serde_json::Map<String, serde_json::Value>,
        n: usize,
    },
    Mvn {
        cov: Vec<Vec<f64>>,
    },
    Product {
        blocks: Vec<DensityJson>,
    },
}

impl DensityJson {
    fn build(self) -> Result<JointDensitySpec> {
        match self {
            DensityJson::Iid { family, params, n } => {
                let marginal = family_from_params(&family, &params)?;
                JointDensitySpec::iid(marginal, n)
            }
            DensityJson::Mvn { cov } => JointDensitySpec::mvn(CovarianceSpec::from_rows(&cov)?),
            DensityJson::Product { blocks } => JointDensitySpec::product(
                blocks.into_iter().map(|b| b.build()).collect::<Result<Vec<_>>>()?,
            ),
        }
    }
}

impl TryFrom<&JointDensitySpec> for DensityJson {
    type Error = Error;

    fn try_from(spec: &JointDensitySpec) -> Result<Self> {
        match spec {
            JointDensitySpec::Iid { marginal, n } => Ok(DensityJson::Iid {
                family: marginal.name().to_string(),
                params: family_params(marginal),
                n: *n,
            }),
            JointDensitySpec::Mvn { cov } => Ok(DensityJson::Mvn { cov: cov.to_rows() }),
            JointDensitySpec::Product { blocks } => Ok(DensityJson::Product {
                blocks: blocks.iter().map(DensityJson::try_from).collect::<Result<Vec<_>>>()?,
            }),
            JointDensitySpec::Custom { .. } => {
                Err(Error::InvalidInput("custom densities have no JSON form".into()))
            }
        }
    }
}

struct Params<'a> {
    map: &'a serde_json::Map<String, serde_json::Value>,
    family: &'a str,
    used: Vec<&'a str>,
}

impl<'a> Params<'a> {
    fn get(&mut self, key: &'static str) -> Result<Option<f64>> {
        self.used.push(key);
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_f64()
                .map(Some)
                .ok_or_else(|| Error::InvalidInput(format!("{}.{key} must be a number", self.family))),
        }
    }

    fn required(&mut self, key: &'static str) -> Result<f64> {
        self.get(key)?.ok_or_else(|| {
            Error::InvalidInput(format!("family '{}' requires parameter '{key}'", self.family))
        })
    }

    fn or_default(&mut self, key: &'static str, default: f64) -> Result<f64> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn finish(self) -> Result<()> {
        for k in self.map.keys() {
            if !self.used.contains(&k.as_str()) {
                return Err(Error::InvalidInput(format!(
                    "unknown parameter '{k}' for family '{}'",
                    self.family
                )));
            }
        }
        Ok(())
    }
}

fn family_from_params(
    family: &str,
    map: &serde_json::Map<String, serde_json::Value>,
) -> Result<MarginalFamily> {
    use MarginalFamily::*;
    let mut p = Params { map, family, used: Vec::new() };
    let fam = match family {
        "normal" => Normal { mu: p.or_default("mu", 0.0)?, sigma: p.or_default("sigma", 1.0)? },
        "half-normal" => HalfNormal { sigma: p.or_default("sigma", 1.0)? },
        "log-normal" => LogNormal { mu: p.or_default("mu", 0.0)?, sigma: p.or_default("sigma", 1.0)? },
        "chi" => Chi { nu: p.required("nu")? },
        "chi-squared" => ChiSquared { nu: p.required("nu")? },
        "inverse-chi-squared" => InverseChiSquared { nu: p.required("nu")? },
        "f" => FisherF { mu: p.required("mu")?, nu: p.required("nu")? },
        "student-t" => StudentT { nu: p.required("nu")? },
        "cauchy" => Cauchy,
        "beta" => Beta { alpha: p.required("alpha")?, beta: p.required("beta")? },
        "gamma" => Gamma { alpha: p.required("alpha")?, theta: p.or_default("theta", 1.0)? },
        "inverse-gamma" => {
            InverseGamma { alpha: p.required("alpha")?, theta: p.or_default("theta", 1.0)? }
        }
        "uniform" => Uniform { a: p.required("a")?, b: p.required("b")? },
        "exponential" => Exponential { lambda: p.or_default("lambda", 1.0)? },
        "centered-exponential" => CenteredExponential { lambda: p.or_default("lambda", 1.0)? },
        "maxwell" => Maxwell { sigma: p.or_default("sigma", 1.0)? },
        "pareto" => Pareto { scale: p.required("k")?, shape: p.required("alpha")? },
        other => return Err(Error::InvalidInput(format!("unknown marginal family '{other}'"))),
    };
    p.finish()?;
    fam.validate()?;
    Ok(fam)
}

fn family_params(m: &MarginalFamily) -> serde_json::Map<String, serde_json::Value> {
    use MarginalFamily::*;
    let mut map = serde_json::Map::new();
    let mut put = |k: &str, v: f64| {
        map.insert(k.to_string(), serde_json::json!(v));
    };
    match *m {
        Normal { mu, sigma } | LogNormal { mu, sigma } => {
            put("mu", mu);
            put("sigma", sigma);
        }
        HalfNormal { sigma } | Maxwell { sigma } => put("sigma", sigma),
        Chi { nu } | ChiSquared { nu } | InverseChiSquared { nu } | StudentT { nu } => {
            put("nu", nu)
        }
        FisherF { mu, nu } => {
            put("mu", mu);
            put("nu", nu);
        }
        Cauchy => {}
        Beta { alpha, beta } => {
            put("alpha", alpha);
            put("beta", beta);
        }
        Gamma { alpha, theta } | InverseGamma { alpha, theta } => {
            put("alpha", alpha);
            put("theta", theta);
        }
        Uniform { a, b } => {
            put("a", a);
            put("b", b);
        }
        Exponential { lambda } | CenteredExponential { lambda } => put("lambda", lambda),
        Pareto { scale, shape } => {
            put("k", scale);
            put("alpha", shape);
        }
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn std_normal_iid(n: usize) -> JointDensitySpec {
        JointDensitySpec::iid(MarginalFamily::Normal { mu: 0.0, sigma: 1.0 }, n).unwrap()
    }

    #[test]
    fn iid_pdf_is_product_of_marginals() {
        let g = std_normal_iid(2);
        assert_relative_eq!(
            g.pdf(&[0.0, 0.0]).unwrap(),
            1.0 / (2.0 * std::f64::consts::PI),
            max_relative = 1e-14
        );
    }

    #[test]
    fn mvn_identity_matches_iid_normal() {
        let cov = CovarianceSpec::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = JointDensitySpec::mvn(cov).unwrap();
        let h = std_normal_iid(2);
        for pt in [[0.0, 0.0], [0.3, -1.2], [2.0, 2.0]] {
            assert_relative_eq!(
                g.pdf(&pt).unwrap(),
                h.pdf(&pt).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn outside_support_is_zero() {
        let g = JointDensitySpec::iid(MarginalFamily::Uniform { a: -1.0, b: 1.0 }, 3).unwrap();
        assert_eq!(g.pdf(&[0.0, 0.0, 2.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_and_nan_rejected() {
        let g = std_normal_iid(2);
        assert!(matches!(g.pdf(&[0.0]), Err(Error::DimensionMismatch { .. })));
        assert!(g.pdf(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let src = r#"{"kind":"iid","family":"cauchy","params":{},"n":2}"#;
        let g = JointDensitySpec::from_json_str(src).unwrap();
        assert_eq!(g.dim(), 2);
        let v = g.to_json().unwrap();
        let g2 = JointDensitySpec::from_json(&v).unwrap();
        assert_relative_eq!(
            g2.pdf(&[0.5, -0.5]).unwrap(),
            g.pdf(&[0.5, -0.5]).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn json_product_and_mvn() {
        let src = r#"{"kind":"product","blocks":[
            {"kind":"mvn","cov":[[1.0,0.0],[0.0,1.0]]},
            {"kind":"iid","family":"exponential","params":{"lambda":2.0},"n":2}
        ]}"#;
        let g = JointDensitySpec::from_json_str(src).unwrap();
        assert_eq!(g.dim(), 4);
        let p = g.pdf(&[0.0, 0.0, 0.5, 0.25]).unwrap();
        let expect = 1.0 / (2.0 * std::f64::consts::PI)
            * (2.0 * (-1.0f64).exp())
            * (2.0 * (-0.5f64).exp());
        assert_relative_eq!(p, expect, max_relative = 1e-12);
    }

    #[test]
    fn json_rejects_unknown_params_and_bad_family() {
        assert!(JointDensitySpec::from_json_str(
            r#"{"kind":"iid","family":"cauchy","params":{"nu":1.0},"n":2}"#
        )
        .is_err());
        assert!(JointDensitySpec::from_json_str(
            r#"{"kind":"iid","family":"zeta","params":{},"n":2}"#
        )
        .is_err());
        assert!(JointDensitySpec::from_json_str(
            r#"{"kind":"iid","family":"beta","params":{"alpha":0.2,"beta":2.0},"n":2}"#
        )
        .is_err());
    }

    #[test]
    fn seeded_sampling_is_reproducible_and_thread_independent() {
        let g = JointDensitySpec::iid(MarginalFamily::Cauchy, 2).unwrap();
        let a = g.sample_matrix(7, 3 * crate::rng::CHUNK_DRAWS + 5).unwrap();
        let b = g.sample_matrix(7, 3 * crate::rng::CHUNK_DRAWS + 5).unwrap();
        assert_eq!(a, b);

        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| g.sample_matrix(7, 3 * crate::rng::CHUNK_DRAWS + 5).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn sample_moments_match() {
        // Uniform(-1,1): mean 0, var 1/3.
        let g = JointDensitySpec::iid(MarginalFamily::Uniform { a: -1.0, b: 1.0 }, 1_0)
            .unwrap_or_else(|_| unreachable!());
        let m = g.sample_matrix(11, 10_000).unwrap();
        let count = m.len() as f64;
        let mean = m.iter().sum::<f64>() / count;
        let var = m.iter().map(|v| v * v).sum::<f64>() / count - mean * mean;
        assert!(mean.abs() < 4.0 * (1.0 / 3.0f64 / count).sqrt(), "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.01, "var {var}");
    }

    #[test]
    fn mvn_sample_variances() {
        let cov = CovarianceSpec::from_rows(&[vec![1.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let g = JointDensitySpec::mvn(cov).unwrap();
        let rows = 100_000;
        let m = g.sample_matrix(3, rows).unwrap();
        for (j, want) in [(0usize, 1.0f64), (1, 4.0)] {
            let col: Vec<f64> = m.chunks(2).map(|r| r[j]).collect();
            let mean = col.iter().sum::<f64>() / rows as f64;
            let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rows as f64;
            assert!(
                (var / want - 1.0).abs() < 0.05,
                "coordinate {j}: sample var {var} vs {want}"
            );
        }
    }
}
