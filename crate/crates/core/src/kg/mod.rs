//! The K_g engine: closed forms, deterministic quadrature of the defining
//! integrals, Monte Carlo for the F-statistic, and the error-bound
//! quantities that need derivatives of the ball integrand G.

mod bounds;
mod closed_form;
mod f_integral;
mod frame;
mod g_function;
mod quad_routes;

pub use bounds::{error_bounds, ErrorBound};
pub use closed_form::{kg_closed_form, kg_ost_gaussian, table1_kg, table2_student, table3_welch};
pub use f_integral::{kg_f_integral, kg_f_quadrature_n1_2};
pub use frame::{build_orthogonal_frame, omega0, OrthogonalFrame};
pub use g_function::eval_g;
pub use quad_routes::{kg_ost_quadrature, kg_tst_gaussian, kg_tst_quadrature};

use crate::density::JointDensitySpec;
use crate::error::{Error, Result};
use crate::tails::ReferenceTail;
use serde::{Deserialize, Serialize};

/// Which statistic is being corrected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestSpec {
    OneSampleT { n: usize },
    TwoSampleT { n1: usize, n2: usize },
    Welch { n1: usize, n2: usize },
    FTest { n1: usize, n2: usize },
}

impl TestSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            TestSpec::OneSampleT { n } => n >= 2,
            TestSpec::TwoSampleT { n1, n2 }
            | TestSpec::Welch { n1, n2 }
            | TestSpec::FTest { n1, n2 } => n1 >= 2 && n2 >= 2,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("sample sizes too small in {self:?}")))
        }
    }

    /// Total data dimension.
    pub fn dim(&self) -> usize {
        match *self {
            TestSpec::OneSampleT { n } => n,
            TestSpec::TwoSampleT { n1, n2 }
            | TestSpec::Welch { n1, n2 }
            | TestSpec::FTest { n1, n2 } => n1 + n2,
        }
    }

    /// Variance weights (alpha, beta) of the two-sample denominator
    /// sqrt(alpha S1^2 + beta S2^2); None for the other statistics.
    pub fn weights(&self) -> Option<(f64, f64)> {
        match *self {
            TestSpec::TwoSampleT { n1, n2 } => {
                let (n1f, n2f) = (n1 as f64, n2 as f64);
                let c = (1.0 / n1f + 1.0 / n2f) / (n1f + n2f - 2.0);
                Some(((n1f - 1.0) * c, (n2f - 1.0) * c))
            }
            TestSpec::Welch { n1, n2 } => Some((1.0 / n1 as f64, 1.0 / n2 as f64)),
            _ => None,
        }
    }

    /// Survival function of the nominal null distribution that `K_g`
    /// multiplies.
    pub fn reference_tail(&self) -> ReferenceTail {
        match *self {
            TestSpec::OneSampleT { n } => ReferenceTail::StudentT { k: (n - 1) as f64 },
            TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } => {
                ReferenceTail::StudentT { k: (n1 + n2 - 2) as f64 }
            }
            TestSpec::FTest { n1, n2 } => {
                ReferenceTail::FisherF { m: (n1 - 1) as f64, k: (n2 - 1) as f64 }
            }
        }
    }

    /// Dimension of the shrinking ball the statistic's tail reduces to.
    pub fn ball_dim(&self) -> usize {
        match *self {
            TestSpec::OneSampleT { n } => n - 1,
            TestSpec::TwoSampleT { n1, n2 } | TestSpec::Welch { n1, n2 } => n1 + n2 - 2,
            TestSpec::FTest { n2, .. } => n2 - 1,
        }
    }

    /// The (alpha, m, k) triple of the error-bound lemmas.
    pub fn triple(&self) -> (f64, f64, f64) {
        self.reference_tail().triple()
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestSpec::OneSampleT { .. } => "ost",
            TestSpec::TwoSampleT { .. } => "tst",
            TestSpec::Welch { .. } => "welch",
            TestSpec::FTest { .. } => "f",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncation_radius: Option<f64>,
    pub evaluations: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mc_samples: Option<u64>,
}

/// A computed tail constant.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgResult {
    #[serde(rename = "kg")]
    pub value: f64,
    pub method: Method,
    #[serde(rename = "abs_error")]
    pub abs_error_estimate: f64,
    pub diagnostics: Diagnostics,
}

impl KgResult {
    pub(crate) fn checked(
        value: f64,
        method: Method,
        abs_error_estimate: f64,
        diagnostics: Diagnostics,
    ) -> Result<Self> {
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "computed K_g = {value} is not a positive finite number; \
                 the density likely vanishes along the pinned direction"
            )));
        }
        Ok(Self { value, method, abs_error_estimate, diagnostics })
    }

    /// Known-exact constant (unit tests, closed forms).
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            method: Method::ClosedForm,
            abs_error_estimate: 0.0,
            diagnostics: Diagnostics::default(),
        }
    }
}

/// Tuning knobs shared by the K_g routes.
#[derive(Debug, Clone, Copy)]
pub struct KgOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub mc_samples: u64,
    pub seed: u64,
    /// Fail Monte Carlo estimates whose standard error lands above this.
    pub se_ceiling: Option<f64>,
}

impl Default for KgOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-12, mc_samples: 1_000_000, seed: 0x7461696c, se_ceiling: None }
    }
}

/// Fastest adequate route: closed form when recognized, deterministic
/// quadrature where available, Monte Carlo for the general F-statistic.
pub fn kg_auto(spec: &TestSpec, g: &JointDensitySpec, opts: &KgOptions) -> Result<KgResult> {
    spec.validate()?;
    if g.dim() != spec.dim() {
        return Err(Error::DimensionMismatch { expected: spec.dim(), got: g.dim() });
    }
    if let Some(res) = kg_closed_form(spec, g)? {
        return Ok(res);
    }
    match *spec {
        TestSpec::OneSampleT { n } => kg_ost_quadrature(g, n, opts),
        TestSpec::TwoSampleT { .. } | TestSpec::Welch { .. } => {
            if let Some(cov) = g.as_zero_mean_gaussian() {
                kg_tst_gaussian(&cov, spec, opts)
            } else {
                kg_tst_quadrature(g, spec, opts)
            }
        }
        TestSpec::FTest { n1, n2 } => kg_f_integral(g, n1, n2, opts),
    }
}
