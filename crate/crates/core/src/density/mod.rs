//! Joint density catalog: marginal families, SPD covariances, and the
//! composite density specifications all K_g routes consume.

mod covariance;
mod joint;
mod marginal;

pub use covariance::CovarianceSpec;
pub use joint::{JointDensitySpec, JointSampler};
pub use marginal::{catalog_with_defaults, MarginalFamily, MarginalSampler};
