//! Multivariate normal and t probabilities, densities and samplers.

mod density;
mod factor;
mod integrate;
mod qmc;
mod sample;
pub mod special;

pub use density::mvt_null_density;
pub use factor::{factorize, CovarianceModel, DEFAULT_RANK_TOL};
pub use integrate::{mvn_cdf, mvt_cdf, mvt_probability};
pub use qmc::{integrate, ProbEstimate, QmcConfig};
pub use sample::{sample_statistics, StatisticKind};
