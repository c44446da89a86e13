//! Contrast-based tests for genotype response patterns.
//!
//! Three genotype groups (AA, Aa, aa) are compared through a set of
//! contrasts, one per response shape. The crate provides
//!
//! * the maximum contrast test (`T_max`), the modified maximum contrast test
//!   (`S_max`) and its permutation variant (`M_max`), plus Kruskal-Wallis,
//! * error-controlled multivariate t / normal probabilities for singular
//!   covariance matrices,
//! * critical values, power and true-pattern detection probabilities,
//! * a seeded simulation harness.

pub mod data;
pub mod error;
pub mod hypothesis;
pub mod linalg;
pub mod mvdist;
pub mod power;
pub mod seed;
pub mod simulate;

pub use data::{
    default_pg_contrasts, log_transform, summarize, validate_contrasts, ContrastMatrix,
    GroupSummary, GroupedDataset, Pattern, Scale,
};
pub use error::{Error, Result};
pub use hypothesis::{
    kruskal_wallis_test, max_contrast_test, modified_max_contrast_test,
    permuted_modified_max_contrast_test, Method, PermutationConfig, SelectedPattern,
    StatisticVector, Tail, TestResult,
};
pub use linalg::Matrix;
pub use mvdist::{CovarianceModel, ProbEstimate, QmcConfig};
pub use simulate::{
    bench_timing, generate_dataset, hwe_group_sizes, run_scenario, timing_scenarios,
    DecisionRule, MethodMetrics, ScenarioConfig, ScenarioMetrics, TimingRow, TimingScenario,
};
