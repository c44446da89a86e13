//! The maximum contrast, modified maximum contrast, permuted modified
//! maximum contrast and Kruskal-Wallis tests.

mod contrast;
mod kruskal;
mod parametric;
mod permutation;

use serde::{Deserialize, Serialize};

use crate::data::ContrastMatrix;
use crate::error::{Error, Result};

pub use contrast::{compute_m, compute_s, compute_t, gram, k_inv, sigma_m, sigma_s, sigma_t};
pub use kruskal::kruskal_wallis_test;
pub use parametric::{max_contrast_test, modified_max_contrast_test};
pub use permutation::{permuted_modified_max_contrast_test, PermutationConfig};

/// One-sided tests use C as given; two-sided tests use `[C; -C]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    #[default]
    One,
    Two,
}

impl Tail {
    /// The contrast rows actually tested.
    pub fn effective(self, c: &ContrastMatrix) -> ContrastMatrix {
        match self {
            Tail::One => c.clone(),
            Tail::Two => c.augmented(),
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "one" => Some(Tail::One),
            "two" => Some(Tail::Two),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Positive,
    Negative,
}

/// The contrast attaining the maximum, as a row of the user's matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedPattern {
    /// Zero-based row of the (non-augmented) contrast matrix.
    pub index: usize,
    pub direction: Direction,
    pub name: String,
}

impl SelectedPattern {
    /// Maps a row of `tail.effective(c)` back to a row of `c`.
    pub fn from_effective(c: &ContrastMatrix, row: usize) -> Self {
        let m = c.num_contrasts();
        let (index, direction) = if row < m {
            (row, Direction::Positive)
        } else {
            (row - m, Direction::Negative)
        };
        let name = match direction {
            Direction::Positive => c.name(index).to_string(),
            Direction::Negative => format!("-{}", c.name(index)),
        };
        Self {
            index,
            direction,
            name,
        }
    }
}

/// Contrast statistics with their maximum. Ties go to the smallest index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticVector {
    pub values: Vec<f64>,
    pub max_value: f64,
    /// Zero-based position of `max_value` in `values`.
    pub argmax: usize,
}

impl StatisticVector {
    pub fn new(values: Vec<f64>) -> Self {
        let mut argmax = 0;
        for (k, &v) in values.iter().enumerate() {
            if v > values[argmax] {
                argmax = k;
            }
        }
        Self {
            max_value: values[argmax],
            argmax,
            values,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Method {
    #[serde(rename = "MCM")]
    Mcm,
    #[serde(rename = "MMCM")]
    Mmcm,
    #[serde(rename = "pMMCM")]
    Pmmcm,
    #[serde(rename = "KW")]
    Kw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mcm, Method::Mmcm, Method::Pmmcm, Method::Kw];

    pub fn name(self) -> &'static str {
        match self {
            Method::Mcm => "MCM",
            Method::Mmcm => "MMCM",
            Method::Pmmcm => "pMMCM",
            Method::Kw => "KW",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mcm" => Ok(Method::Mcm),
            "mmcm" => Ok(Method::Mmcm),
            "pmmcm" => Ok(Method::Pmmcm),
            "kw" => Ok(Method::Kw),
            _ => Err(Error::InvalidParameter(format!("unknown method '{s}'"))),
        }
    }

    /// Whether the method selects a response pattern.
    pub fn selects_pattern(self) -> bool {
        self != Method::Kw
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub method: Method,
    /// Statistics over the tested rows (`[C; -C]` when two-sided). For
    /// Kruskal-Wallis this holds the single H value.
    pub statistic: StatisticVector,
    pub p_value: f64,
    /// Integrator error bound, or the binomial standard error for
    /// permutation p-values.
    pub p_error: f64,
    pub selected: Option<SelectedPattern>,
    /// Permutation rounds `r` and exceedance count.
    pub resamples: Option<usize>,
    pub count: Option<usize>,
    /// False when the error target was not met within the budget.
    pub converged: bool,
}

impl TestResult {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}
