//! Grouped observations, contrast matrices and the pooled summary every
//! contrast statistic is built from.
//!
//! Groups are ordered by genotype code: 0 = AA, 1 = Aa, 2 = aa.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for a contrast row to count as summing to zero.
pub const ZERO_SUM_TOL: f64 = 1e-12;

/// Whether the values are raw measurements or already log-transformed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Raw,
    Log,
}

/// Observations split by group, one list per group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    groups: Vec<Vec<f64>>,
    scale: Scale,
}

impl GroupedDataset {
    pub fn new(groups: Vec<Vec<f64>>, scale: Scale) -> Self {
        Self { groups, scale }
    }

    /// Raw measurements (for example a PK parameter) awaiting [`log_transform`].
    pub fn raw(groups: Vec<Vec<f64>>) -> Self {
        Self::new(groups, Scale::Raw)
    }

    /// Values already on the analysis (log) scale.
    pub fn log_scale(groups: Vec<Vec<f64>>) -> Self {
        Self::new(groups, Scale::Log)
    }

    pub fn groups(&self) -> &[Vec<f64>] {
        &self.groups
    }

    pub fn into_groups(self) -> Vec<Vec<f64>> {
        self.groups
    }

    pub fn scale(&self) -> Scale {
        self.scale
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    pub fn total(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// All observations concatenated in group order.
    pub fn pooled(&self) -> Vec<f64> {
        self.groups.iter().flatten().copied().collect()
    }

    /// Checks the shape requirements shared by every test: at least two
    /// groups, none empty, all values finite.
    pub fn check_testable(&self) -> Result<()> {
        if self.groups.len() < 2 {
            return Err(Error::TooFewGroups(self.groups.len()));
        }
        for (g, values) in self.groups.iter().enumerate() {
            if values.is_empty() {
                return Err(Error::EmptyGroup(g));
            }
            if let Some(index) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue { group: g, index });
            }
        }
        Ok(())
    }

    /// Copy with empty groups dropped.
    pub fn without_empty_groups(&self) -> Self {
        Self {
            groups: self
                .groups
                .iter()
                .filter(|g| !g.is_empty())
                .cloned()
                .collect(),
            scale: self.scale,
        }
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            groups: self
                .groups
                .iter()
                .map(|g| g.iter().map(|&v| f(v)).collect())
                .collect(),
            scale: self.scale,
        }
    }
}

/// Natural-log transform of raw observations. Any other base only rescales
/// the data, which none of the statistics are sensitive to.
pub fn log_transform(ds: &GroupedDataset) -> Result<GroupedDataset> {
    if ds.scale == Scale::Log {
        return Ok(ds.clone());
    }
    let mut groups = Vec::with_capacity(ds.groups.len());
    for (g, values) in ds.groups.iter().enumerate() {
        let mut out = Vec::with_capacity(values.len());
        for (index, &v) in values.iter().enumerate() {
            // NaN also fails this comparison
            if !(v > 0.0) {
                return Err(Error::NonPositiveValue { group: g, index });
            }
            out.push(v.ln());
        }
        groups.push(out);
    }
    Ok(GroupedDataset::log_scale(groups))
}

/// An m x a matrix of contrast coefficients. Every row sums to zero and
/// no row is identically zero; construction enforces both.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastMatrix {
    rows: Vec<Vec<f64>>,
    names: Vec<String>,
}

impl ContrastMatrix {
    /// Validates and wraps the rows. Rows get the names `contrast1`, ...
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let names = (1..=rows.len()).map(|k| format!("contrast{k}")).collect();
        Self::with_names(rows, names)
    }

    pub fn with_names(rows: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        if names.len() != rows.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: names.len(),
            });
        }
        validate_contrasts(&rows)?;
        Ok(Self { rows, names })
    }

    pub fn num_contrasts(&self) -> usize {
        self.rows.len()
    }

    pub fn num_groups(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.rows[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn name(&self, k: usize) -> &str {
        &self.names[k]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `c_k' c_k` for every row.
    pub fn squared_norms(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|c| c * c).sum())
            .collect()
    }

    /// Errors unless the matrix has one column per group.
    pub fn check_groups(&self, a: usize) -> Result<()> {
        if self.num_groups() != a {
            return Err(Error::DimensionMismatch {
                expected: self.num_groups(),
                found: a,
            });
        }
        Ok(())
    }

    /// `[C; -C]`, the matrix used for two-sided testing. Negated rows are
    /// named with a leading `-`.
    pub fn augmented(&self) -> Self {
        let mut rows = self.rows.clone();
        let mut names = self.names.clone();
        for (r, n) in self.rows.iter().zip(&self.names) {
            rows.push(r.iter().map(|c| -c).collect());
            names.push(format!("-{n}"));
        }
        Self { rows, names }
    }

    /// Row index whose coefficients are proportional (positive factor) to
    /// `coef`, if any.
    pub fn find_pattern(&self, coef: &[f64]) -> Option<usize> {
        if coef.len() != self.num_groups() {
            return None;
        }
        let cn = coef.iter().map(|c| c * c).sum::<f64>().sqrt();
        if cn == 0.0 {
            return None;
        }
        self.rows.iter().position(|r| {
            let rn = r.iter().map(|c| c * c).sum::<f64>().sqrt();
            r.iter()
                .zip(coef)
                .all(|(a, b)| (a / rn - b / cn).abs() < 1e-9)
        })
    }
}

/// Checks the contrast invariants: at least one row, equal row lengths,
/// zero row sums within [`ZERO_SUM_TOL`], no all-zero rows.
pub fn validate_contrasts(rows: &[Vec<f64>]) -> Result<()> {
    let first = rows.first().ok_or(Error::NoContrasts)?;
    let a = first.len();
    for (k, row) in rows.iter().enumerate() {
        if row.len() != a {
            return Err(Error::DimensionMismatch {
                expected: a,
                found: row.len(),
            });
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "contrast row {k} has a non-finite coefficient"
            )));
        }
        if row.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroRow(k));
        }
        if row.iter().sum::<f64>().abs() > ZERO_SUM_TOL {
            return Err(Error::RowSumNonZero(k));
        }
    }
    Ok(())
}

/// Response shapes over the three genotype groups.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pattern {
    Additive,
    Dominant,
    Recessive,
    Valley,
}

impl Pattern {
    pub const EXPECTED: [Pattern; 3] = [Pattern::Additive, Pattern::Dominant, Pattern::Recessive];

    pub fn coefficients(self) -> [f64; 3] {
        match self {
            Pattern::Additive => [-0.5, 0.0, 0.5],
            Pattern::Dominant => [-1.0 / 3.0, -1.0 / 3.0, 2.0 / 3.0],
            Pattern::Recessive => [-2.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
            Pattern::Valley => [1.0 / 3.0, -2.0 / 3.0, 1.0 / 3.0],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Pattern::Additive => "additive",
            Pattern::Dominant => "dominant",
            Pattern::Recessive => "recessive",
            Pattern::Valley => "valley",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "additive" | "i" => Some(Pattern::Additive),
            "dominant" | "ii" => Some(Pattern::Dominant),
            "recessive" | "iii" => Some(Pattern::Recessive),
            "valley" | "iv" => Some(Pattern::Valley),
            _ => None,
        }
    }
}

/// The three-row matrix of additive, dominant and recessive contrasts.
///
/// Naming follows the simulation tables: (-1/3, -1/3, 2/3) is "dominant"
/// and (-2/3, 1/3, 1/3) is "recessive". Names never enter a computation.
pub fn default_pg_contrasts() -> ContrastMatrix {
    let rows = Pattern::EXPECTED
        .iter()
        .map(|p| p.coefficients().to_vec())
        .collect();
    let names = Pattern::EXPECTED
        .iter()
        .map(|p| p.name().to_string())
        .collect();
    ContrastMatrix::with_names(rows, names).expect("default contrasts are valid")
}

/// Group means, pooled variance and the diagonal of D = diag(1/n_i).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub means: Vec<f64>,
    pub pooled_variance: f64,
    pub dof: usize,
    pub inv_sizes: Vec<f64>,
}

impl GroupSummary {
    pub fn num_groups(&self) -> usize {
        self.means.len()
    }
}

/// Computes group means, the pooled within-group variance V and its degrees
/// of freedom `sum(n_i - 1)`.
pub fn summarize(ds: &GroupedDataset) -> Result<GroupSummary> {
    if ds.scale() == Scale::Raw {
        return Err(Error::RawScale);
    }
    ds.check_testable()?;
    let dof: usize = ds.groups().iter().map(|g| g.len() - 1).sum();
    if dof == 0 {
        return Err(Error::DegenerateVariance);
    }
    let mut means = Vec::with_capacity(ds.num_groups());
    let mut inv_sizes = Vec::with_capacity(ds.num_groups());
    let mut ss = 0.0;
    for g in ds.groups() {
        let n = g.len() as f64;
        let mean = g.iter().sum::<f64>() / n;
        ss += g.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>();
        means.push(mean);
        inv_sizes.push(1.0 / n);
    }
    Ok(GroupSummary {
        means,
        pooled_variance: ss / dof as f64,
        dof,
        inv_sizes,
    })
}
