//! Rectangle probabilities of (possibly singular) multivariate normal and
//! noncentral t vectors by sequential conditioning (separation of
//! variables) on the rank-r factor.
//!
//! The t vector is `X = (Z + delta) / s` with `Z ~ N(0, Sigma)` and
//! `s = sqrt(W / nu)`, `W ~ chi2(nu)` independent of `Z`. Conditional on `s`
//! the event `a <= X <= b` is `a s - delta <= Z <= b s - delta`, a normal
//! rectangle; `s` becomes one extra integration variable through the
//! chi-square quantile.
//!
//! Rows that are linear combinations of earlier pivots (singular Sigma) do
//! not get a variable of their own. Each is attached to the last pivot it
//! loads on and narrows that pivot's interval.

use super::factor::{pivoted_cholesky, CovarianceModel};
use super::qmc::{integrate, ProbEstimate, QmcConfig};
use super::special::{chi2_inv, norm_cdf, norm_inv};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Loadings below this (on the standardized scale) count as exact zeros
/// when attaching dependent rows to pivots.
const LOADING_TOL: f64 = 1e-10;

/// P(X <= upper) for the noncentral multivariate t with scale matrix
/// `cov`, `nu` degrees of freedom and noncentrality `delta`.
/// `nu = f64::INFINITY` gives the normal case.
pub fn mvt_cdf(
    upper: &[f64],
    cov: &CovarianceModel,
    nu: f64,
    delta: &[f64],
    cfg: &QmcConfig,
) -> Result<ProbEstimate> {
    let lower = vec![f64::NEG_INFINITY; upper.len()];
    mvt_probability(&lower, upper, cov, nu, delta, cfg)
}

/// P(X <= upper) for `X ~ N(mean, Sigma)`.
pub fn mvn_cdf(
    upper: &[f64],
    cov: &CovarianceModel,
    mean: &[f64],
    cfg: &QmcConfig,
) -> Result<ProbEstimate> {
    mvt_cdf(upper, cov, f64::INFINITY, mean, cfg)
}

/// P(lower <= X <= upper); infinite limits are allowed on either side.
pub fn mvt_probability(
    lower: &[f64],
    upper: &[f64],
    cov: &CovarianceModel,
    nu: f64,
    delta: &[f64],
    cfg: &QmcConfig,
) -> Result<ProbEstimate> {
    let m = cov.dim();
    for len in [lower.len(), upper.len(), delta.len()] {
        if len != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: len,
            });
        }
    }
    if !(nu >= 1.0) {
        return Err(Error::InvalidParameter(format!("degrees of freedom {nu} < 1")));
    }
    if lower.iter().chain(upper).any(|v| v.is_nan()) || delta.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidParameter("NaN limit or non-finite noncentrality".into()));
    }
    cfg.validate()?;
    if lower.iter().zip(upper).any(|(a, b)| a >= b) {
        return Ok(ProbEstimate::exact(0.0));
    }

    let plan = Plan::build(lower, upper, cov, delta, nu)?;
    let dim = plan.dim();
    let mut y = vec![0.0; plan.stages.len()];
    Ok(integrate(dim, cfg, &mut y, |w, y| plan.eval(w, y)))
}

/// One-sided limit pair of a single row, in the units of `Z`.
#[derive(Debug, Clone)]
struct Row {
    lower: f64,
    upper: f64,
    shift: f64,
}

impl Row {
    /// `(a s - delta, b s - delta)` with infinities kept exact.
    #[inline]
    fn limits(&self, s: f64) -> (f64, f64) {
        let lo = if self.lower == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.lower * s - self.shift
        };
        let hi = if self.upper == f64::INFINITY {
            f64::INFINITY
        } else {
            self.upper * s - self.shift
        };
        (lo, hi)
    }
}

/// A row constraining pivot `j`: `lo <= sum_{k<j} coef_k y_k + pivot y_j <= hi`.
#[derive(Debug, Clone)]
struct Constraint {
    row: Row,
    coef: Vec<f64>,
    pivot: f64,
}

#[derive(Debug, Clone, Default)]
struct Stage {
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
struct Plan {
    stages: Vec<Stage>,
    /// Rows with no random part; they only gate on `s`.
    fixed: Vec<Row>,
    nu: Option<f64>,
}

impl Plan {
    fn build(
        lower: &[f64],
        upper: &[f64],
        cov: &CovarianceModel,
        delta: &[f64],
        nu: f64,
    ) -> Result<Self> {
        let m = cov.dim();
        let sigma = cov.sigma();
        let sd: Vec<f64> = sigma.diagonal().iter().map(|d| d.max(0.0).sqrt()).collect();
        let scale = sd.iter().fold(0.0_f64, |a, &b| a.max(b));

        let mut rows = Vec::with_capacity(m);
        let mut fixed = Vec::new();
        let mut random = Vec::new();
        for i in 0..m {
            if sd[i] <= scale * cov.tol().sqrt() || sd[i] == 0.0 {
                fixed.push(Row {
                    lower: lower[i],
                    upper: upper[i],
                    shift: delta[i],
                });
            } else {
                random.push(i);
            }
            let s = if sd[i] > 0.0 { sd[i] } else { 1.0 };
            rows.push(Row {
                lower: lower[i] / s,
                upper: upper[i] / s,
                shift: delta[i] / s,
            });
        }

        let nr = random.len();
        let corr = Matrix::from_fn(nr, nr, |a, b| {
            let (i, j) = (random[a], random[b]);
            if a == b {
                1.0
            } else {
                sigma[(i, j)] / (sd[i] * sd[j])
            }
        });
        let lo: Vec<f64> = random
            .iter()
            .map(|&i| if rows[i].lower == f64::NEG_INFINITY { f64::NEG_INFINITY } else { rows[i].lower - rows[i].shift })
            .collect();
        let hi: Vec<f64> = random
            .iter()
            .map(|&i| if rows[i].upper == f64::INFINITY { f64::INFINITY } else { rows[i].upper - rows[i].shift })
            .collect();

        let mut stages = Vec::new();
        if nr > 0 {
            let piv = pivoted_cholesky(&corr, cov.tol(), Some((&lo, &hi)))?;
            stages = vec![Stage::default(); piv.rank];
            for pos in 0..nr {
                let l = piv.lower.row(pos);
                let Some(last) = (0..piv.rank).rev().find(|&k| l[k].abs() > LOADING_TOL) else {
                    // numerically zero variance after standardization
                    fixed.push(rows[random[piv.perm[pos]]].clone());
                    continue;
                };
                stages[last].constraints.push(Constraint {
                    row: rows[random[piv.perm[pos]]].clone(),
                    coef: l[..last].to_vec(),
                    pivot: l[last],
                });
            }
        }

        Ok(Plan {
            stages,
            fixed,
            nu: nu.is_finite().then_some(nu),
        })
    }

    fn dim(&self) -> usize {
        self.stages.len().saturating_sub(1) + usize::from(self.nu.is_some())
    }

    fn eval(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let (s, off) = match self.nu {
            Some(nu) => ((chi2_inv(w[0], nu) / nu).sqrt(), 1),
            None => (1.0, 0),
        };
        for row in &self.fixed {
            let (lo, hi) = row.limits(s);
            if !(lo <= 0.0 && 0.0 <= hi) {
                return 0.0;
            }
        }

        let r = self.stages.len();
        let mut prod = 1.0;
        for (j, stage) in self.stages.iter().enumerate() {
            let mut a = f64::NEG_INFINITY;
            let mut b = f64::INFINITY;
            for c in &stage.constraints {
                let (lo, hi) = c.row.limits(s);
                let sum: f64 = c.coef.iter().zip(y.iter()).map(|(l, v)| l * v).sum();
                let (lo, hi) = (lo - sum, hi - sum);
                let (lo, hi) = if c.pivot > 0.0 {
                    (lo / c.pivot, hi / c.pivot)
                } else {
                    (hi / c.pivot, lo / c.pivot)
                };
                a = a.max(lo);
                b = b.min(hi);
            }
            if !(a < b) {
                return 0.0;
            }
            // work in the upper tail when the interval lies above zero
            let upper_tail = a > 0.0;
            let (pa, pb) = if upper_tail {
                (norm_cdf(-a), norm_cdf(-b))
            } else {
                (norm_cdf(a), norm_cdf(b))
            };
            let p = (pb - pa).abs();
            if p <= 0.0 {
                return 0.0;
            }
            prod *= p;
            if j + 1 < r {
                let u = w[off + j];
                let yj = if upper_tail {
                    -norm_inv((pa - u * p).clamp(1e-300, 1.0 - 1e-16))
                } else {
                    norm_inv((pa + u * p).clamp(1e-300, 1.0 - 1e-16))
                };
                y[j] = yj.clamp(a, b);
            }
        }
        prod
    }
}
