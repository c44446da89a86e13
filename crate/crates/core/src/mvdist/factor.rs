use serde::Serialize;

use super::special::{norm_cdf, norm_pdf};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Relative pivot tolerance used when none is given.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// A covariance matrix together with a rank-revealing factor.
///
/// `factor` is m x r with `factor * factor' ~= sigma`. Reading its rows in
/// `order` gives a lower-trapezoidal matrix: the j-th pivot row has zeros
/// beyond column j.
#[derive(Debug, Clone, Serialize)]
pub struct CovarianceModel {
    #[serde(skip)]
    sigma: Matrix,
    #[serde(skip)]
    factor: Matrix,
    rank: usize,
    order: Vec<usize>,
    tol: f64,
}

impl CovarianceModel {
    /// Factorizes with [`DEFAULT_RANK_TOL`].
    pub fn new(sigma: Matrix) -> Result<Self> {
        factorize(&sigma, DEFAULT_RANK_TOL)
    }

    pub fn dim(&self) -> usize {
        self.sigma.rows()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank == self.dim()
    }

    pub fn sigma(&self) -> &Matrix {
        &self.sigma
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    /// Pivot order: `order()[j]` is the original index of the j-th pivot.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }
}

/// Rank-revealing Cholesky factorization with diagonal pivoting.
///
/// At every step the largest remaining diagonal is taken as pivot; once it
/// drops to `tol` times the largest diagonal of `sigma` the remaining block
/// is treated as zero and the rank is fixed.
pub fn factorize(sigma: &Matrix, tol: f64) -> Result<CovarianceModel> {
    if !sigma.is_square() || sigma.rows() == 0 {
        return Err(Error::DimensionMismatch {
            expected: sigma.rows(),
            found: sigma.cols(),
        });
    }
    if !sigma.is_symmetric(1e-12) {
        return Err(Error::NotSymmetric);
    }
    let piv = pivoted_cholesky(sigma, tol, None)?;
    let m = sigma.rows();
    let mut factor = Matrix::zeros(m, piv.rank);
    for (pos, &orig) in piv.perm.iter().enumerate() {
        factor.row_mut(orig).copy_from_slice(&piv.lower.row(pos)[..piv.rank]);
    }
    Ok(CovarianceModel {
        sigma: sigma.clone(),
        factor,
        rank: piv.rank,
        order: piv.perm[..piv.rank].to_vec(),
        tol,
    })
}

/// Output of [`pivoted_cholesky`]: `lower` is m x m in pivot order (row
/// `j` belongs to original variable `perm[j]`); columns at and beyond
/// `rank` are zero.
#[derive(Debug, Clone)]
pub(crate) struct Pivoted {
    pub lower: Matrix,
    pub perm: Vec<usize>,
    pub rank: usize,
}

/// Pivoted outer-product Cholesky.
///
/// With `bounds = None` the pivot is the largest remaining diagonal. With
/// integration limits `(lower, upper)` for a standardized vector, the pivot
/// is the variable with the smallest conditional interval probability given
/// the truncated means of the variables already placed, which puts the
/// most constraining limits outermost in the sequential integral.
pub(crate) fn pivoted_cholesky(
    sigma: &Matrix,
    tol: f64,
    bounds: Option<(&[f64], &[f64])>,
) -> Result<Pivoted> {
    let m = sigma.rows();
    let diag = sigma.diagonal();
    let scale = diag.iter().fold(0.0_f64, |a, &d| a.max(d));
    let cutoff = tol * scale;
    if diag.iter().any(|&d| d < -cutoff.max(f64::MIN_POSITIVE)) {
        return Err(Error::IndefiniteMatrix);
    }

    let mut perm: Vec<usize> = (0..m).collect();
    let mut lower = Matrix::zeros(m, m);
    let mut rem = diag;
    let mut ybar = vec![0.0; m];
    let mut rank = m;

    for j in 0..m {
        let mut best: Option<(usize, f64)> = None;
        for i in j..m {
            if rem[i] <= cutoff || scale <= 0.0 {
                continue;
            }
            let key = match bounds {
                None => -rem[i],
                Some((lo, hi)) => {
                    let (a, b) = conditional_limits(&lower, &ybar, i, j, rem[i], lo[perm[i]], hi[perm[i]]);
                    norm_cdf(b) - norm_cdf(a)
                }
            };
            if best.map_or(true, |(_, k)| key < k) {
                best = Some((i, key));
            }
        }
        let Some((p, _)) = best else {
            rank = j;
            break;
        };

        if p != j {
            perm.swap(j, p);
            rem.swap(j, p);
            for k in 0..j {
                let t = lower[(j, k)];
                lower[(j, k)] = lower[(p, k)];
                lower[(p, k)] = t;
            }
        }

        let pivot = rem[j].sqrt();
        lower[(j, j)] = pivot;
        rem[j] = 0.0;
        for i in j + 1..m {
            let mut v = sigma[(perm[i], perm[j])];
            for k in 0..j {
                v -= lower[(i, k)] * lower[(j, k)];
            }
            let l = v / pivot;
            lower[(i, j)] = l;
            rem[i] -= l * l;
        }

        if let Some((lo, hi)) = bounds {
            let (a, b) = conditional_limits(&lower, &ybar, j, j, pivot * pivot, lo[perm[j]], hi[perm[j]]);
            ybar[j] = truncated_mean(a, b);
        }
    }

    if rem[rank..].iter().any(|&d| d < -cutoff.max(f64::MIN_POSITIVE)) {
        return Err(Error::IndefiniteMatrix);
    }
    Ok(Pivoted { lower, perm, rank })
}

/// Standardized limits of row `i` given the expected values of the first
/// `j` pivots.
fn conditional_limits(
    lower: &Matrix,
    ybar: &[f64],
    i: usize,
    j: usize,
    var: f64,
    lo: f64,
    hi: f64,
) -> (f64, f64) {
    let s: f64 = (0..j).map(|k| lower[(i, k)] * ybar[k]).sum();
    let sd = var.sqrt();
    let a = if lo == f64::NEG_INFINITY { lo } else { (lo - s) / sd };
    let b = if hi == f64::INFINITY { hi } else { (hi - s) / sd };
    (a, b)
}

/// Mean of a standard normal truncated to `(a, b)`.
fn truncated_mean(a: f64, b: f64) -> f64 {
    let p = norm_cdf(b) - norm_cdf(a);
    if p > 1e-300 {
        (norm_pdf(a) - norm_pdf(b)) / p
    } else if a.is_finite() && b.is_finite() {
        0.5 * (a + b)
    } else if a.is_finite() {
        a
    } else if b.is_finite() {
        b
    } else {
        0.0
    }
}
