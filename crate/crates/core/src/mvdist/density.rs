use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

use super::factor::CovarianceModel;
use crate::error::{Error, Result};

/// Central multivariate t density with scale matrix `cov` and `dof`
/// degrees of freedom:
///
/// `|S|^{-1/2} G((m+g)/2) / ((pi g)^{m/2} G(g/2)) (1 + s' S^{-1} s / g)^{-(m+g)/2}`.
///
/// Only defined for a nonsingular scale matrix.
pub fn mvt_null_density(s: &[f64], cov: &CovarianceModel, dof: f64) -> Result<f64> {
    let m = cov.dim();
    if s.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: s.len(),
        });
    }
    if !cov.is_full_rank() {
        return Err(Error::SingularSigma {
            rank: cov.rank(),
            dim: m,
        });
    }
    if !(dof > 0.0) {
        return Err(Error::InvalidParameter(format!("degrees of freedom {dof} <= 0")));
    }

    // forward substitution through the pivoted triangular factor
    let l = cov.factor();
    let order = cov.order();
    let mut z = vec![0.0; m];
    let mut log_det_half = 0.0;
    for j in 0..m {
        let row = l.row(order[j]);
        let mut v = s[order[j]];
        for k in 0..j {
            v -= row[k] * z[k];
        }
        z[j] = v / row[j];
        log_det_half += row[j].ln();
    }
    let q: f64 = z.iter().map(|v| v * v).sum();

    let mf = m as f64;
    let half = 0.5 * (mf + dof);
    let log_dens = ln_gamma(half)
        - ln_gamma(0.5 * dof)
        - 0.5 * mf * (PI * dof).ln()
        - log_det_half
        - half * (q / dof).ln_1p();
    Ok(log_dens.exp())
}
