//! Critical values, power, pattern priority and true-pattern detection
//! rates for the T and S statistics.
//!
//! Everything here is one-sided, on the contrast matrix as given. Pass
//! `C.augmented()` to get two-sided quantities.

use serde::{Deserialize, Serialize};

use crate::data::ContrastMatrix;
use crate::error::{Error, Result};
use crate::hypothesis::{gram, k_inv, sigma_t};
use crate::linalg::dot;
use crate::mvdist::special::chi2_inv;
use crate::mvdist::{
    mvt_cdf, sample_statistics, CovarianceModel, ProbEstimate, QmcConfig, StatisticKind,
};

/// Bracket searched for critical values.
const ROOT_BRACKET: (f64, f64) = (0.0, 10.0);
const ROOT_WIDTH: f64 = 1e-4;

/// Integrator settings used for critical values and power when the caller
/// has no preference; tight enough for three-decimal critical values.
pub fn default_qmc() -> QmcConfig {
    QmcConfig::with_tol(1e-4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalValues {
    pub u_alpha: f64,
    pub v_alpha: f64,
    pub k_inv: Vec<f64>,
    pub thresholds_t: Vec<f64>,
    /// `k_inv * v_alpha`: the S test's thresholds on the T scale.
    pub thresholds_s: Vec<f64>,
}

impl CriticalValues {
    /// Rows where the S threshold is below the T threshold, i.e. where the
    /// modified test is the more powerful one for that true pattern.
    pub fn prefers_s(&self) -> Vec<bool> {
        self.thresholds_s
            .iter()
            .zip(&self.thresholds_t)
            .map(|(s, t)| s < t)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerMethod {
    T,
    S,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerResult {
    pub beta: f64,
    pub est_error: f64,
    pub method: PowerMethod,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoncentralityVector {
    pub kind: StatisticKind,
    pub values: Vec<f64>,
}

fn check_mu(c: &ContrastMatrix, mu: &[f64], inv_sizes: &[f64]) -> Result<()> {
    c.check_groups(inv_sizes.len())?;
    if mu.len() != inv_sizes.len() {
        return Err(Error::DimensionMismatch {
            expected: inv_sizes.len(),
            found: mu.len(),
        });
    }
    Ok(())
}

/// `lambda_T,k = c'mu / sqrt(s2 c'Dc)`, `lambda_S,k = c'mu / sqrt(s2 c'c)`,
/// `lambda_M,k = c'mu / sqrt(c'c)`.
pub fn noncentrality(
    kind: StatisticKind,
    mu: &[f64],
    sigma2: f64,
    c: &ContrastMatrix,
    inv_sizes: &[f64],
) -> Result<NoncentralityVector> {
    check_mu(c, mu, inv_sizes)?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma2 {sigma2} <= 0")));
    }
    let g = gram(c, inv_sizes);
    let values = c
        .rows()
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let num = dot(row, mu);
            match kind {
                StatisticKind::T => num / (sigma2 * g[(k, k)]).sqrt(),
                StatisticKind::S => num / (sigma2 * dot(row, row)).sqrt(),
                StatisticKind::M => num / dot(row, row).sqrt(),
            }
        })
        .collect();
    Ok(NoncentralityVector { kind, values })
}

/// Solves `1 - T_m(-inf, x * shape; Sigma, dof, 0) = alpha` for `x` by
/// bisection. Stops when the bracket is narrower than 1e-4 or the defect is
/// within the integrator's error.
fn solve_threshold(
    alpha: f64,
    shape: &[f64],
    sigma: &CovarianceModel,
    dof: f64,
    cfg: &QmcConfig,
) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha {alpha} not in (0, 1)")));
    }
    let m = shape.len();
    let zero = vec![0.0; m];
    let tail = |x: f64| -> Result<ProbEstimate> {
        let upper: Vec<f64> = shape.iter().map(|s| s * x).collect();
        Ok(mvt_cdf(&upper, sigma, dof, &zero, cfg)?.complement())
    };

    let (mut lo, mut hi) = ROOT_BRACKET;
    // widen downwards for alpha near or above one half
    while tail(lo)?.value < alpha {
        lo -= 10.0;
        if lo < -1e3 {
            return Err(Error::InvalidParameter("critical value out of range".into()));
        }
    }
    while tail(hi)?.value > alpha {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(Error::InvalidParameter("critical value out of range".into()));
        }
    }
    let mut last = None;
    while hi - lo > ROOT_WIDTH {
        let mid = 0.5 * (lo + hi);
        let p = tail(mid)?;
        last = Some(p);
        let defect = p.value - alpha;
        if defect.abs() < p.est_error.min(cfg.abs_error_tol) * 0.1 {
            return Ok(mid);
        }
        if defect > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if let Some(p) = last {
        if !p.converged {
            return Err(Error::BudgetExhausted {
                error: p.est_error,
                tolerance: cfg.abs_error_tol,
            });
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Critical value of `T_max` at level `alpha`.
pub fn critical_u(alpha: f64, sigma_t: &CovarianceModel, dof: f64, cfg: &QmcConfig) -> Result<f64> {
    solve_threshold(alpha, &vec![1.0; sigma_t.dim()], sigma_t, dof, cfg)
}

/// Critical value of `S_max` at level `alpha`, with the scaling vector
/// `k_inv` that maps it to the T scale.
pub fn critical_v(
    alpha: f64,
    c: &ContrastMatrix,
    inv_sizes: &[f64],
    dof: f64,
    cfg: &QmcConfig,
) -> Result<(f64, Vec<f64>)> {
    let sigma = sigma_t(c, inv_sizes)?;
    let k = k_inv(c, inv_sizes)?;
    let v = solve_threshold(alpha, &k, &sigma, dof, cfg)?;
    Ok((v, k))
}

/// Index minimizing `sqrt(c'c / c'Dc)`: the contrast the S test favours.
pub fn priority_index(c: &ContrastMatrix, inv_sizes: &[f64]) -> Result<usize> {
    let k = k_inv(c, inv_sizes)?;
    Ok((0..k.len()).fold(0, |b, i| if k[i] < k[b] { i } else { b }))
}

/// Monte-Carlo estimate of a true-pattern detection probability together
/// with the rejection probability from the same draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RtpEstimate {
    pub r_tp: f64,
    pub se: f64,
    pub power: f64,
    pub power_se: f64,
    pub draws: usize,
}

/// Design-level analysis: one contrast matrix, fixed group sizes, one
/// level. Critical values are computed once.
#[derive(Debug, Clone)]
pub struct PowerAnalysis {
    c: ContrastMatrix,
    inv_sizes: Vec<f64>,
    dof: f64,
    alpha: f64,
    sigma_t: CovarianceModel,
    critical: CriticalValues,
    cfg: QmcConfig,
}

impl PowerAnalysis {
    pub fn new(c: &ContrastMatrix, sizes: &[usize], alpha: f64, cfg: &QmcConfig) -> Result<Self> {
        if sizes.iter().any(|&n| n == 0) {
            return Err(Error::EmptyGroup(sizes.iter().position(|&n| n == 0).unwrap()));
        }
        let dof = sizes.iter().map(|n| n - 1).sum::<usize>();
        if dof == 0 {
            return Err(Error::DegenerateVariance);
        }
        let inv_sizes: Vec<f64> = sizes.iter().map(|&n| 1.0 / n as f64).collect();
        Self::with_inv_sizes(c, &inv_sizes, dof as f64, alpha, cfg)
    }

    pub fn with_inv_sizes(
        c: &ContrastMatrix,
        inv_sizes: &[f64],
        dof: f64,
        alpha: f64,
        cfg: &QmcConfig,
    ) -> Result<Self> {
        let sigma = sigma_t(c, inv_sizes)?;
        let u = critical_u(alpha, &sigma, dof, cfg)?;
        let (v, k) = critical_v(alpha, c, inv_sizes, dof, cfg)?;
        let critical = CriticalValues {
            u_alpha: u,
            v_alpha: v,
            thresholds_t: vec![u; k.len()],
            thresholds_s: k.iter().map(|x| x * v).collect(),
            k_inv: k,
        };
        Ok(Self {
            c: c.clone(),
            inv_sizes: inv_sizes.to_vec(),
            dof,
            alpha,
            sigma_t: sigma,
            critical,
            cfg: *cfg,
        })
    }

    pub fn critical(&self) -> &CriticalValues {
        &self.critical
    }

    pub fn sigma_t(&self) -> &CovarianceModel {
        &self.sigma_t
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda_t(&self, mu: &[f64], sigma2: f64) -> Result<Vec<f64>> {
        Ok(noncentrality(StatisticKind::T, mu, sigma2, &self.c, &self.inv_sizes)?.values)
    }

    fn power_with(&self, thresholds: &[f64], mu: &[f64], sigma2: f64, method: PowerMethod) -> Result<PowerResult> {
        let lambda = self.lambda_t(mu, sigma2)?;
        let p = mvt_cdf(thresholds, &self.sigma_t, self.dof, &lambda, &self.cfg)?.complement();
        Ok(PowerResult {
            beta: p.value,
            est_error: p.est_error,
            method,
        })
    }

    pub fn power_t(&self, mu: &[f64], sigma2: f64) -> Result<PowerResult> {
        self.power_with(&self.critical.thresholds_t, mu, sigma2, PowerMethod::T)
    }

    pub fn power_s(&self, mu: &[f64], sigma2: f64) -> Result<PowerResult> {
        self.power_with(&self.critical.thresholds_s, mu, sigma2, PowerMethod::S)
    }

    /// `P(max >= threshold and row k_true is the argmax)` by simulation of
    /// the T vector. For S the comparison uses `T_k / k_inv_k`. Ties count
    /// as detections.
    pub fn r_tp(
        &self,
        method: PowerMethod,
        k_true: usize,
        mu: &[f64],
        sigma2: f64,
        draws: usize,
        seed: u64,
    ) -> Result<RtpEstimate> {
        let m = self.c.num_contrasts();
        if k_true >= m {
            return Err(Error::InvalidParameter(format!("pattern index {k_true} >= {m}")));
        }
        if draws == 0 {
            return Err(Error::InvalidParameter("need at least one draw".into()));
        }
        let lambda = self.lambda_t(mu, sigma2)?;
        let sample = sample_statistics(StatisticKind::T, &self.sigma_t, self.dof, &lambda, draws, seed)?;
        let (scale, threshold): (Vec<f64>, f64) = match method {
            PowerMethod::T => (vec![1.0; m], self.critical.u_alpha),
            PowerMethod::S => (self.critical.k_inv.clone(), self.critical.v_alpha),
        };
        let mut hits = 0usize;
        let mut rejections = 0usize;
        let mut z = vec![0.0; m];
        for i in 0..draws {
            for (k, (x, s)) in sample.row(i).iter().zip(&scale).enumerate() {
                z[k] = x / s;
            }
            let max = z.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            if max >= threshold {
                rejections += 1;
                if z[k_true] >= max {
                    hits += 1;
                }
            }
        }
        let n = draws as f64;
        let r = hits as f64 / n;
        let p = rejections as f64 / n;
        Ok(RtpEstimate {
            r_tp: r,
            se: (r * (1.0 - r) / n).sqrt(),
            power: p,
            power_se: (p * (1.0 - p) / n).sqrt(),
            draws,
        })
    }
}

/// One-shot power of the T test.
#[allow(clippy::too_many_arguments)]
pub fn power_t(
    mu: &[f64],
    sigma2: f64,
    c: &ContrastMatrix,
    inv_sizes: &[f64],
    dof: f64,
    alpha: f64,
    cfg: &QmcConfig,
) -> Result<PowerResult> {
    PowerAnalysis::with_inv_sizes(c, inv_sizes, dof, alpha, cfg)?.power_t(mu, sigma2)
}

/// One-shot power of the S test.
#[allow(clippy::too_many_arguments)]
pub fn power_s(
    mu: &[f64],
    sigma2: f64,
    c: &ContrastMatrix,
    inv_sizes: &[f64],
    dof: f64,
    alpha: f64,
    cfg: &QmcConfig,
) -> Result<PowerResult> {
    PowerAnalysis::with_inv_sizes(c, inv_sizes, dof, alpha, cfg)?.power_s(mu, sigma2)
}

/// Density of a noncentral bivariate t vector `(Z + delta) / s` at `x`,
/// by quadrature over the chi-square mixing variable.
fn noncentral_t2_density(x: [f64; 2], cov: &[[f64; 2]; 2], delta: [f64; 2], nodes: &[f64]) -> f64 {
    let det = cov[0][0] * cov[1][1] - cov[0][1] * cov[0][1];
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt());
    let mut acc = 0.0;
    for &s in nodes {
        let a = x[0] * s - delta[0];
        let b = x[1] * s - delta[1];
        let q = (cov[1][1] * a * a - 2.0 * cov[0][1] * a * b + cov[0][0] * b * b) / det;
        acc += norm * (-0.5 * q).exp() * s * s;
    }
    acc / nodes.len() as f64
}

/// One point of a contour grid over two statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub x: f64,
    pub y: f64,
    pub density: f64,
    pub reject_t: bool,
    pub reject_s: bool,
    pub true_pattern_t: bool,
    pub true_pattern_s: bool,
}

/// Density of `(T_i, T_j)` under `mu` on a square grid, with the rejection
/// and true-pattern regions of both tests. Only meaningful when `C` has
/// rank 2, so that the remaining statistics are linear in `(T_i, T_j)`.
#[allow(clippy::too_many_arguments)]
pub fn contour_grid(
    analysis: &PowerAnalysis,
    mu: &[f64],
    sigma2: f64,
    axes: (usize, usize),
    k_true: usize,
    range: (f64, f64),
    steps: usize,
) -> Result<Vec<ContourPoint>> {
    let (i, j) = axes;
    let m = analysis.c.num_contrasts();
    if i >= m || j >= m || i == j || k_true >= m || steps < 2 {
        return Err(Error::InvalidParameter("bad contour grid request".into()));
    }
    let sig = analysis.sigma_t.sigma();
    let cov2 = [[sig[(i, i)], sig[(i, j)]], [sig[(j, i)], sig[(j, j)]]];
    if cov2[0][0] * cov2[1][1] - cov2[0][1] * cov2[0][1] <= 1e-12 {
        return Err(Error::SingularSigma { rank: 1, dim: 2 });
    }
    // every T_k as a linear function of (T_i, T_j)
    let det = cov2[0][0] * cov2[1][1] - cov2[0][1] * cov2[0][1];
    let inv = [[cov2[1][1] / det, -cov2[0][1] / det], [-cov2[0][1] / det, cov2[0][0] / det]];
    let beta: Vec<[f64; 2]> = (0..m)
        .map(|k| {
            let s = [sig[(k, i)], sig[(k, j)]];
            [s[0] * inv[0][0] + s[1] * inv[1][0], s[0] * inv[0][1] + s[1] * inv[1][1]]
        })
        .collect();

    let lambda = analysis.lambda_t(mu, sigma2)?;
    let dof = analysis.dof;
    let nodes: Vec<f64> = (0..400)
        .map(|q| (chi2_inv((q as f64 + 0.5) / 400.0, dof) / dof).sqrt())
        .collect();
    let cv = &analysis.critical;
    let mut out = Vec::with_capacity(steps * steps);
    for a in 0..steps {
        for b in 0..steps {
            let x = range.0 + (range.1 - range.0) * a as f64 / (steps - 1) as f64;
            let y = range.0 + (range.1 - range.0) * b as f64 / (steps - 1) as f64;
            let t: Vec<f64> = beta.iter().map(|w| w[0] * x + w[1] * y).collect();
            let s: Vec<f64> = t.iter().zip(&cv.k_inv).map(|(t, k)| t / k).collect();
            let tmax = t.iter().fold(f64::NEG_INFINITY, |p, &q| p.max(q));
            let smax = s.iter().fold(f64::NEG_INFINITY, |p, &q| p.max(q));
            out.push(ContourPoint {
                x,
                y,
                density: noncentral_t2_density([x, y], &cov2, [lambda[i], lambda[j]], &nodes),
                reject_t: tmax >= cv.u_alpha,
                reject_s: smax >= cv.v_alpha,
                true_pattern_t: tmax >= cv.u_alpha && t[k_true] >= tmax,
                true_pattern_s: smax >= cv.v_alpha && s[k_true] >= smax,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_pg_contrasts, Pattern};
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn inv(sizes: &[usize]) -> Vec<f64> {
        sizes.iter().map(|&n| 1.0 / n as f64).collect()
    }

    #[test]
    fn single_contrast_critical_value_is_t_quantile() {
        let c = ContrastMatrix::new(vec![vec![-1.0, 1.0]]).unwrap();
        let sigma = sigma_t(&c, &inv(&[10, 12])).unwrap();
        let t = StudentsT::new(0.0, 1.0, 20.0).unwrap();
        // density near the quantile is ~0.09, so error in u ~ eps / 0.09
        let u = critical_u(0.05, &sigma, 20.0, &default_qmc()).unwrap();
        assert!((u - t.inverse_cdf(0.95)).abs() < 2e-3, "{u}");
        let u = critical_u(0.05, &sigma, 20.0, &QmcConfig::with_tol(1e-6)).unwrap();
        assert!((u - t.inverse_cdf(0.95)).abs() < 2e-4, "{u}");
    }

    #[test]
    fn zero_mean_has_zero_noncentrality_and_size_alpha() {
        let c = default_pg_contrasts();
        let lam = noncentrality(StatisticKind::T, &[0.0; 3], 1.0, &c, &inv(&[56, 37, 7])).unwrap();
        assert!(lam.values.iter().all(|&v| v == 0.0));
        let pa = PowerAnalysis::new(&c, &[56, 37, 7], 0.05, &default_qmc()).unwrap();
        let b = pa.power_t(&[0.0; 3], 1.0).unwrap();
        assert!((b.beta - 0.05).abs() < 1e-3, "{b:?}");
    }

    #[test]
    fn priority_for_equal_sizes_is_first() {
        assert_eq!(priority_index(&default_pg_contrasts(), &inv(&[30, 30, 30])).unwrap(), 0);
        assert_eq!(priority_index(&default_pg_contrasts(), &inv(&[56, 37, 7])).unwrap(), 1);
    }

    #[test]
    fn single_contrast_r_tp_is_power() {
        let c = ContrastMatrix::new(vec![vec![-1.0, 1.0]]).unwrap();
        let pa = PowerAnalysis::new(&c, &[20, 20], 0.05, &default_qmc()).unwrap();
        let mu = [-0.3, 0.3];
        let r = pa.r_tp(PowerMethod::T, 0, &mu, 1.0, 100_000, 5).unwrap();
        assert_eq!(r.r_tp, r.power);
        let exact = pa.power_t(&mu, 1.0).unwrap();
        assert!((r.power - exact.beta).abs() < 4.0 * r.power_se + exact.est_error);
    }

    #[test]
    fn contour_grid_regions() {
        let c = default_pg_contrasts();
        let pa = PowerAnalysis::new(&c, &[56, 37, 7], 0.05, &default_qmc()).unwrap();
        let mu: Vec<f64> = Pattern::Dominant.coefficients().iter().map(|x| x * 0.5).collect();
        let g = contour_grid(&pa, &mu, 1.0, (1, 2), 1, (-4.0, 6.0), 101).unwrap();
        assert_eq!(g.len(), 101 * 101);
        assert!(g.iter().all(|p| p.density >= 0.0));
        assert!(g.iter().all(|p| !p.true_pattern_t || p.reject_t));
        assert!(g.iter().any(|p| p.reject_s && !p.reject_t));
    }
}
