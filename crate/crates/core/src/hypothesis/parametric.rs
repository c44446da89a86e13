use crate::data::{summarize, ContrastMatrix, GroupedDataset};
use crate::error::Result;
use crate::mvdist::{mvt_cdf, CovarianceModel, QmcConfig};

use super::contrast::{compute_s, compute_t, sigma_s, sigma_t};
use super::{Method, SelectedPattern, StatisticVector, Tail, TestResult};

/// Maximum contrast test: `p = P(T_max >= t_max)` under the central
/// multivariate t law with correlation `Sigma_T` and `sum(n_i - 1)`
/// degrees of freedom.
pub fn max_contrast_test(
    ds: &GroupedDataset,
    c: &ContrastMatrix,
    tail: Tail,
    cfg: &QmcConfig,
) -> Result<TestResult> {
    let summary = summarize(ds)?;
    c.check_groups(summary.num_groups())?;
    let eff = tail.effective(c);
    let stat = compute_t(&summary, &eff)?;
    let sigma = sigma_t(&eff, &summary.inv_sizes)?;
    finish(Method::Mcm, c, stat, &sigma, summary.dof as f64, cfg)
}

/// Modified maximum contrast test: as [`max_contrast_test`] with the
/// statistics `S_k` and their covariance `Sigma_S`.
pub fn modified_max_contrast_test(
    ds: &GroupedDataset,
    c: &ContrastMatrix,
    tail: Tail,
    cfg: &QmcConfig,
) -> Result<TestResult> {
    let summary = summarize(ds)?;
    c.check_groups(summary.num_groups())?;
    let eff = tail.effective(c);
    let stat = compute_s(&summary, &eff)?;
    let sigma = sigma_s(&eff, &summary.inv_sizes)?;
    finish(Method::Mmcm, c, stat, &sigma, summary.dof as f64, cfg)
}

fn finish(
    method: Method,
    c: &ContrastMatrix,
    stat: StatisticVector,
    sigma: &CovarianceModel,
    dof: f64,
    cfg: &QmcConfig,
) -> Result<TestResult> {
    let m = stat.values.len();
    let upper = vec![stat.max_value; m];
    let p = mvt_cdf(&upper, sigma, dof, &vec![0.0; m], cfg)?.complement();
    Ok(TestResult {
        method,
        selected: Some(SelectedPattern::from_effective(c, stat.argmax)),
        statistic: stat,
        p_value: p.value,
        p_error: p.est_error,
        resamples: None,
        count: None,
        converged: p.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_pg_contrasts;
    use crate::hypothesis::Direction;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    fn ds(groups: Vec<Vec<f64>>) -> GroupedDataset {
        GroupedDataset::log_scale(groups)
    }

    #[test]
    fn single_contrast_reduces_to_t_test() {
        let c = ContrastMatrix::new(vec![vec![-1.0, 1.0]]).unwrap();
        let d = ds(vec![vec![1.0, 2.0, 3.0], vec![2.5, 3.5, 4.0, 5.0]]);
        let r = max_contrast_test(&d, &c, Tail::One, &QmcConfig::with_tol(1e-6)).unwrap();
        let t = StudentsT::new(0.0, 1.0, 5.0).unwrap();
        let exact = 1.0 - t.cdf(r.statistic.max_value);
        assert!((r.p_value - exact).abs() < 1e-5, "{} vs {exact}", r.p_value);
    }

    #[test]
    fn two_sided_selects_negative_direction() {
        let c = default_pg_contrasts();
        let d = ds(vec![vec![3.0, 3.2, 2.9], vec![2.0, 2.1, 1.9], vec![1.0, 1.1, 0.8]]);
        let r = max_contrast_test(&d, &c, Tail::Two, &QmcConfig::default()).unwrap();
        let sel = r.selected.unwrap();
        assert_eq!(sel.direction, Direction::Negative);
        assert_eq!(sel.index, 0);
        assert_eq!(sel.name, "-additive");
        assert!(r.p_value < 0.01);
        let one = max_contrast_test(&d, &c, Tail::One, &QmcConfig::default()).unwrap();
        assert!(one.p_value > 0.9);
    }

    #[test]
    fn raw_scale_is_rejected() {
        let c = default_pg_contrasts();
        let d = GroupedDataset::raw(vec![vec![1.0, 2.0], vec![1.0], vec![3.0]]);
        assert!(max_contrast_test(&d, &c, Tail::One, &QmcConfig::default()).is_err());
    }
}
