use crate::data::{ContrastMatrix, GroupSummary};
use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::mvdist::CovarianceModel;

use super::StatisticVector;

fn check(c: &ContrastMatrix, inv_sizes: &[f64]) -> Result<()> {
    c.check_groups(inv_sizes.len())
}

/// `G = C D C'` with `D = diag(inv_sizes)`.
pub fn gram(c: &ContrastMatrix, inv_sizes: &[f64]) -> Matrix {
    let m = c.num_contrasts();
    Matrix::from_fn(m, m, |k, l| {
        c.row(k)
            .iter()
            .zip(c.row(l))
            .zip(inv_sizes)
            .map(|((a, b), d)| a * b * d)
            .sum()
    })
}

/// Correlation of the T statistics.
pub fn sigma_t(c: &ContrastMatrix, inv_sizes: &[f64]) -> Result<CovarianceModel> {
    check(c, inv_sizes)?;
    let g = gram(c, inv_sizes);
    let m = g.rows();
    let s = Matrix::from_fn(m, m, |k, l| {
        if k == l {
            1.0
        } else {
            g[(k, l)] / (g[(k, k)] * g[(l, l)]).sqrt()
        }
    });
    CovarianceModel::new(s)
}

/// Covariance of the S statistics.
pub fn sigma_s(c: &ContrastMatrix, inv_sizes: &[f64]) -> Result<CovarianceModel> {
    sigma_m(c, inv_sizes, 1.0)
}

/// Covariance of the M statistics for error variance `sigma2`.
pub fn sigma_m(c: &ContrastMatrix, inv_sizes: &[f64], sigma2: f64) -> Result<CovarianceModel> {
    check(c, inv_sizes)?;
    if !(sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma2 {sigma2} <= 0")));
    }
    let g = gram(c, inv_sizes);
    let norms = c.squared_norms();
    let m = g.rows();
    let s = Matrix::from_fn(m, m, |k, l| sigma2 * g[(k, l)] / (norms[k] * norms[l]).sqrt());
    CovarianceModel::new(s)
}

/// `sqrt(c'c / c'Dc)` per row; `S_k = T_k / k_inv_k`.
pub fn k_inv(c: &ContrastMatrix, inv_sizes: &[f64]) -> Result<Vec<f64>> {
    check(c, inv_sizes)?;
    let g = gram(c, inv_sizes);
    Ok(c.squared_norms()
        .iter()
        .enumerate()
        .map(|(k, n)| (n / g[(k, k)]).sqrt())
        .collect())
}

fn positive_variance(summary: &GroupSummary) -> Result<f64> {
    let v = summary.pooled_variance;
    let scale = summary.means.iter().fold(0.0_f64, |a, m| a.max(m.abs()));
    // variance at rounding level of the data is constant data in disguise
    if !(v > (64.0 * f64::EPSILON * scale).powi(2)) {
        return Err(Error::ZeroVariance);
    }
    Ok(v)
}

/// `T_k = c_k'Y / sqrt(V c_k'Dc_k)`.
pub fn compute_t(summary: &GroupSummary, c: &ContrastMatrix) -> Result<StatisticVector> {
    check(c, &summary.inv_sizes)?;
    let v = positive_variance(summary)?;
    let values = c
        .rows()
        .iter()
        .map(|row| {
            let cd: f64 = row.iter().zip(&summary.inv_sizes).map(|(c, d)| c * c * d).sum();
            dot(row, &summary.means) / (v * cd).sqrt()
        })
        .collect();
    Ok(StatisticVector::new(values))
}

/// `S_k = c_k'Y / sqrt(V c_k'c_k)`.
pub fn compute_s(summary: &GroupSummary, c: &ContrastMatrix) -> Result<StatisticVector> {
    check(c, &summary.inv_sizes)?;
    let v = positive_variance(summary)?;
    Ok(StatisticVector::new(
        c.rows()
            .iter()
            .map(|row| dot(row, &summary.means) / (v * dot(row, row)).sqrt())
            .collect(),
    ))
}

/// `M_k = c_k'Y / sqrt(c_k'c_k)`.
pub fn compute_m(means: &[f64], c: &ContrastMatrix) -> Result<StatisticVector> {
    c.check_groups(means.len())?;
    Ok(StatisticVector::new(
        c.rows()
            .iter()
            .map(|row| dot(row, means) / dot(row, row).sqrt())
            .collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::default_pg_contrasts;

    fn summary(means: Vec<f64>, v: f64, sizes: &[usize]) -> GroupSummary {
        GroupSummary {
            means,
            pooled_variance: v,
            dof: sizes.iter().map(|n| n - 1).sum(),
            inv_sizes: sizes.iter().map(|&n| 1.0 / n as f64).collect(),
        }
    }

    #[test]
    fn sigma_t_has_unit_diagonal_and_rank_two() {
        let c = default_pg_contrasts();
        let s = sigma_t(&c, &[1.0 / 56.0, 1.0 / 37.0, 1.0 / 7.0]).unwrap();
        for k in 0..3 {
            assert!((s.sigma()[(k, k)] - 1.0).abs() < 1e-15);
        }
        assert_eq!(s.rank(), 2);
    }

    #[test]
    fn equal_sizes_relate_sigma_t_and_sigma_s() {
        let c = default_pg_contrasts();
        let d = [0.1; 3];
        let t = sigma_t(&c, &d).unwrap();
        let s = sigma_s(&c, &d).unwrap();
        for k in 0..3 {
            for l in 0..3 {
                let expect = s.sigma()[(k, l)] / (s.sigma()[(k, k)] * s.sigma()[(l, l)]).sqrt();
                assert!((t.sigma()[(k, l)] - expect).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn constant_means_give_zero_statistics() {
        let c = default_pg_contrasts();
        let t = compute_t(&summary(vec![2.0; 3], 1.0, &[5, 5, 5]), &c).unwrap();
        assert!(t.values.iter().all(|v| v.abs() < 1e-15));
        assert_eq!(t.argmax, 0);
    }

    #[test]
    fn hand_evaluated_statistics() {
        // means (-1/6, -1/6, 2/6), V = 1, n = (56, 37, 7)
        let c = default_pg_contrasts();
        let s = summary(vec![-1.0 / 6.0, -1.0 / 6.0, 2.0 / 6.0], 1.0, &[56, 37, 7]);
        let t = compute_t(&s, &c).unwrap();
        // c1'Y = 0.25, c1'Dc1 = (1/56 + 1/7)/4
        let t1 = 0.25 / ((1.0 / 56.0 + 1.0 / 7.0) / 4.0_f64).sqrt();
        // c2'Y = 1/6 * (1/3 + 1/3 + 4/3) = 1/3, c2'Dc2 = (1/56 + 1/37 + 4/7)/9
        let t2 = (1.0 / 3.0) / ((1.0 / 56.0 + 1.0 / 37.0 + 4.0 / 7.0) / 9.0_f64).sqrt();
        // c3'Y = (2/18 - 1/18 + 2/18) = 1/6, c3'Dc3 = (4/56 + 1/37 + 1/7)/9
        let t3 = (1.0 / 6.0) / ((4.0 / 56.0 + 1.0 / 37.0 + 1.0 / 7.0) / 9.0_f64).sqrt();
        for (a, b) in t.values.iter().zip([t1, t2, t3]) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
        let sv = compute_s(&s, &c).unwrap();
        let s2 = (1.0 / 3.0) / (6.0_f64 / 9.0).sqrt();
        assert!((sv.values[1] - s2).abs() < 1e-14);
        assert_eq!(sv.argmax, 1);
    }

    #[test]
    fn zero_variance_is_an_error() {
        let c = default_pg_contrasts();
        let s = summary(vec![1.0, 1.0, 1.0], 0.0, &[2, 2, 2]);
        assert_eq!(compute_t(&s, &c).unwrap_err(), Error::ZeroVariance);
        assert_eq!(compute_s(&s, &c).unwrap_err(), Error::ZeroVariance);
        assert!(compute_m(&s.means, &c).is_ok());
    }

    #[test]
    fn k_inv_links_t_and_s() {
        let c = default_pg_contrasts();
        let s = summary(vec![0.3, -0.2, 0.9], 1.7, &[56, 37, 7]);
        let t = compute_t(&s, &c).unwrap();
        let sv = compute_s(&s, &c).unwrap();
        let k = k_inv(&c, &s.inv_sizes).unwrap();
        for i in 0..3 {
            assert!((sv.values[i] - t.values[i] / k[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let c = default_pg_contrasts();
        assert!(matches!(
            sigma_t(&c, &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
