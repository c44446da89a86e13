use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::GroupedDataset;
use crate::error::{Error, Result};

use super::{Method, StatisticVector, TestResult};

/// Kruskal-Wallis H test with average ranks for ties and the usual tie
/// correction; p-value from the chi-square law with `a - 1` degrees of
/// freedom. Ranks are scale-free, so raw and log data give the same answer.
pub fn kruskal_wallis_test(ds: &GroupedDataset) -> Result<TestResult> {
    ds.check_testable()?;
    let a = ds.num_groups();
    let n = ds.total();
    if n < a + 1 {
        return Err(Error::DegenerateVariance);
    }

    let mut obs: Vec<(f64, usize)> = ds
        .groups()
        .iter()
        .enumerate()
        .flat_map(|(g, v)| v.iter().map(move |&x| (x, g)))
        .collect();
    obs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut rank_sums = vec![0.0; a];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && obs[j].0 == obs[i].0 {
            j += 1;
        }
        let t = (j - i) as f64;
        // ranks i+1..=j share their average
        let rank = 0.5 * ((i + 1) + j) as f64;
        for &(_, g) in &obs[i..j] {
            rank_sums[g] += rank;
        }
        ties += t * t * t - t;
        i = j;
    }
    let nf = n as f64;
    let correction = 1.0 - ties / (nf * nf * nf - nf);
    if correction <= 0.0 {
        return Err(Error::AllTied);
    }
    let h0: f64 = rank_sums
        .iter()
        .zip(ds.groups())
        .map(|(r, g)| r * r / g.len() as f64)
        .sum::<f64>()
        * 12.0
        / (nf * (nf + 1.0))
        - 3.0 * (nf + 1.0);
    let h = (h0 / correction).max(0.0);
    let chi = ChiSquared::new((a - 1) as f64).expect("a >= 2");
    Ok(TestResult {
        method: Method::Kw,
        statistic: StatisticVector::new(vec![h]),
        p_value: chi.sf(h),
        p_error: 0.0,
        selected: None,
        resamples: None,
        count: None,
        converged: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_groups() {
        // rank sums 3, 7, 11: H = 12/42 * (9 + 49 + 121)/2 - 21 = 4.5714
        let ds = GroupedDataset::log_scale(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let r = kruskal_wallis_test(&ds).unwrap();
        assert!((r.statistic.max_value - 32.0 / 7.0).abs() < 1e-12);
        assert!((r.p_value - (-16.0_f64 / 7.0).exp()).abs() < 1e-12);
        assert!((r.p_value - 0.1017).abs() < 5e-5);
        assert!(r.selected.is_none());
    }

    #[test]
    fn tie_correction() {
        // ranks: 1.5 1.5 | 3 4.5 | 4.5 6, sums 3, 7.5, 10.5
        let ds = GroupedDataset::log_scale(vec![vec![1.0, 1.0], vec![2.0, 3.0], vec![3.0, 4.0]]);
        let r = kruskal_wallis_test(&ds).unwrap();
        let h0 = 12.0 / 42.0 * (9.0 + 56.25 + 110.25) / 2.0 - 21.0;
        let h = h0 / (1.0 - 12.0 / 210.0);
        assert!((r.statistic.max_value - h).abs() < 1e-12);
    }

    #[test]
    fn all_tied() {
        let ds = GroupedDataset::log_scale(vec![vec![2.0, 2.0], vec![2.0], vec![2.0]]);
        assert_eq!(kruskal_wallis_test(&ds).unwrap_err(), Error::AllTied);
    }
}
