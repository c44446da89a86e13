use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{ContrastMatrix, GroupedDataset, Scale};
use crate::error::{Error, Result};

use super::{Method, SelectedPattern, StatisticVector, Tail, TestResult};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermutationConfig {
    pub n_resamp_min: usize,
    pub n_resamp_max: usize,
    /// Target for `confidence_mult * se(p)`.
    pub eps: f64,
    pub confidence_mult: f64,
    pub seed: u64,
    /// Report `(COUNT + 1) / (r + 1)` instead of `COUNT / r`.
    pub add_one: bool,
}

impl Default for PermutationConfig {
    /// The round cap lets the default error target be met at any p:
    /// `3.5 * 0.5 / sqrt(r) < 1e-3` needs `r > 3.07e6`.
    fn default() -> Self {
        Self {
            n_resamp_min: 1000,
            n_resamp_max: 4_000_000,
            eps: 1e-3,
            confidence_mult: 3.5,
            seed: 0x7065_726d,
            add_one: false,
        }
    }
}

impl PermutationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_resamp_min > self.n_resamp_max || self.n_resamp_max == 0 {
            return Err(Error::InvalidParameter(
                "need 0 < n_resamp_min <= n_resamp_max".into(),
            ));
        }
        if !(self.eps > 0.0) || !(self.confidence_mult > 0.0) {
            return Err(Error::InvalidParameter("eps and confidence_mult must be > 0".into()));
        }
        Ok(())
    }
}

/// Computes `M_max` from group sums. The largest group's sum is implied by
/// the total, so only the other groups need to be filled per permutation.
pub(crate) struct MaxStat {
    /// `c_ki / (|c_k| n_i)`
    weights: Vec<Vec<f64>>,
    sizes: Vec<usize>,
    largest: usize,
    /// Relative margin for "strictly greater".
    tie_tol: f64,
}

impl MaxStat {
    pub(crate) fn new(c: &ContrastMatrix, sizes: &[usize], spread: f64) -> Self {
        let norms = c.squared_norms();
        let weights = c
            .rows()
            .iter()
            .zip(&norms)
            .map(|(row, n)| {
                row.iter()
                    .zip(sizes)
                    .map(|(ci, &ni)| ci / (n.sqrt() * ni as f64))
                    .collect()
            })
            .collect();
        let largest = (0..sizes.len()).fold(0, |b, i| if sizes[i] > sizes[b] { i } else { b });
        Self {
            weights,
            sizes: sizes.to_vec(),
            largest,
            tie_tol: 1e-12 * spread,
        }
    }

    /// Number of leading values assigned to the groups other than the
    /// largest.
    pub(crate) fn drawn(&self) -> usize {
        self.sizes.iter().sum::<usize>() - self.sizes[self.largest]
    }

    /// Statistics when the first `drawn()` entries of `values` fill the
    /// non-largest groups in order and `total` is the sum of all values.
    pub(crate) fn eval(&self, values: &[f64], total: f64, sums: &mut [f64], out: &mut [f64]) {
        let mut pos = 0;
        let mut rest = total;
        for (g, &n) in self.sizes.iter().enumerate() {
            if g == self.largest {
                continue;
            }
            let s: f64 = values[pos..pos + n].iter().sum();
            sums[g] = s;
            rest -= s;
            pos += n;
        }
        sums[self.largest] = rest;
        for (o, w) in out.iter_mut().zip(&self.weights) {
            *o = w.iter().zip(sums.iter()).map(|(a, b)| a * b).sum();
        }
    }

    pub(crate) fn exceeds(&self, candidate: f64, observed: f64) -> bool {
        candidate - observed > self.tie_tol.max(1e-12 * observed.abs())
    }
}

fn max_of(v: &[f64]) -> f64 {
    v.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
}

/// Permutation test on `M_max`: group labels are reshuffled with the group
/// sizes fixed, and `p = COUNT / r` counts rounds whose `M_max` strictly
/// exceeds the observed one. Sampling stops once more than `n_resamp_min`
/// rounds are done and `confidence_mult * se < eps`, or at `n_resamp_max`.
pub fn permuted_modified_max_contrast_test(
    ds: &GroupedDataset,
    c: &ContrastMatrix,
    tail: Tail,
    cfg: &PermutationConfig,
) -> Result<TestResult> {
    if ds.scale() == Scale::Raw {
        return Err(Error::RawScale);
    }
    ds.check_testable()?;
    c.check_groups(ds.num_groups())?;
    cfg.validate()?;
    if ds.total() < ds.num_groups() + 1 {
        return Err(Error::DegenerateVariance);
    }
    let eff = tail.effective(c);
    let m = eff.num_contrasts();
    let sizes = ds.sizes();

    // centring keeps the running sums small; M is unaffected
    let pooled = ds.pooled();
    let mean = pooled.iter().sum::<f64>() / pooled.len() as f64;
    let mut values: Vec<f64> = pooled.iter().map(|v| v - mean).collect();
    let spread = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let stat = MaxStat::new(&eff, &sizes, spread);

    // observed arrangement: reorder so non-largest groups come first
    let mut arranged = Vec::with_capacity(values.len());
    let mut offsets = Vec::with_capacity(sizes.len());
    let mut pos = 0;
    for &n in &sizes {
        offsets.push(pos);
        pos += n;
    }
    for g in (0..sizes.len()).filter(|&g| g != stat.largest) {
        arranged.extend_from_slice(&values[offsets[g]..offsets[g] + sizes[g]]);
    }
    let lg = stat.largest;
    arranged.extend_from_slice(&values[offsets[lg]..offsets[lg] + sizes[lg]]);
    values = arranged;
    let total: f64 = values.iter().sum();

    let mut sums = vec![0.0; sizes.len()];
    let mut observed = vec![0.0; m];
    stat.eval(&values, total, &mut sums, &mut observed);
    let observed = StatisticVector::new(observed);

    let drawn = stat.drawn();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut buf = vec![0.0; m];
    let mut draw = vec![0.0; drawn];
    let mut count = 0usize;
    let mut r = 0usize;
    let mut converged = false;
    while r < cfg.n_resamp_max {
        let (chosen, _) = values.partial_shuffle(&mut rng, drawn);
        draw.copy_from_slice(chosen);
        stat.eval(&draw, total, &mut sums, &mut buf);
        if stat.exceeds(max_of(&buf), observed.max_value) {
            count += 1;
        }
        r += 1;
        if r > cfg.n_resamp_min {
            let p = count as f64 / r as f64;
            let se = (p * (1.0 - p) / r as f64).sqrt();
            if cfg.confidence_mult * se < cfg.eps {
                converged = true;
                break;
            }
        }
    }

    let p_raw = count as f64 / r as f64;
    let p_value = if cfg.add_one {
        (count + 1) as f64 / (r + 1) as f64
    } else {
        p_raw
    };
    Ok(TestResult {
        method: Method::Pmmcm,
        selected: Some(SelectedPattern::from_effective(c, observed.argmax)),
        statistic: observed,
        p_value,
        p_error: (p_raw * (1.0 - p_raw) / r as f64).sqrt(),
        resamples: Some(r),
        count: Some(count),
        converged,
    })
}
