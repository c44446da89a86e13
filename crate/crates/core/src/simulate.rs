//! Simulation of genotype-response scenarios and the metrics used to
//! compare the tests: rejection rate, true-pattern detection rate and
//! per-pattern selection counts.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{default_pg_contrasts, summarize, ContrastMatrix, GroupedDataset, Pattern};
use crate::error::{Error, Result};
use crate::hypothesis::{
    compute_s, compute_t, kruskal_wallis_test, max_contrast_test, modified_max_contrast_test,
    permuted_modified_max_contrast_test, Method, PermutationConfig, SelectedPattern, Tail,
};
use crate::mvdist::QmcConfig;
use crate::power::{default_qmc, PowerAnalysis};
use crate::seed;

/// Group sizes used by the published simulation design.
const HWE_TABLE: [(f64, usize, [usize; 3]); 8] = [
    (0.12, 100, [78, 20, 2]),
    (0.25, 100, [56, 37, 7]),
    (0.33, 100, [44, 44, 12]),
    (0.50, 100, [25, 50, 25]),
    (0.12, 300, [234, 61, 5]),
    (0.25, 300, [168, 113, 19]),
    (0.33, 300, [133, 133, 34]),
    (0.50, 300, [75, 150, 75]),
];

/// Genotype group sizes (AA, Aa, aa) under Hardy-Weinberg equilibrium.
///
/// The eight published (maf, n) combinations are returned as tabulated.
/// Otherwise the expected counts `n (p^2, 2pq, q^2)` with `q = maf` are
/// rounded down and the shortfall goes to the largest remainders (lowest
/// index on ties).
pub fn hwe_group_sizes(maf: f64, n_total: usize) -> Result<[usize; 3]> {
    if !(maf > 0.0 && maf <= 0.5) {
        return Err(Error::InvalidParameter(format!("maf {maf} not in (0, 0.5]")));
    }
    if let Some((_, _, sizes)) = HWE_TABLE
        .iter()
        .find(|(m, n, _)| (m - maf).abs() < 1e-9 && *n == n_total)
    {
        return Ok(*sizes);
    }
    let q = maf;
    let p = 1.0 - q;
    let n = n_total as f64;
    let expected = [p * p * n, 2.0 * p * q * n, q * q * n];
    let mut sizes = expected.map(|e| e.floor() as usize);
    let short = n_total - sizes.iter().sum::<usize>();
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| {
        let ra = expected[a] - expected[a].floor();
        let rb = expected[b] - expected[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &g in order.iter().take(short) {
        sizes[g] += 1;
    }
    Ok(sizes)
}

/// Draws group `i` as `n_i` independent `N(delta * c_i, 1)` values, where
/// `c` is the pattern's coefficient vector (all means zero for `None`).
pub fn generate_dataset(
    pattern: Option<Pattern>,
    delta: f64,
    sizes: &[usize],
    seed: u64,
) -> Result<GroupedDataset> {
    let means: Vec<f64> = match pattern {
        Some(p) => {
            if sizes.len() != 3 {
                return Err(Error::DimensionMismatch {
                    expected: 3,
                    found: sizes.len(),
                });
            }
            p.coefficients().iter().map(|c| delta * c).collect()
        }
        None => vec![0.0; sizes.len()],
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let groups = sizes
        .iter()
        .zip(&means)
        .map(|(&n, &mu)| {
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    mu + z
                })
                .collect::<Vec<f64>>()
        })
        .collect();
    Ok(GroupedDataset::log_scale(groups))
}

/// How a contrast test's rejection is decided inside a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionRule {
    /// Compare the statistic with the level-alpha critical value computed
    /// once per scenario. Equivalent to `p < alpha` up to integrator error.
    #[default]
    CriticalValue,
    /// Compute the p-value of every replicate.
    PValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub maf: f64,
    pub n_total: usize,
    /// `None` is the overall null (all means equal).
    pub pattern: Option<Pattern>,
    pub delta: f64,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub tail: Tail,
    pub decision: DecisionRule,
    pub qmc: QmcConfig,
    pub perm: PermutationConfig,
}

impl ScenarioConfig {
    /// Two-sided, alpha 0.05, MCM/MMCM/KW, critical-value decisions.
    pub fn new(maf: f64, n_total: usize, pattern: Option<Pattern>, delta: f64) -> Self {
        Self {
            maf,
            n_total,
            pattern,
            delta,
            methods: vec![Method::Mcm, Method::Mmcm, Method::Kw],
            reps: 2000,
            alpha: 0.05,
            seed: 20_100_401,
            tail: Tail::Two,
            decision: DecisionRule::CriticalValue,
            qmc: QmcConfig::default(),
            perm: PermutationConfig::default(),
        }
    }

    pub fn with_reps(mut self, reps: usize) -> Self {
        self.reps = reps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_methods(mut self, methods: Vec<Method>) -> Self {
        self.methods = methods;
        self
    }

    pub fn pattern_name(&self) -> &'static str {
        self.pattern.map_or("null", Pattern::name)
    }

    pub fn sizes(&self) -> Result<[usize; 3]> {
        hwe_group_sizes(self.maf, self.n_total)
    }

    fn validate(&self) -> Result<[usize; 3]> {
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta {} < 0", self.delta)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} not in (0, 1)", self.alpha)));
        }
        let sizes = self.sizes()?;
        if let Some(g) = sizes.iter().position(|&n| n == 0) {
            return Err(Error::EmptyGroup(g));
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMetrics {
    pub method: Method,
    pub reps: usize,
    pub n_p: usize,
    /// `None` for Kruskal-Wallis and when the generating pattern is not a
    /// row of the contrast matrix (null, valley).
    pub n_tp: Option<usize>,
    /// Rejections per selected row of the tested matrix (`[C; -C]` when
    /// two-sided). Empty for Kruskal-Wallis.
    pub selections: Vec<usize>,
    pub selection_names: Vec<String>,
    /// Rows of the user's contrast matrix (half of `selections` when
    /// two-sided).
    pub base_rows: usize,
    /// Replicates whose p-value did not reach the error target.
    pub unconverged: usize,
    pub elapsed: Duration,
}

impl MethodMetrics {
    pub fn r_p(&self) -> f64 {
        ratio(self.n_p, self.reps)
    }

    pub fn r_tp(&self) -> Option<f64> {
        self.n_tp.map(|n| ratio(n, self.reps))
    }

    /// Rejections that selected row `k` of the user's matrix in either
    /// direction.
    pub fn selected_either_sign(&self, k: usize) -> usize {
        if self.selections.is_empty() {
            return 0;
        }
        let neg = match self.selections.len() > self.base_rows {
            true => self.selections[k + self.base_rows],
            false => 0,
        };
        self.selections[k] + neg
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetrics {
    pub config: ScenarioConfig,
    pub sizes: [usize; 3],
    pub methods: Vec<MethodMetrics>,
}

impl ScenarioMetrics {
    pub fn method(&self, m: Method) -> Option<&MethodMetrics> {
        self.methods.iter().find(|x| x.method == m)
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, Copy)]
struct Outcome {
    reject: bool,
    row: Option<usize>,
    converged: bool,
    elapsed: Duration,
}

struct Prepared {
    c: ContrastMatrix,
    eff: ContrastMatrix,
    thresholds: Option<(f64, f64)>,
    true_row: Option<usize>,
}

type CriticalKey = (Vec<usize>, usize, u64);

/// `(u, v)` per design. The integrator is seeded, so caching changes no
/// result; scenarios that differ only in the effect share one entry.
fn critical_values(eff: &ContrastMatrix, sizes: &[usize; 3], alpha: f64) -> Result<(f64, f64)> {
    static CACHE: OnceLock<Mutex<HashMap<CriticalKey, (f64, f64)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    // keyed on the default matrix and its augmentation only
    let key = (sizes.to_vec(), eff.num_contrasts(), alpha.to_bits());
    if let Some(&uv) = cache.lock().unwrap().get(&key) {
        return Ok(uv);
    }
    let pa = PowerAnalysis::new(eff, sizes, alpha, &default_qmc())?;
    let uv = (pa.critical().u_alpha, pa.critical().v_alpha);
    cache.lock().unwrap().insert(key, uv);
    Ok(uv)
}

fn prepare(cfg: &ScenarioConfig, sizes: &[usize; 3]) -> Result<Prepared> {
    let c = default_pg_contrasts();
    let eff = cfg.tail.effective(&c);
    let needs_cv = cfg.decision == DecisionRule::CriticalValue
        && cfg.methods.iter().any(|m| matches!(m, Method::Mcm | Method::Mmcm));
    let thresholds = if needs_cv {
        Some(critical_values(&eff, sizes, cfg.alpha)?)
    } else {
        None
    };
    // the generating pattern counts only in the positive block
    let true_row = cfg
        .pattern
        .filter(|_| cfg.delta > 0.0)
        .and_then(|p| c.find_pattern(&p.coefficients()));
    Ok(Prepared {
        c,
        eff,
        thresholds,
        true_row,
    })
}

fn run_method(
    method: Method,
    ds: &GroupedDataset,
    cfg: &ScenarioConfig,
    prep: &Prepared,
    rep_seed: u64,
) -> Result<Outcome> {
    let start = Instant::now();
    let (reject, row, converged) = match (method, prep.thresholds, cfg.decision) {
        (Method::Mcm, Some((u, _)), DecisionRule::CriticalValue) => {
            let t = compute_t(&summarize(ds)?, &prep.eff)?;
            (t.max_value > u, Some(t.argmax), true)
        }
        (Method::Mmcm, Some((_, v)), DecisionRule::CriticalValue) => {
            let s = compute_s(&summarize(ds)?, &prep.eff)?;
            (s.max_value > v, Some(s.argmax), true)
        }
        (Method::Kw, _, _) => {
            let r = kruskal_wallis_test(ds)?;
            (r.rejects(cfg.alpha), None, true)
        }
        _ => {
            let qmc = cfg.qmc.with_seed(seed::derive(rep_seed, 1));
            let r = match method {
                Method::Mcm => max_contrast_test(ds, &prep.c, cfg.tail, &qmc)?,
                Method::Mmcm => modified_max_contrast_test(ds, &prep.c, cfg.tail, &qmc)?,
                _ => {
                    let perm = PermutationConfig {
                        seed: seed::derive(rep_seed, 2),
                        ..cfg.perm
                    };
                    permuted_modified_max_contrast_test(ds, &prep.c, cfg.tail, &perm)?
                }
            };
            (r.rejects(cfg.alpha), Some(r.statistic.argmax), r.converged)
        }
    };
    Ok(Outcome {
        reject,
        row,
        converged,
        elapsed: start.elapsed(),
    })
}

/// Runs `cfg.reps` replicates through every configured method. Replicate
/// `r` uses data seed `derive(cfg.seed, r)`, so counts do not depend on
/// the number of threads. All methods see the same datasets.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioMetrics> {
    let sizes = cfg.validate()?;
    let prep = prepare(cfg, &sizes)?;
    let outcomes: Vec<Vec<Outcome>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = seed::derive(cfg.seed, rep as u64);
            let ds = generate_dataset(cfg.pattern, cfg.delta, &sizes, rep_seed)?;
            cfg.methods
                .iter()
                .map(|&m| {
                    run_method(m, &ds, cfg, &prep, rep_seed).map_err(|e| {
                        Error::InvalidParameter(format!("replicate {rep}, {m}: {e}"))
                    })
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let methods = cfg
        .methods
        .iter()
        .enumerate()
        .map(|(j, &method)| {
            let selects = method.selects_pattern();
            let rows = if selects { prep.eff.num_contrasts() } else { 0 };
            let mut selections = vec![0usize; rows];
            let mut n_p = 0;
            let mut n_tp = 0;
            let mut unconverged = 0;
            let mut elapsed = Duration::ZERO;
            for o in outcomes.iter().map(|v| v[j]) {
                elapsed += o.elapsed;
                if !o.converged {
                    unconverged += 1;
                }
                if o.reject {
                    n_p += 1;
                    if let Some(r) = o.row {
                        selections[r] += 1;
                        if Some(r) == prep.true_row {
                            n_tp += 1;
                        }
                    }
                }
            }
            let selection_names = if selects {
                (0..rows)
                    .map(|r| SelectedPattern::from_effective(&prep.c, r).name)
                    .collect()
            } else {
                Vec::new()
            };
            MethodMetrics {
                method,
                reps: cfg.reps,
                n_p,
                n_tp: (selects && prep.true_row.is_some()).then_some(n_tp),
                selections,
                selection_names,
                base_rows: prep.c.num_contrasts(),
                unconverged,
                elapsed,
            }
        })
        .collect();

    Ok(ScenarioMetrics {
        config: cfg.clone(),
        sizes,
        methods,
    })
}

/// A timing scenario: label and the data-generating settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingScenario {
    pub label: String,
    pub pattern: Option<Pattern>,
    pub delta: f64,
    pub maf: f64,
    pub n_total: usize,
}

/// The five speed-comparison settings at n = 300.
pub fn timing_scenarios() -> Vec<TimingScenario> {
    let mk = |label: &str, pattern, delta, maf| TimingScenario {
        label: label.to_string(),
        pattern,
        delta,
        maf,
        n_total: 300,
    };
    vec![
        mk("null", None, 0.0, 0.33),
        mk("additive", Some(Pattern::Additive), 0.25, 0.12),
        mk("dominant", Some(Pattern::Dominant), 1.0, 0.50),
        mk("recessive", Some(Pattern::Recessive), 0.5, 0.25),
        mk("valley", Some(Pattern::Valley), 0.25, 0.33),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub scenario: String,
    pub method: Method,
    pub reps: usize,
    pub total: Duration,
    /// Total permutation rounds (pMMCM) or integrand evaluations are not
    /// tracked; rejections give a sanity check of the workload.
    pub rejections: usize,
}

/// Wall-clock totals of the p-value computations, single-threaded, with
/// absolute error tolerance `eps` for both the integrator and the
/// permutation loop. Data generation is excluded from the timings.
pub fn bench_timing(
    scenarios: &[TimingScenario],
    methods: &[Method],
    reps: usize,
    eps: f64,
    seed: u64,
) -> Result<Vec<TimingRow>> {
    if reps == 0 {
        return Ok(Vec::new());
    }
    let c = default_pg_contrasts();
    let qmc = QmcConfig::with_tol(eps);
    let mut rows = Vec::new();
    for (si, sc) in scenarios.iter().enumerate() {
        let sizes = hwe_group_sizes(sc.maf, sc.n_total)?;
        let scenario_seed = seed::derive(seed, si as u64);
        for &method in methods {
            let mut total = Duration::ZERO;
            let mut rejections = 0;
            for rep in 0..reps {
                let rep_seed = seed::derive(scenario_seed, rep as u64);
                let ds = generate_dataset(sc.pattern, sc.delta, &sizes, rep_seed)?;
                let start = Instant::now();
                let r = match method {
                    Method::Mcm => max_contrast_test(&ds, &c, Tail::Two, &qmc.with_seed(rep_seed))?,
                    Method::Mmcm => {
                        modified_max_contrast_test(&ds, &c, Tail::Two, &qmc.with_seed(rep_seed))?
                    }
                    Method::Pmmcm => {
                        let perm = PermutationConfig {
                            eps,
                            seed: rep_seed,
                            ..PermutationConfig::default()
                        };
                        permuted_modified_max_contrast_test(&ds, &c, Tail::Two, &perm)?
                    }
                    Method::Kw => kruskal_wallis_test(&ds)?,
                };
                total += start.elapsed();
                if r.rejects(0.05) {
                    rejections += 1;
                }
            }
            rows.push(TimingRow {
                scenario: sc.label.clone(),
                method,
                reps,
                total,
                rejections,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tabulated_sizes() {
        assert_eq!(hwe_group_sizes(0.25, 100).unwrap(), [56, 37, 7]);
        assert_eq!(hwe_group_sizes(0.12, 300).unwrap(), [234, 61, 5]);
        assert_eq!(hwe_group_sizes(0.12, 100).unwrap(), [78, 20, 2]);
    }

    #[test]
    fn symmetric_maf_splits_evenly() {
        for n in [4, 8, 200, 1000, 1236] {
            assert_eq!(hwe_group_sizes(0.5, n).unwrap(), [n / 4, n / 2, n / 4]);
        }
    }

    #[test]
    fn largest_remainder_sums_to_total() {
        for n in [10, 57, 99, 101, 250] {
            for maf in [0.05, 0.1, 0.2, 0.3, 0.45] {
                let s = hwe_group_sizes(maf, n).unwrap();
                assert_eq!(s.iter().sum::<usize>(), n);
            }
        }
        assert!(hwe_group_sizes(0.0, 10).is_err());
        assert!(hwe_group_sizes(0.6, 10).is_err());
    }

    #[test]
    fn dataset_is_reproducible() {
        let a = generate_dataset(Some(Pattern::Additive), 1.0, &[5, 6, 7], 9).unwrap();
        let b = generate_dataset(Some(Pattern::Additive), 1.0, &[5, 6, 7], 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.sizes(), vec![5, 6, 7]);
    }

    #[test]
    fn zero_reps_time_nothing() {
        let rows = bench_timing(&timing_scenarios(), &[Method::Mmcm], 0, 1e-2, 1).unwrap();
        assert!(rows.is_empty());
    }
}
