//! CSV tables for power grids, simulation cells and timings.

use std::io::Write;

use anyhow::Result;
use maxcon_core::power::{contour_grid, noncentrality, priority_index, PowerAnalysis, PowerMethod};
use maxcon_core::simulate::{bench_timing, hwe_group_sizes, run_scenario, ScenarioConfig};
use maxcon_core::{seed, ContrastMatrix, Method, Pattern, QmcConfig, TimingScenario};

use crate::manifest::{parse_pattern, Manifest};

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn pattern_name(p: Option<Pattern>) -> &'static str {
    p.map_or("null", Pattern::name)
}

fn mean_vector(p: Option<Pattern>, delta: f64) -> Vec<f64> {
    match p {
        Some(p) => p.coefficients().iter().map(|c| delta * c).collect(),
        None => vec![0.0; 3],
    }
}

pub struct PowerGrid {
    pub mafs: Vec<f64>,
    pub ns: Vec<usize>,
    pub patterns: Vec<Option<Pattern>>,
    pub deltas: Vec<f64>,
    pub alpha: f64,
    pub sigma2: f64,
    pub contrasts: ContrastMatrix,
    pub qmc: QmcConfig,
    /// Monte-Carlo draws for the detection probabilities; 0 skips them.
    pub rtp_draws: usize,
    pub seed: u64,
}

pub fn power_header(c: &ContrastMatrix) -> Vec<String> {
    let mut h: Vec<String> = ["maf", "n", "n0", "n1", "n2", "pattern", "delta", "alpha", "sigma2", "u_alpha", "v_alpha"]
        .map(String::from)
        .to_vec();
    h.extend(c.names().iter().map(|n| format!("kinv_v_{n}")));
    h.push("priority".into());
    h.extend(c.names().iter().map(|n| format!("lambda_t_{n}")));
    h.extend(c.names().iter().map(|n| format!("lambda_s_{n}")));
    h.extend(
        ["beta_t", "beta_t_error", "beta_s", "beta_s_error", "rtp_t", "rtp_t_se", "rtp_s", "rtp_s_se"]
            .map(String::from),
    );
    h
}

/// One row per (maf, n, pattern, delta); critical values are shared by
/// rows with the same design.
pub fn write_power(w: impl Write, grid: &PowerGrid) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let c = &grid.contrasts;
    out.write_record(power_header(c))?;
    for &maf in &grid.mafs {
        for &n in &grid.ns {
            if grid.patterns.is_empty() || grid.deltas.is_empty() {
                continue;
            }
            let sizes = hwe_group_sizes(maf, n)?;
            let pa = PowerAnalysis::new(c, &sizes, grid.alpha, &grid.qmc)?;
            let inv: Vec<f64> = sizes.iter().map(|&s| 1.0 / s as f64).collect();
            let cv = pa.critical();
            let priority = priority_index(c, &inv)?;
            for &pattern in &grid.patterns {
                for &delta in &grid.deltas {
                    let mu = mean_vector(pattern, delta);
                    let lt = noncentrality(maxcon_core::mvdist::StatisticKind::T, &mu, grid.sigma2, c, &inv)?;
                    let ls = noncentrality(maxcon_core::mvdist::StatisticKind::S, &mu, grid.sigma2, c, &inv)?;
                    let bt = pa.power_t(&mu, grid.sigma2)?;
                    let bs = pa.power_s(&mu, grid.sigma2)?;
                    let k_true = pattern
                        .filter(|_| grid.rtp_draws > 0 && delta > 0.0)
                        .and_then(|p| c.find_pattern(&p.coefficients()));
                    let (rt, rs) = match k_true {
                        Some(k) => {
                            let key = format!("{maf}:{n}:{}:{delta}", pattern_name(pattern));
                            let s = seed::derive_str(grid.seed, &key);
                            (
                                Some(pa.r_tp(PowerMethod::T, k, &mu, grid.sigma2, grid.rtp_draws, s)?),
                                Some(pa.r_tp(PowerMethod::S, k, &mu, grid.sigma2, grid.rtp_draws, s)?),
                            )
                        }
                        None => (None, None),
                    };
                    let mut rec = vec![
                        maf.to_string(),
                        n.to_string(),
                        sizes[0].to_string(),
                        sizes[1].to_string(),
                        sizes[2].to_string(),
                        pattern_name(pattern).to_string(),
                        delta.to_string(),
                        grid.alpha.to_string(),
                        grid.sigma2.to_string(),
                        cv.u_alpha.to_string(),
                        cv.v_alpha.to_string(),
                    ];
                    rec.extend(cv.thresholds_s.iter().map(f64::to_string));
                    rec.push(c.name(priority).to_string());
                    rec.extend(lt.values.iter().map(f64::to_string));
                    rec.extend(ls.values.iter().map(f64::to_string));
                    rec.extend([
                        bt.beta.to_string(),
                        bt.est_error.to_string(),
                        bs.beta.to_string(),
                        bs.est_error.to_string(),
                        opt(rt.map(|r| r.r_tp)),
                        opt(rt.map(|r| r.se)),
                        opt(rs.map(|r| r.r_tp)),
                        opt(rs.map(|r| r.se)),
                    ]);
                    out.write_record(rec)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub const CONTOUR_HEADER: [&str; 11] = [
    "maf", "n", "pattern", "delta", "x", "y", "density", "reject_t", "reject_s", "true_pattern_t",
    "true_pattern_s",
];

/// Plot data over `(T_i, T_j)` for every grid row whose pattern is a
/// contrast of the matrix.
pub fn write_contours(
    w: impl Write,
    grid: &PowerGrid,
    axes: (usize, usize),
    range: (f64, f64),
    steps: usize,
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CONTOUR_HEADER)?;
    for &maf in &grid.mafs {
        for &n in &grid.ns {
            let sizes = hwe_group_sizes(maf, n)?;
            let pa = PowerAnalysis::new(&grid.contrasts, &sizes, grid.alpha, &grid.qmc)?;
            for &pattern in &grid.patterns {
                let Some(k) = pattern.and_then(|p| grid.contrasts.find_pattern(&p.coefficients())) else {
                    continue;
                };
                for &delta in &grid.deltas {
                    let mu = mean_vector(pattern, delta);
                    for p in contour_grid(&pa, &mu, grid.sigma2, axes, k, range, steps)? {
                        out.write_record([
                            maf.to_string(),
                            n.to_string(),
                            pattern_name(pattern).to_string(),
                            delta.to_string(),
                            p.x.to_string(),
                            p.y.to_string(),
                            p.density.to_string(),
                            (p.reject_t as u8).to_string(),
                            (p.reject_s as u8).to_string(),
                            (p.true_pattern_t as u8).to_string(),
                            (p.true_pattern_s as u8).to_string(),
                        ])?;
                    }
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

/// A simulation cell plus the reference values it is compared with.
#[derive(Debug, Clone)]
pub struct SimJob {
    pub set: String,
    pub config: ScenarioConfig,
    pub reference: Vec<(Method, Option<f64>, Option<f64>)>,
}

/// Seed of a cell, keyed by its settings so that a cell gives the same
/// counts whatever else is run alongside it.
pub fn cell_seed(base: u64, maf: f64, n: usize, pattern: Option<Pattern>, delta: f64) -> u64 {
    seed::derive_str(base, &format!("{maf}:{n}:{}:{delta}", pattern_name(pattern)))
}

/// Groups manifest cells into scenarios, first appearance order.
pub fn jobs_from_manifest(m: &Manifest, template: &ScenarioConfig) -> Result<Vec<SimJob>> {
    let mut jobs: Vec<SimJob> = Vec::new();
    for cell in &m.cell {
        let pattern = parse_pattern(&cell.pattern)?;
        let found = jobs.iter_mut().find(|j| {
            j.config.maf == cell.maf
                && j.config.n_total == cell.n
                && j.config.pattern == pattern
                && j.config.delta == cell.delta
        });
        let job = match found {
            Some(j) => j,
            None => {
                let config = ScenarioConfig {
                    maf: cell.maf,
                    n_total: cell.n,
                    pattern,
                    delta: cell.delta,
                    methods: Vec::new(),
                    seed: cell_seed(template.seed, cell.maf, cell.n, pattern, cell.delta),
                    ..template.clone()
                };
                jobs.push(SimJob {
                    set: cell.set.clone(),
                    config,
                    reference: Vec::new(),
                });
                jobs.last_mut().unwrap()
            }
        };
        if template.methods.contains(&cell.method) && !job.config.methods.contains(&cell.method) {
            job.config.methods.push(cell.method);
            job.reference.push((cell.method, cell.r_p, cell.r_tp));
        }
    }
    jobs.retain(|j| !j.config.methods.is_empty());
    Ok(jobs)
}

pub fn simulate_header(c: &ContrastMatrix) -> Vec<String> {
    let mut h: Vec<String> = [
        "set", "maf", "n", "n0", "n1", "n2", "pattern", "delta", "tail", "alpha", "reps", "seed", "method",
        "n_p", "n_tp", "r_p", "r_tp",
    ]
    .map(String::from)
    .to_vec();
    h.extend(c.names().iter().map(|n| format!("sel_{n}")));
    h.extend(c.names().iter().map(|n| format!("sel_neg_{n}")));
    h.extend(["unconverged", "elapsed_s", "ref_r_p", "ref_r_tp"].map(String::from));
    h
}

/// Runs every job and writes one row per (scenario, method). Elapsed
/// seconds are only filled in with `timing`, keeping the default output
/// reproducible byte for byte.
pub fn write_simulation(w: impl Write, jobs: &[SimJob], timing: bool) -> Result<()> {
    let c = maxcon_core::default_pg_contrasts();
    let m = c.num_contrasts();
    let mut out = csv::Writer::from_writer(w);
    out.write_record(simulate_header(&c))?;
    for job in jobs {
        let cfg = &job.config;
        if cfg.reps == 0 {
            continue;
        }
        let metrics = run_scenario(cfg)?;
        for (mm, (_, ref_p, ref_tp)) in metrics.methods.iter().zip(&job.reference) {
            let mut rec = vec![
                job.set.clone(),
                cfg.maf.to_string(),
                cfg.n_total.to_string(),
                metrics.sizes[0].to_string(),
                metrics.sizes[1].to_string(),
                metrics.sizes[2].to_string(),
                cfg.pattern_name().to_string(),
                cfg.delta.to_string(),
                format!("{:?}", cfg.tail).to_lowercase(),
                cfg.alpha.to_string(),
                cfg.reps.to_string(),
                cfg.seed.to_string(),
                mm.method.to_string(),
                mm.n_p.to_string(),
                opt(mm.n_tp),
                mm.r_p().to_string(),
                opt(mm.r_tp()),
            ];
            let sel = |k: usize| mm.selections.get(k).map(usize::to_string).unwrap_or_default();
            rec.extend((0..m).map(sel));
            rec.extend((m..2 * m).map(sel));
            rec.extend([
                mm.unconverged.to_string(),
                if timing { format!("{:.6}", mm.elapsed.as_secs_f64()) } else { String::new() },
                opt(*ref_p),
                opt(*ref_tp),
            ]);
            out.write_record(rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

pub const BENCH_HEADER: [&str; 12] = [
    "scenario", "maf", "n", "pattern", "delta", "method", "reps", "eps", "total_s", "mean_s", "rejections",
    "ref_s",
];

pub fn write_bench(
    w: impl Write,
    scenarios: &[TimingScenario],
    methods: &[Method],
    reps: usize,
    eps: f64,
    seed: u64,
    reference: &Manifest,
) -> Result<()> {
    let rows = bench_timing(scenarios, methods, reps, eps, seed)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(BENCH_HEADER)?;
    for r in rows {
        let sc = scenarios.iter().find(|s| s.label == r.scenario).unwrap();
        let ref_s = reference
            .timing
            .iter()
            .find(|t| t.label == r.scenario && t.method == r.method)
            .and_then(|t| t.seconds);
        let total = r.total.as_secs_f64();
        out.write_record([
            r.scenario.clone(),
            sc.maf.to_string(),
            sc.n_total.to_string(),
            pattern_name(sc.pattern).to_string(),
            sc.delta.to_string(),
            r.method.to_string(),
            r.reps.to_string(),
            eps.to_string(),
            format!("{total:.6}"),
            format!("{:.6}", total / r.reps as f64),
            r.rejections.to_string(),
            opt(ref_s),
        ])?;
    }
    out.flush()?;
    Ok(())
}
