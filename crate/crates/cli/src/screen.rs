//! Per-marker screening and the report schema shared by TSV and JSON.

use std::io::Write;

use anyhow::Result;
use maxcon_core::{
    kruskal_wallis_test, log_transform, max_contrast_test, modified_max_contrast_test,
    permuted_modified_max_contrast_test, seed, ContrastMatrix, Error, GroupedDataset, Method,
    PermutationConfig, QmcConfig, Scale, Tail, TestResult,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::input::SnpData;

pub const FLAG_DEGENERATE: &str = "monomorphic/degenerate";
pub const FLAG_BUDGET: &str = "budget-exhausted";

#[derive(Debug, Clone)]
pub struct ScreenOptions {
    pub methods: Vec<Method>,
    pub contrasts: ContrastMatrix,
    pub alpha: f64,
    pub tail: Tail,
    pub qmc: QmcConfig,
    pub perm: PermutationConfig,
    pub seed: u64,
    pub log_transform: bool,
}

/// One row per (marker, method).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScreenRow {
    pub snp_id: String,
    pub method: Method,
    pub statistic: Option<f64>,
    pub p_value: Option<f64>,
    pub p_error: Option<f64>,
    pub reject: Option<bool>,
    pub selected: Option<String>,
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    pub resamples: Option<usize>,
    /// `;`-separated, empty when clean.
    pub flags: String,
}

pub const REPORT_HEADER: [&str; 12] = [
    "snp_id", "method", "statistic", "p_value", "p_error", "reject", "selected", "n0", "n1", "n2",
    "resamples", "flags",
];

fn error_flag(e: &Error) -> &'static str {
    match e {
        Error::ZeroVariance => "zero-variance",
        Error::DegenerateVariance => "degenerate-variance",
        Error::AllTied => "all-tied",
        Error::NonPositiveValue { .. } => "nonpositive-value",
        Error::EmptyGroup(_) | Error::TooFewGroups(_) => FLAG_DEGENERATE,
        Error::BudgetExhausted { .. } => FLAG_BUDGET,
        _ => "error",
    }
}

fn run_one(ds: &GroupedDataset, method: Method, opts: &ScreenOptions, snp_seed: u64) -> Result<TestResult, Error> {
    let c = &opts.contrasts;
    match method {
        Method::Mcm => max_contrast_test(ds, c, opts.tail, &opts.qmc.with_seed(seed::derive(snp_seed, 1))),
        Method::Mmcm => {
            modified_max_contrast_test(ds, c, opts.tail, &opts.qmc.with_seed(seed::derive(snp_seed, 1)))
        }
        Method::Pmmcm => {
            let perm = PermutationConfig {
                seed: seed::derive(snp_seed, 2),
                ..opts.perm
            };
            permuted_modified_max_contrast_test(ds, c, opts.tail, &perm)
        }
        Method::Kw => kruskal_wallis_test(ds),
    }
}

fn screen_snp(snp: &SnpData, opts: &ScreenOptions) -> Vec<ScreenRow> {
    let [n0, n1, n2] = snp.sizes();
    let row = |method, flags: Vec<&str>| ScreenRow {
        snp_id: snp.snp_id.clone(),
        method,
        statistic: None,
        p_value: None,
        p_error: None,
        reject: None,
        selected: None,
        n0,
        n1,
        n2,
        resamples: None,
        flags: flags.join(";"),
    };
    let raw = snp.dataset(if opts.log_transform { Scale::Raw } else { Scale::Log });
    let ds = match raw.scale() {
        Scale::Raw => log_transform(&raw),
        Scale::Log => Ok(raw),
    };
    let ds = match ds {
        Ok(ds) => ds,
        Err(e) => return opts.methods.iter().map(|&m| row(m, vec![error_flag(&e)])).collect(),
    };
    let degenerate = snp.is_degenerate();
    let snp_seed = seed::derive_str(opts.seed, &snp.snp_id);
    opts.methods
        .iter()
        .map(|&method| {
            let mut flags = Vec::new();
            if degenerate {
                flags.push(FLAG_DEGENERATE);
                // contrasts need every group; the omnibus test needs two
                let nonempty = snp.sizes().iter().filter(|&&n| n > 0).count();
                if method.selects_pattern() || nonempty < 2 {
                    return row(method, flags);
                }
            }
            let data = if degenerate { ds.without_empty_groups() } else { ds.clone() };
            match run_one(&data, method, opts, snp_seed) {
                Ok(r) => {
                    if !r.converged {
                        flags.push(FLAG_BUDGET);
                    }
                    ScreenRow {
                        statistic: Some(r.statistic.max_value),
                        p_value: Some(r.p_value),
                        p_error: Some(r.p_error),
                        reject: Some(r.rejects(opts.alpha)),
                        selected: r.selected.map(|s| s.name),
                        resamples: r.resamples,
                        ..row(method, flags)
                    }
                }
                Err(e) => {
                    flags.push(error_flag(&e));
                    row(method, flags)
                }
            }
        })
        .collect()
}

/// Tests every marker. Rows are grouped by method in the configured order
/// and sorted by ascending p-value within each method; rows without a
/// p-value go last, ties keep input order.
pub fn screen(snps: &[SnpData], opts: &ScreenOptions) -> Vec<ScreenRow> {
    let per_snp: Vec<Vec<ScreenRow>> = snps.par_iter().map(|s| screen_snp(s, opts)).collect();
    let mut rows = Vec::with_capacity(per_snp.len() * opts.methods.len());
    for (j, _) in opts.methods.iter().enumerate() {
        let mut block: Vec<ScreenRow> = per_snp.iter().map(|r| r[j].clone()).collect();
        block.sort_by(|a, b| match (a.p_value, b.p_value) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        rows.extend(block);
    }
    rows
}

pub fn budget_exhausted(rows: &[ScreenRow]) -> bool {
    rows.iter().any(|r| r.flags.split(';').any(|f| f == FLAG_BUDGET))
}

pub fn write_tsv(w: impl Write, rows: &[ScreenRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .from_writer(w);
    out.write_record(REPORT_HEADER)?;
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_json(mut w: impl Write, rows: &[ScreenRow]) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, rows)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::input::Observation;
    use maxcon_core::default_pg_contrasts;

    fn opts(methods: Vec<Method>) -> ScreenOptions {
        ScreenOptions {
            methods,
            contrasts: default_pg_contrasts(),
            alpha: 0.05,
            tail: Tail::One,
            qmc: QmcConfig::default(),
            perm: PermutationConfig::default(),
            seed: 1,
            log_transform: true,
        }
    }

    fn snp(id: &str, groups: [&[f64]; 3]) -> SnpData {
        let mut s = SnpData::new(id);
        let mut k = 0;
        for (g, vals) in groups.iter().enumerate() {
            for &value in *vals {
                s.groups[g].push(Observation { subject: format!("s{k}"), value });
                k += 1;
            }
        }
        s
    }

    #[test]
    fn all_methods_give_four_rows() {
        let s = snp("rs1", [&[1.0, 1.3, 0.9], &[1.8, 2.1], &[3.0, 2.7]]);
        let rows = screen(&[s], &opts(Method::ALL.to_vec()));
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.p_value.is_some() && r.flags.is_empty()));
        assert!(rows[3].selected.is_none());
    }

    #[test]
    fn degenerate_marker_is_flagged_not_fatal() {
        let bad = snp("rs0", [&[1.0, 2.0], &[], &[3.0, 4.0]]);
        let good = snp("rs1", [&[1.0, 1.3, 0.9], &[1.8, 2.1], &[3.0, 2.7]]);
        let rows = screen(&[bad, good], &opts(vec![Method::Mmcm, Method::Kw]));
        assert_eq!(rows[0].snp_id, "rs1");
        assert_eq!(rows[1].snp_id, "rs0");
        assert_eq!(rows[1].flags, FLAG_DEGENERATE);
        assert!(rows[1].p_value.is_none());
        // the omnibus test still runs on the two observed genotypes
        let kw = rows.iter().find(|r| r.method == Method::Kw && r.snp_id == "rs0").unwrap();
        assert!(kw.p_value.is_some());
    }

    #[test]
    fn nonpositive_raw_values_are_flagged() {
        let s = snp("rs1", [&[0.0, 1.0], &[1.0, 2.0], &[3.0, 2.0]]);
        let rows = screen(&[s], &opts(vec![Method::Mcm]));
        assert_eq!(rows[0].flags, "nonpositive-value");
    }

    #[test]
    fn tiny_budget_is_reported() {
        let s = snp("rs1", [&[1.0, 1.3, 0.9, 1.1], &[1.2, 1.1, 1.0], &[1.3, 1.0]]);
        let mut o = opts(vec![Method::Pmmcm]);
        o.perm.n_resamp_min = 10;
        o.perm.n_resamp_max = 20;
        let rows = screen(&[s], &o);
        assert!(budget_exhausted(&rows));
    }
}
