//! Scenario manifests: lists of simulation cells with optional reference
//! values, and timing scenarios.

use std::path::Path;

use anyhow::{bail, Context, Result};
use maxcon_core::{Method, Pattern, TimingScenario};
use serde::Deserialize;

/// The reference manifest shipped with the binary.
pub const BUNDLED: &str = include_str!("../data/reference-tables.toml");

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cell {
    pub set: String,
    pub maf: f64,
    pub n: usize,
    pub pattern: String,
    pub delta: f64,
    pub method: Method,
    pub r_p: Option<f64>,
    pub r_tp: Option<f64>,
    /// Rejection rate split by the selected contrast (either sign).
    pub selected: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingCell {
    pub label: String,
    pub pattern: String,
    pub delta: f64,
    pub maf: f64,
    pub n: usize,
    pub method: Method,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub cell: Vec<Cell>,
    #[serde(default)]
    pub timing: Vec<TimingCell>,
}

/// `None` for the overall null.
pub fn parse_pattern(name: &str) -> Result<Option<Pattern>> {
    if name == "null" {
        return Ok(None);
    }
    match Pattern::parse(name) {
        Some(p) => Ok(Some(p)),
        None => bail!("unknown pattern '{name}'"),
    }
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = toml::from_str(text)?;
        for c in &m.cell {
            parse_pattern(&c.pattern)?;
        }
        for t in &m.timing {
            parse_pattern(&t.pattern)?;
        }
        Ok(m)
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED).expect("bundled manifest is valid")
    }

    /// `bundled` or a path.
    pub fn load(spec: &str) -> Result<Self> {
        if spec == "bundled" {
            return Ok(Self::bundled());
        }
        let text = std::fs::read_to_string(Path::new(spec))
            .with_context(|| format!("reading manifest {spec}"))?;
        Self::parse(&text).with_context(|| format!("in {spec}"))
    }

    pub fn filter_sets(mut self, sets: &[String]) -> Self {
        if !sets.is_empty() {
            self.cell.retain(|c| sets.contains(&c.set));
        }
        self
    }

    /// Distinct timing scenarios in first-appearance order.
    pub fn timing_scenarios(&self) -> Result<Vec<TimingScenario>> {
        let mut out: Vec<TimingScenario> = Vec::new();
        for t in &self.timing {
            if out.iter().any(|s| s.label == t.label) {
                continue;
            }
            out.push(TimingScenario {
                label: t.label.clone(),
                pattern: parse_pattern(&t.pattern)?,
                delta: t.delta,
                maf: t.maf,
                n_total: t.n,
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_manifest_is_complete() {
        let m = Manifest::bundled();
        let count = |set: &str| m.cell.iter().filter(|c| c.set == set).count();
        assert_eq!(count("type1"), 24);
        assert_eq!(count("power"), 216);
        assert_eq!(count("false-positive"), 72);
        assert_eq!(m.timing.len(), 10);
        assert_eq!(m.timing_scenarios().unwrap().len(), 5);
        for c in m.cell.iter().filter(|c| c.set == "power" && c.method != Method::Kw) {
            let sel = c.selected.as_ref().unwrap();
            let sum: f64 = sel.iter().sum();
            // printed to three decimals
            assert!((sum - c.r_p.unwrap()).abs() <= 0.0025, "{c:?}");
            assert!(sel.contains(&c.r_tp.unwrap()));
        }
    }

    #[test]
    fn type1_reference_cell() {
        let m = Manifest::bundled();
        let c = m
            .cell
            .iter()
            .find(|c| c.set == "type1" && c.method == Method::Mmcm && c.maf == 0.25 && c.n == 300)
            .unwrap();
        assert_eq!(c.r_p, Some(0.051));
    }

    #[test]
    fn rejects_unknown_fields_and_patterns() {
        assert!(Manifest::parse("[[cell]]\nset='x'\nmaf=0.1\nn=10\npattern='bogus'\ndelta=0.0\nmethod='MCM'\n").is_err());
        assert!(Manifest::parse("[[cell]]\nfoo=1\n").is_err());
        assert_eq!(Manifest::parse("").unwrap(), Manifest::default());
    }
}
