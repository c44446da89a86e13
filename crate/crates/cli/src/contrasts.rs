//! Contrast files: one contrast per line, `name,c1,c2,c3`. The name is
//! optional; coefficients may be written as fractions (`-1/3`). Blank
//! lines and lines starting with `#` are skipped.

use std::path::Path;

use anyhow::{bail, Context, Result};
use maxcon_core::{default_pg_contrasts, ContrastMatrix};

fn coefficient(token: &str) -> Option<f64> {
    match token.split_once('/') {
        Some((a, b)) => {
            let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
            (b != 0.0).then(|| a / b)
        }
        None => token.parse().ok(),
    }
    .filter(|x: &f64| x.is_finite())
}

pub fn parse_contrasts(text: &str) -> Result<ContrastMatrix> {
    let mut rows = Vec::new();
    let mut names = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split(',').map(str::trim).collect();
        let (name, coef) = match coefficient(tokens[0]) {
            Some(_) => (format!("c{}", rows.len() + 1), &tokens[..]),
            None => (tokens[0].to_string(), &tokens[1..]),
        };
        let row = coef
            .iter()
            .map(|t| coefficient(t))
            .collect::<Option<Vec<f64>>>()
            .with_context(|| format!("line {}: bad coefficient", i + 1))?;
        rows.push(row);
        names.push(name);
    }
    if rows.is_empty() {
        bail!("no contrasts found");
    }
    if let Some(k) = rows.iter().position(|r| r.len() != rows[0].len()) {
        bail!("contrast {} has {} coefficients, expected {}", k + 1, rows[k].len(), rows[0].len());
    }
    Ok(ContrastMatrix::with_names(rows, names)?)
}

/// `default` or a path to a contrast file.
pub fn load_contrasts(spec: &str) -> Result<ContrastMatrix> {
    if spec == "default" {
        return Ok(default_pg_contrasts());
    }
    let text = std::fs::read_to_string(Path::new(spec))
        .with_context(|| format!("reading contrasts from {spec}"))?;
    parse_contrasts(&text).with_context(|| format!("in {spec}"))
}
