//! Genotype/response tables: long and wide CSV readers and writers.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};
use maxcon_core::{GroupedDataset, Scale};
use thiserror::Error;

/// Genotype codes 0, 1, 2 (AA, Aa, aa) index the groups.
pub const GENOTYPES: usize = 3;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: unknown genotype '{token}'")]
    UnknownGenotype { line: u64, token: String },
    #[error("duplicate observation for snp '{snp}', subject '{subject}'")]
    DuplicateObservation { snp: String, subject: String },
    #[error("subject '{subject}' has different values across markers")]
    InconsistentValue { subject: String },
    #[error("subject order differs between markers; wide layout cannot hold it")]
    InconsistentOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    #[value(name = "long-csv")]
    LongCsv,
    #[value(name = "wide-csv")]
    WideCsv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub subject: String,
    pub value: f64,
}

/// One marker with its observations split by genotype code.
#[derive(Debug, Clone, PartialEq)]
pub struct SnpData {
    pub snp_id: String,
    pub groups: [Vec<Observation>; GENOTYPES],
}

impl SnpData {
    pub fn new(snp_id: impl Into<String>) -> Self {
        Self {
            snp_id: snp_id.into(),
            groups: Default::default(),
        }
    }

    pub fn sizes(&self) -> [usize; GENOTYPES] {
        [0, 1, 2].map(|g| self.groups[g].len())
    }

    /// True when some genotype group is empty.
    pub fn is_degenerate(&self) -> bool {
        self.groups.iter().any(Vec::is_empty)
    }

    pub fn dataset(&self, scale: Scale) -> GroupedDataset {
        let groups = self
            .groups
            .iter()
            .map(|g| g.iter().map(|o| o.value).collect())
            .collect();
        GroupedDataset::new(groups, scale)
    }
}

pub fn parse_input(path: &Path, format: InputFormat) -> Result<Vec<SnpData>, InputError> {
    let file = std::fs::File::open(path).map_err(|source| InputError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_reader(file, format)
}

/// Markers come back in order of first appearance.
pub fn parse_reader(reader: impl Read, format: InputFormat) -> Result<Vec<SnpData>, InputError> {
    let mut rdr = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(&e))?,
        None => {
            return Err(InputError::MalformedRow {
                line: 1,
                reason: "missing header".into(),
            })
        }
    };
    let rows = records.map(|r| r.map_err(|e| csv_error(&e)));
    match format {
        InputFormat::LongCsv => parse_long(&header, rows),
        InputFormat::WideCsv => parse_wide(&header, rows),
    }
}

fn csv_error(e: &csv::Error) -> InputError {
    InputError::MalformedRow {
        line: e.position().map_or(0, |p| p.line()),
        reason: e.to_string(),
    }
}

fn line_of(r: &StringRecord) -> u64 {
    r.position().map_or(0, |p| p.line())
}

fn check_width(r: &StringRecord, width: usize) -> Result<(), InputError> {
    if r.len() != width {
        return Err(InputError::MalformedRow {
            line: line_of(r),
            reason: format!("expected {width} fields, found {}", r.len()),
        });
    }
    Ok(())
}

fn parse_value(r: &StringRecord, field: usize) -> Result<f64, InputError> {
    let token = &r[field];
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(InputError::MalformedRow {
            line: line_of(r),
            reason: format!("bad value '{token}'"),
        }),
    }
}

fn parse_genotype(r: &StringRecord, field: usize) -> Result<usize, InputError> {
    match &r[field] {
        "0" => Ok(0),
        "1" => Ok(1),
        "2" => Ok(2),
        token => Err(InputError::UnknownGenotype {
            line: line_of(r),
            token: token.to_string(),
        }),
    }
}

fn nonempty(r: &StringRecord, field: usize, what: &str) -> Result<String, InputError> {
    let s = &r[field];
    if s.is_empty() {
        return Err(InputError::MalformedRow {
            line: line_of(r),
            reason: format!("empty {what}"),
        });
    }
    Ok(s.to_string())
}

const LONG_HEADER: [&str; 4] = ["snp_id", "subject_id", "genotype", "value"];

fn parse_long(
    header: &StringRecord,
    rows: impl Iterator<Item = Result<StringRecord, InputError>>,
) -> Result<Vec<SnpData>, InputError> {
    let col = |name: &str| header.iter().position(|h| h == name);
    let idx: Vec<usize> = LONG_HEADER
        .iter()
        .map(|n| {
            col(n).ok_or_else(|| InputError::MalformedRow {
                line: 1,
                reason: format!("header lacks column '{n}'"),
            })
        })
        .collect::<Result<_, _>>()?;
    let mut snps: Vec<SnpData> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut seen: HashSet<(usize, String)> = HashSet::new();
    for row in rows {
        let r = row?;
        check_width(&r, header.len())?;
        let snp = nonempty(&r, idx[0], "snp_id")?;
        let subject = nonempty(&r, idx[1], "subject_id")?;
        let g = parse_genotype(&r, idx[2])?;
        let value = parse_value(&r, idx[3])?;
        let s = *index.entry(snp.clone()).or_insert_with(|| {
            snps.push(SnpData::new(snp.clone()));
            snps.len() - 1
        });
        if !seen.insert((s, subject.clone())) {
            return Err(InputError::DuplicateObservation { snp, subject });
        }
        snps[s].groups[g].push(Observation { subject, value });
    }
    Ok(snps)
}

const WIDE_PREFIX: &str = "geno_";

fn parse_wide(
    header: &StringRecord,
    rows: impl Iterator<Item = Result<StringRecord, InputError>>,
) -> Result<Vec<SnpData>, InputError> {
    if header.len() < 2 || &header[0] != "subject_id" || &header[1] != "value" {
        return Err(InputError::MalformedRow {
            line: 1,
            reason: "header must start with subject_id,value".into(),
        });
    }
    let mut snps = Vec::new();
    for h in header.iter().skip(2) {
        match h.strip_prefix(WIDE_PREFIX) {
            Some(id) if !id.is_empty() => snps.push(SnpData::new(id)),
            _ => {
                return Err(InputError::MalformedRow {
                    line: 1,
                    reason: format!("column '{h}' is not geno_<snp>"),
                })
            }
        }
    }
    let mut subjects = HashSet::new();
    for row in rows {
        let r = row?;
        check_width(&r, header.len())?;
        let subject = nonempty(&r, 0, "subject_id")?;
        let value = parse_value(&r, 1)?;
        if !subjects.insert(subject.clone()) {
            return Err(InputError::DuplicateObservation {
                snp: snps.first().map_or_else(String::new, |s| s.snp_id.clone()),
                subject,
            });
        }
        for (j, snp) in snps.iter_mut().enumerate() {
            // an empty cell or NA marks a missing genotype call
            if matches!(&r[j + 2], "" | "NA") {
                continue;
            }
            let g = parse_genotype(&r, j + 2)?;
            snp.groups[g].push(Observation {
                subject: subject.clone(),
                value,
            });
        }
    }
    Ok(snps)
}

pub fn write_long(mut w: impl Write, snps: &[SnpData]) -> std::io::Result<()> {
    writeln!(w, "{}", LONG_HEADER.join(","))?;
    for s in snps {
        for (g, obs) in s.groups.iter().enumerate() {
            for o in obs {
                writeln!(w, "{},{},{},{}", s.snp_id, o.subject, g, o.value)?;
            }
        }
    }
    Ok(())
}

/// Writes one row per subject. Subjects are ordered so that every group
/// keeps its order on re-reading; fails if no such order exists or a
/// subject's value differs between markers.
pub fn write_wide(mut w: impl Write, snps: &[SnpData]) -> Result<(), InputError> {
    let mut order: Vec<&str> = Vec::new();
    let mut pos: HashMap<&str, usize> = HashMap::new();
    let mut value: HashMap<&str, f64> = HashMap::new();
    let mut after: Vec<Vec<usize>> = Vec::new();
    let mut indegree: Vec<usize> = Vec::new();
    for s in snps {
        for obs in &s.groups {
            let mut prev: Option<usize> = None;
            for o in obs {
                let id = *pos.entry(o.subject.as_str()).or_insert_with(|| {
                    order.push(o.subject.as_str());
                    after.push(Vec::new());
                    indegree.push(0);
                    order.len() - 1
                });
                match value.insert(o.subject.as_str(), o.value) {
                    Some(v) if v.to_bits() != o.value.to_bits() => {
                        return Err(InputError::InconsistentValue {
                            subject: o.subject.clone(),
                        })
                    }
                    _ => {}
                }
                if let Some(p) = prev {
                    after[p].push(id);
                    indegree[id] += 1;
                }
                prev = Some(id);
            }
        }
    }
    // Kahn's algorithm, preferring first appearance among ready subjects
    let mut ready: std::collections::BTreeSet<usize> =
        (0..order.len()).filter(|&i| indegree[i] == 0).collect();
    let mut sorted = Vec::with_capacity(order.len());
    while let Some(i) = ready.pop_first() {
        sorted.push(i);
        for &j in &after[i] {
            indegree[j] -= 1;
            if indegree[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if sorted.len() != order.len() {
        return Err(InputError::InconsistentOrder);
    }

    let genotype: Vec<HashMap<&str, usize>> = snps
        .iter()
        .map(|s| {
            s.groups
                .iter()
                .enumerate()
                .flat_map(|(g, obs)| obs.iter().map(move |o| (o.subject.as_str(), g)))
                .collect()
        })
        .collect();
    let io = |e| InputError::Io {
        path: PathBuf::from("<output>"),
        source: e,
    };
    let mut head = String::from("subject_id,value");
    for s in snps {
        head.push_str(&format!(",{WIDE_PREFIX}{}", s.snp_id));
    }
    writeln!(w, "{head}").map_err(io)?;
    for i in sorted {
        let subject = order[i];
        let mut line = format!("{subject},{}", value[subject]);
        for g in &genotype {
            line.push(',');
            if let Some(code) = g.get(subject) {
                line.push_str(&code.to_string());
            }
        }
        writeln!(w, "{line}").map_err(io)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn long(text: &str) -> Result<Vec<SnpData>, InputError> {
        parse_reader(text.as_bytes(), InputFormat::LongCsv)
    }

    #[test]
    fn three_subjects_one_marker() {
        let snps = long("snp_id,subject_id,genotype,value\ns1,a,0,1.0\ns1,b,1,2.0\ns1,c,2,3.0\n")
            .unwrap();
        assert_eq!(snps.len(), 1);
        let ds = snps[0].dataset(Scale::Raw);
        assert_eq!(ds.groups(), &[vec![1.0], vec![2.0], vec![3.0]]);
    }

    #[test]
    fn crlf_and_column_order() {
        let snps = long("value,genotype,subject_id,snp_id\r\n2.5,1,a,s1\r\n").unwrap();
        assert_eq!(snps[0].groups[1][0].value, 2.5);
    }

    #[test]
    fn unknown_genotype() {
        let err = long("snp_id,subject_id,genotype,value\ns1,a,3,1.0\n").unwrap_err();
        assert!(matches!(err, InputError::UnknownGenotype { line: 2, .. }), "{err}");
    }

    #[test]
    fn duplicate_observation() {
        let err = long("snp_id,subject_id,genotype,value\nsnp1,subjA,0,1\nsnp1,subjA,1,2\n")
            .unwrap_err();
        assert!(matches!(err, InputError::DuplicateObservation { .. }), "{err}");
    }

    #[test]
    fn malformed_rows() {
        for text in [
            "snp_id,subject_id,genotype,value\ns1,a,0\n",
            "snp_id,subject_id,genotype,value\ns1,a,0,abc\n",
            "snp_id,subject_id,genotype,value\ns1,a,0,1,2\n",
            "snp_id,genotype,value\ns1,0,1\n",
            "",
        ] {
            assert!(matches!(long(text), Err(InputError::MalformedRow { .. })), "{text:?}");
        }
    }

    #[test]
    fn wide_with_missing_calls() {
        let text = "subject_id,value,geno_rs1,geno_rs2\na,1.5,0,2\nb,2.5,1,NA\nc,3.5,2,\n";
        let snps = parse_reader(text.as_bytes(), InputFormat::WideCsv).unwrap();
        assert_eq!(snps[0].sizes(), [1, 1, 1]);
        assert_eq!(snps[1].sizes(), [0, 0, 1]);
        assert!(snps[1].is_degenerate());
    }

    #[test]
    fn wide_rejects_inconsistent_values() {
        let mut a = SnpData::new("x");
        a.groups[0].push(Observation { subject: "s".into(), value: 1.0 });
        let mut b = SnpData::new("y");
        b.groups[1].push(Observation { subject: "s".into(), value: 2.0 });
        assert!(matches!(
            write_wide(Vec::new(), &[a, b]),
            Err(InputError::InconsistentValue { .. })
        ));
    }
}
