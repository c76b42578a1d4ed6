use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::simulate::PointPattern;

use super::HarnessError;

/// Writes patterns as `rep,x1,..,xD`, one point per row.
pub fn write_patterns<W: Write>(out: W, patterns: &[PointPattern]) -> Result<(), HarnessError> {
    let dim = patterns.first().map_or(1, |p| p.dim());
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header = vec!["rep".to_string()];
    header.extend((1..=dim).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(dim + 1);
    for (rep, p) in patterns.iter().enumerate() {
        for x in p.iter() {
            row.clear();
            row.push(rep.to_string());
            row.extend(x.iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a pattern CSV. Processes are numbered `0..=max(rep)`; `n` raises
/// the count to include trailing empty processes.
pub fn read_patterns<R: Read>(input: R, n: Option<usize>) -> Result<Vec<PointPattern>, HarnessError> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.get(0) != Some("rep") || header.len() < 2 {
        return Err(HarnessError::Data(
            "pattern CSV must start with a `rep` column followed by coordinates".into(),
        ));
    }
    let dim = header.len() - 1;
    let mut by_rep: Vec<Vec<f64>> = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| HarnessError::Data(format!("row {}: {what}", line + 2));
        let rep: usize = rec[0].trim().parse().map_err(|_| bad("bad rep id"))?;
        if rep >= by_rep.len() {
            by_rep.resize(rep + 1, Vec::new());
        }
        for k in 1..=dim {
            let v: f64 = rec[k].trim().parse().map_err(|_| bad("bad coordinate"))?;
            if !(0.0..=1.0).contains(&v) {
                return Err(bad("coordinate outside [0, 1]"));
            }
            by_rep[rep].push(v);
        }
    }
    if let Some(n) = n {
        if n < by_rep.len() {
            return Err(HarnessError::Data(format!(
                "file has rep ids up to {}, more than n = {n}",
                by_rep.len() - 1
            )));
        }
        by_rep.resize(n, Vec::new());
    }
    if by_rep.is_empty() {
        return Err(HarnessError::Data("pattern file has no points".into()));
    }
    by_rep
        .into_iter()
        .map(|c| PointPattern::from_flat(dim, c).map_err(|e| HarnessError::Data(e.to_string())))
        .collect()
}

/// Affine map from data units to `[0, 1]^D`: `x' = (x - offset) / scale`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub columns: Vec<String>,
    pub offsets: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Normalization {
    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.offsets.iter().zip(&self.scales))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }

    pub fn denormalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(self.offsets.iter().zip(&self.scales))
            .map(|(v, (o, s))| v * s + o)
            .collect()
    }

    /// Factor converting an intensity on the unit cube to data units.
    pub fn intensity_factor(&self) -> f64 {
        1.0 / self.scales.iter().product::<f64>()
    }
}

/// Result of [`ingest_csv`].
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub patterns: Vec<PointPattern>,
    pub normalization: Normalization,
    /// Rows dropped for missing or non-numeric values.
    pub dropped: usize,
}

fn is_missing(s: &str) -> bool {
    let t = s.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// Loads point data from a CSV with a header row.
///
/// `columns` selects the coordinate columns by name; when empty, every
/// column whose present values all parse as numbers is used. An optional
/// `group` column splits rows into separate processes (in order of first
/// appearance). Rows with a missing value in a used column are dropped.
/// Coordinates are min-max scaled to `[0, 1]`.
pub fn ingest_csv(path: &Path, columns: &[String], group: Option<&str>) -> Result<Ingested, HarnessError> {
    let file = std::fs::File::open(path)
        .map_err(|e| HarnessError::Data(format!("cannot read {}: {e}", path.display())))?;
    ingest_reader(file, columns, group)
}

pub fn ingest_reader<R: Read>(input: R, columns: &[String], group: Option<&str>) -> Result<Ingested, HarnessError> {
    let mut r = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let rows: Vec<csv::StringRecord> = r.records().collect::<Result<_, _>>()?;
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::Data(format!("no column named `{name}`")))
    };
    let group_idx = group.map(find).transpose()?;
    let coord_idx: Vec<usize> = if columns.is_empty() {
        (0..header.len())
            .filter(|&c| Some(c) != group_idx)
            .filter(|&c| {
                let mut any = false;
                let all = rows.iter().all(|row| match row.get(c) {
                    Some(v) if !is_missing(v) => {
                        any = true;
                        v.trim().parse::<f64>().is_ok()
                    }
                    _ => true,
                });
                all && any
            })
            .collect()
    } else {
        columns.iter().map(|c| find(c)).collect::<Result<_, _>>()?
    };
    if coord_idx.is_empty() {
        return Err(HarnessError::Data("no numeric coordinate columns".into()));
    }
    let dim = coord_idx.len();
    let mut kept: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut groups: HashMap<String, usize> = HashMap::new();
    let mut dropped = 0;
    for row in &rows {
        let parsed: Option<Vec<f64>> = coord_idx
            .iter()
            .map(|&c| {
                row.get(c)
                    .filter(|v| !is_missing(v))
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .filter(|v| v.is_finite())
            })
            .collect();
        let label = match group_idx {
            Some(g) => row.get(g).filter(|v| !is_missing(v)).map(|v| v.trim().to_string()),
            None => Some(String::new()),
        };
        match (parsed, label) {
            (Some(x), Some(label)) => {
                let next = groups.len();
                let id = *groups.entry(label).or_insert(next);
                kept.push((id, x));
            }
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} rows with missing values");
    }
    if kept.is_empty() {
        return Err(HarnessError::Data("no complete rows".into()));
    }
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for (_, x) in &kept {
        for k in 0..dim {
            lo[k] = lo[k].min(x[k]);
            hi[k] = hi[k].max(x[k]);
        }
    }
    let scales: Vec<f64> = lo
        .iter()
        .zip(&hi)
        .map(|(l, h)| if h > l { h - l } else { 1.0 })
        .collect();
    let normalization = Normalization {
        columns: coord_idx.iter().map(|&c| header[c].clone()).collect(),
        offsets: lo,
        scales,
    };
    let mut flat = vec![Vec::new(); groups.len()];
    for (id, x) in &kept {
        // clamp guards against the last ulp of rounding in (x - lo) / range
        flat[*id].extend(normalization.normalize(x).into_iter().map(|v| v.clamp(0.0, 1.0)));
    }
    let patterns = flat
        .into_iter()
        .map(|c| PointPattern::from_flat(dim, c).map_err(|e| HarnessError::Data(e.to_string())))
        .collect::<Result<_, _>>()?;
    Ok(Ingested {
        patterns,
        normalization,
        dropped,
    })
}

/// Long-format grid dump `x1..xD,estimate[,truth]` for external plotting.
pub fn write_grid_dump<W: Write>(
    out: W,
    points: &[Vec<f64>],
    estimate: &[f64],
    truth: Option<&[f64]>,
) -> Result<(), HarnessError> {
    let dim = points.first().map_or(0, Vec::len);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let mut header: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    header.push("estimate".into());
    if truth.is_some() {
        header.push("truth".into());
    }
    w.write_record(&header)?;
    for (i, x) in points.iter().enumerate() {
        let mut row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        row.push(estimate[i].to_string());
        if let Some(t) = truth {
            row.push(t[i].to_string());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
