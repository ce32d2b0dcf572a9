use std::io::Write;
use std::path::Path;

use serde_json::{Map, Value};
use tempfile::NamedTempFile;

use crate::alm::OuterRecord;
use crate::error::{Error, Result};
use crate::select::FeatureRanking;

use super::experiment::GridRow;

pub const TRACE_HEADER: &str = "k,rho,eps,theta_inf,r1,r2,r3,r4,inner_sweeps,L_value,eta";

/// Writes `contents` to a temporary file next to `path` and renames it into
/// place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

/// One feature index per line, best first, 0-based.
pub fn write_ranking(path: &Path, ranking: &FeatureRanking) -> Result<()> {
    let mut out = String::new();
    for i in &ranking.order {
        out.push_str(&i.to_string());
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_ranking(path: &Path) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: 1,
                message: format!("{l:?} is not a feature index"),
            })
        })
        .collect()
}

/// The columns of one trace CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub rho: f64,
    pub eps: f64,
    pub theta_inf: f64,
    pub residuals: [f64; 4],
    pub inner_sweeps: usize,
    pub lagrangian: f64,
    pub eta: Option<f64>,
}

impl From<&OuterRecord> for TraceRow {
    fn from(r: &OuterRecord) -> Self {
        Self {
            k: r.k,
            rho: r.rho,
            eps: r.eps,
            theta_inf: r.theta_inf,
            residuals: r.residuals,
            inner_sweeps: r.inner_sweeps,
            lagrangian: r.lagrangian,
            eta: r.eta,
        }
    }
}

pub fn write_trace(path: &Path, records: &[OuterRecord]) -> Result<()> {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let eta = r.eta.map(|e| e.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.k,
            r.rho,
            r.eps,
            r.theta_inf,
            r.residuals[0],
            r.residuals[1],
            r.residuals[2],
            r.residuals[3],
            r.inner_sweeps,
            r.lagrangian,
            eta
        ));
    }
    write_atomic(path, out.as_bytes())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(Error::Format {
                path: path.to_path_buf(),
                message: format!("expected header {TRACE_HEADER:?}"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 11 {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message: format!("line {} has {} fields, expected 11", i + 1, fields.len()),
                });
            }
            let err = |col: usize| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                column: col + 1,
                message: format!("cannot parse {:?}", fields[col]),
            };
            let num = |col: usize| fields[col].parse::<f64>().map_err(|_| err(col));
            let int = |col: usize| fields[col].parse::<usize>().map_err(|_| err(col));
            Ok(TraceRow {
                k: int(0)?,
                rho: num(1)?,
                eps: num(2)?,
                theta_inf: num(3)?,
                residuals: [num(4)?, num(5)?, num(6)?, num(7)?],
                inner_sweeps: int(8)?,
                lagrangian: num(9)?,
                eta: if fields[10].is_empty() { None } else { Some(num(10)?) },
            })
        })
        .collect()
}

/// Builds a flat, key-sorted JSON object from `(key, value)` pairs.
pub fn metrics_document<I, K>(entries: I) -> Map<String, Value>
where
    I: IntoIterator<Item = (K, Value)>,
    K: Into<String>,
{
    entries.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

pub fn write_metrics(path: &Path, doc: &Map<String, Value>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(doc)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

/// Reads a `grid.csv` table written by the grid runner.
pub fn read_grid_table(path: &Path) -> Result<Vec<GridRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            GridRow::parse_csv(line).ok_or_else(|| Error::Format {
                path: path.to_path_buf(),
                message: format!("malformed grid row {}", i + 2),
            })
        })
        .collect()
}
