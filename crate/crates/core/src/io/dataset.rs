use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// A column of the input file, counted from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRef {
    Index(usize),
    Last,
}

/// Where ground-truth labels come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum LabelSource {
    #[default]
    None,
    Column(ColumnRef),
    /// One integer per line, in sample order.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadOptions {
    /// Field separator; detected from the first line (tab, else comma) when
    /// unset.
    pub delimiter: Option<u8>,
    /// Whether the first line is a header. Detected when unset: a first line
    /// with any non-numeric field is a header.
    pub header: Option<bool>,
    pub labels: LabelSource,
    /// Target cluster count; defaults to the number of distinct labels.
    pub n_clusters: Option<usize>,
}

/// Reads a delimited text file with one sample per line into a `d × n`
/// data matrix.
pub fn load_dataset(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<DataMatrix> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let label_file = match &opts.labels {
        LabelSource::File(p) => Some(read_label_file(p)?),
        _ => None,
    };
    parse_dataset(&text, path, opts, label_file)
}

fn read_label_file(path: &Path) -> Result<Vec<i64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_label(l.trim(), path, i + 1, 1))
        .collect()
}

fn parse_label(token: &str, path: &Path, line: usize, column: usize) -> Result<i64> {
    if let Ok(v) = token.parse::<i64>() {
        return Ok(v);
    }
    match token.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 => Ok(v as i64),
        _ => Err(Error::Parse {
            path: path.to_path_buf(),
            line,
            column,
            message: format!("label {token:?} is not an integer"),
        }),
    }
}

/// Parses already-read file contents. `path` is only used in messages.
pub fn parse_dataset(
    text: &str,
    path: &Path,
    opts: &LoadOptions,
    label_file: Option<Vec<i64>>,
) -> Result<DataMatrix> {
    let format_err = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .peekable();
    let Some(&(_, first)) = lines.peek() else {
        return Err(format_err("file contains no data".into()));
    };
    let delim = opts
        .delimiter
        .map(char::from)
        .unwrap_or(if first.contains('\t') { '\t' } else { ',' });
    let header = opts.header.unwrap_or_else(|| {
        first
            .split(delim)
            .any(|f| f.trim().parse::<f64>().is_err())
    });
    if header {
        lines.next();
    }

    let mut width = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut column_labels = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                return Err(format_err(format!(
                    "line {lineno} has {} fields, expected {w}",
                    fields.len()
                )))
            }
            _ => {}
        }
        let label_col = match opts.labels {
            LabelSource::Column(ColumnRef::Index(i)) => {
                if i >= fields.len() {
                    return Err(format_err(format!(
                        "label column {i} out of range for {} fields",
                        fields.len()
                    )));
                }
                Some(i)
            }
            LabelSource::Column(ColumnRef::Last) => Some(fields.len() - 1),
            _ => None,
        };
        let mut row = Vec::with_capacity(fields.len());
        for (col, field) in fields.iter().enumerate() {
            if Some(col) == label_col {
                column_labels.push(parse_label(field, path, lineno, col + 1)?);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                column: col + 1,
                message: format!("{field:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno,
                    column: col + 1,
                    message: format!("non-finite value {field:?}"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }

    let n = rows.len();
    if n == 0 {
        return Err(format_err("file contains a header but no samples".into()));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(format_err("no feature columns".into()));
    }
    let x = DMatrix::from_fn(d, n, |i, j| rows[j][i]);

    let raw_labels = match (&opts.labels, label_file) {
        (LabelSource::File(_), Some(l)) => {
            if l.len() != n {
                return Err(format_err(format!("label file has {} entries for {n} samples", l.len())));
            }
            Some(l)
        }
        (LabelSource::Column(_), _) => Some(column_labels),
        _ => None,
    };
    let labels = raw_labels.map(|raw| {
        let alphabet: BTreeSet<i64> = raw.iter().copied().collect();
        let alphabet: Vec<i64> = alphabet.into_iter().collect();
        raw.iter()
            .map(|l| alphabet.binary_search(l).expect("label in its own alphabet"))
            .collect::<Vec<usize>>()
    });

    let c = match (opts.n_clusters, &labels) {
        (Some(c), _) => c,
        (None, Some(l)) => l.iter().copied().collect::<BTreeSet<_>>().len(),
        (None, None) => {
            return Err(Error::param("cluster count must be given when the data has no labels"))
        }
    };
    let data = DataMatrix::new(x, c)?;
    match labels {
        Some(l) => data.with_labels(l),
        None => Ok(data),
    }
}
