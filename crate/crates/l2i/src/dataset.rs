//! CSV datasets.
//!
//! The header names the feature columns, then the label columns: a single
//! `label` column holding class indices, or `label_0`, `label_1`, ... for
//! regression targets. A row whose label cells are `?` is unlabeled.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use l2i_core::datagen::{LabeledSet, Targets, UnlabeledSet};
use l2i_core::Matrix;

use crate::{Error, Result};

pub const MISSING: &str = "?";

/// Contents of one CSV file, split by whether the row carries a label.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub features: Vec<String>,
    pub labeled: Option<LabeledSet>,
    pub unlabeled: Option<UnlabeledSet>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum LabelLayout {
    Class,
    Values(usize),
}

fn layout(header: &[String], path: &Path) -> Result<(usize, LabelLayout)> {
    let bad = |msg: String| Error::Csv { path: path.into(), line: 1, msg };
    let first = header
        .iter()
        .position(|h| h == "label" || h.starts_with("label_"))
        .ok_or_else(|| bad("no `label` or `label_<i>` column".into()))?;
    let labels = &header[first..];
    if first == 0 {
        return Err(bad("at least one feature column is required".into()));
    }
    if labels == ["label"] {
        return Ok((first, LabelLayout::Class));
    }
    for (i, h) in labels.iter().enumerate() {
        if *h != format!("label_{i}") {
            return Err(bad(format!("expected `label_{i}` after the features, found `{h}`")));
        }
    }
    Ok((first, LabelLayout::Values(labels.len())))
}

fn number(cell: &str, path: &Path, line: u64, column: &str) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Csv {
        path: path.into(),
        line,
        msg: format!("column `{column}`: `{cell}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Csv { path: path.into(), line, msg: format!("column `{column}`: non-finite value") });
    }
    Ok(v)
}

/// Reads a dataset; LF and CRLF line endings are both accepted.
pub fn load_csv(path: &Path) -> Result<CsvData> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let csv_err = |e: csv::Error| {
        let line = e.position().map_or(0, |p| p.line());
        let msg = match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            _ => e.to_string(),
        };
        Error::Csv { path: path.into(), line, msg }
    };
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    if header.iter().all(String::is_empty) {
        return Err(Error::Csv { path: path.into(), line: 1, msg: "empty file".into() });
    }
    let (n_feat, layout) = layout(&header, path)?;
    let mut lab_x: Vec<Vec<f64>> = Vec::new();
    let mut classes: Vec<usize> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut unl_x: Vec<Vec<f64>> = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line());
        let x = rec
            .iter()
            .take(n_feat)
            .zip(&header)
            .map(|(c, h)| number(c, path, line, h))
            .collect::<Result<Vec<f64>>>()?;
        let cells: Vec<&str> = rec.iter().skip(n_feat).collect();
        let missing = cells.iter().filter(|c| **c == MISSING).count();
        if missing == cells.len() {
            unl_x.push(x);
            continue;
        }
        if missing > 0 {
            return Err(Error::Csv { path: path.into(), line, msg: "some but not all label cells are `?`".into() });
        }
        match layout {
            LabelLayout::Class => {
                let c: usize = cells[0].parse().map_err(|_| Error::Csv {
                    path: path.into(),
                    line,
                    msg: format!("label `{}` is not a class index", cells[0]),
                })?;
                classes.push(c);
            }
            LabelLayout::Values(_) => {
                let v = cells
                    .iter()
                    .zip(&header[n_feat..])
                    .map(|(c, h)| number(c, path, line, h))
                    .collect::<Result<Vec<f64>>>()?;
                values.push(v);
            }
        }
        lab_x.push(x);
    }
    if lab_x.is_empty() && unl_x.is_empty() {
        return Err(Error::Csv { path: path.into(), line: 2, msg: "no data rows".into() });
    }
    let labeled = if lab_x.is_empty() {
        None
    } else {
        let targets = match layout {
            LabelLayout::Class => {
                Targets::Classes { classes: classes.iter().max().map_or(0, |m| m + 1).max(2), labels: classes }
            }
            LabelLayout::Values(_) => Targets::Values(Matrix::from_rows(&values)?),
        };
        Some(LabeledSet { inputs: Matrix::from_rows(&lab_x)?, targets })
    };
    let unlabeled = if unl_x.is_empty() { None } else { Some(UnlabeledSet { inputs: Matrix::from_rows(&unl_x)? }) };
    Ok(CsvData { features: header[..n_feat].to_vec(), labeled, unlabeled })
}

/// Writes labeled rows first, then unlabeled rows. Numbers use the shortest
/// representation that parses back to the same value.
pub fn save_csv(path: &Path, data: &CsvData) -> Result<()> {
    let mut out = String::new();
    let target_cols = match data.labeled.as_ref().map(|s| &s.targets) {
        Some(Targets::Values(m)) => Some(m.cols()),
        _ => None,
    };
    let mut header: Vec<String> = data.features.clone();
    match target_cols {
        Some(k) => header.extend((0..k).map(|i| format!("label_{i}"))),
        None => header.push("label".into()),
    }
    out.push_str(&header.join(","));
    out.push('\n');
    let mut row = |x: &[f64], labels: Vec<String>| {
        if x.len() != data.features.len() {
            return Err(Error::Usage(format!("row has {} features, header has {}", x.len(), data.features.len())));
        }
        let cells: Vec<String> = x.iter().map(f64::to_string).chain(labels).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
        Ok(())
    };
    if let Some(set) = &data.labeled {
        for (r, x) in set.inputs.iter_rows().enumerate() {
            let labels = match &set.targets {
                Targets::Classes { labels, .. } => vec![labels[r].to_string()],
                Targets::Values(m) => m.row(r).iter().map(f64::to_string).collect(),
            };
            row(x, labels)?;
        }
    }
    if let Some(set) = &data.unlabeled {
        for x in set.inputs.iter_rows() {
            row(x, vec![MISSING.to_string(); target_cols.unwrap_or(1)])?;
        }
    }
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
