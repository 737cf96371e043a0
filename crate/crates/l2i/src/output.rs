//! Metrics CSV, summary JSON and comparison tables.

use std::fs;
use std::path::{Path, PathBuf};

use l2i_core::harness::{compare, mean_sd, ComparisonSummary, ExperimentSpec, RunRecord};
use serde_json::{json, Value};

use crate::{Error, Result};

pub const METRICS_HEADER: &str = "step,c_train,c_unlabeled,c_holdout_before,c_holdout_after,test_metric";

fn write(path: &Path, text: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

/// One line per recorded step; missing values are written as `NaN`.
pub fn metrics_csv(record: &RunRecord) -> String {
    let mut s = String::from(METRICS_HEADER);
    s.push('\n');
    for r in &record.rows {
        let cells = [r.c_train, r.c_unlabeled, r.c_holdout_before, r.c_holdout_after, r.test_metric];
        s.push_str(&r.step.to_string());
        for c in cells {
            s.push(',');
            s.push_str(&c.to_string());
        }
        s.push('\n');
    }
    s
}

pub fn write_metrics(dir: &Path, record: &RunRecord) -> Result<PathBuf> {
    write(&dir.join(format!("metrics_{}.csv", record.seed)), &metrics_csv(record))
}

/// `error_rate` for classification, `mse` for regression.
pub fn metric_name(spec: &ExperimentSpec) -> &'static str {
    if spec.train.supervised == l2i_core::LossKind::MeanSquaredError {
        "mse"
    } else {
        "error_rate"
    }
}

fn finite_or_null(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn list(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| finite_or_null(x)).collect())
}

/// Summary of one arm, with wins against `baseline` when it was run.
pub fn summary_json(
    spec: &ExperimentSpec,
    records: &[RunRecord],
    baseline: Option<(&ExperimentSpec, &[RunRecord])>,
) -> Result<String> {
    let finals: Vec<f64> = records.iter().map(|r| r.final_metric).collect();
    let (mean, sd) = mean_sd(&finals);
    let wins = match baseline {
        None => Value::Null,
        Some((bspec, brecs)) => {
            let c = compare(records, brecs)?;
            json!({
                "baseline": bspec.method(),
                "wins": c.wins_a,
                "losses": c.wins_b,
                "ties": c.ties,
                "baseline_finals": list(&c.finals_b),
                "baseline_mean": finite_or_null(c.mean_b),
                "baseline_sd": finite_or_null(c.sd_b),
            })
        }
    };
    let v = json!({
        "experiment": spec.name,
        "method": spec.method(),
        "metric": metric_name(spec),
        "steps": spec.steps,
        "seeds": records.iter().map(|r| r.seed).collect::<Vec<_>>(),
        "finals": list(&finals),
        "mean": finite_or_null(mean),
        "sd": finite_or_null(sd),
        "wins": wins,
    });
    let mut text = serde_json::to_string_pretty(&v).expect("json values serialize");
    text.push('\n');
    Ok(text)
}

pub fn write_summary(dir: &Path, text: &str) -> Result<PathBuf> {
    write(&dir.join("summary.json"), text)
}

/// One ablation arm: its label and its per-seed records.
pub struct Arm<'a> {
    pub value: String,
    pub records: &'a [RunRecord],
}

/// Comparison table; wins, losses and ties count seeds against the first arm.
pub fn ablation_csv(axis: &str, arms: &[Arm]) -> Result<String> {
    let mut s = String::from("axis,value,mean,sd,wins_vs_first,losses_vs_first,ties_vs_first\n");
    let first = arms.first().ok_or_else(|| Error::Usage("no ablation arms".into()))?;
    for arm in arms {
        let c: ComparisonSummary = compare(arm.records, first.records)?;
        s.push_str(&format!("{axis},{},{},{},{},{},{}\n", arm.value, c.mean_a, c.sd_a, c.wins_a, c.wins_b, c.ties));
    }
    Ok(s)
}

pub fn write_table(path: &Path, text: &str) -> Result<PathBuf> {
    write(path, text)
}
