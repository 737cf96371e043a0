//! Subcommand bodies. Machine-readable output goes to `out`; progress goes
//! through `log` to standard error.

use std::io::Write;
use std::path::PathBuf;

use l2i_core::harness::{run_checks, ExperimentSpec, RunRecord, DEFAULT_THRESHOLDS};

use crate::config::Settings;
use crate::output::{ablation_csv, summary_json, write_metrics, write_summary, write_table, Arm};
use crate::run::run_seeds;
use crate::{Error, Result};

/// Flags shared by `train` and `ablate`; each has a config-file key.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub steps: Option<usize>,
    pub threads: Option<usize>,
    /// `section.key=value` overrides, applied in order.
    pub set: Vec<String>,
}

impl RunOptions {
    /// Config file, then `--set` overrides, then the dedicated flags.
    pub fn settings(&self) -> Result<Settings> {
        let mut s = match &self.config {
            Some(p) => Settings::load(p)?,
            None => Settings::default(),
        };
        for a in &self.set {
            s.set(a)?;
        }
        if let Some(seed) = self.seed {
            s.set(&format!("experiment.seeds={seed}"))?;
        }
        if let Some(steps) = self.steps {
            s.set(&format!("experiment.steps={steps}"))?;
        }
        if let Some(t) = self.threads {
            s.set(&format!("experiment.threads={t}"))?;
        }
        if let Some(o) = &self.out {
            s.set(&format!("experiment.out={}", o.display()))?;
        }
        Ok(s)
    }
}

fn emit(out: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(out, "{line}").map_err(|e| Error::io("<stdout>", e))
}

fn check_finite(spec: &ExperimentSpec, records: &[RunRecord]) -> Result<()> {
    match records.iter().find(|r| !r.final_metric.is_finite()) {
        Some(r) => Err(Error::Check(format!("{}: seed {} ended with a non-finite test metric", spec.method(), r.seed))),
        None => Ok(()),
    }
}

/// Trains every seed, writes `metrics_<seed>.csv` and `summary.json` and
/// prints their paths.
pub fn cmd_train(opts: &RunOptions, out: &mut dyn Write) -> Result<()> {
    let exp = opts.settings()?.build()?;
    let spec = &exp.spec;
    log::info!(
        "{}: {} on {}, {} steps, seeds {:?}",
        spec.name,
        spec.method(),
        spec.data.source.name(),
        spec.steps,
        spec.seeds
    );
    let records = run_seeds(spec, exp.threads)?;
    for r in &records {
        emit(out, write_metrics(&exp.out, r)?.display())?;
    }
    let baseline = match (&spec.l2i, exp.compare_baseline) {
        (Some(_), true) => {
            let mut b = spec.clone();
            b.l2i = None;
            let recs = run_seeds(&b, exp.threads)?;
            for r in &recs {
                emit(out, write_metrics(&exp.out.join("baseline"), r)?.display())?;
            }
            Some((b, recs))
        }
        _ => None,
    };
    let text = summary_json(spec, &records, baseline.as_ref().map(|(s, r)| (s, r.as_slice())))?;
    emit(out, write_summary(&exp.out, &text)?.display())?;
    check_finite(spec, &records)
}

/// Runs the four gradient checks and prints one line per check.
pub fn cmd_checkgrad(seed: u64, instances: usize, threshold: Option<f64>, out: &mut dyn Write) -> Result<()> {
    if instances == 0 {
        return Err(Error::Usage("--instances must be at least 1".into()));
    }
    let th = threshold.map_or(DEFAULT_THRESHOLDS, |t| [t; 4]);
    let results = run_checks(seed, instances, Some(th))?;
    let mut failed = Vec::new();
    for r in &results {
        let verdict = if r.passed() { "ok" } else { "FAIL" };
        emit(
            out,
            format!(
                "{} max_err={:.3e} threshold={:.0e} instances={} {verdict}",
                r.kind.name(),
                r.max_err,
                r.threshold,
                r.instances
            ),
        )?;
        if !r.passed() {
            failed.push(r.kind.name());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Check(failed.join(", ")))
    }
}

pub const AXES: [&str; 4] = ["grad_mode", "label_mode", "holdout", "holdout_batch"];

fn axis_key(axis: &str) -> Result<&'static str> {
    Ok(match axis {
        "grad_mode" => "l2i.grad_mode",
        "label_mode" => "l2i.label_mode",
        "holdout" => "data.holdout",
        "holdout_batch" => "train.batch_holdout",
        other => return Err(Error::Usage(format!("unknown axis `{other}` (expected one of {})", AXES.join(", ")))),
    })
}

fn default_values(axis: &str, base: &Settings) -> Vec<String> {
    match axis {
        "grad_mode" => vec!["exact".into(), "approx".into()],
        "label_mode" => vec!["output".into(), "learnable".into()],
        "holdout" => vec!["joint".into(), "separate".into()],
        _ => {
            let current = base.raw("train.batch_holdout").to_string();
            if current == "1" {
                vec![current]
            } else {
                vec!["1".into(), current]
            }
        }
    }
}

/// Trains one arm per value of `axis` and writes `ablation_<axis>.csv`.
pub fn cmd_ablate(opts: &RunOptions, axis: &str, values: Option<&str>, out: &mut dyn Write) -> Result<()> {
    let key = axis_key(axis)?;
    let base = opts.settings()?;
    let first = base.build()?;
    if first.spec.l2i.is_none() {
        return Err(Error::config("l2i.enabled", "ablations compare bilevel variants; set it to true"));
    }
    let values: Vec<String> = match values {
        Some(v) => v.split(',').map(|s| s.trim().to_string()).collect(),
        None => default_values(axis, &base),
    };
    if values.len() < 2 {
        return Err(Error::Usage(format!("axis {axis} needs at least two values")));
    }
    let mut runs = Vec::with_capacity(values.len());
    for v in &values {
        let mut s = base.clone();
        s.set(&format!("{key}={v}"))?;
        let exp = s.build()?;
        log::info!("ablation {axis}={v}");
        let recs = run_seeds(&exp.spec, exp.threads)?;
        check_finite(&exp.spec, &recs)?;
        runs.push(recs);
    }
    let arms: Vec<Arm> = values.iter().zip(&runs).map(|(v, r)| Arm { value: v.clone(), records: r }).collect();
    let table = ablation_csv(axis, &arms)?;
    let path = write_table(&first.out.join(format!("ablation_{axis}.csv")), &table)?;
    emit(out, path.display())
}
