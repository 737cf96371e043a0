//! Experiment configuration: `key = value` lines under `[section]` headers.
//!
//! Every key is checked against a fixed schema; unknown keys and sections
//! are errors. `#` and `;` start comments. Overrides given on the command
//! line as `section.key=value` replace file values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use l2i_core::harness::{DataSource, DataSpec, ExperimentSpec, ModelSpec};
use l2i_core::impute::{ConsistencyLoss, Imputer, ImputerKind, Transform};
use l2i_core::meta::{BatchSizes, GradMode, HoldoutPolicy, LabelMode, LambdaSchedule, MetaConfig, TrainConfig};
use l2i_core::netgrad::AdamHyper;
use l2i_core::{Activation, LossKind, ParamVector};

use crate::dataset::load_csv;
use crate::{Error, Result};

/// Every accepted key with its default; an empty default means "unset".
const SCHEMA: &[(&str, &str)] = &[
    ("experiment.name", "experiment"),
    ("experiment.steps", "2000"),
    ("experiment.seeds", "0"),
    ("experiment.eval_every", "5"),
    ("experiment.out", "out"),
    ("experiment.threads", "1"),
    ("experiment.compare_baseline", "false"),
    ("data.source", "two_moons"),
    ("data.n", "1000"),
    ("data.noise", "0.1"),
    ("data.jitter", "0.05"),
    ("data.path", ""),
    ("data.unlabeled_path", ""),
    ("data.n_labeled", "10"),
    ("data.n_unlabeled", "490"),
    ("data.n_test", "500"),
    ("data.holdout", "joint"),
    ("data.eval_scale", ""),
    ("model.hidden", "16,16"),
    ("model.activation", "tanh"),
    ("model.binary_head", "false"),
    ("train.method", "pseudo_label"),
    ("train.supervised_loss", "auto"),
    ("train.consistency_loss", "mse"),
    ("train.imputer_noise", "0.1"),
    ("train.imputer_jitter", "0"),
    ("train.consistency_noise", "0.1"),
    ("train.consistency_jitter", "0"),
    ("train.compensate_shift", "false"),
    ("train.teacher_alpha", "0.999"),
    ("train.sharpen_k", "2"),
    ("train.sharpen_temperature", "0.5"),
    ("train.lr", "0.01"),
    ("train.beta1", "0.9"),
    ("train.beta2", "0.999"),
    ("train.eps", "1e-8"),
    ("train.lambda", "1"),
    ("train.ramp_steps", "500"),
    ("train.ema_alpha", "0.99"),
    ("train.batch_labeled", "10"),
    ("train.batch_unlabeled", "64"),
    ("train.batch_holdout", "10"),
    ("l2i.enabled", "false"),
    ("l2i.eta_theta", "0.1"),
    ("l2i.eta_z", "10"),
    ("l2i.inner_steps", "1"),
    ("l2i.label_mode", "learnable"),
    ("l2i.grad_mode", "exact"),
    ("l2i.separate_outer_adam", "true"),
    ("l2i.outer_includes_supervised", "false"),
    ("l2i.literal_inner_lambda", "false"),
];

/// Raw key-value settings after parsing and overrides, before validation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
    /// Directory that relative data paths resolve against.
    base: PathBuf,
}

fn known(key: &str) -> bool {
    SCHEMA.iter().any(|(k, _)| *k == key)
}

impl Settings {
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut s = Settings { values: BTreeMap::new(), base: base.to_path_buf() };
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("line {}", i + 1);
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::config(&at, format!("malformed section header `{line}`")))?
                    .trim();
                if !SCHEMA.iter().any(|(k, _)| k.split('.').next() == Some(name)) {
                    return Err(Error::config(name, "unknown section"));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(&at, format!("expected `key = value`, found `{line}`")))?;
            if section.is_empty() {
                return Err(Error::config(k.trim(), "key outside of any section"));
            }
            let key = format!("{section}.{}", k.trim());
            if !known(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if s.values.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(Error::config(key, "duplicate key"));
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Applies `section.key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(assignment, "override must look like section.key=value"))?;
        let key = k.trim();
        if !known(key) {
            return Err(Error::config(key, "unknown key"));
        }
        self.values.insert(key.to_string(), v.trim().to_string());
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        debug_assert!(known(key), "{key} missing from schema");
        self.values
            .get(key)
            .map(String::as_str)
            .or_else(|| SCHEMA.iter().find(|(k, _)| *k == key).map(|(_, d)| *d))
            .unwrap_or("")
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let v = self.raw(key);
        v.parse().map_err(|e: T::Err| Error::config(key, format!("cannot parse `{v}`: {e}")))
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let v = self.raw(key);
        (!v.is_empty()).then(|| self.base.join(v))
    }

    /// Wraps a core validation error with the key it came from.
    fn core<T>(key: &str, r: l2i_core::Result<T>) -> Result<T> {
        r.map_err(|e| Error::config(key, e.to_string()))
    }

    pub fn seeds(&self) -> Result<Vec<u64>> {
        let v = self.raw("experiment.seeds");
        let bad = || Error::config("experiment.seeds", format!("expected `a..b` or a comma list, found `{v}`"));
        let seeds: Vec<u64> = if let Some((a, b)) = v.split_once("..") {
            let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
            (a..b).collect()
        } else {
            v.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<_>>()?
        };
        if seeds.is_empty() {
            return Err(Error::config("experiment.seeds", "at least one seed is required"));
        }
        Ok(seeds)
    }

    fn transform(&self, noise_key: &str, jitter_key: &str) -> Result<Transform> {
        let sigma: f64 = self.get(noise_key)?;
        let shift: f64 = self.get(jitter_key)?;
        let mut parts = Vec::new();
        if shift != 0.0 {
            parts.push(Transform::CoordinateJitter { max_shift: shift });
        }
        if sigma != 0.0 {
            parts.push(Transform::GaussianNoise { sigma });
        }
        let t = match parts.len() {
            0 => Transform::Identity,
            1 => parts.remove(0),
            _ => Transform::Compose(parts),
        };
        Self::core(noise_key, t.validate())?;
        Ok(t)
    }

    fn data(&self) -> Result<(DataSpec, Option<LossKind>)> {
        let source = match self.raw("data.source") {
            "two_moons" => DataSource::TwoMoons { n: self.get("data.n")?, noise: self.get("data.noise")? },
            "circles" => DataSource::Circles { n: self.get("data.n")?, noise: self.get("data.noise")? },
            "landmarks" => DataSource::Landmarks { n: self.get("data.n")?, jitter: self.get("data.jitter")? },
            "csv" => {
                let path = self.path("data.path").ok_or_else(|| Error::config("data.path", "required for csv data"))?;
                let main = load_csv(&path)?;
                let labeled = main.labeled.ok_or_else(|| Error::config("data.path", "file has no labeled rows"))?;
                let mut extra = main.unlabeled.map(|u| u.inputs);
                if let Some(p) = self.path("data.unlabeled_path") {
                    let more = load_csv(&p)?;
                    if more.labeled.is_some() {
                        return Err(Error::config("data.unlabeled_path", "file has labeled rows"));
                    }
                    if let Some(u) = more.unlabeled {
                        extra = Some(match extra {
                            None => u.inputs,
                            Some(a) => {
                                let rows: Vec<&[f64]> = a.iter_rows().chain(u.inputs.iter_rows()).collect();
                                Self::core("data.unlabeled_path", l2i_core::Matrix::from_rows(&rows))?
                            }
                        });
                    }
                }
                DataSource::Given { labeled, unlabeled: extra.map(|inputs| l2i_core::datagen::UnlabeledSet { inputs }) }
            }
            other => {
                return Err(Error::config(
                    "data.source",
                    format!("unknown source `{other}` (expected two_moons, circles, landmarks or csv)"),
                ))
            }
        };
        let default_loss = match &source {
            DataSource::Landmarks { .. } => Some(LossKind::MeanSquaredError),
            DataSource::Given { labeled, .. } => match labeled.targets {
                l2i_core::datagen::Targets::Values(_) => Some(LossKind::MeanSquaredError),
                _ => None,
            },
            _ => None,
        };
        let holdout: HoldoutPolicy = self.get("data.holdout")?;
        let spec = DataSpec {
            source,
            n_labeled: self.get("data.n_labeled")?,
            n_unlabeled: self.get("data.n_unlabeled")?,
            n_test: self.get("data.n_test")?,
            holdout,
            eval_scale: self.opt("data.eval_scale")?,
        };
        Ok((spec, default_loss))
    }

    fn model(&self) -> Result<ModelSpec> {
        let h = self.raw("model.hidden");
        let hidden = if h.is_empty() {
            Vec::new()
        } else {
            h.split(',')
                .map(|s| s.trim().parse::<usize>().map_err(|e| Error::config("model.hidden", format!("`{s}`: {e}"))))
                .collect::<Result<_>>()?
        };
        let activation: Activation = Self::core("model.activation", self.raw("model.activation").parse())?;
        Ok(ModelSpec { hidden, activation, binary_head: self.get("model.binary_head")? })
    }

    fn imputer(&self) -> Result<Option<Imputer>> {
        let kind = match self.raw("train.method") {
            "supervised" => return Ok(None),
            "pseudo_label" => ImputerKind::PseudoLabel,
            "mean_teacher" => ImputerKind::MeanTeacher {
                alpha: self.get("train.teacher_alpha")?,
                teacher: ParamVector::default(),
            },
            "sharpen_avg" => ImputerKind::SharpenAvg {
                k: self.get("train.sharpen_k")?,
                beta: self.get("train.sharpen_temperature")?,
            },
            "argmax_onehot" => ImputerKind::ArgmaxOneHot,
            other => {
                return Err(Error::config(
                    "train.method",
                    format!(
                        "unknown method `{other}` (expected supervised, pseudo_label, mean_teacher, sharpen_avg or argmax_onehot)"
                    ),
                ))
            }
        };
        let mut imp = Imputer::new(kind, self.transform("train.imputer_noise", "train.imputer_jitter")?);
        imp.compensate_shift = self.get("train.compensate_shift")?;
        Ok(Some(imp))
    }

    fn meta(&self, holdout: HoldoutPolicy) -> Result<Option<MetaConfig>> {
        if !self.get::<bool>("l2i.enabled")? {
            return Ok(None);
        }
        let label_mode: LabelMode = Self::core("l2i.label_mode", self.raw("l2i.label_mode").parse())?;
        let grad_mode: GradMode = Self::core("l2i.grad_mode", self.raw("l2i.grad_mode").parse())?;
        Ok(Some(MetaConfig {
            eta_theta: self.get("l2i.eta_theta")?,
            eta_z: self.get("l2i.eta_z")?,
            inner_steps: self.get("l2i.inner_steps")?,
            label_mode,
            grad_mode,
            holdout,
            separate_outer_adam: self.get("l2i.separate_outer_adam")?,
            outer_includes_supervised: self.get("l2i.outer_includes_supervised")?,
            literal_inner_lambda: self.get("l2i.literal_inner_lambda")?,
        }))
    }

    /// Validates every key and assembles the experiment.
    pub fn build(&self) -> Result<Experiment> {
        let (data, default_loss) = self.data()?;
        let model = self.model()?;
        let supervised = match self.raw("train.supervised_loss") {
            "auto" => default_loss.unwrap_or(if model.binary_head {
                LossKind::BinaryCrossEntropySigmoid
            } else {
                LossKind::CrossEntropySoftmax
            }),
            s => Self::core("train.supervised_loss", s.parse())?,
        };
        let d: LossKind = Self::core("train.consistency_loss", self.raw("train.consistency_loss").parse())?;
        let lambda =
            Self::core("train.lambda", LambdaSchedule::new(self.get("train.lambda")?, self.get("train.ramp_steps")?))?;
        let train = TrainConfig {
            supervised,
            imputer: self.imputer()?,
            consistency: ConsistencyLoss::new(
                d,
                self.transform("train.consistency_noise", "train.consistency_jitter")?,
            ),
            adam: AdamHyper {
                lr: self.get("train.lr")?,
                beta1: self.get("train.beta1")?,
                beta2: self.get("train.beta2")?,
                eps: self.get("train.eps")?,
            },
            lambda,
            ema_alpha: self.get("train.ema_alpha")?,
            batch: BatchSizes {
                labeled: self.get("train.batch_labeled")?,
                unlabeled: self.get("train.batch_unlabeled")?,
                holdout: self.get("train.batch_holdout")?,
            },
        };
        let l2i = self.meta(data.holdout)?;
        let spec = ExperimentSpec {
            name: self.raw("experiment.name").to_string(),
            data,
            model,
            train,
            l2i,
            steps: self.get("experiment.steps")?,
            seeds: self.seeds()?,
            eval_every: self.get("experiment.eval_every")?,
        };
        Self::core("experiment", spec.validate())?;
        let threads: usize = self.get("experiment.threads")?;
        if threads == 0 {
            return Err(Error::config("experiment.threads", "must be at least 1"));
        }
        Ok(Experiment {
            spec,
            out: PathBuf::from(self.raw("experiment.out")),
            threads,
            compare_baseline: self.get("experiment.compare_baseline")?,
        })
    }
}

/// A validated experiment plus the run options that are not part of it.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub spec: ExperimentSpec,
    pub out: PathBuf,
    /// Seeds trained concurrently; results do not depend on it.
    pub threads: usize,
    /// Also train the arm without the bilevel update and count wins against it.
    pub compare_baseline: bool,
}

/// The schema as `section.key = default` lines, for help output.
pub fn schema_lines() -> impl Iterator<Item = String> {
    SCHEMA.iter().map(|(k, d)| format!("{k} = {d}"))
}
