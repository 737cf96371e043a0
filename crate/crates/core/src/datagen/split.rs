use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{LabeledSet, Targets, UnlabeledSet};
use crate::meta::HoldoutPolicy;
use crate::{Error, Result, RngState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    pub n_labeled: usize,
    pub n_unlabeled: usize,
    pub n_test: usize,
    pub holdout: HoldoutPolicy,
    pub seed: u64,
}

/// Training set `T`, unlabeled set `U`, hold-out set `H` and test set.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: LabeledSet,
    pub unlabeled: UnlabeledSet,
    /// Equal to `train` under the joint policy.
    pub holdout: LabeledSet,
    pub test: LabeledSet,
    pub indices: SplitIndices,
}

/// Row indices of each part in the source set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub holdout: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified labeled indices: `n / classes` per class, the remainder going
/// to the lowest class indices.
fn stratified(labels: &[usize], classes: usize, n: usize, rng: &mut RngState) -> Result<Vec<Vec<usize>>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut picked = Vec::with_capacity(classes);
    for (c, pool) in by_class.iter_mut().enumerate() {
        let want = n / classes + usize::from(c < n % classes);
        if pool.len() < want {
            return Err(Error::Config(format!(
                "class {c} has {} samples, {want} labeled samples requested",
                pool.len()
            )));
        }
        rng.shuffle(pool);
        picked.push(pool[..want].to_vec());
    }
    Ok(picked)
}

/// Splits `set` into disjoint labeled, unlabeled and test parts; the
/// unlabeled part keeps no labels. Under the separate policy each class's
/// labeled samples are split 60/40 into training and hold-out.
pub fn make_splits(set: &LabeledSet, spec: &SplitSpec) -> Result<Splits> {
    let n = set.len();
    let need = spec.n_labeled + spec.n_unlabeled + spec.n_test;
    if need > n {
        return Err(Error::Config(format!("split needs {need} samples but the dataset has {n}")));
    }
    if spec.n_labeled == 0 {
        return Err(Error::invalid("n_labeled", "must be at least 1"));
    }
    let mut rng = RngState::new(spec.seed);
    let groups = match &set.targets {
        Targets::Classes { labels, classes } => stratified(labels, *classes, spec.n_labeled, &mut rng)?,
        Targets::Values(_) => {
            let mut all: Vec<usize> = (0..n).collect();
            rng.shuffle(&mut all);
            vec![all[..spec.n_labeled].to_vec()]
        }
    };
    let mut taken = vec![false; n];
    for &i in groups.iter().flatten() {
        taken[i] = true;
    }
    let mut rest: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
    rng.shuffle(&mut rest);
    let unl = &rest[..spec.n_unlabeled];
    let test = &rest[spec.n_unlabeled..spec.n_unlabeled + spec.n_test];

    let (train_idx, hold_idx): (Vec<usize>, Vec<usize>) = match spec.holdout {
        HoldoutPolicy::Joint => {
            let all: Vec<usize> = groups.concat();
            (all.clone(), all)
        }
        HoldoutPolicy::Separate => {
            let mut t = Vec::new();
            let mut h = Vec::new();
            for g in &groups {
                let k = (g.len() * 3 + 2) / 5;
                t.extend_from_slice(&g[..k]);
                h.extend_from_slice(&g[k..]);
            }
            if t.is_empty() || h.is_empty() {
                return Err(Error::Config(format!(
                    "{} labeled samples are too few for a separate hold-out split",
                    spec.n_labeled
                )));
            }
            (t, h)
        }
    };
    Ok(Splits {
        train: set.select(&train_idx),
        unlabeled: UnlabeledSet { inputs: set.inputs.select_rows(unl) },
        holdout: set.select(&hold_idx),
        test: set.select(test),
        indices: SplitIndices { train: train_idx, unlabeled: unl.to_vec(), holdout: hold_idx, test: test.to_vec() },
    })
}
