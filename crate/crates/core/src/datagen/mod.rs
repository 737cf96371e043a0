//! Toy datasets and the labeled / unlabeled / hold-out / test splits.

mod generators;
mod split;

use alloc::vec::Vec;

pub use generators::{
    circles, landmark_target_variance, synthetic_landmarks, two_moons, LANDMARK_INPUT_DIM, LANDMARK_TEMPLATE,
};
pub use split::{make_splits, SplitIndices, SplitSpec, Splits};

use crate::netgrad::Task;
use crate::{Error, Matrix, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, classes: usize },
    Values(Matrix),
}

impl Targets {
    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Values(m) => m.rows(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> Targets {
        match self {
            Targets::Classes { labels, classes } => {
                Targets::Classes { labels: idx.iter().map(|&i| labels[i]).collect(), classes: *classes }
            }
            Targets::Values(m) => Targets::Values(m.select_rows(idx)),
        }
    }

    /// Training targets for `task`: a 0/1 column, one-hot rows, or the raw values.
    pub fn encode(&self, task: Task) -> Result<Matrix> {
        match (self, task) {
            (Targets::Classes { labels, classes }, Task::Binary) if *classes <= 2 => {
                Matrix::from_vec(labels.len(), 1, labels.iter().map(|&l| l as f64).collect())
            }
            (Targets::Classes { labels, classes }, Task::Classification { classes: k }) if *classes <= k => {
                let mut m = Matrix::zeros(labels.len(), k);
                for (r, &l) in labels.iter().enumerate() {
                    m.set(r, l, 1.0);
                }
                Ok(m)
            }
            (Targets::Values(m), Task::Regression { dim }) if m.cols() == dim => Ok(m.clone()),
            _ => Err(Error::Config(alloc::format!("targets do not fit a {task} model"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub inputs: Matrix,
    pub targets: Targets,
}

impl LabeledSet {
    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, idx: &[usize]) -> LabeledSet {
        LabeledSet { inputs: self.inputs.select_rows(idx), targets: self.targets.select(idx) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnlabeledSet {
    pub inputs: Matrix,
}

#[cfg(test)]
mod tests;
