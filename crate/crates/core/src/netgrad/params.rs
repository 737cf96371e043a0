use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Matrix, Result};

/// Flattened model parameters with per-block `(rows, cols)` shapes.
///
/// Blocks are laid out in model order: for every layer its weight matrix
/// (`out x in`, row-major) followed by its bias (`out x 1`) when present.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector {
    values: Vec<f64>,
    shapes: Vec<(usize, usize)>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, shapes: Vec<(usize, usize)>) -> Result<Self> {
        let total: usize = shapes.iter().map(|(r, c)| r * c).sum();
        if total != values.len() {
            return Err(Error::length("ParamVector::new", total, values.len()));
        }
        Ok(Self { values, shapes })
    }

    pub fn zeros_like(other: &ParamVector) -> Self {
        Self { values: vec![0.0; other.values.len()], shapes: other.shapes.clone() }
    }

    /// Same shapes as `self`, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(values, self.shapes.clone())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn shapes(&self) -> &[(usize, usize)] {
        &self.shapes
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Splits into one matrix per block.
    pub fn unflatten(&self) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(self.shapes.len());
        let mut off = 0;
        for &(r, c) in &self.shapes {
            let n = r * c;
            out.push(Matrix::from_vec(r, c, self.values[off..off + n].to_vec()).expect("shape"));
            off += n;
        }
        out
    }

    /// Inverse of [`ParamVector::unflatten`].
    pub fn flatten(blocks: &[Matrix]) -> Self {
        let mut values = Vec::new();
        let mut shapes = Vec::with_capacity(blocks.len());
        for b in blocks {
            values.extend_from_slice(b.data());
            shapes.push(b.shape());
        }
        Self { values, shapes }
    }

    pub fn dot(&self, other: &[f64]) -> f64 {
        self.values.iter().zip(other).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.dot(&self.values))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_len(&self, op: &'static str, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::length(op, self.len(), n));
        }
        Ok(())
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &ParamVector) -> Result<Self> {
        self.check_len("ParamVector::axpy", other.len())?;
        Ok(Self {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect(),
            shapes: self.shapes.clone(),
        })
    }
}

/// Direction in parameter space for forward-mode products.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent(pub Vec<f64>);

impl Tangent {
    pub fn new(direction: Vec<f64>) -> Self {
        Tangent(direction)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<&ParamVector> for Tangent {
    fn from(p: &ParamVector) -> Self {
        Tangent(p.values().to_vec())
    }
}
