use alloc::vec;
use alloc::vec::Vec;

use crate::ndcore::sample_gaussian;
use crate::{Error, Matrix, Result, RngState};

/// Random input perturbation `T_η`.
#[derive(Debug, Clone, PartialEq)]
pub enum Transform {
    Identity,
    /// Adds i.i.d. `N(0, sigma²)` to every coordinate.
    GaussianNoise {
        sigma: f64,
    },
    /// Translates each row by a shift `(dx, dy) ~ U(-max_shift, max_shift)²`
    /// applied to even and odd coordinates respectively, reading the row as
    /// interleaved `(x, y)` pairs.
    CoordinateJitter {
        max_shift: f64,
    },
    Compose(Vec<Transform>),
}

/// Transformed matrix plus the per-row translation that was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub output: Matrix,
    pub shifts: Vec<(f64, f64)>,
}

impl Transform {
    pub fn validate(&self) -> Result<()> {
        match self {
            Transform::Identity => Ok(()),
            Transform::GaussianNoise { sigma } if *sigma >= 0.0 && sigma.is_finite() => Ok(()),
            Transform::GaussianNoise { .. } => Err(Error::invalid("sigma", "must be finite and non-negative")),
            Transform::CoordinateJitter { max_shift } if *max_shift >= 0.0 && max_shift.is_finite() => Ok(()),
            Transform::CoordinateJitter { .. } => Err(Error::invalid("max_shift", "must be finite and non-negative")),
            Transform::Compose(ts) => ts.iter().try_for_each(Transform::validate),
        }
    }

    pub fn apply(&self, x: &Matrix, rng: &mut RngState) -> Result<Applied> {
        let mut applied = Applied { output: x.clone(), shifts: vec![(0.0, 0.0); x.rows()] };
        self.apply_into(&mut applied, rng)?;
        Ok(applied)
    }

    fn apply_into(&self, a: &mut Applied, rng: &mut RngState) -> Result<()> {
        match self {
            Transform::Identity => {}
            Transform::GaussianNoise { sigma } => {
                let noise = sample_gaussian(rng, a.output.rows(), a.output.cols(), *sigma)?;
                a.output = a.output.add(&noise)?;
            }
            Transform::CoordinateJitter { max_shift } => {
                self.validate()?;
                for r in 0..a.output.rows() {
                    let dx = rng.uniform_range(-max_shift, *max_shift);
                    let dy = rng.uniform_range(-max_shift, *max_shift);
                    for (c, v) in a.output.row_mut(r).iter_mut().enumerate() {
                        *v += if c % 2 == 0 { dx } else { dy };
                    }
                    a.shifts[r].0 += dx;
                    a.shifts[r].1 += dy;
                }
            }
            Transform::Compose(ts) => {
                for t in ts {
                    t.apply_into(a, rng)?;
                }
            }
        }
        Ok(())
    }
}
