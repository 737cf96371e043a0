use crate::{Error, Result};

/// Linear ramp `λ(t) = target · min(1, t / ramp_steps)` for the unlabeled weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSchedule {
    pub target: f64,
    pub ramp_steps: usize,
}

impl LambdaSchedule {
    pub fn new(target: f64, ramp_steps: usize) -> Result<Self> {
        let s = Self { target, ramp_steps };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(target: f64) -> Self {
        Self { target, ramp_steps: 0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.target >= 0.0) || !self.target.is_finite() {
            return Err(Error::invalid("lambda", "target must be finite and non-negative"));
        }
        Ok(())
    }

    pub fn at(&self, t: usize) -> f64 {
        if self.ramp_steps == 0 || t >= self.ramp_steps {
            self.target
        } else {
            self.target * (t as f64 / self.ramp_steps as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ramp_endpoints() {
        let s = LambdaSchedule::new(2.0, 10).unwrap();
        assert_eq!(s.at(0), 0.0);
        assert_eq!(s.at(5), 1.0);
        assert_eq!(s.at(10), 2.0);
        assert_eq!(s.at(1000), 2.0);
        assert_eq!(LambdaSchedule::constant(0.5).at(0), 0.5);
        assert!(LambdaSchedule::new(-1.0, 3).is_err());
    }

    proptest! {
        #[test]
        fn non_decreasing(target in 0.0f64..100.0, ramp in 0usize..500, t in 0usize..1000) {
            let s = LambdaSchedule::new(target, ramp).unwrap();
            prop_assert!(s.at(t + 1) >= s.at(t));
            prop_assert!(s.at(t) <= target);
        }
    }
}
