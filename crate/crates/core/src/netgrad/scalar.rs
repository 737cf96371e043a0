//! Scalar abstraction shared by the plain and the dual-number backward pass.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// Arithmetic needed by the forward and backward passes.
///
/// Implemented for `f64` and for [`Dual`]; running the reverse pass over
/// duals whose tangent is a parameter direction `v` yields Hessian-vector
/// products in the tangent part of the gradient.
pub trait Scalar:
    Copy
    + core::fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
{
    fn from_f64(v: f64) -> Self;
    /// Primal part.
    fn re(self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn tanh(self) -> Self;
    fn powf(self, p: f64) -> Self;

    #[inline]
    fn zero() -> Self {
        Self::from_f64(0.0)
    }

    #[inline]
    fn one() -> Self {
        Self::from_f64(1.0)
    }

    #[inline]
    fn scale(self, s: f64) -> Self {
        self * Self::from_f64(s)
    }

    /// `1 / (1 + e^{-x})`, evaluated without overflow for either sign.
    #[inline]
    fn sigmoid(self) -> Self {
        if self.re() >= 0.0 {
            Self::one() / (Self::one() + (-self).exp())
        } else {
            let e = self.exp();
            e / (Self::one() + e)
        }
    }

    /// `ln(1 + e^x)`, stable for large `|x|`.
    #[inline]
    fn softplus(self) -> Self {
        if self.re() > 0.0 {
            self + (-self).exp().ln_1p()
        } else {
            self.exp().ln_1p()
        }
    }

    #[inline]
    fn ln_1p(self) -> Self {
        (Self::one() + self).ln()
    }
}

impl Scalar for f64 {
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn exp(self) -> Self {
        libm::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        libm::log(self)
    }
    #[inline]
    fn tanh(self) -> Self {
        libm::tanh(self)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        libm::pow(self, p)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        libm::log1p(self)
    }
}

/// First-order dual number `re + eps·ε`, `ε² = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual {
    pub re: f64,
    pub eps: f64,
}

impl Dual {
    #[inline]
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }
}

impl Add for Dual {
    type Output = Dual;
    #[inline]
    fn add(self, o: Dual) -> Dual {
        Dual::new(self.re + o.re, self.eps + o.eps)
    }
}

impl Sub for Dual {
    type Output = Dual;
    #[inline]
    fn sub(self, o: Dual) -> Dual {
        Dual::new(self.re - o.re, self.eps - o.eps)
    }
}

impl Mul for Dual {
    type Output = Dual;
    #[inline]
    fn mul(self, o: Dual) -> Dual {
        Dual::new(self.re * o.re, self.re * o.eps + self.eps * o.re)
    }
}

impl Div for Dual {
    type Output = Dual;
    #[inline]
    fn div(self, o: Dual) -> Dual {
        let q = self.re / o.re;
        Dual::new(q, (self.eps - q * o.eps) / o.re)
    }
}

impl Neg for Dual {
    type Output = Dual;
    #[inline]
    fn neg(self) -> Dual {
        Dual::new(-self.re, -self.eps)
    }
}

impl AddAssign for Dual {
    #[inline]
    fn add_assign(&mut self, o: Dual) {
        self.re += o.re;
        self.eps += o.eps;
    }
}

impl Scalar for Dual {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::new(v, 0.0)
    }
    #[inline]
    fn re(self) -> f64 {
        self.re
    }
    #[inline]
    fn exp(self) -> Self {
        let e = libm::exp(self.re);
        Dual::new(e, e * self.eps)
    }
    #[inline]
    fn ln(self) -> Self {
        Dual::new(libm::log(self.re), self.eps / self.re)
    }
    #[inline]
    fn tanh(self) -> Self {
        let t = libm::tanh(self.re);
        Dual::new(t, (1.0 - t * t) * self.eps)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        let v = libm::pow(self.re, p);
        Dual::new(v, p * libm::pow(self.re, p - 1.0) * self.eps)
    }
    #[inline]
    fn ln_1p(self) -> Self {
        Dual::new(libm::log1p(self.re), self.eps / (1.0 + self.re))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check<F: Fn(Dual) -> Dual, G: Fn(f64) -> f64>(f: F, g: G, x: f64) {
        let d = f(Dual::new(x, 1.0));
        let h = 1e-6;
        let fd = (g(x + h) - g(x - h)) / (2.0 * h);
        assert!((d.re - g(x)).abs() < 1e-14);
        assert!((d.eps - fd).abs() < 1e-7, "{} vs {}", d.eps, fd);
    }

    #[test]
    fn dual_derivatives_match_central_differences() {
        for &x in &[-2.3, -0.4, 0.3, 1.7] {
            check(|d| d.exp(), libm::exp, x);
            check(|d| d.tanh(), libm::tanh, x);
            check(|d| d.sigmoid(), |v| 1.0 / (1.0 + libm::exp(-v)), x);
            check(|d| d.softplus(), |v| libm::log1p(libm::exp(v)), x);
            check(|d| (d * d + Dual::from_f64(1.0)).ln(), |v| libm::log(v * v + 1.0), x);
            check(|d| (d * d + Dual::from_f64(1.0)).powf(0.7), |v| libm::pow(v * v + 1.0, 0.7), x);
            check(|d| Dual::from_f64(1.0) / (d * d + Dual::from_f64(2.0)), |v| 1.0 / (v * v + 2.0), x);
        }
    }

    #[test]
    fn softplus_is_stable() {
        assert!((800.0f64.softplus() - 800.0).abs() < 1e-12);
        assert!((-800.0f64).softplus() >= 0.0);
        assert!((-800.0f64).sigmoid() >= 0.0);
    }
}
