use alloc::vec::Vec;

use crate::{Error, Result};

/// Central differences `(f(p + h e_i) - f(p - h e_i)) / 2h` for every coordinate.
pub fn finite_diff<F>(mut f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(step > 0.0) {
        return Err(Error::invalid("step", "must be positive"));
    }
    let mut x = point.to_vec();
    let mut out = Vec::with_capacity(point.len());
    for i in 0..point.len() {
        let orig = x[i];
        x[i] = orig + step;
        let fp = f(&x);
        x[i] = orig - step;
        let fm = f(&x);
        x[i] = orig;
        if !fp.is_finite() || !fm.is_finite() {
            return Err(Error::NonFinite("finite_diff evaluation"));
        }
        out.push((fp - fm) / (2.0 * step));
    }
    Ok(out)
}

/// One Richardson refinement of [`finite_diff`]: `(4 D(h/2) - D(h)) / 3`.
pub fn finite_diff_richardson<F>(mut f: F, point: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    let coarse = finite_diff(&mut f, point, step)?;
    let fine = finite_diff(&mut f, point, step / 2.0)?;
    Ok(fine.iter().zip(&coarse).map(|(a, b)| (4.0 * a - b) / 3.0).collect())
}

/// `max_i |a_i - b_i| / max(‖a‖∞, ‖b‖∞)`, and 0 when both vectors are zero.
///
/// Normwise rather than entrywise so that near-zero components do not turn
/// finite-difference round-off into large relative errors.
pub fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "max_rel_err length mismatch");
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let g = finite_diff(|v| v.iter().map(|x| x * x).sum(), &[1.0, 2.0], 1e-5).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-8 && (g[1] - 4.0).abs() < 1e-8);
    }

    #[test]
    fn constant_gives_zero() {
        let g = finite_diff(|_| 3.5, &[1.0, -2.0, 0.0], 1e-5).unwrap();
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn richardson_improves_cubic() {
        let f = |v: &[f64]| v[0] * v[0] * v[0];
        let plain = finite_diff(f, &[1.0], 1e-2).unwrap()[0];
        let rich = finite_diff_richardson(f, &[1.0], 1e-2).unwrap()[0];
        assert!((rich - 3.0).abs() < (plain - 3.0).abs());
    }

    #[test]
    fn non_finite_and_bad_step_rejected() {
        assert!(finite_diff(|v| 1.0 / v[0], &[0.0], 0.0).is_err());
        assert!(finite_diff(|v| if v[0] > 0.0 { f64::NAN } else { 0.0 }, &[0.0], 1e-3).is_err());
    }

    #[test]
    fn rel_err_scale() {
        assert_eq!(max_rel_err(&[0.0, 0.0], &[0.0, 0.0]), 0.0);
        assert!((max_rel_err(&[1.0, 0.0], &[1.1, 0.0]) - 0.1 / 1.1).abs() < 1e-15);
    }
}
