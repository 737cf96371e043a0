use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{LabeledSet, Targets};
use crate::ndcore::sample_gaussian;
use crate::{Error, Matrix, Result, RngState};

fn check_even(n: usize) -> Result<()> {
    if n == 0 || n % 2 == 1 {
        return Err(Error::invalid("n", "must be a positive even number"));
    }
    Ok(())
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid("noise_sigma", "must be finite and non-negative"));
    }
    Ok(())
}

/// Adds noise, then shuffles rows and labels together.
fn finish(points: Vec<[f64; 2]>, labels: Vec<usize>, sigma: f64, rng: &mut RngState) -> Result<LabeledSet> {
    let n = points.len();
    let clean = Matrix::from_rows(&points)?;
    let noisy = clean.add(&sample_gaussian(rng, n, 2, sigma)?)?;
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    Ok(LabeledSet {
        inputs: noisy.select_rows(&order),
        targets: Targets::Classes { labels: order.iter().map(|&i| labels[i]).collect(), classes: 2 },
    })
}

/// Two interleaving half circles: class 0 on `(cos t, sin t)`, class 1 on
/// `(1 - cos t, 1/2 - sin t)`, `t` evenly spaced over `[0, π]`.
pub fn two_moons(n: usize, noise_sigma: f64, seed: u64) -> Result<LabeledSet> {
    check_even(n)?;
    check_sigma(noise_sigma)?;
    let half = n / 2;
    let step = if half > 1 { PI / (half - 1) as f64 } else { 0.0 };
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..half {
        let t = step * i as f64;
        points.push([libm::cos(t), libm::sin(t)]);
        labels.push(0);
    }
    for i in 0..half {
        let t = step * i as f64;
        points.push([1.0 - libm::cos(t), 0.5 - libm::sin(t)]);
        labels.push(1);
    }
    finish(points, labels, noise_sigma, &mut RngState::new(seed))
}

/// Concentric circles: class 0 on radius 1, class 1 on radius 1/2, angles
/// evenly spaced over `[0, 2π)`.
pub fn circles(n: usize, noise_sigma: f64, seed: u64) -> Result<LabeledSet> {
    check_even(n)?;
    check_sigma(noise_sigma)?;
    let half = n / 2;
    let step = 2.0 * PI / half as f64;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for (radius, class) in [(1.0, 0), (0.5, 1)] {
        for i in 0..half {
            let t = step * i as f64;
            points.push([radius * libm::cos(t), radius * libm::sin(t)]);
            labels.push(class);
        }
    }
    finish(points, labels, noise_sigma, &mut RngState::new(seed))
}

/// Five-point face template, interleaved `(x, y)`: two eyes, nose, two mouth corners.
pub const LANDMARK_TEMPLATE: [f64; 10] = [-0.3, 0.3, 0.3, 0.3, 0.0, 0.0, -0.25, -0.3, 0.25, -0.3];
pub const LANDMARK_INPUT_DIM: usize = 16;
pub const LANDMARK_SCALE: (f64, f64) = (0.8, 1.2);
pub const LANDMARK_SHIFT: (f64, f64) = (-1.0, 1.0);

/// Fixed 6×10 block mixing the coordinates into the extra input channels.
fn mixing(i: usize, j: usize) -> f64 {
    libm::sin(1.0 + i as f64 + 0.7 * j as f64) / libm::sqrt(10.0)
}

/// Landmark regression stand-in. Each sample scales the template by
/// `s ~ U(0.8, 1.2)` and translates it by `(dx, dy) ~ U(-1, 1)²`; the 10
/// coordinates are the targets. The 16 inputs are the coordinates followed
/// by 6 fixed linear mixtures of them, plus `N(0, jitter²)` noise.
pub fn synthetic_landmarks(n: usize, jitter: f64, seed: u64) -> Result<LabeledSet> {
    if n == 0 {
        return Err(Error::invalid("n", "must be positive"));
    }
    if !(jitter >= 0.0) || !jitter.is_finite() {
        return Err(Error::invalid("jitter", "must be finite and non-negative"));
    }
    let mut rng = RngState::new(seed);
    let mut targets = Matrix::zeros(n, 10);
    for r in 0..n {
        let s = rng.uniform_range(LANDMARK_SCALE.0, LANDMARK_SCALE.1);
        let dx = rng.uniform_range(LANDMARK_SHIFT.0, LANDMARK_SHIFT.1);
        let dy = rng.uniform_range(LANDMARK_SHIFT.0, LANDMARK_SHIFT.1);
        for (c, v) in targets.row_mut(r).iter_mut().enumerate() {
            *v = s * LANDMARK_TEMPLATE[c] + if c % 2 == 0 { dx } else { dy };
        }
    }
    let noise = sample_gaussian(&mut rng, n, LANDMARK_INPUT_DIM, jitter)?;
    let mut inputs = Matrix::zeros(n, LANDMARK_INPUT_DIM);
    for r in 0..n {
        let y = targets.row(r).to_vec();
        let row = inputs.row_mut(r);
        row[..10].copy_from_slice(&y);
        for i in 0..6 {
            row[10 + i] = (0..10).map(|j| mixing(i, j) * y[j]).sum();
        }
        for (v, e) in row.iter_mut().zip(noise.row(r)) {
            *v += e;
        }
    }
    Ok(LabeledSet { inputs, targets: Targets::Values(targets) })
}

/// Per-coordinate variance of the landmark targets, averaged over the 10
/// coordinates: `Var(s) T_c² + Var(d)`.
pub fn landmark_target_variance() -> f64 {
    let ws = LANDMARK_SCALE.1 - LANDMARK_SCALE.0;
    let wd = LANDMARK_SHIFT.1 - LANDMARK_SHIFT.0;
    let (var_s, var_d) = (ws * ws / 12.0, wd * wd / 12.0);
    LANDMARK_TEMPLATE.iter().map(|t| var_s * t * t + var_d).sum::<f64>() / 10.0
}
