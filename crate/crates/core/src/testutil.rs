use crate::netgrad::{Mlp, ParamVector};
use crate::{Matrix, RngState};

pub fn rand_matrix(rng: &mut RngState, r: usize, c: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.uniform_range(lo, hi)).collect()).unwrap()
}

pub fn rand_params(model: &Mlp, rng: &mut RngState, scale: f64) -> ParamVector {
    let vals = (0..model.param_count()).map(|_| rng.uniform_range(-scale, scale)).collect();
    ParamVector::new(vals, model.shapes()).unwrap()
}
