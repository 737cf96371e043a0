use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::oracle::{finite_diff, max_rel_err};
use crate::RngState;

fn rand_matrix(rng: &mut RngState, r: usize, c: usize, lo: f64, hi: f64) -> Matrix {
    Matrix::from_vec(r, c, (0..r * c).map(|_| rng.uniform_range(lo, hi)).collect()).unwrap()
}

fn rand_params(model: &Mlp, rng: &mut RngState) -> ParamVector {
    let vals = (0..model.param_count()).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
    ParamVector::new(vals, model.shapes()).unwrap()
}

fn simplex_rows(rng: &mut RngState, r: usize, k: usize) -> Matrix {
    let mut m = rand_matrix(rng, r, k, 0.05, 1.0);
    for i in 0..r {
        let s: f64 = m.row(i).iter().sum();
        m.row_mut(i).iter_mut().for_each(|v| *v /= s);
    }
    m
}

/// Scalar-loop forward pass for a tanh MLP, written without the library's layout helpers.
fn reference_forward(x: &[f64], p: &[f64], sizes: &[usize]) -> Vec<f64> {
    let mut a = x.to_vec();
    let mut off = 0;
    for li in 0..sizes.len() - 1 {
        let (nin, nout) = (sizes[li], sizes[li + 1]);
        let mut next = vec![0.0; nout];
        for j in 0..nout {
            let mut s = p[off + nin * nout + j];
            for k in 0..nin {
                s += p[off + j * nin + k] * a[k];
            }
            next[j] = if li + 2 < sizes.len() { libm::tanh(s) } else { s };
        }
        off += nin * nout + nout;
        a = next;
    }
    a
}

#[test]
fn zero_weights_give_zero_outputs() {
    let m = Mlp::linear(3, Task::Regression { dim: 2 }, true).unwrap();
    let x = rand_matrix(&mut RngState::new(1), 4, 3, -1.0, 1.0);
    let out = forward(&m, &m.zero_params(), &x).unwrap();
    assert!(out.data().iter().all(|&v| v == 0.0));
}

#[test]
fn one_layer_sigmoid_at_origin_is_half() {
    let m = Mlp::linear(2, Task::Binary, false).unwrap();
    let p = ParamVector::new(vec![1.0, 1.0], m.shapes()).unwrap();
    let x = Matrix::from_rows(&[[0.0, 0.0]]).unwrap();
    assert_eq!(predict(&m, &p, &x).unwrap().data(), &[0.5]);
}

#[test]
fn forward_matches_scalar_reference() {
    let mut rng = RngState::new(11);
    let m = Mlp::new(2, &[16], Activation::Tanh, Task::Classification { classes: 2 }).unwrap();
    let p = rand_params(&m, &mut rng);
    let x = rand_matrix(&mut rng, 7, 2, -2.0, 2.0);
    let out = forward(&m, &p, &x).unwrap();
    for i in 0..7 {
        let r = reference_forward(x.row(i), p.values(), &[2, 16, 2]);
        for j in 0..2 {
            assert!((out.get(i, j) - r[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn forward_rejects_wrong_width() {
    let m = Mlp::linear(3, Task::Binary, true).unwrap();
    assert!(forward(&m, &m.zero_params(), &Matrix::zeros(2, 4)).is_err());
}

#[test]
fn mse_perfect_prediction_is_zero() {
    let mut rng = RngState::new(3);
    let m = Mlp::new(3, &[4], Activation::Tanh, Task::Regression { dim: 2 }).unwrap();
    let p = rand_params(&m, &mut rng);
    let x = rand_matrix(&mut rng, 5, 3, -1.0, 1.0);
    let y = forward(&m, &p, &x).unwrap();
    let lg = loss_and_grads(&m, &p, &x, &y, LossKind::MeanSquaredError).unwrap();
    assert_eq!(lg.loss, 0.0);
    assert!(lg.grad_params.values().iter().all(|&v| v == 0.0));
    assert!(lg.grad_targets.data().iter().all(|&v| v == 0.0));
}

#[test]
fn binary_ce_gradient_is_textbook() {
    let mut rng = RngState::new(4);
    let m = Mlp::linear(3, Task::Binary, false).unwrap();
    let p = rand_params(&m, &mut rng);
    let x = rand_matrix(&mut rng, 6, 3, -1.0, 1.0);
    let y = Matrix::from_vec(6, 1, vec![0.0, 1.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    let lg = loss_and_grads(&m, &p, &x, &y, LossKind::BinaryCrossEntropySigmoid).unwrap();
    let mut expect = [0.0; 3];
    for i in 0..6 {
        let s: f64 = (0..3).map(|k| p.values()[k] * x.get(i, k)).sum();
        let r = 1.0 / (1.0 + (-s).exp()) - y.get(i, 0);
        for k in 0..3 {
            expect[k] += r * x.get(i, k) / 6.0;
        }
    }
    for k in 0..3 {
        assert!((lg.grad_params.values()[k] - expect[k]).abs() < 1e-14);
    }
}

#[test]
fn loss_task_mismatch_is_an_error() {
    let m = Mlp::linear(2, Task::Regression { dim: 1 }, true).unwrap();
    let x = Matrix::zeros(1, 2);
    let y = Matrix::zeros(1, 1);
    assert!(loss_and_grads(&m, &m.zero_params(), &x, &y, LossKind::CrossEntropySoftmax).is_err());
}

#[test]
fn non_finite_loss_is_an_error() {
    let m = Mlp::linear(1, Task::Regression { dim: 1 }, false).unwrap();
    let p = ParamVector::new(vec![1e300], m.shapes()).unwrap();
    let x = Matrix::from_rows(&[[1e300]]).unwrap();
    let y = Matrix::zeros(1, 1);
    assert_eq!(loss_and_grads(&m, &p, &x, &y, LossKind::MeanSquaredError).unwrap_err(), Error::NonFinite("loss"));
}

struct Case {
    model: Mlp,
    loss: LossKind,
}

fn cases() -> Vec<Case> {
    let c2 = Task::Classification { classes: 2 };
    let c3 = Task::Classification { classes: 3 };
    vec![
        Case { model: Mlp::new(2, &[16], Activation::Tanh, c2).unwrap(), loss: LossKind::CrossEntropySoftmax },
        Case { model: Mlp::new(3, &[5, 4], Activation::Sigmoid, c3).unwrap(), loss: LossKind::MeanSquaredError },
        Case { model: Mlp::new(3, &[6], Activation::Relu, c3).unwrap(), loss: LossKind::CrossEntropySoftmax },
        Case {
            model: Mlp::new(2, &[4], Activation::Tanh, Task::Binary).unwrap(),
            loss: LossKind::BinaryCrossEntropySigmoid,
        },
        Case { model: Mlp::new(2, &[4], Activation::Tanh, Task::Binary).unwrap(), loss: LossKind::MeanSquaredError },
        Case {
            model: Mlp::new(3, &[5], Activation::Identity, Task::Regression { dim: 2 }).unwrap(),
            loss: LossKind::MeanSquaredError,
        },
    ]
}

fn make_targets(rng: &mut RngState, m: &Mlp, n: usize) -> Matrix {
    match m.task() {
        Task::Regression { dim } => rand_matrix(rng, n, dim, -1.0, 1.0),
        Task::Binary => rand_matrix(rng, n, 1, 0.0, 1.0),
        Task::Classification { classes } => simplex_rows(rng, n, classes),
    }
}

/// Re-draws parameters until no ReLU pre-activation lies within 1e-3 of its kink.
fn away_from_kinks(m: &Mlp, x: &Matrix, rng: &mut RngState) -> ParamVector {
    loop {
        let p = rand_params(m, rng);
        if m.encoder().iter().all(|l| l.activation != Activation::Relu) {
            return p;
        }
        let cache = forward_cached::<f64>(m, p.values(), x);
        if cache.pres.iter().flatten().all(|v| v.abs() > 1e-3) {
            return p;
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let mut rng = RngState::new(77);
    for case in cases() {
        for _ in 0..3 {
            let x = rand_matrix(&mut rng, 5, case.model.input_dim(), -1.0, 1.0);
            let y = make_targets(&mut rng, &case.model, 5);
            let p = away_from_kinks(&case.model, &x, &mut rng);
            let lg = loss_and_grads(&case.model, &p, &x, &y, case.loss).unwrap();
            let f = |v: &[f64]| {
                let q = p.with_values(v.to_vec()).unwrap();
                loss_and_grads(&case.model, &q, &x, &y, case.loss).unwrap().loss
            };
            let fd = finite_diff(f, p.values(), 1e-5).unwrap();
            let e = max_rel_err(lg.grad_params.values(), &fd);
            assert!(e < 1e-6, "{:?} params rel err {e}", case.loss);

            let g = |v: &[f64]| {
                let t = Matrix::from_vec(y.rows(), y.cols(), v.to_vec()).unwrap();
                loss_and_grads(&case.model, &p, &x, &t, case.loss).unwrap().loss
            };
            let fd = finite_diff(g, y.data(), 1e-5).unwrap();
            let e = max_rel_err(lg.grad_targets.data(), &fd);
            assert!(e < 1e-6, "{:?} targets rel err {e}", case.loss);
        }
    }
}

#[test]
fn hvp_of_identity_quadratic_is_v() {
    // two identity inputs, MSE against zero: L = (w1² + w2²) / 2, so H = I
    let m = Mlp::linear(2, Task::Regression { dim: 1 }, false).unwrap();
    let p = ParamVector::new(vec![0.3, -0.8], m.shapes()).unwrap();
    let x = Matrix::identity(2);
    let y = Matrix::zeros(2, 1);
    let v = Tangent::new(vec![1.5, -2.0]);
    let h = hvp(&m, &p, &x, &y, LossKind::MeanSquaredError, &v).unwrap();
    assert_eq!(h.values(), &[1.5, -2.0]);
    let z = hvp(&m, &p, &x, &y, LossKind::MeanSquaredError, &Tangent::new(vec![0.0, 0.0])).unwrap();
    assert_eq!(z.values(), &[0.0, 0.0]);
}

#[test]
fn hvp_rejects_wrong_tangent_length() {
    let m = Mlp::linear(2, Task::Regression { dim: 1 }, false).unwrap();
    let r = hvp(
        &m,
        &m.zero_params(),
        &Matrix::identity(2),
        &Matrix::zeros(2, 1),
        LossKind::MeanSquaredError,
        &Tangent::new(vec![1.0]),
    );
    assert!(r.is_err());
}

#[test]
fn second_order_matches_gradient_differences() {
    let mut rng = RngState::new(123);
    for case in cases() {
        let x = rand_matrix(&mut rng, 4, case.model.input_dim(), -1.0, 1.0);
        let y = make_targets(&mut rng, &case.model, 4);
        let p = away_from_kinks(&case.model, &x, &mut rng);
        let v: Vec<f64> = (0..p.len()).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let so = second_order(&case.model, &p, &x, &y, case.loss, &Tangent::new(v.clone())).unwrap();
        let eps = 1e-5;
        let plus = p.axpy(eps, &p.with_values(v.clone()).unwrap()).unwrap();
        let minus = p.axpy(-eps, &p.with_values(v.clone()).unwrap()).unwrap();
        let gp = loss_and_grads(&case.model, &plus, &x, &y, case.loss).unwrap();
        let gm = loss_and_grads(&case.model, &minus, &x, &y, case.loss).unwrap();
        let fd_h: Vec<f64> =
            gp.grad_params.values().iter().zip(gm.grad_params.values()).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        let fd_m: Vec<f64> =
            gp.grad_targets.data().iter().zip(gm.grad_targets.data()).map(|(a, b)| (a - b) / (2.0 * eps)).collect();
        assert!(max_rel_err(so.hvp.values(), &fd_h) < 1e-5, "{:?} hvp", case.loss);
        assert!(max_rel_err(so.mixed.data(), &fd_m) < 1e-5, "{:?} mixed", case.loss);
    }
}

#[test]
fn hvp_is_linear_and_symmetric() {
    let mut rng = RngState::new(9);
    for case in cases() {
        let x = rand_matrix(&mut rng, 4, case.model.input_dim(), -1.0, 1.0);
        let y = make_targets(&mut rng, &case.model, 4);
        let p = away_from_kinks(&case.model, &x, &mut rng);
        let n = p.len();
        let u: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let (a, b) = (0.7, -1.3);
        let h = |v: Vec<f64>| hvp(&case.model, &p, &x, &y, case.loss, &Tangent::new(v)).unwrap();
        let hu = h(u.clone());
        let hw = h(w.clone());
        let combo = h(u.iter().zip(&w).map(|(p, q)| a * p + b * q).collect());
        for i in 0..n {
            let lin = a * hu.values()[i] + b * hw.values()[i];
            assert!((combo.values()[i] - lin).abs() < 1e-10);
        }
        let uhw: f64 = u.iter().zip(hw.values()).map(|(p, q)| p * q).sum();
        let whu: f64 = w.iter().zip(hu.values()).map(|(p, q)| p * q).sum();
        assert!((uhw - whu).abs() < 1e-8, "{uhw} vs {whu}");
    }
}

#[test]
fn output_vjp_matches_loss_gradient_path() {
    let mut rng = RngState::new(31);
    let m = Mlp::new(3, &[4], Activation::Tanh, Task::Classification { classes: 3 }).unwrap();
    let p = rand_params(&m, &mut rng);
    let x = rand_matrix(&mut rng, 3, 3, -1.0, 1.0);
    let d = rand_matrix(&mut rng, 3, 3, -1.0, 1.0);
    let g = output_vjp(&m, &p, &x, &d).unwrap();
    let f = |v: &[f64]| {
        let q = p.with_values(v.to_vec()).unwrap();
        let o = forward(&m, &q, &x).unwrap();
        o.data().iter().zip(d.data()).map(|(a, b)| a * b).sum::<f64>()
    };
    let fd = finite_diff(f, p.values(), 1e-5).unwrap();
    assert!(max_rel_err(g.values(), &fd) < 1e-7);
}
