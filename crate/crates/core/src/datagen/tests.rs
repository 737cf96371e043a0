use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::meta::{evaluate_params, HoldoutPolicy};
use crate::netgrad::{self, adam_step, Activation, AdamHyper, AdamState, LossKind, Mlp};
use crate::RngState;

fn labels(set: &LabeledSet) -> &[usize] {
    match &set.targets {
        Targets::Classes { labels, .. } => labels,
        Targets::Values(_) => panic!("expected classes"),
    }
}

#[test]
fn noiseless_moons_lie_on_their_arcs() {
    let s = two_moons(40, 0.0, 3).unwrap();
    for (row, &l) in s.inputs.iter_rows().zip(labels(&s)) {
        let (x, y) = (row[0], row[1]);
        if l == 0 {
            assert!((x * x + y * y - 1.0).abs() < 1e-12 && y >= -1e-12);
        } else {
            let (u, v) = (1.0 - x, 0.5 - y);
            assert!((u * u + v * v - 1.0).abs() < 1e-12 && y <= 0.5 + 1e-12);
        }
    }
    assert_eq!(labels(&s).iter().filter(|&&l| l == 0).count(), 20);
}

#[test]
fn noiseless_circles_have_their_radii() {
    let s = circles(30, 0.0, 1).unwrap();
    for (row, &l) in s.inputs.iter_rows().zip(labels(&s)) {
        let r = libm::sqrt(row[0] * row[0] + row[1] * row[1]);
        assert!((r - if l == 0 { 1.0 } else { 0.5 }).abs() < 1e-12);
    }
}

#[test]
fn generators_are_deterministic_and_validate() {
    assert_eq!(two_moons(100, 0.1, 5).unwrap(), two_moons(100, 0.1, 5).unwrap());
    assert_ne!(two_moons(100, 0.1, 5).unwrap(), two_moons(100, 0.1, 6).unwrap());
    assert_eq!(circles(100, 0.1, 5).unwrap(), circles(100, 0.1, 5).unwrap());
    assert_eq!(synthetic_landmarks(10, 0.1, 5).unwrap(), synthetic_landmarks(10, 0.1, 5).unwrap());
    assert!(two_moons(101, 0.1, 0).is_err());
    assert!(circles(7, 0.1, 0).is_err());
    assert!(two_moons(10, -0.1, 0).is_err());
    assert!(synthetic_landmarks(0, 0.1, 0).is_err());
}

/// Best accuracy of any line, by exhaustive search over directions and offsets.
fn best_linear_accuracy(set: &LabeledSet) -> f64 {
    let y = labels(set);
    let n = y.len() as f64;
    let mut best: f64 = 0.0;
    for a in 0..360 {
        let t = a as f64 * core::f64::consts::PI / 180.0;
        let (c, s) = (libm::cos(t), libm::sin(t));
        let mut proj: Vec<(f64, usize)> = set.inputs.iter_rows().map(|r| (c * r[0] + s * r[1], 0)).collect();
        for (p, l) in proj.iter_mut().zip(y) {
            p.1 = *l;
        }
        proj.sort_by(|a, b| a.0.total_cmp(&b.0));
        // threshold sweep: class 1 above the threshold
        let ones: usize = y.iter().filter(|&&l| l == 1).count();
        let mut correct = ones;
        best = best.max(correct as f64 / n);
        for &(_, l) in &proj {
            if l == 1 {
                correct -= 1;
            } else {
                correct += 1;
            }
            best = best.max(correct as f64 / n);
        }
    }
    best
}

/// Full-batch Adam on a 2-16-16-2 tanh MLP; returns training accuracy.
fn mlp_accuracy(set: &LabeledSet, steps: usize) -> f64 {
    let task = Task::Classification { classes: 2 };
    let m = Mlp::new(2, &[16, 16], Activation::Tanh, task).unwrap();
    let y = set.targets.encode(task).unwrap();
    let mut p = m.init_params(&mut RngState::new(0));
    let mut adam = AdamState::new(p.len());
    let hyper = AdamHyper { lr: 0.02, ..AdamHyper::default() };
    for _ in 0..steps {
        let g = netgrad::loss_and_grads(&m, &p, &set.inputs, &y, LossKind::CrossEntropySoftmax).unwrap();
        (p, adam) = adam_step(&adam, &p, &g.grad_params, &hyper).unwrap();
    }
    1.0 - evaluate_params(&m, &p, &set.inputs, &y, None).unwrap()
}

#[test]
fn moons_need_a_nonlinear_classifier() {
    let s = two_moons(1000, 0.1, 0).unwrap();
    let lin = best_linear_accuracy(&s);
    assert!(lin < 0.9, "{lin}");
    let mlp = mlp_accuracy(&s, 600);
    assert!(mlp > 0.95, "{mlp}");
}

#[test]
fn circles_are_separable_by_an_mlp() {
    let s = circles(600, 0.05, 0).unwrap();
    let mlp = mlp_accuracy(&s, 600);
    assert!(mlp > 0.95, "{mlp}");
}

#[test]
fn noiseless_landmarks_are_recoverable() {
    let s = synthetic_landmarks(50, 0.0, 2).unwrap();
    let Targets::Values(y) = &s.targets else { panic!() };
    assert_eq!(s.inputs.cols(), LANDMARK_INPUT_DIM);
    for (x, t) in s.inputs.iter_rows().zip(y.iter_rows()) {
        for c in 0..10 {
            assert!((x[c] - t[c]).abs() < 1e-8);
        }
    }
}

#[test]
fn template_predictor_error_matches_generator_variance() {
    let s = synthetic_landmarks(20000, 0.1, 4).unwrap();
    let Targets::Values(y) = &s.targets else { panic!() };
    let mut sq = 0.0;
    for row in y.iter_rows() {
        for (v, t) in row.iter().zip(LANDMARK_TEMPLATE) {
            sq += (v - t) * (v - t);
        }
    }
    let mse = sq / (y.rows() * 10) as f64;
    let want = landmark_target_variance();
    assert!((mse / want - 1.0).abs() < 0.05, "{mse} vs {want}");
}

fn spec(n_labeled: usize, holdout: HoldoutPolicy) -> SplitSpec {
    SplitSpec { n_labeled, n_unlabeled: 490, n_test: 500, holdout, seed: 9 }
}

#[test]
fn joint_splits_are_disjoint_and_balanced() {
    let s = two_moons(1000, 0.1, 1).unwrap();
    let sp = make_splits(&s, &spec(9, HoldoutPolicy::Joint)).unwrap();
    assert_eq!(sp.train.len(), 9);
    assert_eq!(sp.unlabeled.inputs.rows(), 490);
    assert_eq!(sp.test.len(), 500);
    assert_eq!(sp.holdout, sp.train);
    let counts = [0, 1].map(|c| labels(&sp.train).iter().filter(|&&l| l == c).count());
    assert!(counts[0].abs_diff(counts[1]) <= 1);
    let mut seen = vec![false; 1000];
    for &i in sp.indices.train.iter().chain(&sp.indices.unlabeled).chain(&sp.indices.test) {
        assert!(!seen[i]);
        seen[i] = true;
    }
}

#[test]
fn separate_split_takes_sixty_percent_per_class() {
    let n = 1500;
    let labels: Vec<usize> = (0..n).map(|i| i % 100).collect();
    let set = LabeledSet { inputs: crate::Matrix::zeros(n, 1), targets: Targets::Classes { labels, classes: 100 } };
    let sp = make_splits(
        &set,
        &SplitSpec { n_labeled: 500, n_unlabeled: 100, n_test: 100, holdout: HoldoutPolicy::Separate, seed: 0 },
    )
    .unwrap();
    let count = |s: &LabeledSet, c: usize| self::labels(s).iter().filter(|&&l| l == c).count();
    for c in 0..100 {
        assert_eq!(count(&sp.train, c), 3);
        assert_eq!(count(&sp.holdout, c), 2);
    }
    let mut all: Vec<usize> = sp.indices.train.iter().chain(&sp.indices.holdout).copied().collect();
    all.sort_unstable();
    all.dedup();
    assert_eq!(all.len(), 500);
}

#[test]
fn infeasible_splits_are_errors() {
    let s = two_moons(100, 0.1, 1).unwrap();
    assert!(make_splits(&s, &spec(10, HoldoutPolicy::Joint)).is_err());
    let small = SplitSpec { n_labeled: 1, n_unlabeled: 0, n_test: 0, holdout: HoldoutPolicy::Separate, seed: 0 };
    assert!(make_splits(&s, &small).is_err());
}

#[test]
fn target_encoding() {
    let t = Targets::Classes { labels: vec![1, 0, 2], classes: 3 };
    let m = t.encode(Task::Classification { classes: 3 }).unwrap();
    assert_eq!(m.data(), &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    assert!(t.encode(Task::Binary).is_err());
    let b = Targets::Classes { labels: vec![1, 0], classes: 2 };
    assert_eq!(b.encode(Task::Binary).unwrap().data(), &[1.0, 0.0]);
}
