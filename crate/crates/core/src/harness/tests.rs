use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::impute::{ConsistencyLoss, Imputer, ImputerKind, Transform};
use crate::meta::{BatchSizes, LambdaSchedule};
use crate::netgrad::{AdamHyper, LossKind};

fn spec(imputer: Option<ImputerKind>, l2i: Option<MetaConfig>, steps: usize) -> ExperimentSpec {
    ExperimentSpec {
        name: String::from("t"),
        data: DataSpec {
            source: DataSource::TwoMoons { n: 200, noise: 0.1 },
            n_labeled: 10,
            n_unlabeled: 90,
            n_test: 100,
            holdout: HoldoutPolicy::Joint,
            eval_scale: None,
        },
        model: ModelSpec { hidden: vec![8], activation: Activation::Tanh, binary_head: false },
        train: TrainConfig {
            supervised: LossKind::CrossEntropySoftmax,
            imputer: imputer.map(|k| Imputer::new(k, Transform::GaussianNoise { sigma: 0.1 })),
            consistency: ConsistencyLoss::new(LossKind::MeanSquaredError, Transform::GaussianNoise { sigma: 0.1 }),
            adam: AdamHyper { lr: 0.01, ..AdamHyper::default() },
            lambda: LambdaSchedule::new(1.0, 5).unwrap(),
            ema_alpha: 0.9,
            batch: BatchSizes { labeled: 8, unlabeled: 16, holdout: 8 },
        },
        l2i,
        steps,
        seeds: vec![1, 2],
        eval_every: 5,
    }
}

#[test]
fn zero_steps_give_only_the_initial_evaluation() {
    let recs = run_experiment(&spec(Some(ImputerKind::PseudoLabel), None, 0)).unwrap();
    assert_eq!(recs.len(), 2);
    for r in &recs {
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.final_metric, r.rows[0].test_metric);
    }
}

#[test]
fn zero_weight_matches_supervised_run() {
    let mut a = spec(Some(ImputerKind::PseudoLabel), None, 20);
    a.train.lambda = LambdaSchedule::constant(0.0);
    let b = spec(None, None, 20);
    let ra = run_experiment(&a).unwrap();
    let rb = run_experiment(&b).unwrap();
    for (x, y) in ra.iter().zip(&rb) {
        let tx: Vec<f64> = x.rows.iter().map(|r| r.test_metric).collect();
        let ty: Vec<f64> = y.rows.iter().map(|r| r.test_metric).collect();
        assert_eq!(alloc::format!("{tx:?}"), alloc::format!("{ty:?}"));
        assert_eq!(x.final_metric, y.final_metric);
    }
}

#[test]
fn runs_are_deterministic_and_ordered() {
    let s = spec(Some(ImputerKind::PseudoLabel), Some(MetaConfig::default()), 12);
    let a = run_experiment(&s).unwrap();
    let b = run_experiment(&s).unwrap();
    assert_eq!(alloc::format!("{a:?}"), alloc::format!("{b:?}"));
    for r in &a {
        assert!(r.rows.windows(2).all(|w| w[0].step + 1 == w[1].step));
        assert!(r.rows[12].c_holdout_before.is_finite());
    }
    assert_eq!(s.method(), "pseudo_label-l2i");
}

#[test]
fn tail_median_uses_the_last_fifth() {
    let mk = |step, m| Row {
        step,
        c_train: 0.0,
        c_unlabeled: 0.0,
        c_holdout_before: 0.0,
        c_holdout_after: 0.0,
        test_metric: m,
    };
    let rows: Vec<Row> = (0..=10).map(|s| mk(s, s as f64)).collect();
    // steps 9 and 10 are past 8
    assert_eq!(tail_median(&rows, 10), 9.5);
    let rows = vec![mk(0, 0.3), mk(5, f64::NAN), mk(9, 0.2), mk(10, 0.4), mk(8, 0.9)];
    assert!((tail_median(&rows, 10) - 0.3).abs() < 1e-15);
}

fn rec(seed: u64, m: f64) -> RunRecord {
    RunRecord { seed, rows: Vec::new(), final_metric: m }
}

#[test]
fn comparison_counts_wins() {
    let a = [rec(1, 0.1), rec(2, 0.2), rec(3, 0.3)];
    let same = compare(&a, &a).unwrap();
    assert_eq!((same.wins_a, same.wins_b, same.ties), (0, 0, 3));
    let worse = [rec(1, 0.5), rec(2, 0.6), rec(3, 0.7)];
    let c = compare(&worse, &a).unwrap();
    assert_eq!(c.wins_a, 0);
    assert_eq!(c.wins_b, 3);
    assert!((c.mean_b - 0.2).abs() < 1e-15);
    assert!((c.sd_b - 0.1).abs() < 1e-12);
    assert!(compare(&a, &[rec(1, 0.1)]).is_err());
}

#[test]
fn bad_specs_are_rejected() {
    let mut s = spec(None, None, 1);
    s.seeds.clear();
    assert!(run_experiment(&s).is_err());
    let mut s = spec(Some(ImputerKind::PseudoLabel), Some(MetaConfig::default()), 1);
    s.data.holdout = HoldoutPolicy::Separate;
    assert!(run_experiment(&s).is_err());
}

#[test]
fn gradient_checks_pass_and_are_reproducible() {
    let a = run_checks(3, 8, None).unwrap();
    assert_eq!(a.len(), 4);
    for r in &a {
        assert!(r.passed(), "{} {}", r.kind.name(), r.max_err);
    }
    assert_eq!(a, run_checks(3, 8, None).unwrap());
    let forced = run_checks(3, 2, Some([0.0; 4])).unwrap();
    assert!(forced.iter().all(|r| !r.passed()));
    assert!(approx_direction_agreement(0, 10).unwrap() >= 9);
}
