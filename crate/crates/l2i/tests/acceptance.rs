//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use l2i::config::Settings;
use l2i::dataset::{load_csv, save_csv, CsvData};
use l2i::run::run_seeds;
use l2i_core::datagen::{LabeledSet, Targets, UnlabeledSet};
use l2i_core::harness::{
    approx_direction_agreement, check_approx_linear, check_exact_label, check_exact_output, check_one_layer, RunRecord,
};
use l2i_core::impute::{one_hot_argmax, sharpen};
use l2i_core::meta::LambdaSchedule;
use l2i_core::netgrad::ema_update;
use l2i_core::{Matrix, ParamVector, RngState};

fn workspace() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// Writes to the stdout handle directly so the line shows without `--nocapture`.
fn report(n: u32, pass: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
}

fn verdict(n: u32, pass: bool, detail: String) {
    report(n, pass, detail.clone());
    assert!(pass, "criterion {n}: {detail}");
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

#[test]
fn criterion_1_hypergradients_match_finite_differences() {
    let t = Instant::now();
    let l = check_exact_label(1, 20).unwrap();
    let o = check_exact_output(1, 20).unwrap();
    let el = t.elapsed();
    let pass = l < 1e-4 && o < 1e-4 && el < Duration::from_secs(5);
    verdict(1, pass, format!("exact-L rel err {l:.2e}, exact-O rel err {o:.2e} (< 1e-4), 20 instances, {}", secs(el)));
}

#[test]
fn criterion_2_one_layer_closed_forms() {
    let t = Instant::now();
    let err = check_one_layer(2, 100).unwrap();
    let el = t.elapsed();
    let pass = err < 1e-8 && el < Duration::from_secs(2);
    verdict(
        2,
        pass,
        format!("max abs err {err:.2e} (< 1e-8) over 100 binary + 100 regression instances, {}", secs(el)),
    );
}

#[test]
fn criterion_3_approximation() {
    let t = Instant::now();
    let lin = check_approx_linear(3, 50).unwrap();
    let agree = approx_direction_agreement(3, 10).unwrap();
    let el = t.elapsed();
    let pass = lin < 1e-10 && agree >= 9 && el < Duration::from_secs(5);
    verdict(
        3,
        pass,
        format!("linear max abs diff {lin:.2e} (< 1e-10), positive cosine on {agree}/10 MLPs, {}", secs(el)),
    );
}

fn moons() -> Settings {
    Settings::load(&workspace().join("configs/moons.ini")).unwrap()
}

fn accuracies(recs: &[RunRecord]) -> Vec<f64> {
    recs.iter().map(|r| 1.0 - r.final_metric).collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[test]
fn criterion_4_toy_semi_supervised_efficacy() {
    let base = moons();
    let arm = |sets: &[&str]| {
        let mut s = base.clone();
        for a in sets {
            s.set(a).unwrap();
        }
        let exp = s.build().unwrap();
        run_seeds(&exp.spec, exp.threads).unwrap()
    };
    let t = Instant::now();
    let l2i = arm(&[]);
    let pl = arm(&["l2i.enabled=false"]);
    let sup = arm(&["l2i.enabled=false", "train.method=supervised"]);
    let el = t.elapsed();
    assert_eq!(l2i.len(), 10);
    let (a_l2i, a_pl, a_sup) = (accuracies(&l2i), accuracies(&pl), accuracies(&sup));
    let wins = a_l2i.iter().zip(&a_pl).filter(|(x, y)| x >= y).count();
    let (m_l2i, m_pl, m_sup) = (mean(&a_l2i), mean(&a_pl), mean(&a_sup));
    let pass = wins >= 8 && m_l2i - m_sup >= 0.02 && m_pl - m_sup >= 0.02 && el < Duration::from_secs(180);
    verdict(
        4,
        pass,
        format!(
            "PL-L2I >= PL on {wins}/10 seeds; mean acc L2I {:.2}% PL {:.2}% supervised {:.2}%; 30 runs in {}",
            100.0 * m_l2i,
            100.0 * m_pl,
            100.0 * m_sup,
            secs(el)
        ),
    );
}

#[test]
fn criterion_5_holdout_improvement() {
    let mut s = moons();
    s.set("experiment.seeds=0").unwrap();
    let exp = s.build().unwrap();
    let ramp = exp.spec.train.lambda.ramp_steps;
    let rec = &run_seeds(&exp.spec, 1).unwrap()[0];
    let post: Vec<_> = rec
        .rows
        .iter()
        .filter(|r| r.step > ramp && r.c_holdout_before.is_finite() && r.c_holdout_after.is_finite())
        .collect();
    let better = post.iter().filter(|r| r.c_holdout_after <= r.c_holdout_before).count();
    let frac = better as f64 / post.len().max(1) as f64;
    let pass = !post.is_empty() && frac >= 0.7;
    verdict(
        5,
        pass,
        format!(
            "c_holdout_after <= c_holdout_before on {better}/{} post-ramp iterations ({:.1}%)",
            post.len(),
            100.0 * frac
        ),
    );
}

fn csv_round_trip(rng: &mut RngState) -> bool {
    let n = 12;
    let x: Vec<f64> = (0..n * 3).map(|_| rng.uniform_range(-1e3, 1e3) * rng.uniform()).collect();
    let labeled = LabeledSet {
        inputs: Matrix::from_vec(n, 3, x).unwrap(),
        targets: Targets::Classes { labels: (0..n).map(|i| i % 3).collect(), classes: 3 },
    };
    let unlabeled = UnlabeledSet { inputs: Matrix::from_vec(2, 3, vec![0.1, -2.5e-7, 3.0, 1e12, 0.0, -1.0]).unwrap() };
    let data = CsvData {
        features: vec!["a".into(), "b".into(), "c".into()],
        labeled: Some(labeled),
        unlabeled: Some(unlabeled),
    };
    let dir = std::env::temp_dir().join(format!("l2i-acc-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("round.csv");
    save_csv(&path, &data).unwrap();
    let back = load_csv(&path).unwrap();
    let close = |a: &Matrix, b: &Matrix| {
        a.shape() == b.shape() && a.data().iter().zip(b.data()).all(|(u, v)| (u - v).abs() <= 1e-12 * u.abs().max(1.0))
    };
    let (l0, l1) = (data.labeled.as_ref().unwrap(), back.labeled.as_ref().unwrap());
    let (u0, u1) = (data.unlabeled.as_ref().unwrap(), back.unlabeled.as_ref().unwrap());
    back.features == data.features
        && close(&l0.inputs, &l1.inputs)
        && l0.targets == l1.targets
        && close(&u0.inputs, &u1.inputs)
}

#[test]
fn criterion_6_component_properties() {
    let t = Instant::now();
    let mut rng = RngState::new(6);
    let mut failures = Vec::new();

    let mut sharpen_ok = true;
    for _ in 0..200 {
        let k = 2 + rng.below(5);
        let raw: Vec<f64> = (0..k).map(|_| rng.uniform() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        let p: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let q = sharpen(&p, 0.5).unwrap();
        sharpen_ok &= q.iter().all(|&v| v >= 0.0) && (q.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        for i in 0..k {
            for j in 0..k {
                if p[i] > p[j] {
                    sharpen_ok &= q[i] > q[j] && q[i] / q[j] >= p[i] / p[j];
                }
            }
        }
    }
    if !sharpen_ok {
        failures.push("sharpen");
    }

    let teacher = ParamVector::new(vec![1.0, -2.0, 0.5], vec![(3, 1)]).unwrap();
    let student = ParamVector::new(vec![3.0, 2.0, 0.5], vec![(3, 1)]).unwrap();
    let e = ema_update(&teacher, &student, 0.999).unwrap();
    let want = [1.002, -1.996, 0.5];
    let ema_ok = e.values().iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-12)
        && e.values()
            .iter()
            .zip(teacher.values().iter().zip(student.values()))
            .all(|(v, (a, b))| *v >= a.min(*b) && *v <= a.max(*b));
    if !ema_ok {
        failures.push("ema");
    }

    let tie = [0.25, 0.5, 0.5, 0.1];
    let argmax_ok = (0..10).all(|_| one_hot_argmax(&tie) == vec![0.0, 1.0, 0.0, 0.0]);
    if !argmax_ok {
        failures.push("argmax");
    }

    let sched = LambdaSchedule::new(3.0, 250).unwrap();
    let ramp_ok = sched.at(0) == 0.0 && (0..1000).all(|t| sched.at(t + 1) >= sched.at(t)) && sched.at(250) == 3.0;
    if !ramp_ok {
        failures.push("ramp");
    }

    if !csv_round_trip(&mut rng) {
        failures.push("csv");
    }
    let el = t.elapsed();
    let pass = failures.is_empty() && el < Duration::from_secs(1);
    verdict(
        6,
        pass,
        format!("sharpen, ema(0.999), argmax ties, ramp, csv round trip; failures {failures:?}; {}", secs(el)),
    );
}

fn demo_outputs(out: &Path) -> Vec<(String, Vec<u8>)> {
    let res = Command::new(env!("CARGO_BIN_EXE_l2i"))
        .args(["train", "--config"])
        .arg(workspace().join("configs/demo.ini"))
        .arg("--out")
        .arg(out)
        .env("L2I_LOG", "quiet")
        .output()
        .unwrap();
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    for name in ["metrics_0.csv", "metrics_1.csv", "summary.json", "baseline/metrics_0.csv", "baseline/metrics_1.csv"] {
        files.push((name.to_string(), std::fs::read(out.join(name)).unwrap()));
    }
    files
}

#[test]
fn criterion_7_demo_is_deterministic() {
    let root = std::env::temp_dir().join(format!("l2i-det-{}", std::process::id()));
    let a = demo_outputs(&root.join("a"));
    let b = demo_outputs(&root.join("b"));
    let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x.1 != y.1).map(|(x, _)| x.0.as_str()).collect();
    let pass = differing.is_empty();
    verdict(7, pass, format!("{} output files compared byte for byte; differing {differing:?}", a.len()));
    std::fs::remove_dir_all(&root).ok();
}
