use std::path::{Path, PathBuf};

use l2i::dataset::{load_csv, save_csv, CsvData};
use l2i::Error;
use l2i_core::datagen::{two_moons, Targets, UnlabeledSet};
use l2i_core::Matrix;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("l2i-ds-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn write(name: &str, text: &str) -> PathBuf {
    let p = scratch(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn committed_fixture_parses() {
    let d = load_csv(&fixture("tiny.csv")).unwrap();
    assert_eq!(d.features, ["x", "y"]);
    let lab = d.labeled.unwrap();
    assert_eq!(lab.inputs.shape(), (8, 2));
    assert_eq!(lab.inputs.row(3), &[1e-3, 3.5]);
    assert_eq!(lab.targets, Targets::Classes { labels: vec![0, 1, 0, 1, 0, 1, 1, 0], classes: 2 });
    let unl = d.unlabeled.unwrap();
    assert_eq!(unl.inputs.data(), &[0.75, 1.25, 3.25, -1.0]);
}

#[test]
fn regression_fixture_with_crlf_parses() {
    let d = load_csv(&fixture("regression.csv")).unwrap();
    let lab = d.labeled.unwrap();
    assert_eq!(lab.targets, Targets::Values(Matrix::from_rows(&[[0.5, -0.5], [1.5, 2.5]]).unwrap()));
    assert_eq!(d.unlabeled.unwrap().inputs.data(), &[3.0, 4.0]);
}

#[test]
fn round_trip_is_exact() {
    let set = two_moons(40, 0.3, 5).unwrap();
    let data = CsvData {
        features: vec!["u".into(), "v".into()],
        labeled: Some(set),
        unlabeled: Some(UnlabeledSet { inputs: Matrix::from_rows(&[[1.0 / 3.0, -7e-300]]).unwrap() }),
    };
    let p = scratch("moons.csv");
    save_csv(&p, &data).unwrap();
    assert_eq!(load_csv(&p).unwrap(), data);
    let text = std::fs::read_to_string(&p).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.ends_with(",?\n"));
}

#[test]
fn regression_round_trip_is_exact() {
    let d = load_csv(&fixture("regression.csv")).unwrap();
    let p = scratch("reg.csv");
    save_csv(&p, &d).unwrap();
    assert_eq!(load_csv(&p).unwrap(), d);
}

fn csv_error(text: &str) -> (u64, String) {
    match load_csv(&write("bad.csv", text)) {
        Err(Error::Csv { line, msg, .. }) => (line, msg),
        other => panic!("expected a csv error, got {other:?}"),
    }
}

#[test]
fn malformed_files_are_rejected_with_line_numbers() {
    let (line, msg) = csv_error("x,label\n1,0\n2,1,5\n");
    assert_eq!(line, 3);
    assert!(msg.contains("fields"), "{msg}");
    let (line, msg) = csv_error("x,label\n1,0\nabc,1\n");
    assert_eq!(line, 3);
    assert!(msg.contains("abc"), "{msg}");
    assert!(csv_error("").1.contains("empty"));
    assert!(csv_error("x,label\n").1.contains("no data"));
    assert!(csv_error("x,y\n1,2\n").1.contains("label"));
    assert!(csv_error("label\n1\n").1.contains("feature"));
    assert!(csv_error("x,label\n1,0.5\n").1.contains("class index"));
    assert!(csv_error("x,label_0,label_1\n1,?,2\n").1.contains("`?`"));
    assert!(csv_error("x,label_1\n1,2\n").1.contains("label_0"));
    assert!(csv_error("x,label\n1,NaN\n").0 == 2);
}

#[test]
fn missing_file_names_the_path() {
    let e = load_csv(Path::new("/nonexistent/data.csv")).unwrap_err();
    assert!(e.to_string().contains("/nonexistent/data.csv"));
    assert_eq!(e.exit_code(), 1);
}
