use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ineqalm::apps::io::{read_pgm, read_svm_csv, write_pgm, GrayImage};
use ineqalm::apps::svm::{train_svm, svm_solver_config, build_svm_problem, SvmDataset};
use ineqalm::cli::archive::read_trace_csv;
use ineqalm::solvers::{SchemeKind, Status};

fn ineqalm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ineqalm"))
        .args(args)
        .arg("--quiet")
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

fn p1_files(dir: &Path, solver: &str) {
    write(dir, "A.csv", "1\n");
    write(dir, "b.csv", "1\n");
    write(dir, "P.csv", "1\n");
    write(
        dir,
        "p1.json",
        &format!(
            r#"{{ "solver": {solver},
                 "qp": {{ "a": "A.csv", "b": "b.csv", "objective": {{ "kind": "quadratic", "p": "P.csv" }} }} }}"#
        ),
    );
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn solve_qp_p1_converges() {
    let dir = tempfile::tempdir().unwrap();
    p1_files(dir.path(), r#"{ "beta": 1.0, "tau": 0.8, "r": 1.1, "tol": 1e-6 }"#);
    let out = dir.path().join("out");
    let o = ineqalm(&["solve-qp", "--config", dir.path().join("p1.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&out);
    assert!((s["x"][0].as_f64().unwrap() - 1.0).abs() <= 1e-5);
    let trace = read_trace_csv(out.join("trace.csv")).unwrap();
    assert_eq!(trace.len(), s["iterations"].as_u64().unwrap() as usize);
    assert!(trace.last().unwrap().aer < 1e-6);
}

#[test]
fn solve_qp_budget_exhausted() {
    let dir = tempfile::tempdir().unwrap();
    p1_files(dir.path(), r#"{ "r": 1.1, "max_iter": 0 }"#);
    let o = ineqalm(&["solve-qp", "--config", dir.path().join("p1.json").to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn solve_qp_missing_file_names_path() {
    let dir = tempfile::tempdir().unwrap();
    p1_files(dir.path(), "{}");
    fs::remove_file(dir.path().join("b.csv")).unwrap();
    let o = ineqalm(&["solve-qp", "--config", dir.path().join("p1.json").to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains(&dir.path().join("b.csv").display().to_string()), "{err}");
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{ "solver": { "taus": 0.8 } }"#);
    let o = ineqalm(&["svm", "--config", dir.path().join("c.json").to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("taus"));
}

#[test]
fn svm_runs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "svm.json",
        r#"{ "svm": { "generator": { "n_per_class": 10, "dim": 3, "separation": 8 } } }"#,
    );
    let cfg = dir.path().join("svm.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = ineqalm(&["svm", "--config", cfg.to_str().unwrap(), "--seed", "5"], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for file in ["trace.csv", "model.json", "dataset.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
    assert_eq!(read_svm_csv(a.join("dataset.csv")).unwrap().len(), 20);
}

#[test]
fn svm_non_separable_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "svm.json",
        r#"{ "svm": { "generator": { "n_per_class": 200, "dim": 1, "separation": 0 } } }"#,
    );
    let o = ineqalm(&["svm", "--config", dir.path().join("svm.json").to_str().unwrap()], &dir.path().join("o"));
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("separable"));
}

#[test]
fn symmetric_two_point_svm() {
    let data = SvmDataset::new(vec![vec![1.0, 0.0], vec![-1.0, 0.0]], vec![1.0, -1.0]).unwrap();
    let problem = build_svm_problem(&data).unwrap();
    let config = svm_solver_config(&problem, 0.8, 1e-10, 100_000).unwrap();
    let t = train_svm(&data, &config, SchemeKind::Iidl).unwrap();
    assert_eq!(t.result.status, Status::Converged);
    assert!((t.model.w[0] - 1.0).abs() < 1e-6 && t.model.w[1].abs() < 1e-6);
    assert!(t.model.intercept.abs() < 1e-6);

    let dir = tempfile::tempdir().unwrap();
    ineqalm::apps::io::write_svm_csv(dir.path().join("two.csv"), &data).unwrap();
    write(dir.path(), "c.json", r#"{ "solver": { "tol": 1e-10, "max_iter": 100000 }, "svm": { "data": "two.csv" } }"#);
    let out = dir.path().join("o");
    let o = ineqalm(&["svm", "--config", dir.path().join("c.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let model: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("model.json")).unwrap()).unwrap();
    assert!((model["w"][0].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(!out.join("dataset.csv").exists());
}

#[test]
fn potts_single_pixel() {
    let dir = tempfile::tempdir().unwrap();
    // intensity 0.2: label 1 (c = 0) fits better than label 2 (c = 1)
    write_pgm(dir.path().join("px.pgm"), &GrayImage::new(1, 1, 10, vec![2]).unwrap(), false).unwrap();
    write(dir.path(), "c.json", r#"{ "solver": { "beta": 0.3 }, "potts": { "image": "px.pgm", "labels": 2 } }"#);
    let out = dir.path().join("o");
    let o = ineqalm(&["potts", "--config", dir.path().join("c.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let labels = read_pgm(out.join("labels.pgm")).unwrap();
    assert_eq!((labels.width, labels.height, labels.maxval), (1, 1, 2));
    assert_eq!(labels.pixels, vec![1]);
    assert!(summary(&out)["iterations"].as_u64().unwrap() < 200);
}

#[test]
fn potts_synthetic_reports_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{ "solver": { "beta": 0.3 }, "potts": { "synthetic": { "kind": "two_region", "width": 24, "height": 16, "noise": 0.1 } } }"#,
    );
    let out = dir.path().join("o");
    let o = ineqalm(&["potts", "--config", dir.path().join("c.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    assert!(summary(&out)["accuracy"].as_f64().unwrap() > 0.99);
    let labels = read_pgm(out.join("labels.pgm")).unwrap();
    assert_eq!((labels.width, labels.height), (24, 16));
}

#[test]
fn certify_out_of_range_tau_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "c.json", r#"{ "suite": { "tau": 0.5, "random_cases": 3, "max_iter": 300 } }"#);
    let out = dir.path().join("o");
    let o = ineqalm(&["certify", "--config", dir.path().join("c.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(4));
    let failures = fs::read_to_string(out.join("failures.csv")).unwrap();
    assert!(failures.lines().count() > 1);
    assert!(failures.lines().skip(1).all(|l| l.ends_with(",false")));
}

#[test]
fn certify_user_qp() {
    let dir = tempfile::tempdir().unwrap();
    p1_files(dir.path(), r#"{ "beta": 1.0, "tau": 0.8, "r": 1.1, "tol": 1e-10 }"#);
    let out = dir.path().join("o");
    let o = ineqalm(&["certify", "--config", dir.path().join("p1.json").to_str().unwrap()], &out);
    assert_eq!(o.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["checks"].as_u64().unwrap() > 0 && s["failed"].as_u64().unwrap() == 0);
    assert!(s["spectrum"]["d0_indefinite"].as_bool().unwrap());
}

#[test]
fn sweep_summaries_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "c.json",
        r#"{ "svm": { "generator": { "n_per_class": 10, "dim": 3, "separation": 10 } },
             "sweep": { "taus": [1.0, 0.75], "tols": [1e-4, 1e-6] } }"#,
    );
    let cfg = dir.path().join("c.json");
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = ineqalm(&["sweep-tau", "--config", cfg.to_str().unwrap()], out);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["summary_tol_1e-4.csv", "summary_tol_1e-6.csv"] {
        let text = fs::read_to_string(a.join(name)).unwrap();
        assert_eq!(text, fs::read_to_string(b.join(name)).unwrap());
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("tau,iterations,final_aer,wall_time_ms,status"));
    }
    assert!(a.join("tol_1e-6/tau_0.75/trace.csv").exists());
}
