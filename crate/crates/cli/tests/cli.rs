use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mmsvm::dataio::synthetic::adult_like;
use mmsvm::dataio::{split, Dataset, SplitSpec};
use mmsvm_cli::model::ModelFile;
use mmsvm_cli::record::{RefminFile, RunRecord};
use mmsvm_cli::table::Table;
use tempfile::TempDir;

fn mmsvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmsvm"))
        .args(args)
        .env_remove("MMSVM_THREADS")
        .output()
        .expect("binary runs")
}

fn mmsvm_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmsvm"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_dataset(dir: &Path, name: &str, ds: &Dataset) -> String {
    let p = dir.join(name);
    std::fs::write(&p, ds.to_libsvm()).unwrap();
    p.to_str().unwrap().to_string()
}

struct Fixture {
    dir: TempDir,
    data: String,
    train: String,
    test: String,
}

impl Fixture {
    fn new(samples: usize) -> Self {
        let dir = TempDir::new().unwrap();
        let ds = adult_like(samples, 4);
        let (tr, te) = split(&ds, SplitSpec { train_fraction: 0.8, seed: 1 }).unwrap();
        let data = write_dataset(dir.path(), "all.txt", &ds);
        let train = write_dataset(dir.path(), "train.txt", &tr);
        let test = write_dataset(dir.path(), "test.txt", &te);
        Self { dir, data, train, test }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_record(dir: &Path) -> RunRecord {
    RunRecord::from_json(&std::fs::read_to_string(dir.join("record.json")).unwrap()).unwrap()
}

#[test]
fn train_writes_parseable_outputs() {
    let f = Fixture::new(200);
    let out = f.out("run");
    ok(&mmsvm(&["train", "--data", &f.data, "--method", "h-mmi", "--epochs", "25", "--iota", "5", "--out", s(&out)]));

    let trace = Table::read(&out.join("trace.csv")).unwrap();
    assert_eq!(trace.header, ["epoch", "phi", "grad_norm", "seconds"]);
    assert_eq!(trace.rows.len(), 25);
    for (i, row) in trace.rows.iter().enumerate() {
        assert_eq!(row[0].parse::<usize>().unwrap(), i + 1);
        for cell in &row[1..] {
            assert!(cell.parse::<f64>().unwrap().is_finite());
        }
    }

    let record = read_record(&out);
    assert_eq!(record.trace.epochs.len(), 25);
    assert_eq!(record.trace.epochs[24].phi, trace.rows[24][1].parse::<f64>().unwrap());
    assert_eq!(record.config["method"], "H-MMI");
    assert_eq!(record.config["iota"], "5");
    assert_eq!(record.config["lambda"], "0.0001");
    assert_eq!(record.dataset.train_samples, 160);
    assert_eq!(record.dataset.test_samples, 40);

    let model = ModelFile::load(&out.join("model.txt")).unwrap();
    assert_eq!(model.num_features(), record.dataset.num_features);
    assert_eq!(model.method, "H-MMI");

    let report = Table::read(&out.join("report.csv")).unwrap();
    let acc = report.rows.iter().find(|r| r[0] == "accuracy").unwrap();
    assert_eq!(acc[1].parse::<f64>().ok(), record.metrics.accuracy);

    // The echoed configuration reruns to the same record.
    let again = f.out("again");
    ok(&mmsvm(&["train", "--config", s(&out.join("config.txt")), "--out", s(&again)]));
    let mut second = read_record(&again);
    second.config.insert("out".into(), s(&out).into());
    assert_eq!(second, record);
}

#[test]
fn same_seed_gives_identical_records() {
    let f = Fixture::new(150);
    let (a, b) = (f.out("a"), f.out("b"));
    for dir in [&a, &b] {
        ok(&mmsvm(&["train", "--data", &f.data, "--method", "adam", "--batch", "4", "--epochs", "8", "--seed", "9", "--out", s(dir)]));
    }
    let (mut ra, rb) = (read_record(&a), read_record(&b));
    ra.config.insert("out".into(), s(&b).into());
    assert_eq!(ra, rb);
    assert_eq!(
        std::fs::read(a.join("model.txt")).unwrap(),
        std::fs::read(b.join("model.txt")).unwrap()
    );
}

#[test]
fn missing_input_leaves_no_outputs() {
    let f = Fixture::new(20);
    let out = f.out("never");
    let r = mmsvm(&["train", "--data", s(&f.out("absent.txt")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!out.exists());

    let r = mmsvm(&["train", "--data", &f.data, "--refmin", s(&f.out("absent-ref.txt")), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(3));
    assert!(!out.exists());
}

#[test]
fn usage_errors_exit_with_two() {
    let f = Fixture::new(20);
    let out = f.out("x");
    for args in [
        vec!["train", "--data", &f.data, "--reg", "l2", "--lambda", "0.1"],
        vec!["train", "--data", &f.data, "--epochs", "many"],
        vec!["train", "--data", &f.data, "--bogus", "1"],
        vec!["train", "--out", s(&out)],
        vec!["benchmark", "--data", &f.data, "--reg", "l2", "--lambdas", "0.1"],
    ] {
        assert_eq!(mmsvm(&args).status.code(), Some(2), "{args:?}");
    }
    let cfg = f.out("bad.cfg");
    std::fs::write(&cfg, "data = x\nlearning_rate = 1\n").unwrap();
    assert_eq!(mmsvm(&["train", "--config", s(&cfg)]).status.code(), Some(2));
    let r = mmsvm_env(&["benchmark", "--data", &f.data, "--out", s(&out)], "MMSVM_THREADS", "zero");
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn divergence_exits_with_four() {
    let f = Fixture::new(60);
    let r = mmsvm(&["train", "--data", &f.data, "--method", "fg", "--alpha", "10", "--epochs", "50", "--out", s(&f.out("d"))]);
    assert_eq!(r.status.code(), Some(4), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn evaluate_matches_the_training_report() {
    let f = Fixture::new(200);
    let out = f.out("run");
    ok(&mmsvm(&["train", "--data", &f.train, "--test-data", &f.test, "--method", "mm", "--epochs", "20", "--out", s(&out)]));
    let record = read_record(&out);
    let eval = f.out("eval");
    ok(&mmsvm(&["evaluate", "--model", s(&out.join("model.txt")), "--data", &f.test, "--out", s(&eval)]));
    assert_eq!(
        std::fs::read_to_string(eval.join("report.csv")).unwrap(),
        std::fs::read_to_string(out.join("report.csv")).unwrap()
    );
    assert_eq!(record.dataset.test_samples, 40);
}

#[test]
fn zero_model_predicts_the_positive_class() {
    let f = Fixture::new(100);
    let ds = Dataset::from_path(&f.data).unwrap();
    let model = ModelFile {
        theta: mmsvm::Params::zeros(ds.num_features + 1),
        reg: mmsvm::Reg::quadratic_only(1e-4),
        method: "none".into(),
    };
    let path = f.out("zero.txt");
    std::fs::write(&path, model.render()).unwrap();
    let out = f.out("eval");
    ok(&mmsvm(&["evaluate", "--model", s(&path), "--data", &f.data, "--out", s(&out)]));
    let report = Table::read(&out.join("report.csv")).unwrap();
    let get = |k: &str| report.rows.iter().find(|r| r[0] == k).unwrap()[1].clone();
    let (pos, _) = ds.count_labels();
    assert_eq!(get("accuracy").parse::<f64>().unwrap(), pos as f64 / ds.len() as f64);
    assert_eq!(get("tn"), "0");
    assert_eq!(get("fn"), "0");
}

#[test]
fn mismatched_feature_count_exits_with_two() {
    let f = Fixture::new(60);
    let model = ModelFile {
        theta: mmsvm::Params::zeros(6),
        reg: mmsvm::Reg::quadratic_only(1e-4),
        method: "none".into(),
    };
    let path = f.out("small.txt");
    std::fs::write(&path, model.render()).unwrap();
    let out = f.out("eval");
    let r = mmsvm(&["evaluate", "--model", s(&path), "--data", &f.data, "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn refmin_is_reproducible_and_closes_the_gap() {
    let f = Fixture::new(120);
    let (a, b) = (f.out("ra"), f.out("rb"));
    for dir in [&a, &b] {
        ok(&mmsvm(&["refmin", "--data", &f.data, "--reg", "welsh", "--out", s(dir)]));
    }
    let text = std::fs::read(a.join("refmin.txt")).unwrap();
    assert_eq!(text, std::fs::read(b.join("refmin.txt")).unwrap());
    let r = RefminFile::load(&a.join("refmin.txt")).unwrap();
    assert!(r.converged);

    let run = f.out("run");
    let refmin = a.join("refmin.txt");
    ok(&mmsvm(&[
        "train", "--data", &f.data, "--reg", "welsh", "--method", "mm", "--epochs", "150", "--refmin", s(&refmin), "--out", s(&run),
    ]));
    let trace = Table::read(&run.join("trace.csv")).unwrap();
    let gap = trace.column("gap").unwrap();
    let tail: f64 = trace.rows.last().unwrap()[gap].parse().unwrap();
    assert!(tail.abs() <= 1e-10, "tail gap {tail:e}");

    // A reference for another regularizer is refused.
    let r = mmsvm(&["train", "--data", &f.data, "--reg", "hyperbolic", "--refmin", s(&refmin), "--out", s(&f.out("bad"))]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn benchmark_matrix_layout() {
    let f = Fixture::new(120);
    let out = f.out("bench");
    ok(&mmsvm(&[
        "benchmark", "--data", &f.data, "--methods", "mm,h-sub", "--regs", "hyperbolic,l2", "--epochs", "15", "--iota", "3",
        "--out", s(&out),
    ]));
    let summary = Table::read(&out.join("summary.csv")).unwrap();
    assert_eq!(summary.header, ["metric", "reg", "MM", "H-SUB"]);
    assert_eq!(summary.rows.len(), 8);
    let groups: Vec<&str> = summary.rows.iter().step_by(2).map(|r| r[0].as_str()).collect();
    assert_eq!(groups, ["accuracy", "recall", "precision", "f1"]);
    for row in &summary.rows {
        for cell in &row[2..] {
            assert!(cell == "undefined" || (0.0..=1.0).contains(&cell.parse::<f64>().unwrap()));
        }
    }
    let records = std::fs::read_dir(out.join("records")).unwrap().count();
    assert_eq!(records, 4);
    for stem in ["hyperbolic_MM", "hyperbolic_H-SUB", "l2_MM", "l2_H-SUB"] {
        let gaps = Table::read(&out.join("gaps").join(format!("{stem}.csv"))).unwrap();
        assert_eq!(gaps.rows.len(), 16);
        for row in &gaps.rows {
            assert!(row[3].parse::<f64>().unwrap() >= 1e-16);
        }
    }
    assert!(RefminFile::load(&out.join("refmin/l2.txt")).is_ok());
    let timing = Table::read(&out.join("timing.csv")).unwrap();
    assert_eq!(timing.rows.len(), 2);

    // One worker thread yields the same numbers.
    let serial = f.out("serial");
    ok(&mmsvm_env(
        &["benchmark", "--data", &f.data, "--methods", "mm,h-sub", "--regs", "hyperbolic,l2", "--epochs", "15", "--iota", "3",
          "--out", s(&serial)],
        "MMSVM_THREADS",
        "1",
    ));
    assert_eq!(Table::read(&serial.join("summary.csv")).unwrap(), summary);
}

#[test]
fn failed_cells_are_marked() {
    let f = Fixture::new(60);
    let out = f.out("bench");
    ok(&mmsvm(&[
        "benchmark", "--data", &f.data, "--methods", "fg,mm", "--regs", "l2", "--alpha", "10", "--epochs", "50", "--out", s(&out),
    ]));
    let summary = Table::read(&out.join("summary.csv")).unwrap();
    assert!(summary.rows.iter().all(|r| r[2] == "failed" && r[3] != "failed"));
}

#[test]
fn lambda_sweep_writes_sparsity() {
    let f = Fixture::new(120);
    let out = f.out("sweep");
    ok(&mmsvm(&["benchmark", "--data", &f.data, "--lambdas", "0.1,0.01,0.001", "--method", "mm", "--epochs", "20", "--out", s(&out)]));
    let t = Table::read(&out.join("sparsity.csv")).unwrap();
    assert_eq!(t.rows.len(), 3);
    let lambdas: Vec<f64> = t.rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(lambdas, [0.1, 0.01, 0.001]);
    assert!(out.join("records/lambda_1e-1.json").exists());
}
