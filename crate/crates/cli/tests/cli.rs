//! End-to-end tests for the `asymshap` binary: file formats, exit codes,
//! determinism, and the self-consistency of emitted reports.

use std::path::Path;
use std::process::{Command, Output};

use asymshap_cli::io::{load_dataset, load_partition, read_report};
use asymshap_core::utility::Utility;
use asymshap_core::{KnnUtility, Method, Metric};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_asymshap"))
}

fn run_ok(args: &[&str], dir: &Path) -> Output {
    let out = bin().args(args).current_dir(dir).output().expect("spawn");
    assert!(
        out.status.success(),
        "command {:?} failed\nstdout: {}\nstderr: {}",
        args,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn gen_args<'a>(kind: &'a str, seed: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "gen",
        "--seed",
        seed,
        "--out",
        out,
        "--set",
        kind,
        "--set",
        "gen.n_per_class=5",
        "--set",
        "gen.test_per_class=4",
    ]
}

#[test]
fn gen_is_byte_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=two-gaussians", "9", "a"), dir.path());
    run_ok(&gen_args("gen.kind=two-gaussians", "9", "b"), dir.path());
    run_ok(&gen_args("gen.kind=two-gaussians", "10", "c"), dir.path());
    for name in ["train.csv", "test.csv", "partition.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across identical runs");
    }
    let a = std::fs::read(dir.path().join("a/train.csv")).unwrap();
    let c = std::fs::read(dir.path().join("c/train.csv")).unwrap();
    assert_ne!(a, c, "different seeds must differ");
}

#[test]
fn generated_files_load_back() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=jitter-augment", "3", "."), dir.path());
    let train = load_dataset(&dir.path().join("train.csv")).unwrap();
    let partition = load_partition(&dir.path().join("partition.csv")).unwrap();
    assert_eq!(
        train.len(),
        20,
        "5 per class, 2 classes, originals + copies"
    );
    assert_eq!(partition.num_points(), 20);
    assert_eq!(partition.num_classes(), 2);
}

#[test]
fn value_knn_report_satisfies_class_wise_efficiency() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=replicate", "17", "."), dir.path());
    run_ok(
        &[
            "value",
            "--method",
            "knn",
            "--out",
            "report.json",
            "--set",
            "dataset=train.csv",
            "--set",
            "test_set=test.csv",
            "--set",
            "partition=partition.csv",
            "--set",
            "knn.k=3",
            "--set",
            "utility.empty_score=0",
        ],
        dir.path(),
    );
    let report = read_report(&dir.path().join("report.json")).unwrap();
    assert_eq!(report.method, Method::KnnAds);
    assert!(report.meta.config_hash.is_some());
    assert!(report.meta.tool_version.is_some());

    let train = load_dataset(&dir.path().join("train.csv")).unwrap();
    let test = load_dataset(&dir.path().join("test.csv")).unwrap();
    let partition = load_partition(&dir.path().join("partition.csv")).unwrap();
    let util = KnnUtility::new(train, test, 3, Metric::Euclidean, 0.0).unwrap();
    let mut prefix: Vec<usize> = Vec::new();
    for (k, class) in partition.classes().iter().enumerate() {
        let before = util.eval(&prefix);
        prefix.extend(class.iter().copied());
        let after = util.eval(&prefix);
        assert!(
            (report.class_sums[k] - (after - before)).abs() <= 1e-9,
            "class {k} sum violates the utility increment"
        );
    }
}

#[test]
fn value_mc_is_deterministic_and_respects_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=two-gaussians", "5", "."), dir.path());
    let args = [
        "value",
        "--method",
        "mc",
        "--seed",
        "21",
        "--workers",
        "8",
        "--set",
        "dataset=train.csv",
        "--set",
        "test_set=test.csv",
        "--set",
        "mc.budget=300",
        "--set",
        "utility.kind=centroid",
    ];
    let run = |out: &str| {
        let mut full: Vec<&str> = args.to_vec();
        full.push("--out");
        full.push(out);
        let output = bin()
            .args(&full)
            .env("ASYMSHAP_THREADS", "2")
            .current_dir(dir.path())
            .output()
            .unwrap();
        assert!(output.status.success());
    };
    run("r1.json");
    run("r2.json");
    let mut a = read_report(&dir.path().join("r1.json")).unwrap();
    let mut b = read_report(&dir.path().join("r2.json")).unwrap();
    // the output path feeds the config hash, so strip it before comparing
    a.meta.config_hash = None;
    b.meta.config_hash = None;
    assert_eq!(a, b, "same seed and workers must reproduce bit-identically");
    for (x, y) in a.values.iter().zip(&b.values) {
        assert_eq!(x.to_bits(), y.to_bits());
    }

    let report = read_report(&dir.path().join("r1.json")).unwrap();
    assert_eq!(report.method, Method::McAds);
    assert_eq!(report.meta.workers, Some(2), "env cap applies");
    assert_eq!(report.meta.iterations, 300);
    assert!(report.uncertainty.is_some());
}

#[test]
fn oracle_and_loo_methods_run() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=two-gaussians", "7", "."), dir.path());
    run_ok(
        &[
            "value",
            "--method",
            "oracle",
            "--out",
            "oracle.json",
            "--set",
            "dataset=train.csv",
            "--set",
            "test_set=test.csv",
            "--set",
            "utility.k=1",
        ],
        dir.path(),
    );
    let oracle = read_report(&dir.path().join("oracle.json")).unwrap();
    assert_eq!(oracle.method, Method::OracleDs);

    run_ok(
        &[
            "value",
            "--method",
            "loo",
            "--out",
            "loo.json",
            "--set",
            "dataset=train.csv",
            "--set",
            "test_set=test.csv",
        ],
        dir.path(),
    );
    let loo = read_report(&dir.path().join("loo.json")).unwrap();
    assert_eq!(loo.method, Method::Loo);
    assert_eq!(loo.values.len(), 10);
}

#[test]
fn verify_reports_tight_deviations() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_ok(&["verify", "--seed", "0"], dir.path());
    let text = String::from_utf8_lossy(&out.stdout).to_string();
    assert!(text.contains("max |ads-general - ads-icuws|"), "{text}");
    assert!(text.contains("max |knn-ads - oracle|"), "{text}");
    assert!(text.contains("all cross-checks within tolerance"), "{text}");
}

#[test]
fn experiment_augment_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "experiment",
            "--seed",
            "11",
            "--out",
            "exp",
            "--set",
            "experiment.preset=augment",
            "--set",
            "gen.n_per_class=8",
            "--set",
            "gen.test_per_class=6",
            "--set",
            "knn.k=3",
        ],
        dir.path(),
    );
    for name in [
        "remove_low.csv",
        "remove_high.csv",
        "remove_random_mean.csv",
        "add_low.csv",
        "add_high.csv",
    ] {
        let text = std::fs::read_to_string(dir.path().join("exp").join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("fraction,relative_accuracy"), "{name}");
        let first = lines.next().unwrap();
        assert!(first.starts_with("0,1"), "{name} first step: {first}");
        assert_eq!(text.lines().count(), 12, "{name}: header + 11 steps");
    }
}

#[test]
fn experiment_allocation_shares_sum_to_one() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "experiment",
            "--seed",
            "13",
            "--out",
            "alloc",
            "--set",
            "experiment.preset=allocation",
            "--set",
            "gen.kind=replicate",
            "--set",
            "gen.copies=2",
            "--set",
            "gen.n_per_class=5",
            "--set",
            "gen.test_per_class=5",
            "--set",
            "knn.k=3",
        ],
        dir.path(),
    );
    let text = std::fs::read_to_string(dir.path().join("alloc/allocation.json")).unwrap();
    let entries: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries = entries.as_array().unwrap();
    assert_eq!(entries.len(), 2, "copy counts 1 and 2");
    for entry in entries {
        let shares: Vec<f64> = entry["shares"]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect();
        let total: f64 = entry["total"].as_f64().unwrap();
        if total > 0.0 {
            let sum: f64 = shares.iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn experiment_sequential_runs_periods() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(
        &[
            "experiment",
            "--seed",
            "19",
            "--out",
            "seq",
            "--set",
            "experiment.preset=sequential",
            "--set",
            "gen.periods=3",
            "--set",
            "gen.n_per_class=6",
            "--set",
            "gen.test_per_class=4",
            "--set",
            "experiment.retention=0.25",
            "--set",
            "knn.k=3",
        ],
        dir.path(),
    );
    for period in 1..=2 {
        assert!(dir
            .path()
            .join(format!("seq/add_high_period{period}.csv"))
            .exists());
        assert!(dir
            .path()
            .join(format!("seq/add_low_period{period}.csv"))
            .exists());
    }
    let text = std::fs::read_to_string(dir.path().join("seq/retention_summary.json")).unwrap();
    let summary: serde_json::Value = serde_json::from_str(&text).unwrap();
    let entries = summary.as_array().unwrap();
    assert_eq!(entries.len(), 2);
    assert_eq!(entries[0]["retained"], 3, "25% of 12 new points");
}

#[test]
fn validation_failures_exit_one() {
    let dir = tempfile::tempdir().unwrap();

    // missing required key
    let out = bin()
        .args(["value", "--method", "knn"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("dataset"), "{stderr}");

    // malformed CSV
    std::fs::write(dir.path().join("bad.csv"), "id,label,f0\n0,0,oops\n").unwrap();
    std::fs::write(dir.path().join("test.csv"), "id,label,f0\n0,0,1.0\n").unwrap();
    let out = bin()
        .args([
            "value",
            "--method",
            "knn",
            "--set",
            "dataset=bad.csv",
            "--set",
            "test_set=test.csv",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));

    // unknown method
    let out = bin()
        .args(["value", "--method", "alchemy", "--set", "dataset=x"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn internal_failures_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=two-gaussians", "29", "."), dir.path());
    // an output path whose parent directory does not exist fails at write
    // time, after validation
    let out = bin()
        .args([
            "value",
            "--method",
            "knn",
            "--out",
            "no/such/dir/report.json",
            "--set",
            "dataset=train.csv",
            "--set",
            "test_set=test.csv",
        ])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_overrides_compose() {
    let dir = tempfile::tempdir().unwrap();
    run_ok(&gen_args("gen.kind=two-gaussians", "23", "."), dir.path());
    std::fs::write(
        dir.path().join("run.cfg"),
        "method = knn\ndataset = train.csv\ntest_set = test.csv\nknn.k = 1\nout = from_cfg.json\n",
    )
    .unwrap();
    // the --set override beats the file, the file provides the rest
    run_ok(
        &[
            "value",
            "--config",
            "run.cfg",
            "--set",
            "knn.k=3",
            "--set",
            "utility.empty_score=0",
        ],
        dir.path(),
    );
    let report = read_report(&dir.path().join("from_cfg.json")).unwrap();
    assert!(
        report.meta.utility.contains("k=3"),
        "{}",
        report.meta.utility
    );
}
