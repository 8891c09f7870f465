//! End-to-end tests spawning the real binary.

use std::path::Path;
use std::process::{Command, Output};

use regarma::{
    design_for_fit, mspe_bound, mspe_bound_refined, standardize, BoundInputs, RegarmaFit,
    TimeSeriesDataset,
};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regarma"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary spawns")
}

fn assert_ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn simulate(dir: &Path, extra: &[&str]) {
    let out_dir = dir.to_str().unwrap().to_string();
    let mut args = vec![
        "simulate",
        "--t-len",
        "150",
        "--r",
        "6",
        "--zero-prop",
        "0.5",
        "--sigma",
        "0.5",
        "--p",
        "1",
        "--q",
        "1",
        "--seed",
        "77",
        "--out",
        &out_dir,
    ];
    args.extend_from_slice(extra);
    assert_ok(&run(&args));
}

#[test]
fn simulate_writes_expected_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        "--t-len",
        "100",
        "--r",
        "25",
        "--seed",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_ok(&out);
    let text = std::fs::read_to_string(dir.path().join("dataset.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 101, "header + 100 data rows");
    assert_eq!(lines[0].split(',').count(), 26);
    assert!(lines[0].starts_with("y,"));
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap())
            .unwrap();
    assert_eq!(truth["beta0"].as_array().unwrap().len(), 25);
}

#[test]
fn simulate_zero_count_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    assert_ok(&run(&[
        "simulate",
        "--t-len",
        "80",
        "--r",
        "10",
        "--zero-prop",
        "0.5",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]));
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap())
            .unwrap();
    let zeros = truth["beta0"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v.as_f64().unwrap() == 0.0)
        .count();
    assert_eq!(zeros, 5);
}

#[test]
fn simulate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    simulate(a.path(), &[]);
    simulate(b.path(), &[]);
    for file in ["dataset.csv", "truth.json"] {
        let left = std::fs::read(a.path().join(file)).unwrap();
        let right = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }
}

#[test]
fn fit_family_mode_writes_table_of_four() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let fit_dir = dir.path().join("fit");
    let out = run(&[
        "fit",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--pmax",
        "2",
        "--qmax",
        "2",
        "--grid-points",
        "10",
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let metrics = std::fs::read_to_string(fit_dir.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines[0], "model,mse,mae,bic,df");
    assert_eq!(lines.len(), 5, "header + four model families");
    assert!(lines[1].starts_with("adaptive lasso,"));
    assert!(lines[4].trim_start_matches('"').starts_with("adaptive REG"));

    let fit =
        RegarmaFit::from_json_str(&std::fs::read_to_string(fit_dir.join("fit.json")).unwrap())
            .unwrap();
    assert_eq!(fit.spec.p, 2);
    assert_eq!(fit.spec.q, 2);

    let acf = std::fs::read_to_string(fit_dir.join("acf.csv")).unwrap();
    assert!(acf.starts_with("lag,acf\n1,"));
    let table = std::fs::read_to_string(fit_dir.join("table.csv")).unwrap();
    assert!(table.starts_with("lambda_scale,gamma_scale,tau_scale,p,q,n,df,criterion"));
}

#[test]
fn fit_exact_orders_with_cv() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let fit_dir = dir.path().join("fit");
    let out = run(&[
        "fit",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--p",
        "1",
        "--q",
        "1",
        "--criterion",
        "cv",
        "--folds",
        "4",
        "--grid-points",
        "8",
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let metrics = std::fs::read_to_string(fit_dir.join("metrics.csv")).unwrap();
    assert_eq!(metrics.lines().count(), 2, "header + one model");
}

#[test]
fn fit_missing_response_column_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let out = run(&[
        "fit",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "volume",
        "--out",
        dir.path().join("fit").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("volume"), "stderr names the column: {stderr}");
}

#[test]
fn fit_empty_csv_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "y,x1\n").unwrap();
    let out = run(&[
        "fit",
        "--input",
        path.to_str().unwrap(),
        "--response",
        "y",
        "--out",
        dir.path().join("fit").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn select_writes_orders_summary() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let sel_dir = dir.path().join("sel");
    let out = run(&[
        "select",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--pmax",
        "2",
        "--qmax",
        "2",
        "--order-method",
        "b",
        "--grid-points",
        "10",
        "--out",
        sel_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sel_dir.join("selection.json")).unwrap())
            .unwrap();
    assert_eq!(summary["criterion"], "bic");
    assert!(summary["best_orders"]["p"].as_u64().unwrap() <= 2);
    assert!(summary["candidates"].as_u64().unwrap() >= 10);
    assert!(sel_dir.join("table.csv").exists());
    assert!(sel_dir.join("fit.json").exists());
}

fn bench_args<'a>(out_dir: &'a str) -> Vec<&'a str> {
    vec![
        "bench",
        "--t-values",
        "60",
        "--r-values",
        "5",
        "--sigma-values",
        "0.5",
        "--zero-props",
        "0.5",
        "--replicates",
        "2",
        "--dgp-p",
        "1",
        "--dgp-q",
        "1",
        "--grid-points",
        "5",
        "--seed",
        "11",
        "--out",
        out_dir,
    ]
}

#[test]
fn bench_smoke_grid_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_ok(&run(&bench_args(a.path().to_str().unwrap())));
    assert_ok(&run(&bench_args(b.path().to_str().unwrap())));
    for file in [
        "rows.csv",
        "means.csv",
        "manifest.json",
        "figure_mspe_by_t_r.csv",
        "figure_bic_by_t_r.csv",
        "figure_beta_mse_by_t_r.csv",
        "figure_mspe_by_sigma_r_t.csv",
    ] {
        let left = std::fs::read(a.path().join(file)).unwrap();
        let right = std::fs::read(b.path().join(file)).unwrap();
        assert_eq!(left, right, "{file} differs between identical runs");
    }
    let rows = std::fs::read_to_string(a.path().join("rows.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 4 * 2, "four methods x two replicates");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seeds"].as_array().unwrap().len(), 2);
    assert_eq!(manifest["grid"]["base_seed"], 11);
}

#[test]
fn bench_strict_escalates_budget_markers() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap().to_string();
    let mut args = bench_args(&out_dir);
    args.extend_from_slice(&["--cell-budget-secs", "0.0000001", "--strict"]);
    let out = run(&args);
    assert_eq!(out.status.code(), Some(3));
    // artifacts are still written so the failure can be inspected
    assert!(dir.path().join("rows.csv").exists());
}

#[test]
fn bounds_report_matches_library_numbers() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let fit_dir = dir.path().join("fit");
    assert_ok(&run(&[
        "fit",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--p",
        "1",
        "--q",
        "1",
        "--grid-points",
        "10",
        "--out",
        fit_dir.to_str().unwrap(),
    ]));
    let bounds_dir = dir.path().join("bounds");
    let out = run(&[
        "bounds",
        "--fit",
        fit_dir.join("fit.json").to_str().unwrap(),
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--truth",
        dir.path().join("truth.json").to_str().unwrap(),
        "--strict",
        "--out",
        bounds_dir.to_str().unwrap(),
    ]);
    assert_ok(&out);

    // recompute through the library: the report must agree exactly
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(bounds_dir.join("bounds.json")).unwrap())
            .unwrap();
    let fit =
        RegarmaFit::from_json_str(&std::fs::read_to_string(fit_dir.join("fit.json")).unwrap())
            .unwrap();
    let (ds, _) =
        TimeSeriesDataset::from_csv(&dir.path().join("dataset.csv"), "y").unwrap();
    let (std_ds, tr) = standardize(&ds).unwrap();
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("truth.json")).unwrap())
            .unwrap();
    let sigma = truth["sigma"].as_f64().unwrap() / tr.y_scale;
    let collect = |key: &str| -> Vec<f64> {
        truth[key]
            .as_array()
            .unwrap()
            .iter()
            .map(|v| v.as_f64().unwrap())
            .collect()
    };
    let l1 = |v: &[f64]| v.iter().map(|c| c.abs()).sum::<f64>();
    let beta_std = tr.regression_coefs_to_standardized(&collect("beta0"));
    let design = design_for_fit(&std_ds, &fit).unwrap();
    let inputs = BoundInputs::realized(
        &fit,
        &design,
        sigma,
        Some((l1(&beta_std), l1(&collect("phi0")), l1(&collect("theta0")))),
    )
    .unwrap();
    assert_eq!(doc["bound"].as_f64().unwrap(), mspe_bound(&inputs));
    assert_eq!(
        doc["refined_bound"].as_f64().unwrap(),
        mspe_bound_refined(&inputs)
    );
    let realized = doc["realized_mspe"].as_f64().unwrap();
    assert!(realized < mspe_bound(&inputs));
}

#[test]
fn bounds_notes_pure_regression_reduction() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let fit_dir = dir.path().join("fit");
    assert_ok(&run(&[
        "fit",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--grid-points",
        "8",
        "--out",
        fit_dir.to_str().unwrap(),
    ]));
    let out = run(&[
        "bounds",
        "--fit",
        fit_dir.join("fit.json").to_str().unwrap(),
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
    ]);
    assert_ok(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("reduces to the single regression-block term"),
        "missing reduction note:\n{stdout}"
    );
}

#[test]
fn bounds_shape_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    simulate(dir.path(), &[]);
    let fit_dir = dir.path().join("fit");
    assert_ok(&run(&[
        "fit",
        "--input",
        dir.path().join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
        "--p",
        "1",
        "--grid-points",
        "8",
        "--out",
        fit_dir.to_str().unwrap(),
    ]));
    // a dataset with a different regressor count
    let other = dir.path().join("other");
    assert_ok(&run(&[
        "simulate",
        "--t-len",
        "150",
        "--r",
        "4",
        "--seed",
        "5",
        "--out",
        other.to_str().unwrap(),
    ]));
    let out = run(&[
        "bounds",
        "--fit",
        fit_dir.join("fit.json").to_str().unwrap(),
        "--input",
        other.join("dataset.csv").to_str().unwrap(),
        "--response",
        "y",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
