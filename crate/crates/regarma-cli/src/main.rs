//! Command-line front end: fit penalized dynamic regressions from CSV,
//! search penalties and lag orders, simulate datasets with known
//! coefficients, run the Monte Carlo comparison grid, and audit
//! prediction-error bounds for a saved fit.
//!
//! Exit codes: 0 success, 2 input/configuration error (the message names
//! the offending column or file), 3 numerical failure or a tripwire fired
//! under --strict.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use regarma::{
    compute_metrics, default_grid, design_for_fit, label_for_orders, lambda_max_for, mspe_bound,
    mspe_bound_refined, mspe_hat, residual_acf, run_comparison, select_orders_method_a,
    select_orders_method_b, select_penalties, standardize, write_comparison_csv, write_figure_data,
    write_manifest, write_mean_rows_csv, write_metrics_csv, BoundInputs, Criterion, ExperimentGrid,
    MetricsReport, RegarmaError, RegarmaFit, SelectOptions, SelectionResult, SimulationConfig,
    SimulationTruth, TimeSeriesDataset,
};

#[derive(Parser)]
#[command(
    name = "regarma",
    version,
    about = "Sparse regression with lagged responses and lagged residuals"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit penalized models to a CSV dataset; writes fit.json, metrics.csv,
    /// acf.csv and table.csv into the output directory.
    Fit(FitArgs),
    /// Search penalties (and lag orders) and write the criterion table.
    Select(SelectArgs),
    /// Generate a synthetic dataset with known coefficients.
    Simulate(SimulateArgs),
    /// Run the Monte Carlo comparison grid and emit result CSVs + manifest.
    Bench(BenchArgs),
    /// Recompute prediction-error bounds for a saved fit.
    Bounds(BoundsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Bic,
    Aic,
    Cv,
}

impl CriterionArg {
    fn criterion(self) -> Criterion {
        match self {
            CriterionArg::Bic => Criterion::Bic,
            CriterionArg::Aic => Criterion::Aic,
            CriterionArg::Cv => Criterion::Cv,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OrderMethodArg {
    /// Exhaustive search over every sub-order pair.
    A,
    /// One maximal-order fit; orders are the largest surviving lags.
    B,
}

#[derive(Args)]
struct FitArgs {
    /// Input CSV with one response column and numeric regressors.
    #[arg(long)]
    input: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
    /// Response-lag order for a single fit at exact orders.
    #[arg(long, conflicts_with_all = ["pmax", "qmax"])]
    p: Option<usize>,
    /// Residual-lag order for a single fit at exact orders.
    #[arg(long, conflicts_with_all = ["pmax", "qmax"])]
    q: Option<usize>,
    /// Maximum response-lag order; with --qmax, compares the four model
    /// families (lasso, AR-only, MA-only, full) on one shared sample.
    #[arg(long, requires = "qmax")]
    pmax: Option<usize>,
    /// Maximum residual-lag order.
    #[arg(long, requires = "pmax")]
    qmax: Option<usize>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    criterion: CriterionArg,
    /// Fold count when --criterion cv.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Adaptively weighted penalties (pass false for plain ones).
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    adaptive: bool,
    /// How lag orders are chosen in family mode.
    #[arg(long, value_enum, default_value_t = OrderMethodArg::B)]
    order_method: OrderMethodArg,
    /// Penalty grid resolution.
    #[arg(long, default_value_t = 15)]
    grid_points: usize,
    /// Output directory (created if absent).
    #[arg(long, default_value = "regarma_out")]
    out: PathBuf,
    /// Escalate numerical warnings (non-convergence) to exit 3.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    response: String,
    /// Fixed response-lag order (penalty search only).
    #[arg(long, conflicts_with_all = ["pmax", "qmax"])]
    p: Option<usize>,
    /// Fixed residual-lag order (penalty search only).
    #[arg(long, conflicts_with_all = ["pmax", "qmax"])]
    q: Option<usize>,
    /// Maximum response-lag order for order selection.
    #[arg(long, requires = "qmax")]
    pmax: Option<usize>,
    /// Maximum residual-lag order for order selection.
    #[arg(long, requires = "pmax")]
    qmax: Option<usize>,
    #[arg(long, value_enum, default_value_t = CriterionArg::Bic)]
    criterion: CriterionArg,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    adaptive: bool,
    #[arg(long, value_enum, default_value_t = OrderMethodArg::B)]
    order_method: OrderMethodArg,
    #[arg(long, default_value_t = 15)]
    grid_points: usize,
    #[arg(long, default_value = "regarma_out")]
    out: PathBuf,
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Series length.
    #[arg(long, default_value_t = 100)]
    t_len: usize,
    /// Number of regressors.
    #[arg(long, default_value_t = 25)]
    r: usize,
    /// Fraction of regression coefficients forced to exact zero.
    #[arg(long, default_value_t = 0.5)]
    zero_prop: f64,
    /// Innovation standard deviation.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    /// Response-lag order of the generating model.
    #[arg(long, default_value_t = 1)]
    p: usize,
    /// Residual-lag order of the generating model.
    #[arg(long, default_value_t = 1)]
    q: usize,
    /// RNG seed (required: all randomness flows from this flag).
    #[arg(long)]
    seed: u64,
    /// Transient steps discarded before the retained window.
    #[arg(long, default_value_t = 500)]
    burn_in: usize,
    #[arg(long, default_value = "regarma_out")]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Series lengths, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![50, 100, 150, 200, 250])]
    t_values: Vec<usize>,
    /// Regressor counts, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![25, 75, 200, 300, 400])]
    r_values: Vec<usize>,
    /// Innovation standard deviations, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 1.5])]
    sigma_values: Vec<f64>,
    /// Zero proportions of the true coefficient vector, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.9, 0.5, 0.1])]
    zero_props: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    replicates: usize,
    /// Base RNG seed (required: all randomness flows from this flag).
    #[arg(long)]
    seed: u64,
    /// Response-lag order of the generating model.
    #[arg(long, default_value_t = 2)]
    dgp_p: usize,
    /// Residual-lag order of the generating model.
    #[arg(long, default_value_t = 1)]
    dgp_q: usize,
    #[arg(long, default_value_t = 15)]
    grid_points: usize,
    /// Wall-clock budget per cell; over-budget cells abort with a marker.
    #[arg(long, default_value_t = 600.0)]
    cell_budget_secs: f64,
    #[arg(long, default_value = "regarma_out")]
    out: PathBuf,
    /// Exit 3 if any cell aborted or any replicate failed.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct BoundsArgs {
    /// fit.json produced by the fit command.
    #[arg(long)]
    fit: PathBuf,
    /// The CSV the model was fit on.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    response: String,
    /// truth.json from the simulate command; enables the realized
    /// prediction-error comparison and truth-feasible budgets.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Noise scale on the fitting (standardized) scale; overrides both the
    /// truth file and the plug-in residual estimate.
    #[arg(long)]
    sigma: Option<f64>,
    /// Also write the report as bounds.json into this directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Exit 3 if the realized prediction error exceeds either bound.
    #[arg(long)]
    strict: bool,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<RegarmaError> for Failure {
    fn from(err: RegarmaError) -> Self {
        Failure {
            code: 2,
            message: err.to_string(),
        }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Self {
        Failure {
            code: 2,
            message: format!("json error: {err}"),
        }
    }
}

fn numerical(message: impl Into<String>) -> Failure {
    Failure {
        code: 3,
        message: message.into(),
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() {
    let cli = Cli::parse();
    configure_threads();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(&args),
        Command::Select(args) => cmd_select(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Bench(args) => cmd_bench(&args),
        Command::Bounds(args) => cmd_bounds(&args),
    };
    if let Err(failure) = outcome {
        eprintln!("error: {}", failure.message);
        std::process::exit(failure.code);
    }
}

/// REGARMA_THREADS caps the rayon pool; results are identical at any
/// thread count, this only trades latency for core usage.
fn configure_threads() {
    if let Ok(raw) = std::env::var("REGARMA_THREADS") {
        match raw.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring REGARMA_THREADS={raw} (want a positive integer)"),
        }
    }
}

fn load_dataset(input: &Path, response: &str) -> Result<TimeSeriesDataset, Failure> {
    let (ds, skipped) = TimeSeriesDataset::from_csv(input, response)?;
    if !skipped.is_empty() {
        eprintln!(
            "note: skipped non-numeric column(s): {}",
            skipped.join(", ")
        );
    }
    Ok(ds)
}

fn ensure_dir(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir)
        .map_err(|e| input_error(format!("cannot create {}: {e}", dir.display())))
}

/// Non-finite results are always fatal; non-convergence is a warning that
/// --strict escalates.
fn check_numerics(fit: &RegarmaFit, strict: bool) -> CmdResult {
    if !fit.sigma2_hat.is_finite() || !fit.objective.is_finite() {
        return Err(numerical("fit produced non-finite values"));
    }
    if !fit.converged {
        let message = format!(
            "solver stopped at the iteration cap (subgradient violation {:.3e})",
            fit.kkt_violation
        );
        if strict {
            return Err(numerical(message));
        }
        eprintln!("warning: {message}");
    }
    Ok(())
}

fn select_options(adaptive: bool, folds: usize) -> SelectOptions {
    SelectOptions {
        adaptive,
        folds,
        ..SelectOptions::default()
    }
}

fn run_selection(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    method: OrderMethodArg,
    exact_orders: bool,
    criterion: Criterion,
    opts: &SelectOptions,
    grid_points: usize,
) -> Result<SelectionResult, Failure> {
    let grid = default_grid(lambda_max_for(ds, p, q)?, grid_points);
    let sel = if exact_orders {
        select_penalties(ds, p, q, &grid, criterion, opts)?
    } else {
        match method {
            OrderMethodArg::A => select_orders_method_a(ds, p, q, &grid, criterion, opts)?,
            OrderMethodArg::B => select_orders_method_b(ds, p, q, &grid, criterion, opts)?,
        }
    };
    Ok(sel)
}

fn write_acf_csv(fit: &RegarmaFit, path: &Path) -> Result<(), Failure> {
    let residuals = fit
        .residuals
        .as_slice()
        .expect("residuals are contiguous")
        .to_vec();
    let max_lag = 20.min(residuals.len().saturating_sub(1)).max(1);
    let acf = residual_acf(&residuals, max_lag)?;
    let mut text = String::from("lag,acf\n");
    for (i, v) in acf.iter().enumerate() {
        text.push_str(&format!("{},{v}\n", i + 1));
    }
    std::fs::write(path, text).map_err(|e| Failure::from(RegarmaError::from(e)))
}

fn cmd_fit(args: &FitArgs) -> CmdResult {
    let ds = load_dataset(&args.input, &args.response)?;
    let (std_ds, _) = standardize(&ds)?;
    ensure_dir(&args.out)?;
    let criterion = args.criterion.criterion();
    let mut opts = select_options(args.adaptive, args.folds);

    // (selection result, label from the orders that actually survived)
    let mut rows: Vec<(SelectionResult, String)> = Vec::new();
    match (args.pmax, args.qmax) {
        (Some(pmax), Some(qmax)) => {
            // Four model families on one shared sample: every fit conditions
            // on the same first pmax + qmax observations so the criterion
            // values are comparable across rows.
            opts.fit.fixed_t0 = Some(pmax + qmax);
            for (pm, qm) in [(0, 0), (pmax, 0), (0, qmax), (pmax, qmax)] {
                let sel = run_selection(
                    &std_ds,
                    pm,
                    qm,
                    args.order_method,
                    false,
                    criterion,
                    &opts,
                    args.grid_points,
                )?;
                check_numerics(&sel.best_fit, args.strict)?;
                let label =
                    label_for_orders(args.adaptive, sel.best_orders.0, sel.best_orders.1);
                rows.push((sel, label));
            }
        }
        (None, None) => {
            let (p, q) = (args.p.unwrap_or(0), args.q.unwrap_or(0));
            let sel = run_selection(
                &std_ds,
                p,
                q,
                args.order_method,
                true,
                criterion,
                &opts,
                args.grid_points,
            )?;
            check_numerics(&sel.best_fit, args.strict)?;
            let label = label_for_orders(args.adaptive, p, q);
            rows.push((sel, label));
        }
        _ => unreachable!("clap enforces pmax/qmax pairing"),
    }

    let mut reports: Vec<MetricsReport> = Vec::new();
    for (sel, label) in &rows {
        let mut report = compute_metrics(&sel.best_fit)?;
        report.model_label = label.clone();
        reports.push(report);
    }
    // the full / highest-order family is the headline model
    let (primary, _) = rows.last().expect("at least one fit");

    std::fs::write(args.out.join("fit.json"), primary.best_fit.to_json_string()?)
        .map_err(RegarmaError::from)?;
    write_metrics_csv(&reports, &args.out.join("metrics.csv"))?;
    write_acf_csv(&primary.best_fit, &args.out.join("acf.csv"))?;
    primary.write_table_csv(&args.out.join("table.csv"))?;

    for report in &reports {
        println!(
            "{}: mse {:.6}, mae {:.6}, bic {:.3}, df {}",
            report.model_label, report.mse, report.mae, report.bic, report.df
        );
    }
    println!(
        "selected scales: lambda {:.6e}, gamma {:.6e}, tau {:.6e}",
        primary.best_scales.lambda, primary.best_scales.gamma, primary.best_scales.tau
    );
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_select(args: &SelectArgs) -> CmdResult {
    let ds = load_dataset(&args.input, &args.response)?;
    let (std_ds, _) = standardize(&ds)?;
    ensure_dir(&args.out)?;
    let criterion = args.criterion.criterion();
    let opts = select_options(args.adaptive, args.folds);

    let (p, q, exact) = match (args.pmax, args.qmax) {
        (Some(pmax), Some(qmax)) => (pmax, qmax, false),
        (None, None) => (args.p.unwrap_or(0), args.q.unwrap_or(0), true),
        _ => unreachable!("clap enforces pmax/qmax pairing"),
    };
    let sel = run_selection(
        &std_ds,
        p,
        q,
        args.order_method,
        exact,
        criterion,
        &opts,
        args.grid_points,
    )?;
    check_numerics(&sel.best_fit, args.strict)?;

    let winner_value = sel
        .table
        .iter()
        .find(|row| {
            row.scales == sel.best_scales
                && row.p == sel.best_fit.spec.p
                && row.q == sel.best_fit.spec.q
        })
        .map(|row| row.value);
    let label = label_for_orders(args.adaptive, sel.best_orders.0, sel.best_orders.1);
    let summary = serde_json::json!({
        "criterion": format!("{:?}", sel.criterion).to_lowercase(),
        "best_orders": { "p": sel.best_orders.0, "q": sel.best_orders.1 },
        "best_scales": sel.best_scales,
        "criterion_value": winner_value,
        "df": sel.best_fit.df,
        "n": sel.best_fit.n,
        "model": label,
        "candidates": sel.table.len(),
    });

    sel.write_table_csv(&args.out.join("table.csv"))?;
    std::fs::write(args.out.join("fit.json"), sel.best_fit.to_json_string()?)
        .map_err(RegarmaError::from)?;
    std::fs::write(
        args.out.join("selection.json"),
        serde_json::to_string_pretty(&summary)?,
    )
    .map_err(RegarmaError::from)?;

    println!(
        "selected {} (df {}, n {}) over {} candidates",
        label,
        sel.best_fit.df,
        sel.best_fit.n,
        sel.table.len()
    );
    if let Some(v) = winner_value {
        println!("criterion value: {v:.6}");
    }
    println!("artifacts written to {}", args.out.display());
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> CmdResult {
    let mut cfg = SimulationConfig::new(
        args.t_len,
        args.r,
        args.zero_prop,
        args.sigma,
        args.p,
        args.q,
        args.seed,
    );
    cfg.burn_in = args.burn_in;
    let (ds, truth) = regarma::generate_dataset(&cfg)?;
    ensure_dir(&args.out)?;
    ds.to_csv(&args.out.join("dataset.csv"), "y")?;
    std::fs::write(
        args.out.join("truth.json"),
        serde_json::to_string_pretty(&truth)?,
    )
    .map_err(RegarmaError::from)?;
    let zeros = truth.beta0.iter().filter(|b| **b == 0.0).count();
    println!(
        "wrote {} rows x {} columns ({} zero coefficients) to {}",
        ds.t_len(),
        ds.n_regressors() + 1,
        zeros,
        args.out.display()
    );
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let grid = ExperimentGrid {
        t_values: args.t_values.clone(),
        r_values: args.r_values.clone(),
        sigma_values: args.sigma_values.clone(),
        zero_props: args.zero_props.clone(),
        replicates: args.replicates,
        base_seed: args.seed,
        dgp_p: args.dgp_p,
        dgp_q: args.dgp_q,
        grid_points: args.grid_points,
        cell_budget_secs: args.cell_budget_secs,
    };
    let rows = run_comparison(&grid)?;
    ensure_dir(&args.out)?;
    write_comparison_csv(&rows, &args.out.join("rows.csv"))?;
    write_mean_rows_csv(&rows, &args.out.join("means.csv"))?;
    write_figure_data(&rows, &args.out)?;
    write_manifest(&grid, &args.out.join("manifest.json"))?;

    let flagged = rows.iter().filter(|r| r.error.is_some()).count();
    println!(
        "{} result rows ({} flagged) written to {}",
        rows.len(),
        flagged,
        args.out.display()
    );
    if flagged > 0 {
        for row in rows.iter().filter(|r| r.error.is_some()).take(5) {
            eprintln!(
                "flagged: {} T={} r={} sigma={} rep {}: {}",
                row.method.as_str(),
                row.t_len,
                row.r,
                row.sigma,
                row.replicate,
                row.error.as_deref().unwrap_or("")
            );
        }
        if args.strict {
            return Err(numerical(format!(
                "{flagged} of {} rows carry failure markers",
                rows.len()
            )));
        }
    }
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> CmdResult {
    let fit_text = std::fs::read_to_string(&args.fit)
        .map_err(|e| input_error(format!("cannot read {}: {e}", args.fit.display())))?;
    let fit = RegarmaFit::from_json_str(&fit_text)?;
    let ds = load_dataset(&args.input, &args.response)?;
    let (std_ds, transform) = standardize(&ds)?;
    let design = design_for_fit(&std_ds, &fit)?;

    let truth: Option<SimulationTruth> = match &args.truth {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| input_error(format!("cannot read {}: {e}", path.display())))?;
            let truth: SimulationTruth = serde_json::from_str(&text)?;
            if truth.errors.len() != ds.t_len() {
                return Err(input_error(format!(
                    "truth file covers {} time points but the dataset has {}",
                    truth.errors.len(),
                    ds.t_len()
                )));
            }
            Some(truth)
        }
        None => None,
    };

    let l1 = |v: &[f64]| v.iter().map(|c| c.abs()).sum::<f64>();
    let (sigma, sigma_source) = if let Some(s) = args.sigma {
        (s, "from --sigma")
    } else if let Some(t) = &truth {
        (t.sigma / transform.y_scale, "truth file, standardized scale")
    } else {
        (fit.sigma2_hat.sqrt(), "plug-in residual estimate")
    };
    let truth_l1 = truth.as_ref().map(|t| {
        let beta_std = transform.regression_coefs_to_standardized(&t.beta0);
        (l1(&beta_std), l1(&t.phi0), l1(&t.theta0))
    });

    let inputs = BoundInputs::realized(&fit, &design, sigma, truth_l1)?;
    let basic = mspe_bound(&inputs);
    let refined = mspe_bound_refined(&inputs);

    let realized_mspe = match &truth {
        Some(t) => {
            let oracle: Vec<f64> = fit
                .times
                .iter()
                .map(|&idx| (ds.y[idx] - t.errors[idx] - transform.y_mean) / transform.y_scale)
                .collect();
            Some(mspe_hat(
                fit.fitted.as_slice().expect("fitted is contiguous"),
                &oracle,
            )?)
        }
        None => None,
    };

    let label = label_for_orders(fit.spec.adaptive, fit.spec.p, fit.spec.q);
    println!("prediction-error bound report");
    println!("  model: {label} (df {}, n {})", fit.df, fit.n);
    println!(
        "  blocks (X, AR, MA): counts ({}, {}, {})",
        inputs.r, inputs.p, inputs.q
    );
    println!(
        "  coefficient l1 budgets K: X {:.6}, AR {:.6}, MA {:.6}{}",
        inputs.per_block_k.0,
        inputs.per_block_k.1,
        inputs.per_block_k.2,
        if truth.is_some() {
            " (widened to cover the true coefficients)"
        } else {
            ""
        }
    );
    println!(
        "  design sup-norms M: X {:.6}, AR {:.6}, MA {:.6}",
        inputs.per_block_m.0, inputs.per_block_m.1, inputs.per_block_m.2
    );
    println!("  sigma = {sigma:.6} ({sigma_source})");
    println!("  bound          = {basic:.6}");
    println!("  refined bound  = {refined:.6}");
    if fit.spec.p == 0 && fit.spec.q == 0 {
        println!("  note: p = q = 0, the bound reduces to the single regression-block term");
    }
    if let Some(m) = realized_mspe {
        println!("  realized prediction error = {m:.6}");
        println!(
            "  slack: bound / realized = {:.2}, refined / realized = {:.2}",
            basic / m,
            refined / m
        );
    }

    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let doc = serde_json::json!({
            "model": label,
            "n": fit.n,
            "blocks": { "x": inputs.r, "ar": inputs.p, "ma": inputs.q },
            "k": { "x": inputs.per_block_k.0, "ar": inputs.per_block_k.1, "ma": inputs.per_block_k.2 },
            "m": { "x": inputs.per_block_m.0, "ar": inputs.per_block_m.1, "ma": inputs.per_block_m.2 },
            "sigma": sigma,
            "sigma_source": sigma_source,
            "bound": basic,
            "refined_bound": refined,
            "realized_mspe": realized_mspe,
        });
        std::fs::write(out.join("bounds.json"), serde_json::to_string_pretty(&doc)?)
            .map_err(RegarmaError::from)?;
        println!("report written to {}", out.join("bounds.json").display());
    }

    if args.strict {
        if let Some(m) = realized_mspe {
            if m > basic || m > refined {
                return Err(numerical(format!(
                    "realized prediction error {m:.6} exceeds a bound (bound {basic:.6}, refined {refined:.6})"
                )));
            }
        }
    }
    Ok(())
}
