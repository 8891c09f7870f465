//! Sparse time-series regression with autoregressive and moving-average
//! dynamics (REGARMA).
//!
//! The model explains a response series through exogenous regressors plus
//! lagged copies of the response and of the noise process,
//!
//! ```text
//! y_t = x_t' beta + sum_j phi_j y_{t-j} + sum_i theta_i eps_{t-i} + e_t,
//! ```
//!
//! and estimates all three coefficient blocks jointly under an l1 penalty
//! (optionally adaptive, i.e. reweighted by a pilot fit), so irrelevant
//! regressors and excess lags are dropped exactly rather than merely shrunk.
//! The noise lags are unobserved, so fitting is a two-step procedure: a
//! penalized fit without MA terms produces residuals that stand in for the
//! missing lags, and the full design is then refit. See [`fit`] for the
//! estimator, [`select`] for penalty and order selection, and
//! [`diagnostics::mspe_bound`] for the finite-sample prediction-error
//! guarantees the solver is tested against.
//!
//! Module map:
//! - [`data`]: dataset container, CSV I/O, standardization, lag embedding.
//! - [`lasso`]: weighted coordinate-descent solver with KKT certificates.
//! - [`fit`]: the two-step REGARMA estimator and its serialized form.
//! - [`select`]: penalty grids, BIC/AIC/CV selection, order selection.
//! - [`simulate`]: seeded data generator with known sparse truth.
//! - [`diagnostics`]: prediction-error bounds, residual ACF, fit metrics.
//! - [`harness`]: Monte Carlo experiments comparing estimators across grids.
//!
//! ```
//! use regarma::{
//!     default_grid, generate_dataset, lambda_max_for, select_penalties, standardize,
//!     Criterion, SelectOptions, SimulationConfig,
//! };
//!
//! let cfg = SimulationConfig::new(120, 4, 0.5, 0.5, 1, 1, 7);
//! let (raw, truth) = generate_dataset(&cfg).unwrap();
//! let (ds, _transform) = standardize(&raw).unwrap();
//! let grid = default_grid(lambda_max_for(&ds, 1, 1).unwrap(), 6);
//! let sel =
//!     select_penalties(&ds, 1, 1, &grid, Criterion::Bic, &SelectOptions::default()).unwrap();
//! assert!(sel.best_fit.converged);
//! assert_eq!(sel.best_fit.beta.len(), truth.beta0.len());
//! ```

pub mod data;
pub mod diagnostics;
pub mod harness;
pub mod lasso;
pub mod select;
pub mod simulate;
pub mod error;
pub mod fit;

pub use data::{
    build_lag_design, check_stationarity, standardize, LagDesign, StandardizationTransform,
    StationarityReport, TimeSeriesDataset,
};
pub use diagnostics::{
    compute_metrics, k_star, label_for_orders, model_label, mspe_bound, mspe_bound_refined,
    mspe_hat, residual_acf, write_metrics_csv, BoundInputs, MetricsReport,
};
pub use error::{RegarmaError, Result};
pub use harness::{
    inverse_normal_cdf, run_bias_experiment, run_comparison, run_normality_probe,
    run_oracle_experiment, write_comparison_csv, write_figure_data, write_manifest,
    write_mean_rows_csv, BiasPenaltyPolicy, BiasSummary, ComparisonRow, DgpSpec, ExperimentGrid,
    MethodLabel, NormalitySummary, OracleRow,
};
pub use lasso::{
    kkt_residual, lambda_max, objective_value, solve_weighted_lasso, PenaltyConfig, SolveResult,
    SolverOptions,
};
pub use fit::{
    compute_adaptive_weights, design_for_fit, fit_adaptive_regarma, fit_adaptive_regarma_masked,
    fit_regar, fit_regarma, fit_regarma_masked, predict_one_step, AdaptiveOptions, FitDocument,
    FitOptions, FitSpec, RegarmaFit, COEF_ZERO_TOL,
};
pub use select::{
    cross_validate, default_grid, independent_grid, information_criterion, lambda_max_for,
    select_orders_method_a, select_orders_method_b, select_penalties, Criterion, CriterionRow,
    PenaltyScales, SelectOptions, SelectionResult,
};
pub use simulate::{
    derive_seed, generate_dataset, generate_with_truth, sample_sparse_beta,
    sample_stationary_coeffs, SimulationConfig, SimulationTruth,
};
