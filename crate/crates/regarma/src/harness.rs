//! Scripted Monte Carlo experiments: simulation-based comparisons of the
//! model family against the pure-regression baseline, plus probes of the
//! asymptotic claims (exact-zero recovery, shrinkage bias, approximate
//! normality of the studentized estimates) at desk scale.

use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, StandardizationTransform, TimeSeriesDataset};
use crate::diagnostics::mspe_hat;
use crate::error::{RegarmaError, Result};
use crate::fit::{
    fit_adaptive_regarma, fit_regarma, AdaptiveOptions, FitOptions, RegarmaFit, COEF_ZERO_TOL,
};
use crate::lasso::PenaltyConfig;
use crate::select::{
    default_grid, information_criterion, lambda_max_for, select_penalties, Criterion,
    SelectOptions,
};
use crate::simulate::{derive_seed, generate_with_truth, SimulationConfig, SimulationTruth};

/// Full factorial experiment layout. Every (T, r, sigma, zero proportion)
/// combination is one cell; each cell runs `replicates` independent
/// datasets whose generating orders are (dgp_p, dgp_q).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub t_values: Vec<usize>,
    pub r_values: Vec<usize>,
    pub sigma_values: Vec<f64>,
    pub zero_props: Vec<f64>,
    pub replicates: usize,
    pub base_seed: u64,
    pub dgp_p: usize,
    pub dgp_q: usize,
    /// Penalty-grid resolution for per-fit selection.
    pub grid_points: usize,
    /// Wall-clock budget per cell; replicates that would start after the
    /// budget is spent are recorded as aborted rows, never silently dropped.
    pub cell_budget_secs: f64,
}

impl Default for ExperimentGrid {
    fn default() -> Self {
        Self {
            t_values: vec![50, 100, 150, 200, 250],
            r_values: vec![25, 75, 200, 300, 400],
            sigma_values: vec![0.5, 1.0, 1.5],
            zero_props: vec![0.9, 0.5, 0.1],
            replicates: 10,
            base_seed: 42,
            dgp_p: 2,
            dgp_q: 1,
            grid_points: 15,
            cell_budget_secs: 600.0,
        }
    }
}

impl ExperimentGrid {
    pub fn validate(&self) -> Result<()> {
        if self.t_values.is_empty()
            || self.r_values.is_empty()
            || self.sigma_values.is_empty()
            || self.zero_props.is_empty()
        {
            return Err(RegarmaError::InvalidConfig(
                "experiment grid axes must be nonempty".into(),
            ));
        }
        if self.replicates == 0 || self.grid_points == 0 {
            return Err(RegarmaError::InvalidConfig(
                "replicates and grid_points must be at least 1".into(),
            ));
        }
        if !(self.cell_budget_secs > 0.0) {
            return Err(RegarmaError::InvalidConfig(
                "cell budget must be positive".into(),
            ));
        }
        if self.sigma_values.iter().any(|s| !(*s > 0.0)) {
            return Err(RegarmaError::InvalidConfig("sigma must be positive".into()));
        }
        if self.zero_props.iter().any(|z| !(0.0..1.0).contains(z)) {
            return Err(RegarmaError::InvalidConfig(
                "zero proportions must lie in [0, 1)".into(),
            ));
        }
        Ok(())
    }

    fn cells(&self) -> Vec<(usize, usize, f64, f64)> {
        let mut out = Vec::new();
        for &t in &self.t_values {
            for &r in &self.r_values {
                for &sigma in &self.sigma_values {
                    for &zp in &self.zero_props {
                        out.push((t, r, sigma, zp));
                    }
                }
            }
        }
        out
    }
}

/// The four estimators compared in every cell. The pure-regression baseline
/// runs through the same solver with p = q = 0 so differences isolate the
/// model, not the optimizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MethodLabel {
    AdaptiveLasso,
    AdaptiveRegarma,
    Regar,
    Regma,
}

impl MethodLabel {
    pub const ALL: [MethodLabel; 4] = [
        MethodLabel::AdaptiveLasso,
        MethodLabel::AdaptiveRegarma,
        MethodLabel::Regar,
        MethodLabel::Regma,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MethodLabel::AdaptiveLasso => "adaptive_lasso",
            MethodLabel::AdaptiveRegarma => "adaptive_regarma",
            MethodLabel::Regar => "regar",
            MethodLabel::Regma => "regma",
        }
    }

    /// Fit shape for this method given the generating orders.
    fn orders(self, dgp_p: usize, dgp_q: usize) -> (usize, usize, bool) {
        match self {
            MethodLabel::AdaptiveLasso => (0, 0, true),
            MethodLabel::AdaptiveRegarma => (dgp_p, dgp_q, true),
            MethodLabel::Regar => (dgp_p, 0, false),
            MethodLabel::Regma => (0, dgp_q, false),
        }
    }
}

/// One method on one replicate of one cell. Metric fields are NaN when
/// `error` is set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: MethodLabel,
    pub t_len: usize,
    pub r: usize,
    pub sigma: f64,
    pub zero_prop: f64,
    pub replicate: usize,
    /// Mean squared prediction error against the noise-free signal.
    pub mspe: f64,
    pub bic: f64,
    /// Mean squared error of the regression coefficients, original scale.
    pub beta_mse: f64,
    /// Fraction of regression coordinates whose zero/nonzero status matches
    /// the truth.
    pub support_recovery: f64,
    pub error: Option<String>,
}

fn error_row(
    method: MethodLabel,
    cell: (usize, usize, f64, f64),
    replicate: usize,
    message: String,
) -> ComparisonRow {
    ComparisonRow {
        method,
        t_len: cell.0,
        r: cell.1,
        sigma: cell.2,
        zero_prop: cell.3,
        replicate,
        mspe: f64::NAN,
        bic: f64::NAN,
        beta_mse: f64::NAN,
        support_recovery: f64::NAN,
        error: Some(message),
    }
}

fn select_bic_fit(
    std: &TimeSeriesDataset,
    p: usize,
    q: usize,
    adaptive: bool,
    grid_points: usize,
) -> Result<RegarmaFit> {
    let lmax = lambda_max_for(std, p, q)?;
    let grid = default_grid(lmax, grid_points);
    let opts = SelectOptions {
        adaptive,
        ..SelectOptions::default()
    };
    Ok(select_penalties(std, p, q, &grid, Criterion::Bic, &opts)?.best_fit)
}

fn score_method(
    method: MethodLabel,
    cell: (usize, usize, f64, f64),
    replicate: usize,
    ds: &TimeSeriesDataset,
    std: &TimeSeriesDataset,
    transform: &StandardizationTransform,
    truth: &SimulationTruth,
    dgp_p: usize,
    dgp_q: usize,
    grid_points: usize,
) -> Result<ComparisonRow> {
    let (p, q, adaptive) = method.orders(dgp_p, dgp_q);
    let fit = select_bic_fit(std, p, q, adaptive, grid_points)?;

    // noise-free signal on the standardized scale, this fit's rows
    let oracle: Vec<f64> = fit
        .times
        .iter()
        .map(|&t| (ds.y[t] - truth.errors[t] - transform.y_mean) / transform.y_scale)
        .collect();
    let mspe = mspe_hat(fit.fitted.as_slice().expect("contiguous"), &oracle)?;
    let bic = information_criterion(&fit, Criterion::Bic)?;

    let beta_orig = transform.regression_coefs_to_original(&fit.beta);
    let r = truth.beta0.len();
    let beta_mse = beta_orig
        .iter()
        .zip(&truth.beta0)
        .map(|(est, tru)| (est - tru) * (est - tru))
        .sum::<f64>()
        / r as f64;
    let matches = fit
        .beta
        .iter()
        .zip(&truth.beta0)
        .filter(|(est, tru)| (est.abs() > COEF_ZERO_TOL) == (**tru != 0.0))
        .count();
    Ok(ComparisonRow {
        method,
        t_len: cell.0,
        r: cell.1,
        sigma: cell.2,
        zero_prop: cell.3,
        replicate,
        mspe,
        bic,
        beta_mse,
        support_recovery: matches as f64 / r as f64,
        error: None,
    })
}

/// Runs the full factorial comparison. Cells execute in parallel; rows come
/// back in deterministic (cell, replicate, method) order with per-task seeds
/// derived from (base_seed, cell index, replicate index).
pub fn run_comparison(grid: &ExperimentGrid) -> Result<Vec<ComparisonRow>> {
    grid.validate()?;
    let cells = grid.cells();
    let per_cell: Vec<Vec<ComparisonRow>> = cells
        .par_iter()
        .enumerate()
        .map(|(cell_idx, &cell)| {
            let started = Instant::now();
            let mut rows = Vec::with_capacity(grid.replicates * MethodLabel::ALL.len());
            for rep in 0..grid.replicates {
                if started.elapsed().as_secs_f64() >= grid.cell_budget_secs {
                    for method in MethodLabel::ALL {
                        rows.push(error_row(
                            method,
                            cell,
                            rep,
                            "cell budget exceeded".into(),
                        ));
                    }
                    continue;
                }
                let (t_len, r, sigma, zp) = cell;
                let seed = derive_seed(grid.base_seed, cell_idx as u64, rep as u64);
                let cfg =
                    SimulationConfig::new(t_len, r, zp, sigma, grid.dgp_p, grid.dgp_q, seed);
                let prepared = crate::simulate::generate_dataset(&cfg)
                    .and_then(|(ds, truth)| standardize(&ds).map(|(std, tr)| (ds, std, tr, truth)));
                match prepared {
                    Err(e) => {
                        for method in MethodLabel::ALL {
                            rows.push(error_row(method, cell, rep, e.to_string()));
                        }
                    }
                    Ok((ds, std, tr, truth)) => {
                        for method in MethodLabel::ALL {
                            let row = score_method(
                                method,
                                cell,
                                rep,
                                &ds,
                                &std,
                                &tr,
                                &truth,
                                grid.dgp_p,
                                grid.dgp_q,
                                grid.grid_points,
                            )
                            .unwrap_or_else(|e| error_row(method, cell, rep, e.to_string()));
                            rows.push(row);
                        }
                    }
                }
            }
            rows
        })
        .collect();
    Ok(per_cell.into_iter().flatten().collect())
}

/// One sample-size point of the exact-zero probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub t_len: usize,
    /// Fraction of truly zero regression coordinates estimated exactly zero.
    pub adaptive_zero_recovery: f64,
    /// Fraction of truly nonzero coordinates kept nonzero.
    pub adaptive_nonzero_coverage: f64,
    pub plain_zero_recovery: f64,
    pub plain_nonzero_coverage: f64,
}

/// Data-generating recipe shared by the probe experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DgpSpec {
    pub r: usize,
    pub zero_prop: f64,
    pub sigma: f64,
    pub p: usize,
    pub q: usize,
}

fn rate(hits: usize, total: usize) -> f64 {
    if total == 0 {
        1.0 // vacuously perfect when the class is empty
    } else {
        hits as f64 / total as f64
    }
}

/// Probes exact-zero recovery as the sample grows. Both variants fit at the
/// same base penalty level c n^(1/4) — the adaptive-weight rate under which
/// the reweighted estimator is expected to recover the true zeros while the
/// plain one keeps small nonzero noise coefficients.
pub fn run_oracle_experiment(
    t_values: &[usize],
    replicates: usize,
    dgp: &DgpSpec,
    base_seed: u64,
    penalty_const: f64,
) -> Result<Vec<OracleRow>> {
    if t_values.is_empty() || replicates == 0 {
        return Err(RegarmaError::InvalidConfig(
            "need at least one sample size and one replicate".into(),
        ));
    }
    if !(penalty_const > 0.0) {
        return Err(RegarmaError::InvalidConfig(
            "penalty constant must be positive".into(),
        ));
    }
    t_values
        .par_iter()
        .enumerate()
        .map(|(t_idx, &t_len)| {
            let mut counts = [0usize; 4]; // [ad zero, ad nonzero, plain zero, plain nonzero]
            let mut totals = [0usize; 2]; // [true zeros, true nonzeros]
            for rep in 0..replicates {
                let seed = derive_seed(base_seed, t_idx as u64, rep as u64);
                let cfg = SimulationConfig::new(
                    t_len, dgp.r, dgp.zero_prop, dgp.sigma, dgp.p, dgp.q, seed,
                );
                let (ds, truth) = crate::simulate::generate_dataset(&cfg)?;
                let (std, _) = standardize(&ds)?;
                let n = t_len - dgp.p - dgp.q;
                let base = penalty_const * (n as f64).powf(0.25);
                let pen = PenaltyConfig::uniform(dgp.p, dgp.q, dgp.r, base)?;
                let adaptive = fit_adaptive_regarma(
                    &std,
                    dgp.p,
                    dgp.q,
                    &pen,
                    &AdaptiveOptions::default(),
                    &FitOptions::default(),
                )?;
                let plain = fit_regarma(&std, dgp.p, dgp.q, &pen, &FitOptions::default())?;
                for j in 0..dgp.r {
                    let is_zero = truth.beta0[j] == 0.0;
                    totals[usize::from(!is_zero)] += 1;
                    let ad_zero = adaptive.beta[j].abs() <= COEF_ZERO_TOL;
                    let pl_zero = plain.beta[j].abs() <= COEF_ZERO_TOL;
                    if is_zero {
                        counts[0] += usize::from(ad_zero);
                        counts[2] += usize::from(pl_zero);
                    } else {
                        counts[1] += usize::from(!ad_zero);
                        counts[3] += usize::from(!pl_zero);
                    }
                }
            }
            Ok(OracleRow {
                t_len,
                adaptive_zero_recovery: rate(counts[0], totals[0]),
                adaptive_nonzero_coverage: rate(counts[1], totals[1]),
                plain_zero_recovery: rate(counts[2], totals[0]),
                plain_nonzero_coverage: rate(counts[3], totals[1]),
            })
        })
        .collect()
}

/// Penalty policy for the bias probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiasPenaltyPolicy {
    BicSelected,
    /// Shared scale fixed at this fraction of the all-zero penalty.
    FixedFraction(f64),
    /// Base level c n^(1/4), the rate the adaptive-weight theory prescribes;
    /// the interesting output here is the adaptive variant.
    OracleRate(f64),
}

/// Paired shrinkage-bias estimates: mean over replicates and coordinates of
/// (estimate - truth) for the plain and adaptive variants on the same data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BiasSummary {
    pub mean_bias_plain: f64,
    pub mean_bias_adaptive: f64,
    pub se_plain: f64,
    pub se_adaptive: f64,
    pub replicates: usize,
}

pub fn run_bias_experiment(
    replicates: usize,
    t_len: usize,
    beta0: &[f64],
    phi0: &[f64],
    theta0: &[f64],
    sigma: f64,
    policy: BiasPenaltyPolicy,
    base_seed: u64,
) -> Result<BiasSummary> {
    if replicates == 0 {
        return Err(RegarmaError::InvalidConfig(
            "need at least one replicate".into(),
        ));
    }
    if beta0.is_empty() || beta0.iter().any(|b| *b <= 0.0) {
        return Err(RegarmaError::InvalidConfig(
            "the bias probe requires strictly positive regression truth".into(),
        ));
    }
    match policy {
        BiasPenaltyPolicy::FixedFraction(f) | BiasPenaltyPolicy::OracleRate(f) if !(f > 0.0) => {
            return Err(RegarmaError::InvalidConfig(
                "penalty fraction must be positive".into(),
            ));
        }
        _ => {}
    }
    let (p, q, r) = (phi0.len(), theta0.len(), beta0.len());
    let per_rep: Vec<Result<(f64, f64)>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(base_seed, 0, rep as u64);
            let cfg = SimulationConfig::new(t_len, r, 0.0, sigma, p, q, seed);
            let (ds, _) = generate_with_truth(&cfg, beta0, phi0, theta0)?;
            let (std, tr) = standardize(&ds)?;
            let bias_of = |fit: &RegarmaFit| {
                let orig = tr.regression_coefs_to_original(&fit.beta);
                orig.iter()
                    .zip(beta0)
                    .map(|(est, tru)| est - tru)
                    .sum::<f64>()
                    / r as f64
            };
            let fixed_pair = |base: f64| -> Result<(RegarmaFit, RegarmaFit)> {
                let pen = PenaltyConfig::uniform(p, q, r, base)?;
                Ok((
                    fit_regarma(&std, p, q, &pen, &FitOptions::default())?,
                    fit_adaptive_regarma(
                        &std,
                        p,
                        q,
                        &pen,
                        &AdaptiveOptions::default(),
                        &FitOptions::default(),
                    )?,
                ))
            };
            let (plain, adaptive) = match policy {
                BiasPenaltyPolicy::FixedFraction(f) => {
                    fixed_pair(f * lambda_max_for(&std, p, q)?)?
                }
                BiasPenaltyPolicy::OracleRate(c) => {
                    let n_eff = (t_len - p - q) as f64;
                    fixed_pair(c * n_eff.powf(0.25))?
                }
                BiasPenaltyPolicy::BicSelected => {
                    let plain_fit = {
                        let mut o = SelectOptions::default();
                        o.adaptive = false;
                        let grid = default_grid(lambda_max_for(&std, p, q)?, 15);
                        select_penalties(&std, p, q, &grid, Criterion::Bic, &o)?.best_fit
                    };
                    let adaptive_fit = select_bic_fit(&std, p, q, true, 15)?;
                    (plain_fit, adaptive_fit)
                }
            };
            Ok((bias_of(&plain), bias_of(&adaptive)))
        })
        .collect();
    let mut plain = Vec::with_capacity(replicates);
    let mut adaptive = Vec::with_capacity(replicates);
    for item in per_rep {
        let (pl, ad) = item?;
        plain.push(pl);
        adaptive.push(ad);
    }
    let (mp, sp) = mean_and_se(&plain);
    let (ma, sa) = mean_and_se(&adaptive);
    Ok(BiasSummary {
        mean_bias_plain: mp,
        mean_bias_adaptive: ma,
        se_plain: sp,
        se_adaptive: sa,
        replicates,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Shape summary of the pooled studentized estimates over the true support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalitySummary {
    /// Too few replicates for distributional statistics; when set, the
    /// numeric fields are NaN.
    pub insufficient: bool,
    pub replicates: usize,
    pub samples: usize,
    /// Correlation between sorted samples and normal plotting-position
    /// quantiles; near 1 under normality.
    pub qq_corr: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

const NORMALITY_MIN_REPLICATES: usize = 30;

/// Collects sqrt(n) (estimate - truth) for every truly nonzero regression
/// coordinate across replicates, studentizes each coordinate by its own
/// Monte Carlo moments, pools, and summarizes the shape.
pub fn run_normality_probe(
    replicates: usize,
    t_len: usize,
    beta0: &[f64],
    phi0: &[f64],
    theta0: &[f64],
    sigma: f64,
    penalty_const: f64,
    base_seed: u64,
) -> Result<NormalitySummary> {
    if replicates == 0 {
        return Err(RegarmaError::InvalidConfig(
            "need at least one replicate".into(),
        ));
    }
    let support: Vec<usize> = (0..beta0.len()).filter(|j| beta0[*j] != 0.0).collect();
    if support.is_empty() {
        return Err(RegarmaError::InvalidConfig(
            "the normality probe needs a nonempty true support".into(),
        ));
    }
    if replicates < NORMALITY_MIN_REPLICATES {
        return Ok(NormalitySummary {
            insufficient: true,
            replicates,
            samples: 0,
            qq_corr: f64::NAN,
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
        });
    }
    let (p, q, r) = (phi0.len(), theta0.len(), beta0.len());
    let n_eff = t_len
        .checked_sub(p + q)
        .filter(|n| *n > 0)
        .ok_or_else(|| RegarmaError::OrderTooLarge {
            order: p + q,
            t_len,
        })?;
    let per_rep: Vec<Result<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(base_seed, 0, rep as u64);
            let cfg = SimulationConfig::new(t_len, r, 0.0, sigma, p, q, seed);
            let (ds, _) = generate_with_truth(&cfg, beta0, phi0, theta0)?;
            let (std, tr) = standardize(&ds)?;
            let base = penalty_const * (n_eff as f64).powf(0.25);
            let pen = PenaltyConfig::uniform(p, q, r, base)?;
            let fit = fit_adaptive_regarma(
                &std,
                p,
                q,
                &pen,
                &AdaptiveOptions::default(),
                &FitOptions::default(),
            )?;
            let orig = tr.regression_coefs_to_original(&fit.beta);
            Ok(support
                .iter()
                .map(|&j| (n_eff as f64).sqrt() * (orig[j] - beta0[j]))
                .collect())
        })
        .collect();
    let mut per_coord: Vec<Vec<f64>> = vec![Vec::with_capacity(replicates); support.len()];
    for item in per_rep {
        for (k, v) in item?.into_iter().enumerate() {
            per_coord[k].push(v);
        }
    }
    let mut pooled = Vec::with_capacity(replicates * support.len());
    for series in &per_coord {
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let sd = (series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt();
        if sd == 0.0 {
            return Err(RegarmaError::InvalidConfig(
                "degenerate coordinate: zero Monte Carlo variance".into(),
            ));
        }
        pooled.extend(series.iter().map(|v| (v - mean) / sd));
    }
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = pooled.len();
    let quantiles: Vec<f64> = (1..=m)
        .map(|i| inverse_normal_cdf((i as f64 - 0.375) / (m as f64 + 0.25)))
        .collect();
    Ok(NormalitySummary {
        insufficient: false,
        replicates,
        samples: m,
        qq_corr: pearson_corr(&pooled, &quantiles),
        skewness: sample_skewness(&pooled),
        excess_kurtosis: sample_excess_kurtosis(&pooled),
    })
}

fn central_moments(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    (mean, m2 / n, m3 / n, m4 / n)
}

pub fn sample_skewness(values: &[f64]) -> f64 {
    let (_, m2, m3, _) = central_moments(values);
    m3 / m2.powf(1.5)
}

pub fn sample_excess_kurtosis(values: &[f64]) -> f64 {
    let (_, m2, _, m4) = central_moments(values);
    m4 / (m2 * m2) - 3.0
}

pub fn pearson_corr(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Standard-normal quantile function via the widely used two-regime
/// rational approximation (central polynomial plus log-tail map); absolute
/// error is below 2e-9 across (0, 1), plenty for plotting positions.
pub fn inverse_normal_cdf(prob: f64) -> f64 {
    assert!(prob > 0.0 && prob < 1.0, "probability must be in (0, 1)");
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |u: f64| {
        (((((C[0] * u + C[1]) * u + C[2]) * u + C[3]) * u + C[4]) * u + C[5])
            / ((((D[0] * u + D[1]) * u + D[2]) * u + D[3]) * u + 1.0)
    };
    if prob < P_LOW {
        tail((-2.0 * prob.ln()).sqrt())
    } else if prob <= 1.0 - P_LOW {
        let u = prob - 0.5;
        let t = u * u;
        (((((A[0] * t + A[1]) * t + A[2]) * t + A[3]) * t + A[4]) * t + A[5]) * u
            / (((((B[0] * t + B[1]) * t + B[2]) * t + B[3]) * t + B[4]) * t + 1.0)
    } else {
        -tail((-2.0 * (1.0 - prob).ln()).sqrt())
    }
}

fn fmt_opt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

/// Per-replicate rows as tidy CSV. Error markers have their metric cells
/// left empty.
pub fn write_comparison_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(
        out,
        "method,t_len,r,sigma,zero_prop,replicate,mspe,bic,beta_mse,support_recovery,error"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.method.as_str(),
            row.t_len,
            row.r,
            row.sigma,
            row.zero_prop,
            row.replicate,
            fmt_opt(row.mspe),
            fmt_opt(row.bic),
            fmt_opt(row.beta_mse),
            fmt_opt(row.support_recovery),
            row.error.as_deref().unwrap_or("").replace(',', ";")
        )?;
    }
    Ok(())
}

type CellKey = (MethodLabel, usize, usize, u64, u64);

fn cell_means(rows: &[ComparisonRow]) -> Vec<(CellKey, [f64; 4], usize)> {
    let mut order: Vec<CellKey> = Vec::new();
    let mut acc: std::collections::HashMap<CellKey, ([f64; 4], usize)> =
        std::collections::HashMap::new();
    for row in rows {
        if row.error.is_some() {
            continue;
        }
        let key = (
            row.method,
            row.t_len,
            row.r,
            row.sigma.to_bits(),
            row.zero_prop.to_bits(),
        );
        let entry = acc.entry(key).or_insert_with(|| {
            order.push(key);
            ([0.0; 4], 0)
        });
        entry.0[0] += row.mspe;
        entry.0[1] += row.bic;
        entry.0[2] += row.beta_mse;
        entry.0[3] += row.support_recovery;
        entry.1 += 1;
    }
    order
        .into_iter()
        .map(|key| {
            let (sums, count) = acc[&key];
            (key, sums.map(|s| s / count as f64), count)
        })
        .collect()
}

/// Replicate-averaged rows, one per (method, cell), skipping error rows.
pub fn write_mean_rows_csv(rows: &[ComparisonRow], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(
        out,
        "method,t_len,r,sigma,zero_prop,replicates_used,mean_mspe,mean_bic,mean_beta_mse,mean_support_recovery"
    )?;
    for ((method, t_len, r, sigma, zp), means, used) in cell_means(rows) {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            method.as_str(),
            t_len,
            r,
            f64::from_bits(sigma),
            f64::from_bits(zp),
            used,
            means[0],
            means[1],
            means[2],
            means[3]
        )?;
    }
    Ok(())
}

/// Per-figure plot data: the first three files average each metric over
/// everything but (method, T, r); the fourth keys mean prediction error by
/// (method, sigma, r, T).
pub fn write_figure_data(rows: &[ComparisonRow], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let means = cell_means(rows);

    let by_t_r = |metric: usize| {
        let mut order: Vec<(MethodLabel, usize, usize)> = Vec::new();
        let mut acc: std::collections::HashMap<(MethodLabel, usize, usize), (f64, usize)> =
            std::collections::HashMap::new();
        for ((method, t, r, _, _), m, used) in &means {
            let key = (*method, *t, *r);
            let e = acc.entry(key).or_insert_with(|| {
                order.push(key);
                (0.0, 0)
            });
            e.0 += m[metric] * *used as f64;
            e.1 += used;
        }
        order
            .into_iter()
            .map(|k| (k, acc[&k].0 / acc[&k].1 as f64))
            .collect::<Vec<_>>()
    };

    for (file, metric) in [
        ("figure_mspe_by_t_r.csv", 0usize),
        ("figure_bic_by_t_r.csv", 1),
        ("figure_beta_mse_by_t_r.csv", 2),
    ] {
        let mut out = std::fs::File::create(dir.join(file))?;
        writeln!(out, "method,t_len,r,value")?;
        for ((method, t, r), v) in by_t_r(metric) {
            writeln!(out, "{},{},{},{}", method.as_str(), t, r, v)?;
        }
    }

    let mut order: Vec<(MethodLabel, u64, usize, usize)> = Vec::new();
    let mut acc: std::collections::HashMap<(MethodLabel, u64, usize, usize), (f64, usize)> =
        std::collections::HashMap::new();
    for ((method, t, r, sigma, _), m, used) in &means {
        let key = (*method, *sigma, *r, *t);
        let e = acc.entry(key).or_insert_with(|| {
            order.push(key);
            (0.0, 0)
        });
        e.0 += m[0] * *used as f64;
        e.1 += used;
    }
    let mut out = std::fs::File::create(dir.join("figure_mspe_by_sigma_r_t.csv"))?;
    writeln!(out, "method,sigma,r,t_len,value")?;
    for key in order {
        let (method, sigma, r, t) = key;
        let (sum, used) = acc[&key];
        writeln!(
            out,
            "{},{},{},{},{}",
            method.as_str(),
            f64::from_bits(sigma),
            r,
            t,
            sum / used as f64
        )?;
    }
    Ok(())
}

/// Reproducibility manifest: the grid itself plus the package version.
/// Deliberately no timestamps so reruns are byte-identical.
pub fn write_manifest(grid: &ExperimentGrid, path: &Path) -> Result<()> {
    #[derive(Serialize)]
    struct SeedEntry {
        cell: usize,
        t_len: usize,
        r: usize,
        sigma: f64,
        zero_prop: f64,
        replicate: usize,
        seed: u64,
    }
    #[derive(Serialize)]
    struct Manifest<'a> {
        grid: &'a ExperimentGrid,
        package_version: &'static str,
        seeds: Vec<SeedEntry>,
    }
    let mut seeds = Vec::new();
    for (cell_idx, (t_len, r, sigma, zero_prop)) in grid.cells().into_iter().enumerate() {
        for rep in 0..grid.replicates {
            seeds.push(SeedEntry {
                cell: cell_idx,
                t_len,
                r,
                sigma,
                zero_prop,
                replicate: rep,
                seed: derive_seed(grid.base_seed, cell_idx as u64, rep as u64),
            });
        }
    }
    let doc = Manifest {
        grid,
        package_version: env!("CARGO_PKG_VERSION"),
        seeds,
    };
    std::fs::write(path, serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}
