//! Penalty selection (BIC / AIC / blocked cross-validation) and order
//! selection, either by exhaustive search over (p, q) up to given bounds or
//! by shrinking the lag coefficients of a single maximal-order fit.

use std::cmp::Ordering;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{RegarmaError, Result};
use crate::fit::{
    design_for_fit, fit_adaptive_regarma, fit_adaptive_regarma_masked, fit_regarma,
    fit_regarma_masked, AdaptiveOptions, FitOptions, RegarmaFit, COEF_ZERO_TOL,
};
use crate::lasso::{lambda_max, PenaltyConfig};

/// Model-quality criterion used for selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criterion {
    Bic,
    Aic,
    Cv,
}

/// One shared-or-per-block multiplier triple applied to the three penalty
/// blocks: `gamma` scales AR lags, `tau` residual lags, `lambda` regressors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyScales {
    pub lambda: f64,
    pub gamma: f64,
    pub tau: f64,
}

impl PenaltyScales {
    /// The default mode: one multiplier shared by all three blocks.
    pub fn shared(s: f64) -> Self {
        Self {
            lambda: s,
            gamma: s,
            tau: s,
        }
    }

    pub fn to_config(self, p: usize, q: usize, r: usize) -> Result<PenaltyConfig> {
        PenaltyConfig::from_scales(p, q, r, self.gamma, self.tau, self.lambda)
    }
}

/// How the candidate fits are produced during selection.
#[derive(Debug, Clone)]
pub struct SelectOptions {
    /// Fit the adaptive variant at every grid point.
    pub adaptive: bool,
    pub adaptive_opts: AdaptiveOptions,
    pub fit: FitOptions,
    /// Fold count for [`Criterion::Cv`].
    pub folds: usize,
    /// Shuffled folds are deliberately unsupported for serial data; setting
    /// this is an error, the field exists so callers get a clear message.
    pub shuffle_folds: bool,
}

impl Default for SelectOptions {
    fn default() -> Self {
        Self {
            adaptive: true,
            adaptive_opts: AdaptiveOptions::default(),
            fit: FitOptions::default(),
            folds: 5,
            shuffle_folds: false,
        }
    }
}

/// One evaluated candidate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionRow {
    pub scales: PenaltyScales,
    pub p: usize,
    pub q: usize,
    /// Effective sample size behind the criterion value.
    pub n: usize,
    pub df: usize,
    pub value: f64,
}

/// Outcome of a selection sweep: the full table plus the winner under the
/// tie-break chain (value, then df, then p + q, then lexicographic scales).
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub best_penalties: PenaltyConfig,
    pub best_scales: PenaltyScales,
    pub best_orders: (usize, usize),
    pub table: Vec<CriterionRow>,
    pub criterion: Criterion,
    /// The winning fitted model. For order selection by shrinkage this is
    /// the maximal-order fit whose zero pattern defines `best_orders`.
    pub best_fit: RegarmaFit,
}

impl SelectionResult {
    /// Writes the criterion table as CSV with columns
    /// (lambda_scale, gamma_scale, tau_scale, p, q, n, df, criterion).
    pub fn write_table_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        writeln!(out, "lambda_scale,gamma_scale,tau_scale,p,q,n,df,criterion")?;
        for row in &self.table {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                row.scales.lambda,
                row.scales.gamma,
                row.scales.tau,
                row.p,
                row.q,
                row.n,
                row.df,
                row.value
            )?;
        }
        Ok(())
    }
}

/// Gaussian-likelihood information criteria on the fit's own effective
/// sample: BIC = n ln(RSS/n) + df ln n, AIC = n ln(RSS/n) + 2 df. A perfect
/// fit (RSS = 0) returns negative infinity — a degenerate sentinel that only
/// arises on noiseless toy data.
pub fn information_criterion(fit: &RegarmaFit, kind: Criterion) -> Result<f64> {
    let n = fit.n as f64;
    let penalty_term = match kind {
        Criterion::Bic => fit.df as f64 * n.ln(),
        Criterion::Aic => 2.0 * fit.df as f64,
        Criterion::Cv => {
            return Err(RegarmaError::InvalidConfig(
                "cross-validation is a resampling procedure, not a per-fit criterion".into(),
            ))
        }
    };
    if fit.sigma2_hat == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(n * fit.sigma2_hat.ln() + penalty_term)
}

/// Smallest shared multiplier that zeroes every coefficient of the (p, q)
/// problem. At that penalty the first step estimates nothing, so its
/// residual series equals the response on the effective axis — the returned
/// value accounts for that exactly.
pub fn lambda_max_for(ds: &TimeSeriesDataset, p: usize, q: usize) -> Result<f64> {
    let mut eps_top = ndarray::Array1::zeros(ds.t_len());
    for t in p..ds.t_len() {
        eps_top[t] = ds.y[t];
    }
    let design = crate::data::build_lag_design(ds, p, q, &eps_top)?;
    Ok(lambda_max(&design))
}

/// Default search grid: `n_points` log-spaced shared multipliers from `lmax`
/// down to 1e-4 lmax, largest first.
pub fn default_grid(lmax: f64, n_points: usize) -> Vec<PenaltyScales> {
    assert!(n_points >= 1 && lmax > 0.0);
    if n_points == 1 {
        return vec![PenaltyScales::shared(lmax)];
    }
    let lo = (1e-4 * lmax).ln();
    let hi = lmax.ln();
    (0..n_points)
        .map(|i| {
            let f = i as f64 / (n_points - 1) as f64;
            PenaltyScales::shared((hi + f * (lo - hi)).exp())
        })
        .collect()
}

/// Opt-in full cross product of per-block multipliers (size grows cubically;
/// the shared grid is the default for a reason).
pub fn independent_grid(lmax: f64, n_per_block: usize) -> Vec<PenaltyScales> {
    let shared = default_grid(lmax, n_per_block);
    let mut out = Vec::with_capacity(n_per_block.pow(3));
    for l in &shared {
        for g in &shared {
            for t in &shared {
                out.push(PenaltyScales {
                    lambda: l.lambda,
                    gamma: g.gamma,
                    tau: t.tau,
                });
            }
        }
    }
    out
}

fn sort_key(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn row_cmp(a: &CriterionRow, b: &CriterionRow) -> Ordering {
    sort_key(a.value)
        .partial_cmp(&sort_key(b.value))
        .unwrap()
        .then(a.df.cmp(&b.df))
        .then((a.p + a.q).cmp(&(b.p + b.q)))
        .then(a.scales.lambda.partial_cmp(&b.scales.lambda).unwrap())
        .then(a.scales.gamma.partial_cmp(&b.scales.gamma).unwrap())
        .then(a.scales.tau.partial_cmp(&b.scales.tau).unwrap())
}

/// Index of the winning row; earlier rows win exact ties.
fn argbest(rows: &[CriterionRow]) -> usize {
    let mut best = 0;
    for i in 1..rows.len() {
        if row_cmp(&rows[i], &rows[best]) == Ordering::Less {
            best = i;
        }
    }
    best
}

fn fit_at(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    scales: PenaltyScales,
    opts: &SelectOptions,
    exclude: Option<&[bool]>,
) -> Result<RegarmaFit> {
    let config = scales.to_config(p, q, ds.n_regressors())?;
    match (opts.adaptive, exclude) {
        (true, None) => fit_adaptive_regarma(ds, p, q, &config, &opts.adaptive_opts, &opts.fit),
        (false, None) => fit_regarma(ds, p, q, &config, &opts.fit),
        (true, Some(ex)) => {
            fit_adaptive_regarma_masked(ds, p, q, &config, &opts.adaptive_opts, &opts.fit, ex)
        }
        (false, Some(ex)) => fit_regarma_masked(ds, p, q, &config, &opts.fit, ex),
    }
}

/// Evaluates every grid point at fixed orders (p, q) and returns the table
/// plus the argmin. With [`Criterion::Cv`] this delegates to
/// [`cross_validate`] using `opts.folds`.
pub fn select_penalties(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    grid: &[PenaltyScales],
    kind: Criterion,
    opts: &SelectOptions,
) -> Result<SelectionResult> {
    if kind == Criterion::Cv {
        return cross_validate(ds, p, q, grid, opts.folds, opts);
    }
    if grid.is_empty() {
        return Err(RegarmaError::InvalidConfig("empty penalty grid".into()));
    }
    let evaluated: Vec<Result<(CriterionRow, RegarmaFit)>> = grid
        .par_iter()
        .map(|&scales| {
            let fit = fit_at(ds, p, q, scales, opts, None)?;
            let value = information_criterion(&fit, kind)?;
            Ok((
                CriterionRow {
                    scales,
                    p,
                    q,
                    n: fit.n,
                    df: fit.df,
                    value,
                },
                fit,
            ))
        })
        .collect();
    let mut rows = Vec::with_capacity(grid.len());
    let mut fits = Vec::with_capacity(grid.len());
    for item in evaluated {
        let (row, fit) = item?;
        rows.push(row);
        fits.push(fit);
    }
    let best = argbest(&rows);
    Ok(SelectionResult {
        best_penalties: rows[best].scales.to_config(p, q, ds.n_regressors())?,
        best_scales: rows[best].scales,
        best_orders: (p, q),
        criterion: kind,
        best_fit: fits.swap_remove(best),
        table: rows,
    })
}

/// Contiguous-block K-fold cross-validation over the effective sample of the
/// (p, q) problem. Lag features for each training set are rebuilt from the
/// training fit's own residual series; held-out rows are scored one step
/// ahead (observed history, estimated coefficients). The criterion value is
/// the mean over folds of the per-fold mean squared prediction error.
pub fn cross_validate(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    grid: &[PenaltyScales],
    folds: usize,
    opts: &SelectOptions,
) -> Result<SelectionResult> {
    if opts.shuffle_folds {
        return Err(RegarmaError::ShuffledFolds);
    }
    if grid.is_empty() {
        return Err(RegarmaError::InvalidConfig("empty penalty grid".into()));
    }
    let t0 = p + q;
    if t0 >= ds.t_len() {
        return Err(RegarmaError::OrderTooLarge {
            order: t0,
            t_len: ds.t_len(),
        });
    }
    let n = ds.t_len() - t0;
    if folds < 2 || folds > n {
        return Err(RegarmaError::TooFewSamples { n, k: folds });
    }

    // contiguous fold boundaries over effective rows 0..n
    let mut bounds = Vec::with_capacity(folds + 1);
    let base = n / folds;
    let extra = n % folds;
    let mut at = 0;
    bounds.push(0);
    for i in 0..folds {
        at += base + usize::from(i < extra);
        bounds.push(at);
    }

    let evaluated: Vec<Result<(CriterionRow, f64)>> = grid
        .par_iter()
        .map(|&scales| {
            let mut fold_scores = Vec::with_capacity(folds);
            let mut df_sum = 0usize;
            for f in 0..folds {
                let mut exclude = vec![false; ds.t_len()];
                for row in bounds[f]..bounds[f + 1] {
                    exclude[t0 + row] = true;
                }
                let fit = fit_at(ds, p, q, scales, opts, Some(&exclude))?;
                df_sum += fit.df;
                let design = design_for_fit(ds, &fit)?;
                let coefs = ndarray::Array1::from(fit.coefficients());
                let preds = design.h.dot(&coefs);
                let mut sq = 0.0;
                let held = bounds[f + 1] - bounds[f];
                for row in bounds[f]..bounds[f + 1] {
                    let d = design.y_eff[row] - preds[row];
                    sq += d * d;
                }
                fold_scores.push(sq / held as f64);
            }
            let value = fold_scores.iter().sum::<f64>() / folds as f64;
            let mean_df = (df_sum as f64 / folds as f64).round() as usize;
            Ok((
                CriterionRow {
                    scales,
                    p,
                    q,
                    n,
                    df: mean_df,
                    value,
                },
                value,
            ))
        })
        .collect();

    let mut rows = Vec::with_capacity(grid.len());
    for item in evaluated {
        rows.push(item?.0);
    }
    let best = argbest(&rows);
    let best_scales = rows[best].scales;
    let best_fit = fit_at(ds, p, q, best_scales, opts, None)?;
    Ok(SelectionResult {
        best_penalties: best_scales.to_config(p, q, ds.n_regressors())?,
        best_scales,
        best_orders: (p, q),
        criterion: Criterion::Cv,
        best_fit,
        table: rows,
    })
}

/// Exhaustive order selection: every (p, q) in [0, pmax] x [0, qmax] gets a
/// full penalty sweep on its own effective sample (n = T - p - q), and the
/// global argmin row wins. Comparing criterion values across orders uses
/// each fit's own n — differing conditioning windows are inherent to this
/// approach and recorded per row.
pub fn select_orders_method_a(
    ds: &TimeSeriesDataset,
    pmax: usize,
    qmax: usize,
    grid: &[PenaltyScales],
    kind: Criterion,
    opts: &SelectOptions,
) -> Result<SelectionResult> {
    if pmax + qmax >= ds.t_len() {
        return Err(RegarmaError::OrderTooLarge {
            order: pmax + qmax,
            t_len: ds.t_len(),
        });
    }
    let mut table = Vec::new();
    let mut best: Option<(CriterionRow, SelectionResult)> = None;
    for p in 0..=pmax {
        for q in 0..=qmax {
            let sub = select_penalties(ds, p, q, grid, kind, opts)?;
            let sub_best_idx = argbest(&sub.table);
            let sub_best_row = sub.table[sub_best_idx].clone();
            table.extend(sub.table.iter().cloned());
            let replace = match &best {
                None => true,
                Some((row, _)) => row_cmp(&sub_best_row, row) == Ordering::Less,
            };
            if replace {
                best = Some((sub_best_row, sub));
            }
        }
    }
    let (_, winner) = best.expect("order ranges are nonempty");
    Ok(SelectionResult {
        best_penalties: winner.best_penalties,
        best_scales: winner.best_scales,
        best_orders: winner.best_orders,
        table,
        criterion: kind,
        best_fit: winner.best_fit,
    })
}

/// Order selection by shrinkage: one fit shape at (pmax, qmax) on the fixed
/// sample n = T - pmax - qmax; the selected orders are the largest lag
/// indices that survive with nonzero coefficients. The returned fit is the
/// maximal-order model itself (whose upper lags are exactly zero).
pub fn select_orders_method_b(
    ds: &TimeSeriesDataset,
    pmax: usize,
    qmax: usize,
    grid: &[PenaltyScales],
    kind: Criterion,
    opts: &SelectOptions,
) -> Result<SelectionResult> {
    let sel = select_penalties(ds, pmax, qmax, grid, kind, opts)?;
    let largest = |coefs: &[f64]| {
        coefs
            .iter()
            .rposition(|c| c.abs() > COEF_ZERO_TOL)
            .map_or(0, |i| i + 1)
    };
    let orders = (largest(&sel.best_fit.phi), largest(&sel.best_fit.theta));
    Ok(SelectionResult {
        best_orders: orders,
        ..sel
    })
}
