//! Two-step fitting of the regression + AR + residual-lag model, adaptive
//! penalty weighting, one-step prediction, and fit serialization.
//!
//! Step 1 fits the q = 0 sub-model (regression plus AR lags of the response)
//! and extracts its residual series. Step 2 re-solves with lags of that
//! residual series added as a third coefficient block. The procedure is
//! exactly two steps by default; `refresh_steps` re-derives the residual
//! series from the step-2 coefficients and re-solves, for callers who want
//! the iterated variant.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::data::{build_lag_design, LagDesign, TimeSeriesDataset};
use crate::error::{RegarmaError, Result};
use crate::lasso::{solve_weighted_lasso, PenaltyConfig, SolverOptions};

/// Coefficients below this magnitude count as zero for df and order reading.
pub const COEF_ZERO_TOL: f64 = 1e-10;

/// What was asked of the fitting routine (recorded on the result).
#[derive(Debug, Clone, PartialEq)]
pub struct FitSpec {
    pub p: usize,
    pub q: usize,
    pub penalties: PenaltyConfig,
    pub adaptive: bool,
}

/// A fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct RegarmaFit {
    /// Regression coefficients, length r.
    pub beta: Vec<f64>,
    /// AR coefficients on lagged responses, length p.
    pub phi: Vec<f64>,
    /// Coefficients on lagged step-1 residuals, length q.
    pub theta: Vec<f64>,
    /// Training residuals y_eff - fitted, length n.
    pub residuals: Array1<f64>,
    /// In-sample one-step predictions on the training rows, length n.
    pub fitted: Array1<f64>,
    /// Penalized objective of the final solve.
    pub objective: f64,
    /// Number of nonzero coefficients (threshold [`COEF_ZERO_TOL`]).
    pub df: usize,
    /// RSS / n.
    pub sigma2_hat: f64,
    /// Training sample size.
    pub n: usize,
    /// First effective (0-based) time index of the final design.
    pub t0: usize,
    /// 0-based time index of each training row, length n.
    pub times: Vec<usize>,
    /// The residual series whose lags fill the middle design block, length T
    /// (zeros before the step-1 effective sample).
    pub eps_hat: Array1<f64>,
    pub spec: FitSpec,
    pub converged: bool,
    /// Total coordinate-descent sweeps across both steps.
    pub iterations: usize,
    /// Subgradient violation of the final solve.
    pub kkt_violation: f64,
}

impl RegarmaFit {
    /// Residual sum of squares on the training rows.
    pub fn rss(&self) -> f64 {
        self.sigma2_hat * self.n as f64
    }

    /// Coefficients in design order (AR | residual lags | X).
    pub fn coefficients(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.phi.len() + self.theta.len() + self.beta.len());
        out.extend_from_slice(&self.phi);
        out.extend_from_slice(&self.theta);
        out.extend_from_slice(&self.beta);
        out
    }
}

/// Options shared by all fitting entry points.
#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    pub solver: SolverOptions,
    /// Number of extra residual-refresh re-solves after the classic second
    /// step. 0 (the default) is the plain two-step procedure.
    pub refresh_steps: usize,
    /// Condition on this many initial observations instead of p + q, so fits
    /// of different orders can share an identical sample. Values below p + q
    /// are ignored.
    pub fixed_t0: Option<usize>,
}

/// Adaptive-weight construction knobs.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    /// Power applied to pilot magnitudes (weight = base / |pilot|^exponent).
    pub exponent: f64,
    /// Weight assigned where the pilot estimate is zero (kept finite so the
    /// solver arithmetic stays exact; it always thresholds the coefficient
    /// away on standardized data).
    pub cap: f64,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            exponent: 1.0,
            cap: 1e6,
        }
    }
}

fn count_df(coefs: &[f64]) -> usize {
    coefs.iter().filter(|c| c.abs() > COEF_ZERO_TOL).count()
}

/// Keeps the rows of `full` whose time index is at least `eff_t0` and not
/// excluded; returns the reduced design plus the kept time indices.
fn select_rows(
    full: &LagDesign,
    eff_t0: usize,
    exclude: Option<&[bool]>,
    t_len: usize,
) -> Result<(LagDesign, Vec<usize>)> {
    if let Some(ex) = exclude {
        if ex.len() != t_len {
            return Err(RegarmaError::LengthMismatch {
                left: ex.len(),
                right: t_len,
            });
        }
    }
    let mut keep = vec![true; full.n];
    let mut times = Vec::with_capacity(full.n);
    for (i, k) in keep.iter_mut().enumerate() {
        let t = full.t0 + i;
        *k = t >= eff_t0 && exclude.is_none_or(|ex| !ex[t]);
        if *k {
            times.push(t);
        }
    }
    if times.is_empty() {
        return Err(RegarmaError::TooFewSamples {
            n: 0,
            k: full.n_cols(),
        });
    }
    let design = full.filter_rows(&keep)?;
    Ok((design, times))
}

fn fit_inner(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    penalties: &PenaltyConfig,
    options: &FitOptions,
    exclude: Option<&[bool]>,
    adaptive: bool,
) -> Result<RegarmaFit> {
    let t_len = ds.t_len();
    let r = ds.n_regressors();
    if penalties.p() != p || penalties.q() != q || penalties.r() != r {
        return Err(RegarmaError::DimensionMismatch(format!(
            "penalty blocks ({}, {}, {}) do not match fit shape ({p}, {q}, {r})",
            penalties.p(),
            penalties.q(),
            penalties.r(),
        )));
    }
    let eff_t0 = (p + q).max(options.fixed_t0.unwrap_or(0));
    if eff_t0 >= t_len {
        return Err(RegarmaError::OrderTooLarge {
            order: eff_t0,
            t_len,
        });
    }

    // Step 1: regression + AR lags only.
    let zeros = Array1::zeros(t_len);
    let d1_full = build_lag_design(ds, p, 0, &zeros)?;
    let (d1, _) = select_rows(&d1_full, p, exclude, t_len)?;
    let pens1 = PenaltyConfig::new(
        penalties.gamma_weights.clone(),
        Vec::new(),
        penalties.lambda_weights.clone(),
    )?;
    let sol1 = solve_weighted_lasso(&d1, &pens1, &options.solver)?;

    // Residual series of step 1, re-embedded over the whole time axis (zeros
    // before the step-1 effective sample). Evaluated at every t >= p, even
    // excluded ones, so held-out rows can still be predicted one step ahead.
    let mut eps = Array1::zeros(t_len);
    for i in 0..d1_full.n {
        let t = p + i;
        eps[t] = d1_full.y_eff[i] - d1_full.h.row(i).dot(&sol1.coefficients);
    }

    let mut warm: Vec<f64> = Vec::with_capacity(p + q + r);
    warm.extend(sol1.coefficients.iter().take(p));
    warm.extend(std::iter::repeat_n(0.0, q));
    warm.extend(sol1.coefficients.iter().skip(p));

    let mut sweeps = sol1.iterations;
    let mut result = None;
    // Without a residual-lag block (and with nothing trimmed), step 1 already
    // solved the final problem.
    if q == 0 && options.refresh_steps == 0 && eff_t0 == p {
        let (d1_again, times1) = select_rows(&d1_full, p, exclude, t_len)?;
        result = Some((d1_again, times1, sol1.clone()));
    } else {
        for step in 0..=options.refresh_steps {
            let d2_full = build_lag_design(ds, p, q, &eps)?;
            let (d2, times) = select_rows(&d2_full, eff_t0, exclude, t_len)?;
            let solver = SolverOptions {
                warm_start: Some(warm.clone()),
                ..options.solver.clone()
            };
            let sol2 = solve_weighted_lasso(&d2, penalties, &solver)?;
            sweeps += sol2.iterations;
            if step < options.refresh_steps {
                // Refresh the residual series from the current regression +
                // AR coefficients (the residual-lag block does not enter its
                // own definition) and go around again.
                for i in 0..d1_full.n {
                    let t = p + i;
                    let mut v = d1_full.y_eff[i];
                    for j in 0..p {
                        v -= sol2.coefficients[j] * d1_full.h[[i, j]];
                    }
                    for c in 0..r {
                        v -= sol2.coefficients[p + q + c] * d1_full.h[[i, p + c]];
                    }
                    eps[t] = v;
                }
                warm = sol2.coefficients.to_vec();
            }
            result = Some((d2, times, sol2));
        }
    }
    let (d2, times, sol2) = result.expect("at least one step-2 solve");

    let coefs = &sol2.coefficients;
    let fitted = d2.h.dot(coefs);
    let residuals = &d2.y_eff - &fitted;
    let rss = residuals.iter().map(|v| v * v).sum::<f64>();
    let n = d2.n;
    let phi = coefs.iter().take(p).copied().collect();
    let theta = coefs.iter().skip(p).take(q).copied().collect();
    let beta = coefs.iter().skip(p + q).copied().collect();
    let df = count_df(coefs.as_slice().unwrap());

    Ok(RegarmaFit {
        beta,
        phi,
        theta,
        residuals,
        fitted,
        objective: sol2.objective,
        df,
        sigma2_hat: rss / n as f64,
        n,
        t0: eff_t0,
        times,
        eps_hat: eps,
        spec: FitSpec {
            p,
            q,
            penalties: penalties.clone(),
            adaptive,
        },
        converged: sol1.converged && sol2.converged,
        iterations: sweeps,
        kkt_violation: sol2.kkt_violation,
    })
}

/// Fits the q = 0 sub-model (regression plus AR lags). `penalties` must have
/// an empty residual-lag block.
pub fn fit_regar(
    ds: &TimeSeriesDataset,
    p: usize,
    penalties: &PenaltyConfig,
    options: &FitOptions,
) -> Result<RegarmaFit> {
    fit_inner(ds, p, 0, penalties, options, None, false)
}

/// Two-step fit of the full model at orders (p, q).
pub fn fit_regarma(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    penalties: &PenaltyConfig,
    options: &FitOptions,
) -> Result<RegarmaFit> {
    fit_inner(ds, p, q, penalties, options, None, false)
}

/// Like [`fit_regarma`], but rows whose time index is marked true in
/// `exclude_times` (length T) are dropped from both solves. The residual
/// series is still evaluated at every time point, so excluded rows remain
/// predictable from observed history — this is the training half of blocked
/// cross-validation.
pub fn fit_regarma_masked(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    penalties: &PenaltyConfig,
    options: &FitOptions,
    exclude_times: &[bool],
) -> Result<RegarmaFit> {
    fit_inner(ds, p, q, penalties, options, Some(exclude_times), false)
}

/// Per-coefficient adaptive weights: base_j / |pilot_j|^exponent, capped at
/// `cap`. A zero pilot coefficient gets exactly `cap`.
pub fn compute_adaptive_weights(
    pilot: &RegarmaFit,
    base: &PenaltyConfig,
    exponent: f64,
    cap: f64,
) -> Result<PenaltyConfig> {
    if pilot.phi.len() != base.p() || pilot.theta.len() != base.q() || pilot.beta.len() != base.r()
    {
        return Err(RegarmaError::ShapeMismatch(format!(
            "pilot shape ({}, {}, {}) vs penalty shape ({}, {}, {})",
            pilot.phi.len(),
            pilot.theta.len(),
            pilot.beta.len(),
            base.p(),
            base.q(),
            base.r()
        )));
    }
    if !(exponent >= 0.0) || !(cap > 0.0) {
        return Err(RegarmaError::InvalidConfig(format!(
            "adaptive exponent must be >= 0 and cap > 0, got {exponent} and {cap}"
        )));
    }
    let weigh = |base_w: &[f64], pilot_c: &[f64]| -> Vec<f64> {
        base_w
            .iter()
            .zip(pilot_c)
            .map(|(b, c)| {
                let denom = c.abs().powf(exponent);
                if denom == 0.0 {
                    cap
                } else {
                    (b / denom).min(cap)
                }
            })
            .collect()
    };
    PenaltyConfig::new(
        weigh(&base.gamma_weights, &pilot.phi),
        weigh(&base.tau_weights, &pilot.theta),
        weigh(&base.lambda_weights, &pilot.beta),
    )
}

/// Adaptive variant: a pilot two-step fit at the base penalties supplies the
/// weights, then the two-step procedure is re-run with the weighted
/// penalties (both steps of the re-run use them).
pub fn fit_adaptive_regarma(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    base: &PenaltyConfig,
    adaptive: &AdaptiveOptions,
    options: &FitOptions,
) -> Result<RegarmaFit> {
    let pilot = fit_inner(ds, p, q, base, options, None, false)?;
    let weights = compute_adaptive_weights(&pilot, base, adaptive.exponent, adaptive.cap)?;
    fit_inner(ds, p, q, &weights, options, None, true)
}

/// Masked adaptive fit (pilot and final solve both see only the training
/// rows); see [`fit_regarma_masked`].
pub fn fit_adaptive_regarma_masked(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    base: &PenaltyConfig,
    adaptive: &AdaptiveOptions,
    options: &FitOptions,
    exclude_times: &[bool],
) -> Result<RegarmaFit> {
    let pilot = fit_inner(ds, p, q, base, options, Some(exclude_times), false)?;
    let weights = compute_adaptive_weights(&pilot, base, adaptive.exponent, adaptive.cap)?;
    fit_inner(ds, p, q, &weights, options, Some(exclude_times), true)
}

/// One-step-ahead prediction from trailing history:
/// x_row' beta + sum_j phi_j y[end - j] + sum_i theta_i eps[end - i].
pub fn predict_one_step(
    fit: &RegarmaFit,
    history_y: &[f64],
    x_row: &[f64],
    history_eps: &[f64],
) -> Result<f64> {
    let p = fit.phi.len();
    let q = fit.theta.len();
    if history_y.len() < p {
        return Err(RegarmaError::InsufficientHistory {
            what: "response lags".into(),
            needed: p,
            got: history_y.len(),
        });
    }
    if history_eps.len() < q {
        return Err(RegarmaError::InsufficientHistory {
            what: "residual lags".into(),
            needed: q,
            got: history_eps.len(),
        });
    }
    if x_row.len() != fit.beta.len() {
        return Err(RegarmaError::ShapeMismatch(format!(
            "{} regressor values for {} coefficients",
            x_row.len(),
            fit.beta.len()
        )));
    }
    let mut pred: f64 = x_row.iter().zip(&fit.beta).map(|(x, b)| x * b).sum();
    for (j, phi) in fit.phi.iter().enumerate() {
        pred += phi * history_y[history_y.len() - 1 - j];
    }
    for (i, theta) in fit.theta.iter().enumerate() {
        pred += theta * history_eps[history_eps.len() - 1 - i];
    }
    Ok(pred)
}

/// Flat, versioned serialization of a fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitDocument {
    pub version: u32,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    pub adaptive: bool,
    pub gamma_weights: Vec<f64>,
    pub tau_weights: Vec<f64>,
    pub lambda_weights: Vec<f64>,
    pub phi: Vec<f64>,
    pub theta: Vec<f64>,
    pub beta: Vec<f64>,
    pub df: usize,
    pub sigma2_hat: f64,
    pub objective: f64,
    pub n: usize,
    pub t0: usize,
    pub times: Vec<usize>,
    pub converged: bool,
    pub iterations: usize,
    pub kkt_violation: f64,
    pub residuals: Vec<f64>,
    pub fitted: Vec<f64>,
    pub eps_hat: Vec<f64>,
}

pub const FIT_DOCUMENT_VERSION: u32 = 1;

impl RegarmaFit {
    pub fn to_document(&self) -> FitDocument {
        FitDocument {
            version: FIT_DOCUMENT_VERSION,
            p: self.phi.len(),
            q: self.theta.len(),
            r: self.beta.len(),
            adaptive: self.spec.adaptive,
            gamma_weights: self.spec.penalties.gamma_weights.clone(),
            tau_weights: self.spec.penalties.tau_weights.clone(),
            lambda_weights: self.spec.penalties.lambda_weights.clone(),
            phi: self.phi.clone(),
            theta: self.theta.clone(),
            beta: self.beta.clone(),
            df: self.df,
            sigma2_hat: self.sigma2_hat,
            objective: self.objective,
            n: self.n,
            t0: self.t0,
            times: self.times.clone(),
            converged: self.converged,
            iterations: self.iterations,
            kkt_violation: self.kkt_violation,
            residuals: self.residuals.to_vec(),
            fitted: self.fitted.to_vec(),
            eps_hat: self.eps_hat.to_vec(),
        }
    }

    pub fn from_document(doc: FitDocument) -> Result<Self> {
        if doc.version != FIT_DOCUMENT_VERSION {
            return Err(RegarmaError::InvalidConfig(format!(
                "unsupported fit document version {}",
                doc.version
            )));
        }
        if doc.phi.len() != doc.p
            || doc.theta.len() != doc.q
            || doc.beta.len() != doc.r
            || doc.residuals.len() != doc.n
            || doc.fitted.len() != doc.n
            || doc.times.len() != doc.n
        {
            return Err(RegarmaError::ShapeMismatch(
                "fit document block lengths disagree with declared shape".into(),
            ));
        }
        let penalties =
            PenaltyConfig::new(doc.gamma_weights, doc.tau_weights, doc.lambda_weights)?;
        Ok(RegarmaFit {
            beta: doc.beta,
            phi: doc.phi,
            theta: doc.theta,
            residuals: Array1::from(doc.residuals),
            fitted: Array1::from(doc.fitted),
            objective: doc.objective,
            df: doc.df,
            sigma2_hat: doc.sigma2_hat,
            n: doc.n,
            t0: doc.t0,
            times: doc.times,
            eps_hat: Array1::from(doc.eps_hat),
            spec: FitSpec {
                p: doc.p,
                q: doc.q,
                penalties,
                adaptive: doc.adaptive,
            },
            converged: doc.converged,
            iterations: doc.iterations,
            kkt_violation: doc.kkt_violation,
        })
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json_str(json: &str) -> Result<Self> {
        let doc: FitDocument = serde_json::from_str(json)?;
        Self::from_document(doc)
    }
}

/// Rebuilds the final design a fit was solved on (all effective rows, not
/// just training rows) so other rows can be scored with its coefficients.
pub fn design_for_fit(ds: &TimeSeriesDataset, fit: &RegarmaFit) -> Result<LagDesign> {
    let p = fit.phi.len();
    let q = fit.theta.len();
    let full = build_lag_design(ds, p, q, &fit.eps_hat)?;
    if fit.t0 > full.t0 {
        let keep: Vec<bool> = (0..full.n).map(|i| full.t0 + i >= fit.t0).collect();
        full.filter_rows(&keep)
    } else {
        Ok(full)
    }
}
