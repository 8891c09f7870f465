//! Fit-quality metrics, residual autocorrelation, prediction-error
//! estimators, and finite-sample mean squared prediction error bounds.

use std::io::Write;
use std::path::Path;

use ndarray::Array1;
use serde::Serialize;

use crate::data::LagDesign;
use crate::error::{RegarmaError, Result};
use crate::fit::{FitSpec, RegarmaFit};
use crate::select::{information_criterion, Criterion};

/// Summary block for one fitted model, one row of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mse: f64,
    pub mae: f64,
    pub bic: f64,
    pub df: usize,
    pub model_label: String,
}

/// Human-readable label derived from the fit shape: pure regression is
/// "lasso", q = 0 is "REGAR(p)", p = 0 is "REGMA(q)", otherwise
/// "REGARMA(p,q)", with an "adaptive " prefix where weights were used.
pub fn model_label(spec: &FitSpec) -> String {
    label_for_orders(spec.adaptive, spec.p, spec.q)
}

/// Same naming convention from bare orders, for callers that relabel a
/// maximal-order fit by the lags that actually survived.
pub fn label_for_orders(adaptive: bool, p: usize, q: usize) -> String {
    let base = match (p, q) {
        (0, 0) => "lasso".to_string(),
        (p, 0) => format!("REGAR({p})"),
        (0, q) => format!("REGMA({q})"),
        (p, q) => format!("REGARMA({p},{q})"),
    };
    if adaptive {
        format!("adaptive {base}")
    } else {
        base
    }
}

/// In-sample metrics on the fit's own (standardized, if the data were)
/// scale. The BIC value is computed by the selection module so the two can
/// never disagree.
pub fn compute_metrics(fit: &RegarmaFit) -> Result<MetricsReport> {
    let n = fit.n as f64;
    let mae = fit.residuals.iter().map(|r| r.abs()).sum::<f64>() / n;
    Ok(MetricsReport {
        mse: fit.sigma2_hat,
        mae,
        bic: information_criterion(fit, Criterion::Bic)?,
        df: fit.df,
        model_label: model_label(&fit.spec),
    })
}

/// Writes reports as a CSV comparison table (model, mse, mae, bic, df).
/// Labels like "REGARMA(2,1)" contain commas and are therefore quoted.
pub fn write_metrics_csv(reports: &[MetricsReport], path: &Path) -> Result<()> {
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "model,mse,mae,bic,df")?;
    for rep in reports {
        let model = if rep.model_label.contains(',') {
            format!("\"{}\"", rep.model_label)
        } else {
            rep.model_label.clone()
        };
        writeln!(
            out,
            "{},{},{},{},{}",
            model, rep.mse, rep.mae, rep.bic, rep.df
        )?;
    }
    Ok(())
}

/// Mean squared prediction error of `predicted` against a reference signal.
pub fn mspe_hat(predicted: &[f64], oracle: &[f64]) -> Result<f64> {
    if predicted.len() != oracle.len() {
        return Err(RegarmaError::LengthMismatch {
            left: predicted.len(),
            right: oracle.len(),
        });
    }
    let n = predicted.len() as f64;
    Ok(predicted
        .iter()
        .zip(oracle)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Quantities entering the prediction-error bounds. Blocks are ordered
/// (regressors, response lags, residual lags) = (1, 2, 3): `per_block_m`
/// holds the design sup-norms (M1, M2, M3) and `per_block_k` the coefficient
/// l1 budgets (K_lambda, K_gamma, K_tau). A block with count zero is skipped
/// by the bounds; its M and K entries are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub k_max: f64,
    pub m_max: f64,
    pub sigma: f64,
    pub n: usize,
    pub r: usize,
    pub p: usize,
    pub q: usize,
    pub per_block_m: (f64, f64, f64),
    pub per_block_k: (f64, f64, f64),
}

impl BoundInputs {
    /// Validating constructor; the maxima are derived, not caller-supplied.
    pub fn from_blocks(
        per_block_k: (f64, f64, f64),
        per_block_m: (f64, f64, f64),
        sigma: f64,
        n: usize,
        r: usize,
        p: usize,
        q: usize,
    ) -> Result<Self> {
        let ks = [per_block_k.0, per_block_k.1, per_block_k.2];
        let ms = [per_block_m.0, per_block_m.1, per_block_m.2];
        if ks.iter().chain(&ms).any(|v| !v.is_finite() || *v < 0.0) {
            return Err(RegarmaError::InvalidConfig(
                "block norms must be finite and nonnegative".into(),
            ));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(RegarmaError::InvalidConfig(
                "sigma must be a positive finite real".into(),
            ));
        }
        if n == 0 {
            return Err(RegarmaError::InvalidConfig("n must be positive".into()));
        }
        if r + p + q == 0 {
            return Err(RegarmaError::InvalidConfig(
                "at least one block must be nonempty".into(),
            ));
        }
        let k_max = ks.iter().cloned().fold(0.0, f64::max);
        let m_max = ms.iter().cloned().fold(0.0, f64::max);
        if k_max == 0.0 || m_max == 0.0 {
            return Err(RegarmaError::InvalidConfig(
                "the largest K and M must be positive".into(),
            ));
        }
        Ok(Self {
            k_max,
            m_max,
            sigma,
            n,
            r,
            p,
            q,
            per_block_m,
            per_block_k,
        })
    }

    /// Bound inputs realized from a fitted model: K blocks are the fitted
    /// coefficient l1 norms (optionally widened by known true norms so the
    /// truth is feasible for the same budget), M blocks the design
    /// sup-norms, and sigma is caller-supplied (true value in simulations,
    /// an estimate otherwise).
    pub fn realized(
        fit: &RegarmaFit,
        design: &LagDesign,
        sigma: f64,
        truth_l1: Option<(f64, f64, f64)>,
    ) -> Result<Self> {
        let l1 = |v: &[f64]| v.iter().map(|c| c.abs()).sum::<f64>();
        let truth = truth_l1.unwrap_or((0.0, 0.0, 0.0));
        let per_block_k = (
            l1(&fit.beta).max(truth.0),
            l1(&fit.phi).max(truth.1),
            l1(&fit.theta).max(truth.2),
        );
        let (p, q) = (fit.spec.p, fit.spec.q);
        if design.p != p || design.q != q || design.r != fit.beta.len() {
            return Err(RegarmaError::ShapeMismatch(format!(
                "design blocks ({}, {}, {}) do not match fit ({}, {}, {})",
                design.p,
                design.q,
                design.r,
                p,
                q,
                fit.beta.len()
            )));
        }
        let sup = |lo: usize, hi: usize| {
            let mut m = 0.0_f64;
            for col in lo..hi {
                for v in design.h.column(col) {
                    m = m.max(v.abs());
                }
            }
            m
        };
        let per_block_m = (
            sup(p + q, design.n_cols()),
            sup(0, p),
            sup(p, p + q),
        );
        Self::from_blocks(per_block_k, per_block_m, sigma, fit.n, design.r, p, q)
    }
}

fn block_counts(b: &BoundInputs) -> [usize; 3] {
    [b.r, b.p, b.q]
}

fn block_ms(b: &BoundInputs) -> [f64; 3] {
    [b.per_block_m.0, b.per_block_m.1, b.per_block_m.2]
}

/// The sharpest of the squared-norm cross combinations; drives the refined
/// bound's second-order term.
pub fn k_star(b: &BoundInputs) -> f64 {
    let (kl, kg, kt) = b.per_block_k;
    [
        kl * kl,
        kg * kg,
        kt * kt,
        2.0 * kl * kg,
        2.0 * kl * kt,
        2.0 * kg * kt,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// First-order mean squared prediction error bound:
/// (2 K_max M_max sigma / sqrt(n)) * sum over nonempty blocks of
/// sqrt(2 ln(2 count)). With p = q = 0 this is the familiar lasso
/// consistency rate in a single term.
pub fn mspe_bound(b: &BoundInputs) -> f64 {
    let sum: f64 = block_counts(b)
        .into_iter()
        .filter(|c| *c > 0)
        .map(|c| (2.0 * (2.0 * c as f64).ln()).sqrt())
        .sum();
    2.0 * b.k_max * b.m_max * b.sigma / (b.n as f64).sqrt() * sum
}

/// Refined bound: the first-order term plus second-order cross terms
/// 8 K* sum over nonempty block pairs (i, j) of
/// M_i M_j sqrt(2 ln(2 a_i a_j) / n), with (a_1, a_2, a_3) = (r, p, q).
pub fn mspe_bound_refined(b: &BoundInputs) -> f64 {
    let a = block_counts(b);
    let m = block_ms(b);
    let mut cross = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            if a[i] > 0 && a[j] > 0 {
                cross += m[i]
                    * m[j]
                    * (2.0 * (2.0 * (a[i] * a[j]) as f64).ln() / b.n as f64).sqrt();
            }
        }
    }
    mspe_bound(b) + 8.0 * k_star(b) * cross
}

/// Sample autocorrelations of `series` at lags 1..=max_lag using the biased
/// (1/n) autocovariance, which keeps the sequence positive semidefinite.
/// The lag-0 value is 1 by definition and not included. A constant series
/// has zero variance; its autocorrelations are reported as all zeros.
pub fn residual_acf(series: &[f64], max_lag: usize) -> Result<Vec<f64>> {
    if max_lag == 0 {
        return Err(RegarmaError::InvalidConfig(
            "max_lag must be at least 1".into(),
        ));
    }
    if series.len() <= max_lag {
        return Err(RegarmaError::TooShort {
            len: series.len(),
            max_lag,
        });
    }
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let centered: Array1<f64> = series.iter().map(|v| v - mean).collect();
    let c0 = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    // constant up to rounding noise relative to the series magnitude
    let spread = centered.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if spread <= 1e-12 * mean.abs().max(1.0) {
        return Ok(vec![0.0; max_lag]);
    }
    let mut acf = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let ck = (k..n).map(|t| centered[t] * centered[t - k]).sum::<f64>() / n as f64;
        acf.push(ck / c0);
    }
    Ok(acf)
}
