//! Weighted l1-penalized least squares by cyclic coordinate descent.
//!
//! This is the shared optimizer under every model variant. The objective is
//!
//! ```text
//! Q(c) = || y_eff - H c ||^2  +  sum_j pen_j |c_j|
//! ```
//!
//! with raw (unnormalized) residual sum of squares, so penalty magnitudes are
//! on the same scale as the squared-error term. Coordinates are visited in a
//! fixed cyclic order for determinism; each update is the soft-threshold of
//! the partial-residual correlation.

use ndarray::{Array1, Array2};

use crate::data::LagDesign;
use crate::error::{RegarmaError, Result};

/// Per-coefficient penalty weights, one vector per coefficient block. The
/// concatenated order matches [`LagDesign`]: AR lags, then residual lags,
/// then regressors.
#[derive(Debug, Clone, PartialEq)]
pub struct PenaltyConfig {
    /// Regression-block penalties, length r.
    pub lambda_weights: Vec<f64>,
    /// AR-block penalties, length p.
    pub gamma_weights: Vec<f64>,
    /// Residual-lag-block penalties, length q.
    pub tau_weights: Vec<f64>,
}

impl PenaltyConfig {
    pub fn new(
        gamma_weights: Vec<f64>,
        tau_weights: Vec<f64>,
        lambda_weights: Vec<f64>,
    ) -> Result<Self> {
        let cfg = Self {
            lambda_weights,
            gamma_weights,
            tau_weights,
        };
        cfg.validate_values()?;
        Ok(cfg)
    }

    /// Every penalty equal to `level`, for a (p, q, r)-shaped problem.
    pub fn uniform(p: usize, q: usize, r: usize, level: f64) -> Result<Self> {
        Self::new(vec![level; p], vec![level; q], vec![level; r])
    }

    /// Constant penalty per block: `gamma` on AR lags, `tau` on residual
    /// lags, `lambda` on regressors.
    pub fn from_scales(p: usize, q: usize, r: usize, gamma: f64, tau: f64, lambda: f64) -> Result<Self> {
        Self::new(vec![gamma; p], vec![tau; q], vec![lambda; r])
    }

    pub fn p(&self) -> usize {
        self.gamma_weights.len()
    }

    pub fn q(&self) -> usize {
        self.tau_weights.len()
    }

    pub fn r(&self) -> usize {
        self.lambda_weights.len()
    }

    /// Penalties concatenated in design order (AR | residual lags | X).
    pub fn concat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.p() + self.q() + self.r());
        out.extend_from_slice(&self.gamma_weights);
        out.extend_from_slice(&self.tau_weights);
        out.extend_from_slice(&self.lambda_weights);
        out
    }

    fn validate_values(&self) -> Result<()> {
        for w in self
            .gamma_weights
            .iter()
            .chain(&self.tau_weights)
            .chain(&self.lambda_weights)
        {
            if !w.is_finite() || *w < 0.0 {
                return Err(RegarmaError::InvalidConfig(format!(
                    "penalty weights must be nonnegative and finite, got {w}"
                )));
            }
        }
        Ok(())
    }

    /// Checks block lengths against a design.
    pub fn validate_for(&self, design: &LagDesign) -> Result<()> {
        self.validate_values()?;
        if self.p() != design.p || self.q() != design.q || self.r() != design.r {
            return Err(RegarmaError::DimensionMismatch(format!(
                "penalty blocks ({}, {}, {}) do not match design ({}, {}, {})",
                self.p(),
                self.q(),
                self.r(),
                design.p,
                design.q,
                design.r
            )));
        }
        Ok(())
    }
}

/// Knobs for the coordinate-descent loop.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Maximum number of full sweeps over the coordinates.
    pub max_iter: usize,
    /// Convergence threshold on the largest single-coordinate change in one
    /// sweep.
    pub tol: f64,
    /// Optimality certificate threshold; a solve is only reported converged
    /// once the subgradient violation is below this.
    pub kkt_tol: f64,
    /// Starting point (design order); zeros when absent. Results must not
    /// depend on this beyond the tolerances.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iter: 10_000,
            tol: 1e-7,
            kkt_tol: 1e-6,
            warm_start: None,
        }
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Coefficients in design order (AR | residual lags | X).
    pub coefficients: Array1<f64>,
    /// Penalized objective at the returned coefficients.
    pub objective: f64,
    /// Number of sweeps performed.
    pub iterations: usize,
    /// True when both the coordinate-change and subgradient tests passed.
    pub converged: bool,
    /// Maximal subgradient violation at the returned coefficients.
    pub kkt_violation: f64,
}

fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

fn objective_of(h: &Array2<f64>, y: &Array1<f64>, pens: &[f64], coefs: &Array1<f64>) -> f64 {
    let res = y - &h.dot(coefs);
    let rss = res.iter().map(|v| v * v).sum::<f64>();
    let pen: f64 = pens
        .iter()
        .zip(coefs.iter())
        .map(|(w, c)| w * c.abs())
        .sum();
    rss + pen
}

fn kkt_of(h: &Array2<f64>, y: &Array1<f64>, pens: &[f64], coefs: &Array1<f64>) -> f64 {
    let res = y - &h.dot(coefs);
    let mut worst = 0.0_f64;
    for (j, col) in h.columns().into_iter().enumerate() {
        let grad = -2.0 * col.dot(&res);
        let v = if coefs[j] != 0.0 {
            (grad + pens[j] * coefs[j].signum()).abs()
        } else {
            (grad.abs() - pens[j]).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// Minimizes the penalized objective over the design by cyclic coordinate
/// descent. Columns with zero norm keep coefficient 0 and are skipped. A run
/// that exhausts `max_iter` without meeting both tolerances is returned with
/// `converged = false` — that is not an error.
pub fn solve_weighted_lasso(
    design: &LagDesign,
    penalties: &PenaltyConfig,
    options: &SolverOptions,
) -> Result<SolveResult> {
    penalties.validate_for(design)?;
    if design.n == 0 {
        return Err(RegarmaError::TooFewSamples {
            n: 0,
            k: design.n_cols(),
        });
    }
    let h = &design.h;
    let y = &design.y_eff;
    let pens = penalties.concat();
    let n_cols = design.n_cols();

    let mut coefs: Array1<f64> = match &options.warm_start {
        Some(start) => {
            if start.len() != n_cols {
                return Err(RegarmaError::LengthMismatch {
                    left: start.len(),
                    right: n_cols,
                });
            }
            Array1::from(start.clone())
        }
        None => Array1::zeros(n_cols),
    };

    let col_norms_sq: Vec<f64> = h
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();

    // Zero-norm columns cannot carry signal; pin them to 0 up front so the
    // residual bookkeeping below stays exact.
    for j in 0..n_cols {
        if col_norms_sq[j] == 0.0 {
            coefs[j] = 0.0;
        }
    }

    let mut residual = y - &h.dot(&coefs);
    let mut prev_objective = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < options.max_iter {
        iterations += 1;
        let mut max_change = 0.0_f64;
        for j in 0..n_cols {
            let s = col_norms_sq[j];
            if s == 0.0 {
                continue;
            }
            let col = h.column(j);
            let old = coefs[j];
            // Correlation with the partial residual (residual with this
            // coordinate's own contribution added back).
            let corr = col.dot(&residual) + s * old;
            let new = soft_threshold(corr, pens[j] / 2.0) / s;
            if new != old {
                let delta = new - old;
                for (res_t, h_t) in residual.iter_mut().zip(col.iter()) {
                    *res_t -= h_t * delta;
                }
                coefs[j] = new;
                max_change = max_change.max(delta.abs());
            }
        }
        if cfg!(debug_assertions) {
            let obj = objective_of(h, y, &pens, &coefs);
            debug_assert!(
                obj <= prev_objective * (1.0 + 1e-12) + 1e-12,
                "objective increased across a sweep: {prev_objective} -> {obj}"
            );
            prev_objective = obj;
        }
        if max_change < options.tol {
            // Coordinate stability alone can mask a stale subgradient; only
            // declare victory once the certificate agrees.
            if kkt_of(h, y, &pens, &coefs) <= options.kkt_tol {
                converged = true;
                break;
            }
        }
    }

    let objective = objective_of(h, y, &pens, &coefs);
    let kkt_violation = kkt_of(h, y, &pens, &coefs);
    Ok(SolveResult {
        coefficients: coefs,
        objective,
        iterations,
        converged,
        kkt_violation,
    })
}

/// Maximal subgradient violation of `coefficients` for the given problem:
/// for a nonzero coordinate the stationarity defect, for a zero coordinate
/// the amount by which the gradient escapes the penalty interval.
pub fn kkt_residual(
    design: &LagDesign,
    penalties: &PenaltyConfig,
    coefficients: &Array1<f64>,
) -> Result<f64> {
    penalties.validate_for(design)?;
    if coefficients.len() != design.n_cols() {
        return Err(RegarmaError::DimensionMismatch(format!(
            "{} coefficients for a {}-column design",
            coefficients.len(),
            design.n_cols()
        )));
    }
    Ok(kkt_of(
        &design.h,
        &design.y_eff,
        &penalties.concat(),
        coefficients,
    ))
}

/// Penalized objective at an arbitrary coefficient vector.
pub fn objective_value(
    design: &LagDesign,
    penalties: &PenaltyConfig,
    coefficients: &Array1<f64>,
) -> Result<f64> {
    penalties.validate_for(design)?;
    if coefficients.len() != design.n_cols() {
        return Err(RegarmaError::DimensionMismatch(format!(
            "{} coefficients for a {}-column design",
            coefficients.len(),
            design.n_cols()
        )));
    }
    Ok(objective_of(
        &design.h,
        &design.y_eff,
        &penalties.concat(),
        coefficients,
    ))
}

/// Smallest uniform penalty that shrinks every coefficient to zero:
/// max over columns of 2 |h_j' y_eff|.
pub fn lambda_max(design: &LagDesign) -> f64 {
    design
        .h
        .columns()
        .into_iter()
        .map(|c| 2.0 * c.dot(&design.y_eff).abs())
        .fold(0.0, f64::max)
}
