//! Synthetic data generation with known sparse truth: sparse regression
//! coefficients, stationary AR/residual-lag coefficients sampled through
//! their partial autocorrelations, and path simulation of the full model.

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{check_stationarity, TimeSeriesDataset};
use crate::error::{RegarmaError, Result};

/// Shape and noise knobs of one simulated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Number of retained time points T.
    pub t_len: usize,
    /// Number of regressor columns.
    pub r: usize,
    /// Fraction of regression coefficients forced to exactly zero.
    pub zero_proportion: f64,
    /// Innovation standard deviation.
    pub sigma: f64,
    /// True AR order.
    pub p: usize,
    /// True residual-lag order.
    pub q: usize,
    pub seed: u64,
    /// Transient steps discarded before the retained window.
    pub burn_in: usize,
}

impl SimulationConfig {
    pub fn new(
        t_len: usize,
        r: usize,
        zero_proportion: f64,
        sigma: f64,
        p: usize,
        q: usize,
        seed: u64,
    ) -> Self {
        Self {
            t_len,
            r,
            zero_proportion,
            sigma,
            p,
            q,
            seed,
            burn_in: 500,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_len == 0 || self.r == 0 {
            return Err(RegarmaError::InvalidConfig(
                "t_len and r must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.zero_proportion) {
            return Err(RegarmaError::InvalidConfig(format!(
                "zero_proportion must lie in [0, 1), got {}",
                self.zero_proportion
            )));
        }
        if !(self.sigma > 0.0) {
            return Err(RegarmaError::InvalidConfig(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.p + self.q >= self.t_len {
            return Err(RegarmaError::OrderTooLarge {
                order: self.p + self.q,
                t_len: self.t_len,
            });
        }
        if self.burn_in == 0 {
            return Err(RegarmaError::InvalidConfig("burn_in must be positive".into()));
        }
        Ok(())
    }
}

/// The parameters a simulated dataset was generated from, plus the retained
/// innovation paths (useful for oracle predictions: y - errors is the true
/// one-step conditional mean).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTruth {
    pub beta0: Vec<f64>,
    pub phi0: Vec<f64>,
    pub theta0: Vec<f64>,
    pub sigma: f64,
    /// Retained residual-series path (the series whose lags drive the
    /// residual-lag block), length T.
    pub eps: Vec<f64>,
    /// Retained white-noise path e_t, length T.
    pub errors: Vec<f64>,
}

/// floor(r * zero_proportion) coefficients are exactly zero at uniformly
/// chosen positions; the rest are i.i.d. uniform on (-1, 1) excluding a
/// +-0.05 dead zone around zero, resampled until pairwise distinct.
pub fn sample_sparse_beta(r: usize, zero_proportion: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n_zero = ((r as f64) * zero_proportion).floor() as usize;
    let zero_positions = rand::seq::index::sample(rng, r, n_zero.min(r));
    let mut is_zero = vec![false; r];
    for idx in zero_positions.iter() {
        is_zero[idx] = true;
    }
    let mut beta = vec![0.0; r];
    let mut used: Vec<f64> = Vec::new();
    for (j, z) in is_zero.iter().enumerate() {
        if *z {
            continue;
        }
        loop {
            let u: f64 = rng.random_range(-1.0..1.0);
            if u.abs() >= 0.05 && !used.contains(&u) {
                used.push(u);
                beta[j] = u;
                break;
            }
        }
    }
    beta
}

/// Samples lag-polynomial coefficients guaranteed stationary: partial
/// autocorrelations i.i.d. uniform on (-0.9, 0.9) mapped through the
/// Durbin-Levinson recursion.
pub fn sample_stationary_coeffs(order: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut coeffs: Vec<f64> = Vec::with_capacity(order);
    for k in 1..=order {
        let kappa: f64 = rng.random_range(-0.9..0.9);
        let prev = coeffs.clone();
        coeffs.clear();
        for j in 0..k - 1 {
            coeffs.push(prev[j] - kappa * prev[k - 2 - j]);
        }
        coeffs.push(kappa);
    }
    let report = check_stationarity(&coeffs);
    assert!(
        report.is_stationary || coeffs.is_empty() || coeffs.iter().all(|c| *c == 0.0),
        "partial-autocorrelation construction produced a non-stationary polynomial: {coeffs:?}"
    );
    coeffs
}

/// Simulates the full recursion and returns the retained window. The draw
/// order is fixed (X coefficients, then X paths column-major, then noise), so
/// identical seeds give identical datasets.
fn simulate_paths(
    cfg: &SimulationConfig,
    beta0: &[f64],
    phi0: &[f64],
    theta0: &[f64],
    rng: &mut ChaCha8Rng,
) -> (TimeSeriesDataset, Vec<f64>, Vec<f64>, Vec<f64>) {
    let total = cfg.burn_in + cfg.t_len;
    let r = cfg.r;

    // Regressor columns: stationary Gaussian AR(1) with unit innovations.
    let x_coeffs: Vec<f64> = (0..r).map(|_| rng.random_range(-0.7..0.7)).collect();
    let mut x_full = Array2::zeros((total, r));
    for (c, a) in x_coeffs.iter().enumerate() {
        let mut prev = 0.0;
        for t in 0..total {
            let eta: f64 = rng.sample(StandardNormal);
            let v = a * prev + eta;
            x_full[[t, c]] = v;
            prev = v;
        }
    }

    let e_full: Vec<f64> = (0..total)
        .map(|_| cfg.sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();

    // eps_t = sum_i theta_i eps_{t-i} + e_t, then
    // y_t = x_t' beta + sum_j phi_j y_{t-j} + eps_t.
    let mut eps_full = vec![0.0; total];
    let mut y_full = vec![0.0; total];
    for t in 0..total {
        let mut eps_t = e_full[t];
        for (i, th) in theta0.iter().enumerate() {
            if t > i {
                eps_t += th * eps_full[t - 1 - i];
            }
        }
        eps_full[t] = eps_t;
        let mut y_t = eps_t;
        for (c, b) in beta0.iter().enumerate() {
            y_t += b * x_full[[t, c]];
        }
        for (j, ph) in phi0.iter().enumerate() {
            if t > j {
                y_t += ph * y_full[t - 1 - j];
            }
        }
        y_full[t] = y_t;
    }

    let keep = cfg.burn_in..total;
    let y = Array1::from_iter(y_full[keep.clone()].iter().copied());
    let mut x = Array2::zeros((cfg.t_len, r));
    for t in 0..cfg.t_len {
        for c in 0..r {
            x[[t, c]] = x_full[[cfg.burn_in + t, c]];
        }
    }
    let names = (0..r).map(|c| format!("x{}", c + 1)).collect();
    let ds = TimeSeriesDataset::new(y, x, names).expect("simulated values are finite");
    (
        ds,
        eps_full[keep.clone()].to_vec(),
        e_full[keep].to_vec(),
        y_full[..cfg.burn_in].to_vec(),
    )
}

/// Draws coefficients and a path from the configured process. The returned
/// dataset is raw (not standardized); standardize it before fitting.
pub fn generate_dataset(cfg: &SimulationConfig) -> Result<(TimeSeriesDataset, SimulationTruth)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let beta0 = sample_sparse_beta(cfg.r, cfg.zero_proportion, &mut rng);
    let phi0 = sample_stationary_coeffs(cfg.p, &mut rng);
    let theta0 = sample_stationary_coeffs(cfg.q, &mut rng);
    finish_generation(cfg, beta0, phi0, theta0, &mut rng)
}

/// Same path machinery with caller-supplied coefficients (for experiments
/// that pin the truth). The coefficients must be stationary.
pub fn generate_with_truth(
    cfg: &SimulationConfig,
    beta0: &[f64],
    phi0: &[f64],
    theta0: &[f64],
) -> Result<(TimeSeriesDataset, SimulationTruth)> {
    cfg.validate()?;
    if beta0.len() != cfg.r || phi0.len() != cfg.p || theta0.len() != cfg.q {
        return Err(RegarmaError::ShapeMismatch(format!(
            "truth shapes ({}, {}, {}) do not match config ({}, {}, {})",
            beta0.len(),
            phi0.len(),
            theta0.len(),
            cfg.r,
            cfg.p,
            cfg.q
        )));
    }
    for (label, coeffs) in [("phi", phi0), ("theta", theta0)] {
        let rep = check_stationarity(coeffs);
        if !rep.is_stationary {
            return Err(RegarmaError::InvalidConfig(format!(
                "{label} coefficients are not stationary (min root modulus {})",
                rep.min_modulus
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    finish_generation(cfg, beta0.to_vec(), phi0.to_vec(), theta0.to_vec(), &mut rng)
}

fn finish_generation(
    cfg: &SimulationConfig,
    beta0: Vec<f64>,
    phi0: Vec<f64>,
    theta0: Vec<f64>,
    rng: &mut ChaCha8Rng,
) -> Result<(TimeSeriesDataset, SimulationTruth)> {
    let (ds, eps, errors, _) = simulate_paths(cfg, &beta0, &phi0, &theta0, rng);
    let truth = SimulationTruth {
        beta0,
        phi0,
        theta0,
        sigma: cfg.sigma,
        eps,
        errors,
    };
    debug_assert!(truth_invariants_hold(&truth));
    Ok((ds, truth))
}

fn truth_invariants_hold(truth: &SimulationTruth) -> bool {
    let nonzero: Vec<f64> = truth
        .beta0
        .iter()
        .copied()
        .filter(|b| *b != 0.0)
        .collect();
    let in_range = nonzero.iter().all(|b| b.abs() < 1.0);
    let distinct = nonzero
        .iter()
        .enumerate()
        .all(|(i, b)| !nonzero[i + 1..].contains(b));
    in_range
        && distinct
        && check_stationarity(&truth.phi0).is_stationary
        && check_stationarity(&truth.theta0).is_stationary
}

/// Derives an independent per-task seed from (base seed, cell index,
/// replicate index) with an avalanche mixer, so parallel tasks never share
/// random state.
pub fn derive_seed(base: u64, cell: u64, replicate: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E3779B97F4A7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }
    mix(mix(mix(base) ^ cell) ^ replicate)
}
