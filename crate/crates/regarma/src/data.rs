//! Datasets, standardization, lag-matrix construction and stationarity checks.

use std::io::Write;
use std::path::Path;

use nalgebra::{Complex, DMatrix};
use ndarray::{s, Array1, Array2};

/// Complex root of a lag polynomial.
pub type Complex64 = Complex<f64>;

use crate::error::{RegarmaError, Result};

/// A time-ordered response vector with an optional regressor matrix.
///
/// Rows are assumed to be in increasing time order; no timestamps are kept.
#[derive(Debug, Clone)]
pub struct TimeSeriesDataset {
    /// Response, length T.
    pub y: Array1<f64>,
    /// Regressors, T x r.
    pub x: Array2<f64>,
    /// Names of the r regressor columns.
    pub column_names: Vec<String>,
    /// True once mean-0 / variance-1 scaling has been applied.
    pub standardized: bool,
}

/// Per-column centering and scaling recorded by [`standardize`], so
/// coefficients and predictions can be mapped back to original units.
#[derive(Debug, Clone)]
pub struct StandardizationTransform {
    pub y_mean: f64,
    pub y_scale: f64,
    pub x_means: Vec<f64>,
    pub x_scales: Vec<f64>,
}

impl TimeSeriesDataset {
    /// Builds a dataset, rejecting non-finite entries and mismatched shapes.
    pub fn new(y: Array1<f64>, x: Array2<f64>, column_names: Vec<String>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(RegarmaError::DimensionMismatch(format!(
                "y has {} rows but X has {}",
                y.len(),
                x.nrows()
            )));
        }
        if column_names.len() != x.ncols() {
            return Err(RegarmaError::DimensionMismatch(format!(
                "{} column names for {} columns",
                column_names.len(),
                x.ncols()
            )));
        }
        if y.is_empty() {
            return Err(RegarmaError::InvalidConfig("empty response".into()));
        }
        for (t, v) in y.iter().enumerate() {
            if !v.is_finite() {
                return Err(RegarmaError::NonFinite {
                    column: "response".into(),
                    row: t,
                });
            }
        }
        for (j, col) in x.columns().into_iter().enumerate() {
            for (t, v) in col.iter().enumerate() {
                if !v.is_finite() {
                    return Err(RegarmaError::NonFinite {
                        column: column_names[j].clone(),
                        row: t,
                    });
                }
            }
        }
        Ok(Self {
            y,
            x,
            column_names,
            standardized: false,
        })
    }

    /// Number of time points T.
    pub fn t_len(&self) -> usize {
        self.y.len()
    }

    /// Number of regressor columns r.
    pub fn n_regressors(&self) -> usize {
        self.x.ncols()
    }

    /// Reads a dataset from a headered CSV file. The named column becomes the
    /// response; every other column whose first data value parses as a number
    /// becomes a regressor. Columns that are entirely non-numeric (dates,
    /// labels) are skipped; a non-numeric cell inside a numeric column is an
    /// error naming the column and row.
    pub fn from_csv(path: &Path, response: &str) -> Result<(Self, Vec<String>)> {
        let mut reader = csv::Reader::from_path(path)
            .map_err(|e| RegarmaError::Csv(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| RegarmaError::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        let resp_idx = headers
            .iter()
            .position(|h| h == response)
            .ok_or_else(|| RegarmaError::Csv(format!("response column '{response}' not found")))?;

        let mut rows: Vec<Vec<String>> = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| RegarmaError::Csv(e.to_string()))?;
            rows.push(record.iter().map(|c| c.trim().to_string()).collect());
        }
        if rows.is_empty() {
            return Err(RegarmaError::Csv("no data rows".into()));
        }

        let mut numeric_cols: Vec<usize> = Vec::new();
        let mut skipped: Vec<String> = Vec::new();
        for j in 0..headers.len() {
            if j == resp_idx {
                continue;
            }
            if rows[0][j].parse::<f64>().is_ok() {
                numeric_cols.push(j);
            } else {
                skipped.push(headers[j].clone());
            }
        }

        let parse = |cell: &str, column: &str, row: usize| -> Result<f64> {
            cell.parse::<f64>()
                .map_err(|_| RegarmaError::Csv(format!("non-numeric value '{cell}' in column '{column}' at data row {row}")))
        };

        let t_len = rows.len();
        let mut y = Array1::zeros(t_len);
        let mut x = Array2::zeros((t_len, numeric_cols.len()));
        for (t, row) in rows.iter().enumerate() {
            y[t] = parse(&row[resp_idx], response, t)?;
            for (k, &j) in numeric_cols.iter().enumerate() {
                x[[t, k]] = parse(&row[j], &headers[j], t)?;
            }
        }
        let names = numeric_cols.iter().map(|&j| headers[j].clone()).collect();
        Ok((Self::new(y, x, names)?, skipped))
    }

    /// Writes the dataset as a headered CSV with the response first.
    pub fn to_csv(&self, path: &Path, response_name: &str) -> Result<()> {
        let mut out = std::fs::File::create(path)?;
        let mut header = vec![response_name.to_string()];
        header.extend(self.column_names.iter().cloned());
        writeln!(out, "{}", header.join(","))?;
        for t in 0..self.t_len() {
            let mut cells = vec![format!("{}", self.y[t])];
            for j in 0..self.n_regressors() {
                cells.push(format!("{}", self.x[[t, j]]));
            }
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

fn mean_and_pop_sd(values: &Array1<f64>) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.sum() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Centers the response and every regressor column to mean 0 and rescales to
/// unit variance (population divisor n). Constant columns are rejected.
pub fn standardize(ds: &TimeSeriesDataset) -> Result<(TimeSeriesDataset, StandardizationTransform)> {
    if ds.t_len() < 2 {
        return Err(RegarmaError::InvalidConfig(
            "standardization needs at least 2 observations".into(),
        ));
    }
    let (y_mean, y_scale) = mean_and_pop_sd(&ds.y);
    if y_scale == 0.0 {
        return Err(RegarmaError::ConstantColumn("response".into()));
    }
    let y = ds.y.mapv(|v| (v - y_mean) / y_scale);

    let mut x = ds.x.clone();
    let mut x_means = Vec::with_capacity(ds.n_regressors());
    let mut x_scales = Vec::with_capacity(ds.n_regressors());
    for (j, mut col) in x.columns_mut().into_iter().enumerate() {
        let owned = col.to_owned();
        let (m, s) = mean_and_pop_sd(&owned);
        if s == 0.0 {
            return Err(RegarmaError::ConstantColumn(ds.column_names[j].clone()));
        }
        col.mapv_inplace(|v| (v - m) / s);
        x_means.push(m);
        x_scales.push(s);
    }

    let out = TimeSeriesDataset {
        y,
        x,
        column_names: ds.column_names.clone(),
        standardized: true,
    };
    Ok((
        out,
        StandardizationTransform {
            y_mean,
            y_scale,
            x_means,
            x_scales,
        },
    ))
}

impl StandardizationTransform {
    /// Maps a standardized dataset back to original units.
    pub fn unstandardize(&self, ds: &TimeSeriesDataset) -> TimeSeriesDataset {
        let y = ds.y.mapv(|v| v * self.y_scale + self.y_mean);
        let mut x = ds.x.clone();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let (m, s) = (self.x_means[j], self.x_scales[j]);
            col.mapv_inplace(|v| v * s + m);
        }
        TimeSeriesDataset {
            y,
            x,
            column_names: ds.column_names.clone(),
            standardized: false,
        }
    }

    /// Maps regression coefficients estimated on the standardized scale back
    /// to original units: beta_j = beta_std_j * s_y / s_j.
    pub fn regression_coefs_to_original(&self, beta_std: &[f64]) -> Vec<f64> {
        beta_std
            .iter()
            .zip(&self.x_scales)
            .map(|(b, s)| b * self.y_scale / s)
            .collect()
    }

    /// Maps original-scale regression coefficients onto the standardized
    /// scale: beta_std_j = beta_j * s_j / s_y.
    pub fn regression_coefs_to_standardized(&self, beta: &[f64]) -> Vec<f64> {
        beta.iter()
            .zip(&self.x_scales)
            .map(|(b, s)| b * s / self.y_scale)
            .collect()
    }
}

/// The stacked design used by the penalized solver: block order is
/// (AR lags of y | lags of the residual series | regressors), over the
/// effective sample t = T0+1 .. T with T0 = p + q.
#[derive(Debug, Clone)]
pub struct LagDesign {
    /// n x (p + q + r) design matrix.
    pub h: Array2<f64>,
    /// Responses on the effective sample, length n.
    pub y_eff: Array1<f64>,
    pub p: usize,
    pub q: usize,
    pub r: usize,
    /// Number of conditioning observations, p + q.
    pub t0: usize,
    /// Effective sample size T - T0.
    pub n: usize,
}

impl LagDesign {
    /// Total column count p + q + r.
    pub fn n_cols(&self) -> usize {
        self.p + self.q + self.r
    }

    /// Returns a copy keeping only the rows where `keep` is true.
    pub fn filter_rows(&self, keep: &[bool]) -> Result<LagDesign> {
        if keep.len() != self.n {
            return Err(RegarmaError::LengthMismatch {
                left: keep.len(),
                right: self.n,
            });
        }
        let idx: Vec<usize> = keep
            .iter()
            .enumerate()
            .filter_map(|(i, &k)| k.then_some(i))
            .collect();
        if idx.is_empty() {
            return Err(RegarmaError::InvalidConfig("row filter keeps no rows".into()));
        }
        let mut h = Array2::zeros((idx.len(), self.n_cols()));
        let mut y_eff = Array1::zeros(idx.len());
        for (row, &i) in idx.iter().enumerate() {
            h.slice_mut(s![row, ..]).assign(&self.h.slice(s![i, ..]));
            y_eff[row] = self.y_eff[i];
        }
        Ok(LagDesign {
            h,
            y_eff,
            p: self.p,
            q: self.q,
            r: self.r,
            t0: self.t0,
            n: idx.len(),
        })
    }
}

/// Assembles the lagged design for orders (p, q). `eps` supplies the residual
/// series whose lags fill the middle block, aligned to the original time
/// index (an all-zero vector is fine when q = 0).
pub fn build_lag_design(
    ds: &TimeSeriesDataset,
    p: usize,
    q: usize,
    eps: &Array1<f64>,
) -> Result<LagDesign> {
    let t_len = ds.t_len();
    let t0 = p + q;
    if t0 >= t_len {
        return Err(RegarmaError::OrderTooLarge { order: t0, t_len });
    }
    if eps.len() != t_len {
        return Err(RegarmaError::LengthMismatch {
            left: eps.len(),
            right: t_len,
        });
    }
    let r = ds.n_regressors();
    let n = t_len - t0;
    let mut h = Array2::zeros((n, p + q + r));
    let mut y_eff = Array1::zeros(n);
    // Row `row` corresponds to original (0-based) time index t = t0 + row.
    for row in 0..n {
        let t = t0 + row;
        for j in 0..p {
            h[[row, j]] = ds.y[t - 1 - j];
        }
        for i in 0..q {
            h[[row, p + i]] = eps[t - 1 - i];
        }
        for c in 0..r {
            h[[row, p + q + c]] = ds.x[[t, c]];
        }
        y_eff[row] = ds.y[t];
    }
    Ok(LagDesign {
        h,
        y_eff,
        p,
        q,
        r,
        t0,
        n,
    })
}

/// Root locations of 1 - c1 L - ... - ck L^k together with the stationarity
/// verdict (all roots strictly outside the unit circle, with a small margin).
#[derive(Debug, Clone)]
pub struct StationarityReport {
    pub roots: Vec<Complex64>,
    pub min_modulus: f64,
    pub is_stationary: bool,
}

/// Margin above unit modulus used to call a root "outside the unit circle".
pub const STATIONARITY_MARGIN: f64 = 1e-8;

/// Computes the roots of 1 - c1 L - ... - ck L^k via the companion matrix of
/// the reciprocal polynomial and reports whether they all lie outside the
/// unit circle. Trailing zero coefficients are trimmed first; an empty
/// coefficient list is vacuously stationary.
pub fn check_stationarity(coeffs: &[f64]) -> StationarityReport {
    let mut trimmed: Vec<f64> = coeffs.to_vec();
    while trimmed.last() == Some(&0.0) {
        trimmed.pop();
    }
    let k = trimmed.len();
    if k == 0 {
        return StationarityReport {
            roots: Vec::new(),
            min_modulus: f64::INFINITY,
            is_stationary: true,
        };
    }
    // z = 1/L turns 1 - sum c_i L^i = 0 into z^k - c1 z^{k-1} - ... - ck = 0,
    // whose companion matrix has the coefficients along the first row.
    let mut companion = DMatrix::<f64>::zeros(k, k);
    for (i, c) in trimmed.iter().enumerate() {
        companion[(0, i)] = *c;
    }
    for i in 1..k {
        companion[(i, i - 1)] = 1.0;
    }
    let eigen = companion.complex_eigenvalues();
    let roots: Vec<Complex64> = eigen
        .iter()
        .map(|z| {
            let z = Complex64::new(z.re, z.im);
            if z.norm() == 0.0 {
                Complex64::new(f64::INFINITY, 0.0)
            } else {
                z.inv()
            }
        })
        .collect();
    let min_modulus = roots
        .iter()
        .map(|l| l.norm())
        .fold(f64::INFINITY, f64::min);
    StationarityReport {
        is_stationary: min_modulus > 1.0 + STATIONARITY_MARGIN,
        roots,
        min_modulus,
    }
}
