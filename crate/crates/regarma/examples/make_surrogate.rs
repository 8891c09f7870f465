//! Regenerates `data/ise_surrogate.csv`, the synthetic daily-return panel
//! used by the end-to-end tests: seven index-return regressors driven by a
//! shared market factor, and a response built from three of them plus
//! lagged-response and lagged-residual dynamics.
//!
//!     cargo run -p regarma --example make_surrogate
//!
//! The write is deterministic, so rerunning must leave the file unchanged.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const T_LEN: usize = 530;
const BURN_IN: usize = 300;
const SEED: u64 = 20090105;

const NAMES: [&str; 7] = ["sp", "dax", "ftse", "nikkei", "bovespa", "em", "eu"];
/// Correlation with the common market factor, per index.
const LOADINGS: [f64; 7] = [0.82, 0.74, 0.70, 0.55, 0.60, 0.78, 0.76];
/// Daily volatility scale, per index.
const VOLS: [f64; 7] = [0.012, 0.014, 0.011, 0.015, 0.019, 0.012, 0.013];

const BETA: [f64; 7] = [0.62, 0.0, 0.38, 0.0, 0.0, 0.55, 0.0];
const PHI: [f64; 2] = [0.45, -0.25];
const THETA: [f64; 1] = [0.35];
const SIGMA: f64 = 0.008;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let total = BURN_IN + T_LEN;
    let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };

    // correlated regressors: loading * market factor + idiosyncratic noise
    let mut x = vec![[0.0_f64; 7]; total];
    for row in x.iter_mut() {
        let factor = normal(&mut rng);
        for (j, cell) in row.iter_mut().enumerate() {
            let idio = normal(&mut rng);
            *cell = VOLS[j] * (LOADINGS[j] * factor + (1.0 - LOADINGS[j].powi(2)).sqrt() * idio);
        }
    }

    // eps_t = theta * eps_{t-1} + e_t; y_t = x_t' beta + phi lags + eps_t
    let mut eps = vec![0.0_f64; total];
    let mut y = vec![0.0_f64; total];
    for t in 0..total {
        let mut eps_t = SIGMA * normal(&mut rng);
        for (i, th) in THETA.iter().enumerate() {
            if t > i {
                eps_t += th * eps[t - 1 - i];
            }
        }
        eps[t] = eps_t;
        let mut y_t = eps_t;
        for (j, b) in BETA.iter().enumerate() {
            y_t += b * x[t][j];
        }
        for (j, ph) in PHI.iter().enumerate() {
            if t > j {
                y_t += ph * y[t - 1 - j];
            }
        }
        y[t] = y_t;
    }

    let mut text = String::from("date,ise,");
    text.push_str(&NAMES.join(","));
    text.push('\n');
    let mut dates = Weekdays::starting_monday(2009, 1, 5);
    for t in BURN_IN..total {
        text.push_str(&dates.next_date());
        text.push_str(&format!(",{:.6}", y[t]));
        for j in 0..7 {
            text.push_str(&format!(",{:.6}", x[t][j]));
        }
        text.push('\n');
    }

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/ise_surrogate.csv");
    std::fs::write(path, text).expect("write surrogate csv");
    println!("wrote {T_LEN} rows to {path}");
}

/// Weekday (Mon-Fri) date sequence in ISO format.
struct Weekdays {
    year: i32,
    month: u32,
    day: u32,
    /// 0 = Monday .. 4 = Friday.
    weekday: u32,
}

impl Weekdays {
    fn starting_monday(year: i32, month: u32, day: u32) -> Self {
        Weekdays {
            year,
            month,
            day,
            weekday: 0,
        }
    }

    fn next_date(&mut self) -> String {
        let date = format!("{:04}-{:02}-{:02}", self.year, self.month, self.day);
        let step = if self.weekday == 4 { 3 } else { 1 };
        self.weekday = (self.weekday + 1) % 5;
        for _ in 0..step {
            self.day += 1;
            if self.day > days_in_month(self.year, self.month) {
                self.day = 1;
                self.month += 1;
                if self.month > 12 {
                    self.month = 1;
                    self.year += 1;
                }
            }
        }
        date
    }
}

fn days_in_month(year: i32, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 => {
            if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 {
                29
            } else {
                28
            }
        }
        _ => unreachable!("month out of range"),
    }
}
