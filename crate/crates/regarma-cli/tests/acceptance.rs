//! Acceptance gate: nine numbered end-to-end checks, each printing one
//! `[ACCEPTANCE] <n> ...: PASS` line (run with `-- --nocapture` to see them)
//! and asserting its own wall-clock budget. Tolerances are pinned in the
//! assertions, not configurable.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ndarray::{Array1, Array2};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regarma::{
    default_grid, derive_seed, design_for_fit, generate_dataset, kkt_residual, lambda_max_for,
    mspe_bound, mspe_bound_refined, mspe_hat, objective_value, run_bias_experiment,
    run_comparison, run_normality_probe, run_oracle_experiment, select_penalties,
    solve_weighted_lasso, standardize, BiasPenaltyPolicy, BoundInputs, Criterion, DgpSpec,
    ExperimentGrid, LagDesign, MethodLabel, PenaltyConfig, SelectOptions, SimulationConfig,
    SolverOptions,
};

struct Budget {
    criterion: &'static str,
    started: Instant,
    limit_secs: u64,
}

impl Budget {
    fn start(criterion: &'static str, limit_secs: u64) -> Self {
        Budget {
            criterion,
            started: Instant::now(),
            limit_secs,
        }
    }

    fn pass(self, details: &str) {
        let elapsed = self.started.elapsed().as_secs_f64();
        println!(
            "[ACCEPTANCE] {}: PASS ({details}) in {elapsed:.1}s (budget {}s)",
            self.criterion, self.limit_secs
        );
        assert!(
            elapsed < self.limit_secs as f64,
            "{} exceeded its {}s budget ({elapsed:.1}s)",
            self.criterion,
            self.limit_secs
        );
    }
}

fn soft(u: f64, threshold: f64) -> f64 {
    u.signum() * (u.abs() - threshold).max(0.0)
}

fn l1(v: &[f64]) -> f64 {
    v.iter().map(|c| c.abs()).sum()
}

fn regression_design(h: Array2<f64>, y: Array1<f64>) -> LagDesign {
    let (n, cols) = (h.nrows(), h.ncols());
    LagDesign {
        h,
        y_eff: y,
        p: 0,
        q: 0,
        r: cols,
        t0: 0,
        n,
    }
}

/// Random standardized design + response + per-coordinate penalties.
fn random_instance(rng: &mut ChaCha8Rng) -> (LagDesign, PenaltyConfig) {
    let n = rng.random_range(12..=50);
    let cols = rng.random_range(1..=10usize);
    let mut h = Array2::from_shape_fn((n, cols), |_| rng.sample::<f64, _>(StandardNormal));
    // occasional exact duplicate column: non-unique solutions must still
    // certify
    if cols >= 2 && rng.random_bool(0.1) {
        let src = rng.random_range(0..cols);
        let dst = (src + 1) % cols;
        let copied = h.column(src).to_owned();
        h.column_mut(dst).assign(&copied);
    }
    for mut col in h.columns_mut() {
        let m = col.sum() / n as f64;
        let sd = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        col.mapv_inplace(|v| (v - m) / sd);
    }
    let mut y = Array1::from_shape_fn(n, |_| 0.5 * rng.sample::<f64, _>(StandardNormal));
    for j in 0..cols {
        if rng.random_bool(0.6) {
            let w: f64 = rng.random_range(-1.5..1.5);
            y = y + &(h.column(j).to_owned() * w);
        }
    }
    let m = y.sum() / n as f64;
    let sd = (y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64)
        .sqrt()
        .max(1e-12);
    y.mapv_inplace(|v| (v - m) / sd);

    let design = regression_design(h, y);
    let scale = regarma::lambda_max(&design).max(1e-6);
    let pens: Vec<f64> = (0..cols)
        .map(|_| scale * 10f64.powf(rng.random_range(-3.0..0.15)))
        .collect();
    let penalties = PenaltyConfig::new(vec![], vec![], pens).unwrap();
    (design, penalties)
}

/// Certified lower bound on the minimal objective via the dual of the
/// penalized least-squares problem: any nu with |2 h_j' nu| <= pen_j gives
/// D(nu) = ||y||^2 - ||y - nu||^2 <= min objective. The scaled residual of
/// a near-optimal primal point is such a nu, so the gap certifies the
/// solve without any reference solution.
fn dual_bound(design: &LagDesign, pens: &[f64], coefs: &Array1<f64>) -> f64 {
    let residual = &design.y_eff - &design.h.dot(coefs);
    let mut shrink = 1.0_f64;
    for (j, &pen) in pens.iter().enumerate() {
        let v = 2.0 * design.h.column(j).dot(&residual).abs();
        if v > 0.0 {
            shrink = shrink.min(pen / v);
        }
    }
    let nu = residual.mapv(|v| v * shrink);
    let yy = design.y_eff.iter().map(|v| v * v).sum::<f64>();
    let diff = &design.y_eff - &nu;
    yy - diff.iter().map(|v| v * v).sum::<f64>()
}

/// Exact minimum of the objective over the literal lattice
/// {-3.000, -2.999, ..., 3.000}^cols (cols <= 3). The innermost coordinate
/// is resolved in closed form: the restricted objective is strictly convex
/// in it, so the lattice minimum lies at a lattice neighbor of the
/// continuous minimizer.
fn lattice_minimum(design: &LagDesign, pens: &[f64]) -> f64 {
    const STEP: f64 = 1e-3;
    const HALF_RANGE: i64 = 3000;
    let cols = design.r;
    assert!((1..=3).contains(&cols));
    let h = &design.h;
    let y = &design.y_eff;
    let yy = y.iter().map(|v| v * v).sum::<f64>();
    let g = |a: usize, b: usize| h.column(a).dot(&h.column(b));
    let bvec: Vec<f64> = (0..cols).map(|j| h.column(j).dot(y)).collect();

    // closed-form scan over the last coordinate given the partial objective
    // `base` and the linear response u = b_last - sum_others G coupling
    let last = cols - 1;
    let g_last = g(last, last);
    let scan_last = |base: f64, u: f64| -> f64 {
        let continuous = soft(u, pens[last] / 2.0) / g_last;
        let k = (continuous / STEP).floor() as i64;
        let mut best = f64::INFINITY;
        for cand in [k, k + 1] {
            let c = cand.clamp(-HALF_RANGE, HALF_RANGE) as f64 * STEP;
            let value = base + g_last * c * c - 2.0 * u * c + pens[last] * c.abs();
            best = best.min(value);
        }
        best
    };

    let mut best = f64::INFINITY;
    match cols {
        1 => best = scan_last(yy, bvec[0]),
        2 => {
            let (g00, g01) = (g(0, 0), g(0, 1));
            for i0 in -HALF_RANGE..=HALF_RANGE {
                let c0 = i0 as f64 * STEP;
                let base = yy - 2.0 * bvec[0] * c0 + g00 * c0 * c0 + pens[0] * c0.abs();
                best = best.min(scan_last(base, bvec[1] - g01 * c0));
            }
        }
        3 => {
            let (g00, g01, g02) = (g(0, 0), g(0, 1), g(0, 2));
            let (g11, g12) = (g(1, 1), g(1, 2));
            for i0 in -HALF_RANGE..=HALF_RANGE {
                let c0 = i0 as f64 * STEP;
                let base0 = yy - 2.0 * bvec[0] * c0 + g00 * c0 * c0 + pens[0] * c0.abs();
                let u2_base = bvec[2] - g02 * c0;
                for i1 in -HALF_RANGE..=HALF_RANGE {
                    let c1 = i1 as f64 * STEP;
                    let base = base0 - 2.0 * bvec[1] * c1
                        + g11 * c1 * c1
                        + 2.0 * g01 * c0 * c1
                        + pens[1] * c1.abs();
                    best = best.min(scan_last(base, u2_base - g12 * c1));
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

#[test]
fn criterion_1_solver_correctness() {
    let budget = Budget::start("1 solver KKT + oracle objective", 120);
    let mut rng = ChaCha8Rng::seed_from_u64(90210);
    let defaults = SolverOptions::default();
    let tight = SolverOptions {
        max_iter: 200_000,
        tol: 1e-13,
        kkt_tol: 1e-10,
        warm_start: None,
    };

    let mut converged = 0usize;
    let mut max_kkt = 0.0_f64;
    let mut small_instances = 0usize;
    let mut max_gap = 0.0_f64;
    let mut lattice_checked = 0usize;
    for _ in 0..1000 {
        let (design, penalties) = random_instance(&mut rng);
        let solve = solve_weighted_lasso(&design, &penalties, &defaults).unwrap();
        if solve.converged {
            converged += 1;
            let recomputed = kkt_residual(&design, &penalties, &solve.coefficients).unwrap();
            assert!(
                recomputed <= 1e-5,
                "converged solve with kkt violation {recomputed:.3e}"
            );
            max_kkt = max_kkt.max(recomputed);
        }

        if design.r <= 3 {
            small_instances += 1;
            let pens = penalties.lambda_weights.clone();
            let refined = solve_weighted_lasso(&design, &penalties, &tight).unwrap();
            let objective =
                objective_value(&design, &penalties, &refined.coefficients).unwrap();
            // dual gap certifies objective <= true minimum + gap, and the
            // lattice minimum can only sit above the true minimum
            let gap = objective - dual_bound(&design, &pens, &refined.coefficients);
            assert!(
                gap <= 1e-4,
                "duality gap {gap:.3e} on a {}-column instance",
                design.r
            );
            max_gap = max_gap.max(gap);

            // literal lattice oracle on the first few instances per width
            if lattice_checked < 5 {
                let oracle = lattice_minimum(&design, &pens);
                assert!(
                    objective <= oracle + 1e-4,
                    "solver objective {objective:.9} vs lattice oracle {oracle:.9}"
                );
                lattice_checked += 1;
            }
        }
    }
    assert!(
        converged >= 990,
        "only {converged}/1000 default solves converged"
    );
    assert!(small_instances >= 100, "rng produced too few small instances");
    budget.pass(&format!(
        "{converged}/1000 converged, max kkt {max_kkt:.2e}, {small_instances} dual gaps <= {max_gap:.2e}, {lattice_checked} lattice oracles"
    ));
}

#[test]
fn criterion_2_orthonormal_soft_threshold() {
    let budget = Budget::start("2 orthonormal closed form", 60);
    let mut rng = ChaCha8Rng::seed_from_u64(31415);
    let mut max_err = 0.0_f64;
    for _ in 0..50 {
        let n = rng.random_range(20..=40);
        let cols = rng.random_range(2..=8usize);
        // Gram-Schmidt with a second pass for orthonormality to ~1e-14
        let mut h = Array2::from_shape_fn((n, cols), |_| rng.sample::<f64, _>(StandardNormal));
        for _ in 0..2 {
            for j in 0..cols {
                let mut col = h.column(j).to_owned();
                for k in 0..j {
                    let proj = h.column(k).dot(&col);
                    col = col - &(h.column(k).to_owned() * proj);
                }
                let norm = col.dot(&col).sqrt();
                h.column_mut(j).assign(&(col / norm));
            }
        }
        let y = Array1::from_shape_fn(n, |_| rng.sample::<f64, _>(StandardNormal));
        let pens: Vec<f64> = (0..cols).map(|_| rng.random_range(0.01..2.0)).collect();
        let expected: Vec<f64> = (0..cols)
            .map(|j| soft(h.column(j).dot(&y), pens[j] / 2.0))
            .collect();

        let design = regression_design(h, y);
        let penalties = PenaltyConfig::new(vec![], vec![], pens).unwrap();
        let solve = solve_weighted_lasso(&design, &penalties, &SolverOptions::default()).unwrap();
        assert!(solve.converged);
        for (got, want) in solve.coefficients.iter().zip(&expected) {
            let err = (got - want).abs();
            assert!(err <= 1e-8, "solver {got} vs closed form {want}");
            max_err = max_err.max(err);
        }
    }
    budget.pass(&format!("50 designs, max coefficient error {max_err:.2e}"));
}

#[test]
fn criterion_3_bound_validity() {
    let budget = Budget::start("3 prediction-error bound validity", 600);
    let mut tasks = Vec::new();
    for (ci, &t_len) in [50usize, 100, 250].iter().enumerate() {
        for (ri, &r) in [25usize, 200].iter().enumerate() {
            for (si, &sigma) in [0.5, 1.5].iter().enumerate() {
                for rep in 0..10u64 {
                    tasks.push((t_len, r, sigma, (ci * 4 + ri * 2 + si) as u64, rep));
                }
            }
        }
    }
    use rayon::prelude::*;
    let outcomes: Vec<(bool, bool, f64)> = tasks
        .par_iter()
        .map(|&(t_len, r, sigma, cell, rep)| {
            let seed = derive_seed(9090, cell, rep);
            let cfg = SimulationConfig::new(t_len, r, 0.5, sigma, 1, 1, seed);
            let (ds, truth) = generate_dataset(&cfg).unwrap();
            let (std_ds, tr) = standardize(&ds).unwrap();
            let grid = default_grid(lambda_max_for(&std_ds, 1, 1).unwrap(), 10);
            let sel = select_penalties(
                &std_ds,
                1,
                1,
                &grid,
                Criterion::Bic,
                &SelectOptions::default(),
            )
            .unwrap();
            let fit = sel.best_fit;
            let design = design_for_fit(&std_ds, &fit).unwrap();
            let beta_std = tr.regression_coefs_to_standardized(&truth.beta0);
            let inputs = BoundInputs::realized(
                &fit,
                &design,
                truth.sigma / tr.y_scale,
                Some((l1(&beta_std), l1(&truth.phi0), l1(&truth.theta0))),
            )
            .unwrap();
            let basic = mspe_bound(&inputs);
            let refined = mspe_bound_refined(&inputs);
            let oracle: Vec<f64> = fit
                .times
                .iter()
                .map(|&t| (ds.y[t] - truth.errors[t] - tr.y_mean) / tr.y_scale)
                .collect();
            let realized =
                mspe_hat(fit.fitted.as_slice().unwrap(), &oracle).unwrap();
            (realized <= basic, refined >= basic, basic / realized)
        })
        .collect();

    let held = outcomes.iter().filter(|o| o.0).count();
    let ordered = outcomes.iter().filter(|o| o.1).count();
    let min_slack = outcomes.iter().map(|o| o.2).fold(f64::INFINITY, f64::min);
    assert_eq!(held, outcomes.len(), "bound violated in {} runs", outcomes.len() - held);
    assert_eq!(
        ordered,
        outcomes.len(),
        "refined bound fell below the basic bound"
    );
    budget.pass(&format!(
        "{held}/120 bounds hold, {ordered}/120 refinements ordered, min slack {min_slack:.1}x"
    ));
}

#[test]
fn criterion_4_dominance_over_lasso() {
    let budget = Budget::start("4 dynamic model dominates pure regression", 900);
    let grid = ExperimentGrid {
        t_values: vec![100, 250],
        r_values: vec![25, 75],
        sigma_values: vec![0.5, 1.0],
        zero_props: vec![0.5],
        replicates: 10,
        base_seed: 4242,
        dgp_p: 2,
        dgp_q: 1,
        grid_points: 12,
        cell_budget_secs: 600.0,
    };
    let rows = run_comparison(&grid).unwrap();
    assert!(rows.iter().all(|r| r.error.is_none()), "unexpected failure markers");

    type CellKey = (usize, usize, u64, u64);
    let key = |row: &regarma::ComparisonRow| -> CellKey {
        (row.t_len, row.r, row.sigma.to_bits(), row.zero_prop.to_bits())
    };
    let mut mspe_wins = 0usize;
    let mut pairs = 0usize;
    let mut beta_mse: HashMap<(CellKey, MethodLabel), Vec<f64>> = HashMap::new();
    for row in rows.iter().filter(|r| r.method == MethodLabel::AdaptiveRegarma) {
        let rival = rows
            .iter()
            .find(|r| {
                r.method == MethodLabel::AdaptiveLasso
                    && key(r) == key(row)
                    && r.replicate == row.replicate
            })
            .expect("paired baseline row");
        pairs += 1;
        if row.mspe < rival.mspe {
            mspe_wins += 1;
        }
    }
    for row in &rows {
        beta_mse
            .entry((key(row), row.method))
            .or_default()
            .push(row.beta_mse);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mut beta_cells = 0usize;
    let mut beta_wins = 0usize;
    for ((cell, method), values) in &beta_mse {
        if *method != MethodLabel::AdaptiveRegarma {
            continue;
        }
        beta_cells += 1;
        let rival = &beta_mse[&(*cell, MethodLabel::AdaptiveLasso)];
        if mean(values) < mean(rival) {
            beta_wins += 1;
        }
    }
    assert_eq!(pairs, 80);
    assert_eq!(beta_cells, 8);
    assert!(
        mspe_wins as f64 >= 0.70 * pairs as f64,
        "prediction error won only {mspe_wins}/{pairs} pairs"
    );
    assert!(
        beta_wins as f64 >= 0.70 * beta_cells as f64,
        "coefficient error won only {beta_wins}/{beta_cells} cells"
    );
    budget.pass(&format!(
        "mspe wins {mspe_wins}/{pairs} pairs, beta-mse wins {beta_wins}/{beta_cells} cells"
    ));
}

#[test]
fn criterion_5_zero_recovery_trend() {
    let budget = Budget::start("5 exact-zero recovery trend", 600);
    let dgp = DgpSpec {
        r: 10,
        zero_prop: 0.9,
        sigma: 0.5,
        p: 1,
        q: 1,
    };
    let rows = run_oracle_experiment(&[100, 200, 400], 100, &dgp, 1234, 0.5).unwrap();
    let last = rows.last().unwrap();
    assert!(
        last.adaptive_zero_recovery >= 0.80,
        "zero recovery at T=400 was {}",
        last.adaptive_zero_recovery
    );
    let inversions = rows
        .windows(2)
        .filter(|w| w[1].adaptive_zero_recovery < w[0].adaptive_zero_recovery)
        .count();
    assert!(inversions <= 1, "{inversions} trend inversions");
    let rates: Vec<String> = rows
        .iter()
        .map(|r| format!("T={} {:.3}", r.t_len, r.adaptive_zero_recovery))
        .collect();
    budget.pass(&format!("{} ({inversions} inversions)", rates.join(", ")));
}

#[test]
fn criterion_6_fixed_penalty_bias() {
    let budget = Budget::start("6 shrinkage bias sign and adaptive reduction", 300);
    let truth = [0.9, 0.8, 0.7, 0.6, 0.5];
    let plain = run_bias_experiment(
        200,
        200,
        &truth,
        &[0.4],
        &[0.3],
        0.5,
        BiasPenaltyPolicy::FixedFraction(0.5),
        777,
    )
    .unwrap();
    assert!(plain.mean_bias_plain < 0.0, "bias {}", plain.mean_bias_plain);
    let t_stat = plain.mean_bias_plain / plain.se_plain;
    assert!(t_stat.abs() > 2.0, "t statistic {t_stat}");
    let adaptive = run_bias_experiment(
        200,
        200,
        &truth,
        &[0.4],
        &[0.3],
        0.5,
        BiasPenaltyPolicy::OracleRate(0.5),
        777,
    )
    .unwrap();
    assert!(
        adaptive.mean_bias_adaptive.abs() < plain.mean_bias_plain.abs(),
        "adaptive bias {} vs plain {}",
        adaptive.mean_bias_adaptive,
        plain.mean_bias_plain
    );
    budget.pass(&format!(
        "plain bias {:.4} (t {:.1}), adaptive at its rate {:.4}",
        plain.mean_bias_plain, t_stat, adaptive.mean_bias_adaptive
    ));
}

#[test]
fn criterion_7_normality_probe() {
    let budget = Budget::start("7 studentized estimates near-normal", 600);
    let out = run_normality_probe(
        500,
        400,
        &[0.8, 0.5, 0.0, 0.0, 0.0],
        &[0.4],
        &[],
        0.5,
        0.5,
        99,
    )
    .unwrap();
    assert!(!out.insufficient);
    assert!(
        out.qq_corr >= 0.99,
        "normal-quantile correlation {}",
        out.qq_corr
    );
    budget.pass(&format!(
        "qq correlation {:.5}, skewness {:.3}, {} samples",
        out.qq_corr, out.skewness, out.samples
    ));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_regarma"))
}

fn surrogate_csv() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ise_surrogate.csv")
}

#[test]
fn criterion_8_case_study_pipeline() {
    let budget = Budget::start("8 case study (vendored synthetic surrogate)", 300);
    let dir = tempfile::tempdir().unwrap();
    let out = cli()
        .args([
            "fit",
            "--input",
            surrogate_csv().to_str().unwrap(),
            "--response",
            "ise",
            "--pmax",
            "4",
            "--qmax",
            "4",
            "--order-method",
            "b",
            "--criterion",
            "bic",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let metrics = std::fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines.len(), 5);
    // the model label may itself contain a comma ("REGARMA(2,1)"), so peel
    // the four numeric fields off the right
    let parse_row = |line: &str| -> (String, f64) {
        let mut parts = line.rsplitn(5, ',');
        let _df = parts.next().unwrap();
        let bic: f64 = parts.next().unwrap().parse().unwrap();
        let _mae = parts.next().unwrap();
        let _mse = parts.next().unwrap();
        let label = parts.next().unwrap().trim_matches('"').to_string();
        (label, bic)
    };
    let (lasso_label, lasso_bic) = parse_row(lines[1]);
    let (full_label, full_bic) = parse_row(lines[4]);
    assert!(lasso_label.contains("lasso"));
    assert!(
        full_label.contains("REGARMA("),
        "selected orders did not keep both lag kinds: {full_label}"
    );
    assert!(
        full_bic < lasso_bic,
        "{full_label} bic {full_bic} not below {lasso_label} bic {lasso_bic}"
    );
    budget.pass(&format!(
        "{full_label} bic {full_bic:.2} < {lasso_label} bic {lasso_bic:.2}"
    ));
}

#[test]
fn criterion_9_bench_determinism() {
    let budget = Budget::start("9 benchmark rerun is byte-identical", 300);
    let run_bench = |dir: &Path| {
        let out = cli()
            .args([
                "bench",
                "--t-values",
                "60,90",
                "--r-values",
                "8",
                "--sigma-values",
                "0.5",
                "--zero-props",
                "0.5",
                "--replicates",
                "3",
                "--dgp-p",
                "1",
                "--dgp-q",
                "1",
                "--grid-points",
                "6",
                "--seed",
                "2024",
                "--out",
                dir.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_bench(a.path());
    run_bench(b.path());
    let files = [
        "rows.csv",
        "means.csv",
        "manifest.json",
        "figure_mspe_by_t_r.csv",
        "figure_bic_by_t_r.csv",
        "figure_beta_mse_by_t_r.csv",
        "figure_mspe_by_sigma_r_t.csv",
    ];
    for file in files {
        let left = std::fs::read(a.path().join(file)).unwrap();
        let right = std::fs::read(b.path().join(file)).unwrap();
        assert!(!left.is_empty());
        assert_eq!(left, right, "{file} differs between identical runs");
    }
    budget.pass(&format!("{} artifacts byte-identical", files.len()));
}
