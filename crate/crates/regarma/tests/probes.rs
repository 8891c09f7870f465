//! Directional Monte Carlo checks: the dynamic model family against the
//! pure-regression baseline, exact-zero recovery, shrinkage bias, and the
//! shape of the studentized estimates. Everything is seeded; observed
//! margins are far from the asserted thresholds.

use regarma::*;

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[test]
fn regarma_beats_lasso_on_dynamic_truth() {
    let grid = ExperimentGrid {
        t_values: vec![250],
        r_values: vec![25],
        sigma_values: vec![0.5],
        zero_props: vec![0.5],
        replicates: 10,
        base_seed: 4242,
        dgp_p: 2,
        dgp_q: 1,
        grid_points: 12,
        cell_budget_secs: 600.0,
    };
    let rows = run_comparison(&grid).unwrap();
    assert_eq!(rows.len(), 40);
    let mspe_of = |method: MethodLabel, rep: usize| {
        rows.iter()
            .find(|r| r.method == method && r.replicate == rep)
            .unwrap()
            .mspe
    };
    let wins = (0..10)
        .filter(|&rep| {
            mspe_of(MethodLabel::AdaptiveRegarma, rep) < mspe_of(MethodLabel::AdaptiveLasso, rep)
        })
        .count();
    assert!(wins >= 8, "REGARMA won only {wins}/10 replicates");
}

#[test]
fn zero_recovery_improves_with_sample_size_and_adaptivity() {
    let dgp = DgpSpec {
        r: 10,
        zero_prop: 0.9,
        sigma: 0.5,
        p: 1,
        q: 1,
    };
    let rows = run_oracle_experiment(&[100, 200, 400], 30, &dgp, 1234, 0.5).unwrap();
    assert_eq!(rows.len(), 3);
    let last = rows.last().unwrap();
    assert!(
        last.adaptive_zero_recovery >= 0.8,
        "zero recovery at T=400 was {}",
        last.adaptive_zero_recovery
    );
    // nondecreasing in T up to one inversion
    let inversions = rows
        .windows(2)
        .filter(|w| w[1].adaptive_zero_recovery < w[0].adaptive_zero_recovery)
        .count();
    assert!(inversions <= 1, "{inversions} trend inversions");
    for row in &rows {
        assert!(
            row.plain_zero_recovery <= row.adaptive_zero_recovery,
            "plain beat adaptive at T={}",
            row.t_len
        );
        assert!(row.adaptive_nonzero_coverage >= 0.9);
    }
}

#[test]
fn fixed_penalty_shrinkage_bias_is_negative() {
    let truth = [0.9, 0.8, 0.7, 0.6, 0.5];
    let out = run_bias_experiment(
        60,
        200,
        &truth,
        &[0.4],
        &[0.3],
        0.5,
        BiasPenaltyPolicy::FixedFraction(0.5),
        777,
    )
    .unwrap();
    assert!(out.mean_bias_plain < 0.0);
    let t_stat = out.mean_bias_plain / out.se_plain;
    assert!(t_stat < -2.0, "t statistic was {t_stat}");
}

#[test]
fn adaptive_variant_at_its_rate_is_less_biased() {
    let truth = [0.9, 0.8, 0.7, 0.6, 0.5];
    let fixed = run_bias_experiment(
        60,
        200,
        &truth,
        &[0.4],
        &[0.3],
        0.5,
        BiasPenaltyPolicy::FixedFraction(0.5),
        777,
    )
    .unwrap();
    let oracle_rate = run_bias_experiment(
        60,
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
        oracle_rate.mean_bias_adaptive.abs() < fixed.mean_bias_plain.abs(),
        "adaptive {} vs plain {}",
        oracle_rate.mean_bias_adaptive,
        fixed.mean_bias_plain
    );
}

#[test]
fn near_noiseless_bias_is_penalty_only() {
    let truth = [0.9, 0.8, 0.7, 0.6, 0.5];
    let out = run_bias_experiment(
        20,
        200,
        &truth,
        &[0.4],
        &[0.3],
        1e-12,
        BiasPenaltyPolicy::BicSelected,
        778,
    )
    .unwrap();
    assert!(
        out.mean_bias_adaptive.abs() < 1e-3,
        "adaptive bias {}",
        out.mean_bias_adaptive
    );
}

#[test]
fn studentized_support_estimates_look_normal() {
    let out = run_normality_probe(
        200,
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
    assert_eq!(out.samples, 400);
    assert!(out.qq_corr >= 0.99, "qq correlation {}", out.qq_corr);
    assert!(out.skewness.abs() <= 0.3, "skewness {}", out.skewness);
}

#[test]
fn prediction_error_shrinks_with_sample_size() {
    let mut means = Vec::new();
    for (i, t_len) in [60usize, 120, 240].into_iter().enumerate() {
        let mut vals = Vec::new();
        for rep in 0..10u64 {
            let seed = derive_seed(5150, i as u64, rep);
            let cfg = SimulationConfig::new(t_len, 5, 0.5, 0.5, 1, 1, seed);
            let (ds, truth) = generate_dataset(&cfg).unwrap();
            let (std, tr) = standardize(&ds).unwrap();
            let grid = default_grid(lambda_max_for(&std, 1, 1).unwrap(), 10);
            let sel = select_penalties(
                &std,
                1,
                1,
                &grid,
                Criterion::Bic,
                &SelectOptions::default(),
            )
            .unwrap();
            let fit = sel.best_fit;
            let oracle: Vec<f64> = fit
                .times
                .iter()
                .map(|&t| (ds.y[t] - truth.errors[t] - tr.y_mean) / tr.y_scale)
                .collect();
            let v = mspe_hat(fit.fitted.as_slice().unwrap(), &oracle).unwrap();
            assert!(v.is_finite() && v > 0.0);
            vals.push(v);
        }
        means.push(mean(&vals));
    }
    assert!(
        means[2] < means[0],
        "mspe means did not fall: {means:?}"
    );
}

#[test]
fn pipeline_recovers_sparse_support() {
    let mut good_replicates = 0;
    for rep in 0..10u64 {
        let seed = derive_seed(6001, 0, rep);
        let cfg = SimulationConfig::new(250, 5, 0.5, 0.5, 1, 1, seed);
        let (ds, truth) = generate_dataset(&cfg).unwrap();
        let (std, _) = standardize(&ds).unwrap();
        let grid = default_grid(lambda_max_for(&std, 1, 1).unwrap(), 15);
        let sel = select_penalties(
            &std,
            1,
            1,
            &grid,
            Criterion::Bic,
            &SelectOptions::default(),
        )
        .unwrap();
        let correct = sel
            .best_fit
            .beta
            .iter()
            .zip(&truth.beta0)
            .filter(|(est, tru)| (est.abs() > COEF_ZERO_TOL) == (**tru != 0.0))
            .count();
        if correct >= 4 {
            good_replicates += 1;
        }
    }
    assert!(
        good_replicates >= 8,
        "support recovered in only {good_replicates}/10 replicates"
    );
}
