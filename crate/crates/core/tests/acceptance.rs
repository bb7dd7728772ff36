//! End-to-end acceptance suite. Runs every criterion sequentially (the
//! wall-clock comparison needs exclusive use of the machine) and prints one
//! PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, InverseGamma};

use geocv::estimators::{
    log_importance_weight, mc_estimate, mc_estimate_with_draws, sir_estimate,
    stratified_mc_estimate_multi, stratified_sir_estimate, EstimatorOutput,
};
use geocv::geodata::{pairwise_distances, GeoDataset};
use geocv::mcmc::{run_chain, ChainConfig, PriorConfig, Target};
use geocv::models::{
    conditional_moments, log_likelihood, predictive_sample, ModelKind, ModelParams,
};
use geocv::rng::derive_rng;
use geocv::scenarios::{simulate_scenario, simulate_with, ScenarioConfig, ScenarioKind};
use geocv::special::trigamma;
use geocv::splits::{sample_uniform_split, split_log_prior, SplitBatch, SplitVector};
use geocv::{DiscrepancyKind, StratifiedDesign};

fn main() {
    let criteria: Vec<(&str, fn())> = vec![
        ("closed-form expected MSE on exhaustive n=6 splits", c1_small_instance_exactness),
        ("SIR matches MC within 15% on the random-sampling scenario", c2_sir_close_to_mc),
        ("model ranking M3 < M1 < M2 on the outlier scenario", c3_outlier_ranking),
        ("contaminated stratum dominates by 2x in stratified runs", c4_stratified_localization),
        ("SIR wall-clock at most one third of MC at matched budgets", c5_speedup),
        ("stratified SIR has smaller SE on the preferential scenario", c6_stratified_variance_reduction),
        ("predictive draws match conditional moments for all models", c7_predictive_law),
        ("prior recovery, conjugate posterior, trigamma, weight identity", c8_machinery),
        ("split priors normalize and match inclusion probabilities", c9_split_priors),
        ("bit-identical results across 1, 2 and 8 worker threads", c10_determinism),
    ];
    // optional criterion numbers as arguments restrict the run
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failures = Vec::new();
    for (i, (desc, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let ok = catch_unwind(AssertUnwindSafe(f)).is_ok();
        println!("criterion {:2} {}: {}", n, if ok { "PASS" } else { "FAIL" }, desc);
        if !ok {
            failures.push(n);
        }
    }
    if !failures.is_empty() {
        println!("acceptance failed for criteria {failures:?}");
        std::process::exit(1);
    }
    println!("acceptance suite passed");
}

fn grid_free_data(n: usize, seed: u64) -> GeoDataset<f64> {
    let mut rng = derive_rng(seed, 9000);
    let locs = (0..n)
        .map(|_| {
            geocv::geodata::Location::new(
                <f64 as geocv::Scalar>::sample_uniform01(&mut rng),
                <f64 as geocv::Scalar>::sample_uniform01(&mut rng),
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .unwrap();
    let y = DVector::from_fn(n, |i, _| 2.0 + (i as f64 * 0.9).sin());
    GeoDataset::new(locs, y, None, None).unwrap()
}

fn c1_small_instance_exactness() {
    let data = grid_free_data(6, 1);
    let splits = SplitBatch {
        splits: (0..6)
            .map(|i| SplitVector::from_validation_indices(6, &[i]).unwrap())
            .collect(),
        seed: 0,
        descriptor: "exhaustive-nv1".into(),
    };
    let params = ModelParams::gaussian(2.0, 1.2, 0.3, 0.4);
    let j = 100_000;
    let draws = vec![vec![params.clone(); j]; 6];
    let out = mc_estimate_with_draws(
        ModelKind::M1,
        &data,
        &splits,
        &draws,
        &[DiscrepancyKind::Mse],
        44,
    )
    .unwrap()
    .pop()
    .unwrap();
    // exact expected MSE: conditional variance plus squared interpolation bias
    let mut exact = 0.0;
    for split in &splits.splits {
        let law = conditional_moments(ModelKind::M1, &params, &data, split).unwrap();
        let vi = split.validation_indices()[0];
        let bias = law.mean[0] - data.y()[vi];
        exact += law.scale[(0, 0)] + bias * bias;
    }
    exact /= 6.0;
    let se = out.variance.unwrap().sqrt();
    assert!(
        (out.psi_hat - exact).abs() <= 3.0 * se,
        "psi {} vs exact {exact}, 3 se {}",
        out.psi_hat,
        3.0 * se
    );
}

fn c2_sir_close_to_mc() {
    let out = simulate_scenario::<f64>(ScenarioKind::Crs, 11).unwrap();
    let data = out.dataset;
    let splits = SplitBatch::uniform(data.n(), 5, 100, 21).unwrap();
    let prior = PriorConfig::default();
    let cfg = ChainConfig::for_draws(500, 2000, 1);
    let mc = mc_estimate(
        ModelKind::M1,
        &data,
        &splits,
        2000,
        DiscrepancyKind::Mse,
        &prior,
        &cfg,
        31,
    )
    .unwrap();
    let sir = sir_estimate(
        ModelKind::M1,
        &data,
        &splits,
        5,
        2000,
        DiscrepancyKind::Mse,
        &prior,
        &cfg,
        41,
    )
    .unwrap();
    let rel = (sir.psi_hat - mc.psi_hat).abs() / mc.psi_hat;
    assert!(
        rel <= 0.15,
        "mc {} vs sir {}, relative gap {rel}",
        mc.psi_hat,
        sir.psi_hat
    );
}

fn psi_by_model(
    data: &GeoDataset<f64>,
    splits: &SplitBatch,
    j: usize,
    h: Option<usize>,
    seed: u64,
) -> Vec<f64> {
    // the benchmark scenarios fix the Student-t degrees of freedom at 3
    let prior = PriorConfig {
        nu_fixed: Some(3.0),
        ..PriorConfig::default()
    };
    let cfg = ChainConfig::for_draws(500, j, 1);
    ModelKind::ALL
        .iter()
        .map(|&model| {
            let out = match h {
                None => mc_estimate(
                    model,
                    data,
                    splits,
                    j,
                    DiscrepancyKind::Mse,
                    &prior,
                    &cfg,
                    seed,
                ),
                Some(h) => sir_estimate(
                    model,
                    data,
                    splits,
                    h,
                    j,
                    DiscrepancyKind::Mse,
                    &prior,
                    &cfg,
                    seed,
                ),
            };
            out.unwrap().psi_hat
        })
        .collect()
}

fn c3_outlier_ranking() {
    let out = simulate_scenario::<f64>(ScenarioKind::CrsOutlier, 11).unwrap();
    let data = out.dataset;
    let splits = SplitBatch::uniform(data.n(), 5, 30, 22).unwrap();
    let mc = psi_by_model(&data, &splits, 300, None, 51);
    let sir = psi_by_model(&data, &splits, 300, Some(3), 61);
    let mut violations = Vec::new();
    for (label, psi) in [("mc", &mc), ("sir", &sir)] {
        let (m1, m2, m3) = (psi[0], psi[1], psi[2]);
        if !(m3 < m1 && m1 < m2) {
            violations.push(format!("{label}: m1={m1:.3} m2={m2:.3} m3={m3:.3}"));
        }
    }
    assert!(violations.is_empty(), "want m3 < m1 < m2; {violations:?}");
}

fn c4_stratified_localization() {
    // contaminate sites that all fall in quadrant 1 of a clean realization
    let clean = simulate_with(&ScenarioConfig::<f64>::crs(), "crs", 13).unwrap();
    let labels = StratifiedDesign::quadrant_labels(clean.dataset.locations());
    let hot: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == 1).take(4).collect();
    assert_eq!(hot.len(), 4, "need 4 sites in the first quadrant");
    let cfg = ScenarioConfig::<f64> {
        outliers: hot,
        ..ScenarioConfig::crs()
    };
    let out = simulate_with(&cfg, "crs", 13).unwrap();
    let data = out.dataset;
    let design = StratifiedDesign::from_labels(labels, vec![2, 2, 2, 2]).unwrap();
    let splits = SplitBatch::stratified(&design, 25, 23).unwrap();
    let prior = PriorConfig {
        nu_fixed: Some(3.0),
        ..PriorConfig::default()
    };
    let chain_cfg = ChainConfig::for_draws(500, 200, 1);
    let mut violations = Vec::new();
    for model in ModelKind::ALL {
        let outs = stratified_mc_estimate_multi(
            model,
            &data,
            &design,
            &splits,
            200,
            &[DiscrepancyKind::Mse, DiscrepancyKind::Mahalanobis],
            &prior,
            &chain_cfg,
            71,
        )
        .unwrap();
        for o in &outs {
            let per = o.per_stratum.as_ref().unwrap();
            let hot_psi = per[0].psi_hat;
            for s in &per[1..] {
                if hot_psi < 2.0 * s.psi_hat {
                    violations.push(format!(
                        "{model:?} {}: stratum 1 at {hot_psi:.3} vs stratum {} at {:.3}",
                        o.discrepancy, s.stratum, s.psi_hat
                    ));
                }
            }
        }
    }
    assert!(
        violations.is_empty(),
        "contaminated stratum below 2x: {violations:?}"
    );
}

fn c5_speedup() {
    let out = simulate_scenario::<f64>(ScenarioKind::Crs, 17).unwrap();
    let data = out.dataset;
    let splits = SplitBatch::uniform(data.n(), 5, 100, 27).unwrap();
    let prior = PriorConfig::default();
    let cfg = ChainConfig::for_draws(500, 100, 20);
    let t0 = Instant::now();
    mc_estimate(
        ModelKind::M1,
        &data,
        &splits,
        100,
        DiscrepancyKind::Mse,
        &prior,
        &cfg,
        81,
    )
    .unwrap();
    let mc_time = t0.elapsed();
    let t1 = Instant::now();
    sir_estimate(
        ModelKind::M1,
        &data,
        &splits,
        5,
        100,
        DiscrepancyKind::Mse,
        &prior,
        &cfg,
        91,
    )
    .unwrap();
    let sir_time = t1.elapsed();
    assert!(
        sir_time.as_secs_f64() <= mc_time.as_secs_f64() / 3.0,
        "sir {:.2}s vs mc {:.2}s",
        sir_time.as_secs_f64(),
        mc_time.as_secs_f64()
    );
}

fn c6_stratified_variance_reduction() {
    let out = simulate_scenario::<f64>(ScenarioKind::Preferential, 19).unwrap();
    let data = out.dataset;
    let labels = StratifiedDesign::quadrant_labels(data.locations());
    let k = *labels.iter().max().unwrap();
    let sizes: Vec<usize> = (1..=k).map(|s| labels.iter().filter(|&&l| l == s).count()).collect();
    // validation allocation proportional to realized stratum sizes
    let n_vk: Vec<usize> = sizes
        .iter()
        .map(|&nk| ((nk as f64 * 8.0 / data.n() as f64).round() as usize).max(1))
        .collect();
    let n_v: usize = n_vk.iter().sum();
    let design = StratifiedDesign::from_labels(labels, n_vk).unwrap();
    let prior = PriorConfig::default();
    let cfg = ChainConfig::for_draws(500, 500, 1);
    let strat_splits = SplitBatch::stratified(&design, 100, 29).unwrap();
    let flat_splits = SplitBatch::uniform(data.n(), n_v, 100, 29).unwrap();
    let strat = stratified_sir_estimate(
        ModelKind::M1,
        &data,
        &design,
        &strat_splits,
        5,
        500,
        DiscrepancyKind::Mse,
        &prior,
        &cfg,
        101,
    )
    .unwrap();
    let flat = sir_estimate(
        ModelKind::M1,
        &data,
        &flat_splits,
        5,
        500,
        DiscrepancyKind::Mse,
        &prior,
        &cfg,
        101,
    )
    .unwrap();
    let se_strat = strat.std_error().unwrap();
    let se_flat = flat.std_error().unwrap();
    assert!(
        se_strat < se_flat,
        "stratified se {se_strat} vs unstratified se {se_flat}"
    );
}

fn c7_predictive_law() {
    let n = 7;
    let n_draws = 100_000;
    let data = grid_free_data(n, 5);
    let split = SplitVector::from_validation_indices(n, &[2, 5]).unwrap();
    let mut log_delta = DVector::zeros(n);
    for i in 0..n {
        log_delta[i] = 0.3 * ((i as f64) * 1.7).sin();
    }
    let cases = vec![
        (ModelKind::M1, ModelParams::gaussian(2.0, 1.0, 0.3, 0.4)),
        (ModelKind::M2, ModelParams::student_t(2.0, 1.0, 0.3, 0.4, 6.0)),
        (ModelKind::M3, ModelParams::glg(2.0, 1.0, 0.3, 0.4, 0.8, log_delta)),
    ];
    for (model, params) in cases {
        let mut rng = derive_rng(131, model as u64);
        let mut sum = DVector::<f64>::zeros(2);
        let mut sum_sq = DMatrix::<f64>::zeros(2, 2);
        let mut target_mean = DVector::<f64>::zeros(2);
        let mut target_sq = DMatrix::<f64>::zeros(2, 2);
        for _ in 0..n_draws {
            let d = predictive_sample(model, &params, &data, &split, &mut rng).unwrap();
            sum += &d.y_rep;
            sum_sq += &d.y_rep * d.y_rep.transpose();
            if model == ModelKind::M3 {
                // the sampler re-draws the latent field at validation sites,
                // so the target is the law averaged over completed fields
                let completed = ModelParams {
                    log_delta: d.log_delta_full.clone(),
                    ..params.clone()
                };
                let law_d = conditional_moments(model, &completed, &data, &split).unwrap();
                let cov_d = law_d.covariance().unwrap();
                target_sq += cov_d + &law_d.mean * law_d.mean.transpose();
                target_mean += law_d.mean;
            }
        }
        let nf = n_draws as f64;
        let (t_mean, t_cov) = if model == ModelKind::M3 {
            let m = &target_mean / nf;
            let c = (&target_sq / nf) - &m * m.transpose();
            (m, c)
        } else {
            let law = conditional_moments(model, &params, &data, &split).unwrap();
            (law.mean.clone(), law.covariance().unwrap())
        };
        let mean = &sum / nf;
        let emp_cov = (&sum_sq / nf) - &mean * mean.transpose();
        for p in 0..2 {
            let se = (t_cov[(p, p)] / nf).sqrt();
            assert!(
                (mean[p] - t_mean[p]).abs() <= 4.0 * se,
                "{model:?} mean[{p}] {} vs {}",
                mean[p],
                t_mean[p]
            );
        }
        for p in 0..2 {
            for q in 0..2 {
                let se = ((t_cov[(p, p)] * t_cov[(q, q)] + t_cov[(p, q)].powi(2)) / nf).sqrt()
                    * if model == ModelKind::M1 { 1.0 } else { 3.0 };
                assert!(
                    (emp_cov[(p, q)] - t_cov[(p, q)]).abs() <= 4.0 * se,
                    "{model:?} cov[{p},{q}] {} vs {}",
                    emp_cov[(p, q)],
                    t_cov[(p, q)]
                );
            }
        }
    }
    // a unit mixing field reduces the heterogeneous model to the plain one
    let m1 = ModelParams::gaussian(2.0, 1.0, 0.3, 0.4);
    let m3 = ModelParams::glg(2.0, 1.0, 0.3, 0.4, 0.8, DVector::zeros(n));
    let l1 = conditional_moments(ModelKind::M1, &m1, &data, &split).unwrap();
    let l3 = conditional_moments(ModelKind::M3, &m3, &data, &split).unwrap();
    for p in 0..2 {
        assert!((l1.mean[p] - l3.mean[p]).abs() <= 1e-12);
        for q in 0..2 {
            assert!((l1.scale[(p, q)] - l3.scale[(p, q)]).abs() <= 1e-12);
        }
    }
}

fn c8_machinery() {
    // prior recovery for sigma2 against its inverse-gamma marginal
    let data = grid_free_data(9, 6);
    let prior = PriorConfig::<f64>::default();
    let cfg = ChainConfig::for_draws(2000, 10_000, 5);
    let sample = run_chain(
        Target::Prior,
        ModelKind::M1,
        &data,
        &prior,
        &cfg,
        &mut derive_rng(804, 0),
    )
    .unwrap();
    let mut draws: Vec<f64> = sample.draws.iter().map(|d| d.sigma2).collect();
    draws.sort_by(f64::total_cmp);
    let ig = InverseGamma::new(2.1, 1.1).unwrap();
    let nf = draws.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in draws.iter().enumerate() {
        let f = ig.cdf(x);
        ks = ks.max((f - i as f64 / nf).abs()).max(((i + 1) as f64 / nf - f).abs());
    }
    assert!(ks < 0.05, "KS statistic {ks}");

    // conjugate posterior for the mean with covariance parameters frozen
    let data = grid_free_data(10, 7);
    let fixed = ModelParams::gaussian(0.0, 1.5, 0.25, 0.2);
    let cfg = ChainConfig {
        init_params: Some(fixed.clone()),
        frozen_blocks: vec!["sigma2".into(), "phi".into()],
        ..ChainConfig::for_draws(500, 4000, 2)
    };
    let sample = run_chain(
        Target::Power(1.0),
        ModelKind::M1,
        &data,
        &prior,
        &cfg,
        &mut derive_rng(805, 0),
    )
    .unwrap();
    let mu_draws: Vec<f64> = sample.draws.iter().map(|d| d.beta[0]).collect();
    let d = pairwise_distances(data.locations()).unwrap();
    let sigma = geocv::geodata::covariance_matrix(&fixed, &d, ModelKind::M1, None).unwrap();
    let chol = sigma.cholesky().unwrap();
    let ones = DVector::from_element(data.n(), 1.0);
    let sol = chol.solve(&ones);
    let post_var = 1.0 / (ones.dot(&sol) + 0.01);
    let post_mean = post_var * data.y().dot(&sol);
    let mean = mu_draws.iter().sum::<f64>() / mu_draws.len() as f64;
    let n_batches = 20;
    let per = mu_draws.len() / n_batches;
    let bm: Vec<f64> = (0..n_batches)
        .map(|b| mu_draws[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let bmean = bm.iter().sum::<f64>() / n_batches as f64;
    let bvar = bm.iter().map(|m| (m - bmean).powi(2)).sum::<f64>() / (n_batches - 1) as f64;
    let se = (bvar / n_batches as f64).sqrt();
    assert!(
        (mean - post_mean).abs() <= 3.0 * se,
        "posterior mean {mean} vs conjugate {post_mean}, 3 se {}",
        3.0 * se
    );

    // trigamma identities
    let pi = std::f64::consts::PI;
    assert!((trigamma(1.0).unwrap() - pi * pi / 6.0).abs() <= 1e-10);
    for x in [0.3, 1.7, 4.2, 9.9] {
        let lhs = trigamma(x + 1.0).unwrap();
        let rhs = trigamma(x).unwrap() - 1.0 / (x * x);
        assert!((lhs - rhs).abs() <= 1e-10, "recurrence at {x}");
    }

    // importance-weight identity: log w + alpha log f(y) = log f(y_T)
    let data = grid_free_data(12, 8);
    let split = sample_uniform_split(12, 3, &mut derive_rng(806, 0)).unwrap();
    let alpha = split.n_training() as f64 / data.n() as f64;
    let all: Vec<usize> = (0..data.n()).collect();
    let mut ld = DVector::zeros(12);
    for i in 0..12 {
        ld[i] = 0.2 * (i as f64).cos();
    }
    let cases = vec![
        (ModelKind::M1, ModelParams::gaussian(1.3, 0.8, 0.2, 0.3)),
        (ModelKind::M2, ModelParams::student_t(1.3, 0.8, 0.2, 0.3, 4.0)),
        (ModelKind::M3, ModelParams::glg(1.3, 0.8, 0.2, 0.3, 0.6, ld)),
    ];
    for (model, params) in cases {
        let lw = log_importance_weight(&params, &data, model, &split).unwrap();
        let ll_full = log_likelihood(model, &params, &data, &all).unwrap();
        let ll_train =
            log_likelihood(model, &params, &data, &split.training_indices()).unwrap();
        assert!(
            (lw + alpha * ll_full - ll_train).abs() <= 1e-10,
            "{model:?} weight identity"
        );
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if n < k {
        return vec![];
    }
    let mut out = combinations(n - 1, k);
    for mut c in combinations(n - 1, k - 1) {
        c.push(n - 1);
        out.push(c);
    }
    out
}

fn c9_split_priors() {
    // exhaustive normalization of the uniform split prior
    let total: f64 = combinations(8, 3)
        .iter()
        .map(|v| {
            let s = SplitVector::from_validation_indices(8, v).unwrap();
            split_log_prior(&s, None).exp()
        })
        .sum();
    assert!((total - 1.0).abs() <= 1e-10, "uniform prior sums to {total}");

    // exhaustive normalization of a stratified split prior
    let labels = vec![1, 1, 1, 2, 2, 2, 2, 2];
    let design = StratifiedDesign::from_labels(labels, vec![1, 2]).unwrap();
    let s0 = design.sites_in(0);
    let s1 = design.sites_in(1);
    let mut total = 0.0;
    for c0 in combinations(s0.len(), 1) {
        for c1 in combinations(s1.len(), 2) {
            let mut valid: Vec<usize> = c0.iter().map(|&i| s0[i]).collect();
            valid.extend(c1.iter().map(|&i| s1[i]));
            let s = SplitVector::from_validation_indices(8, &valid).unwrap();
            total += split_log_prior(&s, Some(&design)).exp();
        }
    }
    assert!((total - 1.0).abs() <= 1e-10, "stratified prior sums to {total}");

    // empirical inclusion probabilities
    let reps = 4000;
    let batch = SplitBatch::uniform(10, 3, reps, 33).unwrap();
    let p = 0.3;
    let tol = 3.0 * (p * (1.0 - p) / reps as f64).sqrt();
    for i in 0..10 {
        let freq = batch.splits.iter().filter(|s| s.is_validation(i)).count() as f64
            / reps as f64;
        assert!((freq - p).abs() <= tol, "site {i} inclusion {freq}");
    }
    let strat_batch = SplitBatch::stratified(&design, reps, 34).unwrap();
    for i in 0..8 {
        let pk = if i < 3 { 1.0 / 3.0 } else { 2.0 / 5.0 };
        let tol = 3.0 * (pk * (1.0 - pk) / reps as f64).sqrt();
        let freq = strat_batch.splits.iter().filter(|s| s.is_validation(i)).count() as f64
            / reps as f64;
        assert!((freq - pk).abs() <= tol, "site {i} inclusion {freq} vs {pk}");
    }
}

fn c10_determinism() {
    let out = simulate_scenario::<f64>(ScenarioKind::Crs, 37).unwrap();
    let data = out.dataset;
    let splits = SplitBatch::uniform(data.n(), 5, 10, 47).unwrap();
    let prior = PriorConfig::default();
    let cfg = ChainConfig::for_draws(200, 50, 1);
    let run = || -> (EstimatorOutput<f64>, EstimatorOutput<f64>) {
        let mc = mc_estimate(
            ModelKind::M1,
            &data,
            &splits,
            50,
            DiscrepancyKind::Mse,
            &prior,
            &cfg,
            111,
        )
        .unwrap();
        let sir = sir_estimate(
            ModelKind::M1,
            &data,
            &splits,
            2,
            50,
            DiscrepancyKind::Mse,
            &prior,
            &cfg,
            121,
        )
        .unwrap();
        (mc, sir)
    };
    let outputs: Vec<_> = [1usize, 2, 8]
        .iter()
        .map(|&t| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(t).build().unwrap();
            pool.install(run)
        })
        .collect();
    let key = |o: &EstimatorOutput<f64>| {
        let mut bits = vec![o.psi_hat.to_bits(), o.variance.unwrap().to_bits()];
        bits.extend(o.per_unit.iter().map(|u| u.value.to_bits()));
        bits
    };
    let reference = (key(&outputs[0].0), key(&outputs[0].1));
    for (i, o) in outputs.iter().enumerate().skip(1) {
        assert_eq!(reference.0, key(&o.0), "mc differs with pool {i}");
        assert_eq!(reference.1, key(&o.1), "sir differs with pool {i}");
    }
}
