//! MC and SIR estimators of the expected predictive discrepancy, their
//! stratified variants, importance weights, and variance formulas.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;
use rand::Rng;
use rayon::prelude::*;

use crate::discrepancy::{mahalanobis, mse, DiscrepancyKind};
use crate::error::{Error, Result};
use crate::geodata::{pairwise_distances, DistanceMatrix, GeoDataset};
use crate::mcmc::{run_chain, ChainConfig, PriorConfig, Target};
use crate::models::{
    conditional_moments_with_dist, log_likelihood_with_dist, predictive_sample_with_dist,
    ModelKind, ModelParams,
};
use crate::rng::derive_rng;
use crate::scalar::Scalar;
use crate::splits::{SplitBatch, SplitVector, StratifiedDesign};

/// Stream offset separating predictive-draw streams from chain streams.
const PRED_STREAM_BASE: u64 = 1 << 32;

/// Importance weights of one (chain, split) pair, kept in log space and
/// normalized with max subtraction.
#[derive(Debug, Clone)]
pub struct WeightSet<T> {
    pub log_weights: Vec<T>,
    pub normalized: Vec<T>,
}

impl<T: Scalar> WeightSet<T> {
    pub fn from_log_weights(log_weights: Vec<T>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::Shape("weight set must be nonempty".into()));
        }
        let max = log_weights
            .iter()
            .copied()
            .filter(|w| Float::is_finite(*w))
            .fold(T::neg_infinity(), Float::max);
        if !Float::is_finite(max) {
            return Err(Error::DegenerateWeights { ess: 0.0 });
        }
        let shifted: Vec<T> = log_weights.iter().map(|&w| Float::exp(w - max)).collect();
        let total = shifted.iter().copied().sum::<T>();
        if !(total > T::zero()) || !Float::is_finite(total) {
            return Err(Error::DegenerateWeights { ess: 0.0 });
        }
        let normalized = shifted.iter().map(|&w| w / total).collect();
        Ok(Self {
            log_weights,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.normalized.len()
    }

    pub fn is_empty(&self) -> bool {
        self.normalized.is_empty()
    }

    /// Effective sample size (sum w)^2 / sum w^2 of the normalized weights.
    pub fn ess(&self) -> f64 {
        let sum_sq = self
            .normalized
            .iter()
            .map(|&w| w.to64() * w.to64())
            .sum::<f64>();
        if sum_sq > 0.0 {
            1.0 / sum_sq
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct WeightDiagnostics {
    pub ess: f64,
    pub max_share: f64,
    /// True when ESS fell below 5% of the number of draws.
    pub low_ess: bool,
}

pub fn weight_diagnostics<T: Scalar>(weights: &WeightSet<T>) -> WeightDiagnostics {
    let ess = weights.ess();
    let max_share = weights
        .normalized
        .iter()
        .map(|w| w.to64())
        .fold(0.0, f64::max);
    WeightDiagnostics {
        ess,
        max_share,
        low_ess: ess < 0.05 * weights.len() as f64,
    }
}

/// log w = log f(y_T | theta) - alpha log f(y | theta), alpha = n_T / n.
pub fn log_importance_weight<T: Scalar>(
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    model: ModelKind,
    split: &SplitVector,
) -> Result<T> {
    let d = pairwise_distances(data.locations())?;
    log_importance_weight_with_dist(params, data, model, &d, split)
}

fn log_importance_weight_with_dist<T: Scalar>(
    params: &ModelParams<T>,
    data: &GeoDataset<T>,
    model: ModelKind,
    d: &DistanceMatrix<T>,
    split: &SplitVector,
) -> Result<T> {
    let all: Vec<usize> = (0..data.n()).collect();
    let alpha = T::of(split.n_training() as f64 / data.n() as f64);
    let ll_full = log_likelihood_with_dist(model, params, data, d, &all)?;
    let ll_train = log_likelihood_with_dist(model, params, data, d, &split.training_indices())?;
    Ok(ll_train - alpha * ll_full)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EstimatorCounts {
    pub n_splits: usize,
    pub n_draws: usize,
    pub n_chains: usize,
    pub n_strata: usize,
}

#[derive(Debug, Clone)]
pub struct StratumEstimate<T> {
    /// 1-based stratum label.
    pub stratum: usize,
    pub weight: f64,
    pub psi_hat: T,
    pub variance: Option<T>,
}

/// Per-unit summary: one row per split (MC) or per (chain, split) pair (SIR).
#[derive(Debug, Clone)]
pub struct UnitRecord<T> {
    pub split: usize,
    pub chain: Option<usize>,
    pub value: T,
}

/// Post-burn-in acceptance rate of one proposal block of one chain.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ChainAcceptanceRecord {
    pub chain: usize,
    pub block: String,
    pub rate: f64,
}

#[derive(Debug, Clone)]
pub struct EstimatorOutput<T> {
    pub estimator: String,
    pub model: ModelKind,
    pub discrepancy: DiscrepancyKind,
    pub psi_hat: T,
    /// Absent for single-chain SIR runs, where the simulation variance is
    /// unavailable.
    pub variance: Option<T>,
    pub per_stratum: Option<Vec<StratumEstimate<T>>>,
    /// Finite-population variance form for stratified runs.
    pub finite_population_variance: Option<T>,
    /// ESS per (chain, split) pair, chain-major; empty for MC runs.
    pub ess: Vec<f64>,
    pub low_ess_count: usize,
    pub counts: EstimatorCounts,
    pub per_unit: Vec<UnitRecord<T>>,
    /// Empty when draws were supplied externally.
    pub chain_diagnostics: Vec<ChainAcceptanceRecord>,
}

impl<T: Scalar> EstimatorOutput<T> {
    pub fn std_error(&self) -> Option<T> {
        self.variance.map(Float::sqrt)
    }
}

enum DrawSource<'a, T> {
    Fresh {
        prior: &'a PriorConfig<T>,
        cfg: &'a ChainConfig<T>,
    },
    Provided(&'a [Vec<ModelParams<T>>]),
}

/// Validation-site positions of each stratum within a split's validation
/// vector. Without a design this is one pseudo-stratum covering everything.
fn stratum_positions(
    split: &SplitVector,
    design: Option<&StratifiedDesign>,
) -> Result<Vec<Vec<usize>>> {
    let v_idx = split.validation_indices();
    match design {
        None => Ok(vec![(0..v_idx.len()).collect()]),
        Some(d) => {
            if !d.is_consistent(split) {
                return Err(Error::Design(
                    "split does not respect the stratified design's validation counts".into(),
                ));
            }
            Ok((0..d.n_strata())
                .map(|k| {
                    (0..v_idx.len())
                        .filter(|&p| d.labels()[v_idx[p]] == k + 1)
                        .collect()
                })
                .collect())
        }
    }
}

fn stratum_weights<T: Scalar>(design: Option<&StratifiedDesign>) -> Vec<T> {
    match design {
        None => vec![T::one()],
        Some(d) => (0..d.n_strata()).map(|k| T::of(d.weight(k))).collect(),
    }
}

/// Discrepancies of one replicated draw, per requested kind per stratum.
fn eval_split_draw<T: Scalar, R: Rng + ?Sized>(
    model: ModelKind,
    data: &GeoDataset<T>,
    d: &DistanceMatrix<T>,
    split: &SplitVector,
    positions: &[Vec<usize>],
    y_obs: &DVector<T>,
    params: &ModelParams<T>,
    kinds: &[DiscrepancyKind],
    rng: &mut R,
) -> Result<Vec<Vec<T>>> {
    let draw = predictive_sample_with_dist(model, params, data, d, split, rng)?;
    let sigma: Option<DMatrix<T>> = if kinds.contains(&DiscrepancyKind::Mahalanobis) {
        let mut cov_params = params.clone();
        if model == ModelKind::M3 {
            cov_params.log_delta = draw.log_delta_full.clone();
        }
        let law = conditional_moments_with_dist(model, &cov_params, data, d, split)?;
        Some(law.covariance()?)
    } else {
        None
    };
    kinds
        .iter()
        .map(|kind| {
            positions
                .iter()
                .map(|pos| {
                    let rep = draw.y_rep.select_rows(pos.iter());
                    let obs = y_obs.select_rows(pos.iter());
                    match kind {
                        DiscrepancyKind::Mse => mse(&rep, &obs),
                        DiscrepancyKind::Mahalanobis => {
                            let s = sigma.as_ref().expect("covariance computed above");
                            let sub = s.select_rows(pos.iter()).select_columns(pos.iter());
                            mahalanobis(&rep, &obs, &sub)
                        }
                    }
                })
                .collect()
        })
        .collect()
}

fn validate_kinds(kinds: &[DiscrepancyKind]) -> Result<()> {
    if kinds.is_empty() {
        return Err(Error::Domain("at least one discrepancy kind required".into()));
    }
    Ok(())
}

/// Sample variance with divisor len - 1; `None` below two values.
fn sample_variance<T: Scalar>(values: &[T]) -> Option<T> {
    if values.len() < 2 {
        return None;
    }
    let n = T::of(values.len() as f64);
    let mean = values.iter().copied().sum::<T>() / n;
    let ss = values
        .iter()
        .map(|&v| (v - mean) * (v - mean))
        .sum::<T>();
    Some(ss / (n - T::one()))
}

/// Appendix-style finite-population variance over per-unit stratum means.
fn finite_population_variance<T: Scalar>(
    design: &StratifiedDesign,
    unit_means: &[Vec<T>],
) -> Option<T> {
    let n = T::of(design.n() as f64);
    let mut total = T::zero();
    for k in 0..design.n_strata() {
        let values: Vec<T> = unit_means.iter().map(|u| u[k]).collect();
        let s2 = sample_variance(&values)?;
        let w = T::of(design.weight(k));
        let f_vk = T::of(design.validation_fraction(k));
        let n_vk = T::of(design.validation_sizes()[k] as f64);
        total += w / n * (T::one() - f_vk) * s2 / n_vk;
    }
    Some(total)
}

fn run_mc_internal<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    design: Option<&StratifiedDesign>,
    j_requested: usize,
    kinds: &[DiscrepancyKind],
    source: &DrawSource<'_, T>,
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    validate_kinds(kinds)?;
    if splits.is_empty() {
        return Err(Error::Design("empty split batch".into()));
    }
    let n_splits = splits.len();
    let j = match source {
        DrawSource::Fresh { .. } => j_requested,
        DrawSource::Provided(draws) => {
            if draws.len() != n_splits {
                return Err(Error::Shape(format!(
                    "{} draw sets provided for {} splits",
                    draws.len(),
                    n_splits
                )));
            }
            let first = draws.first().map_or(0, Vec::len);
            if first == 0 || draws.iter().any(|d| d.len() != first) {
                return Err(Error::Shape(
                    "provided draw sets must be nonempty and equally sized".into(),
                ));
            }
            first
        }
    };
    if j == 0 {
        return Err(Error::Domain("J must be at least 1".into()));
    }
    let d = pairwise_distances(data.locations())?;

    // r values per split: [kind][stratum][j]
    type SplitValues<T> = Vec<Vec<Vec<T>>>;
    let per_split_results: Vec<(SplitValues<T>, Vec<ChainAcceptanceRecord>)> = (0..n_splits)
        .into_par_iter()
        .map(|i| -> Result<(SplitValues<T>, Vec<ChainAcceptanceRecord>)> {
            let split = &splits.splits[i];
            if split.len() != data.n() {
                return Err(Error::Shape(format!(
                    "split {} covers {} sites but dataset has {}",
                    i,
                    split.len(),
                    data.n()
                )));
            }
            let positions = stratum_positions(split, design)?;
            let y_obs = data.y().select_rows(split.validation_indices().iter());
            let mut acceptance = Vec::new();
            let draws_owned;
            let draws: &[ModelParams<T>] = match source {
                DrawSource::Fresh { prior, cfg } => {
                    let eff = ChainConfig {
                        n_iter: cfg.burn_in + j * cfg.thin,
                        ..(*cfg).clone()
                    };
                    let mut chain_rng = derive_rng(seed, 2 * i as u64);
                    let sample = run_chain(
                        Target::Training(split),
                        model,
                        data,
                        prior,
                        &eff,
                        &mut chain_rng,
                    )
                    .map_err(|e| Error::Domain(format!("chain for split {i} failed: {e}")))?;
                    acceptance = sample
                        .acceptance
                        .iter()
                        .map(|a| ChainAcceptanceRecord {
                            chain: i,
                            block: a.block.clone(),
                            rate: a.rate,
                        })
                        .collect();
                    draws_owned = sample.draws;
                    &draws_owned
                }
                DrawSource::Provided(all) => &all[i],
            };
            let mut pred_rng = derive_rng(seed, 2 * i as u64 + 1);
            let mut values: SplitValues<T> =
                vec![vec![Vec::with_capacity(j); positions.len()]; kinds.len()];
            for params in draws {
                let r = eval_split_draw(
                    model, data, &d, split, &positions, &y_obs, params, kinds, &mut pred_rng,
                )?;
                for (ki, per_stratum) in r.into_iter().enumerate() {
                    for (si, v) in per_stratum.into_iter().enumerate() {
                        values[ki][si].push(v);
                    }
                }
            }
            Ok((values, acceptance))
        })
        .collect::<Result<Vec<_>>>()?;
    let chain_diagnostics: Vec<ChainAcceptanceRecord> = per_split_results
        .iter()
        .flat_map(|(_, a)| a.iter().cloned())
        .collect();
    let per_split: Vec<SplitValues<T>> =
        per_split_results.into_iter().map(|(v, _)| v).collect();

    let weights = stratum_weights::<T>(design);
    let n_strata = weights.len();
    let ij = T::of((n_splits * j) as f64);
    let jf = T::of(j as f64);

    let mut outputs = Vec::with_capacity(kinds.len());
    for (ki, &kind) in kinds.iter().enumerate() {
        let mut psi_k = vec![T::zero(); n_strata];
        let mut var_k = vec![T::zero(); n_strata];
        for k in 0..n_strata {
            let mut total = T::zero();
            for sv in &per_split {
                total += sv[ki][k].iter().copied().sum::<T>();
            }
            psi_k[k] = total / ij;
            let mut ss = T::zero();
            for sv in &per_split {
                ss += sv[ki][k]
                    .iter()
                    .map(|&r| (r - psi_k[k]) * (r - psi_k[k]))
                    .sum::<T>();
            }
            var_k[k] = ss / (ij * ij);
        }
        let psi = (0..n_strata).map(|k| weights[k] * psi_k[k]).sum::<T>();
        let variance = (0..n_strata)
            .map(|k| weights[k] * weights[k] * var_k[k])
            .sum::<T>();

        // per-split stratum means feed the per-unit records and the
        // finite-population variance
        let unit_means: Vec<Vec<T>> = per_split
            .iter()
            .map(|sv| {
                (0..n_strata)
                    .map(|k| sv[ki][k].iter().copied().sum::<T>() / jf)
                    .collect()
            })
            .collect();
        let per_unit = unit_means
            .iter()
            .enumerate()
            .map(|(i, means)| UnitRecord {
                split: i,
                chain: None,
                value: (0..n_strata).map(|k| weights[k] * means[k]).sum::<T>(),
            })
            .collect();
        let fpv = design.and_then(|dsg| finite_population_variance(dsg, &unit_means));

        outputs.push(EstimatorOutput {
            estimator: if design.is_some() {
                "stratified_mc".into()
            } else {
                "mc".into()
            },
            model,
            discrepancy: kind,
            psi_hat: psi,
            variance: Some(variance),
            per_stratum: design.map(|dsg| {
                (0..n_strata)
                    .map(|k| StratumEstimate {
                        stratum: k + 1,
                        weight: dsg.weight(k),
                        psi_hat: psi_k[k],
                        variance: Some(var_k[k]),
                    })
                    .collect()
            }),
            finite_population_variance: fpv,
            ess: Vec::new(),
            low_ess_count: 0,
            counts: EstimatorCounts {
                n_splits,
                n_draws: j,
                n_chains: n_splits,
                n_strata,
            },
            per_unit,
            chain_diagnostics: chain_diagnostics.clone(),
        });
    }
    Ok(outputs)
}

fn run_sir_internal<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    design: Option<&StratifiedDesign>,
    h_requested: usize,
    j_requested: usize,
    kinds: &[DiscrepancyKind],
    source: &DrawSource<'_, T>,
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    validate_kinds(kinds)?;
    if splits.is_empty() {
        return Err(Error::Design("empty split batch".into()));
    }
    let n_splits = splits.len();
    let n_v = splits.common_n_validation()?;
    if splits.splits.iter().any(|s| s.len() != data.n()) {
        return Err(Error::Shape("split length does not match dataset".into()));
    }
    let n_t = data.n() - n_v;
    let alpha = T::of(n_t as f64 / data.n() as f64);
    let d = pairwise_distances(data.locations())?;

    let mut chain_diagnostics: Vec<ChainAcceptanceRecord> = Vec::new();
    let chains: Vec<Vec<ModelParams<T>>> = match source {
        DrawSource::Fresh { prior, cfg } => {
            if h_requested == 0 || j_requested == 0 {
                return Err(Error::Domain("H and J must be at least 1".into()));
            }
            let eff = ChainConfig {
                n_iter: cfg.burn_in + j_requested * cfg.thin,
                ..(*cfg).clone()
            };
            let samples = (0..h_requested)
                .into_par_iter()
                .map(|h| {
                    let mut rng = derive_rng(seed, 2 * h as u64);
                    run_chain(Target::Power(alpha), model, data, prior, &eff, &mut rng)
                        .map_err(|e| Error::Domain(format!("chain {h} failed: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            samples
                .into_iter()
                .enumerate()
                .map(|(h, s)| {
                    chain_diagnostics.extend(s.acceptance.iter().map(|a| {
                        ChainAcceptanceRecord {
                            chain: h,
                            block: a.block.clone(),
                            rate: a.rate,
                        }
                    }));
                    s.draws
                })
                .collect()
        }
        DrawSource::Provided(chains) => {
            let first = chains.first().map_or(0, Vec::len);
            if chains.is_empty() || first == 0 || chains.iter().any(|c| c.len() != first) {
                return Err(Error::Shape(
                    "provided chains must be nonempty and equally sized".into(),
                ));
            }
            chains.to_vec()
        }
    };
    let n_chains = chains.len();
    let j = chains[0].len();

    let all: Vec<usize> = (0..data.n()).collect();
    let ll_full: Vec<Vec<T>> = chains
        .par_iter()
        .map(|draws| {
            draws
                .iter()
                .map(|p| log_likelihood_with_dist(model, p, data, &d, &all))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    // per (h, i): weighted stratum means per kind, plus the weight ESS
    struct PairResult<T> {
        psi: Vec<Vec<T>>, // [kind][stratum]
        ess: f64,
    }
    let pairs: Vec<PairResult<T>> = (0..n_chains * n_splits)
        .into_par_iter()
        .map(|pair| -> Result<PairResult<T>> {
            let h = pair / n_splits;
            let i = pair % n_splits;
            let split = &splits.splits[i];
            let positions = stratum_positions(split, design)?;
            let y_obs = data.y().select_rows(split.validation_indices().iter());
            let train = split.training_indices();
            let log_w = chains[h]
                .iter()
                .zip(&ll_full[h])
                .map(|(p, &lf)| {
                    log_likelihood_with_dist(model, p, data, &d, &train).map(|lt| lt - alpha * lf)
                })
                .collect::<Result<Vec<_>>>()?;
            let weights = WeightSet::from_log_weights(log_w)?;
            let mut pred_rng = derive_rng(seed, PRED_STREAM_BASE + pair as u64);
            let mut psi = vec![vec![T::zero(); positions.len()]; kinds.len()];
            for (jj, params) in chains[h].iter().enumerate() {
                let r = eval_split_draw(
                    model, data, &d, split, &positions, &y_obs, params, kinds, &mut pred_rng,
                )?;
                let w = weights.normalized[jj];
                for (ki, per_stratum) in r.into_iter().enumerate() {
                    for (si, v) in per_stratum.into_iter().enumerate() {
                        psi[ki][si] += w * v;
                    }
                }
            }
            Ok(PairResult {
                psi,
                ess: weights.ess(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let weights = stratum_weights::<T>(design);
    let n_strata = weights.len();
    let hi = T::of((n_chains * n_splits) as f64);
    let ess: Vec<f64> = pairs.iter().map(|p| p.ess).collect();
    let low_ess_count = ess.iter().filter(|&&e| e < 0.05 * j as f64).count();

    let mut outputs = Vec::with_capacity(kinds.len());
    for (ki, &kind) in kinds.iter().enumerate() {
        let mut psi_k = vec![T::zero(); n_strata];
        let mut var_k: Vec<Option<T>> = vec![None; n_strata];
        for k in 0..n_strata {
            let total = pairs.iter().map(|p| p.psi[ki][k]).sum::<T>();
            psi_k[k] = total / hi;
            if n_chains >= 2 {
                let ss = pairs
                    .iter()
                    .map(|p| (p.psi[ki][k] - psi_k[k]) * (p.psi[ki][k] - psi_k[k]))
                    .sum::<T>();
                var_k[k] = Some(ss / (hi * hi));
            }
        }
        let psi = (0..n_strata).map(|k| weights[k] * psi_k[k]).sum::<T>();
        let variance = if n_chains >= 2 {
            Some(
                (0..n_strata)
                    .map(|k| weights[k] * weights[k] * var_k[k].expect("set when H >= 2"))
                    .sum::<T>(),
            )
        } else {
            None
        };

        let unit_means: Vec<Vec<T>> = pairs.iter().map(|p| p.psi[ki].clone()).collect();
        let per_unit = pairs
            .iter()
            .enumerate()
            .map(|(pair, p)| UnitRecord {
                split: pair % n_splits,
                chain: Some(pair / n_splits),
                value: (0..n_strata).map(|k| weights[k] * p.psi[ki][k]).sum::<T>(),
            })
            .collect();
        let fpv = design.and_then(|dsg| finite_population_variance(dsg, &unit_means));

        outputs.push(EstimatorOutput {
            estimator: if design.is_some() {
                "stratified_sir".into()
            } else {
                "sir".into()
            },
            model,
            discrepancy: kind,
            psi_hat: psi,
            variance,
            per_stratum: design.map(|dsg| {
                (0..n_strata)
                    .map(|k| StratumEstimate {
                        stratum: k + 1,
                        weight: dsg.weight(k),
                        psi_hat: psi_k[k],
                        variance: var_k[k],
                    })
                    .collect()
            }),
            finite_population_variance: fpv,
            ess: ess.clone(),
            low_ess_count,
            counts: EstimatorCounts {
                n_splits,
                n_draws: j,
                n_chains,
                n_strata,
            },
            per_unit,
            chain_diagnostics: chain_diagnostics.clone(),
        });
    }
    Ok(outputs)
}

/// One fresh training-posterior chain per split; J thinned draws each.
pub fn mc_estimate<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    j: usize,
    discrepancy: DiscrepancyKind,
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<EstimatorOutput<T>> {
    Ok(mc_estimate_multi(model, data, splits, j, &[discrepancy], prior, chain_cfg, seed)?
        .pop()
        .expect("one output per kind"))
}

/// [`mc_estimate`] over several discrepancy kinds sharing the same chains
/// and replicated draws.
#[allow(clippy::too_many_arguments)]
pub fn mc_estimate_multi<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    j: usize,
    kinds: &[DiscrepancyKind],
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_mc_internal(
        model,
        data,
        splits,
        None,
        j,
        kinds,
        &DrawSource::Fresh { prior, cfg: chain_cfg },
        seed,
    )
}

/// MC evaluation with externally supplied parameter draws, one draw set per
/// split. Fixed-parameter runs pass J copies of the same value.
pub fn mc_estimate_with_draws<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    draws: &[Vec<ModelParams<T>>],
    kinds: &[DiscrepancyKind],
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_mc_internal(model, data, splits, None, 0, kinds, &DrawSource::Provided(draws), seed)
}

/// H chains targeting the power posterior, reweighted per split.
#[allow(clippy::too_many_arguments)]
pub fn sir_estimate<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    h: usize,
    j: usize,
    discrepancy: DiscrepancyKind,
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<EstimatorOutput<T>> {
    Ok(
        sir_estimate_multi(model, data, splits, h, j, &[discrepancy], prior, chain_cfg, seed)?
            .pop()
            .expect("one output per kind"),
    )
}

#[allow(clippy::too_many_arguments)]
pub fn sir_estimate_multi<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    h: usize,
    j: usize,
    kinds: &[DiscrepancyKind],
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_sir_internal(
        model,
        data,
        splits,
        None,
        h,
        j,
        kinds,
        &DrawSource::Fresh { prior, cfg: chain_cfg },
        seed,
    )
}

/// SIR evaluation with externally supplied chains (one draw vector per chain).
pub fn sir_estimate_with_chains<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    splits: &SplitBatch,
    chains: &[Vec<ModelParams<T>>],
    kinds: &[DiscrepancyKind],
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_sir_internal(model, data, splits, None, 0, 0, kinds, &DrawSource::Provided(chains), seed)
}

/// Stratified MC: per-stratum discrepancies combined with weights w_k.
#[allow(clippy::too_many_arguments)]
pub fn stratified_mc_estimate<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    design: &StratifiedDesign,
    splits: &SplitBatch,
    j: usize,
    discrepancy: DiscrepancyKind,
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<EstimatorOutput<T>> {
    Ok(run_mc_internal(
        model,
        data,
        splits,
        Some(design),
        j,
        &[discrepancy],
        &DrawSource::Fresh { prior, cfg: chain_cfg },
        seed,
    )?
    .pop()
    .expect("one output per kind"))
}

#[allow(clippy::too_many_arguments)]
pub fn stratified_mc_estimate_multi<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    design: &StratifiedDesign,
    splits: &SplitBatch,
    j: usize,
    kinds: &[DiscrepancyKind],
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_mc_internal(
        model,
        data,
        splits,
        Some(design),
        j,
        kinds,
        &DrawSource::Fresh { prior, cfg: chain_cfg },
        seed,
    )
}

#[allow(clippy::too_many_arguments)]
pub fn stratified_sir_estimate<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    design: &StratifiedDesign,
    splits: &SplitBatch,
    h: usize,
    j: usize,
    discrepancy: DiscrepancyKind,
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<EstimatorOutput<T>> {
    Ok(run_sir_internal(
        model,
        data,
        splits,
        Some(design),
        h,
        j,
        &[discrepancy],
        &DrawSource::Fresh { prior, cfg: chain_cfg },
        seed,
    )?
    .pop()
    .expect("one output per kind"))
}

#[allow(clippy::too_many_arguments)]
pub fn stratified_sir_estimate_multi<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    design: &StratifiedDesign,
    splits: &SplitBatch,
    h: usize,
    j: usize,
    kinds: &[DiscrepancyKind],
    prior: &PriorConfig<T>,
    chain_cfg: &ChainConfig<T>,
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_sir_internal(
        model,
        data,
        splits,
        Some(design),
        h,
        j,
        kinds,
        &DrawSource::Fresh { prior, cfg: chain_cfg },
        seed,
    )
}

/// Stratified evaluation with provided per-split draw sets (MC style).
pub fn stratified_mc_estimate_with_draws<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    design: &StratifiedDesign,
    splits: &SplitBatch,
    draws: &[Vec<ModelParams<T>>],
    kinds: &[DiscrepancyKind],
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_mc_internal(
        model,
        data,
        splits,
        Some(design),
        0,
        kinds,
        &DrawSource::Provided(draws),
        seed,
    )
}

/// Stratified SIR evaluation with provided chains.
pub fn stratified_sir_estimate_with_chains<T: Scalar>(
    model: ModelKind,
    data: &GeoDataset<T>,
    design: &StratifiedDesign,
    splits: &SplitBatch,
    chains: &[Vec<ModelParams<T>>],
    kinds: &[DiscrepancyKind],
    seed: u64,
) -> Result<Vec<EstimatorOutput<T>>> {
    run_sir_internal(
        model,
        data,
        splits,
        Some(design),
        0,
        0,
        kinds,
        &DrawSource::Provided(chains),
        seed,
    )
}
