//! Serializable result documents, flat CSV emitters, and the consolidated
//! comparison table.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorCounts, EstimatorOutput};
use crate::scalar::Scalar;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratumRow {
    pub stratum: usize,
    pub weight: f64,
    pub psi_hat: f64,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultEntry {
    pub estimator: String,
    pub model: String,
    pub discrepancy: String,
    pub psi_hat: f64,
    pub variance: Option<f64>,
    pub std_error: Option<f64>,
    pub per_stratum: Option<Vec<StratumRow>>,
    pub finite_population_variance: Option<f64>,
    pub ess: Vec<f64>,
    pub low_ess_count: usize,
    pub n_splits: usize,
    pub n_draws: usize,
    pub n_chains: usize,
    pub n_strata: usize,
}

impl ResultEntry {
    pub fn from_output<T: Scalar>(out: &EstimatorOutput<T>) -> Self {
        let EstimatorCounts {
            n_splits,
            n_draws,
            n_chains,
            n_strata,
        } = out.counts.clone();
        Self {
            estimator: out.estimator.clone(),
            model: out.model.to_string(),
            discrepancy: out.discrepancy.to_string(),
            psi_hat: out.psi_hat.to64(),
            variance: out.variance.map(|v| v.to64()),
            std_error: out.std_error().map(|v| v.to64()),
            per_stratum: out.per_stratum.as_ref().map(|rows| {
                rows.iter()
                    .map(|s| StratumRow {
                        stratum: s.stratum,
                        weight: s.weight,
                        psi_hat: s.psi_hat.to64(),
                        std_error: s.variance.map(|v| num_traits::Float::sqrt(v).to64()),
                    })
                    .collect()
            }),
            finite_population_variance: out.finite_population_variance.map(|v| v.to64()),
            ess: out.ess.clone(),
            low_ess_count: out.low_ess_count,
            n_splits,
            n_draws,
            n_chains,
            n_strata,
        }
    }
}

/// The deterministic result document: config echo, seed, and estimates.
/// Volatile quantities such as wall-clock timings stay out so reruns are
/// byte-identical.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub results: Vec<ResultEntry>,
}

impl ResultsDocument {
    pub fn new(command: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            seed,
            config,
            results: Vec::new(),
        }
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let doc: Self = serde_json::from_str(&text)?;
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "document {} has schema version {}, expected {}",
                path.display(),
                doc.schema_version,
                SCHEMA_VERSION
            )));
        }
        Ok(doc)
    }
}

/// One row of the plot-ready per-split discrepancy CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PerSplitRow {
    pub estimator: String,
    pub model: String,
    pub discrepancy: String,
    pub chain: Option<usize>,
    pub split: usize,
    pub value: f64,
}

pub fn per_split_rows<T: Scalar>(out: &EstimatorOutput<T>) -> Vec<PerSplitRow> {
    out.per_unit
        .iter()
        .map(|u| PerSplitRow {
            estimator: out.estimator.clone(),
            model: out.model.to_string(),
            discrepancy: out.discrepancy.to_string(),
            chain: u.chain,
            split: u.split,
            value: u.value.to64(),
        })
        .collect()
}

pub fn write_per_split_csv(path: &Path, rows: &[PerSplitRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["estimator", "model", "discrepancy", "chain", "split", "value"])?;
    for r in rows {
        w.write_record([
            r.estimator.as_str(),
            r.model.as_str(),
            r.discrepancy.as_str(),
            &r.chain.map_or(String::new(), |c| c.to_string()),
            &r.split.to_string(),
            &format!("{}", r.value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row of the chain summary CSV: per-block acceptance of each chain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainSummaryRow {
    pub estimator: String,
    pub model: String,
    pub chain: usize,
    pub block: String,
    pub rate: f64,
}

pub fn write_chain_summary_csv(path: &Path, rows: &[ChainSummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["estimator", "model", "chain", "block", "rate"])?;
    for r in rows {
        w.write_record([
            r.estimator.as_str(),
            r.model.as_str(),
            &r.chain.to_string(),
            r.block.as_str(),
            &format!("{}", r.rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub model: String,
    pub estimator: String,
    pub discrepancy: String,
    pub psi_hat: f64,
    pub std_error: Option<f64>,
    /// Smallest psi among models sharing this (estimator, discrepancy) pair.
    pub minimal: bool,
}

/// Flattens result documents into an aligned comparison with the minimal-psi
/// model flagged per (estimator, discrepancy) group.
pub fn consolidate(docs: &[ResultsDocument]) -> Result<Vec<ComparisonRow>> {
    if docs.is_empty() {
        return Err(Error::Schema("no result documents given".into()));
    }
    if docs.iter().any(|d| d.schema_version != SCHEMA_VERSION) {
        return Err(Error::Schema("mixed schema versions".into()));
    }
    let mut rows: Vec<ComparisonRow> = docs
        .iter()
        .flat_map(|d| d.results.iter())
        .map(|e| ComparisonRow {
            model: e.model.clone(),
            estimator: e.estimator.clone(),
            discrepancy: e.discrepancy.clone(),
            psi_hat: e.psi_hat,
            std_error: e.std_error,
            minimal: false,
        })
        .collect();
    let groups: Vec<(String, String)> = rows
        .iter()
        .map(|r| (r.estimator.clone(), r.discrepancy.clone()))
        .collect();
    for key in {
        let mut k = groups.clone();
        k.sort();
        k.dedup();
        k
    } {
        let best = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| groups[*i] == key)
            .min_by(|a, b| a.1.psi_hat.total_cmp(&b.1.psi_hat))
            .map(|(i, _)| i);
        if let Some(i) = best {
            rows[i].minimal = true;
        }
    }
    Ok(rows)
}

/// Plain-text rendering of the comparison plus any stratified breakdowns.
pub fn render_table(docs: &[ResultsDocument]) -> Result<String> {
    let rows = consolidate(docs)?;
    let mut out = String::new();
    writeln!(
        out,
        "{:<14} {:<16} {:<12} {:>12} {:>12}  min",
        "model", "estimator", "discrepancy", "psi_hat", "std_error"
    )
    .ok();
    for r in &rows {
        writeln!(
            out,
            "{:<14} {:<16} {:<12} {:>12.4} {:>12}  {}",
            r.model,
            r.estimator,
            r.discrepancy,
            r.psi_hat,
            r.std_error.map_or("-".into(), |s| format!("{s:.4}")),
            if r.minimal { "*" } else { "" }
        )
        .ok();
    }
    for doc in docs {
        for e in &doc.results {
            if let Some(per) = &e.per_stratum {
                writeln!(
                    out,
                    "\nstrata of {} {} ({}):",
                    e.model, e.estimator, e.discrepancy
                )
                .ok();
                writeln!(
                    out,
                    "  {:<8} {:>8} {:>12} {:>12}",
                    "stratum", "w_k", "psi_k", "se_k"
                )
                .ok();
                for s in per {
                    writeln!(
                        out,
                        "  {:<8} {:>8.3} {:>12.4} {:>12}",
                        s.stratum,
                        s.weight,
                        s.psi_hat,
                        s.std_error.map_or("-".into(), |v| format!("{v:.4}")),
                    )
                    .ok();
                }
            }
        }
    }
    Ok(out)
}
