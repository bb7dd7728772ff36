//! Command-line front end: simulation, cross-validation, stratified
//! cross-validation, and report consolidation with reproducible seeding.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use geocv::discrepancy::DiscrepancyKind;
use geocv::estimators::{
    mc_estimate_multi, sir_estimate_multi, stratified_mc_estimate_multi,
    stratified_sir_estimate_multi, EstimatorOutput,
};
use geocv::geodata::{read_dataset, write_dataset};
use geocv::mcmc::{ChainConfig, PriorConfig, Tau2Setting};
use geocv::models::ModelKind;
use geocv::report::{
    per_split_rows, render_table, write_chain_summary_csv, write_per_split_csv, ChainSummaryRow,
    PerSplitRow, ResultEntry, ResultsDocument,
};
use geocv::scenarios::{simulate_with, ScenarioKind};
use geocv::splits::{SplitBatch, StratifiedDesign};
use geocv::GeoDataset64;

const EXIT_VALIDATION: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Debug)]
enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }

    fn record(&self) -> String {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("validation", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        serde_json::json!({"error": {"kind": kind, "message": msg}}).to_string()
    }
}

impl From<geocv::Error> for CliError {
    fn from(e: geocv::Error) -> Self {
        match e {
            geocv::Error::Domain(_)
            | geocv::Error::Design(_)
            | geocv::Error::Shape(_)
            | geocv::Error::Split
            | geocv::Error::Schema(_)
            | geocv::Error::Parse { .. } => CliError::Validation(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

#[derive(Parser)]
#[command(
    name = "geocv",
    version,
    about = "Bayesian cross-validation of geostatistical models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario dataset.
    Simulate(SimulateArgs),
    /// Cross-validate models over uniformly drawn splits.
    Xval(XvalArgs),
    /// Cross-validate with a stratified split design.
    StratifiedXval(XvalArgs),
    /// Consolidate result documents into a comparison table.
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TOML config; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// crs | crs-outlier | preferential | student-demo
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Lattice side length.
    #[arg(long)]
    m: Option<usize>,
    /// Condition the point count to exactly this value.
    #[arg(long)]
    fixed_n: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    scenario: Option<String>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    m: Option<usize>,
    fixed_n: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SimulateConfig {
    scenario: String,
    seed: u64,
    out: PathBuf,
    m: usize,
    fixed_n: Option<usize>,
}

#[derive(Args, Debug)]
struct XvalArgs {
    /// TOML config; command-line flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dataset CSV (x1,x2,y[,stratum][,cov...]).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated subset of m1,m2,m3.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    /// Comma-separated subset of mc,sir.
    #[arg(long, value_delimiter = ',')]
    estimators: Option<Vec<String>>,
    /// Comma-separated subset of mse,mahalanobis.
    #[arg(long, value_delimiter = ',')]
    discrepancies: Option<Vec<String>>,
    /// Validation-set size per split (uniform designs).
    #[arg(long)]
    nv: Option<usize>,
    /// Number of splits I.
    #[arg(long)]
    splits: Option<usize>,
    /// Posterior draws J per chain.
    #[arg(long)]
    draws: Option<usize>,
    /// Importance chains H (SIR).
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse a persisted split batch instead of sampling one.
    #[arg(long)]
    splits_file: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Stratification source: quadrant | column (stratified-xval only).
    #[arg(long)]
    strata: Option<String>,
    /// Per-stratum validation counts, comma separated (stratified-xval only).
    #[arg(long, value_delimiter = ',')]
    nvk: Option<Vec<usize>>,
    #[arg(long)]
    prior_a: Option<f64>,
    #[arg(long)]
    prior_b: Option<f64>,
    /// Fixed nugget value.
    #[arg(long)]
    tau2: Option<f64>,
    #[arg(long)]
    tau2_mu: Option<f64>,
    /// Scale constant of the range prior.
    #[arg(long)]
    prior_c: Option<f64>,
    /// Hold the Student-t degrees of freedom fixed.
    #[arg(long)]
    nu_fixed: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct XvalFile {
    data: Option<PathBuf>,
    models: Option<Vec<String>>,
    estimators: Option<Vec<String>>,
    discrepancies: Option<Vec<String>>,
    nv: Option<usize>,
    splits: Option<usize>,
    draws: Option<usize>,
    chains: Option<usize>,
    burn_in: Option<usize>,
    thin: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    splits_file: Option<PathBuf>,
    threads: Option<usize>,
    strata: Option<String>,
    nvk: Option<Vec<usize>>,
    prior: Option<PriorFile>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorFile {
    a: Option<f64>,
    b: Option<f64>,
    tau2: Option<f64>,
    tau2_mu: Option<f64>,
    c: Option<f64>,
    nu_fixed: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct XvalConfig {
    data: PathBuf,
    models: Vec<String>,
    estimators: Vec<String>,
    discrepancies: Vec<String>,
    nv: Option<usize>,
    splits: usize,
    draws: usize,
    chains: Option<usize>,
    burn_in: usize,
    thin: usize,
    seed: u64,
    out: PathBuf,
    splits_file: Option<PathBuf>,
    strata: Option<String>,
    nvk: Option<Vec<usize>>,
    prior_a: f64,
    prior_b: f64,
    tau2: f64,
    tau2_mu: f64,
    prior_c: f64,
    nu_fixed: Option<f64>,
    /// Kept out of the config echo: results must not depend on thread count.
    #[serde(skip)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// results.json documents to consolidate.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    /// Also write the table to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read_toml<F: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> CliResult<F> {
    match path {
        None => Ok(F::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| validation(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str(&text)
                .map_err(|e| validation(format!("bad config {}: {e}", p.display())))
        }
    }
}

fn require<T>(v: Option<T>, name: &str) -> CliResult<T> {
    v.ok_or_else(|| validation(format!("missing required option '{name}'")))
}

fn resolve_simulate(args: SimulateArgs) -> CliResult<SimulateConfig> {
    let file: SimulateFile = read_toml(args.config.as_deref())?;
    Ok(SimulateConfig {
        scenario: require(args.scenario.or(file.scenario), "scenario")?,
        seed: require(args.seed.or(file.seed), "seed")?,
        out: require(args.out.or(file.out), "out")?,
        m: args.m.or(file.m).unwrap_or(64),
        fixed_n: args.fixed_n.or(file.fixed_n),
    })
}

fn resolve_xval(args: XvalArgs, stratified: bool) -> CliResult<XvalConfig> {
    let file: XvalFile = read_toml(args.config.as_deref())?;
    let prior = file.prior.unwrap_or_default();
    let cfg = XvalConfig {
        data: require(args.data.or(file.data), "data")?,
        models: args
            .models
            .or(file.models)
            .unwrap_or_else(|| vec!["m1".into()]),
        estimators: args
            .estimators
            .or(file.estimators)
            .unwrap_or_else(|| vec!["mc".into()]),
        discrepancies: args
            .discrepancies
            .or(file.discrepancies)
            .unwrap_or_else(|| vec!["mse".into()]),
        nv: args.nv.or(file.nv),
        splits: require(args.splits.or(file.splits), "splits")?,
        draws: require(args.draws.or(file.draws), "draws")?,
        chains: args.chains.or(file.chains),
        burn_in: args.burn_in.or(file.burn_in).unwrap_or(500),
        thin: args.thin.or(file.thin).unwrap_or(1),
        seed: require(args.seed.or(file.seed), "seed")?,
        out: require(args.out.or(file.out), "out")?,
        splits_file: args.splits_file.or(file.splits_file),
        strata: args.strata.or(file.strata),
        nvk: args.nvk.or(file.nvk),
        prior_a: args.prior_a.or(prior.a).unwrap_or(2.1),
        prior_b: args.prior_b.or(prior.b).unwrap_or(1.1),
        tau2: args.tau2.or(prior.tau2).unwrap_or(0.25),
        tau2_mu: args.tau2_mu.or(prior.tau2_mu).unwrap_or(100.0),
        prior_c: args.prior_c.or(prior.c).unwrap_or(1.0),
        nu_fixed: args.nu_fixed.or(prior.nu_fixed),
        threads: args.threads.or(file.threads),
    };
    if cfg.splits == 0 || cfg.draws == 0 {
        return Err(validation("splits and draws must be positive"));
    }
    if cfg.estimators.iter().any(|e| e == "sir") && cfg.chains.is_none() {
        return Err(validation("sir estimator requires --chains"));
    }
    if stratified {
        if cfg.strata.is_none() {
            return Err(validation("stratified-xval requires --strata quadrant|column"));
        }
    } else if cfg.nv.is_none() && cfg.splits_file.is_none() {
        return Err(validation("xval requires --nv or --splits-file"));
    }
    Ok(cfg)
}

fn parse_models(names: &[String]) -> CliResult<Vec<ModelKind>> {
    names
        .iter()
        .map(|n| n.parse::<ModelKind>().map_err(CliError::from))
        .collect()
}

fn parse_discrepancies(names: &[String]) -> CliResult<Vec<DiscrepancyKind>> {
    names
        .iter()
        .map(|n| n.parse::<DiscrepancyKind>().map_err(CliError::from))
        .collect()
}

fn cmd_simulate(cfg: SimulateConfig) -> CliResult<()> {
    let kind: ScenarioKind = cfg
        .scenario
        .parse()
        .map_err(|e: geocv::Error| validation(e.to_string()))?;
    let mut scenario = kind.config::<f64>();
    scenario.m = cfg.m;
    if cfg.fixed_n.is_some() {
        scenario.fixed_n = cfg.fixed_n;
    }
    let out = simulate_with(&scenario, &cfg.scenario, cfg.seed)?;
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.out.display())))?;
    write_dataset(&out.dataset, &cfg.out.join("dataset.csv"))?;
    let meta = serde_json::json!({
        "config": cfg,
        "meta": out.meta,
    });
    std::fs::write(
        cfg.out.join("meta.json"),
        serde_json::to_string_pretty(&meta).expect("serializable") + "\n",
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!(
        "wrote {} sites to {}",
        out.dataset.n(),
        cfg.out.join("dataset.csv").display()
    );
    Ok(())
}

fn build_design(cfg: &XvalConfig, data: &GeoDataset64) -> CliResult<StratifiedDesign> {
    let labels = match cfg.strata.as_deref() {
        Some("quadrant") => StratifiedDesign::quadrant_labels(data.locations()),
        Some("column") => data
            .strata()
            .ok_or_else(|| validation("dataset has no stratum column"))?
            .to_vec(),
        Some(other) => return Err(validation(format!("unknown strata source '{other}'"))),
        None => unreachable!("checked in resolve_xval"),
    };
    let k = *labels.iter().max().unwrap_or(&0);
    let nvk = cfg
        .nvk
        .clone()
        .ok_or_else(|| validation("stratified-xval requires --nvk"))?;
    if nvk.len() != k {
        return Err(validation(format!(
            "--nvk lists {} strata but the labels define {k}",
            nvk.len()
        )));
    }
    StratifiedDesign::from_labels(labels, nvk).map_err(CliError::from)
}

fn cmd_xval(cfg: XvalConfig, stratified: bool) -> CliResult<()> {
    let data: GeoDataset64 = read_dataset(&cfg.data)?;
    let models = parse_models(&cfg.models)?;
    let kinds = parse_discrepancies(&cfg.discrepancies)?;
    for e in &cfg.estimators {
        if e != "mc" && e != "sir" {
            return Err(validation(format!("unknown estimator '{e}'")));
        }
    }
    if let Some(nv) = cfg.nv {
        if nv >= data.n() {
            return Err(validation(format!(
                "nv = {nv} must be smaller than the {} observed sites",
                data.n()
            )));
        }
    }

    let design = if stratified {
        Some(build_design(&cfg, &data)?)
    } else {
        None
    };
    let splits = match &cfg.splits_file {
        Some(p) => SplitBatch::read_csv(p)?,
        None => match &design {
            Some(d) => SplitBatch::stratified(d, cfg.splits, cfg.seed)?,
            None => SplitBatch::uniform(
                data.n(),
                cfg.nv.expect("checked in resolve_xval"),
                cfg.splits,
                cfg.seed,
            )?,
        },
    };

    let prior = PriorConfig::<f64> {
        a: cfg.prior_a,
        b: cfg.prior_b,
        tau2_mu: cfg.tau2_mu,
        c: cfg.prior_c,
        nu_fixed: cfg.nu_fixed,
        tau2: Tau2Setting::Fixed(cfg.tau2),
        ..PriorConfig::default()
    };
    let chain_cfg = ChainConfig::<f64> {
        burn_in: cfg.burn_in,
        thin: cfg.thin,
        ..ChainConfig::for_draws(cfg.burn_in, cfg.draws, cfg.thin)
    };

    let command = if stratified { "stratified-xval" } else { "xval" };
    let mut doc = ResultsDocument::new(
        command,
        cfg.seed,
        serde_json::to_value(&cfg).expect("serializable config"),
    );
    let mut split_rows: Vec<PerSplitRow> = Vec::new();
    let mut chain_rows: Vec<ChainSummaryRow> = Vec::new();

    for &model in &models {
        for est in &cfg.estimators {
            let outputs: Vec<EstimatorOutput<f64>> = match (est.as_str(), &design) {
                ("mc", None) => mc_estimate_multi(
                    model,
                    &data,
                    &splits,
                    cfg.draws,
                    &kinds,
                    &prior,
                    &chain_cfg,
                    cfg.seed.wrapping_add(1),
                )?,
                ("mc", Some(d)) => stratified_mc_estimate_multi(
                    model,
                    &data,
                    d,
                    &splits,
                    cfg.draws,
                    &kinds,
                    &prior,
                    &chain_cfg,
                    cfg.seed.wrapping_add(1),
                )?,
                ("sir", None) => sir_estimate_multi(
                    model,
                    &data,
                    &splits,
                    cfg.chains.expect("checked in resolve_xval"),
                    cfg.draws,
                    &kinds,
                    &prior,
                    &chain_cfg,
                    cfg.seed.wrapping_add(2),
                )?,
                ("sir", Some(d)) => stratified_sir_estimate_multi(
                    model,
                    &data,
                    d,
                    &splits,
                    cfg.chains.expect("checked in resolve_xval"),
                    cfg.draws,
                    &kinds,
                    &prior,
                    &chain_cfg,
                    cfg.seed.wrapping_add(2),
                )?,
                _ => unreachable!("estimators validated above"),
            };
            for (idx, out) in outputs.iter().enumerate() {
                doc.results.push(ResultEntry::from_output(out));
                split_rows.extend(per_split_rows(out));
                if idx == 0 {
                    chain_rows.extend(out.chain_diagnostics.iter().map(|c| ChainSummaryRow {
                        estimator: out.estimator.clone(),
                        model: out.model.to_string(),
                        chain: c.chain,
                        block: c.block.clone(),
                        rate: c.rate,
                    }));
                }
            }
        }
    }

    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", cfg.out.display())))?;
    doc.write_json(&cfg.out.join("results.json"))?;
    splits.write_csv(&cfg.out.join("splits.csv"))?;
    write_per_split_csv(&cfg.out.join("per_split.csv"), &split_rows)?;
    write_chain_summary_csv(&cfg.out.join("chains.csv"), &chain_rows)?;
    print!("{}", render_table(std::slice::from_ref(&doc))?);
    Ok(())
}

fn cmd_report(args: ReportArgs) -> CliResult<()> {
    let docs = args
        .results
        .iter()
        .map(|p| ResultsDocument::read_json(p).map_err(CliError::from))
        .collect::<CliResult<Vec<_>>>()?;
    let table = render_table(&docs)?;
    if let Some(out) = &args.out {
        std::fs::write(out, &table).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    print!("{table}");
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(resolve_simulate(args)?),
        Command::Xval(args) => {
            let cfg = resolve_xval(args, false)?;
            with_threads(cfg.threads, || cmd_xval(cfg, false))
        }
        Command::StratifiedXval(args) => {
            let cfg = resolve_xval(args, true)?;
            with_threads(cfg.threads, || cmd_xval(cfg, true))
        }
        Command::Report(args) => cmd_report(args),
    }
}

fn with_threads<F: FnOnce() -> CliResult<()> + Send>(n: Option<usize>, f: F) -> CliResult<()> {
    match n {
        None => f(),
        Some(n) => {
            if n == 0 {
                return Err(validation("threads must be positive"));
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(e.to_string()))?;
            pool.install(f)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.code())
        }
    }
}
