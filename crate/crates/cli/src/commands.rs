use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use erpm::diagnostics::{gof, parse_aux_list, GofReport};
use erpm::estimator::{derive_seed, estimate, EstimationResult};
use erpm::exact::{exact_distribution_capped, DEFAULT_ENUMERATION_CAP};
use erpm::likelihood::{path_sampling_loglik, PathResult};
use erpm::report::format_estimates;
use erpm::sampler::Chain;
use erpm::ModelSpec;
use serde::{Deserialize, Serialize};

use crate::config::{Provenance, RunConfig};
use crate::data::{load_dataset, writer, DataPaths, Dataset};
use crate::error::{CliError, Result, EXIT_NON_CONVERGENCE, EXIT_OK};

const LOGLIK_STREAM: u64 = 0x4c4c;
const GOF_STREAM: u64 = 0x474f46;

#[derive(Debug, Parser)]
#[command(name = "erpm", version, about = "Exponential random partition models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List every partition with its statistics and exact probability.
    Enumerate(EnumerateArgs),
    /// Draw partitions from the model by MCMC and write a statistics trace.
    Simulate(SimulateArgs),
    /// Fit the model to an observed partition by stochastic approximation.
    Estimate(EstimateArgs),
    /// Path-sampling log-likelihood of a fitted model.
    Loglik(LoglikArgs),
    /// Goodness-of-fit on auxiliary statistics for a fitted model.
    Gof(GofArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub partition: Option<PathBuf>,
    #[arg(long)]
    pub attributes: Option<PathBuf>,
    /// Dyadic edge list; repeat for several covariates.
    #[arg(long)]
    pub dyadic: Vec<PathBuf>,
}

impl DataArgs {
    fn paths(&self) -> DataPaths {
        DataPaths {
            partition: self.partition.clone(),
            attributes: self.attributes.clone(),
            dyadic: self.dyadic.clone(),
        }
    }
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Number of actors when no data file is given.
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct LoglikArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optional JSON output; the estimate is always printed.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub sims: usize,
    /// Comma-separated list, e.g. `size_hist,icc:age,attr_size_corr:age`.
    #[arg(long)]
    pub aux: String,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory receiving `gof_report.json` and `gof_values.csv`.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Output of `estimate`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub provenance: Provenance,
    pub result: EstimationResult,
    pub table: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoglikFile {
    pub provenance: Provenance,
    pub fit: PathBuf,
    pub result: PathResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofFile {
    pub provenance: Provenance,
    pub fit: PathBuf,
    pub report: GofReport,
}

/// Runs one subcommand and returns its exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Enumerate(a) => enumerate(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Estimate(a) => run_estimate(&a),
        Command::Loglik(a) => loglik(&a),
        Command::Gof(a) => run_gof(&a),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })?;
    text.push('\n');
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.into(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.into(),
        source,
    })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |source| CliError::Csv {
        path: path.into(),
        source,
    }
}

/// `<out>.provenance.json`, the sidecar describing a CSV output.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".provenance.json");
    PathBuf::from(s)
}

fn setup(model_path: &Path, n: Option<usize>, data: &DataPaths) -> Result<(RunConfig, ModelSpec, Dataset)> {
    let cfg = RunConfig::load(model_path)?;
    let model = cfg.model_spec()?;
    let dataset = load_dataset(data, n.or(cfg.n))?;
    dataset.covariates.validate(&model.statistics)?;
    Ok((cfg, model, dataset))
}

fn membership_label(p: &erpm::Partition) -> String {
    p.membership().iter().map(usize::to_string).collect::<Vec<_>>().join(" ")
}

fn stat_header(model: &ModelSpec) -> Vec<String> {
    model.statistics.iter().map(|s| s.to_string()).collect()
}

fn enumerate(a: &EnumerateArgs) -> Result<i32> {
    let data = a.data.paths();
    let (cfg, model, ds) = setup(&a.model, a.n, &data)?;
    let dist = exact_distribution_capped(&model, &ds.covariates, a.cap)?;
    let mut w = writer(&a.out)?;
    let err = csv_err(&a.out);
    let mut header = vec!["partition".to_string()];
    header.extend(stat_header(&model));
    header.push("probability".into());
    w.write_record(&header).map_err(&err)?;
    for (k, p) in dist.partitions.iter().enumerate() {
        let mut row = vec![membership_label(p)];
        row.extend(dist.statistics[k].iter().map(f64::to_string));
        row.push(dist.probabilities[k].to_string());
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    let chain = cfg.chain_config(&model.statistics, cfg.seed.unwrap_or(0), None)?;
    let prov = Provenance::new("enumerate", &cfg, Some(&a.model), &data, &model, &chain, ds.n());
    write_json(&sidecar_path(&a.out), &prov)?;
    println!("{} partitions written to {}", dist.partitions.len(), a.out.display());
    Ok(EXIT_OK)
}

fn simulate(a: &SimulateArgs) -> Result<i32> {
    let data = a.data.paths();
    let (mut cfg, model, ds) = setup(&a.model, a.n, &data)?;
    if let Some(b) = a.burnin {
        cfg.sampler.burn_in = b;
    }
    if let Some(t) = a.thin {
        cfg.sampler.thinning = t;
    }
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let chain_cfg = cfg.chain_config(&model.statistics, seed, ds.partition.as_ref())?;
    let mut chain = Chain::new(&model, &ds.covariates, &chain_cfg, 0)?;
    chain.burn_in()?;
    let mut w = writer(&a.out)?;
    let err = csv_err(&a.out);
    let mut header = vec!["sample".to_string()];
    header.extend(stat_header(&model));
    header.push("num_groups".into());
    w.write_record(&header).map_err(&err)?;
    for i in 0..a.samples {
        let d = chain.next_draw()?;
        let mut row = vec![i.to_string()];
        row.extend(d.stats.iter().map(f64::to_string));
        row.push(d.partition.num_groups().to_string());
        w.write_record(&row).map_err(&err)?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: a.out.clone(),
        source,
    })?;
    let prov = Provenance::new("simulate", &cfg, Some(&a.model), &data, &model, &chain_cfg, ds.n());
    write_json(&sidecar_path(&a.out), &prov)?;
    println!(
        "{} draws written to {} (acceptance rate {:.3})",
        a.samples,
        a.out.display(),
        chain.acceptance_rate()
    );
    Ok(EXIT_OK)
}

fn run_estimate(a: &EstimateArgs) -> Result<i32> {
    let data = a.data.paths();
    let (cfg, model, ds) = setup(&a.model, None, &data)?;
    let observed = ds.observed()?;
    let seed = a.seed.or(cfg.seed).unwrap_or(0);
    let chain_cfg = cfg.chain_config(&model.statistics, seed, Some(observed))?;
    let result = estimate(&model, observed, &ds.covariates, &cfg.estimation, &chain_cfg)?;
    let table = format_estimates(&result, None);
    let prov = Provenance::new("estimate", &cfg, Some(&a.model), &data, &model, &chain_cfg, ds.n());
    let converged = result.converged;
    let worst = result.max_abs_convergence_ratio();
    write_json(
        &a.out,
        &FitFile {
            provenance: prov,
            result,
            table: table.clone(),
        },
    )?;
    print!("{table}");
    if converged {
        Ok(EXIT_OK)
    } else {
        eprintln!("{}", CliError::NotConverged(worst));
        Ok(EXIT_NON_CONVERGENCE)
    }
}

/// Data paths are tried as recorded, then relative to the fit file.
fn reload(fit_path: &Path, fit: &FitFile) -> Result<Dataset> {
    let base = fit_path.parent().unwrap_or(Path::new("."));
    let locate = |p: &PathBuf| {
        if p.exists() || p.is_absolute() {
            p.clone()
        } else {
            base.join(p)
        }
    };
    let d = &fit.provenance.data;
    let paths = DataPaths {
        partition: d.partition.as_ref().map(locate),
        attributes: d.attributes.as_ref().map(locate),
        dyadic: d.dyadic.iter().map(locate).collect(),
    };
    let ds = load_dataset(&paths, Some(fit.provenance.n))?;
    ds.covariates.validate(&fit.result.statistics)?;
    Ok(ds)
}

fn fitted(fit: &FitFile, seed: u64) -> (ModelSpec, erpm::ChainConfig) {
    let mut chain = fit.provenance.sampler.clone();
    chain.seed = seed;
    chain.thinning = chain.thinning.max(fit.result.thinning);
    (fit.result.model(), chain)
}

fn loglik(a: &LoglikArgs) -> Result<i32> {
    let fit: FitFile = read_json(&a.fit)?;
    let ds = reload(&a.fit, &fit)?;
    let observed = ds.observed()?;
    let seed = a.seed.unwrap_or_else(|| derive_seed(fit.provenance.seed, LOGLIK_STREAM));
    let (model, chain) = fitted(&fit, seed);
    let result = path_sampling_loglik(&model, observed, &ds.covariates, &fit.provenance.path, &chain)?;
    print!("{}", format_estimates(&fit.result, Some((result.loglik, result.std_error))));
    if let Some(out) = &a.out {
        let mut prov = fit.provenance.clone();
        prov.command = "loglik".into();
        prov.seed = seed;
        prov.sampler = chain;
        prov.model = model;
        write_json(
            out,
            &LoglikFile {
                provenance: prov,
                fit: a.fit.clone(),
                result,
            },
        )?;
    }
    Ok(EXIT_OK)
}

fn run_gof(a: &GofArgs) -> Result<i32> {
    let aux = parse_aux_list(&a.aux)?;
    if aux.is_empty() {
        return Err(CliError::Usage("--aux lists no statistics".into()));
    }
    let fit: FitFile = read_json(&a.fit)?;
    let ds = reload(&a.fit, &fit)?;
    let observed = ds.observed()?;
    let seed = a.seed.unwrap_or_else(|| derive_seed(fit.provenance.seed, GOF_STREAM));
    let (model, chain) = fitted(&fit, seed);
    let report = gof(
        &model,
        &ds.covariates,
        observed,
        &aux,
        a.sims,
        &chain,
        fit.provenance.gof_chains,
    )?;
    fs::create_dir_all(&a.out_dir).map_err(|source| CliError::Io {
        path: a.out_dir.clone(),
        source,
    })?;
    let values = a.out_dir.join("gof_values.csv");
    let mut w = writer(&values)?;
    let err = csv_err(&values);
    w.write_record(["statistic", "replicate", "value"]).map_err(&err)?;
    for s in &report.summaries {
        for (r, v) in s.simulated.iter().enumerate() {
            let v = v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([s.name.as_str(), &(r + 1).to_string(), &v]).map_err(&err)?;
        }
    }
    w.flush().map_err(|source| CliError::Io {
        path: values.clone(),
        source,
    })?;
    for s in &report.summaries {
        let fmt = |x: Option<f64>| x.map(|x| format!("{x:.3}")).unwrap_or_else(|| "NA".into());
        println!(
            "{:<32} observed {:>9}  simulated mean {:>9}  sd {:>9}{}",
            s.name,
            fmt(s.observed),
            fmt(s.mean),
            fmt(s.sd),
            if s.flagged { "  FLAGGED" } else { "" }
        );
    }
    let mut prov = fit.provenance.clone();
    prov.command = "gof".into();
    prov.seed = seed;
    prov.sampler = chain;
    prov.model = model;
    write_json(
        &a.out_dir.join("gof_report.json"),
        &GofFile {
            provenance: prov,
            fit: a.fit.clone(),
            report,
        },
    )?;
    Ok(EXIT_OK)
}
