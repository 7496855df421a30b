//! The TOML run configuration and the resolved form echoed into every output.
//!
//! ```toml
//! schema_version = 1
//! seed = 7
//!
//! [model]
//! statistics = ["num_groups", "group_homophily(age, range)",
//!               { kind = "dyadic_covariate", covariate = "acquaintance" }]
//! bounds = [2, 5]
//!
//! [sampler]
//! burn_in = 1000
//! thinning = 10
//! ```

use std::path::{Path, PathBuf};

use erpm::estimator::EstimationConfig;
use erpm::likelihood::PathConfig;
use erpm::{
    BoundsMode, ChainConfig, InitialState, ModelSpec, Partition, ProposalMixture, SizeBounds,
    StatisticSpec,
};
use serde::{Deserialize, Serialize};

use crate::data::DataPaths;
use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StatisticEntry {
    Text(String),
    Table(StatisticSpec),
}

impl StatisticEntry {
    pub fn resolve(&self) -> Result<StatisticSpec> {
        match self {
            StatisticEntry::Text(s) => Ok(s.parse()?),
            StatisticEntry::Table(s) => Ok(s.clone()),
        }
    }
}

/// `[min, max]`, or a table with `min` and optional `max`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundsEntry {
    Pair([usize; 2]),
    Table {
        #[serde(default = "one")]
        min: usize,
        max: Option<usize>,
    },
}

fn one() -> usize {
    1
}

impl BoundsEntry {
    pub fn resolve(self) -> Result<SizeBounds> {
        let (min, max) = match self {
            BoundsEntry::Pair([a, b]) => (a, Some(b)),
            BoundsEntry::Table { min, max } => (min, max),
        };
        Ok(SizeBounds::new(min, max)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub statistics: Vec<StatisticEntry>,
    pub alpha: Option<Vec<f64>>,
    pub bounds: Option<BoundsEntry>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialChoice {
    /// Start from the observed partition when one is loaded and it respects the bounds.
    #[default]
    Observed,
    RandomValid,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    /// `None` picks merge/split alone for size-only models and equal weights otherwise.
    pub mixture: Option<ProposalMixture>,
    pub burn_in: u64,
    pub thinning: u64,
    pub bounds_mode: BoundsMode,
    pub initial: InitialChoice,
    pub refresh_interval: u64,
    /// Parallel chains for goodness-of-fit simulation.
    pub chains: usize,
}

impl Default for SamplerSection {
    fn default() -> Self {
        let c = ChainConfig::default();
        Self {
            mixture: None,
            burn_in: c.burn_in,
            thinning: c.thinning,
            bounds_mode: c.bounds_mode,
            initial: InitialChoice::default(),
            refresh_interval: c.refresh_interval,
            chains: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub n: Option<usize>,
    pub seed: Option<u64>,
    pub model: ModelSection,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub estimation: EstimationConfig,
    #[serde(default)]
    pub path: PathConfig,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|source| CliError::Toml {
            path: path.into(),
            source,
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::data(
                path,
                format!(
                    "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                    cfg.schema_version
                ),
            ));
        }
        cfg.model_spec()?;
        cfg.estimation.validate()?;
        cfg.path.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
        Self::parse(&text, path)
    }

    /// Statistics, bounds (default `[1, n]`) and `alpha` (default zeros).
    pub fn model_spec(&self) -> Result<ModelSpec> {
        let statistics = self
            .model
            .statistics
            .iter()
            .map(StatisticEntry::resolve)
            .collect::<Result<Vec<_>>>()?;
        if statistics.is_empty() {
            return Err(erpm::Error::Config("the model lists no statistics".into()).into());
        }
        let bounds = match self.model.bounds {
            Some(b) => b.resolve()?,
            None => SizeBounds::unbounded(),
        };
        let alpha = self.model.alpha.clone().unwrap_or_else(|| vec![0.0; statistics.len()]);
        Ok(ModelSpec::new(statistics, alpha, bounds)?)
    }

    pub fn chain_config(&self, specs: &[StatisticSpec], seed: u64, observed: Option<&Partition>) -> Result<ChainConfig> {
        let s = &self.sampler;
        let mixture = match s.mixture {
            Some(m) => ProposalMixture::new(m.merge_split, m.permute, m.transfer)?,
            None => ProposalMixture::default_for(specs),
        };
        let initial = match (s.initial, observed) {
            (InitialChoice::Observed, Some(p)) => InitialState::Given(p.clone()),
            _ => InitialState::RandomValid,
        };
        let cfg = ChainConfig {
            mixture,
            burn_in: s.burn_in,
            thinning: s.thinning,
            seed,
            bounds_mode: s.bounds_mode,
            initial,
            refresh_interval: s.refresh_interval,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Everything needed to replay a run, written into every result file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub schema_version: u32,
    pub tool_version: String,
    pub command: String,
    pub seed: u64,
    pub n: usize,
    pub config_path: Option<PathBuf>,
    pub data: DataPaths,
    pub model: ModelSpec,
    pub sampler: ChainConfig,
    pub gof_chains: usize,
    pub estimation: EstimationConfig,
    pub path: PathConfig,
}

impl Provenance {
    pub fn new(
        command: &str,
        cfg: &RunConfig,
        config_path: Option<&Path>,
        data: &DataPaths,
        model: &ModelSpec,
        sampler: &ChainConfig,
        n: usize,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: sampler.seed,
            n,
            config_path: config_path.map(Path::to_path_buf),
            data: data.clone(),
            model: model.clone(),
            sampler: sampler.clone(),
            gof_chains: cfg.sampler.chains,
            estimation: cfg.estimation.clone(),
            path: cfg.path.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use erpm::statistics::GroupForm;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("model.toml"))
    }

    #[test]
    fn minimal_config_resolves_defaults() {
        let cfg = parse("schema_version = 1\n[model]\nstatistics = [\"num_groups\"]\n").unwrap();
        let m = cfg.model_spec().unwrap();
        assert_eq!(m.statistics, vec![StatisticSpec::num_groups()]);
        assert_eq!(m.alpha, vec![0.0]);
        assert_eq!(m.bounds, SizeBounds::unbounded());
        assert_eq!(cfg.estimation, EstimationConfig::default());
        let chain = cfg.chain_config(&m.statistics, 3, None).unwrap();
        assert_eq!(chain.mixture, ProposalMixture::merge_split_only());
        assert_eq!(chain.initial, InitialState::RandomValid);
    }

    #[test]
    fn edition_one_style_config() {
        let cfg = parse(
            r#"
schema_version = 1
[model]
statistics = [
  "num_groups",
  "sum_squared_sizes",
  "group_homophily(age, range)",
  "group_homophily(language, distinctCount)",
  { kind = "group_homophily", attribute = "major", form = "distinct_count" },
  "dyadic_covariate(acquaintance)",
]
bounds = [2, 5]
[estimation]
subphases = 3
"#,
        )
        .unwrap();
        let m = cfg.model_spec().unwrap();
        assert_eq!(m.statistics.len(), 6);
        assert_eq!(m.statistics[4], StatisticSpec::group_homophily("major", GroupForm::DistinctCount));
        assert_eq!(m.bounds, SizeBounds::new(2, Some(5)).unwrap());
        assert_eq!(cfg.estimation.subphases, 3);
        let chain = cfg.chain_config(&m.statistics, 0, None).unwrap();
        assert_eq!(chain.mixture, ProposalMixture::uniform());
    }

    #[test]
    fn rejects_bad_configs() {
        let base = "schema_version = 1\n[model]\n";
        assert!(parse(&format!("{base}statistics = [\"num_groups\"]\nbounds = [5, 2]\n")).is_err());
        assert!(parse(&format!("{base}statistics = [\"num_cliques\"]\n")).is_err());
        assert!(parse(&format!("{base}statistics = []\n")).is_err());
        assert!(parse(&format!("{base}statistics = [\"num_groups\"]\nalpha = [1.0, 2.0]\n")).is_err());
        assert!(parse(&format!("{base}statistics = [\"num_groups\"]\nfoo = 1\n")).is_err());
        assert!(parse("schema_version = 2\n[model]\nstatistics = [\"num_groups\"]\n").is_err());
    }

    #[test]
    fn bounds_table_form() {
        let cfg = parse("schema_version = 1\n[model]\nstatistics = [\"num_groups\"]\nbounds = { min = 2 }\n").unwrap();
        assert_eq!(cfg.model_spec().unwrap().bounds, SizeBounds::new(2, None).unwrap());
    }
}
