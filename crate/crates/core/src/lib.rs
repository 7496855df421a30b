//! Exponential random partition models: exact computation, MCMC sampling,
//! stochastic-approximation estimation, likelihood and goodness of fit.
//!
//! A model assigns `Pr(p) ∝ exp(αᵀ s(p))` to each partition `p` of a set of
//! actors, optionally restricted to partitions whose block sizes lie in
//! `[min, max]`.
//!
//! ```
//! use erpm::{exact, CovariateStore, ModelSpec, SizeBounds, StatisticSpec};
//!
//! let model = ModelSpec::new(vec![StatisticSpec::num_groups()], vec![0.5], SizeBounds::unbounded()).unwrap();
//! let dist = exact::exact_distribution(&model, &CovariateStore::new(4)).unwrap();
//! assert_eq!(dist.partitions.len(), 15);
//! ```

pub mod combinatorics;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod exact;
pub mod likelihood;
pub mod linalg;
pub mod partition;
pub mod report;
pub mod sampler;
pub mod scalar;
pub mod statistics;

pub use error::{Error, Result};
pub use estimator::{EstimationConfig, EstimationResult};
pub use exact::{ExactDistribution, ModelSpec};
pub use partition::{Partition, RelationKind, SizeBounds};
pub use sampler::{BoundsMode, ChainConfig, InitialState, ProposalMixture};
pub use scalar::Real;
pub use statistics::{
    CompiledStats, CovariateStore, DyadSimilarity, GroupForm, StatVector, StatisticKind, StatisticSpec,
};

pub type Model = ModelSpec<f64>;
pub type Model32 = ModelSpec<f32>;
pub type Covariates = CovariateStore<f64>;
pub type Covariates32 = CovariateStore<f32>;
