//! Likelihood-free posterior approximation.
//!
//! Both samplers follow the same loop: draw or perturb parameter values,
//! simulate one dataset per value through an [`Executor`], and keep values
//! according to the discrepancy between simulated and observed summaries.
//! Every random draw comes from a seed derived from the master seed and the
//! draw's coordinates (step, particle), never from shared generator state,
//! so results do not depend on the number of workers or completion order.

mod kernel;
mod population;
mod predictive;
mod prior;
mod rejection;
mod sabc;

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

use crate::model::{DepositionSeries, ModelError, ModelParams, SimulationConfig, Simulator};
use crate::scheduler::Executor;
use crate::seeds::derive_seed;
use crate::summary::{summarize, summary_discrepancy, SummaryError, SummaryVector};

pub use kernel::{adapt_cov, perturb, weighted_covariance, Cov5, Kernel, MAX_KERNEL_REJECTIONS};
pub use population::{
    bayes_estimate, credible_interval, posterior_correlation, Particle, Population, PosteriorCorrelation,
    StepStats,
};
pub use predictive::{
    posterior_predictive, predictive_bands, predictive_simulations, quantile_type7, BandCoverage,
    PredictiveRow, PredictiveSettings, PredictiveTable,
};
pub use prior::{sample_prior, PriorBox};
pub use rejection::{rejection_abc, RejectionAbc};
pub use sabc::{sabc, EpsilonSchedule, Sabc};

/// Failure of a single simulation task.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TaskError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Summary(#[from] SummaryError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbcError {
    #[error("invalid prior in dimension {dim}: lower {lower} must be below upper {upper}")]
    InvalidPrior { dim: usize, lower: f64, upper: f64 },
    #[error("invalid sampler setting: {0}")]
    InvalidSettings(String),
    #[error("population is empty")]
    EmptyPopulation,
    #[error("population weights sum to zero")]
    ZeroWeight,
    #[error("kernel covariance is not positive semidefinite (smallest eigenvalue {0})")]
    NotPsd(f64),
    #[error("perturbation kernel rejected {0} consecutive proposals")]
    KernelRejections(u64),
    #[error("acceptance rate below {min_rate} over the last {draws} draws ({accepted} accepted)")]
    LowAcceptance { draws: u64, accepted: u64, min_rate: f64 },
    #[error("simulation failed at step {step}, particle {index}: {source}")]
    Task {
        step: usize,
        index: usize,
        #[source]
        source: TaskError,
    },
    #[error("observed data: {0}")]
    Observed(SummaryError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Observed summary, forward model and prior of one inference problem.
#[derive(Debug, Clone)]
pub struct AbcProblem {
    pub observed: SummaryVector,
    pub simulator: Simulator,
    pub prior: PriorBox,
}

impl AbcProblem {
    pub fn new(observed: &DepositionSeries, prior: &PriorBox, config: &SimulationConfig) -> Result<Self, AbcError> {
        prior.validate()?;
        Ok(Self {
            observed: summarize(observed).map_err(AbcError::Observed)?,
            simulator: Simulator::new(config.clone())?,
            prior: prior.clone(),
        })
    }

    /// Simulates every `(theta, seed)` task and returns its discrepancy to
    /// the observed summary, in task order.
    pub fn score<E: Executor>(
        &self,
        tasks: &[(ModelParams, u64)],
        executor: &E,
        step: usize,
    ) -> Result<Vec<f64>, AbcError> {
        let batch = executor.run(tasks, |_, (theta, seed)| -> Result<f64, TaskError> {
            let series = self.simulator.run(theta, *seed)?;
            Ok(summary_discrepancy(&self.observed, &summarize(&series)?)?)
        });
        batch
            .results
            .into_iter()
            .enumerate()
            .map(|(index, r)| r.map_err(|source| AbcError::Task { step, index, source }))
            .collect()
    }
}

/// A posterior sampler operating on an [`AbcProblem`].
pub trait Sampler {
    fn name(&self) -> &'static str;

    fn run<E: Executor>(&self, problem: &AbcProblem, executor: &E, master_seed: u64) -> Result<Population, AbcError>;
}

pub(crate) fn substream(master: u64, coords: &[u64]) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(derive_seed(master, coords))
}
