//! Platelet deposition model and its likelihood-free calibration.
//!
//! - [`model`]: the stochastic forward simulator.
//! - [`summary`]: summary statistics and the discrepancy between datasets.
//! - [`abc`]: priors, perturbation kernel, rejection and annealing samplers,
//!   Bayes estimate, posterior predictive bands and correlations.
//! - [`scheduler`]: chunked and dynamic task allocation over a worker pool.
//! - [`io`]: CSV/JSON formats and run configuration.

pub mod abc;
pub mod io;
pub mod model;
pub mod scheduler;
pub mod seeds;
pub mod summary;

pub use model::{simulate, DepositionSeries, ModelParams, SimulationConfig, Simulator};
