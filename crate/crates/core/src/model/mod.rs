//! Stochastic forward model of platelet deposition.
//!
//! Platelets (activated and non-activated) and albumin diffuse vertically
//! in a continuum bulk, enter a thin boundary layer above the substrate,
//! and from there attempt discrete deposition onto a 2D lattice of cells.
//! A run produces the four observables of [`DepositionSeries`].

mod bulk;
mod config;
pub mod grid;
mod params;
mod rates;
mod series;
mod simulate;
mod sweep;

use thiserror::Error;

pub use bulk::{boundary_exchange, diffusion_step, ftcs_step, BulkState, PerSpecies, Species};
pub use config::{Geometry, SimulationConfig};
pub use grid::{cluster_census, ClusterCensus, Site, SubstrateGrid};
pub use params::{ModelParams, N_PARAMS, PARAM_NAMES};
pub use rates::{adhesion_prob, aggregation_prob, albumin_deposit_prob, on_top_prob};
pub use series::{DepositionSeries, VARIABLE_NAMES};
pub use simulate::{simulate, SimulationOutcome, Simulator, MASS_TOLERANCE};
pub use sweep::deposition_sweep;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid configuration `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("invalid parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invariant violated for {} at step {}: {what}", species.name(), step.map_or("?".to_string(), |s| s.to_string()))]
    Invariant {
        step: Option<u64>,
        species: Species,
        what: String,
    },
}

impl ModelError {
    pub(crate) fn at_step(self, step: u64) -> Self {
        match self {
            ModelError::Invariant { species, what, .. } => ModelError::Invariant {
                step: Some(step),
                species,
                what,
            },
            other => other,
        }
    }
}
