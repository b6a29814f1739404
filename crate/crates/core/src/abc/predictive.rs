use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use super::{substream, AbcError, Population, TaskError};
use crate::model::{DepositionSeries, ModelParams, Simulator, VARIABLE_NAMES};
use crate::scheduler::Executor;
use crate::seeds::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictiveSettings {
    pub n_draws: usize,
    /// Use this simulation seed for every draw instead of one seed per draw.
    pub fixed_seed: Option<u64>,
}

impl Default for PredictiveSettings {
    fn default() -> Self {
        Self {
            n_draws: 100,
            fixed_seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictiveRow {
    pub t_s: f64,
    pub variable: String,
    pub mean: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

/// Predictive bands, rows sorted by variable name, then time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PredictiveTable {
    pub rows: Vec<PredictiveRow>,
}

/// Position of an observed series relative to the predictive bands.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandCoverage {
    pub cells: usize,
    pub inside_range: usize,
    pub inside_quartiles: usize,
}

impl BandCoverage {
    pub fn all_inside_range(&self) -> bool {
        self.inside_range == self.cells
    }

    pub fn quartile_fraction(&self) -> f64 {
        self.inside_quartiles as f64 / self.cells.max(1) as f64
    }
}

impl PredictiveTable {
    /// Counts the observed values inside `[min, max]` and `[q25, q75]`.
    pub fn coverage(&self, observed: &DepositionSeries) -> BandCoverage {
        let mut c = BandCoverage {
            cells: 0,
            inside_range: 0,
            inside_quartiles: 0,
        };
        for row in &self.rows {
            let Some(v) = VARIABLE_NAMES.iter().position(|n| *n == row.variable) else {
                continue;
            };
            let Some(i) = observed.times.iter().position(|&t| t == row.t_s) else {
                continue;
            };
            let x = observed.variables()[v][i];
            c.cells += 1;
            c.inside_range += usize::from(row.min <= x && x <= row.max);
            c.inside_quartiles += usize::from(row.q25 <= x && x <= row.q75);
        }
        c
    }
}

/// Sample quantile with linear interpolation between order statistics
/// (`h = (n − 1)p`). `sorted` must be ascending and non-empty.
pub fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bands over a set of simulated series sharing one time grid.
pub fn predictive_bands(sims: &[DepositionSeries]) -> PredictiveTable {
    let Some(first) = sims.first() else {
        return PredictiveTable::default();
    };
    let mut order: Vec<usize> = (0..VARIABLE_NAMES.len()).collect();
    order.sort_by_key(|&v| VARIABLE_NAMES[v]);
    let mut rows = Vec::with_capacity(order.len() * first.len());
    for v in order {
        for (i, &t) in first.times.iter().enumerate() {
            let mut vals: Vec<f64> = sims.iter().map(|s| s.variables()[v][i]).collect();
            vals.sort_by(f64::total_cmp);
            rows.push(PredictiveRow {
                t_s: t,
                variable: VARIABLE_NAMES[v].to_string(),
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                q25: quantile_type7(&vals, 0.25),
                q75: quantile_type7(&vals, 0.75),
                min: vals[0],
                max: vals[vals.len() - 1],
            });
        }
    }
    PredictiveTable { rows }
}

/// Multinomially resamples `n_draws` parameter values from the population
/// and simulates one dataset for each.
pub fn predictive_simulations<E: Executor>(
    population: &Population,
    simulator: &Simulator,
    settings: &PredictiveSettings,
    executor: &E,
    master_seed: u64,
) -> Result<Vec<DepositionSeries>, AbcError> {
    if population.is_empty() {
        return Err(AbcError::EmptyPopulation);
    }
    let index = WeightedIndex::new(population.weights()).map_err(|_| AbcError::ZeroWeight)?;
    let mut rng = substream(master_seed, &[stream::PREDICT]);
    let tasks: Vec<(ModelParams, u64)> = (0..settings.n_draws as u64)
        .map(|j| {
            let theta = population.particles[index.sample(&mut rng)].theta;
            let seed = settings
                .fixed_seed
                .unwrap_or_else(|| derive_seed(master_seed, &[stream::PREDICT, 1, j]));
            (theta, seed)
        })
        .collect();
    let batch = executor.run(&tasks, |_, (theta, seed)| -> Result<_, TaskError> {
        Ok(simulator.run(theta, *seed)?)
    });
    batch
        .results
        .into_iter()
        .enumerate()
        .map(|(index, r)| r.map_err(|source| AbcError::Task { step: 0, index, source }))
        .collect()
}

/// Posterior predictive bands from `n_draws` simulations.
pub fn posterior_predictive<E: Executor>(
    population: &Population,
    simulator: &Simulator,
    settings: &PredictiveSettings,
    executor: &E,
    master_seed: u64,
) -> Result<PredictiveTable, AbcError> {
    let sims = predictive_simulations(population, simulator, settings, executor, master_seed)?;
    Ok(predictive_bands(&sims))
}
