use serde::{Deserialize, Serialize};

use super::{weighted_covariance, AbcError, Cov5, PriorBox};
use crate::model::{ModelParams, N_PARAMS};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub theta: ModelParams,
    pub weight: f64,
    pub discrepancy: f64,
    /// Seed of the simulation that produced `discrepancy`.
    pub sim_seed: u64,
}

/// Diagnostics of one sampler step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub step: usize,
    pub epsilon: f64,
    pub mean_discrepancy: f64,
    pub acceptance_rate: f64,
    pub simulations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub particles: Vec<Particle>,
    pub epsilon: f64,
    pub step: usize,
    pub kernel_cov: Cov5,
    pub history: Vec<StepStats>,
}

impl Population {
    /// Equally weighted population.
    pub fn uniform(particles: Vec<Particle>, epsilon: f64, step: usize) -> Self {
        let mut pop = Self {
            particles,
            epsilon,
            step,
            kernel_cov: Cov5::zeros(),
            history: Vec::new(),
        };
        let w = 1.0 / pop.len().max(1) as f64;
        pop.particles.iter_mut().for_each(|p| p.weight = w);
        pop
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn thetas(&self) -> Vec<[f64; N_PARAMS]> {
        self.particles.iter().map(|p| p.theta.to_array()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.particles.iter().map(|p| p.weight).collect()
    }

    pub fn mean_discrepancy(&self) -> f64 {
        self.particles.iter().map(|p| p.discrepancy).sum::<f64>() / self.len().max(1) as f64
    }

    /// Rescales the weights to sum to one.
    pub fn normalize_weights(&mut self) -> Result<(), AbcError> {
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(AbcError::ZeroWeight);
        }
        self.particles.iter_mut().for_each(|p| p.weight /= total);
        Ok(())
    }

    /// Checks box membership, finiteness and weight normalization.
    pub fn check(&self, prior: &PriorBox) -> Result<(), String> {
        for (i, p) in self.particles.iter().enumerate() {
            if !prior.contains(&p.theta) {
                return Err(format!("particle {i} outside the prior box"));
            }
            if !(p.weight >= 0.0) || !p.weight.is_finite() || !p.discrepancy.is_finite() {
                return Err(format!("particle {i} has a non-finite or negative entry"));
            }
        }
        let total: f64 = self.particles.iter().map(|p| p.weight).sum();
        if !self.is_empty() && (total - 1.0).abs() > 1e-9 {
            return Err(format!("weights sum to {total}"));
        }
        Ok(())
    }
}

/// Posterior mean, the Bayes estimate under squared-error loss.
pub fn bayes_estimate(population: &Population) -> Result<ModelParams, AbcError> {
    let (mean, _) = weighted_covariance(&population.thetas(), &population.weights())?;
    Ok(ModelParams::from_array(mean))
}

/// Equal-tailed weighted credible interval for one parameter.
pub fn credible_interval(population: &Population, param: usize, level: f64) -> Result<(f64, f64), AbcError> {
    if population.is_empty() {
        return Err(AbcError::EmptyPopulation);
    }
    let mut pts: Vec<(f64, f64)> = population
        .particles
        .iter()
        .map(|p| (p.theta.to_array()[param], p.weight))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pts.iter().map(|p| p.1).sum();
    if !(total > 0.0) {
        return Err(AbcError::ZeroWeight);
    }
    let tail = 0.5 * (1.0 - level);
    let inverse_cdf = |q: f64| {
        let mut cum = 0.0;
        for &(v, w) in &pts {
            cum += w / total;
            if cum >= q - 1e-12 {
                return v;
            }
        }
        pts[pts.len() - 1].0
    };
    Ok((inverse_cdf(tail), inverse_cdf(1.0 - tail)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorCorrelation {
    pub matrix: Cov5,
    /// Parameters with zero posterior variance; their off-diagonal entries are 0.
    pub degenerate: [bool; N_PARAMS],
}

/// Weighted Pearson correlation matrix of the particle parameters.
pub fn posterior_correlation(population: &Population) -> Result<PosteriorCorrelation, AbcError> {
    if population.len() < 2 {
        return Err(AbcError::InvalidSettings("correlation needs at least 2 particles".into()));
    }
    let (mean, cov) = weighted_covariance(&population.thetas(), &population.weights())?;
    let degenerate: [bool; N_PARAMS] =
        std::array::from_fn(|i| !(cov[(i, i)] > 1e-24 * mean[i] * mean[i]) || cov[(i, i)] == 0.0);
    let matrix = Cov5::from_fn(|i, j| {
        if i == j {
            1.0
        } else if degenerate[i] || degenerate[j] {
            0.0
        } else {
            (cov[(i, j)] / (cov[(i, i)] * cov[(j, j)]).sqrt()).clamp(-1.0, 1.0)
        }
    });
    Ok(PosteriorCorrelation { matrix, degenerate })
}
