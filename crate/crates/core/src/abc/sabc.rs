//! Annealing sampler with probabilistic acceptance.
//!
//! Each step perturbs every particle with the adapted kernel, simulates the
//! proposal, and replaces the particle with probability
//! `min(1, exp(−(d_new − d_old)/ε))`. The threshold follows
//! `ε_k = max(α · mean d, floor)` over the particles entering step `k`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{adapt_cov, substream, AbcError, AbcProblem, Kernel, Particle, Population, PriorBox, Sampler, StepStats};
use crate::model::{DepositionSeries, SimulationConfig};
use crate::scheduler::Executor;
use crate::seeds::{derive_seed, stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsilonSchedule {
    /// `ε_k = max(alpha · mean d, floor)`.
    Annealing { alpha: f64, floor: f64 },
    /// Same threshold every step; `f64::INFINITY` accepts every move.
    Fixed(f64),
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule::Annealing { alpha: 0.5, floor: 1e-6 }
    }
}

impl EpsilonSchedule {
    pub fn next(&self, mean_discrepancy: f64) -> f64 {
        match *self {
            EpsilonSchedule::Annealing { alpha, floor } => (alpha * mean_discrepancy).max(floor),
            EpsilonSchedule::Fixed(eps) => eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Sabc {
    pub n_particles: usize,
    pub n_steps: usize,
    /// Stop once a step accepts fewer than this fraction of moves.
    pub acc_cutoff: f64,
    pub schedule: EpsilonSchedule,
}

impl Default for Sabc {
    fn default() -> Self {
        Self {
            n_particles: 256,
            n_steps: 10,
            acc_cutoff: 1e-4,
            schedule: EpsilonSchedule::default(),
        }
    }
}

/// Acceptance probability of a move from `d_old` to `d_new`.
pub(crate) fn acceptance_prob(d_old: f64, d_new: f64, epsilon: f64) -> f64 {
    if d_new <= d_old {
        1.0
    } else {
        (-(d_new - d_old) / epsilon).exp().min(1.0)
    }
}

impl Sampler for Sabc {
    fn name(&self) -> &'static str {
        "sabc"
    }

    fn run<E: Executor>(&self, problem: &AbcProblem, executor: &E, master_seed: u64) -> Result<Population, AbcError> {
        if self.n_particles < 2 {
            return Err(AbcError::InvalidSettings("n_particles must be at least 2".into()));
        }
        if self.n_steps < 1 {
            return Err(AbcError::InvalidSettings("n_steps must be at least 1".into()));
        }
        let prior = &problem.prior;
        let n = self.n_particles as u64;

        let tasks: Vec<_> = (0..n)
            .map(|i| {
                let theta = prior.sample(&mut substream(master_seed, &[stream::PRIOR, i]));
                (theta, derive_seed(master_seed, &[stream::SIMULATION, 0, i]))
            })
            .collect();
        let scores = problem.score(&tasks, executor, 0)?;
        let particles = tasks
            .into_iter()
            .zip(scores)
            .map(|((theta, sim_seed), discrepancy)| Particle {
                theta,
                weight: 0.0,
                discrepancy,
                sim_seed,
            })
            .collect();
        let mut pop = Population::uniform(particles, f64::INFINITY, 0);
        pop.history.push(StepStats {
            step: 0,
            epsilon: f64::INFINITY,
            mean_discrepancy: pop.mean_discrepancy(),
            acceptance_rate: 1.0,
            simulations: self.n_particles,
        });

        for step in 1..=self.n_steps {
            let epsilon = self.schedule.next(pop.mean_discrepancy());
            let cov = adapt_cov(&pop.particles)?;
            let kernel = Kernel::new(&cov)?;
            let k = step as u64;
            let proposals = pop
                .particles
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    let mut rng = substream(master_seed, &[stream::PROPOSAL, k, i as u64]);
                    let theta = kernel.perturb(&p.theta, prior, &mut rng)?;
                    Ok((theta, derive_seed(master_seed, &[stream::SIMULATION, k, i as u64])))
                })
                .collect::<Result<Vec<_>, AbcError>>()?;
            let scores = problem.score(&proposals, executor, step)?;

            let mut accepted = 0usize;
            for (i, ((theta, sim_seed), d_new)) in proposals.into_iter().zip(scores).enumerate() {
                let p = &mut pop.particles[i];
                let u: f64 = substream(master_seed, &[stream::ACCEPT, k, i as u64]).random();
                if u < acceptance_prob(p.discrepancy, d_new, epsilon) {
                    p.theta = theta;
                    p.discrepancy = d_new;
                    p.sim_seed = sim_seed;
                    accepted += 1;
                }
            }
            let rate = accepted as f64 / self.n_particles as f64;
            pop.epsilon = epsilon;
            pop.step = step;
            pop.kernel_cov = cov;
            pop.history.push(StepStats {
                step,
                epsilon,
                mean_discrepancy: pop.mean_discrepancy(),
                acceptance_rate: rate,
                simulations: self.n_particles,
            });
            log::debug!("sabc step {step}: epsilon {epsilon:.4e}, acceptance {rate:.3}");
            if rate < self.acc_cutoff {
                break;
            }
        }
        let w = 1.0 / self.n_particles as f64;
        pop.particles.iter_mut().for_each(|p| p.weight = w);
        Ok(pop)
    }
}

/// Runs [`Sabc`] with the default annealing schedule.
#[allow(clippy::too_many_arguments)]
pub fn sabc<E: Executor>(
    observed: &DepositionSeries,
    prior: &PriorBox,
    config: &SimulationConfig,
    n_particles: usize,
    n_steps: usize,
    acc_cutoff: f64,
    executor: &E,
    master_seed: u64,
) -> Result<Population, AbcError> {
    let sampler = Sabc {
        n_particles,
        n_steps,
        acc_cutoff,
        schedule: EpsilonSchedule::default(),
    };
    sampler.run(&AbcProblem::new(observed, prior, config)?, executor, master_seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn improvements_always_accepted() {
        for eps in [1e-9, 1e-3, 1.0, f64::INFINITY] {
            assert_eq!(acceptance_prob(0.3, 0.2, eps), 1.0);
            assert_eq!(acceptance_prob(0.3, 0.3, eps), 1.0);
        }
    }

    #[test]
    fn infinite_threshold_accepts_everything() {
        assert_eq!(acceptance_prob(0.0, 1.5, f64::INFINITY), 1.0);
    }

    #[test]
    fn worse_moves_follow_exponential_rule() {
        let p = acceptance_prob(0.1, 0.3, 0.1);
        assert!((p - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn schedule_halves_mean_with_floor() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.next(0.4), 0.2);
        assert_eq!(s.next(0.0), 1e-6);
        assert_eq!(EpsilonSchedule::Fixed(0.3).next(10.0), 0.3);
    }
}
