use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{adapt_cov, substream, AbcError, AbcProblem, Particle, Population, PriorBox, Sampler, StepStats};
use crate::model::{DepositionSeries, SimulationConfig};
use crate::scheduler::Executor;
use crate::seeds::{derive_seed, stream};

/// Rejection ABC: keep prior draws whose discrepancy is below `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RejectionAbc {
    pub n_accept: usize,
    pub epsilon: f64,
    /// Proposals simulated per executor batch. The kept draws do not depend
    /// on it; the reported simulation count rounds up to whole batches.
    pub batch_size: usize,
    /// Draws over which the acceptance rate is monitored.
    pub window: u64,
    /// Abort when the windowed acceptance rate falls below this.
    pub min_rate: f64,
}

impl Default for RejectionAbc {
    fn default() -> Self {
        Self {
            n_accept: 256,
            epsilon: 0.1,
            batch_size: 256,
            window: 1_000_000,
            min_rate: 1e-6,
        }
    }
}

impl Sampler for RejectionAbc {
    fn name(&self) -> &'static str {
        "rejection"
    }

    fn run<E: Executor>(&self, problem: &AbcProblem, executor: &E, master_seed: u64) -> Result<Population, AbcError> {
        if !(self.epsilon > 0.0) {
            return Err(AbcError::InvalidSettings(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.batch_size == 0 {
            return Err(AbcError::InvalidSettings("batch_size must be at least 1".into()));
        }
        let mut kept = Vec::with_capacity(self.n_accept);
        let mut draws = 0u64;
        let mut recent: VecDeque<(u64, u64)> = VecDeque::new();
        let (mut window_draws, mut window_accepts) = (0u64, 0u64);
        let mut batch_no = 0usize;
        while kept.len() < self.n_accept {
            let tasks: Vec<_> = (draws..draws + self.batch_size as u64)
                .map(|j| {
                    let theta = problem.prior.sample(&mut substream(master_seed, &[stream::PRIOR, j]));
                    (theta, derive_seed(master_seed, &[stream::SIMULATION, 0, j]))
                })
                .collect();
            let scores = problem.score(&tasks, executor, batch_no)?;
            let mut accepted = 0;
            for ((theta, seed), d) in tasks.into_iter().zip(scores) {
                if d < self.epsilon && kept.len() < self.n_accept {
                    kept.push(Particle {
                        theta,
                        weight: 0.0,
                        discrepancy: d,
                        sim_seed: seed,
                    });
                    accepted += 1;
                }
            }
            draws += self.batch_size as u64;
            batch_no += 1;

            recent.push_back((self.batch_size as u64, accepted));
            window_draws += self.batch_size as u64;
            window_accepts += accepted;
            while let Some(&(n, a)) = recent.front() {
                if window_draws - n < self.window {
                    break;
                }
                window_draws -= n;
                window_accepts -= a;
                recent.pop_front();
            }
            if window_draws >= self.window && (window_accepts as f64) < self.min_rate * window_draws as f64 {
                return Err(AbcError::LowAcceptance {
                    draws: window_draws,
                    accepted: window_accepts,
                    min_rate: self.min_rate,
                });
            }
        }
        let mut pop = Population::uniform(kept, self.epsilon, 0);
        if pop.len() >= 2 {
            pop.kernel_cov = adapt_cov(&pop.particles)?;
        }
        pop.history.push(StepStats {
            step: 0,
            epsilon: self.epsilon,
            mean_discrepancy: pop.mean_discrepancy(),
            acceptance_rate: if draws > 0 { pop.len() as f64 / draws as f64 } else { 0.0 },
            simulations: draws as usize,
        });
        Ok(pop)
    }
}

/// Runs [`RejectionAbc`] against an observed series.
pub fn rejection_abc<E: Executor>(
    observed: &DepositionSeries,
    prior: &PriorBox,
    config: &SimulationConfig,
    n_accept: usize,
    epsilon: f64,
    executor: &E,
    master_seed: u64,
) -> Result<Population, AbcError> {
    let sampler = RejectionAbc {
        n_accept,
        epsilon,
        ..RejectionAbc::default()
    };
    sampler.run(&AbcProblem::new(observed, prior, config)?, executor, master_seed)
}
