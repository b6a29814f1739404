use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::seeds::derive_seed;

use super::bulk::{boundary_exchange, diffusion_step, BulkState, PerSpecies, Species};
use super::grid::{cluster_census, SubstrateGrid};
use super::rates::StepRates;
use super::sweep::sweep;
use super::{DepositionSeries, Geometry, ModelError, ModelParams, SimulationConfig};

/// Relative tolerance of the per-species particle ledger.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// A validated forward model, reusable across many parameter values.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimulationConfig,
    geom: Geometry,
}

/// Full end state of a run.
#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub series: DepositionSeries,
    pub grid: SubstrateGrid,
    pub state: BulkState,
    /// Particles deposited per species over the run.
    pub deposited: PerSpecies<f64>,
}

impl Simulator {
    pub fn new(config: SimulationConfig) -> Result<Self, ModelError> {
        let geom = config.geometry()?;
        Ok(Self { config, geom })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    /// Runs the model with the given simulation seed.
    pub fn run(&self, params: &ModelParams, seed: u64) -> Result<DepositionSeries, ModelError> {
        self.run_full(params, seed).map(|o| o.series)
    }

    pub fn run_full(&self, params: &ModelParams, seed: u64) -> Result<SimulationOutcome, ModelError> {
        params.validate()?;
        let geom = &self.geom;
        let cfg = &self.config;
        let rates = StepRates::new(params, cfg);
        let mut state = BulkState::initial(cfg, geom);
        let mut grid = SubstrateGrid::new(geom.rows, geom.cols, cfg.rho_max);
        let mut deposited = PerSpecies::<f64>::default();
        let initial = PerSpecies::new(
            state.suspended(Species::Ap, geom),
            state.suspended(Species::Nap, geom),
            state.suspended(Species::Albumin, geom),
        );

        let mut series = DepositionSeries::with_capacity(geom.obs_steps.len());
        let mut obs = geom.obs_steps.iter().copied().zip(cfg.obs_times.iter().copied()).peekable();
        let record = |series: &mut DepositionSeries, t: f64, grid: &SubstrateGrid, state: &BulkState| {
            let census = cluster_census(grid, cfg.cell_area);
            series.push(
                t,
                [
                    census.mean_area,
                    census.count as f64 / geom.area,
                    state.suspended(Species::Nap, geom) / geom.volume,
                    state.suspended(Species::Ap, geom) / geom.volume,
                ],
            );
        };
        if let Some((0, t)) = obs.peek().copied() {
            record(&mut series, t, &grid, &state);
            obs.next();
        }

        let last = geom.obs_steps.last().copied().unwrap_or(0);
        for step in 1..=last {
            // Counter-based substream per step.
            let mut rng = Xoshiro256PlusPlus::seed_from_u64(derive_seed(seed, &[step]));

            let influx = diffusion_step(&mut state, geom);
            // A platelet can only land if a whole one is left in suspension.
            let layer = Species::ALL.map(|s| {
                let whole = (state.suspended(s, geom) + influx[s]).floor();
                (state.boundary[s] + influx[s]).min(whole)
            });
            let layer = PerSpecies::new(layer[0], layer[1], layer[2]);
            let dep = sweep(&mut grid, &layer, &rates, &mut rng);
            boundary_exchange(&mut state, influx, dep, geom).map_err(|e| e.at_step(step))?;
            deposited.ap += dep.ap;
            deposited.nap += dep.nap;
            deposited.albumin += dep.albumin;

            if let Some(&(k, t)) = obs.peek() {
                if k == step {
                    check_ledger(&state, geom, &initial, &deposited, step)?;
                    record(&mut series, t, &grid, &state);
                    obs.next();
                }
            }
        }
        Ok(SimulationOutcome {
            series,
            grid,
            state,
            deposited,
        })
    }
}

fn check_ledger(
    state: &BulkState,
    geom: &Geometry,
    initial: &PerSpecies<f64>,
    deposited: &PerSpecies<f64>,
    step: u64,
) -> Result<(), ModelError> {
    for s in Species::ALL {
        if state.density[s].iter().any(|&v| !(v >= 0.0)) || !(state.boundary[s] >= 0.0) {
            return Err(ModelError::Invariant {
                step: Some(step),
                species: s,
                what: "negative or non-finite density".into(),
            });
        }
        let now = state.suspended(s, geom) + deposited[s];
        let scale = initial[s].max(1.0);
        if ((now - initial[s]) / scale).abs() > MASS_TOLERANCE {
            return Err(ModelError::Invariant {
                step: Some(step),
                species: s,
                what: format!("particle ledger drift: {} -> {now}", initial[s]),
            });
        }
    }
    Ok(())
}

/// Runs the model with `config.seed`.
pub fn simulate(params: &ModelParams, config: &SimulationConfig) -> Result<DepositionSeries, ModelError> {
    Simulator::new(config.clone())?.run(params, config.seed)
}
