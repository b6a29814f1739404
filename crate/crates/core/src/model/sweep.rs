use rand::Rng;
use rand_distr::{Distribution, Geometric};

use super::grid::{Site, SubstrateGrid};
use super::rates::StepRates;
use super::{ModelParams, PerSpecies, SimulationConfig};

/// Rounds `x ≥ 0` to an integer with expectation `x`.
fn stochastic_round<R: Rng + ?Sized>(x: f64, rng: &mut R) -> u64 {
    let base = x.floor();
    let extra = rng.random::<f64>() < x - base;
    base as u64 + extra as u64
}

/// One deposition sweep of the boundary-layer particles onto the substrate.
///
/// `layer` holds the boundary-layer content available this step. Every
/// particle lands on a uniformly random cell:
/// - albumin deposits with probability proportional to the cell's free space;
/// - an activated platelet on a free cell adheres with `Q` and seeds a cluster;
/// - a platelet next to a cluster aggregates with `R`;
/// - a platelet on an occupied cell stacks on top with the `p_T` probability.
///
/// Non-activated platelets cannot seed clusters. Returns deposited
/// particles per species; particles that fail stay in the boundary layer.
pub fn deposition_sweep<R: Rng + ?Sized>(
    grid: &mut SubstrateGrid,
    layer: &PerSpecies<f64>,
    params: &ModelParams,
    config: &SimulationConfig,
    rng: &mut R,
) -> PerSpecies<f64> {
    sweep(grid, layer, &StepRates::new(params, config), rng)
}

pub(crate) fn sweep<R: Rng + ?Sized>(
    grid: &mut SubstrateGrid,
    layer: &PerSpecies<f64>,
    rates: &StepRates,
    rng: &mut R,
) -> PerSpecies<f64> {
    let n_cells = grid.len();
    let mut deposited = PerSpecies::default();

    deposited.albumin = grid.expose_albumin(layer.albumin.max(0.0) / n_cells as f64, rates.albumin);

    let base = |site: Site| match site {
        Site::Occupied => rates.on_top,
        Site::Adjacent => rates.aggregation,
        Site::Free => rates.adhesion,
    };

    let ap = stochastic_round(layer.ap.max(0.0), rng);
    for _ in 0..ap {
        let cell = rng.random_range(0..n_cells);
        let rho = grid.albumin_at(cell, rng);
        let p = rates.attenuate(base(grid.site(cell)), rho);
        if rng.random::<f64>() < p {
            grid.deposit_platelet(cell);
            deposited.ap += 1.0;
        }
    }

    // Non-activated platelets only stick on or next to clusters. Thin the
    // landings on such cells by the largest possible per-hit probability
    // and correct with `p / p_max` afterwards.
    let p_max = rates.aggregation.max(rates.on_top).min(1.0);
    let mut remaining = stochastic_round(layer.nap.max(0.0), rng);
    while remaining > 0 && p_max > 0.0 {
        let active = grid.active_cells().len();
        if active == 0 {
            break;
        }
        let p_candidate = active as f64 / n_cells as f64 * p_max;
        let misses = if p_candidate >= 1.0 {
            0
        } else {
            Geometric::new(p_candidate).map(|g| g.sample(rng)).unwrap_or(u64::MAX)
        };
        if misses >= remaining {
            break;
        }
        remaining -= misses + 1;
        let cell = grid.active_cells()[rng.random_range(0..active)] as usize;
        let rho = grid.albumin_at(cell, rng);
        let p = match grid.site(cell) {
            Site::Free => 0.0,
            site => rates.attenuate(base(site), rho),
        };
        if rng.random::<f64>() * p_max < p {
            grid.deposit_platelet(cell);
            deposited.nap += 1.0;
        }
    }
    deposited
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rates::adhesion_prob;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus as TestRng;

    fn params() -> ModelParams {
        ModelParams::new(10.0, 60.0, 2e-3, 0.5, 2.0)
    }

    #[test]
    fn empty_layer_leaves_grid_unchanged() {
        let mut rng = TestRng::seed_from_u64(1);
        let mut g = SubstrateGrid::new(10, 10, 1e5);
        g.deposit_platelet(5);
        let dep = deposition_sweep(&mut g, &PerSpecies::default(), &params(), &SimulationConfig::default(), &mut rng);
        assert_eq!(dep, PerSpecies::default());
        assert_eq!(g.occupied_cells(), 1);
        assert_eq!(g.platelet_stack(5), 1);
    }

    #[test]
    fn zero_rates_never_deposit() {
        let mut rng = TestRng::seed_from_u64(2);
        let mut g = SubstrateGrid::new(10, 10, 1e5);
        g.deposit_platelet(44);
        let zero = ModelParams::new(0.0, 0.0, 0.0, 0.0, 1.0);
        let layer = PerSpecies::new(50.0, 500.0, 1e6);
        for _ in 0..100 {
            let dep = deposition_sweep(&mut g, &layer, &zero, &SimulationConfig::default(), &mut rng);
            assert_eq!(dep, PerSpecies::default());
        }
        g.sync_albumin(&mut rng);
        assert!((0..g.len()).all(|c| g.albumin_density(c) == 0.0));
        assert_eq!(g.platelet_stack(44), 1);
        assert_eq!(g.occupied_cells(), 1);
    }

    #[test]
    fn single_platelet_adhesion_frequency_matches_q() {
        let cfg = SimulationConfig::default();
        let p = ModelParams::new(10.0, 37.0, 2e-3, 0.5, 2.0);
        let q = adhesion_prob(0.0, &p, &cfg);
        let layer = PerSpecies::new(1.0, 0.0, 0.0);
        let mut rng = TestRng::seed_from_u64(11);
        let trials = 100_000;
        let mut hits = 0;
        for _ in 0..trials {
            let mut g = SubstrateGrid::new(1, 1, cfg.rho_max);
            let dep = deposition_sweep(&mut g, &layer, &p, &cfg, &mut rng);
            hits += dep.ap as u64;
        }
        let freq = hits as f64 / trials as f64;
        let tol = 3.0 * (q * (1.0 - q) / trials as f64).sqrt();
        assert!((freq - q).abs() <= tol, "freq {freq}, q {q}, tol {tol}");
    }

    #[test]
    fn non_activated_platelets_cannot_seed() {
        let mut rng = TestRng::seed_from_u64(5);
        let mut g = SubstrateGrid::new(8, 8, 1e5);
        let layer = PerSpecies::new(0.0, 1000.0, 0.0);
        let big = ModelParams::new(100.0, 100.0, 100.0, 0.0, 0.0);
        for _ in 0..20 {
            let dep = deposition_sweep(&mut g, &layer, &big, &SimulationConfig::default(), &mut rng);
            assert_eq!(dep.nap, 0.0);
        }
        assert_eq!(g.occupied_cells(), 0);
    }

    #[test]
    fn aggregation_grows_existing_cluster() {
        let mut rng = TestRng::seed_from_u64(6);
        let mut g = SubstrateGrid::new(8, 8, 1e5);
        g.deposit_platelet(g.index(4, 4));
        let layer = PerSpecies::new(0.0, 200.0, 0.0);
        let p = ModelParams::new(100.0, 0.0, 0.0, 0.0, 0.0);
        let dep = deposition_sweep(&mut g, &layer, &p, &SimulationConfig::default(), &mut rng);
        assert!(dep.nap > 0.0);
        assert_eq!(g.cluster_count(), 1);
        assert_eq!(g.occupied_cells(), 1 + dep.nap as usize);
    }
}
