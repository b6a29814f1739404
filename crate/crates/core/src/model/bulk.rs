//! Vertical transport in the bulk and exchange with the boundary layer.
//!
//! The bulk is a continuum: one density profile per species on `n_z`
//! cells, index 0 adjacent to the substrate. The boundary layer holds a
//! (real-valued) particle count per species for the whole simulated patch.
//! The two are coupled by a diffusive flux through the face between the
//! lowest bulk cell and the layer, so particles that fail to deposit
//! diffuse back into the bulk through the same face.

use std::ops::{Index, IndexMut};

use super::{Geometry, ModelError, SimulationConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    /// Pre-activated platelets.
    Ap,
    /// Non-activated platelets.
    Nap,
    Albumin,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Ap, Species::Nap, Species::Albumin];

    pub fn name(self) -> &'static str {
        match self {
            Species::Ap => "AP",
            Species::Nap => "NAP",
            Species::Albumin => "albumin",
        }
    }
}

/// One value per species.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PerSpecies<T> {
    pub ap: T,
    pub nap: T,
    pub albumin: T,
}

impl<T> PerSpecies<T> {
    pub fn new(ap: T, nap: T, albumin: T) -> Self {
        Self { ap, nap, albumin }
    }

    pub fn map<U>(&self, mut f: impl FnMut(Species, &T) -> U) -> PerSpecies<U> {
        PerSpecies {
            ap: f(Species::Ap, &self.ap),
            nap: f(Species::Nap, &self.nap),
            albumin: f(Species::Albumin, &self.albumin),
        }
    }
}

impl<T> Index<Species> for PerSpecies<T> {
    type Output = T;
    fn index(&self, s: Species) -> &T {
        match s {
            Species::Ap => &self.ap,
            Species::Nap => &self.nap,
            Species::Albumin => &self.albumin,
        }
    }
}

impl<T> IndexMut<Species> for PerSpecies<T> {
    fn index_mut(&mut self, s: Species) -> &mut T {
        match s {
            Species::Ap => &mut self.ap,
            Species::Nap => &mut self.nap,
            Species::Albumin => &mut self.albumin,
        }
    }
}

/// Bulk density profiles and boundary-layer particle counts.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkState {
    /// Densities (particles/μℓ) over the `n_z` bulk cells, bottom first.
    pub density: PerSpecies<Vec<f64>>,
    /// Particles in the boundary layer over the simulated patch.
    pub boundary: PerSpecies<f64>,
}

impl BulkState {
    /// Uniform initial suspension, boundary layer at the bulk density.
    pub fn initial(config: &SimulationConfig, geom: &Geometry) -> Self {
        let init = PerSpecies::new(config.init_ap, config.init_nap, config.init_albumin);
        Self {
            density: init.map(|_, &c| vec![c; geom.n_z]),
            boundary: init.map(|_, &c| c * geom.layer_volume()),
        }
    }

    /// Particles of `species` in the bulk column.
    pub fn bulk_total(&self, species: Species, geom: &Geometry) -> f64 {
        self.density[species].iter().sum::<f64>() * geom.cell_volume()
    }

    /// Particles of `species` in suspension, bulk plus boundary layer.
    pub fn suspended(&self, species: Species, geom: &Geometry) -> f64 {
        self.bulk_total(species, geom) + self.boundary[species]
    }

    /// Boundary-layer density implied by its particle count.
    pub fn layer_density(&self, species: Species, geom: &Geometry) -> f64 {
        self.boundary[species] / geom.layer_volume()
    }
}

/// One explicit (FTCS) step of `∂t ρ = D ∂²z ρ` in flux form.
///
/// The top face is sealed. `bottom_outflow` is the density removed from
/// cell 0 through the bottom face during the step; zero seals the bottom.
pub fn ftcs_step(profile: &mut [f64], lambda: f64, bottom_outflow: f64) {
    let n = profile.len();
    debug_assert!(n >= 2);
    let mut prev = profile[0];
    profile[0] += lambda * (profile[1] - prev) - bottom_outflow;
    for i in 1..n - 1 {
        let cur = profile[i];
        profile[i] += lambda * (prev - 2.0 * cur + profile[i + 1]);
        prev = cur;
    }
    let cur = profile[n - 1];
    profile[n - 1] += lambda * (prev - cur);
}

/// Advances the bulk profiles by one time step.
///
/// Returns the number of particles per species that crossed into the
/// boundary layer during the step, `−J(0,t)·A·dt`; negative values are
/// particles re-injected into the bulk. The boundary-layer counts are not
/// touched here, see [`boundary_exchange`].
pub fn diffusion_step(state: &mut BulkState, geom: &Geometry) -> PerSpecies<f64> {
    let mut influx = PerSpecies::default();
    for s in Species::ALL {
        let rho_layer = state.layer_density(s, geom);
        let profile = &mut state.density[s];
        // Downward flux density through the bottom face (particles/mm²/s).
        let flux = geom.diffusion * (profile[0] - rho_layer) / geom.gap;
        ftcs_step(profile, geom.lambda, flux * geom.dt / geom.dz);
        influx[s] = flux * geom.area * geom.dt;
    }
    influx
}

/// Applies one step of boundary-layer bookkeeping: `N += influx − deposited`.
///
/// A deposited platelet may have been only partly inside the layer (the
/// layer count is real-valued while platelets are discrete); the missing
/// fraction is taken from the bulk, lowest cells first.
pub fn boundary_exchange(
    state: &mut BulkState,
    influx: PerSpecies<f64>,
    deposited: PerSpecies<f64>,
    geom: &Geometry,
) -> Result<(), ModelError> {
    for s in Species::ALL {
        let available = state.boundary[s] + influx[s];
        if deposited[s] < 0.0 || deposited[s] > available.max(0.0).ceil() {
            return Err(ModelError::Invariant {
                step: None,
                species: s,
                what: format!(
                    "deposited {} exceeds boundary-layer content {available}",
                    deposited[s]
                ),
            });
        }
        let mut next = available - deposited[s];
        if next < 0.0 {
            let cell_volume = geom.cell_volume();
            for rho in state.density[s].iter_mut() {
                let content = *rho * cell_volume;
                if content <= -next {
                    next += content;
                    *rho = 0.0;
                } else {
                    *rho = (*rho + next / cell_volume).max(0.0);
                    next = 0.0;
                    break;
                }
            }
            if next < -1e-9 {
                return Err(ModelError::Invariant {
                    step: None,
                    species: s,
                    what: format!("negative boundary-layer count {next}"),
                });
            }
            next = next.max(0.0);
        }
        state.boundary[s] = next;
    }
    Ok(())
}
