use serde::{Deserialize, Serialize};

use super::ModelError;

/// Physical and numerical setup of a forward simulation.
///
/// Lengths are in mm, densities in particles per μℓ (= per mm³), the cell
/// area in μm². The bulk column sits above a thin boundary layer which in
/// turn sits on the deposition substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Shear-induced diffusion coefficient (mm²/s).
    pub diffusion: f64,
    /// Height of the fluid column above the boundary layer (mm).
    pub layer_height: f64,
    /// Number of vertical grid cells of the bulk column.
    pub n_z: usize,
    /// Boundary-layer thickness (mm).
    pub boundary_layer_thickness: f64,
    /// Time step (s).
    pub dt: f64,
    pub substrate_rows: usize,
    pub substrate_cols: usize,
    /// Area of one deposition cell (μm²).
    pub cell_area: f64,
    /// Maximum number of albumin particles in one cell.
    pub rho_max: f64,
    /// Observation times (s), strictly increasing and starting at 0.
    pub obs_times: Vec<f64>,
    /// Non-activated platelets per μℓ at t = 0.
    pub init_nap: f64,
    /// Pre-activated platelets per μℓ at t = 0.
    pub init_ap: f64,
    /// Albumin per μℓ at t = 0.
    pub init_albumin: f64,
    pub seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            diffusion: 1.0e-3,
            layer_height: 0.82,
            n_z: 100,
            boundary_layer_thickness: 0.005,
            dt: 0.01,
            substrate_rows: 200,
            substrate_cols: 200,
            cell_area: 5.0,
            rho_max: 100_000.0,
            obs_times: vec![0.0, 20.0, 60.0, 120.0, 300.0],
            init_nap: 200_000.0,
            init_ap: 5_000.0,
            init_albumin: 1.0e11,
            seed: 0,
        }
    }
}

impl SimulationConfig {
    /// Checks every numeric constraint and derives the discretization.
    pub fn geometry(&self) -> Result<Geometry, ModelError> {
        let bad = |field: &'static str, reason: String| ModelError::InvalidConfig { field, reason };
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(field, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("dt", self.dt)?;
        positive("diffusion", self.diffusion)?;
        positive("layer_height", self.layer_height)?;
        positive("boundary_layer_thickness", self.boundary_layer_thickness)?;
        positive("cell_area", self.cell_area)?;
        positive("rho_max", self.rho_max)?;
        if self.n_z < 2 {
            return Err(bad("n_z", format!("must be >= 2, got {}", self.n_z)));
        }
        if self.substrate_rows == 0 || self.substrate_cols == 0 {
            return Err(bad("substrate", "dimensions must be nonzero".into()));
        }
        if self.substrate_rows.checked_mul(self.substrate_cols).is_none_or(|n| n > u32::MAX as usize) {
            return Err(bad("substrate", "too many cells".into()));
        }
        for (field, v) in [
            ("init_nap", self.init_nap),
            ("init_ap", self.init_ap),
            ("init_albumin", self.init_albumin),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(bad(field, format!("must be finite and >= 0, got {v}")));
            }
        }

        let obs_steps = self.obs_steps()?;

        let dz = self.layer_height / self.n_z as f64;
        let delta = self.boundary_layer_thickness;
        let gap = 0.5 * (dz + delta);
        let lambda = self.diffusion * self.dt / (dz * dz);
        let bottom = self.diffusion * self.dt / (dz * gap);
        let layer = self.diffusion * self.dt / (delta * gap);
        if lambda > 0.5 {
            return Err(bad(
                "diffusion",
                format!("explicit scheme unstable: D*dt/dz^2 = {lambda} > 1/2"),
            ));
        }
        if lambda + bottom > 1.0 || layer > 1.0 {
            return Err(bad(
                "boundary_layer_thickness",
                format!(
                    "boundary coupling unstable: bulk factor {} and layer factor {layer} must be <= 1",
                    lambda + bottom
                ),
            ));
        }

        let n_cells = self.substrate_rows * self.substrate_cols;
        let area = n_cells as f64 * self.cell_area * 1.0e-6;
        Ok(Geometry {
            dz,
            dt: self.dt,
            diffusion: self.diffusion,
            layer_thickness: delta,
            gap,
            lambda,
            area,
            volume: area * (self.layer_height + delta),
            n_cells,
            rows: self.substrate_rows,
            cols: self.substrate_cols,
            n_z: self.n_z,
            obs_steps,
        })
    }

    /// Observation times converted to step indices.
    pub fn obs_steps(&self) -> Result<Vec<u64>, ModelError> {
        let bad = |reason: String| ModelError::InvalidConfig {
            field: "obs_times",
            reason,
        };
        if self.obs_times.is_empty() {
            return Err(bad("at least one observation time is required".into()));
        }
        if self.obs_times[0] != 0.0 {
            return Err(bad(format!("must start at 0, got {}", self.obs_times[0])));
        }
        let mut steps = Vec::with_capacity(self.obs_times.len());
        for (i, &t) in self.obs_times.iter().enumerate() {
            if !t.is_finite() {
                return Err(bad(format!("time {i} is not finite")));
            }
            if i > 0 && t <= self.obs_times[i - 1] {
                return Err(bad(format!("not strictly increasing at index {i}")));
            }
            let k = t / self.dt;
            let r = k.round();
            if (k - r).abs() > 1e-6 * r.max(1.0) {
                return Err(bad(format!("time {t} is not a multiple of dt = {}", self.dt)));
            }
            steps.push(r as u64);
        }
        Ok(steps)
    }
}

/// Discretization derived from a validated [`SimulationConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Bulk cell height (mm).
    pub dz: f64,
    pub dt: f64,
    pub diffusion: f64,
    /// Boundary-layer thickness (mm).
    pub layer_thickness: f64,
    /// Distance between the centres of the lowest bulk cell and the boundary layer (mm).
    pub gap: f64,
    /// `D dt / dz²`.
    pub lambda: f64,
    /// Simulated substrate area (mm²).
    pub area: f64,
    /// Suspension volume, bulk plus boundary layer (μℓ).
    pub volume: f64,
    pub n_cells: usize,
    pub rows: usize,
    pub cols: usize,
    pub n_z: usize,
    pub obs_steps: Vec<u64>,
}

impl Geometry {
    /// Particles carried by one unit of bulk density in one bulk cell.
    pub fn cell_volume(&self) -> f64 {
        self.dz * self.area
    }

    /// Boundary-layer volume (μℓ).
    pub fn layer_volume(&self) -> f64 {
        self.layer_thickness * self.area
    }
}
