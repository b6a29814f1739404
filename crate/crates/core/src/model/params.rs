use serde::{Deserialize, Serialize};

use super::ModelError;

/// Number of inferred model parameters.
pub const N_PARAMS: usize = 5;

/// Column names of the parameters, in canonical order.
pub const PARAM_NAMES: [&str; N_PARAMS] = ["p_Ag", "p_Ad", "p_T", "p_F", "a_T"];

/// The five deposition rates driving the substrate dynamics.
///
/// Canonical ordering everywhere in this crate is `(p_Ag, p_Ad, p_T, p_F, a_T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Aggregation rate next to an existing cluster (1/s).
    #[serde(rename = "p_Ag")]
    pub p_ag: f64,
    /// Adhesion rate of activated platelets on platelet-free cells (1/s).
    #[serde(rename = "p_Ad")]
    pub p_ad: f64,
    /// Deposition rate on top of an existing cluster (1/s).
    #[serde(rename = "p_T")]
    pub p_t: f64,
    /// Albumin deposition rate per unit of normalized free space (1/s).
    #[serde(rename = "p_F")]
    pub p_f: f64,
    /// Albumin attenuation factor (dimensionless).
    #[serde(rename = "a_T")]
    pub a_t: f64,
}

impl ModelParams {
    pub fn new(p_ag: f64, p_ad: f64, p_t: f64, p_f: f64, a_t: f64) -> Self {
        Self {
            p_ag,
            p_ad,
            p_t,
            p_f,
            a_t,
        }
    }

    pub fn from_array(v: [f64; N_PARAMS]) -> Self {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn to_array(&self) -> [f64; N_PARAMS] {
        [self.p_ag, self.p_ad, self.p_t, self.p_f, self.a_t]
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        for (name, v) in PARAM_NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() || v < 0.0 {
                return Err(ModelError::InvalidParameter {
                    name,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

impl From<[f64; N_PARAMS]> for ModelParams {
    fn from(v: [f64; N_PARAMS]) -> Self {
        Self::from_array(v)
    }
}
