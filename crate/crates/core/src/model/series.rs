use serde::{Deserialize, Serialize};

/// Names of the four observables, in column order.
pub const VARIABLE_NAMES: [&str; 4] = ["S_agg", "N_agg", "N_plt", "N_act"];

/// The four observables at the observation times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepositionSeries {
    /// Observation times (s).
    pub times: Vec<f64>,
    /// Mean cluster footprint (μm²).
    pub s_agg: Vec<f64>,
    /// Clusters per mm².
    pub n_agg: Vec<f64>,
    /// Non-activated platelets per μℓ in suspension.
    pub n_plt: Vec<f64>,
    /// Pre-activated platelets per μℓ in suspension.
    pub n_act: Vec<f64>,
}

impl DepositionSeries {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            s_agg: Vec::with_capacity(n),
            n_agg: Vec::with_capacity(n),
            n_plt: Vec::with_capacity(n),
            n_act: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: f64, row: [f64; 4]) {
        self.times.push(t);
        self.s_agg.push(row[0]);
        self.n_agg.push(row[1]);
        self.n_plt.push(row[2]);
        self.n_act.push(row[3]);
    }

    /// The four variables, in [`VARIABLE_NAMES`] order.
    pub fn variables(&self) -> [&[f64]; 4] {
        [&self.s_agg, &self.n_agg, &self.n_plt, &self.n_act]
    }

    pub fn row(&self, i: usize) -> [f64; 4] {
        [self.s_agg[i], self.n_agg[i], self.n_plt[i], self.n_act[i]]
    }
}
