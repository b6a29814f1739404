//! Per-hit deposition probabilities.
//!
//! Every rate is turned into a probability for one hit during one time
//! step as `rate × dt`, clamped to `[0, 1]`. Albumin density enters in
//! normalized form `ρ̂ = ρ_al / ρ_max ∈ [0, 1]`.

use super::{ModelParams, SimulationConfig};

fn clamp_prob(p: f64) -> f64 {
    p.clamp(0.0, 1.0)
}

/// Albumin deposition, proportional to the free space left in the cell.
pub fn albumin_deposit_prob(rho_al: f64, params: &ModelParams, config: &SimulationConfig) -> f64 {
    clamp_prob(params.p_f * (1.0 - rho_al / config.rho_max) * config.dt)
}

/// Adhesion of an activated platelet on a platelet-free cell.
pub fn adhesion_prob(rho_al: f64, params: &ModelParams, config: &SimulationConfig) -> f64 {
    attenuated(params.p_ad, rho_al, params, config)
}

/// Aggregation next to an existing cluster.
pub fn aggregation_prob(rho_al: f64, params: &ModelParams, config: &SimulationConfig) -> f64 {
    attenuated(params.p_ag, rho_al, params, config)
}

/// Deposition on top of an already occupied cell.
pub fn on_top_prob(rho_al: f64, params: &ModelParams, config: &SimulationConfig) -> f64 {
    attenuated(params.p_t, rho_al, params, config)
}

fn attenuated(rate: f64, rho_al: f64, params: &ModelParams, config: &SimulationConfig) -> f64 {
    clamp_prob(rate * (-params.a_t * rho_al / config.rho_max).exp() * config.dt)
}

/// Rates pre-multiplied by `dt`, for the inner loop of the sweep.
#[derive(Debug, Clone, Copy)]
pub(crate) struct StepRates {
    pub adhesion: f64,
    pub aggregation: f64,
    pub on_top: f64,
    pub albumin: f64,
    pub attenuation: f64,
    pub rho_max: f64,
}

impl StepRates {
    pub fn new(params: &ModelParams, config: &SimulationConfig) -> Self {
        Self {
            adhesion: params.p_ad * config.dt,
            aggregation: params.p_ag * config.dt,
            on_top: params.p_t * config.dt,
            albumin: params.p_f * config.dt,
            attenuation: params.a_t,
            rho_max: config.rho_max,
        }
    }

    #[inline]
    pub fn attenuate(&self, base: f64, rho_al: f64) -> f64 {
        clamp_prob(base * (-self.attenuation * rho_al / self.rho_max).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (ModelParams, SimulationConfig) {
        (ModelParams::new(12.0, 80.0, 2e-3, 0.7, 3.0), SimulationConfig::default())
    }

    #[test]
    fn saturated_cell_takes_no_albumin() {
        let (p, c) = setup();
        assert_eq!(albumin_deposit_prob(c.rho_max, &p, &c), 0.0);
        let p0 = ModelParams { p_f: 0.0, ..p };
        for rho in [0.0, 10.0, 5e4, c.rho_max] {
            assert_eq!(albumin_deposit_prob(rho, &p0, &c), 0.0);
        }
    }

    #[test]
    fn albumin_probability_is_linear_in_free_space() {
        let (p, c) = setup();
        let full = albumin_deposit_prob(0.0, &p, &c);
        let half = albumin_deposit_prob(c.rho_max / 2.0, &p, &c);
        assert!((half - full / 2.0).abs() < 1e-15);
    }

    #[test]
    fn no_attenuation_means_constant_probabilities() {
        let (p, c) = setup();
        let p = ModelParams { a_t: 0.0, ..p };
        for rho in [0.0, 1.0, 1e3, 1e5] {
            assert_eq!(adhesion_prob(rho, &p, &c), adhesion_prob(0.0, &p, &c));
            assert!((aggregation_prob(rho, &p, &c) - p.p_ag * c.dt).abs() < 1e-15);
        }
    }

    #[test]
    fn adhesion_at_zero_albumin_is_rate_times_dt() {
        let (p, c) = setup();
        assert!((adhesion_prob(0.0, &p, &c) - 0.8).abs() < 1e-15);
        let big = ModelParams { p_ad: 150.0, ..p };
        assert_eq!(adhesion_prob(0.0, &big, &c), 1.0);
    }

    #[test]
    fn log_adhesion_slope_is_minus_attenuation() {
        let (p, c) = setup();
        // Least-squares slope of ln Q against normalized albumin density.
        let xs: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| adhesion_prob(x * c.rho_max, &p, &c).ln())
            .collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        assert!((sxy / sxx + p.a_t).abs() < 1e-10);
    }

    #[test]
    fn aggregation_to_adhesion_ratio_is_rate_ratio() {
        let (p, c) = setup();
        for i in 0..50 {
            let rho = i as f64 * c.rho_max / 49.0;
            let ratio = aggregation_prob(rho, &p, &c) / adhesion_prob(rho, &p, &c);
            assert!((ratio - p.p_ag / p.p_ad).abs() < 1e-12);
        }
        let zero = ModelParams { p_ag: 0.0, ..p };
        assert_eq!(aggregation_prob(0.0, &zero, &c), 0.0);
    }
}
