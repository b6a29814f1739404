use rand::Rng;
use serde::{Deserialize, Serialize};

use super::AbcError;
use crate::model::{ModelParams, N_PARAMS};

/// Independent uniform priors, bounds in `(p_Ag, p_Ad, p_T, p_F, a_T)` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorBox {
    pub lower: [f64; N_PARAMS],
    pub upper: [f64; N_PARAMS],
}

impl Default for PriorBox {
    fn default() -> Self {
        Self {
            lower: [5.0, 50.0, 0.5e-3, 0.1, 0.0],
            upper: [20.0, 150.0, 3e-3, 1.5, 10.0],
        }
    }
}

impl PriorBox {
    pub fn new(lower: [f64; N_PARAMS], upper: [f64; N_PARAMS]) -> Result<Self, AbcError> {
        let b = Self { lower, upper };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), AbcError> {
        for dim in 0..N_PARAMS {
            let (lower, upper) = (self.lower[dim], self.upper[dim]);
            if !(lower < upper) || !lower.is_finite() || !upper.is_finite() || lower < 0.0 {
                return Err(AbcError::InvalidPrior { dim, lower, upper });
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &ModelParams) -> bool {
        self.contains_array(&theta.to_array())
    }

    pub(crate) fn contains_array(&self, v: &[f64; N_PARAMS]) -> bool {
        (0..N_PARAMS).all(|i| v[i] >= self.lower[i] && v[i] <= self.upper[i])
    }

    pub fn mean(&self) -> [f64; N_PARAMS] {
        std::array::from_fn(|i| 0.5 * (self.lower[i] + self.upper[i]))
    }

    pub fn width(&self) -> [f64; N_PARAMS] {
        std::array::from_fn(|i| self.upper[i] - self.lower[i])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ModelParams {
        ModelParams::from_array(std::array::from_fn(|i| {
            self.lower[i] + (self.upper[i] - self.lower[i]) * rng.random::<f64>()
        }))
    }
}

/// `n` independent draws from the prior.
pub fn sample_prior<R: Rng + ?Sized>(prior: &PriorBox, n: usize, rng: &mut R) -> Vec<ModelParams> {
    (0..n).map(|_| prior.sample(rng)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn rejects_inverted_bounds() {
        let mut up = PriorBox::default().upper;
        up[3] = 0.05;
        assert!(matches!(
            PriorBox::new(PriorBox::default().lower, up),
            Err(AbcError::InvalidPrior { dim: 3, .. })
        ));
    }

    #[test]
    fn draws_stay_in_box() {
        let prior = PriorBox::default();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        assert!(sample_prior(&prior, 10_000, &mut rng).iter().all(|t| prior.contains(t)));
    }

    #[test]
    fn degenerate_width_draws_the_bound() {
        let mut lower = PriorBox::default().lower;
        let mut upper = PriorBox::default().upper;
        lower[0] = 7.0;
        upper[0] = 7.0 + 1e-15;
        let prior = PriorBox::new(lower, upper).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
        for t in sample_prior(&prior, 1000, &mut rng) {
            assert!((t.p_ag - 7.0).abs() <= 1e-14);
        }
    }

    #[test]
    fn marginal_means_within_three_standard_errors() {
        let prior = PriorBox::default();
        let n = 100_000;
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
        let draws = sample_prior(&prior, n, &mut rng);
        for i in 0..N_PARAMS {
            let mean = draws.iter().map(|t| t.to_array()[i]).sum::<f64>() / n as f64;
            let se = prior.width()[i] / 12f64.sqrt() / (n as f64).sqrt();
            assert!((mean - prior.mean()[i]).abs() < 3.0 * se, "dim {i}: {mean}");
        }
    }
}
