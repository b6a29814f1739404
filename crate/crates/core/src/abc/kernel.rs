//! Truncated multivariate Gaussian perturbation kernel.

use nalgebra::{SMatrix, SVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::{AbcError, Particle, PriorBox};
use crate::model::{ModelParams, N_PARAMS};

pub type Cov5 = SMatrix<f64, N_PARAMS, N_PARAMS>;
type Vec5 = SVector<f64, N_PARAMS>;

/// Consecutive out-of-box proposals tolerated before giving up.
pub const MAX_KERNEL_REJECTIONS: u64 = 1_000_000;

/// Relative size of the ridge added to adapted covariances.
const RIDGE: f64 = 1e-10;

/// A Gaussian kernel with a precomputed square-root factor.
#[derive(Debug, Clone)]
pub struct Kernel {
    factor: Cov5,
}

impl Kernel {
    pub fn new(cov: &Cov5) -> Result<Self, AbcError> {
        if cov.iter().any(|v| !v.is_finite()) {
            return Err(AbcError::NotPsd(f64::NAN));
        }
        let sym = (cov + cov.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let scale = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let min = eig.eigenvalues.min();
        if min < -1e-9 * scale {
            return Err(AbcError::NotPsd(min));
        }
        let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
        Ok(Self {
            factor: eig.eigenvectors * Cov5::from_diagonal(&roots),
        })
    }

    /// Draws from `N(theta, cov)` until the proposal falls inside the box.
    pub fn perturb<R: Rng + ?Sized>(
        &self,
        theta: &ModelParams,
        prior: &PriorBox,
        rng: &mut R,
    ) -> Result<ModelParams, AbcError> {
        let centre = Vec5::from(theta.to_array());
        for _ in 0..MAX_KERNEL_REJECTIONS {
            let z = Vec5::from_fn(|_, _| rng.sample(StandardNormal));
            let x = centre + self.factor * z;
            let v: [f64; N_PARAMS] = x.into();
            if prior.contains_array(&v) {
                return Ok(ModelParams::from_array(v));
            }
        }
        Err(AbcError::KernelRejections(MAX_KERNEL_REJECTIONS))
    }
}

/// One truncated Gaussian perturbation of `theta`.
pub fn perturb<R: Rng + ?Sized>(
    theta: &ModelParams,
    cov: &Cov5,
    prior: &PriorBox,
    rng: &mut R,
) -> Result<ModelParams, AbcError> {
    Kernel::new(cov)?.perturb(theta, prior, rng)
}

/// Weighted mean and covariance `Σ wᵢ (xᵢ − m)(xᵢ − m)ᵀ / Σ wᵢ`.
pub fn weighted_covariance(points: &[[f64; N_PARAMS]], weights: &[f64]) -> Result<([f64; N_PARAMS], Cov5), AbcError> {
    assert_eq!(points.len(), weights.len());
    if points.is_empty() {
        return Err(AbcError::EmptyPopulation);
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(AbcError::ZeroWeight);
    }
    let mut mean = Vec5::zeros();
    for (p, w) in points.iter().zip(weights) {
        mean += Vec5::from(*p) * (*w / total);
    }
    let mut cov = Cov5::zeros();
    for (p, w) in points.iter().zip(weights) {
        let d = Vec5::from(*p) - mean;
        cov += d * d.transpose() * (*w / total);
    }
    Ok((mean.into(), cov))
}

/// Weighted particle covariance plus a ridge `λI`.
///
/// `λ = 1e-10 · tr(C)/5`; when the particles coincide (`tr(C) = 0`) the
/// scale is the mean squared coordinate instead, and 1 if that is zero too.
pub fn adapt_cov(particles: &[Particle]) -> Result<Cov5, AbcError> {
    if particles.len() < 2 {
        return Err(AbcError::InvalidSettings("covariance needs at least 2 particles".into()));
    }
    let points: Vec<_> = particles.iter().map(|p| p.theta.to_array()).collect();
    let weights: Vec<_> = particles.iter().map(|p| p.weight).collect();
    let (mean, cov) = weighted_covariance(&points, &weights)?;
    let mut scale = cov.trace() / N_PARAMS as f64;
    if !(scale > 0.0) {
        scale = mean.iter().map(|m| m * m).sum::<f64>() / N_PARAMS as f64;
    }
    if !(scale > 0.0) {
        scale = 1.0;
    }
    Ok(cov + Cov5::identity() * (RIDGE * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn particle(v: [f64; 5], w: f64) -> Particle {
        Particle {
            theta: ModelParams::from_array(v),
            weight: w,
            discrepancy: 0.0,
            sim_seed: 0,
        }
    }

    #[test]
    fn zero_covariance_returns_theta() {
        let prior = PriorBox::default();
        let theta = ModelParams::new(10.0, 80.0, 1e-3, 0.5, 3.0);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
        assert_eq!(perturb(&theta, &Cov5::zeros(), &prior, &mut rng).unwrap(), theta);
    }

    #[test]
    fn proposals_stay_in_box() {
        let prior = PriorBox::default();
        let theta = ModelParams::new(5.5, 148.0, 2.9e-3, 0.12, 0.1);
        let w = prior.width();
        let cov = Cov5::from_diagonal(&Vec5::from_fn(|i, _| (0.3 * w[i]).powi(2)));
        let k = Kernel::new(&cov).unwrap();
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
        for _ in 0..100_000 {
            assert!(prior.contains(&k.perturb(&theta, &prior, &mut rng).unwrap()));
        }
    }

    #[test]
    fn impossible_truncation_errors() {
        let prior = PriorBox::default();
        let outside = ModelParams::new(100.0, 80.0, 1e-3, 0.5, 3.0);
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
        let err = perturb(&outside, &Cov5::zeros(), &prior, &mut rng).unwrap_err();
        assert_eq!(err, AbcError::KernelRejections(MAX_KERNEL_REJECTIONS));
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let mut cov = Cov5::identity();
        cov[(2, 2)] = -1.0;
        assert!(matches!(Kernel::new(&cov), Err(AbcError::NotPsd(_))));
    }

    #[test]
    fn identical_particles_give_ridge_only() {
        let v = [10.0, 100.0, 1e-3, 0.5, 5.0];
        let ps = vec![particle(v, 0.5), particle(v, 0.5)];
        let cov = adapt_cov(&ps).unwrap();
        let scale = v.iter().map(|x| x * x).sum::<f64>() / 5.0;
        assert!((cov - Cov5::identity() * (1e-10 * scale)).abs().max() < 1e-20);
    }

    #[test]
    fn two_particles_differing_in_one_dimension() {
        let a = [10.0, 100.0, 1e-3, 0.5, 5.0];
        let mut b = a;
        b[0] = 12.0;
        let cov = adapt_cov(&[particle(a, 1.0), particle(b, 1.0)]).unwrap();
        let ridge = 1e-10 * 1.0 / 5.0;
        assert!((cov[(0, 0)] - (1.0 + ridge)).abs() < 1e-15);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(cov[(i, j)], 0.0);
                }
            }
            if i > 0 {
                assert!((cov[(i, i)] - ridge).abs() < 1e-22);
            }
        }
    }

    #[test]
    fn zero_weights_error() {
        let v = [10.0, 100.0, 1e-3, 0.5, 5.0];
        assert_eq!(adapt_cov(&[particle(v, 0.0), particle(v, 0.0)]), Err(AbcError::ZeroWeight));
    }
}
