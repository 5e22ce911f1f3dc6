//! Gaussian-process regression over a discrete, normalized parameter domain.
//!
//! The kernel is squared-exponential with one lengthscale per dimension.
//! Inputs are expected to already live in the unit hypercube (see
//! [`CandidateSet`](crate::entropy_search::CandidateSet)), so a single
//! default lengthscale works across parameters of very different scales.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::invalid_input;
use crate::linalg::{cholesky_with_jitter, dot, dot_many, solve_lower, solve_lower_transpose, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl KernelParams {
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        let k = Self {
            signal_variance,
            lengthscales,
            noise_variance,
        };
        k.validate()?;
        Ok(k)
    }

    /// Same lengthscale in every dimension.
    pub fn isotropic(dim: usize, signal_variance: f64, lengthscale: f64, noise_variance: f64) -> Result<Self> {
        Self::new(signal_variance, vec![lengthscale; dim], noise_variance)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(invalid_input("signal_variance must be positive"));
        }
        if self.lengthscales.is_empty() {
            return Err(invalid_input("at least one lengthscale is required"));
        }
        if self.lengthscales.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(invalid_input("lengthscales must be positive"));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(invalid_input("noise_variance must be non-negative"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    /// `σ_f² · exp(−½ Σ_d ((a_d − b_d) / ℓ_d)²)`.
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.eval_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for ((x, y), l) in a.iter().zip(b).zip(&self.lengthscales) {
            let d = (x - y) / l;
            r2 += d * d;
        }
        self.signal_variance * libm::exp(-0.5 * r2)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// Prior mean of the GP.
pub trait MeanFunction {
    fn mean(&self, x: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConstantMean(pub f64);

impl MeanFunction for ConstantMean {
    fn mean(&self, _x: &[f64]) -> f64 {
        self.0
    }
}

impl<F: Fn(&[f64]) -> f64> MeanFunction for F {
    fn mean(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Mean defined pointwise on a finite set of inputs, keyed by the exact bit
/// pattern of each input vector. Inputs outside the table get `fallback`.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMean {
    table: BTreeMap<Vec<u64>, f64>,
    fallback: f64,
}

impl TabulatedMean {
    pub fn new<'a>(entries: impl IntoIterator<Item = (&'a [f64], f64)>, fallback: f64) -> Self {
        let table = entries.into_iter().map(|(x, m)| (bits(x), m)).collect();
        Self { table, fallback }
    }
}

fn bits(x: &[f64]) -> Vec<u64> {
    x.iter().map(|v| v.to_bits()).collect()
}

impl MeanFunction for TabulatedMean {
    fn mean(&self, x: &[f64]) -> f64 {
        self.table.get(&bits(x)).copied().unwrap_or(self.fallback)
    }
}

/// GP conditioned on a set of observations.
#[derive(Debug, Clone)]
pub struct GpPosterior<M = ConstantMean> {
    train_inputs: Vec<Vec<f64>>,
    train_targets: Vec<f64>,
    prior_mean: M,
    chol_factor: Matrix,
    alpha: Vec<f64>,
    kernel: KernelParams,
    jitter: f64,
}

/// Averages observations that share exactly the same input.
fn merge_duplicates(points: &[(Vec<f64>, f64)]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut inputs: Vec<Vec<f64>> = Vec::new();
    let mut sums: Vec<(f64, usize)> = Vec::new();
    for (x, y) in points {
        match inputs.iter().position(|u| u == x) {
            Some(i) => {
                sums[i].0 += y;
                sums[i].1 += 1;
            }
            None => {
                inputs.push(x.clone());
                sums.push((*y, 1));
            }
        }
    }
    let targets = sums.into_iter().map(|(s, c)| s / c as f64).collect();
    (inputs, targets)
}

impl<M: MeanFunction> GpPosterior<M> {
    /// Conditions the GP on `points`. Duplicate inputs are averaged first.
    pub fn fit(points: &[(Vec<f64>, f64)], kernel: KernelParams, prior_mean: M) -> Result<Self> {
        kernel.validate()?;
        for (x, y) in points {
            kernel.check_dim(x)?;
            if !y.is_finite() || x.iter().any(|v| !v.is_finite()) {
                return Err(invalid_input("training data must be finite"));
            }
        }
        let (train_inputs, train_targets) = merge_duplicates(points);
        let n = train_inputs.len();
        let mut k = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = kernel.eval_unchecked(&train_inputs[i], &train_inputs[j]);
                k.set(i, j, v);
                k.set(j, i, v);
            }
            k.set(i, i, k.get(i, i) + kernel.noise_variance);
        }
        let (chol_factor, jitter) = cholesky_with_jitter(&k)?;
        let resid: Vec<f64> = train_inputs
            .iter()
            .zip(&train_targets)
            .map(|(x, y)| y - prior_mean.mean(x))
            .collect();
        let alpha = solve_lower_transpose(&chol_factor, &solve_lower(&chol_factor, &resid));
        Ok(Self {
            train_inputs,
            train_targets,
            prior_mean,
            chol_factor,
            alpha,
            kernel,
            jitter,
        })
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn train_inputs(&self) -> &[Vec<f64>] {
        &self.train_inputs
    }

    pub fn train_targets(&self) -> &[f64] {
        &self.train_targets
    }

    pub fn chol_factor(&self) -> &Matrix {
        &self.chol_factor
    }

    /// Diagonal jitter that was needed to factor the training covariance.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    fn cross_cov(&self, q: &[f64]) -> Vec<f64> {
        self.train_inputs
            .iter()
            .map(|x| self.kernel.eval_unchecked(x, q))
            .collect()
    }

    /// Posterior mean and (latent, noise-free) variance at `q`.
    pub fn predict(&self, q: &[f64]) -> Result<(f64, f64)> {
        self.kernel.check_dim(q)?;
        let ks = self.cross_cov(q);
        let mean = self.prior_mean.mean(q) + dot(&ks, &self.alpha);
        let v = solve_lower(&self.chol_factor, &ks);
        let var = self.kernel.signal_variance - dot(&v, &v);
        Ok((mean, var.max(0.0)))
    }

    /// Joint posterior mean vector and covariance matrix over `candidates`.
    pub fn posterior_mean_cov(&self, candidates: &[Vec<f64>]) -> Result<(Vec<f64>, Matrix)> {
        for c in candidates {
            self.kernel.check_dim(c)?;
        }
        let n = candidates.len();
        let mut mean = Vec::with_capacity(n);
        // v_j = L⁻¹ k(X, c_j), one row per candidate
        let mut v = Vec::with_capacity(n);
        for c in candidates {
            let ks = self.cross_cov(c);
            mean.push(self.prior_mean.mean(c) + dot(&ks, &self.alpha));
            v.push(solve_lower(&self.chol_factor, &ks));
        }
        let mut cov = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let c = self.kernel.eval_unchecked(&candidates[i], &candidates[j]) - dot(&v[i], &v[j]);
                cov.set(i, j, c);
                cov.set(j, i, c);
            }
        }
        Ok((mean, cov))
    }

    /// Draws `n_samples` joint posterior samples over `candidates`, one row
    /// per draw: `mean + chol(cov) · z` with `z` standard normal. The result
    /// is a deterministic function of `seed`.
    pub fn sample_joint(&self, candidates: &[Vec<f64>], n_samples: usize, seed: u64) -> Result<Matrix> {
        if candidates.is_empty() {
            return Err(invalid_input("at least one candidate is required"));
        }
        let n = candidates.len();
        if n_samples == 0 {
            return Ok(Matrix::zeros(0, n));
        }
        let (mean, cov) = self.posterior_mean_cov(candidates)?;
        let (l, _) = cholesky_with_jitter(&cov)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut z = Matrix::zeros(n_samples, n);
        for v in z.as_mut_slice().iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let mut out = Matrix::zeros(n_samples, n);
        let mut s = 0;
        // blocks of draws share each pass over a row of the factor
        const BLOCK: usize = 8;
        while s + BLOCK <= n_samples {
            for (i, mi) in mean.iter().enumerate() {
                let li = &l.row(i)[..=i];
                let zs: [&[f64]; BLOCK] = core::array::from_fn(|k| &z.row(s + k)[..=i]);
                for (k, dk) in dot_many(li, zs).iter().enumerate() {
                    out.set(s + k, i, mi + dk);
                }
            }
            s += BLOCK;
        }
        for s in s..n_samples {
            for (i, mi) in mean.iter().enumerate() {
                let v = mi + dot(&l.row(i)[..=i], &z.row(s)[..=i]);
                out.set(s, i, v);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k1() -> KernelParams {
        KernelParams::isotropic(1, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn kernel_self_is_signal_variance() {
        let k = KernelParams::new(1.0, vec![0.3, 0.7], 0.0).unwrap();
        assert_eq!(k.eval(&[0.2, 0.9], &[0.2, 0.9]).unwrap(), 1.0);
    }

    #[test]
    fn kernel_unit_distance() {
        let v = k1().eval(&[0.0], &[1.0]).unwrap();
        assert!((v - 0.606_530_659_712_633_4).abs() < 1e-15);
    }

    #[test]
    fn kernel_dimension_mismatch() {
        assert!(matches!(
            k1().eval(&[0.0, 1.0], &[1.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn rejects_bad_kernel_params() {
        assert!(KernelParams::new(0.0, vec![1.0], 0.0).is_err());
        assert!(KernelParams::new(1.0, vec![-1.0], 0.0).is_err());
        assert!(KernelParams::new(1.0, vec![1.0], -1e-3).is_err());
    }

    #[test]
    fn empty_fit_is_prior() {
        let gp = GpPosterior::fit(
            &[],
            KernelParams::isotropic(2, 2.5, 0.2, 0.0).unwrap(),
            ConstantMean(0.7),
        )
        .unwrap();
        let (m, v) = gp.predict(&[0.3, 0.1]).unwrap();
        assert_eq!(m, 0.7);
        assert_eq!(v, 2.5);
    }

    #[test]
    fn single_point_interpolates() {
        let gp = GpPosterior::fit(&[(vec![0.4], 2.0)], k1(), ConstantMean(0.0)).unwrap();
        let (m, v) = gp.predict(&[0.4]).unwrap();
        assert!((m - 2.0).abs() < 1e-8);
        assert!(v < 1e-6);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let k = KernelParams::isotropic(1, 1.0, 0.1, 1e-6).unwrap();
        let gp = GpPosterior::fit(&[(vec![0.0], 3.0), (vec![0.05], 2.0)], k, ConstantMean(-1.0)).unwrap();
        let (m, v) = gp.predict(&[1.5]).unwrap();
        assert!((m + 1.0).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn duplicates_are_averaged() {
        let gp = GpPosterior::fit(
            &[(vec![0.5], 1.0), (vec![0.5], 3.0), (vec![0.9], 0.0)],
            k1(),
            ConstantMean(0.0),
        )
        .unwrap();
        assert_eq!(gp.train_inputs().len(), 2);
        assert_eq!(gp.train_targets()[0], 2.0);
        let (m, _) = gp.predict(&[0.5]).unwrap();
        assert!((m - 2.0).abs() < 1e-6);
    }

    #[test]
    fn tabulated_mean_lookup() {
        let a = [0.1, 0.2];
        let m = TabulatedMean::new([(&a[..], 0.5)], 1.0);
        assert_eq!(m.mean(&a), 0.5);
        assert_eq!(m.mean(&[0.1, 0.3]), 1.0);
    }

    #[test]
    fn zero_samples_is_empty() {
        let gp = GpPosterior::fit(&[], k1(), ConstantMean(0.0)).unwrap();
        let s = gp.sample_joint(&[vec![0.0], vec![0.5]], 0, 1).unwrap();
        assert_eq!((s.rows(), s.cols()), (0, 2));
        assert!(gp.sample_joint(&[], 5, 1).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let gp = GpPosterior::fit(&[(vec![0.2], 1.0)], k1(), ConstantMean(0.0)).unwrap();
        let c = [vec![0.0], vec![0.3], vec![0.8]];
        let a = gp.sample_joint(&c, 50, 9).unwrap();
        let b = gp.sample_joint(&c, 50, 9).unwrap();
        assert_eq!(a, b);
        let other = gp.sample_joint(&c, 50, 10).unwrap();
        assert_ne!(a, other);
    }
}
