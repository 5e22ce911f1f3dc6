//! Comparison methods: uniform random search over a candidate set, and a
//! scalar PoWER (policy learning by weighting exploration with the returns)
//! that learns directly from rollouts.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::entropy_search::{sanitize, CandidateSet, SearchTrace};
use crate::error::invalid_config;
use crate::Result;

/// Evaluates `budget` candidates drawn uniformly with replacement.
pub fn random_search<F>(mut objective: F, candidates: &CandidateSet, budget: usize, seed: u64) -> Result<SearchTrace>
where
    F: FnMut(usize) -> f64,
{
    if budget == 0 {
        return Err(invalid_config("budget must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace = SearchTrace::new();
    for _ in 0..budget {
        let i = rng.random_range(0..candidates.len());
        let (v, _) = sanitize(objective(i));
        trace.record(i, v);
    }
    Ok(trace)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PowerConfig {
    pub init_mean: f64,
    pub init_std: f64,
    /// Size of the elite buffer reused in every update.
    pub n_best: usize,
    pub rollouts_per_iter: usize,
    pub iterations: usize,
    /// `c` in the reward `exp(−c · cost)`.
    pub reward_temperature: f64,
    pub seed: u64,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            init_mean: 1.0,
            init_std: 0.3,
            n_best: 5,
            rollouts_per_iter: 1,
            iterations: 100,
            reward_temperature: 10.0,
            seed: 0,
        }
    }
}

impl PowerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return Err(invalid_config("init_std must be positive"));
        }
        if !self.init_mean.is_finite() {
            return Err(invalid_config("init_mean must be finite"));
        }
        if self.n_best == 0 || self.rollouts_per_iter == 0 {
            return Err(invalid_config("n_best and rollouts_per_iter must be at least 1"));
        }
        if !(self.reward_temperature > 0.0) {
            return Err(invalid_config("reward_temperature must be positive"));
        }
        Ok(())
    }
}

/// Per-iteration exploration noise decays by this factor.
pub const STD_DECAY: f64 = 0.97;
/// Lower limit of the exploration noise (capped by `init_std`).
pub const STD_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RolloutResult {
    pub cost: f64,
    pub dropped: bool,
}

/// One rollout of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerStep {
    pub iteration: usize,
    /// Policy mean in effect when the rollout was sampled.
    pub mean: f64,
    /// Parameter actually rolled out.
    pub eta: f64,
    pub cost: f64,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRun {
    pub curve: Vec<PowerStep>,
    /// Policy mean after the last update.
    pub mean: f64,
    pub std: f64,
}

impl PowerRun {
    pub fn drops(&self) -> usize {
        self.curve.iter().filter(|s| s.dropped).count()
    }
}

/// Runs `cfg.iterations` PoWER iterations against `env`. Each rollout
/// samples `η = mean + std·ε`; the best `n_best` rollouts seen so far,
/// weighted by `exp(−c·cost)`, move the mean to their weighted average.
pub fn power_iterate<F>(cfg: &PowerConfig, mut env: F) -> Result<PowerRun>
where
    F: FnMut(f64) -> RolloutResult,
{
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut mean = cfg.init_mean;
    let mut std = cfg.init_std;
    let floor = STD_FLOOR.min(cfg.init_std);
    // (reward, sampled parameter), best first
    let mut elite: Vec<(f64, f64)> = Vec::with_capacity(cfg.n_best + cfg.rollouts_per_iter);
    let mut curve = Vec::with_capacity(cfg.iterations * cfg.rollouts_per_iter);
    for iteration in 0..cfg.iterations {
        for _ in 0..cfg.rollouts_per_iter {
            let eps: f64 = StandardNormal.sample(&mut rng);
            let eta = mean + std * eps;
            let r = env(eta);
            curve.push(PowerStep {
                iteration,
                mean,
                eta,
                cost: r.cost,
                dropped: r.dropped,
            });
            let reward = if r.cost.is_finite() {
                libm::exp(-cfg.reward_temperature * r.cost)
            } else {
                0.0
            };
            // stable insert keeps earlier rollouts ahead on equal reward
            let pos = elite.iter().position(|e| e.0 < reward).unwrap_or(elite.len());
            elite.insert(pos, (reward, eta));
            elite.truncate(cfg.n_best);
        }
        let total: f64 = elite.iter().map(|e| e.0).sum();
        if total > 0.0 {
            let shift: f64 = elite.iter().map(|&(w, eta)| w * (eta - mean)).sum::<f64>() / total;
            mean += shift;
        }
        std = (std * STD_DECAY).max(floor);
    }
    Ok(PowerRun { curve, mean, std })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> CandidateSet {
        CandidateSet::from_points((0..n).map(|i| alloc::vec![i as f64]).collect()).unwrap()
    }

    #[test]
    fn random_search_budget_one() {
        let t = random_search(|i| i as f64, &line(10), 1, 3).unwrap();
        assert_eq!(t.evaluated.len(), 1);
        assert!(random_search(|i| i as f64, &line(10), 0, 3).is_err());
    }

    #[test]
    fn random_search_is_reproducible() {
        let a = random_search(|i| (i as f64 - 4.2).abs(), &line(10), 20, 11).unwrap();
        let b = random_search(|i| (i as f64 - 4.2).abs(), &line(10), 20, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn random_search_running_best_never_increases() {
        let t = random_search(|i| ((i * 7919) % 13) as f64, &line(50), 40, 5).unwrap();
        let mut best = f64::INFINITY;
        for k in 1..=t.evaluated.len() {
            let b = t.best_after(k);
            assert!(b <= best);
            best = b;
        }
        assert_eq!(best, t.best_value);
    }

    #[test]
    fn power_zero_iterations_keeps_initial_policy() {
        let cfg = PowerConfig {
            iterations: 0,
            ..PowerConfig::default()
        };
        let run = power_iterate(&cfg, |_| unreachable!()).unwrap();
        assert!(run.curve.is_empty());
        assert_eq!(run.mean, cfg.init_mean);
    }

    #[test]
    fn power_fixed_point() {
        let cfg = PowerConfig {
            init_mean: 0.8,
            init_std: 1e-9,
            iterations: 50,
            ..PowerConfig::default()
        };
        let run = power_iterate(&cfg, |eta| RolloutResult {
            cost: (eta - 0.8) * (eta - 0.8),
            dropped: false,
        })
        .unwrap();
        assert!((run.mean - 0.8).abs() < 1e-6);
    }

    #[test]
    fn power_consumes_its_budget() {
        let cfg = PowerConfig {
            iterations: 7,
            rollouts_per_iter: 3,
            ..PowerConfig::default()
        };
        let mut calls = 0;
        let run = power_iterate(&cfg, |_| {
            calls += 1;
            RolloutResult {
                cost: 0.0,
                dropped: calls % 2 == 0,
            }
        })
        .unwrap();
        assert_eq!(calls, 21);
        assert_eq!(run.curve.len(), 21);
        assert_eq!(run.drops(), 10);
    }

    #[test]
    fn power_all_zero_rewards_keep_mean() {
        let cfg = PowerConfig {
            iterations: 5,
            reward_temperature: 1e6,
            ..PowerConfig::default()
        };
        let run = power_iterate(&cfg, |_| RolloutResult {
            cost: 1.0,
            dropped: true,
        })
        .unwrap();
        assert_eq!(run.mean, cfg.init_mean);
    }
}
