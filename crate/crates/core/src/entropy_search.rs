//! Greedy entropy search over a discrete candidate set.
//!
//! A GP belief over the objective is refit after every evaluation. Joint
//! posterior draws over all candidates give a Monte-Carlo estimate of
//! `P_min`, the probability that each candidate is the minimizer. The next
//! candidate is the unevaluated one with the largest entropy term
//! `−p log p`. The search stops when the entropy of `P_min` stagnates or the
//! evaluation budget runs out, and the final `P_min` is returned as the
//! belief over candidates.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid_config, invalid_input};
use crate::gp::{GpPosterior, KernelParams, TabulatedMean};
use crate::linalg::Matrix;
use crate::{derive_seed, Error, Result, LARGE};

/// Ordered, distinct candidate points with per-dimension bounds used to map
/// every point into the unit hypercube.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    points: Vec<Vec<f64>>,
    bounds: Vec<(f64, f64)>,
    #[serde(skip)]
    normalized: Vec<Vec<f64>>,
}

impl CandidateSet {
    pub fn new(points: Vec<Vec<f64>>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid_input("candidate set must not be empty"));
        }
        let dim = bounds.len();
        if dim == 0 {
            return Err(invalid_input("candidates need at least one dimension"));
        }
        for &(lo, hi) in &bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(invalid_input("bounds must be finite with lo <= hi"));
            }
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            for (v, &(lo, hi)) in p.iter().zip(&bounds) {
                if !v.is_finite() || *v < lo || *v > hi {
                    return Err(invalid_input(format!("candidate {i} lies outside the bounds")));
                }
            }
            if points[..i].iter().any(|q| q == p) {
                return Err(invalid_input(format!("candidate {i} is a duplicate")));
            }
        }
        let mut set = Self {
            points,
            bounds,
            normalized: Vec::new(),
        };
        set.normalize();
        Ok(set)
    }

    /// Bounds taken as the per-dimension min/max of the points.
    pub fn from_points(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        let mut bounds = vec![(f64::INFINITY, f64::NEG_INFINITY); dim];
        for p in &points {
            for (b, v) in bounds.iter_mut().zip(p) {
                b.0 = b.0.min(*v);
                b.1 = b.1.max(*v);
            }
        }
        Self::new(points, bounds)
    }

    fn normalize(&mut self) {
        self.normalized = self
            .points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&self.bounds)
                    .map(|(v, &(lo, hi))| if hi > lo { (v - lo) / (hi - lo) } else { 0.0 })
                    .collect()
            })
            .collect();
    }

    /// Rebuilds the normalized cache, e.g. after deserialization.
    pub fn refresh(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn normalized(&self, i: usize) -> &[f64] {
        &self.normalized[i]
    }
}

/// Monte-Carlo estimate of the distribution of the minimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PminEstimate {
    pub probs: Vec<f64>,
    pub mc_samples: usize,
    /// Shannon entropy in nats.
    pub entropy: f64,
}

impl PminEstimate {
    pub fn from_probs(probs: Vec<f64>, mc_samples: usize) -> Self {
        let entropy = entropy(&probs);
        Self {
            probs,
            mc_samples,
            entropy,
        }
    }

    pub fn one_hot(n: usize, index: usize, mc_samples: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[index] = 1.0;
        Self::from_probs(probs, mc_samples)
    }
}

#[inline]
fn entropy_term(p: f64) -> f64 {
    if p > 0.0 {
        -p * libm::log(p)
    } else {
        0.0
    }
}

/// `−Σ p log p` with `0 · log 0 = 0`.
pub fn entropy(probs: &[f64]) -> f64 {
    probs.iter().map(|&p| entropy_term(p)).sum()
}

/// Fraction of rows whose minimum lies in each column. Ties go to the lowest
/// column index.
pub fn estimate_pmin(samples: &Matrix) -> Result<PminEstimate> {
    if samples.is_empty() {
        return Err(invalid_input("sample matrix is empty"));
    }
    if samples.as_slice().iter().any(|v| v.is_nan()) {
        return Err(invalid_input("sample matrix contains NaN"));
    }
    let mut counts = vec![0usize; samples.cols()];
    for row in samples.iter_rows() {
        let mut best = 0;
        for (j, v) in row.iter().enumerate().skip(1) {
            if *v < row[best] {
                best = j;
            }
        }
        counts[best] += 1;
    }
    let total = samples.rows() as f64;
    let probs = counts.into_iter().map(|c| c as f64 / total).collect();
    Ok(PminEstimate::from_probs(probs, samples.rows()))
}

fn select_masked(probs: &[f64], evaluated: &[bool]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &p) in probs.iter().enumerate() {
        if evaluated[i] {
            continue;
        }
        let h = entropy_term(p);
        if best.is_none_or(|(_, bh)| h > bh) {
            best = Some((i, h));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::Exhausted)
}

/// Unevaluated candidate with the largest `−p log p`; lowest index on ties.
pub fn select_next(pmin: &PminEstimate, evaluated: &[usize]) -> Result<usize> {
    let mut mask = vec![false; pmin.probs.len()];
    for &i in evaluated {
        if i >= mask.len() {
            return Err(invalid_input(format!("evaluated index {i} out of range")));
        }
        mask[i] = true;
    }
    select_masked(&pmin.probs, &mask)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub eval_budget: usize,
    pub mc_samples: usize,
    /// Entropy change (nats) below which an iteration counts as stagnant.
    pub entropy_tol: f64,
    /// Consecutive stagnant iterations before stopping.
    pub patience: usize,
    pub seed: u64,
    /// Kernel lengthscale in normalized units.
    pub lengthscale: f64,
    /// Scale of the prior-belief term in the GP mean (standardized units).
    pub prior_weight: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            eval_budget: 60,
            mc_samples: 1000,
            entropy_tol: 1e-3,
            patience: 3,
            seed: 0,
            lengthscale: 0.2,
            prior_weight: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.eval_budget == 0 {
            return Err(invalid_config("eval_budget must be at least 1"));
        }
        if self.mc_samples == 0 {
            return Err(invalid_config("mc_samples must be at least 1"));
        }
        if self.patience == 0 {
            return Err(invalid_config("patience must be at least 1"));
        }
        if !(self.entropy_tol >= 0.0) {
            return Err(invalid_config("entropy_tol must be non-negative"));
        }
        if !(self.lengthscale > 0.0) {
            return Err(invalid_config("lengthscale must be positive"));
        }
        if !(self.prior_weight >= 0.0) {
            return Err(invalid_config("prior_weight must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    /// `(candidate index, objective value)` in evaluation order.
    pub evaluated: Vec<(usize, f64)>,
    pub pmin_history: Vec<PminEstimate>,
    pub best_index: usize,
    pub best_value: f64,
}

impl SearchTrace {
    pub(crate) fn new() -> Self {
        Self {
            evaluated: Vec::new(),
            pmin_history: Vec::new(),
            best_index: 0,
            best_value: f64::INFINITY,
        }
    }

    /// Records an evaluation and updates the best, preferring the lower
    /// index among equal values.
    pub(crate) fn record(&mut self, index: usize, value: f64) {
        self.evaluated.push((index, value));
        if value < self.best_value || (value == self.best_value && index < self.best_index) {
            self.best_value = value;
            self.best_index = index;
        }
    }

    /// Best value among the first `k` evaluations (all of them if fewer).
    pub fn best_after(&self, k: usize) -> f64 {
        self.evaluated
            .iter()
            .take(k)
            .map(|&(_, v)| v)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Maps failed evaluations to the [`LARGE`] sentinel.
pub(crate) fn sanitize(value: f64) -> (f64, bool) {
    if value.is_finite() && value < LARGE {
        (value, true)
    } else {
        (LARGE, false)
    }
}

/// Runs greedy entropy search. `objective` maps a candidate index to its
/// value; `prior` is an optional probability vector over candidates
/// (uniform when `None`).
///
/// The stagnation stop only applies when the budget is smaller than the
/// candidate set; a budget covering every candidate evaluates all of them.
pub fn greedy_entropy_search<F>(
    mut objective: F,
    candidates: &CandidateSet,
    prior: Option<&[f64]>,
    cfg: &SearchConfig,
) -> Result<(PminEstimate, SearchTrace)>
where
    F: FnMut(usize) -> f64,
{
    cfg.validate()?;
    let n = candidates.len();
    let prior_mean = match prior {
        Some(p) => {
            if p.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                return Err(invalid_input("prior must be non-negative and finite"));
            }
            let max = p.iter().copied().fold(0.0, f64::max);
            if max <= 0.0 {
                return Err(invalid_input("prior has no mass"));
            }
            p.iter().map(|v| cfg.prior_weight * (1.0 - v / max)).collect()
        }
        None => vec![0.0; n],
    };
    let kernel = KernelParams::isotropic(candidates.dim(), 1.0, cfg.lengthscale, 1e-6)?;
    let mean_fn = TabulatedMean::new(
        (0..n).map(|i| (candidates.normalized(i), prior_mean[i])),
        cfg.prior_weight,
    );

    // argmax of the prior, lowest index on ties
    let mut next = 0;
    for (i, m) in prior_mean.iter().enumerate() {
        if *m < prior_mean[next] {
            next = i;
        }
    }

    let mut trace = SearchTrace::new();
    let mut evaluated = vec![false; n];
    let mut excluded = vec![false; n];
    let mut valid: Vec<(usize, f64)> = Vec::new();
    let mut stagnant = 0;
    let exhaustive_budget = cfg.eval_budget >= n;
    let mut pmin = PminEstimate::from_probs(vec![1.0 / n as f64; n], 0);

    for iter in 0..cfg.eval_budget.min(n) {
        let (value, ok) = sanitize(objective(next));
        evaluated[next] = true;
        trace.record(next, value);
        if ok {
            valid.push((next, value));
        } else {
            excluded[next] = true;
        }

        let active: Vec<usize> = (0..n).filter(|&i| !excluded[i]).collect();
        if active.is_empty() {
            return Err(Error::SearchFailed("every candidate failed to evaluate".into()));
        }
        let probs = if active.len() == 1 {
            let mut p = vec![0.0; n];
            p[active[0]] = 1.0;
            p
        } else {
            let gp = fit_standardized(&valid, candidates, kernel.clone(), mean_fn.clone())?;
            let pts: Vec<Vec<f64>> = active.iter().map(|&i| candidates.normalized(i).to_vec()).collect();
            let samples = gp.sample_joint(&pts, cfg.mc_samples, derive_seed(cfg.seed, iter as u64))?;
            let local = estimate_pmin(&samples)?;
            let mut p = vec![0.0; n];
            for (k, &i) in active.iter().enumerate() {
                p[i] = local.probs[k];
            }
            p
        };
        let next_pmin = PminEstimate::from_probs(probs, cfg.mc_samples);
        if iter > 0 && libm::fabs(next_pmin.entropy - pmin.entropy) < cfg.entropy_tol {
            stagnant += 1;
        } else {
            stagnant = 0;
        }
        pmin = next_pmin;
        trace.pmin_history.push(pmin.clone());
        if !exhaustive_budget && stagnant >= cfg.patience {
            break;
        }
        match select_masked(&pmin.probs, &evaluated) {
            Ok(i) => next = i,
            Err(Error::Exhausted) => break,
            Err(e) => return Err(e),
        }
    }
    if valid.is_empty() {
        return Err(Error::SearchFailed("no candidate evaluated successfully".into()));
    }
    Ok((pmin, trace))
}

/// Fits the GP on standardized targets; `P_min` is invariant to this affine
/// map of the objective.
fn fit_standardized(
    valid: &[(usize, f64)],
    candidates: &CandidateSet,
    kernel: KernelParams,
    mean_fn: TabulatedMean,
) -> Result<GpPosterior<TabulatedMean>> {
    let m = valid.len() as f64;
    let mean = valid.iter().map(|v| v.1).sum::<f64>() / m.max(1.0);
    let var = valid.iter().map(|v| (v.1 - mean) * (v.1 - mean)).sum::<f64>() / m.max(1.0);
    let sd = libm::sqrt(var);
    let sd = if sd > 0.0 && sd.is_finite() { sd } else { 1.0 };
    let points: Vec<(Vec<f64>, f64)> = valid
        .iter()
        .map(|&(i, v)| (candidates.normalized(i).to_vec(), (v - mean) / sd))
        .collect();
    GpPosterior::fit(&points, kernel, mean_fn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> CandidateSet {
        CandidateSet::from_points((0..n).map(|i| vec![i as f64]).collect()).unwrap()
    }

    #[test]
    fn pmin_direct_count() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0], vec![1.0, 2.0], vec![1.0, 2.0]]).unwrap();
        let p = estimate_pmin(&m).unwrap();
        assert_eq!(p.probs, vec![0.75, 0.25]);
        assert_eq!(p.mc_samples, 4);
    }

    #[test]
    fn pmin_one_hot_has_zero_entropy() {
        let row = vec![3.0, 2.0, 0.5, 4.0];
        let m = Matrix::from_rows(&[row.clone(), row.clone(), row]).unwrap();
        let p = estimate_pmin(&m).unwrap();
        assert_eq!(p.probs, vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(p.entropy, 0.0);
    }

    #[test]
    fn pmin_ties_go_to_first_index() {
        let m = Matrix::from_rows(&[vec![1.0, 1.0, 1.0]]).unwrap();
        assert_eq!(estimate_pmin(&m).unwrap().probs, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn pmin_rejects_nan_and_empty() {
        let m = Matrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap();
        assert!(estimate_pmin(&m).is_err());
        assert!(estimate_pmin(&Matrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn select_largest_entropy_term() {
        // terms: 0.3466, 0.3612, 0.3219
        let p = PminEstimate::from_probs(vec![0.5, 0.3, 0.2], 10);
        assert_eq!(select_next(&p, &[]).unwrap(), 1);
        assert_eq!(select_next(&p, &[0]).unwrap(), 1);
        assert_eq!(select_next(&p, &[1]).unwrap(), 0);
        let q = PminEstimate::from_probs(vec![1.0, 0.0], 10);
        assert_eq!(select_next(&q, &[]).unwrap(), 0);
        assert_eq!(select_next(&p, &[0, 1, 2]), Err(Error::Exhausted));
    }

    #[test]
    fn single_candidate() {
        let set = line(1);
        let (p, t) = greedy_entropy_search(|_| 4.2, &set, None, &SearchConfig::default()).unwrap();
        assert_eq!(p.probs, vec![1.0]);
        assert_eq!(t.evaluated, vec![(0, 4.2)]);
        assert_eq!(t.best_index, 0);
    }

    #[test]
    fn first_evaluation_is_prior_map() {
        let set = line(5);
        let prior = [0.1, 0.2, 0.4, 0.2, 0.1];
        let cfg = SearchConfig {
            eval_budget: 1,
            ..SearchConfig::default()
        };
        let (_, t) = greedy_entropy_search(|i| i as f64, &set, Some(&prior), &cfg).unwrap();
        assert_eq!(t.evaluated[0].0, 2);
        let (_, t) = greedy_entropy_search(|i| i as f64, &set, None, &cfg).unwrap();
        assert_eq!(t.evaluated[0].0, 0);
    }

    #[test]
    fn failed_evaluations_are_excluded() {
        let set = line(6);
        let cfg = SearchConfig {
            eval_budget: 6,
            entropy_tol: 0.0,
            ..SearchConfig::default()
        };
        let f = |i: usize| if i == 2 { f64::NAN } else { (i as f64 - 3.7).abs() };
        let (p, t) = greedy_entropy_search(f, &set, None, &cfg).unwrap();
        assert_eq!(p.probs[2], 0.0);
        assert!(t.evaluated.contains(&(2, LARGE)));
        assert_eq!(t.best_index, 4);
    }

    #[test]
    fn all_failures_is_an_error() {
        let set = line(3);
        let r = greedy_entropy_search(|_| f64::INFINITY, &set, None, &SearchConfig::default());
        assert!(matches!(r, Err(Error::SearchFailed(_))));
    }

    #[test]
    fn candidate_set_validation() {
        assert!(CandidateSet::from_points(vec![]).is_err());
        assert!(CandidateSet::from_points(vec![vec![1.0], vec![1.0]]).is_err());
        assert!(CandidateSet::new(vec![vec![2.0]], vec![(0.0, 1.0)]).is_err());
        let s = CandidateSet::new(vec![vec![0.5, 3.0]], vec![(0.0, 1.0), (3.0, 3.0)]).unwrap();
        assert_eq!(s.normalized(0), &[0.5, 0.0]);
    }
}
