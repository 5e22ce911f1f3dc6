//! Online identification of mass and friction from observed pushes.
//!
//! Each observed push updates a discrete belief over candidate models: the
//! simulation error of every candidate is searched with greedy entropy
//! search, seeded by the previous belief, and the resulting `P_min` becomes
//! the new belief.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::entropy_search::{entropy, greedy_entropy_search, CandidateSet, SearchConfig, SearchTrace};
use crate::error::invalid_input;
use crate::sim::{simulate_push, wrap_angle, ObjectModel, Pose, PushAction, Shape, SimConfig};
use crate::{Error, Result, LARGE};

/// Metres of error charged per radian of yaw error.
pub const DEFAULT_ROTATION_WEIGHT: f64 = 0.1;

/// Regular grid over mass and kinetic friction; static friction is a fixed
/// multiple of kinetic friction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ThetaGrid {
    pub mass: (f64, f64),
    pub mass_steps: usize,
    pub mu_kinetic: (f64, f64),
    pub mu_steps: usize,
    pub static_ratio: f64,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self {
            mass: (0.05, 2.0),
            mass_steps: 20,
            mu_kinetic: (0.05, 0.8),
            mu_steps: 20,
            static_ratio: 1.2,
        }
    }
}

fn axis(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

impl ThetaGrid {
    /// Candidate points `[mass, mu_static, mu_kinetic]`, mass-major.
    pub fn candidates(&self) -> Result<CandidateSet> {
        if self.mass_steps == 0 || self.mu_steps == 0 {
            return Err(invalid_input("grid needs at least one step per axis"));
        }
        if !(self.mass.0 > 0.0 && self.mass.0 <= self.mass.1) {
            return Err(invalid_input("mass range must be positive and ordered"));
        }
        if !(self.mu_kinetic.0 >= 0.0 && self.mu_kinetic.0 <= self.mu_kinetic.1) {
            return Err(invalid_input("friction range must be non-negative and ordered"));
        }
        if !(self.static_ratio >= 1.0 && self.static_ratio * self.mu_kinetic.1 <= 2.0) {
            return Err(invalid_input("static friction must lie in [mu_kinetic, 2]"));
        }
        let mut points = Vec::with_capacity(self.mass_steps * self.mu_steps);
        for m in axis(self.mass.0, self.mass.1, self.mass_steps) {
            for mu in axis(self.mu_kinetic.0, self.mu_kinetic.1, self.mu_steps) {
                points.push(vec![m, self.static_ratio * mu, mu]);
            }
        }
        let bounds = vec![
            self.mass,
            (
                self.static_ratio * self.mu_kinetic.0,
                self.static_ratio * self.mu_kinetic.1,
            ),
            self.mu_kinetic,
        ];
        CandidateSet::new(points, bounds)
    }
}

/// Discrete distribution over candidate object models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefOverModels {
    pub theta_set: CandidateSet,
    pub probs: Vec<f64>,
    /// Known footprint of the object.
    pub shape: Shape,
}

impl BeliefOverModels {
    pub fn new(theta_set: CandidateSet, probs: Vec<f64>, shape: Shape) -> Result<Self> {
        if theta_set.dim() != 3 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: theta_set.dim(),
            });
        }
        if probs.len() != theta_set.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_set.len(),
                got: probs.len(),
            });
        }
        if probs.iter().any(|p| !(*p >= 0.0)) || (probs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(invalid_input("belief must be a probability vector"));
        }
        shape.validate()?;
        Ok(Self {
            theta_set,
            probs,
            shape,
        })
    }

    pub fn uniform(theta_set: CandidateSet, shape: Shape) -> Result<Self> {
        let n = theta_set.len();
        Self::new(theta_set, vec![1.0 / n as f64; n], shape)
    }

    pub fn one_hot(theta_set: CandidateSet, index: usize, shape: Shape) -> Result<Self> {
        let mut probs = vec![0.0; theta_set.len()];
        *probs
            .get_mut(index)
            .ok_or_else(|| invalid_input("index out of range"))? = 1.0;
        Self::new(theta_set, probs, shape)
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn model(&self, i: usize) -> ObjectModel {
        let p = self.theta_set.point(i);
        ObjectModel {
            mass: p[0],
            mu_static: p[1],
            mu_kinetic: p[2],
            shape: self.shape,
        }
    }

    /// Index of the most probable candidate, lowest index on ties.
    pub fn map_index(&self) -> usize {
        let mut best = 0;
        for (i, p) in self.probs.iter().enumerate() {
            if *p > self.probs[best] {
                best = i;
            }
        }
        best
    }

    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }
}

/// One observed push.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PushObservation {
    pub x_before: Pose,
    pub action: PushAction,
    pub x_after: Pose,
}

/// Weighted pose distance between the observed and simulated outcome:
/// `sqrt(Δx² + Δy² + (w·Δyaw)²)`. Simulation failures yield [`LARGE`].
pub fn sim_error(obs: &PushObservation, theta: &ObjectModel, cfg: &SimConfig, rotation_weight: f64) -> f64 {
    match simulate_push(&obs.x_before, &obs.action, theta, cfg) {
        Ok(traj) => pose_error(&obs.x_after, &traj.final_pose(), rotation_weight),
        Err(_) => LARGE,
    }
}

pub fn pose_error(a: &Pose, b: &Pose, rotation_weight: f64) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dr = rotation_weight * wrap_angle(a.yaw - b.yaw);
    libm::sqrt(dx * dx + dy * dy + dr * dr)
}

/// Belief update from a single observation with the default rotation weight.
pub fn update_belief(
    prior: &BeliefOverModels,
    obs: &PushObservation,
    cfg: &SearchConfig,
    sim_cfg: &SimConfig,
) -> Result<(BeliefOverModels, SearchTrace)> {
    update_belief_batch(prior, core::slice::from_ref(obs), cfg, sim_cfg, DEFAULT_ROTATION_WEIGHT)
}

/// Belief update whose objective is the mean simulation error over `obs`.
pub fn update_belief_batch(
    prior: &BeliefOverModels,
    obs: &[PushObservation],
    cfg: &SearchConfig,
    sim_cfg: &SimConfig,
    rotation_weight: f64,
) -> Result<(BeliefOverModels, SearchTrace)> {
    if obs.is_empty() {
        return Err(invalid_input("at least one observation is required"));
    }
    sim_cfg.validate()?;
    let objective = |i: usize| {
        let model = prior.model(i);
        obs.iter()
            .map(|o| sim_error(o, &model, sim_cfg, rotation_weight))
            .sum::<f64>()
            / obs.len() as f64
    };
    let (pmin, trace) = greedy_entropy_search(objective, &prior.theta_set, Some(&prior.probs), cfg)?;
    let posterior = BeliefOverModels {
        theta_set: prior.theta_set.clone(),
        probs: pmin.probs,
        shape: prior.shape,
    };
    Ok((posterior, trace))
}

/// Most probable candidate model.
pub fn map_estimate(belief: &BeliefOverModels) -> ObjectModel {
    belief.model(belief.map_index())
}

/// Final pose of `action` from `x` under the MAP model.
pub fn predict_motion(x: &Pose, action: &PushAction, belief: &BeliefOverModels, sim_cfg: &SimConfig) -> Result<Pose> {
    Ok(simulate_push(x, action, &map_estimate(belief), sim_cfg)?.final_pose())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> CandidateSet {
        ThetaGrid {
            mass_steps: 3,
            mu_steps: 2,
            ..ThetaGrid::default()
        }
        .candidates()
        .unwrap()
    }

    const DISK: Shape = Shape::Disk { radius: 0.04 };

    #[test]
    fn grid_layout() {
        let c = ThetaGrid::default().candidates().unwrap();
        assert_eq!(c.len(), 400);
        assert_eq!(c.point(0), &[0.05, 0.06, 0.05]);
        let last = c.point(399);
        assert!((last[0] - 2.0).abs() < 1e-12 && (last[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn map_rules() {
        let b = BeliefOverModels::uniform(small_grid(), DISK).unwrap();
        assert_eq!(b.map_index(), 0);
        let b = BeliefOverModels::new(
            CandidateSet::new(
                vec![vec![0.1, 0.2, 0.1], vec![0.2, 0.2, 0.1], vec![0.3, 0.2, 0.1]],
                vec![(0.1, 0.3), (0.2, 0.2), (0.1, 0.1)],
            )
            .unwrap(),
            vec![0.2, 0.5, 0.3],
            DISK,
        )
        .unwrap();
        assert_eq!(b.map_index(), 1);
        assert_eq!(map_estimate(&b).mass, 0.2);
        let oh = BeliefOverModels::one_hot(small_grid(), 4, DISK).unwrap();
        assert_eq!(map_estimate(&oh), oh.model(4));
    }

    #[test]
    fn belief_validation() {
        assert!(BeliefOverModels::new(small_grid(), vec![0.5; 6], DISK).is_err());
        assert!(BeliefOverModels::new(small_grid(), vec![1.0; 2], DISK).is_err());
    }

    #[test]
    fn pose_error_formula() {
        let a = Pose::new(0.0, 0.0, 0.0);
        assert!((pose_error(&a, &Pose::new(0.03, 0.04, 0.0), 0.1) - 0.05).abs() < 1e-15);
        assert!((pose_error(&a, &Pose::new(0.0, 0.0, 0.5), 0.1) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn single_candidate_belief_is_unchanged() {
        let set = CandidateSet::new(vec![vec![0.5, 0.36, 0.3]], vec![(0.5, 0.5), (0.36, 0.36), (0.3, 0.3)]).unwrap();
        let prior = BeliefOverModels::uniform(set, DISK).unwrap();
        let obs = PushObservation {
            x_before: Pose::new(0.0, 0.0, 0.0),
            action: PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.3, 0.2).unwrap(),
            x_after: Pose::new(0.3, 0.2, 1.0),
        };
        let (post, trace) = update_belief(&prior, &obs, &SearchConfig::default(), &SimConfig::default()).unwrap();
        assert_eq!(post.probs, vec![1.0]);
        assert_eq!(trace.evaluated.len(), 1);
    }

    #[test]
    fn zero_speed_prediction() {
        let b = BeliefOverModels::uniform(small_grid(), DISK).unwrap();
        let x = Pose::new(0.1, 0.1, 0.2);
        let a = PushAction::new([-0.04, 0.0], [1.0, 0.0], 0.0, 0.2).unwrap();
        assert_eq!(predict_motion(&x, &a, &b, &SimConfig::default()).unwrap(), x);
    }
}
