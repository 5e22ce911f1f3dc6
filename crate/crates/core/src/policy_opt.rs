//! Policy search under the most likely object model.
//!
//! Policies are open-loop pushes parametrized by a single scalar (push
//! heading or push speed). The discrete policy set is searched with the same
//! greedy entropy search used for identification, with the rollout cost in
//! place of the simulation error.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy_search::{greedy_entropy_search, CandidateSet, SearchConfig, SearchTrace};
use crate::error::invalid_input;
use crate::identification::{map_estimate, BeliefOverModels};
use crate::sim::{rollout_policy, wrap_angle, ObjectModel, Pose, PushAction, SimConfig};
use crate::{Result, LARGE};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolicyKind {
    /// World-frame push heading (rad); speed comes from the fixed fields.
    PushDirection { angle: f64 },
    /// Push speed (m/s); heading comes from the fixed fields.
    PushSpeed { speed: f64 },
}

/// Action components that are not searched over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedFields {
    /// Object-frame contact point.
    pub contact: [f64; 2],
    pub duration: f64,
    /// Heading used by speed policies (rad).
    pub heading: f64,
    /// Speed used by direction policies (m/s).
    pub speed: f64,
    /// Number of times the push is repeated.
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyParam {
    pub kind: PolicyKind,
    pub fixed: FixedFields,
}

impl PolicyParam {
    pub fn direction(angle: f64, fixed: FixedFields) -> Self {
        Self {
            kind: PolicyKind::PushDirection {
                angle: wrap_angle(angle),
            },
            fixed,
        }
    }

    pub fn speed(speed: f64, fixed: FixedFields) -> Self {
        Self {
            kind: PolicyKind::PushSpeed { speed },
            fixed,
        }
    }

    /// The searched scalar.
    pub fn value(&self) -> f64 {
        match self.kind {
            PolicyKind::PushDirection { angle } => angle,
            PolicyKind::PushSpeed { speed } => speed,
        }
    }

    pub fn action(&self) -> Result<PushAction> {
        let (angle, speed) = match self.kind {
            PolicyKind::PushDirection { angle } => (angle, self.fixed.speed),
            PolicyKind::PushSpeed { speed } => (self.fixed.heading, speed),
        };
        if !(speed >= 0.0) {
            return Err(invalid_input("policy speed must be non-negative"));
        }
        PushAction::with_angle(self.fixed.contact, angle, speed, self.fixed.duration)
    }

    pub fn actions(&self) -> Result<Vec<PushAction>> {
        let a = self.action()?;
        Ok(alloc::vec![a; self.fixed.repeats.max(1)])
    }
}

/// Discrete policy set Π together with its scalar candidate coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySet {
    params: Vec<PolicyParam>,
    candidates: CandidateSet,
}

impl PolicySet {
    /// `coords` are the candidate coordinates used by the search (offsets
    /// for headings, so a cone straddling ±π stays contiguous).
    pub fn new(params: Vec<PolicyParam>, coords: Vec<f64>) -> Result<Self> {
        if params.len() != coords.len() {
            return Err(invalid_input("one coordinate per policy is required"));
        }
        let candidates = CandidateSet::from_points(coords.into_iter().map(|c| alloc::vec![c]).collect())?;
        Ok(Self { params, candidates })
    }

    /// `n` headings evenly spread over `center ± half_width`.
    pub fn direction_grid(center: f64, half_width: f64, n: usize, fixed: FixedFields) -> Result<Self> {
        let offsets = grid(-half_width, half_width, n)?;
        let params = offsets
            .iter()
            .map(|o| PolicyParam::direction(center + o, fixed))
            .collect();
        Self::new(params, offsets)
    }

    /// `n` speeds evenly spread over `[lo, hi]`.
    pub fn speed_grid(lo: f64, hi: f64, n: usize, fixed: FixedFields) -> Result<Self> {
        if !(lo >= 0.0) {
            return Err(invalid_input("speeds must be non-negative"));
        }
        let speeds = grid(lo, hi, n)?;
        let params = speeds.iter().map(|&s| PolicyParam::speed(s, fixed)).collect();
        Self::new(params, speeds)
    }

    /// `n` headings drawn uniformly from `center ± half_width`.
    pub fn random_directions(center: f64, half_width: f64, n: usize, fixed: FixedFields, seed: u64) -> Result<Self> {
        let offsets = uniform(-half_width, half_width, n, seed)?;
        let params = offsets
            .iter()
            .map(|o| PolicyParam::direction(center + o, fixed))
            .collect();
        Self::new(params, offsets)
    }

    /// `n` speeds drawn uniformly from `[lo, hi]`.
    pub fn random_speeds(lo: f64, hi: f64, n: usize, fixed: FixedFields, seed: u64) -> Result<Self> {
        if !(lo >= 0.0) {
            return Err(invalid_input("speeds must be non-negative"));
        }
        let speeds = uniform(lo, hi, n, seed)?;
        let params = speeds.iter().map(|&s| PolicyParam::speed(s, fixed)).collect();
        Self::new(params, speeds)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn params(&self) -> &[PolicyParam] {
        &self.params
    }

    pub fn get(&self, i: usize) -> &PolicyParam {
        &self.params[i]
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }
}

fn grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n == 0 || !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid_input("grid needs n >= 1 and finite lo <= hi"));
    }
    if n == 1 {
        return Ok(alloc::vec![0.5 * (lo + hi)]);
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn uniform(lo: f64, hi: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(invalid_input("random set needs n >= 1 and finite lo < hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n).map(|_| rng.random_range(lo..hi)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub goal: [f64; 2],
    /// Cost charged when the object leaves the table (m-equivalent).
    pub drop_penalty: f64,
}

impl CostSpec {
    pub fn new(goal: [f64; 2], drop_penalty: f64) -> Result<Self> {
        if !(drop_penalty >= 0.0) {
            return Err(invalid_input("drop_penalty must be non-negative"));
        }
        Ok(Self { goal, drop_penalty })
    }

    pub fn distance(&self, pose: &Pose) -> f64 {
        libm::hypot(pose.x - self.goal[0], pose.y - self.goal[1])
    }
}

/// Final distance to the goal, or the drop penalty if the object fell.
/// Simulation failures cost [`LARGE`].
pub fn rollout_cost(x0: &Pose, eta: &PolicyParam, model: &ObjectModel, cost: &CostSpec, sim_cfg: &SimConfig) -> f64 {
    match rollout_policy(x0, eta, model, sim_cfg) {
        Ok(traj) if traj.dropped() => cost.drop_penalty,
        Ok(traj) => cost.distance(&traj.final_pose()),
        Err(_) => LARGE,
    }
}

/// Searches `pi_set` for the lowest-cost policy under the MAP model of
/// `belief`.
pub fn optimize_policy(
    x0: &Pose,
    pi_set: &PolicySet,
    belief: &BeliefOverModels,
    cost: &CostSpec,
    cfg: &SearchConfig,
    sim_cfg: &SimConfig,
) -> Result<(PolicyParam, SearchTrace)> {
    optimize_policy_for_model(x0, pi_set, &map_estimate(belief), cost, cfg, sim_cfg)
}

/// Same as [`optimize_policy`] with an explicit model.
pub fn optimize_policy_for_model(
    x0: &Pose,
    pi_set: &PolicySet,
    model: &ObjectModel,
    cost: &CostSpec,
    cfg: &SearchConfig,
    sim_cfg: &SimConfig,
) -> Result<(PolicyParam, SearchTrace)> {
    let objective = |i: usize| rollout_cost(x0, pi_set.get(i), model, cost, sim_cfg);
    let (_, trace) = greedy_entropy_search(objective, pi_set.candidates(), None, cfg)?;
    Ok((*pi_set.get(trace.best_index), trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::Shape;
    use core::f64::consts::PI;

    fn fixed() -> FixedFields {
        FixedFields {
            contact: [-0.04, 0.0],
            duration: 0.2,
            heading: 0.0,
            speed: 0.3,
            repeats: 1,
        }
    }

    fn disk() -> ObjectModel {
        ObjectModel {
            mass: 0.4,
            mu_static: 0.3,
            mu_kinetic: 0.25,
            shape: Shape::Disk { radius: 0.04 },
        }
    }

    #[test]
    fn grids() {
        let s = PolicySet::speed_grid(0.1, 2.0, 30, fixed()).unwrap();
        assert_eq!(s.len(), 30);
        assert_eq!(s.get(0).value(), 0.1);
        assert!((s.get(29).value() - 2.0).abs() < 1e-12);
        let d = PolicySet::direction_grid(3.0, 0.5, 25, fixed()).unwrap();
        assert!(d.params().iter().all(|p| p.value() > -PI && p.value() <= PI));
        assert!(PolicySet::speed_grid(0.1, 2.0, 0, fixed()).is_err());
    }

    #[test]
    fn at_goal_with_zero_speed_costs_nothing() {
        let x0 = Pose::new(0.2, 0.1, 0.0);
        let eta = PolicyParam::speed(0.0, fixed());
        let c = CostSpec::new([0.2, 0.1], 10.0).unwrap();
        assert_eq!(rollout_cost(&x0, &eta, &disk(), &c, &SimConfig::default()), 0.0);
    }

    #[test]
    fn single_policy_is_chosen() {
        let set = PolicySet::speed_grid(0.5, 0.5, 1, fixed()).unwrap();
        let c = CostSpec::new([0.5, 0.0], 10.0).unwrap();
        let (eta, t) = optimize_policy_for_model(
            &Pose::default(),
            &set,
            &disk(),
            &c,
            &SearchConfig::default(),
            &SimConfig::default(),
        )
        .unwrap();
        assert_eq!(eta, *set.get(0));
        assert_eq!(t.evaluated.len(), 1);
    }

    #[test]
    fn random_sets_are_reproducible() {
        let a = PolicySet::random_speeds(0.1, 2.0, 10, fixed(), 4).unwrap();
        let b = PolicySet::random_speeds(0.1, 2.0, 10, fixed(), 4).unwrap();
        assert_eq!(a, b);
    }
}
