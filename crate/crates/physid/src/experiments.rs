//! Experiment pipelines. Every pipeline is a pure function of the run
//! configuration and a seed; seeds run on the rayon pool and results are
//! collected in seed order.

use physid_core::baselines::{power_iterate, random_search, PowerConfig, RolloutResult};
use physid_core::entropy_search::{CandidateSet, SearchConfig, SearchTrace};
use physid_core::identification::{map_estimate, sim_error, update_belief_batch, BeliefOverModels, PushObservation};
use physid_core::policy_opt::{optimize_policy_for_model, CostSpec, FixedFields, PolicyParam, PolicySet};
use physid_core::sim::{
    rollout, rollout_policy, ObjectModel, Pose, PushAction, Shape, SimConfig, TableBounds, Trajectory,
};
use physid_core::{derive_seed, Error as CoreError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{GridSpec, RunConfig, WorldSpec};
use crate::dataset::{
    generate_synthetic_dataset, k_folds, load_push_records, select, train_test_split, DatasetError, PushRecord,
};

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T, E = ExperimentError> = std::result::Result<T, E>;

fn config_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Config(msg.into())
}

// Seed streams, one per independent random choice within a seed.
const STREAM_WORLD: u64 = 0;
const STREAM_DATA: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_START: u64 = 3;
const STREAM_POWER: u64 = 4;
const STREAM_PI: u64 = 5;
const STREAM_RS: u64 = 6;
const STREAM_SEARCH: u64 = 1000;

impl WorldSpec {
    /// Ground-truth object with mass and kinetic friction drawn uniformly.
    pub fn draw(&self, seed: u64) -> Result<ObjectModel> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = |(lo, hi): (f64, f64)| if hi > lo { rng.random_range(lo..hi) } else { lo };
        let mass = u(self.mass);
        let mu = u(self.mu_kinetic);
        let m = ObjectModel {
            mass,
            mu_static: self.static_ratio * mu,
            mu_kinetic: mu,
            shape: self.shape,
        };
        m.validate()?;
        Ok(m)
    }
}

fn search_cfg(base: &SearchConfig, seed: u64, stream: u64) -> SearchConfig {
    SearchConfig {
        seed: derive_seed(seed, STREAM_SEARCH + stream),
        ..base.clone()
    }
}

/// Mean simulation error of `model` over `obs`.
fn mean_error(obs: &[PushObservation], model: &ObjectModel, sim: &SimConfig, w: f64) -> f64 {
    obs.iter().map(|o| sim_error(o, model, sim, w)).sum::<f64>() / obs.len() as f64
}

/// Mean position error of predictions under `model` on `test`.
pub fn prediction_error(test: &[PushRecord], model: &ObjectModel, sim: &SimConfig) -> Result<f64> {
    let mut total = 0.0;
    for r in test {
        let traj = physid_core::sim::simulate_push(&r.x_before, &r.action, model, sim)?;
        total += traj.final_pose().distance(&r.x_after);
    }
    Ok(total / test.len() as f64)
}

/// Identification method compared in the reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    #[serde(rename = "ges")]
    Ges,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "oracle")]
    Oracle,
    #[serde(rename = "power")]
    Power,
}

fn observations(records: &[PushRecord]) -> Vec<PushObservation> {
    records.iter().map(PushRecord::observation).collect()
}

/// Sequential belief updates over `obs`, returning the belief after each
/// prefix length in `checkpoints` (0 gives the prior). Update `n` starts
/// from the belief after `n - 1` pushes; its objective is the mean error
/// over the first `n` pushes.
pub fn sequential_beliefs(
    prior: &BeliefOverModels,
    obs: &[PushObservation],
    checkpoints: &[usize],
    search: &SearchConfig,
    sim: &SimConfig,
    rotation_weight: f64,
    seed: u64,
) -> Result<Vec<(usize, BeliefOverModels)>> {
    let mut out = Vec::new();
    let mut belief = prior.clone();
    let last = checkpoints.iter().copied().max().unwrap_or(0).min(obs.len());
    for n in 0..=last {
        if n > 0 {
            let cfg = search_cfg(search, seed, n as u64);
            belief = update_belief_batch(&belief, &obs[..n], &cfg, sim, rotation_weight)?.0;
        }
        if checkpoints.contains(&n) {
            out.push((n, belief.clone()));
        }
    }
    Ok(out)
}

/// Random search over the model set scored by the mean error over `obs`.
pub fn random_search_model(
    prior: &BeliefOverModels,
    obs: &[PushObservation],
    budget: usize,
    sim: &SimConfig,
    rotation_weight: f64,
    seed: u64,
) -> Result<(ObjectModel, SearchTrace)> {
    let trace = random_search(
        |i| mean_error(obs, &prior.model(i), sim, rotation_weight),
        &prior.theta_set,
        budget,
        seed,
    )?;
    Ok((prior.model(trace.best_index), trace))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentifyRow {
    pub method: Method,
    pub seed: u64,
    pub n_train: usize,
    pub test_error_m: f64,
    pub prior_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRow {
    pub method: Method,
    pub seed: u64,
    pub evaluations: usize,
    pub best_error: f64,
}

fn dataset_for_seed(
    cfg: &RunConfig,
    world: &WorldSpec,
    spec: &crate::dataset::SyntheticSpec,
    seed: u64,
) -> Result<Vec<PushRecord>> {
    match &cfg.dataset {
        Some(path) => Ok(load_push_records(path)?),
        None => {
            let gt = world.draw(derive_seed(seed, STREAM_WORLD))?;
            Ok(generate_synthetic_dataset(
                &gt,
                spec,
                derive_seed(seed, STREAM_DATA),
                &cfg.sim,
            )?)
        }
    }
}

/// Held-out prediction error after 0..n training pushes, for GES (sequential
/// belief updates) and random search (same evaluation budget per update).
pub fn identify_seed(cfg: &RunConfig, seed: u64) -> Result<Vec<IdentifyRow>> {
    let id = &cfg.identify;
    let records = dataset_for_seed(cfg, &id.world, &id.synthetic, seed)?;
    let usable = id.usable.min(records.len());
    if id.n_test == 0 || usable <= id.n_test {
        return Err(config_err("identify needs more usable records than test records"));
    }
    let (train, test) = train_test_split(
        &records[..usable],
        usable - id.n_test,
        id.n_test,
        derive_seed(seed, STREAM_SPLIT),
    )?;
    let obs = observations(&train);
    let prior = BeliefOverModels::uniform(cfg.theta.candidates()?, id.world.shape)?;
    let sizes: Vec<usize> = id.n_train.iter().copied().filter(|&n| n <= obs.len()).collect();
    let mut rows = Vec::new();
    for (n, belief) in sequential_beliefs(&prior, &obs, &sizes, &cfg.search, &cfg.sim, cfg.rotation_weight, seed)? {
        rows.push(IdentifyRow {
            method: Method::Ges,
            seed,
            n_train: n,
            test_error_m: prediction_error(&test, &map_estimate(&belief), &cfg.sim)?,
            prior_only: n == 0,
        });
    }
    for &n in &sizes {
        let model = if n == 0 {
            map_estimate(&prior)
        } else {
            let rs_seed = derive_seed(seed, STREAM_RS + 16 * n as u64);
            random_search_model(
                &prior,
                &obs[..n],
                cfg.search.eval_budget,
                &cfg.sim,
                cfg.rotation_weight,
                rs_seed,
            )?
            .0
        };
        rows.push(IdentifyRow {
            method: Method::Random,
            seed,
            n_train: n,
            test_error_m: prediction_error(&test, &model, &cfg.sim)?,
            prior_only: n == 0,
        });
    }
    Ok(rows)
}

/// Best simulation error found after each checkpoint number of evaluations
/// on the batch objective of the first `curve_pushes` records.
pub fn convergence_seed(cfg: &RunConfig, seed: u64) -> Result<Vec<CurveRow>> {
    let id = &cfg.identify;
    let records = dataset_for_seed(cfg, &id.world, &id.synthetic, seed)?;
    let n = id.curve_pushes.min(records.len());
    if n == 0 {
        return Err(config_err("convergence comparison needs at least one record"));
    }
    let obs = observations(&records[..n]);
    let prior = BeliefOverModels::uniform(cfg.theta.candidates()?, id.world.shape)?;
    let (_, ges) = update_belief_batch(
        &prior,
        &obs,
        &search_cfg(&cfg.search, seed, 0),
        &cfg.sim,
        cfg.rotation_weight,
    )?;
    let (_, rs) = random_search_model(
        &prior,
        &obs,
        cfg.search.eval_budget,
        &cfg.sim,
        cfg.rotation_weight,
        derive_seed(seed, STREAM_RS),
    )?;
    let mut rows = Vec::new();
    for (method, trace) in [(Method::Ges, &ges), (Method::Random, &rs)] {
        for &k in &id.checkpoints {
            rows.push(CurveRow {
                method,
                seed,
                evaluations: k,
                best_error: trace.best_after(k),
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictRow {
    pub method: Method,
    pub seed: u64,
    pub fold: usize,
    pub id: String,
    pub error_m: f64,
}

/// k-fold cross-validated prediction error. Each fold is predicted by a
/// model identified from the first `n_train` records of the other folds.
pub fn predict_seed(cfg: &RunConfig, seed: u64) -> Result<Vec<PredictRow>> {
    let p = &cfg.predict;
    let records = dataset_for_seed(cfg, &p.world, &p.synthetic, seed)?;
    let chosen = select(&records, p.select, derive_seed(seed, STREAM_SPLIT));
    let folds = k_folds(&chosen, p.folds, derive_seed(seed, STREAM_SPLIT + 1))?;
    let prior = BeliefOverModels::uniform(cfg.theta.candidates()?, p.world.shape)?;
    let mut rows = Vec::new();
    for (f, fold) in folds.iter().enumerate() {
        let train: Vec<PushRecord> = folds
            .iter()
            .enumerate()
            .filter(|(g, _)| *g != f)
            .flat_map(|(_, r)| r.iter().cloned())
            .take(p.n_train.max(1))
            .collect();
        let obs = observations(&train);
        let scfg = search_cfg(&cfg.search, seed, f as u64);
        let (belief, _) = update_belief_batch(&prior, &obs, &scfg, &cfg.sim, cfg.rotation_weight)?;
        let (rs_model, _) = random_search_model(
            &prior,
            &obs,
            cfg.search.eval_budget,
            &cfg.sim,
            cfg.rotation_weight,
            derive_seed(seed, STREAM_RS + f as u64),
        )?;
        for (method, model) in [(Method::Ges, map_estimate(&belief)), (Method::Random, rs_model)] {
            for r in fold {
                let pred = physid_core::sim::simulate_push(&r.x_before, &r.action, &model, &cfg.sim)?.final_pose();
                rows.push(PredictRow {
                    method,
                    seed,
                    fold: f,
                    id: r.id.clone(),
                    error_m: pred.distance(&r.x_after),
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoalPushRow {
    pub method: Method,
    pub seed: u64,
    pub final_error_m: f64,
    pub success: bool,
    pub dropped: bool,
}

fn grid_values(g: &GridSpec) -> Vec<f64> {
    if g.n == 1 {
        return vec![0.5 * (g.lo + g.hi)];
    }
    (0..g.n)
        .map(|i| g.lo + (g.hi - g.lo) * i as f64 / (g.n - 1) as f64)
        .collect()
}

fn random_values(g: &GridSpec, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..g.n)
        .map(|_| {
            if g.hi > g.lo {
                rng.random_range(g.lo..g.hi)
            } else {
                g.lo
            }
        })
        .collect()
}

/// Contact point on the face opposite to `heading` (world frame) for an
/// object at `pose`.
fn rear_contact(shape: &Shape, pose: &Pose, heading: f64) -> [f64; 2] {
    let back = pose.unrotate([-heading.cos(), -heading.sin()]);
    shape.boundary_point(back)
}

/// Heading set around `bearing`: offsets in degrees from a grid or drawn at
/// random.
pub fn heading_set(bearing: f64, g: &GridSpec, random: bool, fixed: FixedFields, seed: u64) -> Result<PolicySet> {
    let offsets: Vec<f64> = if random { random_values(g, seed) } else { grid_values(g) }
        .into_iter()
        .map(f64::to_radians)
        .collect();
    let params = offsets
        .iter()
        .map(|o| PolicyParam::direction(bearing + o, fixed))
        .collect();
    Ok(PolicySet::new(params, offsets)?)
}

/// Speed set from a grid or drawn at random.
pub fn speed_set(g: &GridSpec, random: bool, fixed: FixedFields, seed: u64) -> Result<PolicySet> {
    let speeds = if random { random_values(g, seed) } else { grid_values(g) };
    let params = speeds.iter().map(|&s| PolicyParam::speed(s, fixed)).collect();
    Ok(PolicySet::new(params, speeds)?)
}

/// Start pose for a goal-push trial: two straight pushes of the true object
/// away from the goal, along a random bearing, with a small yaw offset.
pub fn goal_push_start(cfg: &RunConfig, gt: &ObjectModel, seed: u64) -> Result<Pose> {
    let gp = &cfg.goal_push;
    let probe = PushAction::with_angle(
        rear_contact(&gt.shape, &Pose::default(), 0.0),
        0.0,
        gp.speed,
        gp.duration,
    )?;
    let step = physid_core::sim::simulate_push(&Pose::default(), &probe, gt, &cfg.sim)?
        .final_pose()
        .x;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_START));
    let bearing = rng.random_range(-std::f64::consts::PI..std::f64::consts::PI);
    let jitter = if gp.yaw_jitter > 0.0 {
        rng.random_range(-gp.yaw_jitter..gp.yaw_jitter)
    } else {
        0.0
    };
    let (lo, hi) = gp.start_scale;
    let scale = if hi > lo { rng.random_range(lo..hi) } else { lo };
    let d = scale * gp.pushes as f64 * step;
    Ok(Pose::new(
        gp.goal[0] - d * bearing.cos(),
        gp.goal[1] - d * bearing.sin(),
        bearing + jitter,
    ))
}

/// Plans each push under `model` and executes it under `gt`.
pub fn goal_push_trial(
    cfg: &RunConfig,
    gt: &ObjectModel,
    model: &ObjectModel,
    x0: &Pose,
    seed: u64,
) -> Result<(Pose, bool)> {
    let gp = &cfg.goal_push;
    let cost = CostSpec::new(gp.goal, gp.drop_penalty)?;
    let mut x = *x0;
    for k in 0..gp.pushes {
        let bearing = (gp.goal[1] - x.y).atan2(gp.goal[0] - x.x);
        let fixed = FixedFields {
            contact: rear_contact(&gt.shape, &x, bearing),
            duration: gp.duration,
            heading: bearing,
            speed: gp.speed,
            repeats: 1,
        };
        let set = heading_set(
            bearing,
            &gp.pi_grid,
            cfg.random_pi,
            fixed,
            derive_seed(seed, STREAM_PI + k as u64),
        )?;
        let scfg = search_cfg(&cfg.search, seed, 100 + k as u64);
        let (eta, _) = optimize_policy_for_model(&x, &set, model, &cost, &scfg, &cfg.sim)?;
        let traj = rollout_policy(&x, &eta, gt, &cfg.sim)?;
        x = traj.final_pose();
        if traj.dropped() {
            return Ok((x, true));
        }
    }
    Ok((x, false))
}

pub fn goal_push_seed(cfg: &RunConfig, seed: u64) -> Result<Vec<GoalPushRow>> {
    let gp = &cfg.goal_push;
    let gt = gp.world.draw(derive_seed(seed, STREAM_WORLD))?;
    let x0 = goal_push_start(cfg, &gt, seed)?;
    let spec = crate::dataset::SyntheticSpec {
        n_pushes: gp.id_pushes.max(1),
        ..gp.id_synthetic.clone()
    };
    let records = generate_synthetic_dataset(&gt, &spec, derive_seed(seed, STREAM_DATA), &cfg.sim)?;
    let obs = observations(&records[..gp.id_pushes.min(records.len())]);
    let prior = BeliefOverModels::uniform(cfg.theta.candidates()?, gt.shape)?;
    let ges = if obs.is_empty() {
        map_estimate(&prior)
    } else {
        let beliefs = sequential_beliefs(
            &prior,
            &obs,
            &[obs.len()],
            &cfg.search,
            &cfg.sim,
            cfg.rotation_weight,
            seed,
        )?;
        map_estimate(&beliefs[0].1)
    };
    let rs = if obs.is_empty() {
        map_estimate(&prior)
    } else {
        let budget = cfg.search.eval_budget;
        random_search_model(
            &prior,
            &obs,
            budget,
            &cfg.sim,
            cfg.rotation_weight,
            derive_seed(seed, STREAM_RS),
        )?
        .0
    };
    let mut rows = Vec::new();
    for (method, model) in [(Method::Oracle, gt), (Method::Ges, ges), (Method::Random, rs)] {
        let (x, dropped) = goal_push_trial(cfg, &gt, &model, &x0, seed)?;
        let err = ((x.x - gp.goal[0]).powi(2) + (x.y - gp.goal[1]).powi(2)).sqrt();
        rows.push(GoalPushRow {
            method,
            seed,
            final_error_m: err,
            success: !dropped && err <= gp.success_radius,
            dropped,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub method: Method,
    pub seed: u64,
    pub gt_mass: f64,
    pub gt_mu_kinetic: f64,
    /// Parameter executed in the final rollout (m/s).
    pub final_speed: f64,
    /// Final distance to the goal, or the drop penalty.
    pub final_error_m: f64,
    pub drops: usize,
    pub rollouts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchCurveRow {
    pub method: Method,
    pub seed: u64,
    pub rollout: usize,
    pub phase: &'static str,
    pub speed: f64,
    pub cost: Option<f64>,
    pub dropped: bool,
}

/// Simulator settings of the high-speed benchmark (its own table).
pub fn bench_sim(cfg: &RunConfig) -> SimConfig {
    let hs = &cfg.high_speed;
    SimConfig {
        table: TableBounds {
            x_min: hs.table_x.0,
            x_max: hs.table_x.1,
            y_min: hs.table_y.0,
            y_max: hs.table_y.1,
        },
        ..cfg.sim.clone()
    }
}

fn bench_fixed(cfg: &RunConfig, shape: &Shape) -> (Pose, FixedFields, CostSpec) {
    let hs = &cfg.high_speed;
    let heading = (hs.goal[1] - hs.start[1]).atan2(hs.goal[0] - hs.start[0]);
    let x0 = Pose::new(hs.start[0], hs.start[1], 0.0);
    let fixed = FixedFields {
        contact: rear_contact(shape, &x0, heading),
        duration: hs.push_duration,
        heading,
        speed: 0.0,
        repeats: 1,
    };
    let cost = CostSpec {
        goal: hs.goal,
        drop_penalty: hs.drop_penalty,
    };
    (x0, fixed, cost)
}

/// One benchmark seed: the identify-then-plan arm spends `rollout_budget −
/// 1` low-speed identification pushes (fitted jointly) and one planned
/// execution; the PoWER
/// arm spends `rollout_budget − 1` learning rollouts and one execution of
/// its final mean. Both act on the same ground-truth object.
pub fn high_speed_seed(cfg: &RunConfig, seed: u64) -> Result<(Vec<BenchRow>, Vec<BenchCurveRow>)> {
    let hs = &cfg.high_speed;
    if hs.rollout_budget == 0 {
        return Err(config_err("rollout_budget must be at least 1"));
    }
    let sim = bench_sim(cfg);
    sim.validate()?;
    let gt = hs.world.draw(derive_seed(seed, STREAM_WORLD))?;
    let (x0, fixed, cost) = bench_fixed(cfg, &gt.shape);
    if !sim.table.contains(hs.goal[0], hs.goal[1]) || !sim.table.contains(x0.x, x0.y) {
        return Err(config_err("start and goal must lie on the benchmark table"));
    }
    let n_id = hs.rollout_budget - 1;
    let mut rows = Vec::new();
    let mut curve = Vec::new();

    // identify, then plan under the MAP model
    let prior = BeliefOverModels::uniform(hs.theta.candidates()?, gt.shape)?;
    let mut id_drops = 0;
    let belief = if n_id > 0 {
        let spec = crate::dataset::SyntheticSpec {
            n_pushes: n_id,
            ..hs.id_synthetic.clone()
        };
        let records = generate_synthetic_dataset(&gt, &spec, derive_seed(seed, STREAM_DATA), &sim)?;
        for (i, r) in records.iter().enumerate() {
            let dropped = !sim.table.contains(r.x_after.x, r.x_after.y);
            id_drops += usize::from(dropped);
            curve.push(BenchCurveRow {
                method: Method::Ges,
                seed,
                rollout: i,
                phase: "identify",
                speed: r.action.speed,
                cost: None,
                dropped,
            });
        }
        let obs = observations(&records);
        let scfg = search_cfg(&cfg.search, seed, 1);
        update_belief_batch(&prior, &obs, &scfg, &sim, cfg.rotation_weight)?.0
    } else {
        prior.clone()
    };
    let model = map_estimate(&belief);
    let set = speed_set(&hs.pi_grid, cfg.random_pi, fixed, derive_seed(seed, STREAM_PI))?;
    let scfg = search_cfg(&cfg.search, seed, 500);
    let (eta, _) = optimize_policy_for_model(&x0, &set, &model, &cost, &scfg, &sim)?;
    let traj = rollout_policy(&x0, &eta, &gt, &sim)?;
    let final_cost = outcome_cost(&traj, &cost);
    curve.push(BenchCurveRow {
        method: Method::Ges,
        seed,
        rollout: n_id,
        phase: "execute",
        speed: eta.value(),
        cost: Some(final_cost),
        dropped: traj.dropped(),
    });
    rows.push(BenchRow {
        method: Method::Ges,
        seed,
        gt_mass: gt.mass,
        gt_mu_kinetic: gt.mu_kinetic,
        final_speed: eta.value(),
        final_error_m: final_cost,
        drops: id_drops + usize::from(traj.dropped()),
        rollouts: n_id + 1,
    });

    // PoWER directly on the true object
    let env = |speed: f64| -> RolloutResult {
        let p = PolicyParam::speed(speed.max(0.0), fixed);
        match rollout_policy(&x0, &p, &gt, &sim) {
            Ok(t) => RolloutResult {
                cost: outcome_cost(&t, &cost),
                dropped: t.dropped(),
            },
            Err(_) => RolloutResult {
                cost: physid_core::LARGE,
                dropped: false,
            },
        }
    };
    let pcfg = PowerConfig {
        iterations: n_id,
        rollouts_per_iter: 1,
        seed: derive_seed(seed, STREAM_POWER),
        ..cfg.power.clone()
    };
    let run = power_iterate(&pcfg, env)?;
    for (i, s) in run.curve.iter().enumerate() {
        curve.push(BenchCurveRow {
            method: Method::Power,
            seed,
            rollout: i,
            phase: "learn",
            speed: s.eta.max(0.0),
            cost: Some(s.cost),
            dropped: s.dropped,
        });
    }
    let last = env(run.mean);
    curve.push(BenchCurveRow {
        method: Method::Power,
        seed,
        rollout: run.curve.len(),
        phase: "execute",
        speed: run.mean.max(0.0),
        cost: Some(last.cost),
        dropped: last.dropped,
    });
    rows.push(BenchRow {
        method: Method::Power,
        seed,
        gt_mass: gt.mass,
        gt_mu_kinetic: gt.mu_kinetic,
        final_speed: run.mean.max(0.0),
        final_error_m: last.cost,
        drops: run.drops() + usize::from(last.dropped),
        rollouts: run.curve.len() + 1,
    });
    Ok((rows, curve))
}

fn outcome_cost(traj: &Trajectory, cost: &CostSpec) -> f64 {
    if traj.dropped() {
        cost.drop_penalty
    } else {
        cost.distance(&traj.final_pose())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
}

/// Trajectory of the configured push sequence.
pub fn simulate(cfg: &RunConfig) -> Result<Trajectory> {
    let s = &cfg.simulate;
    Ok(rollout(&s.start, &s.pushes, &s.model, &cfg.sim)?)
}

/// Runs `f` for every configured seed on the rayon pool, in seed order.
pub fn per_seed<T, F>(cfg: &RunConfig, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&RunConfig, u64) -> Result<T> + Sync,
{
    cfg.seeds.par_iter().map(|&s| f(cfg, s)).collect()
}

/// Candidate set of the configured model grid; exposed for reports.
pub fn theta_candidates(cfg: &RunConfig) -> Result<CandidateSet> {
    Ok(cfg.theta.candidates()?)
}
