//! Run configuration: one TOML file with a section per component, plus the
//! small spec strings accepted on the command line.

use std::path::{Path, PathBuf};

use physid_core::baselines::PowerConfig;
use physid_core::entropy_search::SearchConfig;
use physid_core::identification::{ThetaGrid, DEFAULT_ROTATION_WEIGHT};
use physid_core::sim::{ObjectModel, Pose, PushAction, Shape, SimConfig};
use serde::{Deserialize, Serialize};

use crate::dataset::SyntheticSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Toml {
        path: String,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid {what} '{text}': {reason}")]
    Spec {
        what: &'static str,
        text: String,
        reason: String,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Range of ground-truth objects drawn per seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WorldSpec {
    pub shape: Shape,
    pub mass: (f64, f64),
    pub mu_kinetic: (f64, f64),
    pub static_ratio: f64,
}

impl Default for WorldSpec {
    fn default() -> Self {
        Self {
            shape: Shape::Rectangle {
                width: 0.09,
                depth: 0.09,
            },
            mass: (0.05, 2.0),
            mu_kinetic: (0.05, 0.8),
            static_ratio: 1.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentifyConfig {
    pub world: WorldSpec,
    pub synthetic: SyntheticSpec,
    /// Records kept out of the generated pushes.
    pub usable: usize,
    pub n_test: usize,
    /// Training-set sizes to evaluate; each is a prefix of the training split.
    pub n_train: Vec<usize>,
    /// Pushes in the batch objective of the convergence comparison.
    pub curve_pushes: usize,
    /// Evaluation counts reported in the convergence table.
    pub checkpoints: Vec<usize>,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            world: WorldSpec::default(),
            synthetic: SyntheticSpec::default(),
            usable: 9,
            n_test: 3,
            n_train: vec![0, 1, 3, 6],
            curve_pushes: 3,
            checkpoints: vec![10, 20, 40, 60],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PredictConfig {
    pub world: WorldSpec,
    pub synthetic: SyntheticSpec,
    /// Records drawn from the dataset before cross-validation.
    pub select: usize,
    pub folds: usize,
    /// Training pushes per fold, taken from the other folds.
    pub n_train: usize,
}

impl Default for PredictConfig {
    fn default() -> Self {
        Self {
            world: WorldSpec::default(),
            synthetic: SyntheticSpec {
                n_pushes: 200,
                ..SyntheticSpec::default()
            },
            select: 200,
            folds: 10,
            n_train: 6,
        }
    }
}

/// Heading or speed grid searched by the planners.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GoalPushConfig {
    pub world: WorldSpec,
    pub goal: [f64; 2],
    /// Heading offsets around the bearing to the goal (degrees).
    pub pi_grid: GridSpec,
    pub speed: f64,
    pub duration: f64,
    pub pushes: usize,
    pub success_radius: f64,
    /// Largest yaw misalignment of the start pose (rad).
    pub yaw_jitter: f64,
    /// Start distance as a fraction of `pushes` straight pushes of the true
    /// object, drawn uniformly from this range.
    pub start_scale: (f64, f64),
    /// Identification pushes per trial for the identified arms.
    pub id_pushes: usize,
    pub id_synthetic: SyntheticSpec,
    pub drop_penalty: f64,
}

impl Default for GoalPushConfig {
    fn default() -> Self {
        Self {
            world: WorldSpec::default(),
            goal: [0.0, 0.0],
            pi_grid: GridSpec {
                lo: -30.0,
                hi: 30.0,
                n: 25,
            },
            speed: 0.15,
            duration: 0.5,
            pushes: 2,
            success_radius: 0.01,
            yaw_jitter: 0.05,
            start_scale: (1.0, 1.0),
            id_pushes: 3,
            id_synthetic: SyntheticSpec {
                position_noise: 0.005,
                ..SyntheticSpec::default()
            },
            drop_penalty: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HighSpeedConfig {
    pub world: WorldSpec,
    pub theta: ThetaGrid,
    pub start: [f64; 2],
    pub goal: [f64; 2],
    /// Table used for the benchmark (overrides the simulator table).
    pub table_x: (f64, f64),
    pub table_y: (f64, f64),
    /// Speed grid (m/s).
    pub pi_grid: GridSpec,
    pub push_duration: f64,
    /// Rollouts available to each arm, including the final execution.
    pub rollout_budget: usize,
    pub id_synthetic: SyntheticSpec,
    pub drop_penalty: f64,
}

impl Default for HighSpeedConfig {
    fn default() -> Self {
        Self {
            world: WorldSpec {
                shape: Shape::Disk { radius: 0.035 },
                mass: (0.2, 1.0),
                mu_kinetic: (0.05, 0.25),
                static_ratio: 1.2,
            },
            theta: ThetaGrid {
                mass: (0.2, 1.0),
                mass_steps: 20,
                mu_kinetic: (0.05, 0.25),
                mu_steps: 20,
                static_ratio: 1.2,
            },
            start: [-0.6, 0.0],
            goal: [0.4, 0.0],
            table_x: (-0.8, 0.6),
            table_y: (-0.4, 0.4),
            pi_grid: GridSpec {
                lo: 0.1,
                hi: 2.0,
                n: 30,
            },
            push_duration: 0.2,
            rollout_budget: 10,
            id_synthetic: SyntheticSpec {
                speed: (0.1, 0.4),
                ..SyntheticSpec::default()
            },
            drop_penalty: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulateConfig {
    pub model: ObjectModel,
    pub start: Pose,
    pub pushes: Vec<PushAction>,
    /// Keep every n-th pose in the trajectory table.
    pub stride: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            model: ObjectModel {
                mass: 0.5,
                mu_static: 0.36,
                mu_kinetic: 0.3,
                shape: Shape::Rectangle {
                    width: 0.09,
                    depth: 0.09,
                },
            },
            start: Pose::default(),
            pushes: vec![PushAction {
                contact: [-0.045, 0.0],
                direction: [1.0, 0.0],
                speed: 0.3,
                duration: 0.3,
            }],
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seeds: Vec<u64>,
    /// Record file used instead of synthetic data (identify, predict).
    pub dataset: Option<PathBuf>,
    /// Sample Π uniformly at random instead of on a grid.
    pub random_pi: bool,
    /// Metres charged per radian of yaw error.
    pub rotation_weight: f64,
    pub search: SearchConfig,
    pub sim: SimConfig,
    pub theta: ThetaGrid,
    pub power: PowerConfig,
    pub identify: IdentifyConfig,
    pub predict: PredictConfig,
    pub goal_push: GoalPushConfig,
    pub high_speed: HighSpeedConfig,
    pub simulate: SimulateConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seeds: (0..10).collect(),
            dataset: None,
            random_pi: false,
            rotation_weight: DEFAULT_ROTATION_WEIGHT,
            search: SearchConfig::default(),
            sim: SimConfig::default(),
            theta: ThetaGrid::default(),
            power: PowerConfig::default(),
            identify: IdentifyConfig::default(),
            predict: PredictConfig::default(),
            goal_push: GoalPushConfig::default(),
            high_speed: HighSpeedConfig::default(),
            simulate: SimulateConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        toml::from_str(&text).map_err(|source| ConfigError::Toml {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |e: physid_core::Error| ConfigError::Invalid(e.to_string());
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("at least one seed is required".into()));
        }
        self.search.validate().map_err(bad)?;
        self.sim.validate().map_err(bad)?;
        self.power.validate().map_err(bad)?;
        self.theta.candidates().map_err(bad)?;
        if !(self.rotation_weight >= 0.0) {
            return Err(ConfigError::Invalid("rotation_weight must be non-negative".into()));
        }
        Ok(())
    }
}

fn spec_err(what: &'static str, text: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Spec {
        what,
        text: text.to_string(),
        reason: reason.into(),
    }
}

/// Seeds as a comma-separated list of integers and `a..b` ranges
/// (end exclusive), e.g. `0..10,42`.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, ConfigError> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let num = |s: &str| {
            s.trim()
                .parse::<u64>()
                .map_err(|e| spec_err("seed list", text, e.to_string()))
        };
        match part.split_once("..") {
            Some((a, b)) => {
                let (a, b) = (num(a)?, num(b)?);
                if a >= b {
                    return Err(spec_err("seed list", text, "empty range"));
                }
                out.extend(a..b);
            }
            None => out.push(num(part)?),
        }
    }
    if out.is_empty() {
        return Err(spec_err("seed list", text, "no seeds"));
    }
    Ok(out)
}

fn parse_f64(what: &'static str, text: &str, s: &str) -> Result<f64, ConfigError> {
    s.trim().parse::<f64>().map_err(|e| spec_err(what, text, e.to_string()))
}

fn parse_usize(what: &'static str, text: &str, s: &str) -> Result<usize, ConfigError> {
    s.trim()
        .parse::<usize>()
        .map_err(|e| spec_err(what, text, e.to_string()))
}

/// `LO:HI:N`.
pub fn parse_grid(text: &str) -> Result<GridSpec, ConfigError> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err(spec_err("grid", text, "expected LO:HI:N"));
    };
    let g = GridSpec {
        lo: parse_f64("grid", text, lo)?,
        hi: parse_f64("grid", text, hi)?,
        n: parse_usize("grid", text, n)?,
    };
    if g.n == 0 || !(g.lo <= g.hi) {
        return Err(spec_err("grid", text, "need N >= 1 and LO <= HI"));
    }
    Ok(g)
}

/// `MASS_LO:MASS_HI:N,MU_LO:MU_HI:M`, optionally followed by `,RATIO` for
/// the static-to-kinetic friction ratio.
pub fn parse_theta_grid(text: &str, base: &ThetaGrid) -> Result<ThetaGrid, ConfigError> {
    let parts: Vec<&str> = text.split(',').collect();
    if !(2..=3).contains(&parts.len()) {
        return Err(spec_err(
            "theta grid",
            text,
            "expected MASS_LO:MASS_HI:N,MU_LO:MU_HI:M[,RATIO]",
        ));
    }
    let m = parse_grid(parts[0]).map_err(|_| spec_err("theta grid", text, "bad mass axis"))?;
    let mu = parse_grid(parts[1]).map_err(|_| spec_err("theta grid", text, "bad friction axis"))?;
    let static_ratio = match parts.get(2) {
        Some(r) => parse_f64("theta grid", text, r)?,
        None => base.static_ratio,
    };
    let grid = ThetaGrid {
        mass: (m.lo, m.hi),
        mass_steps: m.n,
        mu_kinetic: (mu.lo, mu.hi),
        mu_steps: mu.n,
        static_ratio,
    };
    grid.candidates()
        .map_err(|e| spec_err("theta grid", text, e.to_string()))?;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds() {
        assert_eq!(parse_seeds("0..3,7").unwrap(), vec![0, 1, 2, 7]);
        assert!(parse_seeds("").is_err());
        assert!(parse_seeds("3..3").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_theta_grid("0.1:1:10,0.05:0.5:10", &ThetaGrid::default()).unwrap();
        assert_eq!(g.mass_steps * g.mu_steps, 100);
        assert_eq!(g.static_ratio, 1.2);
        assert!(parse_theta_grid("0.1:1:10", &ThetaGrid::default()).is_err());
        assert_eq!(parse_grid("-30:30:25").unwrap().n, 25);
        assert!(parse_grid("1:0:3").is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let cfg = RunConfig::default();
        let back: RunConfig = toml::from_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }
}
