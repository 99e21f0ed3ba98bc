//! Benchmark problems as ready-to-plan [`ProblemInstance`] values.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::model::cassandra::CassandraError;
use crate::model::{Belief, ExplicitPomdp, GenerativeModel, Labels, ModelError};
use crate::reward::RewardSpec;

mod classic;
pub mod grid;
mod localization;

pub use classic::{camera_clean, lost_or_found, rock_sampling, tiger, CameraCleanConfig, CameraLens, RockLayout};
pub use grid::{parse_grid, Dir, GridError, GridSpec};
pub use localization::{grid_x, maze, museum, seek_and_seek, MuseumReward};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem {0:?}")]
    UnknownProblem(String),
    #[error("problem {problem} needs a .POMDP fixture (set `path`): {reason}")]
    MissingFixture { problem: String, reason: String },
    #[error("invalid value {value:?} for parameter {key:?}")]
    InvalidParameter { key: String, value: String },
    #[error("unknown parameter {key:?} for problem {problem}")]
    UnknownParameter { problem: String, key: String },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Parse(#[from] CassandraError),
}

/// Every name accepted by [`build_problem`].
pub const PROBLEM_NAMES: &[&str] = &[
    "tiger",
    "tiger_grid",
    "hallway2",
    "rock_sampling",
    "museum_entropy",
    "museum_threshold",
    "maze_cross",
    "maze_lines",
    "maze_hole",
    "maze_dots",
    "grid_x",
    "grid_not_x",
    "seek_and_seek",
    "camera_clean",
    "lost_or_found",
];

/// Parameters each problem understands, besides the universal `gamma`.
pub fn problem_parameters(name: &str) -> &'static [&'static str] {
    match name {
        "tiger" => &["path"],
        "tiger_grid" | "hallway2" => &["path"],
        "rock_sampling" => &["n", "k", "seed"],
        "museum_entropy" | "museum_threshold" => &["size"],
        "maze_dots" => &["n"],
        "grid_x" | "grid_not_x" => &["toric"],
        "seek_and_seek" => &["reward"],
        "camera_clean" => &["lens", "dirt", "reward"],
        "lost_or_found" => &["cells"],
        _ => &[],
    }
}

/// String-valued problem parameters (`k=v` pairs from a CLI or config file).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProblemParams(BTreeMap<String, String>);

impl ProblemParams {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.0.insert(key.to_string(), value.to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Parses `key` as `T`, falling back to `default` when absent.
    pub fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T, ProblemError> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|_| ProblemError::InvalidParameter { key: key.into(), value: v.into() }),
        }
    }

    /// Parses a single `k=v` token.
    pub fn parse_pair(token: &str) -> Option<(String, String)> {
        let (k, v) = token.split_once('=')?;
        let k = k.trim();
        (!k.is_empty()).then(|| (k.to_string(), v.trim().to_string()))
    }
}

impl std::fmt::Display for ProblemParams {
    /// `k=v` pairs joined by `;`, in key order.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (k, v) in &self.0 {
            if !first {
                f.write_str(";")?;
            }
            first = false;
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

impl<K: ToString, V: ToString> FromIterator<(K, V)> for ProblemParams {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.to_string(), v.to_string())).collect())
    }
}

/// A model, its reward and the UCB constant the benchmark tables use.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub model: ExplicitPomdp,
    pub reward: RewardSpec,
    pub default_c_ucb: f64,
}

impl ProblemInstance {
    pub fn new(name: impl Into<String>, model: ExplicitPomdp, reward: RewardSpec, default_c_ucb: f64) -> Self {
        Self { name: name.into(), model, reward, default_c_ucb }
    }

    pub fn gamma(&self) -> f64 {
        self.model.gamma()
    }

    pub fn b0(&self) -> &Belief {
        self.model.initial_belief()
    }

    pub fn labels(&self) -> &Labels {
        self.model.labels()
    }

    pub fn rho_max(&self) -> f64 {
        self.reward.rho_max(self.model.n_states())
    }

    /// Replaces the discount factor.
    pub fn with_gamma(mut self, gamma: f64) -> Result<Self, ProblemError> {
        self.model = self.model.with_gamma(gamma)?;
        Ok(self)
    }

    /// Checks that reward and model dimensions agree.
    pub fn validate(&self) -> Result<(), String> {
        let ns = self.model.n_states();
        match &self.reward {
            RewardSpec::StateLinear { rewards, n_actions } => {
                if *n_actions != self.model.n_actions() || rewards.len() != ns * n_actions {
                    return Err(format!("state reward table has {} entries for {}×{}", rewards.len(), ns, self.model.n_actions()));
                }
            }
            RewardSpec::NegEntropy { projection }
            | RewardSpec::EntropyDifference { projection }
            | RewardSpec::BeliefThreshold { projection, .. } => check_projection(projection, ns)?,
            RewardSpec::SignedL1FromTarget { target, projection, .. } => {
                check_projection(projection, ns)?;
                if target.len() != projection.n_values(ns) {
                    return Err("target length differs from the projected variable".into());
                }
            }
            RewardSpec::LostOrFoundComposite { location, status, .. } => {
                check_projection(location, ns)?;
                check_projection(status, ns)?;
                if status.n_values(ns) != 2 {
                    return Err("status projection must have two values".into());
                }
            }
        }
        if !(0.0..1.0).contains(&self.gamma()) {
            return Err(format!("gamma {} outside [0, 1)", self.gamma()));
        }
        Ok(())
    }
}

fn check_projection(p: &crate::reward::Projection, n_states: usize) -> Result<(), String> {
    match p {
        crate::reward::Projection::Identity => Ok(()),
        crate::reward::Projection::Map { values, n_values } => {
            if values.len() != n_states {
                Err(format!("projection covers {} states, model has {}", values.len(), n_states))
            } else if values.iter().any(|&v| v >= *n_values) {
                Err("projection value out of range".into())
            } else {
                Ok(())
            }
        }
    }
}

/// Builds a named benchmark. Every problem accepts `gamma`; see
/// [`problem_parameters`] for the rest.
pub fn build_problem(name: &str, params: &ProblemParams) -> Result<ProblemInstance, ProblemError> {
    if !PROBLEM_NAMES.contains(&name) {
        return Err(ProblemError::UnknownProblem(name.to_string()));
    }
    let allowed = problem_parameters(name);
    if let Some((key, _)) = params.iter().find(|(k, _)| *k != "gamma" && !allowed.contains(k)) {
        return Err(ProblemError::UnknownParameter { problem: name.into(), key: key.into() });
    }
    let problem = match name {
        "tiger" => match params.get("path") {
            Some(path) => from_fixture(name, path, 360.0)?,
            None => tiger()?,
        },
        "tiger_grid" | "hallway2" => {
            let path = params.get("path").ok_or_else(|| ProblemError::MissingFixture {
                problem: name.into(),
                reason: "no path given".into(),
            })?;
            from_fixture(name, path, 1.0)?
        }
        "rock_sampling" => {
            let n = params.parse_or("n", 4usize)?;
            let k = params.parse_or("k", n)?;
            let seed = params.parse_or("seed", 0u64)?;
            if n == 0 || k > n * n - 1 {
                return Err(ProblemError::InvalidParameter { key: "k".into(), value: k.to_string() });
            }
            rock_sampling(&RockLayout::random(n, k, seed))?
        }
        "museum_entropy" | "museum_threshold" => {
            let size = params.parse_or("size", 4usize)?;
            if size < 3 {
                return Err(ProblemError::InvalidParameter { key: "size".into(), value: size.to_string() });
            }
            let kind = if name == "museum_entropy" { MuseumReward::NegEntropy } else { MuseumReward::Threshold(0.8) };
            museum(size, kind)?
        }
        "maze_cross" => maze(name, &parse_grid(grid::MAZE_CROSS)?, 3.2)?,
        "maze_lines" => maze(name, &parse_grid(grid::MAZE_LINES)?, 4.3)?,
        "maze_hole" => maze(name, &parse_grid(grid::MAZE_HOLE)?, 4.2)?,
        "maze_dots" => {
            let n = params.parse_or("n", 6usize)?;
            if n < 2 {
                return Err(ProblemError::InvalidParameter { key: "n".into(), value: n.to_string() });
            }
            let c = match n {
                6 => 3.6,
                8 => 4.2,
                10 => 4.6,
                12 => 5.0,
                _ => 3.6,
            };
            maze(name, &grid::maze_dots(n), c)?
        }
        "grid_x" | "grid_not_x" => {
            let toric = params.parse_or("toric", true)?;
            grid_x(name == "grid_x", toric)?
        }
        "seek_and_seek" => {
            let reward = match params.get("reward").unwrap_or("entropy_difference") {
                "entropy_difference" => false,
                "neg_entropy" => true,
                other => return Err(ProblemError::InvalidParameter { key: "reward".into(), value: other.into() }),
            };
            seek_and_seek(reward)?
        }
        "camera_clean" => {
            let defaults = CameraCleanConfig::default();
            let dirt = params.parse_or("dirt", defaults.dirt)?;
            if !(0.0..=1.0).contains(&dirt) {
                return Err(ProblemError::InvalidParameter { key: "dirt".into(), value: dirt.to_string() });
            }
            let object_reward = match params.get("reward").unwrap_or("object") {
                "object" => true,
                "state" => false,
                other => return Err(ProblemError::InvalidParameter { key: "reward".into(), value: other.into() }),
            };
            camera_clean(&CameraCleanConfig { lens: params.parse_or("lens", defaults.lens)?, dirt, object_reward })?
        }
        "lost_or_found" => {
            let cells = params.parse_or("cells", 6usize)?;
            if cells < 2 {
                return Err(ProblemError::InvalidParameter { key: "cells".into(), value: cells.to_string() });
            }
            lost_or_found(cells)?
        }
        _ => unreachable!("name checked against PROBLEM_NAMES"),
    };
    match params.get("gamma") {
        Some(_) => {
            let gamma = params.parse_or("gamma", problem.gamma())?;
            problem.with_gamma(gamma)
        }
        None => Ok(problem),
    }
}

/// Loads a Cassandra `.POMDP` file as a state-reward problem.
pub fn from_fixture(name: &str, path: &str, c_ucb: f64) -> Result<ProblemInstance, ProblemError> {
    let text = std::fs::read_to_string(PathBuf::from(path)).map_err(|e| ProblemError::MissingFixture {
        problem: name.into(),
        reason: format!("{path}: {e}"),
    })?;
    let model = crate::model::cassandra::parse_cassandra_pomdp(&text)?;
    from_model(name, model, c_ucb)
}

/// Wraps a model with state rewards into a problem.
pub fn from_model(name: &str, model: ExplicitPomdp, c_ucb: f64) -> Result<ProblemInstance, ProblemError> {
    let rewards = model
        .state_reward_matrix()
        .ok_or_else(|| ModelError::Invalid(format!("{name} has no state rewards")))?
        .to_vec();
    let reward = RewardSpec::state_linear(&rewards, model.n_actions());
    Ok(ProblemInstance::new(name, model, reward, c_ucb))
}
