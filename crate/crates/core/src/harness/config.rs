use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use super::{HarnessError, PlannerKind, PlannerSpec, SearchSettings, TableFormat};
use crate::planner::Budget;
use crate::problems::ProblemParams;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    InvalidValue { key: String, value: String, reason: String },
}

/// One experiment: a problem, a planner and the episode protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: String,
    pub problem_params: ProblemParams,
    pub planner: PlannerKind,
    pub horizon: usize,
    pub search: SearchSettings,
    pub episodes: usize,
    pub steps: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub format: TableFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: "tiger".into(),
            problem_params: ProblemParams::new(),
            planner: PlannerKind::Random,
            horizon: 1,
            search: SearchSettings::default(),
            episodes: 200,
            steps: 40,
            seed: 0,
            output: None,
            format: TableFormat::Csv,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: ToString,
{
    value.parse().map_err(|e: T::Err| ConfigError::InvalidValue { key: key.into(), value: value.into(), reason: e.to_string() })
}

impl ExperimentConfig {
    /// Reads a flat `key = value` file; `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { line: i + 1, text: raw.into() })?;
            c.apply(k.trim(), v.trim())?;
        }
        Ok(c)
    }

    /// Sets one key. `problem.<name>` and `problem_arg = name=value` set
    /// problem parameters; `gamma` is forwarded to the problem.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        if let Some(name) = key.strip_prefix("problem.") {
            self.problem_params.set(name, value);
            return Ok(());
        }
        match key {
            "problem" => self.problem = value.into(),
            "problem_arg" => {
                let (k, v) = ProblemParams::parse_pair(value).ok_or_else(|| ConfigError::InvalidValue {
                    key: key.into(),
                    value: value.into(),
                    reason: "expected name=value".into(),
                })?;
                self.problem_params.set(&k, v);
            }
            "gamma" => {
                let g: f64 = parse(key, value)?;
                self.problem_params.set("gamma", g);
            }
            "planner" => self.planner = parse(key, value)?,
            "horizon" => self.horizon = parse(key, value)?,
            "beta" => self.search.beta = parse(key, value)?,
            "descents" => self.search.budget = Budget::Descents(parse(key, value)?),
            "time_ms" => self.search.budget = Budget::WallTime(Duration::from_millis(parse(key, value)?)),
            "ucb" => self.search.c_ucb = Some(parse(key, value)?),
            "variant" => self.search.variant = parse(key, value)?,
            "sampling" => self.search.sampling = parse(key, value)?,
            "rollout" => self.search.rollout = parse(key, value)?,
            "epsilon" => self.search.epsilon = parse(key, value)?,
            "episodes" => self.episodes = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.output = Some(PathBuf::from(value)),
            "format" => self.format = parse(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.episodes == 0 {
            return Err(HarnessError::Config("episodes must be at least 1".into()));
        }
        if self.steps == 0 {
            return Err(HarnessError::Config("steps must be at least 1".into()));
        }
        if let Some(c) = self.search.c_ucb {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(HarnessError::Config(format!("ucb constant must be finite and >= 0, got {c}")));
            }
        }
        if !(self.search.epsilon > 0.0 && self.search.epsilon <= 1.0) {
            return Err(HarnessError::Config(format!("epsilon must lie in (0, 1], got {}", self.search.epsilon)));
        }
        self.planner_spec()?.validate()
    }

    pub fn planner_spec(&self) -> Result<PlannerSpec, HarnessError> {
        Ok(match self.planner {
            PlannerKind::Random => PlannerSpec::Random,
            PlannerKind::Lookahead => PlannerSpec::Lookahead { horizon: self.horizon },
            PlannerKind::RhoPomcp => PlannerSpec::RhoPomcp(self.search.clone()),
            PlannerKind::RhoBeliefUct => PlannerSpec::RhoBeliefUct(self.search.clone()),
        })
    }
}
