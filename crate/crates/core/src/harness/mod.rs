//! Episodes, experiments and result tables.
//!
//! Every planner is scored on the exact belief sequence the harness keeps
//! alongside the hidden state, never on its own estimate.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{lookahead_plan, random_plan};
use crate::model::{ActionId, GenerativeModel, ModelError};
use crate::planner::{advance_root, belief_uct_plan, pomcp_plan, Budget, PlanError, PlannerConfig, RolloutPolicy, Sampling, SearchTree, Variant};
use crate::problems::{build_problem, ProblemError, ProblemInstance};

mod config;
mod table;

pub use config::{ConfigError, ExperimentConfig};
pub use table::{emit_table, format_sig, parse_csv_table, TableFormat};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Tree-search settings shared by both ρ-MCTS planners. `c_ucb = None`
/// takes the problem's default constant.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSettings {
    pub c_ucb: Option<f64>,
    pub beta: usize,
    pub budget: Budget,
    pub variant: Variant,
    pub sampling: Sampling,
    pub rollout: RolloutPolicy,
    pub epsilon: f64,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            c_ucb: None,
            beta: 50,
            budget: Budget::Descents(10_000),
            variant: Variant::Vanilla,
            sampling: Sampling::Importance,
            rollout: RolloutPolicy::None,
            epsilon: 0.01,
        }
    }
}

impl SearchSettings {
    /// The full planner configuration for `problem`, seeded with `seed`.
    pub fn resolve(&self, problem: &ProblemInstance, seed: u64) -> PlannerConfig {
        let mut c = PlannerConfig::new(self.c_ucb.unwrap_or(problem.default_c_ucb), problem.gamma())
            .with_beta(self.beta)
            .with_budget(self.budget)
            .with_variant(self.variant)
            .with_sampling(self.sampling)
            .with_rollout(self.rollout)
            .with_seed(seed);
        c.epsilon_cutoff = self.epsilon;
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlannerKind {
    Random,
    Lookahead,
    RhoPomcp,
    RhoBeliefUct,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 4] = [PlannerKind::Random, PlannerKind::Lookahead, PlannerKind::RhoPomcp, PlannerKind::RhoBeliefUct];

    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::Random => "random",
            PlannerKind::Lookahead => "lookahead",
            PlannerKind::RhoPomcp => "rho-pomcp",
            PlannerKind::RhoBeliefUct => "rho-belief-uct",
        }
    }
}

impl FromStr for PlannerKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        PlannerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown planner {s:?} (expected random, lookahead, rho-pomcp or rho-belief-uct)"))
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A fully specified decision rule.
#[derive(Debug, Clone, PartialEq)]
pub enum PlannerSpec {
    Random,
    Lookahead { horizon: usize },
    RhoPomcp(SearchSettings),
    RhoBeliefUct(SearchSettings),
}

impl PlannerSpec {
    pub fn kind(&self) -> PlannerKind {
        match self {
            PlannerSpec::Random => PlannerKind::Random,
            PlannerSpec::Lookahead { .. } => PlannerKind::Lookahead,
            PlannerSpec::RhoPomcp(_) => PlannerKind::RhoPomcp,
            PlannerSpec::RhoBeliefUct(_) => PlannerKind::RhoBeliefUct,
        }
    }

    /// `k=v` description of the planner settings for result tables.
    pub fn params(&self, problem: &ProblemInstance) -> String {
        match self {
            PlannerSpec::Random => String::new(),
            PlannerSpec::Lookahead { horizon } => format!("horizon={horizon}"),
            PlannerSpec::RhoPomcp(s) | PlannerSpec::RhoBeliefUct(s) => {
                let budget = match s.budget {
                    Budget::Descents(n) => format!("descents={n}"),
                    Budget::WallTime(d) => format!("time_ms={}", d.as_millis()),
                };
                let c = s.c_ucb.unwrap_or(problem.default_c_ucb);
                let mut out = format!("ucb={c};{budget};variant={}", s.variant);
                if let PlannerSpec::RhoPomcp(_) = self {
                    out.push_str(&format!(";beta={};sampling={}", s.beta, s.sampling));
                }
                if s.rollout != RolloutPolicy::None {
                    out.push_str(&format!(";rollout={}", s.rollout));
                }
                out
            }
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        match self {
            PlannerSpec::Lookahead { horizon: 0 } => Err(HarnessError::Config("look-ahead horizon must be at least 1".into())),
            PlannerSpec::RhoPomcp(s) | PlannerSpec::RhoBeliefUct(s) if s.budget.is_empty() => {
                Err(HarnessError::Plan(PlanError::EmptyBudget))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    pub discounted_return: f64,
    /// Wall-clock seconds for the whole episode, root advancement included.
    pub wall_time: f64,
    /// Descents spent on each decision (empty for non-search planners).
    pub descents_per_action: Vec<u64>,
    pub actions: Vec<ActionId>,
}

impl EpisodeResult {
    pub fn mean_descents(&self) -> f64 {
        if self.descents_per_action.is_empty() {
            0.0
        } else {
            self.descents_per_action.iter().sum::<u64>() as f64 / self.descents_per_action.len() as f64
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Seed of episode `index` under `master`.
pub fn episode_seed(master: u64, index: u64) -> u64 {
    splitmix64(splitmix64(master) ^ index)
}

enum Agent {
    Random(ChaCha8Rng),
    Lookahead(usize, ChaCha8Rng),
    Particle(SearchTree),
    Exact(SearchTree),
}

/// Plays `steps` decisions of `planner` on `problem` from a hidden state
/// drawn from `b₀`. Environment and planner draw from separate streams
/// derived from `seed`.
pub fn run_episode(problem: &ProblemInstance, planner: &PlannerSpec, steps: usize, seed: u64) -> Result<EpisodeResult, HarnessError> {
    planner.validate()?;
    let started = Instant::now();
    let model = &problem.model;
    let n_actions = model.n_actions();
    let mut env = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ 0x656e_7669));
    let planner_seed = splitmix64(seed ^ 0x706c_616e);
    let mut agent = match planner {
        PlannerSpec::Random => Agent::Random(ChaCha8Rng::seed_from_u64(planner_seed)),
        PlannerSpec::Lookahead { horizon } => Agent::Lookahead(*horizon, ChaCha8Rng::seed_from_u64(planner_seed)),
        PlannerSpec::RhoPomcp(s) => Agent::Particle(SearchTree::particle(s.resolve(problem, planner_seed), n_actions)?),
        PlannerSpec::RhoBeliefUct(s) => {
            Agent::Exact(SearchTree::exact(s.resolve(problem, planner_seed), n_actions, problem.b0().clone())?)
        }
    };

    let mut state = problem.b0().sample(&mut env);
    let mut belief = problem.b0().clone();
    let mut discount = 1.0;
    let mut ret = 0.0;
    let mut descents = Vec::new();
    let mut actions = Vec::with_capacity(steps);
    for _ in 0..steps {
        let a = match &mut agent {
            Agent::Random(rng) => random_plan(n_actions, rng),
            Agent::Lookahead(h, rng) => lookahead_plan(model, &problem.reward, &belief, *h, rng),
            Agent::Particle(tree) => pomcp_plan(tree, model, &problem.reward)?,
            Agent::Exact(tree) => belief_uct_plan(tree, model, &problem.reward)?,
        };
        if let Agent::Particle(tree) | Agent::Exact(tree) = &agent {
            descents.push(tree.stats().last_plan_descents);
        }
        let (next_state, z) = model.sample(state, a, &mut env);
        let (next_belief, _) = model.update_belief(&belief, a, z)?;
        ret += discount * problem.reward.evaluate(&belief, a, &next_belief);
        discount *= problem.gamma();
        if let Agent::Particle(tree) | Agent::Exact(tree) = &mut agent {
            advance_root(tree, model, a, z)?;
        }
        actions.push(a);
        state = next_state;
        belief = next_belief;
    }
    Ok(EpisodeResult {
        discounted_return: ret,
        wall_time: started.elapsed().as_secs_f64(),
        descents_per_action: descents,
        actions,
    })
}

/// One result-table row.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub problem: String,
    pub planner: String,
    pub params: String,
    /// Mean discounted return.
    pub v: f64,
    /// Standard error of the mean; 0 for a single episode.
    pub err: f64,
    /// Mean episode wall time in seconds.
    pub t_s: f64,
    /// Mean descents per decision.
    pub nb_d: f64,
}

/// `(mean, sample-std / √n)`, with the error 0 when `n < 2`.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Aggregates per-episode results (in episode order) into a row.
pub fn summarize(problem: &str, planner: &str, params: &str, episodes: &[EpisodeResult]) -> SummaryRow {
    let returns: Vec<f64> = episodes.iter().map(|e| e.discounted_return).collect();
    let (v, err) = mean_and_stderr(&returns);
    let n = episodes.len().max(1) as f64;
    SummaryRow {
        problem: problem.into(),
        planner: planner.into(),
        params: params.into(),
        v,
        err,
        t_s: episodes.iter().map(|e| e.wall_time).sum::<f64>() / n,
        nb_d: episodes.iter().map(EpisodeResult::mean_descents).sum::<f64>() / n,
    }
}

/// Runs `episodes` independent episodes, concurrently when `parallel`.
/// Results come back in episode order.
pub fn run_episodes(
    problem: &ProblemInstance,
    planner: &PlannerSpec,
    episodes: usize,
    steps: usize,
    seed: u64,
    parallel: bool,
) -> Result<Vec<EpisodeResult>, HarnessError> {
    planner.validate()?;
    let one = |i: usize| run_episode(problem, planner, steps, episode_seed(seed, i as u64));
    if parallel {
        (0..episodes).into_par_iter().map(one).collect()
    } else {
        (0..episodes).map(one).collect()
    }
}

/// Builds the problem, runs every episode and summarizes them. Wall-time
/// budgets run episodes one at a time so they do not compete for cores.
pub fn run_experiment(config: &ExperimentConfig) -> Result<SummaryRow, HarnessError> {
    config.validate()?;
    let problem = build_problem(&config.problem, &config.problem_params)?;
    let planner = config.planner_spec()?;
    let parallel = !matches!(
        planner,
        PlannerSpec::RhoPomcp(SearchSettings { budget: Budget::WallTime(_), .. })
            | PlannerSpec::RhoBeliefUct(SearchSettings { budget: Budget::WallTime(_), .. })
    );
    let results = run_episodes(&problem, &planner, config.episodes, config.steps, config.seed, parallel)?;
    let mut params = planner.params(&problem);
    if !config.problem_params.is_empty() {
        if !params.is_empty() {
            params.push(';');
        }
        params.push_str(&config.problem_params.to_string());
    }
    Ok(summarize(&problem.name, planner.kind().name(), &params, &results))
}
