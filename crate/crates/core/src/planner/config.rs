use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use super::PlanError;

/// How much search one plan call may spend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Descents(u64),
    WallTime(Duration),
}

impl Budget {
    pub fn is_empty(&self) -> bool {
        match self {
            Budget::Descents(n) => *n == 0,
            Budget::WallTime(d) => d.is_zero(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Importance,
    Rejection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Vanilla,
    Lru,
    Lvu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RolloutPolicy {
    None,
    Random,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub c_ucb: f64,
    pub gamma: f64,
    pub epsilon_cutoff: f64,
    pub beta_size: usize,
    pub budget: Budget,
    pub sampling: Sampling,
    pub variant: Variant,
    pub rollout: RolloutPolicy,
    pub tie_break_seed: u64,
    /// Particles used when the root belief has to be rebuilt from `b₀`.
    pub replay_particles: usize,
}

impl PlannerConfig {
    pub fn new(c_ucb: f64, gamma: f64) -> Self {
        Self {
            c_ucb,
            gamma,
            epsilon_cutoff: 0.01,
            beta_size: 0,
            budget: Budget::Descents(10_000),
            sampling: Sampling::Importance,
            variant: Variant::Vanilla,
            rollout: RolloutPolicy::None,
            tie_break_seed: 0,
            replay_particles: 1000,
        }
    }

    pub fn with_beta(mut self, beta_size: usize) -> Self {
        self.beta_size = beta_size;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    pub fn with_rollout(mut self, rollout: RolloutPolicy) -> Self {
        self.rollout = rollout;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.tie_break_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if !(self.c_ucb >= 0.0) || !self.c_ucb.is_finite() {
            return Err(PlanError::InvalidConfig(format!("c_ucb must be finite and >= 0, got {}", self.c_ucb)));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(PlanError::InvalidConfig(format!("gamma must lie in [0, 1), got {}", self.gamma)));
        }
        if !(self.epsilon_cutoff > 0.0 && self.epsilon_cutoff <= 1.0) {
            return Err(PlanError::InvalidConfig(format!("epsilon must lie in (0, 1], got {}", self.epsilon_cutoff)));
        }
        Ok(())
    }

    /// Deepest node depth the search can create: `⌈ln ε / ln γ⌉`.
    pub fn max_depth(&self) -> usize {
        max_tree_depth(self.gamma, self.epsilon_cutoff)
    }
}

/// `⌈ln ε / ln γ⌉`, or 0 when `γ = 0`.
pub fn max_tree_depth(gamma: f64, epsilon: f64) -> usize {
    if gamma <= 0.0 {
        return 0;
    }
    (epsilon.ln() / gamma.ln()).ceil().max(0.0) as usize
}

macro_rules! keyword_enum {
    ($ty:ident { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = String;
            fn from_str(s: &str) -> Result<Self, String> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)+
                    other => Err(format!("unknown {} '{other}'", stringify!($ty).to_lowercase())),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(match self { $($ty::$variant => $name,)+ })
            }
        }
    };
}

keyword_enum!(Sampling { Importance => "importance", Rejection => "rejection" });
keyword_enum!(Variant { Vanilla => "vanilla", Lru => "lru", Lvu => "lvu" });
keyword_enum!(RolloutPolicy { None => "none", Random => "random" });
