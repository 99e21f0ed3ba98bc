//! Online planning for POMDPs whose rewards depend on the belief state.
//!
//! The crate is organized bottom-up: [`model`] holds finite models and exact
//! Bayes filtering, [`reward`] the belief-dependent rewards, [`particle`] the
//! weighted particle bags, [`planner`] the tree searches, [`baselines`] the
//! random and look-ahead policies, [`problems`] the benchmark constructors and
//! [`harness`] the episode and experiment runner.

pub mod model;
pub mod reward;
pub mod particle;
pub mod planner;
pub mod baselines;
pub mod problems;
pub mod harness;
