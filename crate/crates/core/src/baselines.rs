//! Non-search baselines: uniform random actions and exact finite-horizon
//! look-ahead over the belief MDP.

use rand::Rng;

use crate::model::{ActionId, Belief, ExplicitPomdp, GenerativeModel};
use crate::reward::RewardSpec;

/// Action values within this distance of the best count as ties.
pub const LOOKAHEAD_TIE_TOLERANCE: f64 = 1e-9;

pub fn random_plan<R: Rng + ?Sized>(n_actions: usize, rng: &mut R) -> ActionId {
    assert!(n_actions > 0, "random_plan needs at least one action");
    rng.gen_range(0..n_actions)
}

/// `Q_H(b, a)` for every action.
///
/// `Q_H(b,a) = Σ_z P(z|b,a)·[ρ(b,a,b_az) + γ·max_a' Q_{H−1}(b_az,a')]` with
/// `Q_0 ≡ 0`. Rewards that ignore the next belief are taken out of the sum.
pub fn lookahead_values(model: &ExplicitPomdp, reward: &RewardSpec, b: &Belief, horizon: usize) -> Vec<f64> {
    (0..model.n_actions()).map(|a| q_value(model, reward, b, a, horizon)).collect()
}

fn q_value(model: &ExplicitPomdp, reward: &RewardSpec, b: &Belief, a: ActionId, horizon: usize) -> f64 {
    if horizon == 0 {
        return 0.0;
    }
    let uses_next = reward.uses_next_belief();
    if !uses_next && horizon == 1 {
        return reward.evaluate(b, a, b);
    }
    let gamma = model.gamma();
    let mut q = if uses_next { 0.0 } else { reward.evaluate(b, a, b) };
    for branch in model.observation_branches(b, a) {
        let mut inner = 0.0;
        if uses_next {
            inner += reward.evaluate(b, a, &branch.belief);
        }
        if horizon > 1 {
            let best = (0..model.n_actions())
                .map(|a2| q_value(model, reward, &branch.belief, a2, horizon - 1))
                .fold(f64::NEG_INFINITY, f64::max);
            inner += gamma * best;
        }
        q += branch.prob * inner;
    }
    q
}

/// Look-ahead-H: the action maximizing `Q_H(b, ·)`, ties broken uniformly.
pub fn lookahead_plan<R: Rng + ?Sized>(model: &ExplicitPomdp, reward: &RewardSpec, b: &Belief, horizon: usize, rng: &mut R) -> ActionId {
    assert!(horizon >= 1, "look-ahead needs a horizon of at least 1");
    let q = lookahead_values(model, reward, b, horizon);
    let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties: Vec<ActionId> = (0..q.len()).filter(|&a| q[a] >= best - LOOKAHEAD_TIE_TOLERANCE).collect();
    ties[rng.gen_range(0..ties.len())]
}
