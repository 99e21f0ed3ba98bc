//! Belief-dependent rewards `ρ(b, a, b')`.
//!
//! All entropies use the natural logarithm. Rewards are evaluated on any
//! [`StateDistribution`], so planners can score weighted particle bags
//! without normalizing them into a [`Belief`] first.

use std::sync::Arc;

use crate::model::{ActionId, Belief, StateDistribution, StateId};

/// Maps every state to the value of one state variable (a cell, a status…).
///
/// Marginal probabilities are sums of belief mass over each value's fiber.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Identity,
    Map { values: Arc<[usize]>, n_values: usize },
}

impl Projection {
    pub fn map(values: Vec<usize>) -> Self {
        let n_values = values.iter().max().map_or(0, |m| m + 1);
        Projection::Map { values: values.into(), n_values }
    }

    /// Number of distinct variable values, given the state count.
    pub fn n_values(&self, n_states: usize) -> usize {
        match self {
            Projection::Identity => n_states,
            Projection::Map { n_values, .. } => *n_values,
        }
    }

    /// Dense marginal of `d` over the projected variable.
    pub fn marginal<D: StateDistribution + ?Sized>(&self, d: &D, n_values: usize) -> Vec<f64> {
        let mut m = vec![0.0; n_values];
        match self {
            Projection::Identity => d.for_each_prob(&mut |s, p| m[s] += p),
            Projection::Map { values, .. } => d.for_each_prob(&mut |s, p| m[values[s]] += p),
        }
        m
    }

    fn entropy<D: StateDistribution + ?Sized>(&self, d: &D) -> f64 {
        match self {
            Projection::Identity => distribution_entropy(d),
            Projection::Map { n_values, .. } => probs_entropy(&self.marginal(d, *n_values)),
        }
    }

    fn max_marginal<D: StateDistribution + ?Sized>(&self, d: &D) -> f64 {
        match self {
            Projection::Identity => {
                let mut best: f64 = 0.0;
                d.for_each_prob(&mut |_, p| best = best.max(p));
                best
            }
            Projection::Map { n_values, .. } => self.marginal(d, *n_values).into_iter().fold(0.0, f64::max),
        }
    }
}

/// Shannon entropy in nats, with `0·ln 0 = 0`.
pub fn entropy(b: &Belief) -> f64 {
    distribution_entropy(b)
}

pub fn distribution_entropy<D: StateDistribution + ?Sized>(d: &D) -> f64 {
    let mut h = 0.0;
    d.for_each_prob(&mut |_, p| {
        if p > 0.0 {
            h -= p * p.ln();
        }
    });
    h.max(0.0)
}

fn probs_entropy(probs: &[f64]) -> f64 {
    probs.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum::<f64>().max(0.0)
}

/// The catalogue of belief-dependent rewards.
#[derive(Debug, Clone, PartialEq)]
pub enum RewardSpec {
    /// `Σ_s b(s)·r(s,a)`; `rewards` is row-major `|S|×|A|`.
    StateLinear { rewards: Arc<[f64]>, n_actions: usize },
    /// `−H(b')` over the projected variable.
    NegEntropy { projection: Projection },
    /// `H(b) − H(b')` over the projected variable.
    EntropyDifference { projection: Projection },
    /// `1` when the largest marginal of `b'` exceeds `alpha`, else `0`.
    BeliefThreshold { alpha: f64, projection: Projection },
    /// `sign·‖marginal(b') − target‖₁`.
    SignedL1FromTarget { sign: f64, target: Arc<[f64]>, projection: Projection },
    /// Status-dependent entropy reward: `h_max − H(loc)` while found,
    /// `lost_scale·H(loc)` while lost, weighted by the status marginal of
    /// `b'` (status value 0 is found, 1 is lost).
    LostOrFoundComposite { h_max: f64, lost_scale: f64, location: Projection, status: Projection },
}

impl RewardSpec {
    pub fn state_linear(rewards: &[f64], n_actions: usize) -> Self {
        RewardSpec::StateLinear { rewards: rewards.into(), n_actions }
    }

    pub fn name(&self) -> &'static str {
        match self {
            RewardSpec::StateLinear { .. } => "state_linear",
            RewardSpec::NegEntropy { .. } => "neg_entropy",
            RewardSpec::EntropyDifference { .. } => "entropy_difference",
            RewardSpec::BeliefThreshold { .. } => "belief_threshold",
            RewardSpec::SignedL1FromTarget { .. } => "signed_l1_from_target",
            RewardSpec::LostOrFoundComposite { .. } => "lost_or_found",
        }
    }

    /// Whether the value depends on the arrival belief `b'`.
    pub fn uses_next_belief(&self) -> bool {
        !matches!(self, RewardSpec::StateLinear { .. })
    }

    /// Whether the value depends on the departure belief `b`.
    pub fn uses_current_belief(&self) -> bool {
        matches!(self, RewardSpec::StateLinear { .. } | RewardSpec::EntropyDifference { .. })
    }

    /// `ρ(b, a, b')`.
    pub fn evaluate<D1, D2>(&self, b: &D1, a: ActionId, b_next: &D2) -> f64
    where
        D1: StateDistribution + ?Sized,
        D2: StateDistribution + ?Sized,
    {
        match self {
            RewardSpec::StateLinear { rewards, n_actions } => {
                let mut r = 0.0;
                b.for_each_prob(&mut |s, p| r += p * rewards[s * n_actions + a]);
                r
            }
            RewardSpec::NegEntropy { projection } => -projection.entropy(b_next),
            RewardSpec::EntropyDifference { projection } => projection.entropy(b) - projection.entropy(b_next),
            RewardSpec::BeliefThreshold { alpha, projection } => {
                if projection.max_marginal(b_next) > *alpha {
                    1.0
                } else {
                    0.0
                }
            }
            RewardSpec::SignedL1FromTarget { sign, target, projection } => {
                let m = projection.marginal(b_next, target.len());
                sign * m.iter().zip(target.iter()).map(|(x, t)| (x - t).abs()).sum::<f64>()
            }
            RewardSpec::LostOrFoundComposite { h_max, lost_scale, location, status } => {
                let h = location.entropy(b_next);
                let st = status.marginal(b_next, 2);
                st[0] * (h_max - h) + st[1] * lost_scale * h
            }
        }
    }

    /// An upper bound on `|ρ|` for a model with `n_states` states.
    pub fn rho_max(&self, n_states: usize) -> f64 {
        let ln_n = (n_states.max(1) as f64).ln();
        match self {
            RewardSpec::StateLinear { rewards, .. } => rewards.iter().fold(0.0, |m: f64, r| m.max(r.abs())),
            RewardSpec::NegEntropy { .. } | RewardSpec::EntropyDifference { .. } => ln_n,
            RewardSpec::BeliefThreshold { .. } => 1.0,
            RewardSpec::SignedL1FromTarget { target, .. } => 1.0 + target.iter().sum::<f64>(),
            RewardSpec::LostOrFoundComposite { h_max, lost_scale, .. } => {
                h_max.abs().max((h_max - ln_n).abs()).max(lost_scale.abs() * ln_n)
            }
        }
    }
}

/// `ρ(b, a, b')` on two beliefs.
pub fn evaluate_reward(spec: &RewardSpec, b: &Belief, a: ActionId, b_next: &Belief) -> f64 {
    spec.evaluate(b, a, b_next)
}

/// Identity map helper for building projections from a closure.
pub fn projection_from_fn(n_states: usize, f: impl Fn(StateId) -> usize) -> Projection {
    Projection::map((0..n_states).map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_belief(rng: &mut impl Rng, n: usize) -> Belief {
        // Sparse-ish: some states get zero mass.
        let w: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen::<f64>() }).collect();
        if w.iter().all(|&x| x == 0.0) {
            return Belief::point(rng.gen_range(0..n));
        }
        Belief::normalized(w.into_iter().enumerate()).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&Belief::uniform(4)) - 4f64.ln()).abs() < 1e-12);
        assert_eq!(entropy(&Belief::point(3)), 0.0);
        let b = Belief::from_pairs([(0, 0.85), (1, 0.15)]).unwrap();
        // −0.85 ln 0.85 − 0.15 ln 0.15
        assert!((entropy(&b) - 0.422_709_087_805_990_9).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_strict() {
        let spec = RewardSpec::BeliefThreshold { alpha: 0.8, projection: Projection::Identity };
        let b = Belief::uniform(2);
        let high = Belief::from_pairs([(0, 0.9), (1, 0.1)]).unwrap();
        let edge = Belief::from_pairs([(0, 0.8), (1, 0.2)]).unwrap();
        assert_eq!(evaluate_reward(&spec, &b, 0, &high), 1.0);
        assert_eq!(evaluate_reward(&spec, &b, 0, &edge), 0.0);
    }

    #[test]
    fn entropy_difference_of_unchanged_belief_is_zero() {
        let spec = RewardSpec::EntropyDifference { projection: Projection::Identity };
        let b = Belief::from_pairs([(0, 0.2), (4, 0.8)]).unwrap();
        assert_eq!(evaluate_reward(&spec, &b, 1, &b), 0.0);
    }

    #[test]
    fn negentropy_of_uniform_museum() {
        let spec = RewardSpec::NegEntropy { projection: Projection::Identity };
        let u = Belief::uniform(16);
        assert!((evaluate_reward(&spec, &u, 0, &u) + 16f64.ln()).abs() < 1e-12);
        assert!((16f64.ln() - 2.772_588_722_239_781).abs() < 1e-12);
    }

    #[test]
    fn signed_l1_at_target_is_zero() {
        // 9 cells on a 3x3 grid projected to their column.
        let proj = projection_from_fn(9, |s| s % 3);
        let spec = RewardSpec::SignedL1FromTarget { sign: 1.0, target: vec![1.0 / 3.0; 3].into(), projection: proj };
        let u = Belief::uniform(9);
        assert!(evaluate_reward(&spec, &u, 0, &u).abs() < 1e-15);
        let corner = Belief::point(0);
        // |1 − 1/3| + 2·|0 − 1/3| = 4/3
        assert!((evaluate_reward(&spec, &u, 0, &corner) - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn state_linear_is_expectation() {
        let spec = RewardSpec::state_linear(&[-1.0, -100.0, 10.0, -1.0, 10.0, -100.0], 3);
        let b = Belief::uniform(2);
        assert!((evaluate_reward(&spec, &b, 1, &b) + 45.0).abs() < 1e-12);
        assert!((evaluate_reward(&spec, &b, 0, &b) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lost_or_found_switches_on_status() {
        // states: (cell, status) with status-major layout, 4 cells.
        let location = projection_from_fn(8, |s| s % 4);
        let status = projection_from_fn(8, |s| s / 4);
        let h_max = 4f64.ln();
        let spec = RewardSpec::LostOrFoundComposite { h_max, lost_scale: 3.0, location, status };
        let found_known = Belief::point(1);
        let lost_uniform = Belief::uniform_over(&[4, 5, 6, 7]);
        assert!((evaluate_reward(&spec, &found_known, 0, &found_known) - h_max).abs() < 1e-12);
        assert!((evaluate_reward(&spec, &found_known, 0, &lost_uniform) - 3.0 * h_max).abs() < 1e-12);
    }

    #[test]
    fn threshold_zero_below_alpha() {
        let spec = RewardSpec::BeliefThreshold { alpha: 0.8, projection: Projection::Identity };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let b = random_belief(&mut rng, 6);
            let max = b.iter().map(|e| e.1).fold(0.0, f64::max);
            if max <= 0.8 {
                assert_eq!(spec.evaluate(&b, 0, &b), 0.0);
            }
        }
    }

    #[test]
    fn every_reward_respects_its_bound() {
        let n = 8;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rewards: Vec<f64> = (0..n * 2).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let specs = vec![
            RewardSpec::state_linear(&rewards, 2),
            RewardSpec::NegEntropy { projection: Projection::Identity },
            RewardSpec::EntropyDifference { projection: Projection::Identity },
            RewardSpec::BeliefThreshold { alpha: 0.5, projection: Projection::Identity },
            RewardSpec::SignedL1FromTarget { sign: -1.0, target: vec![0.25; 4].into(), projection: projection_from_fn(n, |s| s % 4) },
            RewardSpec::LostOrFoundComposite {
                h_max: 4f64.ln(),
                lost_scale: 3.0,
                location: projection_from_fn(n, |s| s % 4),
                status: projection_from_fn(n, |s| s / 4),
            },
        ];
        for spec in &specs {
            let bound = spec.rho_max(n);
            for _ in 0..10_000 {
                let b = random_belief(&mut rng, n);
                let b2 = random_belief(&mut rng, n);
                let r = spec.evaluate(&b, rng.gen_range(0..2), &b2);
                assert!(r.abs() <= bound + 1e-12, "{} gave {r} > {bound}", spec.name());
            }
        }
    }

    fn belief_strategy(n: usize) -> impl Strategy<Value = Belief> {
        proptest::collection::vec(0.0f64..1.0, n)
            .prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-6)
            .prop_map(|w| Belief::normalized(w.into_iter().enumerate()).unwrap())
    }

    proptest! {
        #[test]
        fn entropy_is_concave(b1 in belief_strategy(5), b2 in belief_strategy(5), lambda in 0.0f64..1.0) {
            let d1 = b1.to_dense(5);
            let d2 = b2.to_dense(5);
            let mix = Belief::normalized((0..5).map(|i| (i, lambda * d1[i] + (1.0 - lambda) * d2[i]))).unwrap();
            let lhs = entropy(&mix);
            let rhs = lambda * entropy(&b1) + (1.0 - lambda) * entropy(&b2);
            prop_assert!(lhs >= rhs - 1e-12);
        }

        #[test]
        fn entropy_is_permutation_invariant(b in belief_strategy(6), shift in 0usize..6) {
            let permuted = Belief::normalized(b.iter().map(|(s, p)| ((s + shift) % 6, p))).unwrap();
            prop_assert!((entropy(&b) - entropy(&permuted)).abs() < 1e-12);
            prop_assert!(entropy(&b) <= 6f64.ln() + 1e-12);
        }
    }
}
