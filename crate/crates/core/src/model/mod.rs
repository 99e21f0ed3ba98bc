//! Finite POMDP models with joint transition-observation kernels.
//!
//! The kernel is stored twice: per `(a, z)` as a sparse `|S|×|S|` matrix for
//! Bayes updates, and per `(s, a)` as a list of `(s', z, p)` outcomes for
//! sampling and observation likelihoods.

mod belief;
pub mod cassandra;

use rand::Rng;
use thiserror::Error;

pub use belief::{Belief, StateDistribution, BELIEF_SUM_TOLERANCE};

pub type StateId = usize;
pub type ActionId = usize;
pub type ObsId = usize;

/// Tolerance on every `(s, a)` row of a constructed kernel.
pub const KERNEL_ROW_TOLERANCE: f64 = 1e-9;

/// Observations less likely than this are treated as impossible.
pub const MIN_OBS_PROB: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("observation {obs} has probability {prob:e} under the current belief after action {action}")]
    ZeroProbabilityObservation { action: ActionId, obs: ObsId, prob: f64 },
    #[error("invalid probability {0}")]
    InvalidProbability(f64),
    #[error("belief mass sums to {0}, expected 1")]
    UnnormalizedBelief(f64),
    #[error("kernel row (s={state}, a={action}) sums to {sum}")]
    KernelRowSum { state: StateId, action: ActionId, sum: f64 },
    #[error("{what} index {index} out of range (size {size})")]
    IndexOutOfRange { what: &'static str, index: usize, size: usize },
    #[error("discount {0} outside [0, 1)")]
    InvalidDiscount(f64),
    #[error("{0}")]
    Invalid(String),
}

/// Human-readable names for every state, action and observation index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Labels {
    pub states: Vec<String>,
    pub actions: Vec<String>,
    pub observations: Vec<String>,
}

impl Labels {
    pub fn numbered(n_states: usize, n_actions: usize, n_obs: usize) -> Self {
        Self {
            states: (0..n_states).map(|i| format!("s{i}")).collect(),
            actions: (0..n_actions).map(|i| format!("a{i}")).collect(),
            observations: (0..n_obs).map(|i| format!("o{i}")).collect(),
        }
    }

    pub fn action_index(&self, name: &str) -> Option<ActionId> {
        self.actions.iter().position(|a| a == name)
    }

    pub fn obs_index(&self, name: &str) -> Option<ObsId> {
        self.observations.iter().position(|o| o == name)
    }
}

/// One `(s', z)` outcome of applying an action in a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub next: StateId,
    pub obs: ObsId,
    pub prob: f64,
}

/// Compressed sparse rows: row `s` holds the `(s', p)` entries of one `P_{a,z}`.
#[derive(Debug, Clone, PartialEq)]
struct SparseRows {
    row_start: Vec<usize>,
    cols: Vec<StateId>,
    vals: Vec<f64>,
}

impl SparseRows {
    fn row(&self, s: StateId) -> impl Iterator<Item = (StateId, f64)> + '_ {
        let (lo, hi) = (self.row_start[s], self.row_start[s + 1]);
        self.cols[lo..hi].iter().copied().zip(self.vals[lo..hi].iter().copied())
    }
}

/// The capability planners need from a problem: a simulator plus the
/// observation likelihood used for importance weights.
pub trait GenerativeModel {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn n_obs(&self) -> usize;
    fn gamma(&self) -> f64;
    fn initial_belief(&self) -> &Belief;

    /// Samples `(s', z)` from the joint kernel.
    fn sample<R: Rng + ?Sized>(&self, s: StateId, a: ActionId, rng: &mut R) -> (StateId, ObsId);

    /// `P(z | s, a, s')`; zero when `s'` is unreachable from `(s, a)`.
    fn obs_prob(&self, s: StateId, a: ActionId, s_next: StateId, z: ObsId) -> f64;

    /// The full model, when the problem has one.
    fn explicit(&self) -> Option<&ExplicitPomdp> {
        None
    }
}

/// A finite ρ-POMDP model `⟨S, A, Z, P, r, γ, b₀⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitPomdp {
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    /// Index `s * n_actions + a`, sorted by `(next, obs)`.
    outcomes: Vec<Vec<Outcome>>,
    /// Running sums of `outcomes` probabilities, same indexing.
    cdf: Vec<Vec<f64>>,
    /// `T(s, a, s')` marginals, same indexing, sorted by state.
    transitions: Vec<Vec<(StateId, f64)>>,
    /// Index `a * n_obs + z`.
    kernel: Vec<SparseRows>,
    state_reward: Option<Vec<f64>>,
    gamma: f64,
    b0: Belief,
    labels: Labels,
}

/// Accumulates kernel entries before validation.
#[derive(Debug, Clone)]
pub struct PomdpBuilder {
    n_states: usize,
    n_actions: usize,
    n_obs: usize,
    outcomes: Vec<Vec<Outcome>>,
    state_reward: Option<Vec<f64>>,
}

impl PomdpBuilder {
    pub fn new(n_states: usize, n_actions: usize, n_obs: usize) -> Self {
        assert!(n_states > 0 && n_actions > 0 && n_obs > 0, "empty model dimension");
        Self {
            n_states,
            n_actions,
            n_obs,
            outcomes: vec![Vec::new(); n_states * n_actions],
            state_reward: None,
        }
    }

    /// Adds `p` to `P_{a,z}(s, s')`.
    pub fn add(&mut self, s: StateId, a: ActionId, s_next: StateId, z: ObsId, p: f64) -> &mut Self {
        assert!(s < self.n_states && s_next < self.n_states, "state out of range");
        assert!(a < self.n_actions && z < self.n_obs, "action or observation out of range");
        if p != 0.0 {
            self.outcomes[s * self.n_actions + a].push(Outcome { next: s_next, obs: z, prob: p });
        }
        self
    }

    /// Adds a transition `s → s'` with probability `p` whose observation is
    /// drawn from `obs` (pairs of observation and probability).
    pub fn add_transition(&mut self, s: StateId, a: ActionId, s_next: StateId, p: f64, obs: &[(ObsId, f64)]) -> &mut Self {
        for &(z, q) in obs {
            self.add(s, a, s_next, z, p * q);
        }
        self
    }

    pub fn set_state_reward(&mut self, s: StateId, a: ActionId, r: f64) -> &mut Self {
        let (n_s, n_a) = (self.n_states, self.n_actions);
        let rewards = self.state_reward.get_or_insert_with(|| vec![0.0; n_s * n_a]);
        rewards[s * n_a + a] = r;
        self
    }

    /// Validates the kernel and freezes the model.
    pub fn build(self, gamma: f64, b0: Belief, labels: Labels) -> Result<ExplicitPomdp, ModelError> {
        ExplicitPomdp::assemble(self, gamma, b0, labels, KERNEL_ROW_TOLERANCE, false)
    }

    /// Like [`build`](Self::build), but accepts rows within `tolerance` of one
    /// and rescales them to sum to one.
    pub fn build_renormalized(self, gamma: f64, b0: Belief, labels: Labels, tolerance: f64) -> Result<ExplicitPomdp, ModelError> {
        ExplicitPomdp::assemble(self, gamma, b0, labels, tolerance, true)
    }
}

impl ExplicitPomdp {
    fn assemble(
        builder: PomdpBuilder,
        gamma: f64,
        b0: Belief,
        labels: Labels,
        tolerance: f64,
        renormalize: bool,
    ) -> Result<Self, ModelError> {
        let PomdpBuilder { n_states, n_actions, n_obs, mut outcomes, state_reward } = builder;
        if !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::InvalidDiscount(gamma));
        }
        if let Some(max) = b0.max_state() {
            if max >= n_states {
                return Err(ModelError::IndexOutOfRange { what: "state", index: max, size: n_states });
            }
        }
        let labels = if labels.states.len() == n_states
            && labels.actions.len() == n_actions
            && labels.observations.len() == n_obs
        {
            labels
        } else if labels == Labels::default() {
            Labels::numbered(n_states, n_actions, n_obs)
        } else {
            return Err(ModelError::Invalid("label counts do not match model dimensions".into()));
        };

        let mut cdf = Vec::with_capacity(outcomes.len());
        let mut transitions = Vec::with_capacity(outcomes.len());
        for (idx, row) in outcomes.iter_mut().enumerate() {
            let (s, a) = (idx / n_actions, idx % n_actions);
            if row.iter().any(|o| !o.prob.is_finite() || o.prob < 0.0) {
                let bad = row.iter().find(|o| !o.prob.is_finite() || o.prob < 0.0).unwrap();
                return Err(ModelError::InvalidProbability(bad.prob));
            }
            row.sort_by_key(|x| (x.next, x.obs));
            let mut merged: Vec<Outcome> = Vec::with_capacity(row.len());
            for o in row.drain(..) {
                match merged.last_mut() {
                    Some(last) if last.next == o.next && last.obs == o.obs => last.prob += o.prob,
                    _ => merged.push(o),
                }
            }
            merged.retain(|o| o.prob > 0.0);
            let sum: f64 = merged.iter().map(|o| o.prob).sum();
            if (sum - 1.0).abs() > tolerance {
                return Err(ModelError::KernelRowSum { state: s, action: a, sum });
            }
            if renormalize {
                for o in &mut merged {
                    o.prob /= sum;
                }
            }
            let mut acc = 0.0;
            cdf.push(
                merged
                    .iter()
                    .map(|o| {
                        acc += o.prob;
                        acc
                    })
                    .collect::<Vec<_>>(),
            );
            let mut trans: Vec<(StateId, f64)> = Vec::new();
            for o in &merged {
                match trans.last_mut() {
                    Some(last) if last.0 == o.next => last.1 += o.prob,
                    _ => trans.push((o.next, o.prob)),
                }
            }
            transitions.push(trans);
            *row = merged;
        }

        let mut kernel = Vec::with_capacity(n_actions * n_obs);
        for a in 0..n_actions {
            for z in 0..n_obs {
                let mut row_start = Vec::with_capacity(n_states + 1);
                let mut cols = Vec::new();
                let mut vals = Vec::new();
                row_start.push(0);
                for s in 0..n_states {
                    for o in &outcomes[s * n_actions + a] {
                        if o.obs == z {
                            cols.push(o.next);
                            vals.push(o.prob);
                        }
                    }
                    row_start.push(cols.len());
                }
                kernel.push(SparseRows { row_start, cols, vals });
            }
        }

        Ok(Self {
            n_states,
            n_actions,
            n_obs,
            outcomes,
            cdf,
            transitions,
            kernel,
            state_reward,
            gamma,
            b0,
            labels,
        })
    }

    pub fn labels(&self) -> &Labels {
        &self.labels
    }

    /// `r(s, a)` when the model carries state rewards.
    pub fn state_reward(&self, s: StateId, a: ActionId) -> Option<f64> {
        self.state_reward.as_ref().map(|r| r[s * self.n_actions + a])
    }

    /// The `|S|·|A|` reward matrix, row-major in `s`.
    pub fn state_reward_matrix(&self) -> Option<&[f64]> {
        self.state_reward.as_deref()
    }

    pub fn outcomes(&self, s: StateId, a: ActionId) -> &[Outcome] {
        &self.outcomes[s * self.n_actions + a]
    }

    /// `T(s, a, s')` summed over observations.
    pub fn transition_prob(&self, s: StateId, a: ActionId, s_next: StateId) -> f64 {
        let row = &self.transitions[s * self.n_actions + a];
        match row.binary_search_by_key(&s_next, |e| e.0) {
            Ok(i) => row[i].1,
            Err(_) => 0.0,
        }
    }

    /// `P_{a,z}(s, s')`.
    pub fn joint_prob(&self, s: StateId, a: ActionId, s_next: StateId, z: ObsId) -> f64 {
        let row = self.outcomes(s, a);
        match row.binary_search_by(|o| (o.next, o.obs).cmp(&(s_next, z))) {
            Ok(i) => row[i].prob,
            Err(_) => 0.0,
        }
    }

    /// Iterates the non-zero entries `(s', p)` of row `s` of `P_{a,z}`.
    pub fn kernel_row(&self, a: ActionId, z: ObsId, s: StateId) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.kernel[a * self.n_obs + z].row(s)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self, ModelError> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(ModelError::InvalidDiscount(gamma));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn with_initial_belief(mut self, b0: Belief) -> Result<Self, ModelError> {
        if let Some(max) = b0.max_state() {
            if max >= self.n_states {
                return Err(ModelError::IndexOutOfRange { what: "state", index: max, size: self.n_states });
            }
        }
        self.b0 = b0;
        Ok(self)
    }

    fn check_action(&self, a: ActionId) -> Result<(), ModelError> {
        if a >= self.n_actions {
            return Err(ModelError::IndexOutOfRange { what: "action", index: a, size: self.n_actions });
        }
        Ok(())
    }

    /// Bayes update `b'(s') ∝ Σ_s P_{a,z}(s, s') b(s)`.
    ///
    /// Returns the posterior together with `P(z | b, a)`, the normalizing
    /// constant.
    pub fn update_belief(&self, b: &Belief, a: ActionId, z: ObsId) -> Result<(Belief, f64), ModelError> {
        self.check_action(a)?;
        if z >= self.n_obs {
            return Err(ModelError::IndexOutOfRange { what: "observation", index: z, size: self.n_obs });
        }
        let matrix = &self.kernel[a * self.n_obs + z];
        let mut acc: Vec<(StateId, f64)> = Vec::new();
        for (s, p) in b.iter() {
            for (s2, q) in matrix.row(s) {
                acc.push((s2, p * q));
            }
        }
        finish_update(acc, a, z)
    }

    /// All observations reachable from `b` under `a`, with their probability
    /// and the posterior they lead to. Observations below [`MIN_OBS_PROB`]
    /// are omitted.
    pub fn observation_branches(&self, b: &Belief, a: ActionId) -> Vec<ObsBranch> {
        let mut per_obs: Vec<Vec<(StateId, f64)>> = vec![Vec::new(); self.n_obs];
        for (s, p) in b.iter() {
            for o in self.outcomes(s, a) {
                per_obs[o.obs].push((o.next, p * o.prob));
            }
        }
        per_obs
            .into_iter()
            .enumerate()
            .filter(|(_, acc)| !acc.is_empty())
            .filter_map(|(z, acc)| {
                finish_update(acc, a, z)
                    .ok()
                    .map(|(belief, prob)| ObsBranch { obs: z, prob, belief })
            })
            .collect()
    }
}

/// One observation outcome of an exact one-step lookahead.
#[derive(Debug, Clone)]
pub struct ObsBranch {
    pub obs: ObsId,
    pub prob: f64,
    pub belief: Belief,
}

fn finish_update(mut acc: Vec<(StateId, f64)>, a: ActionId, z: ObsId) -> Result<(Belief, f64), ModelError> {
    acc.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(acc.len());
    for (s, p) in acc {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += p,
            _ => merged.push((s, p)),
        }
    }
    let norm: f64 = merged.iter().map(|e| e.1).sum();
    if !(norm >= MIN_OBS_PROB) {
        return Err(ModelError::ZeroProbabilityObservation { action: a, obs: z, prob: norm });
    }
    merged.retain(|e| e.1 > 0.0);
    for e in &mut merged {
        e.1 /= norm;
    }
    Ok((Belief::from_sorted_unchecked(merged), norm))
}

/// Exact Bayes update; see [`ExplicitPomdp::update_belief`].
pub fn exact_belief_update(model: &ExplicitPomdp, b: &Belief, a: ActionId, z: ObsId) -> Result<(Belief, f64), ModelError> {
    model.update_belief(b, a, z)
}

/// Draws `(s', z)` from any generative model.
pub fn sample_transition<M: GenerativeModel + ?Sized, R: Rng + ?Sized>(model: &M, s: StateId, a: ActionId, rng: &mut R) -> (StateId, ObsId) {
    model.sample(s, a, rng)
}

/// A random model with sparse rows, observations depending on `(a, s')`,
/// state rewards in `[-10, 10]` and a random initial belief.
///
/// Useful as a test bed for filters and planners.
pub fn random_pomdp<R: Rng + ?Sized>(n_states: usize, n_actions: usize, n_obs: usize, gamma: f64, rng: &mut R) -> ExplicitPomdp {
    let random_simplex = |n: usize, rng: &mut R| -> Vec<f64> {
        // Each entry survives with probability 0.6; at least one always does.
        let keep = rng.gen_range(0..n);
        let w: Vec<f64> = (0..n)
            .map(|i| if i == keep || rng.gen_bool(0.6) { rng.gen_range(0.05..1.0) } else { 0.0 })
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    };
    let obs: Vec<Vec<f64>> = (0..n_actions * n_states).map(|_| random_simplex(n_obs, rng)).collect();
    let mut builder = PomdpBuilder::new(n_states, n_actions, n_obs);
    for s in 0..n_states {
        for a in 0..n_actions {
            let t = random_simplex(n_states, rng);
            for (s2, &p) in t.iter().enumerate() {
                if p > 0.0 {
                    let o: Vec<(ObsId, f64)> = obs[a * n_states + s2].iter().copied().enumerate().filter(|e| e.1 > 0.0).collect();
                    builder.add_transition(s, a, s2, p, &o);
                }
            }
            builder.set_state_reward(s, a, rng.gen_range(-10.0..10.0));
        }
    }
    let b0 = Belief::normalized(random_simplex(n_states, rng).into_iter().enumerate()).expect("random belief has mass");
    builder.build_renormalized(gamma, b0, Labels::default(), 1e-9).expect("random model is valid")
}

impl GenerativeModel for ExplicitPomdp {
    fn n_states(&self) -> usize {
        self.n_states
    }

    fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn n_obs(&self) -> usize {
        self.n_obs
    }

    fn gamma(&self) -> f64 {
        self.gamma
    }

    fn initial_belief(&self) -> &Belief {
        &self.b0
    }

    fn sample<R: Rng + ?Sized>(&self, s: StateId, a: ActionId, rng: &mut R) -> (StateId, ObsId) {
        let idx = s * self.n_actions + a;
        let (row, cdf) = (&self.outcomes[idx], &self.cdf[idx]);
        if row.len() == 1 {
            return (row[0].next, row[0].obs);
        }
        let u = rng.gen::<f64>() * cdf[cdf.len() - 1];
        let i = cdf.partition_point(|&c| c <= u).min(row.len() - 1);
        (row[i].next, row[i].obs)
    }

    fn obs_prob(&self, s: StateId, a: ActionId, s_next: StateId, z: ObsId) -> f64 {
        let t = self.transition_prob(s, a, s_next);
        if t <= 0.0 {
            return 0.0;
        }
        self.joint_prob(s, a, s_next, z) / t
    }

    fn explicit(&self) -> Option<&ExplicitPomdp> {
        Some(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiger() -> ExplicitPomdp {
        cassandra::parse_cassandra_pomdp(include_str!("../../fixtures/tiger.95.POMDP")).unwrap()
    }

    /// Three states cycled by the single action, observation = destination.
    fn permutation_model() -> ExplicitPomdp {
        let mut b = PomdpBuilder::new(3, 1, 3);
        for s in 0..3 {
            b.add(s, 0, (s + 1) % 3, (s + 1) % 3, 1.0);
        }
        b.build(0.9, Belief::uniform(3), Labels::default()).unwrap()
    }

    #[test]
    fn tiger_listen_update() {
        let m = tiger();
        let listen = m.labels().action_index("listen").unwrap();
        let left = m.labels().obs_index("tiger-left").unwrap();
        let (b, p) = exact_belief_update(&m, &Belief::uniform(2), listen, left).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!((b.prob(0) - 0.85).abs() < 1e-12);
        assert!((b.prob(1) - 0.15).abs() < 1e-12);
    }

    #[test]
    fn deterministic_point_mass_update() {
        let m = permutation_model();
        let (b, p) = exact_belief_update(&m, &Belief::point(0), 0, 1).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(b, Belief::point(1));
    }

    #[test]
    fn impossible_observation_is_an_error() {
        let m = permutation_model();
        let err = exact_belief_update(&m, &Belief::point(0), 0, 2).unwrap_err();
        assert!(matches!(err, ModelError::ZeroProbabilityObservation { .. }));
    }

    #[test]
    fn deterministic_sampling_is_constant() {
        let m = permutation_model();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_transition(&m, 2, 0, &mut rng), (0, 0));
        }
    }

    #[test]
    fn tiger_listen_sampling_frequency() {
        let m = tiger();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let hits = (0..n).filter(|_| sample_transition(&m, 0, 0, &mut rng).1 == 0).count();
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.85).abs() < 0.01, "{freq}");
    }

    #[test]
    fn same_seed_same_samples() {
        let m = tiger();
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50).map(|i| sample_transition(&m, i % 2, i % 3, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
    }

    #[test]
    fn obs_prob_sums_to_one_over_observations() {
        let m = tiger();
        for s in 0..2 {
            for a in 0..3 {
                for s2 in 0..2 {
                    if m.transition_prob(s, a, s2) > 0.0 {
                        let total: f64 = (0..2).map(|z| m.obs_prob(s, a, s2, z)).sum();
                        assert!((total - 1.0).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn builder_rejects_bad_rows_and_discount() {
        let mut b = PomdpBuilder::new(2, 1, 1);
        b.add(0, 0, 0, 0, 0.5).add(1, 0, 1, 0, 1.0);
        assert!(matches!(
            b.clone().build(0.9, Belief::uniform(2), Labels::default()),
            Err(ModelError::KernelRowSum { state: 0, .. })
        ));
        let mut ok = PomdpBuilder::new(1, 1, 1);
        ok.add(0, 0, 0, 0, 1.0);
        assert!(matches!(
            ok.build(1.0, Belief::uniform(1), Labels::default()),
            Err(ModelError::InvalidDiscount(_))
        ));
    }

    #[test]
    fn observation_branches_match_individual_updates() {
        let m = tiger();
        let b = Belief::from_pairs([(0, 0.3), (1, 0.7)]).unwrap();
        let branches = m.observation_branches(&b, 0);
        assert_eq!(branches.len(), 2);
        let total: f64 = branches.iter().map(|br| br.prob).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for br in branches {
            let (post, p) = m.update_belief(&b, 0, br.obs).unwrap();
            assert!((p - br.prob).abs() < 1e-15);
            assert!(post.l1_distance(&br.belief) < 1e-15);
        }
    }

    /// Conditioning the explicit joint over `(s, s', z)`, independent of the
    /// sparse kernel layout.
    fn brute_force_update(m: &ExplicitPomdp, b: &Belief, a: ActionId, z: ObsId) -> Option<(Vec<f64>, f64)> {
        let ns = m.n_states();
        let mut post = vec![0.0; ns];
        for s in 0..ns {
            for s2 in 0..ns {
                post[s2] += b.prob(s) * m.transition_prob(s, a, s2) * m.obs_prob(s, a, s2, z);
            }
        }
        let pz: f64 = post.iter().sum();
        (pz >= MIN_OBS_PROB).then(|| (post.iter().map(|x| x / pz).collect(), pz))
    }

    proptest::proptest! {
        #[test]
        fn exact_update_matches_brute_force(seed in 0u64..u64::MAX, ns in 1usize..=6, na in 1usize..=3, no in 1usize..=3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_pomdp(ns, na, no, 0.9, &mut rng);
            let b = m.initial_belief().clone();
            for a in 0..na {
                for z in 0..no {
                    match (m.update_belief(&b, a, z), brute_force_update(&m, &b, a, z)) {
                        (Ok((post, pz)), Some((expected, epz))) => {
                            proptest::prop_assert!((pz - epz).abs() < 1e-12);
                            for s in 0..ns {
                                proptest::prop_assert!((post.prob(s) - expected[s]).abs() < 1e-12);
                            }
                        }
                        (Err(ModelError::ZeroProbabilityObservation { .. }), None) => {}
                        (got, want) => proptest::prop_assert!(false, "{got:?} vs {want:?}"),
                    }
                }
            }
        }

        #[test]
        fn chained_updates_stay_normalized(seed in 0u64..u64::MAX) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_pomdp(5, 2, 3, 0.9, &mut rng);
            let mut b = m.initial_belief().clone();
            let mut s = b.sample(&mut rng);
            for _ in 0..30 {
                let a = rng.gen_range(0..2);
                let (s2, z) = m.sample(s, a, &mut rng);
                b = m.update_belief(&b, a, z).unwrap().0;
                proptest::prop_assert!((b.total() - 1.0).abs() < 1e-9);
                s = s2;
            }
        }
    }

    #[test]
    fn observation_probability_matches_sampling_frequency() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            let m = random_pomdp(4, 2, 3, 0.9, &mut rng);
            let b = m.initial_belief().clone();
            let n = 100_000;
            let mut counts = [0usize; 3];
            for _ in 0..n {
                let s = b.sample(&mut rng);
                counts[m.sample(s, 1, &mut rng).1] += 1;
            }
            for z in 0..3 {
                let p = m.update_belief(&b, 1, z).map(|r| r.1).unwrap_or(0.0);
                let se = (p * (1.0 - p) / n as f64).sqrt().max(1e-12);
                let freq = counts[z] as f64 / n as f64;
                assert!((freq - p).abs() <= 3.0 * se + 1e-9, "z {z}: {freq} vs {p}");
            }
        }
    }
}
