//! Monte Carlo tree search for belief-dependent rewards.
//!
//! Two searches share one tree layout. The particle search keeps a
//! cumulative weighted bag `B(h)` in every history node and estimates each
//! reward on it; the exact search stores the exact belief of each node,
//! computed once when the node is created.

mod config;
mod tree;


use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{ActionId, Belief, ExplicitPomdp, GenerativeModel, ModelError, ObsId, StateId};
use crate::particle::{
    propagate_importance, propagate_rejection, BagUnion, ParticleError, WeightedBag, REJECTION_ATTEMPTS_PER_PARTICLE,
};
use crate::reward::RewardSpec;

pub use config::{max_tree_depth, Budget, PlannerConfig, RolloutPolicy, Sampling, Variant};
pub use tree::{ActionNode, Arena, BeliefNode, NodeId, ObsEdge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("the planning budget is empty")]
    EmptyBudget,
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("the executed history has probability zero under the model")]
    HistoryInconsistent,
    #[error("this tree does not support {0}")]
    WrongTreeKind(&'static str),
    #[error(transparent)]
    Particle(#[from] ParticleError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    /// Cumulative particle bags (ρ-POMCP(β)).
    Particle,
    /// Exact beliefs (ρ-beliefUCT).
    Exact,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TreeStats {
    /// Descents since the current root was installed; equals `N(root)`.
    pub descents: u64,
    /// Descents run by the last plan call.
    pub last_plan_descents: u64,
    pub nodes_created: u64,
    /// Exact belief updates performed (exact trees only).
    pub belief_updates: u64,
    /// Root rebuilds from `b₀`.
    pub replays: u64,
}

/// A search tree rooted at the current history, with its own rng stream.
#[derive(Debug, Clone)]
pub struct SearchTree {
    config: PlannerConfig,
    kind: TreeKind,
    arena: Arena,
    history: Vec<(ActionId, ObsId)>,
    rng: ChaCha8Rng,
    discount: Vec<f64>,
    stats: TreeStats,
}

const ROOT: NodeId = 0;

impl SearchTree {
    /// A particle tree for the empty history.
    pub fn particle(config: PlannerConfig, n_actions: usize) -> Result<Self, PlanError> {
        Self::with_root(config, TreeKind::Particle, n_actions, None)
    }

    /// An exact-belief tree rooted at `root_belief`.
    pub fn exact(config: PlannerConfig, n_actions: usize, root_belief: Belief) -> Result<Self, PlanError> {
        Self::with_root(config, TreeKind::Exact, n_actions, Some(root_belief))
    }

    fn with_root(config: PlannerConfig, kind: TreeKind, n_actions: usize, belief: Option<Belief>) -> Result<Self, PlanError> {
        config.validate()?;
        if n_actions == 0 {
            return Err(PlanError::InvalidConfig("the model has no actions".into()));
        }
        let depth = config.max_depth();
        let discount = (0..=depth + 1).map(|d| config.gamma.powi(d as i32)).collect();
        let mut arena = Arena::new(n_actions);
        arena.add_node(0, belief);
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.tie_break_seed),
            config,
            kind,
            arena,
            history: Vec::new(),
            discount,
            stats: TreeStats { nodes_created: 1, ..TreeStats::default() },
        })
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn kind(&self) -> TreeKind {
        self.kind
    }

    pub fn arena(&self) -> &Arena {
        &self.arena
    }

    pub fn root(&self) -> &BeliefNode {
        self.arena.node(ROOT)
    }

    pub fn root_id(&self) -> NodeId {
        ROOT
    }

    pub fn stats(&self) -> &TreeStats {
        &self.stats
    }

    pub fn history(&self) -> &[(ActionId, ObsId)] {
        &self.history
    }

    /// `V(root, a)` for every action.
    pub fn root_values(&self) -> Vec<f64> {
        self.arena.action_nodes(ROOT).iter().map(|n| n.value).collect()
    }

    /// Deepest node currently in the tree.
    pub fn depth(&self) -> usize {
        self.arena.nodes.iter().map(|n| n.depth).max().unwrap_or(0)
    }

    /// The reward-scale discount `γ^d`, or 0 past the cutoff.
    fn gamma_pow(&self, d: usize) -> f64 {
        self.discount.get(d).copied().unwrap_or(0.0)
    }

    fn cut(&self, d: usize) -> bool {
        self.gamma_pow(d) < self.config.epsilon_cutoff
    }

    fn budget_done(&self, started: Instant, done: u64) -> bool {
        match self.config.budget {
            Budget::Descents(n) => done >= n,
            Budget::WallTime(t) => started.elapsed() >= t,
        }
    }

    /// Checks the structural invariants of the tree.
    ///
    /// `rho_max` bounds `|ρ|`. The lvu identities are checked only when the
    /// tree uses that variant.
    pub fn check_invariants(&self, rho_max: f64) -> Result<(), String> {
        let bound = rho_max / (1.0 - self.config.gamma) + 1e-6;
        let max_depth = self.config.max_depth();
        let root_visits = self.arena.node(ROOT).visits;
        if root_visits != self.stats.descents {
            return Err(format!("N(root) = {root_visits} but {} descents", self.stats.descents));
        }
        for (h, node) in self.arena.nodes.iter().enumerate() {
            if node.depth > max_depth {
                return Err(format!("node {h} at depth {} exceeds {max_depth}", node.depth));
            }
            let children = self.arena.action_nodes(h);
            let sum: u64 = children.iter().map(|c| c.visits).sum();
            if sum != node.visits {
                return Err(format!("node {h}: N(h) = {} but sum N(ha) = {sum}", node.visits));
            }
            if node.visits > 0 && self.kind == TreeKind::Particle && node.bag.is_empty() {
                return Err(format!("node {h} visited with an empty bag"));
            }
            for (a, c) in children.iter().enumerate() {
                if !c.value.is_finite() || c.value.abs() > bound {
                    return Err(format!("node {h} action {a}: V = {} exceeds {bound}", c.value));
                }
                let edge_sum: u64 = c.edges.iter().map(|e| e.count).sum();
                if edge_sum != c.visits {
                    return Err(format!("node {h} action {a}: edge counts {edge_sum} != N(ha) {}", c.visits));
                }
                let child_visits: u64 = c.edges.iter().filter_map(|e| e.child).map(|k| self.arena.node(k).visits).sum();
                if child_visits > c.visits {
                    return Err(format!("node {h} action {a}: children visited more than N(ha)"));
                }
                if self.config.variant == Variant::Lvu && c.visits > 0 {
                    let residual = c.value - self.lvu_action_value(c);
                    if residual.abs() > 1e-9 {
                        return Err(format!("node {h} action {a}: lvu residual {residual:e}"));
                    }
                }
            }
            if self.config.variant == Variant::Lvu && node.visits > 0 {
                let residual = node.value - self.lvu_node_value(h);
                if residual.abs() > 1e-9 {
                    return Err(format!("node {h}: lvu node residual {residual:e}"));
                }
            }
        }
        Ok(())
    }

    fn lvu_action_value(&self, c: &ActionNode) -> f64 {
        lvu_action_value(&self.arena, c, self.config.gamma)
    }

    fn lvu_node_value(&self, h: NodeId) -> f64 {
        lvu_node_value(&self.arena, h)
    }
}

/// `V(ha) = Σ_z n(ha,z)·[ρ_z + γ·V(haz)] / N(ha)` over stored edge rewards.
fn lvu_action_value(arena: &Arena, c: &ActionNode, gamma: f64) -> f64 {
    if c.visits == 0 {
        return 0.0;
    }
    let mut acc = 0.0;
    for e in &c.edges {
        let v = e.child.map_or(0.0, |k| arena.node(k).value);
        acc += e.count as f64 * (e.reward + gamma * v);
    }
    acc / c.visits as f64
}

/// `V(h) = [Rollout(h) + Σ_a N(ha)·V(ha)] / (N(h) + 1)`, the `+1` counting
/// the creating visit that produced the rollout.
fn lvu_node_value(arena: &Arena, h: NodeId) -> f64 {
    let node = arena.node(h);
    let acc: f64 = arena.action_nodes(h).iter().map(|c| c.visits as f64 * c.value).sum();
    (node.rollout + acc) / (node.visits + 1) as f64
}

/// UCB1 over the action children of a node.
///
/// Untried actions win outright, in random order. Otherwise the argmax of
/// `V(hb) + c·√(ln N(h) / N(hb))`, ties broken uniformly.
pub fn ucb1_select<R: Rng + ?Sized>(children: &[ActionNode], parent_visits: u64, c: f64, rng: &mut R) -> ActionId {
    assert!(!children.is_empty(), "ucb1_select needs at least one action");
    let untried: Vec<ActionId> = (0..children.len()).filter(|&a| children[a].visits == 0).collect();
    if !untried.is_empty() {
        return *untried.choose(rng).unwrap();
    }
    let ln_n = (parent_visits.max(1) as f64).ln();
    let scores = children.iter().map(|ch| ch.value + c * (ln_n / ch.visits as f64).sqrt());
    argmax_random(scores, rng)
}

/// Uniformly random index among the maxima of `values`.
fn argmax_random<R: Rng + ?Sized>(values: impl Iterator<Item = f64>, rng: &mut R) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for (i, v) in values.enumerate() {
        if v > best {
            best = v;
            ties.clear();
            ties.push(i);
        } else if v == best {
            ties.push(i);
        }
    }
    if ties.len() == 1 {
        ties[0]
    } else {
        *ties.choose(rng).expect("no candidate actions")
    }
}

/// `argmax_b V(hb)` at the root among tried actions (all actions when none
/// was tried), ties broken uniformly.
fn best_root_action(tree: &mut SearchTree) -> ActionId {
    let children = tree.arena.action_nodes(ROOT);
    let any_tried = children.iter().any(|c| c.visits > 0);
    let values: Vec<f64> = children
        .iter()
        .map(|c| if any_tried && c.visits == 0 { f64::NEG_INFINITY } else { c.value })
        .collect();
    argmax_random(values.into_iter(), &mut tree.rng)
}

struct Search<'a, M: ?Sized> {
    tree: &'a mut SearchTree,
    model: &'a M,
    reward: &'a RewardSpec,
}

impl<M: GenerativeModel + ?Sized> Search<'_, M> {
    /// `β' = PF(β, a, z) ∪ {(s', w_{s'})}`; the trajectory particle carries
    /// unit weight under rejection sampling.
    fn propagate(&mut self, beta: &WeightedBag, s: StateId, a: ActionId, s_next: StateId, z: ObsId) -> Result<WeightedBag, PlanError> {
        let n = self.tree.config.beta_size;
        let rng = &mut self.tree.rng;
        let (mut next, w) = match self.tree.config.sampling {
            Sampling::Importance if n > 0 => {
                (propagate_importance(beta, a, z, self.model, n, rng)?, self.model.obs_prob(s, a, s_next, z))
            }
            Sampling::Importance => (WeightedBag::new(), self.model.obs_prob(s, a, s_next, z)),
            Sampling::Rejection if n > 0 => {
                (propagate_rejection(beta, a, z, self.model, n, REJECTION_ATTEMPTS_PER_PARTICLE * n, rng)?, 1.0)
            }
            Sampling::Rejection => (WeightedBag::new(), 1.0),
        };
        next.insert(s_next, w);
        Ok(next)
    }

    fn rollout(&mut self, mut s: StateId, beta: &WeightedBag, depth: usize) -> Result<f64, PlanError> {
        if self.tree.config.rollout == RolloutPolicy::None {
            return Ok(0.0);
        }
        let n_actions = self.model.n_actions();
        let mut beta = beta.clone();
        let mut total = 0.0;
        let mut d = depth;
        while !self.tree.cut(d) {
            let a = self.tree.rng.gen_range(0..n_actions);
            let (s_next, z) = self.model.sample(s, a, &mut self.tree.rng);
            let next = self.propagate(&beta, s, a, s_next, z)?;
            total += self.tree.gamma_pow(d - depth) * self.reward.evaluate(&beta, a, &next);
            beta = next;
            s = s_next;
            d += 1;
        }
        Ok(total)
    }

    fn select(&mut self, h: NodeId) -> ActionId {
        let arena = &self.tree.arena;
        let first = arena.nodes[h].first_action;
        let children = &arena.actions[first..first + arena.n_actions];
        ucb1_select(children, arena.nodes[h].visits, self.tree.config.c_ucb, &mut self.tree.rng)
    }

    /// Simulate on an expanded node of the particle tree.
    fn simulate(&mut self, s: StateId, beta: &WeightedBag, h: NodeId, depth: usize) -> Result<f64, PlanError> {
        if self.tree.cut(depth) {
            return Ok(0.0);
        }
        let a = self.select(h);
        let (s_next, z) = self.model.sample(s, a, &mut self.tree.rng);
        let beta_next = self.propagate(beta, s, a, s_next, z)?;
        self.tree.arena.nodes[h].bag.merge_from(beta);

        let ai = self.tree.arena.action_index(h, a);
        let (ei, _) = self.tree.arena.edge_index(ai, z);
        let child = self.tree.arena.actions[ai].edges[ei].child;
        let rho = {
            let arena = &self.tree.arena;
            let parent = &arena.nodes[h].bag;
            if !self.reward.uses_next_belief() {
                self.reward.evaluate(parent, a, parent)
            } else if let Some(k) = child {
                self.reward.evaluate(parent, a, &BagUnion { a: &arena.nodes[k].bag, b: &beta_next })
            } else {
                self.reward.evaluate(parent, a, &beta_next)
            }
        };

        let future = if self.tree.cut(depth + 1) {
            0.0
        } else if let Some(k) = child {
            self.simulate(s_next, &beta_next, k, depth + 1)?
        } else {
            let k = self.create_child(ai, ei, depth + 1, None);
            let r = self.rollout(s_next, &beta_next, depth + 1)?;
            self.set_rollout(k, r);
            r
        };
        Ok(self.backup(h, ai, ei, rho, future))
    }

    fn create_child(&mut self, ai: usize, ei: usize, depth: usize, belief: Option<Belief>) -> NodeId {
        let k = self.tree.arena.add_node(depth, belief);
        self.tree.arena.actions[ai].edges[ei].child = Some(k);
        self.tree.stats.nodes_created += 1;
        k
    }

    fn set_rollout(&mut self, k: NodeId, r: f64) {
        let node = &mut self.tree.arena.nodes[k];
        node.rollout = r;
        node.value = r;
    }

    /// Counts the visit and applies the configured backup. Returns the
    /// value handed to the parent.
    fn backup(&mut self, h: NodeId, ai: usize, ei: usize, rho: f64, future: f64) -> f64 {
        let gamma = self.tree.config.gamma;
        let ret = rho + gamma * future;
        let arena = &mut self.tree.arena;
        arena.nodes[h].visits += 1;
        let an = &mut arena.actions[ai];
        an.visits += 1;
        an.edges[ei].count += 1;
        let n = an.visits as f64;
        match self.tree.config.variant {
            Variant::Vanilla => {
                an.value += (ret - an.value) / n;
                an.edges[ei].reward = rho;
                an.prev_reward = rho;
                ret
            }
            Variant::Lru => {
                an.value = (n - 1.0) / n * (an.value - an.prev_reward) + rho + gamma * future / n;
                an.edges[ei].reward = rho;
                an.prev_reward = rho;
                ret
            }
            Variant::Lvu => {
                if self.reward.uses_next_belief() {
                    an.edges[ei].reward = rho;
                } else {
                    for e in &mut an.edges {
                        e.reward = rho;
                    }
                }
                an.prev_reward = rho;
                let v = lvu_action_value(arena, &arena.actions[ai], gamma);
                arena.actions[ai].value = v;
                let vh = lvu_node_value(arena, h);
                arena.nodes[h].value = vh;
                vh
            }
        }
    }

    fn node_belief(&self, h: NodeId) -> &Belief {
        self.tree.arena.nodes[h].belief.as_ref().expect("exact tree node without a belief")
    }

    fn rollout_exact(&mut self, explicit: &ExplicitPomdp, mut s: StateId, belief: &Belief, depth: usize) -> Result<f64, PlanError> {
        if self.tree.config.rollout == RolloutPolicy::None {
            return Ok(0.0);
        }
        let n_actions = self.model.n_actions();
        let mut b = belief.clone();
        let mut total = 0.0;
        let mut d = depth;
        while !self.tree.cut(d) {
            let a = self.tree.rng.gen_range(0..n_actions);
            let (s_next, z) = self.model.sample(s, a, &mut self.tree.rng);
            let (b_next, _) = explicit.update_belief(&b, a, z)?;
            total += self.tree.gamma_pow(d - depth) * self.reward.evaluate(&b, a, &b_next);
            b = b_next;
            s = s_next;
            d += 1;
        }
        Ok(total)
    }

    /// Simulate on an expanded node of the exact tree. Observations follow
    /// the trajectory state, which is distributed as `b(h)`.
    fn simulate_exact(&mut self, explicit: &ExplicitPomdp, s: StateId, h: NodeId, depth: usize) -> Result<f64, PlanError> {
        if self.tree.cut(depth) {
            return Ok(0.0);
        }
        let a = self.select(h);
        let (s_next, z) = self.model.sample(s, a, &mut self.tree.rng);
        let ai = self.tree.arena.action_index(h, a);
        let (ei, new_edge) = self.tree.arena.edge_index(ai, z);
        let child_cut = self.tree.cut(depth + 1);
        let mut created = None;
        if new_edge {
            let (b_next, _) = explicit.update_belief(self.node_belief(h), a, z)?;
            self.tree.stats.belief_updates += 1;
            if self.reward.uses_next_belief() {
                let r = self.reward.evaluate(self.node_belief(h), a, &b_next);
                self.tree.arena.actions[ai].edges[ei].reward = r;
            }
            if !child_cut {
                created = Some(self.create_child(ai, ei, depth + 1, Some(b_next)));
            }
        }
        let rho = if self.reward.uses_next_belief() {
            self.tree.arena.actions[ai].edges[ei].reward
        } else if let Some(r) = self.tree.arena.actions[ai].exact_reward {
            r
        } else {
            let b = self.node_belief(h);
            let r = self.reward.evaluate(b, a, b);
            self.tree.arena.actions[ai].exact_reward = Some(r);
            r
        };
        let future = if child_cut {
            0.0
        } else if let Some(k) = created {
            let b = self.tree.arena.nodes[k].belief.clone().expect("exact child without belief");
            let r = self.rollout_exact(explicit, s_next, &b, depth + 1)?;
            self.set_rollout(k, r);
            r
        } else {
            let k = self.tree.arena.actions[ai].edges[ei].child.expect("exact edge without child");
            self.simulate_exact(explicit, s_next, k, depth + 1)?
        };
        Ok(self.backup(h, ai, ei, rho, future))
    }
}

/// Draws the trajectory state and a small bag of `n` more states from
/// `source`; the trajectory state joins the bag with unit weight.
fn draw_root<R: Rng + ?Sized>(source: &RootSource<'_>, n: usize, rng: &mut R) -> (StateId, WeightedBag) {
    let s = match source {
        RootSource::Belief(b) => b.sample(rng),
        RootSource::Bag(bag) => bag.sample(rng).expect("root bag is empty"),
    };
    let mut beta = match source {
        RootSource::Belief(b) => WeightedBag::sample_from(b, n, rng),
        RootSource::Bag(bag) => WeightedBag::from_states(bag.sample_many(n, rng)),
    };
    beta.insert(s, 1.0);
    (s, beta)
}

enum RootSource<'a> {
    Belief(&'a Belief),
    Bag(&'a WeightedBag),
}

/// Runs ρ-POMCP(β) descents on a particle tree until the configured budget
/// is spent and returns `argmax_b V(root, b)`.
pub fn pomcp_plan<M: GenerativeModel + ?Sized>(tree: &mut SearchTree, model: &M, reward: &RewardSpec) -> Result<ActionId, PlanError> {
    if tree.kind != TreeKind::Particle {
        return Err(PlanError::WrongTreeKind("particle search"));
    }
    if tree.config.budget.is_empty() {
        return Err(PlanError::EmptyBudget);
    }
    let started = Instant::now();
    let mut done = 0;
    let n = tree.config.beta_size;
    while !tree.budget_done(started, done) {
        let root_bag;
        let (s, beta) = if tree.history.is_empty() {
            draw_root(&RootSource::Belief(model.initial_belief()), n, &mut tree.rng)
        } else {
            root_bag = tree.arena.nodes[ROOT].bag.clone();
            draw_root(&RootSource::Bag(&root_bag), n, &mut tree.rng)
        };
        Search { tree: &mut *tree, model, reward }.simulate(s, &beta, ROOT, 0)?;
        done += 1;
        tree.stats.descents += 1;
    }
    tree.stats.last_plan_descents = done;
    Ok(best_root_action(tree))
}

/// Runs ρ-beliefUCT descents on an exact tree.
pub fn belief_uct_plan(tree: &mut SearchTree, model: &ExplicitPomdp, reward: &RewardSpec) -> Result<ActionId, PlanError> {
    if tree.kind != TreeKind::Exact {
        return Err(PlanError::WrongTreeKind("exact search"));
    }
    if tree.config.budget.is_empty() {
        return Err(PlanError::EmptyBudget);
    }
    let started = Instant::now();
    let mut done = 0;
    while !tree.budget_done(started, done) {
        let s = tree.arena.nodes[ROOT].belief.as_ref().expect("exact root without belief").sample(&mut tree.rng);
        Search { tree: &mut *tree, model, reward }.simulate_exact(model, s, ROOT, 0)?;
        done += 1;
        tree.stats.descents += 1;
    }
    tree.stats.last_plan_descents = done;
    Ok(best_root_action(tree))
}

/// One Alg. 1 Simulate call on an existing node of a particle tree.
pub fn simulate<M: GenerativeModel + ?Sized>(
    tree: &mut SearchTree,
    model: &M,
    reward: &RewardSpec,
    s: StateId,
    bag: &WeightedBag,
    node: NodeId,
    depth: usize,
) -> Result<f64, PlanError> {
    if bag.is_empty() {
        return Err(ParticleError::EmptySourceBag.into());
    }
    Search { tree, model, reward }.simulate(s, bag, node, depth)
}

/// One Alg. 1 Rollout from `(s, bag)` at `depth`, using the tree's rng and
/// configuration.
pub fn rollout<M: GenerativeModel + ?Sized>(
    tree: &mut SearchTree,
    model: &M,
    reward: &RewardSpec,
    s: StateId,
    bag: &WeightedBag,
    depth: usize,
) -> Result<f64, PlanError> {
    if bag.is_empty() {
        return Err(ParticleError::EmptySourceBag.into());
    }
    Search { tree, model, reward }.rollout(s, bag, depth)
}

/// Moves the root to the history extended by `(a, z)`.
///
/// The matching child is promoted with its subtree when it holds a belief
/// estimate. Otherwise the root belief is rebuilt from `b₀`: by particle
/// filtering the executed history on particle trees, falling back to exact
/// filtering when the particles die out, or by one exact update on exact
/// trees.
pub fn advance_root<M: GenerativeModel + ?Sized>(tree: &mut SearchTree, model: &M, a: ActionId, z: ObsId) -> Result<(), PlanError> {
    let n_actions = tree.arena.n_actions;
    if a >= n_actions {
        return Err(ModelError::IndexOutOfRange { what: "action", index: a, size: n_actions }.into());
    }
    let child = tree.arena.child(ROOT, a, z);
    tree.history.push((a, z));
    let old = std::mem::replace(&mut tree.arena, Arena::new(n_actions));
    match tree.kind {
        TreeKind::Particle => {
            let mut arena = match child {
                Some(k) => old.extract(k),
                None => fresh_arena(n_actions, None),
            };
            if arena.nodes[ROOT].bag.is_empty() {
                arena.nodes[ROOT].bag = replay(tree, model)?;
                tree.stats.replays += 1;
            }
            tree.arena = arena;
        }
        TreeKind::Exact => {
            tree.arena = match child {
                Some(k) => old.extract(k),
                None => {
                    let explicit = model.explicit().ok_or(PlanError::WrongTreeKind("generative-only models"))?;
                    let root = old.nodes[ROOT].belief.as_ref().expect("exact root without belief");
                    let (b, _) = explicit.update_belief(root, a, z).map_err(|_| PlanError::HistoryInconsistent)?;
                    tree.stats.belief_updates += 1;
                    fresh_arena(n_actions, Some(b))
                }
            };
        }
    }
    tree.stats.descents = tree.arena.nodes[ROOT].visits;
    tree.stats.nodes_created = tree.arena.len() as u64;
    Ok(())
}

fn fresh_arena(n_actions: usize, belief: Option<Belief>) -> Arena {
    let mut arena = Arena::new(n_actions);
    arena.add_node(0, belief);
    arena
}

/// Particle filter of the executed history from `b₀`.
fn replay<M: GenerativeModel + ?Sized>(tree: &mut SearchTree, model: &M) -> Result<WeightedBag, PlanError> {
    let n = tree.config.beta_size.max(tree.config.replay_particles).max(1);
    let rng = &mut tree.rng;
    let mut bag = WeightedBag::sample_from(model.initial_belief(), n, rng);
    for &(a, z) in &tree.history {
        let next = match tree.config.sampling {
            Sampling::Importance => propagate_importance(&bag, a, z, model, n, rng)?,
            Sampling::Rejection => propagate_rejection(&bag, a, z, model, n, REJECTION_ATTEMPTS_PER_PARTICLE * n, rng)?,
        };
        if next.is_empty() {
            return exact_replay(model, &tree.history, n, rng);
        }
        bag = next;
    }
    Ok(bag)
}

fn exact_replay<M: GenerativeModel + ?Sized, R: Rng + ?Sized>(
    model: &M,
    history: &[(ActionId, ObsId)],
    n: usize,
    rng: &mut R,
) -> Result<WeightedBag, PlanError> {
    let explicit = model.explicit().ok_or(PlanError::HistoryInconsistent)?;
    let mut b = model.initial_belief().clone();
    for &(a, z) in history {
        b = explicit.update_belief(&b, a, z).map_err(|_| PlanError::HistoryInconsistent)?.0;
    }
    Ok(WeightedBag::sample_from(&b, n, rng))
}
