use crate::model::{ActionId, Belief, ObsId};
use crate::particle::WeightedBag;

pub type NodeId = usize;

/// A history node `h`.
#[derive(Debug, Clone)]
pub struct BeliefNode {
    /// `N(h)`: completed visits, excluding the creating one.
    pub visits: u64,
    /// `B(h)`, empty for exact-belief trees.
    pub bag: WeightedBag,
    /// Exact `b(h)`, only in exact-belief trees.
    pub belief: Option<Belief>,
    /// Return of the rollout run when the node was created.
    pub rollout: f64,
    /// `V(h)`, maintained by the lvu backup.
    pub value: f64,
    pub depth: usize,
    pub(crate) first_action: usize,
}

/// A history-action node `ha`.
#[derive(Debug, Clone, Default)]
pub struct ActionNode {
    pub visits: u64,
    pub value: f64,
    /// Reward used in the last update of this node.
    pub prev_reward: f64,
    /// Cached exact `ρ(b(h), a)` when the reward ignores the next belief.
    pub exact_reward: Option<f64>,
    pub edges: Vec<ObsEdge>,
}

/// The link from `ha` to `haz`.
#[derive(Debug, Clone)]
pub struct ObsEdge {
    pub obs: ObsId,
    /// Times `z` followed `a` in `h`; sums to `N(ha)` over edges.
    pub count: u64,
    /// Last reward evaluated on this transition.
    pub reward: f64,
    /// `None` past the depth cutoff.
    pub child: Option<NodeId>,
}

/// Arena storage for the alternating belief/action tree.
#[derive(Debug, Clone)]
pub struct Arena {
    pub(crate) n_actions: usize,
    pub(crate) nodes: Vec<BeliefNode>,
    pub(crate) actions: Vec<ActionNode>,
}

impl Arena {
    pub fn new(n_actions: usize) -> Self {
        Self { n_actions, nodes: Vec::new(), actions: Vec::new() }
    }

    /// Creates an expanded node with zeroed action children.
    pub fn add_node(&mut self, depth: usize, belief: Option<Belief>) -> NodeId {
        let id = self.nodes.len();
        let first_action = self.actions.len();
        self.actions.resize_with(first_action + self.n_actions, ActionNode::default);
        self.nodes.push(BeliefNode {
            visits: 0,
            bag: WeightedBag::new(),
            belief,
            rollout: 0.0,
            value: 0.0,
            depth,
            first_action,
        });
        id
    }

    pub fn node(&self, h: NodeId) -> &BeliefNode {
        &self.nodes[h]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn action_index(&self, h: NodeId, a: ActionId) -> usize {
        self.nodes[h].first_action + a
    }

    pub fn action(&self, h: NodeId, a: ActionId) -> &ActionNode {
        &self.actions[self.nodes[h].first_action + a]
    }

    pub fn action_nodes(&self, h: NodeId) -> &[ActionNode] {
        let first = self.nodes[h].first_action;
        &self.actions[first..first + self.n_actions]
    }

    pub fn child(&self, h: NodeId, a: ActionId, z: ObsId) -> Option<NodeId> {
        self.action(h, a).edges.iter().find(|e| e.obs == z).and_then(|e| e.child)
    }

    /// Index of the `z` edge under action slot `ai`, created if missing.
    pub(crate) fn edge_index(&mut self, ai: usize, z: ObsId) -> (usize, bool) {
        let edges = &mut self.actions[ai].edges;
        match edges.iter().position(|e| e.obs == z) {
            Some(i) => (i, false),
            None => {
                edges.push(ObsEdge { obs: z, count: 0, reward: 0.0, child: None });
                (edges.len() - 1, true)
            }
        }
    }

    /// Copies the subtree under `root` into a fresh arena, rebasing depths.
    /// The old arena is consumed node by node.
    pub(crate) fn extract(mut self, root: NodeId) -> Arena {
        let mut out = Arena::new(self.n_actions);
        let base_depth = self.nodes[root].depth;
        let mut stack = vec![(root, None::<(usize, usize)>)];
        while let Some((old, parent_edge)) = stack.pop() {
            let new_id = out.nodes.len();
            let mut node = std::mem::replace(&mut self.nodes[old], placeholder());
            let old_first = node.first_action;
            node.depth -= base_depth;
            node.first_action = out.actions.len();
            out.nodes.push(node);
            for a in 0..self.n_actions {
                let mut an = std::mem::take(&mut self.actions[old_first + a]);
                let ai = out.actions.len();
                for (ei, e) in an.edges.iter_mut().enumerate() {
                    if let Some(c) = e.child.take() {
                        stack.push((c, Some((ai, ei))));
                    }
                }
                out.actions.push(an);
            }
            if let Some((ai, ei)) = parent_edge {
                out.actions[ai].edges[ei].child = Some(new_id);
            }
        }
        out
    }
}

fn placeholder() -> BeliefNode {
    BeliefNode {
        visits: 0,
        bag: WeightedBag::new(),
        belief: None,
        rollout: 0.0,
        value: 0.0,
        depth: 0,
        first_action: 0,
    }
}
