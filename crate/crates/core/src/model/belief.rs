use rand::Rng;

use super::{ModelError, StateId};

/// Tolerance on the total mass of a constructed belief.
pub const BELIEF_SUM_TOLERANCE: f64 = 1e-9;

/// A normalized probability distribution over states, stored sparsely.
///
/// Entries are kept sorted by state index and every stored probability is
/// strictly positive. States that are not stored have probability zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Belief {
    entries: Vec<(StateId, f64)>,
}

impl Belief {
    /// Builds a belief from `(state, probability)` pairs.
    ///
    /// Duplicate states are summed and zero entries dropped. The pairs must
    /// already sum to one within [`BELIEF_SUM_TOLERANCE`]; use
    /// [`Belief::normalized`] for un-normalized input.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (StateId, f64)>) -> Result<Self, ModelError> {
        let entries = collect_sorted(pairs)?;
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if (total - 1.0).abs() > BELIEF_SUM_TOLERANCE {
            return Err(ModelError::UnnormalizedBelief(total));
        }
        Ok(Self { entries })
    }

    /// Builds a belief by normalizing non-negative weights.
    pub fn normalized(pairs: impl IntoIterator<Item = (StateId, f64)>) -> Result<Self, ModelError> {
        let mut entries = collect_sorted(pairs)?;
        let total: f64 = entries.iter().map(|e| e.1).sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(ModelError::UnnormalizedBelief(total));
        }
        for e in &mut entries {
            e.1 /= total;
        }
        Ok(Self { entries })
    }

    pub fn from_dense(probs: &[f64]) -> Result<Self, ModelError> {
        Self::from_pairs(probs.iter().copied().enumerate())
    }

    pub fn uniform(n_states: usize) -> Self {
        assert!(n_states > 0, "uniform belief over an empty state space");
        let p = 1.0 / n_states as f64;
        Self {
            entries: (0..n_states).map(|s| (s, p)).collect(),
        }
    }

    /// Uniform over the given (distinct) states.
    pub fn uniform_over(states: &[StateId]) -> Self {
        assert!(!states.is_empty(), "uniform belief over an empty support");
        let p = 1.0 / states.len() as f64;
        let mut entries: Vec<_> = states.iter().map(|&s| (s, p)).collect();
        entries.sort_by_key(|e| e.0);
        entries.dedup_by_key(|e| e.0);
        assert_eq!(entries.len(), states.len(), "duplicate states in support");
        Self { entries }
    }

    pub fn point(state: StateId) -> Self {
        Self {
            entries: vec![(state, 1.0)],
        }
    }

    pub(crate) fn from_sorted_unchecked(entries: Vec<(StateId, f64)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        Self { entries }
    }

    pub fn prob(&self, state: StateId) -> f64 {
        match self.entries.binary_search_by_key(&state, |e| e.0) {
            Ok(i) => self.entries[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn entries(&self) -> &[(StateId, f64)] {
        &self.entries
    }

    pub fn support_len(&self) -> usize {
        self.entries.len()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.1).sum()
    }

    pub fn max_state(&self) -> Option<StateId> {
        self.entries.last().map(|e| e.0)
    }

    pub fn to_dense(&self, n_states: usize) -> Vec<f64> {
        let mut v = vec![0.0; n_states];
        for &(s, p) in &self.entries {
            v[s] = p;
        }
        v
    }

    /// Draws a state with probability proportional to its mass.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> StateId {
        let total = self.total();
        let mut u = rng.gen::<f64>() * total;
        for &(s, p) in &self.entries {
            if u < p {
                return s;
            }
            u -= p;
        }
        self.entries.last().expect("belief has no support").0
    }

    /// L1 distance between two beliefs.
    pub fn l1_distance(&self, other: &Belief) -> f64 {
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        let mut d = 0.0;
        while i < a.len() || j < b.len() {
            match (a.get(i), b.get(j)) {
                (Some(x), Some(y)) if x.0 == y.0 => {
                    d += (x.1 - y.1).abs();
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.0 < y.0 => {
                    d += x.1;
                    i += 1;
                }
                (Some(_), Some(y)) => {
                    d += y.1;
                    j += 1;
                }
                (Some(x), None) => {
                    d += x.1;
                    i += 1;
                }
                (None, Some(y)) => {
                    d += y.1;
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        d
    }
}

/// Read-only view of a probability distribution over states.
///
/// Implemented by [`Belief`] and by weighted particle bags, so rewards can be
/// evaluated on either without materializing a normalized copy.
pub trait StateDistribution {
    /// Calls `f(state, probability)` for every state with positive mass.
    fn for_each_prob(&self, f: &mut dyn FnMut(StateId, f64));
}

impl StateDistribution for Belief {
    fn for_each_prob(&self, f: &mut dyn FnMut(StateId, f64)) {
        for &(s, p) in &self.entries {
            f(s, p);
        }
    }
}

fn collect_sorted(pairs: impl IntoIterator<Item = (StateId, f64)>) -> Result<Vec<(StateId, f64)>, ModelError> {
    let mut entries: Vec<(StateId, f64)> = Vec::new();
    for (s, p) in pairs {
        if !p.is_finite() || p < 0.0 {
            return Err(ModelError::InvalidProbability(p));
        }
        if p > 0.0 {
            entries.push((s, p));
        }
    }
    entries.sort_by_key(|e| e.0);
    let mut merged: Vec<(StateId, f64)> = Vec::with_capacity(entries.len());
    for (s, p) in entries {
        match merged.last_mut() {
            Some(last) if last.0 == s => last.1 += p,
            _ => merged.push((s, p)),
        }
    }
    Ok(merged)
}
