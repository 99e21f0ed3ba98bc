//! Weighted particle bags and their propagation through a generative model.

use rand::Rng;
use thiserror::Error;

use crate::model::{ActionId, Belief, GenerativeModel, ObsId, StateDistribution, StateId};

/// Weights at or below this are dropped when bags are merged.
pub const MIN_PARTICLE_WEIGHT: f64 = 1e-300;

/// Rejection sampling gives up after `REJECTION_ATTEMPTS_PER_PARTICLE · n` draws.
pub const REJECTION_ATTEMPTS_PER_PARTICLE: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParticleError {
    #[error("cannot propagate an empty bag")]
    EmptySourceBag,
    #[error("cannot normalize an empty bag")]
    EmptyBag,
}

/// An un-normalized multiset of weighted states.
///
/// Particles of the same state are merged with their weights added, so the
/// bag is stored as `(state, weight)` pairs sorted by state.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightedBag {
    particles: Vec<(StateId, f64)>,
    total: f64,
}

impl WeightedBag {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn singleton(s: StateId, w: f64) -> Self {
        let mut bag = Self::new();
        bag.insert(s, w);
        bag
    }

    /// Builds a bag from arbitrary `(state, weight)` pairs, merging duplicates.
    pub fn from_weighted(pairs: impl IntoIterator<Item = (StateId, f64)>) -> Self {
        let mut raw: Vec<(StateId, f64)> = pairs.into_iter().filter(|p| p.1 > MIN_PARTICLE_WEIGHT).collect();
        raw.sort_unstable_by_key(|p| p.0);
        let mut particles: Vec<(StateId, f64)> = Vec::with_capacity(raw.len());
        for (s, w) in raw {
            match particles.last_mut() {
                Some(last) if last.0 == s => last.1 += w,
                _ => particles.push((s, w)),
            }
        }
        let total = particles.iter().map(|p| p.1).sum();
        Self { particles, total }
    }

    /// Unit-weight particles for each listed state.
    pub fn from_states(states: impl IntoIterator<Item = StateId>) -> Self {
        Self::from_weighted(states.into_iter().map(|s| (s, 1.0)))
    }

    /// `n` unit-weight particles drawn from `b`.
    pub fn sample_from<R: Rng + ?Sized>(b: &Belief, n: usize, rng: &mut R) -> Self {
        Self::from_states((0..n).map(|_| b.sample(rng)))
    }

    pub fn insert(&mut self, s: StateId, w: f64) {
        if !(w > MIN_PARTICLE_WEIGHT) {
            return;
        }
        match self.particles.binary_search_by_key(&s, |p| p.0) {
            Ok(i) => self.particles[i].1 += w,
            Err(i) => self.particles.insert(i, (s, w)),
        }
        self.total += w;
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Number of distinct states.
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.total
    }

    pub fn weight(&self, s: StateId) -> f64 {
        match self.particles.binary_search_by_key(&s, |p| p.0) {
            Ok(i) => self.particles[i].1,
            Err(_) => 0.0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.particles.iter().copied()
    }

    /// Draws one state with probability proportional to its weight.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<StateId> {
        if self.particles.is_empty() {
            return None;
        }
        let mut u = rng.gen::<f64>() * self.total;
        for &(s, w) in &self.particles {
            if u < w {
                return Some(s);
            }
            u -= w;
        }
        self.particles.last().map(|p| p.0)
    }

    /// Draws `n` states proportionally to weight.
    pub fn sample_many<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<StateId> {
        if self.particles.is_empty() || n == 0 {
            return Vec::new();
        }
        if self.particles.len() == 1 {
            return vec![self.particles[0].0; n];
        }
        let mut cdf = Vec::with_capacity(self.particles.len());
        let mut acc = 0.0;
        for &(_, w) in &self.particles {
            acc += w;
            cdf.push(acc);
        }
        (0..n)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                let i = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                self.particles[i].0
            })
            .collect()
    }

    /// Normalizes the weights into a belief.
    pub fn to_belief(&self) -> Result<Belief, ParticleError> {
        if self.particles.is_empty() || !(self.total > 0.0) {
            return Err(ParticleError::EmptyBag);
        }
        let total: f64 = self.particles.iter().map(|p| p.1).sum();
        Ok(Belief::from_sorted_unchecked(self.particles.iter().map(|&(s, w)| (s, w / total)).collect()))
    }

    /// Adds every particle of `small` into `self`.
    pub fn merge_from(&mut self, small: &WeightedBag) {
        if small.is_empty() {
            return;
        }
        if self.is_empty() {
            self.clone_from(small);
            return;
        }
        let (a, b) = (&self.particles, &small.particles);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            if a[i].0 == b[j].0 {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            } else if a[i].0 < b[j].0 {
                out.push(a[i]);
                i += 1;
            } else {
                out.push(b[j]);
                j += 1;
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        out.retain(|p| p.1 > MIN_PARTICLE_WEIGHT);
        self.total = out.iter().map(|p| p.1).sum();
        self.particles = out;
    }
}

impl StateDistribution for WeightedBag {
    fn for_each_prob(&self, f: &mut dyn FnMut(StateId, f64)) {
        let total = self.total;
        for &(s, w) in &self.particles {
            f(s, w / total);
        }
    }
}

/// Read-only view of `a ⊎ b` that avoids materializing the merge.
#[derive(Debug, Clone, Copy)]
pub struct BagUnion<'a> {
    pub a: &'a WeightedBag,
    pub b: &'a WeightedBag,
}

impl StateDistribution for BagUnion<'_> {
    fn for_each_prob(&self, f: &mut dyn FnMut(StateId, f64)) {
        let total = self.a.total + self.b.total;
        let (x, y) = (&self.a.particles, &self.b.particles);
        let (mut i, mut j) = (0, 0);
        while i < x.len() || j < y.len() {
            let (s, w) = match (x.get(i), y.get(j)) {
                (Some(p), Some(q)) if p.0 == q.0 => {
                    i += 1;
                    j += 1;
                    (p.0, p.1 + q.1)
                }
                (Some(p), Some(q)) if p.0 < q.0 => {
                    i += 1;
                    *p
                }
                (Some(_), Some(q)) | (None, Some(q)) => {
                    j += 1;
                    *q
                }
                (Some(p), None) => {
                    i += 1;
                    *p
                }
                (None, None) => unreachable!(),
            };
            f(s, w / total);
        }
    }
}

/// `cumulative ⊎ small`.
pub fn merge_into(mut cumulative: WeightedBag, small: &WeightedBag) -> WeightedBag {
    cumulative.merge_from(small);
    cumulative
}

pub fn to_belief(bag: &WeightedBag) -> Result<Belief, ParticleError> {
    bag.to_belief()
}

/// Importance-sampling step: `n` draws `s ~ bag`, `s' ~ G(s, a)`, each
/// weighted by `P(z | s, a, s')`.
pub fn propagate_importance<M, R>(
    bag: &WeightedBag,
    a: ActionId,
    z: ObsId,
    model: &M,
    n: usize,
    rng: &mut R,
) -> Result<WeightedBag, ParticleError>
where
    M: GenerativeModel + ?Sized,
    R: Rng + ?Sized,
{
    if bag.is_empty() {
        return Err(ParticleError::EmptySourceBag);
    }
    let sources = bag.sample_many(n, rng);
    let mut out = Vec::with_capacity(n);
    for s in sources {
        let (s_next, _) = model.sample(s, a, rng);
        let w = model.obs_prob(s, a, s_next, z);
        if w > 0.0 {
            out.push((s_next, w));
        }
    }
    Ok(WeightedBag::from_weighted(out))
}

/// Rejection-sampling step: keeps unit-weight successors whose sampled
/// observation equals `z`, until `n` are accepted or `max_attempts` draws
/// have been made.
pub fn propagate_rejection<M, R>(
    bag: &WeightedBag,
    a: ActionId,
    z: ObsId,
    model: &M,
    n: usize,
    max_attempts: usize,
    rng: &mut R,
) -> Result<WeightedBag, ParticleError>
where
    M: GenerativeModel + ?Sized,
    R: Rng + ?Sized,
{
    if bag.is_empty() {
        return Err(ParticleError::EmptySourceBag);
    }
    let mut accepted = Vec::with_capacity(n);
    let mut attempts = 0;
    while accepted.len() < n && attempts < max_attempts {
        let batch = (n - accepted.len()).min(max_attempts - attempts);
        for s in bag.sample_many(batch, rng) {
            let (s_next, z_sampled) = model.sample(s, a, rng);
            if z_sampled == z {
                accepted.push(s_next);
            }
        }
        attempts += batch;
    }
    Ok(WeightedBag::from_states(accepted))
}
