//! Tiger, RockSampling, CameraClean and LostOrFound.

use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::model::cassandra::parse_cassandra_pomdp;
use crate::model::{Belief, Labels, PomdpBuilder};
use crate::reward::{projection_from_fn, Projection, RewardSpec};

use super::{from_model, ProblemError, ProblemInstance};

pub const TIGER_POMDP: &str = include_str!("../../fixtures/tiger.95.POMDP");

/// The classic two-door Tiger from the shipped Cassandra file (γ = 0.95).
pub fn tiger() -> Result<ProblemInstance, ProblemError> {
    from_model("tiger", parse_cassandra_pomdp(TIGER_POMDP)?, 360.0)
}

/// Grid size, rock cells and the agent's start cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RockLayout {
    pub n: usize,
    pub rocks: Vec<(usize, usize)>,
    pub start: (usize, usize),
}

impl RockLayout {
    /// `k` distinct rock cells drawn from `seed`, avoiding the start cell
    /// `(0, n/2)`.
    pub fn random(n: usize, k: usize, seed: u64) -> Self {
        let start = (0, n / 2);
        let start_idx = start.1 * n + start.0;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rocks = sample(&mut rng, n * n - 1, k)
            .into_iter()
            .map(|i| if i >= start_idx { i + 1 } else { i })
            .map(|i| (i % n, i / n))
            .collect();
        Self { n, rocks, start }
    }
}

pub const RS_NONE: usize = 0;
pub const RS_GOOD: usize = 1;
pub const RS_BAD: usize = 2;
pub const RS_SAMPLE: usize = 4;
pub const ROCK_REWARD: f64 = 100.0;

/// Probability that checking a rock at Euclidean distance `d` reports its
/// true quality.
pub fn sensor_accuracy(d: f64, n: usize) -> f64 {
    (1.0 + (-d / n as f64).exp2()) / 2.0
}

/// RockSampling without an exit: states are `cell * 2^k + mask`, bit `i` of
/// `mask` set while rock `i` is good. Sampling a rock yields ±100 and
/// leaves it bad; checks are free.
pub fn rock_sampling(layout: &RockLayout) -> Result<ProblemInstance, ProblemError> {
    let (n, k) = (layout.n, layout.rocks.len());
    let n_masks = 1usize << k;
    let n_states = n * n * n_masks;
    let n_actions = 5 + k;
    let rock_at = |x: usize, y: usize| layout.rocks.iter().position(|&r| r == (x, y));
    let mut b = PomdpBuilder::new(n_states, n_actions, 3);
    for cell in 0..n * n {
        let (x, y) = (cell % n, cell / n);
        let moves = [
            (x, y.saturating_sub(1)),
            (x, (y + 1).min(n - 1)),
            ((x + 1).min(n - 1), y),
            (x.saturating_sub(1), y),
        ];
        for mask in 0..n_masks {
            let s = cell * n_masks + mask;
            for (a, &(nx, ny)) in moves.iter().enumerate() {
                b.add(s, a, (ny * n + nx) * n_masks + mask, RS_NONE, 1.0);
            }
            match rock_at(x, y) {
                Some(i) => {
                    let good = mask & (1 << i) != 0;
                    b.add(s, RS_SAMPLE, cell * n_masks + (mask & !(1 << i)), RS_NONE, 1.0);
                    b.set_state_reward(s, RS_SAMPLE, if good { ROCK_REWARD } else { -ROCK_REWARD });
                }
                None => {
                    b.add(s, RS_SAMPLE, s, RS_NONE, 1.0);
                }
            }
            for (i, &(rx, ry)) in layout.rocks.iter().enumerate() {
                let d = ((rx as f64 - x as f64).powi(2) + (ry as f64 - y as f64).powi(2)).sqrt();
                let acc = sensor_accuracy(d, n);
                let good = mask & (1 << i) != 0;
                let (truth, lie) = if good { (RS_GOOD, RS_BAD) } else { (RS_BAD, RS_GOOD) };
                b.add(s, 5 + i, s, truth, acc);
                b.add(s, 5 + i, s, lie, 1.0 - acc);
            }
        }
    }
    let start_cell = layout.start.1 * n + layout.start.0;
    let b0 = Belief::uniform_over(&(0..n_masks).map(|m| start_cell * n_masks + m).collect::<Vec<_>>());
    let mut actions: Vec<String> = ["n", "s", "e", "w", "sample"].iter().map(|s| s.to_string()).collect();
    actions.extend((0..k).map(|i| format!("check{i}")));
    let labels = Labels {
        states: (0..n_states)
            .map(|s| format!("({},{})/{:0width$b}", (s / n_masks) % n, (s / n_masks) / n, s % n_masks, width = k.max(1)))
            .collect(),
        actions,
        observations: vec!["none".into(), "good".into(), "bad".into()],
    };
    let model = b.build_renormalized(0.95, b0, labels, 1e-12)?;
    from_model("rock_sampling", model, 100.0)
}

/// Initial lens knowledge in CameraClean.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraLens {
    Clean,
    Dirty,
    Uniform,
}

impl FromStr for CameraLens {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "clean" => Ok(CameraLens::Clean),
            "dirty" => Ok(CameraLens::Dirty),
            "uniform" => Ok(CameraLens::Uniform),
            _ => Err(format!("unknown lens state {s:?}")),
        }
    }
}

/// CameraClean variants: initial lens knowledge, the chance that a rotate or
/// shoot leaves a clean lens dirty, and whether the entropy is taken over
/// the object location or over the whole state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraCleanConfig {
    pub lens: CameraLens,
    pub dirt: f64,
    pub object_reward: bool,
}

impl Default for CameraCleanConfig {
    fn default() -> Self {
        Self { lens: CameraLens::Uniform, dirt: 0.05, object_reward: true }
    }
}

pub const CAM_ROTATE: usize = 0;
pub const CAM_SHOOT: usize = 1;
pub const CAM_CLEAN: usize = 2;
pub const CAM_SEEN: usize = 0;
pub const CAM_UNSEEN: usize = 1;
pub const CAM_NULL: usize = 2;
const ZONES: usize = 4;

/// State index for camera zone, lens (0 clean, 1 dirty) and object zone.
pub fn camera_state(zone: usize, dirty: bool, object: usize) -> usize {
    (zone * 2 + dirty as usize) * ZONES + object
}

/// CameraClean: a camera aimed at one of four zones looks for a fixed
/// object. Shots report the truth with probability 0.8 through a clean lens
/// and 0.55 through a dirty one; `clean` always leaves the lens clean.
pub fn camera_clean(config: &CameraCleanConfig) -> Result<ProblemInstance, ProblemError> {
    let n = ZONES * 2 * ZONES;
    let mut b = PomdpBuilder::new(n, 3, 3);
    for zone in 0..ZONES {
        for dirty in [false, true] {
            for object in 0..ZONES {
                let s = camera_state(zone, dirty, object);
                let soil = if dirty { 0.0 } else { config.dirt };
                let next = (zone + 1) % ZONES;
                b.add(s, CAM_ROTATE, camera_state(next, dirty, object), CAM_NULL, 1.0 - soil);
                b.add(s, CAM_ROTATE, camera_state(next, true, object), CAM_NULL, soil);
                b.add(s, CAM_CLEAN, camera_state(zone, false, object), CAM_NULL, 1.0);
                let acc = if dirty { 0.55 } else { 0.8 };
                let (truth, lie) = if object == zone { (CAM_SEEN, CAM_UNSEEN) } else { (CAM_UNSEEN, CAM_SEEN) };
                let soiled = camera_state(zone, true, object);
                b.add_transition(s, CAM_SHOOT, s, 1.0 - soil, &[(truth, acc), (lie, 1.0 - acc)]);
                b.add_transition(s, CAM_SHOOT, soiled, soil, &[(truth, acc), (lie, 1.0 - acc)]);
            }
        }
    }
    let lens_states: &[bool] = match config.lens {
        CameraLens::Clean => &[false],
        CameraLens::Dirty => &[true],
        CameraLens::Uniform => &[false, true],
    };
    let support: Vec<usize> =
        lens_states.iter().flat_map(|&d| (0..ZONES).map(move |o| camera_state(0, d, o))).collect();
    let labels = Labels {
        states: (0..n)
            .map(|s| {
                let (zone, dirty, object) = (s / (2 * ZONES), (s / ZONES) % 2 == 1, s % ZONES);
                format!("zone{zone}-{}-object{object}", if dirty { "dirty" } else { "clean" })
            })
            .collect(),
        actions: vec!["rotate".into(), "shoot".into(), "clean".into()],
        observations: vec!["seen".into(), "unseen".into(), "null".into()],
    };
    let model = b.build(0.95, Belief::uniform_over(&support), labels)?;
    let projection = if config.object_reward { projection_from_fn(n, |s| s % ZONES) } else { Projection::Identity };
    let reward = RewardSpec::EntropyDifference { projection };
    Ok(ProblemInstance::new("camera_clean", model, reward, 14.0))
}

pub const LOF_LEFT: usize = 0;
pub const LOF_RIGHT: usize = 1;
pub const LOF_STAY: usize = 2;
pub const LOF_TOGGLE: usize = 3;
pub const LOF_COLORED: usize = 0;
pub const LOF_PLAIN: usize = 1;

/// State index for a corridor cell and status (0 found, 1 lost).
pub fn lost_or_found_state(cell: usize, lost: bool) -> usize {
    cell * 2 + lost as usize
}

/// LostOrFound on a toric corridor of `cells` cells, cell 0 colored. The
/// agent starts found on the colored cell.
pub fn lost_or_found(cells: usize) -> Result<ProblemInstance, ProblemError> {
    let n = cells * 2;
    let obs = |c: usize| if c == 0 { LOF_COLORED } else { LOF_PLAIN };
    let mut b = PomdpBuilder::new(n, 4, 2);
    for c in 0..cells {
        for lost in [false, true] {
            let s = lost_or_found_state(c, lost);
            for (a, dest) in [(LOF_LEFT, (c + cells - 1) % cells), (LOF_RIGHT, (c + 1) % cells)] {
                b.add(s, a, lost_or_found_state(dest, lost), obs(dest), 0.7);
                b.add(s, a, s, obs(c), 0.3);
            }
            b.add(s, LOF_STAY, s, obs(c), 1.0);
            b.add(s, LOF_TOGGLE, lost_or_found_state(c, !lost), obs(c), 1.0);
        }
    }
    let labels = Labels {
        states: (0..n).map(|s| format!("cell{}-{}", s / 2, if s % 2 == 1 { "lost" } else { "found" })).collect(),
        actions: vec!["left".into(), "right".into(), "stay".into(), "toggle".into()],
        observations: vec!["colored".into(), "plain".into()],
    };
    let model = b.build(0.95, Belief::point(lost_or_found_state(0, false)), labels)?;
    let reward = RewardSpec::LostOrFoundComposite {
        h_max: (cells as f64).ln(),
        lost_scale: 3.0,
        location: projection_from_fn(n, |s| s / 2),
        status: projection_from_fn(n, |s| s % 2),
    };
    Ok(ProblemInstance::new("lost_or_found", model, reward, 35.0))
}
