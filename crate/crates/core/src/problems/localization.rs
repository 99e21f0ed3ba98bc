//! Information-gathering problems on grids: Museum, the active-localization
//! mazes, GridX/GridNotX and SeekAndSeek.

use crate::model::{Belief, Labels, PomdpBuilder};
use crate::reward::{projection_from_fn, Projection, RewardSpec};

use super::grid::{self, Dir, GridSpec};
use super::{ProblemError, ProblemInstance};

const GAMMA: f64 = 0.95;

pub const PRESENT: usize = 0;
pub const CLOSE: usize = 1;
pub const ABSENT: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuseumReward {
    NegEntropy,
    Threshold(f64),
}

fn cell_label(g: &GridSpec, i: usize) -> String {
    let (x, y) = g.coords(i);
    format!("({x},{y})")
}

fn proximity(g: &GridSpec, observer: usize, target: usize) -> usize {
    if observer == target {
        PRESENT
    } else if g.neighbors(observer).contains(&target) {
        CLOSE
    } else {
        ABSENT
    }
}

/// A visitor wandering a `size×size` torus, watched by one camera per cell.
pub fn museum(size: usize, kind: MuseumReward) -> Result<ProblemInstance, ProblemError> {
    let g = GridSpec::new(size, size, true);
    let n = g.len();
    let mut b = PomdpBuilder::new(n, n, 3);
    for s in 0..n {
        let nbrs: Vec<usize> = Dir::ALL.iter().map(|&d| g.neighbor(s, d).unwrap()).collect();
        for cam in 0..n {
            b.add(s, cam, s, proximity(&g, cam, s), 0.6);
            for &s2 in &nbrs {
                b.add(s, cam, s2, proximity(&g, cam, s2), 0.1);
            }
        }
    }
    let labels = Labels {
        states: (0..n).map(|i| format!("visitor{}", cell_label(&g, i))).collect(),
        actions: (0..n).map(|i| format!("camera{}", cell_label(&g, i))).collect(),
        observations: vec!["present".into(), "close".into(), "absent".into()],
    };
    let model = b.build(GAMMA, Belief::uniform(n), labels)?;
    let (name, reward) = match kind {
        MuseumReward::NegEntropy => ("museum_entropy", RewardSpec::NegEntropy { projection: Projection::Identity }),
        MuseumReward::Threshold(alpha) => {
            ("museum_threshold", RewardSpec::BeliefThreshold { alpha, projection: Projection::Identity })
        }
    };
    Ok(ProblemInstance::new(name, model, reward, 1.0))
}

pub const BLACK: usize = 0;
pub const WHITE: usize = 1;
pub const NULL_OBS: usize = 2;
pub const OBSERVE: usize = 4;

fn color(g: &GridSpec, i: usize) -> usize {
    if g.cells[i] {
        BLACK
    } else {
        WHITE
    }
}

fn move_labels() -> Vec<String> {
    Dir::ALL.iter().map(|d| d.name().to_string()).collect()
}

/// Active localization: deterministic moves on a torus plus an `observe`
/// action returning the current cell's color.
pub fn maze(name: &str, g: &GridSpec, c_ucb: f64) -> Result<ProblemInstance, ProblemError> {
    let g = g.clone().with_toric(true);
    let n = g.len();
    let mut b = PomdpBuilder::new(n, 5, 3);
    for s in 0..n {
        for (a, &d) in Dir::ALL.iter().enumerate() {
            b.add(s, a, g.neighbor(s, d).unwrap(), NULL_OBS, 1.0);
        }
        b.add(s, OBSERVE, s, color(&g, s), 1.0);
    }
    let mut actions = move_labels();
    actions.push("observe".into());
    let labels = Labels {
        states: (0..n).map(|i| cell_label(&g, i)).collect(),
        actions,
        observations: vec!["black".into(), "white".into(), "null".into()],
    };
    let model = b.build(GAMMA, Belief::uniform(n), labels)?;
    let reward = RewardSpec::EntropyDifference { projection: Projection::Identity };
    Ok(ProblemInstance::new(name, model, reward, c_ucb))
}

/// GridX (`reward_x = true`) or GridNotX on the 3×3 map: noisy moves that
/// succeed with probability 0.8, then the color of the arrival cell.
pub fn grid_x(reward_x: bool, toric: bool) -> Result<ProblemInstance, ProblemError> {
    let g = grid::parse_grid(grid::GRID_X)?.with_toric(toric);
    let n = g.len();
    let mut b = PomdpBuilder::new(n, 4, 2);
    for s in 0..n {
        for (a, &d) in Dir::ALL.iter().enumerate() {
            match g.neighbor(s, d) {
                Some(s2) => {
                    b.add(s, a, s2, color(&g, s2), 0.8);
                    b.add(s, a, s, color(&g, s), 0.2);
                }
                None => {
                    b.add(s, a, s, color(&g, s), 1.0);
                }
            }
        }
    }
    let labels = Labels {
        states: (0..n).map(|i| cell_label(&g, i)).collect(),
        actions: move_labels(),
        observations: vec!["black".into(), "white".into()],
    };
    let model = b.build(GAMMA, Belief::uniform(n), labels)?;
    let width = g.width;
    let reward = RewardSpec::SignedL1FromTarget {
        sign: if reward_x { 1.0 } else { -1.0 },
        target: vec![1.0 / width as f64; width].into(),
        projection: projection_from_fn(n, |s| s % width),
    };
    let name = if reward_x { "grid_x" } else { "grid_not_x" };
    Ok(ProblemInstance::new(name, model, reward, 26.0))
}

/// Agent start cell in the SeekAndSeek maze.
pub const SEEK_START: (usize, usize) = (2, 1);

/// SeekAndSeek: a known agent searches a toric obstacle maze for a static
/// object. States are `agent * free + object` over the free cells.
pub fn seek_and_seek(neg_entropy: bool) -> Result<ProblemInstance, ProblemError> {
    let g = grid::parse_grid(grid::SEEK_AND_SEEK)?;
    let free: Vec<usize> = (0..g.len()).filter(|&i| !g.cells[i]).collect();
    let nf = free.len();
    let slot = |cell: usize| free.binary_search(&cell).ok();
    let n = nf * nf;
    let mut b = PomdpBuilder::new(n, 4, 3);
    for (ai, &agent) in free.iter().enumerate() {
        for (a, &d) in Dir::ALL.iter().enumerate() {
            let dest = g.neighbor(agent, d).and_then(slot).unwrap_or(ai);
            for (oi, &object) in free.iter().enumerate() {
                let z = proximity(&g, free[dest], object);
                b.add(ai * nf + oi, a, dest * nf + oi, z, 1.0);
            }
        }
    }
    let start = slot(g.index(SEEK_START.0, SEEK_START.1)).expect("start cell is free");
    let b0 = Belief::uniform_over(&(0..nf).map(|o| start * nf + o).collect::<Vec<_>>());
    let labels = Labels {
        states: (0..n)
            .map(|s| format!("agent{}object{}", cell_label(&g, free[s / nf]), cell_label(&g, free[s % nf])))
            .collect(),
        actions: move_labels(),
        observations: vec!["present".into(), "close".into(), "absent".into()],
    };
    let model = b.build(GAMMA, b0, labels)?;
    let projection = projection_from_fn(n, |s| s % nf);
    let reward = if neg_entropy {
        RewardSpec::NegEntropy { projection }
    } else {
        RewardSpec::EntropyDifference { projection }
    };
    Ok(ProblemInstance::new("seek_and_seek", model, reward, 69.3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GenerativeModel;

    #[test]
    fn museum_dimensions_and_determinism() {
        let p = museum(4, MuseumReward::NegEntropy).unwrap();
        let m = &p.model;
        assert_eq!((m.n_states(), m.n_actions(), m.n_obs()), (16, 16, 3));
        assert_eq!(p.gamma(), 0.95);
        assert_eq!(p.default_c_ucb, 1.0);
        for cam in 0..16 {
            for visitor in 0..16 {
                let probs: Vec<f64> = (0..3).map(|z| m.obs_prob(0, cam, visitor, z)).collect();
                let ones = probs.iter().filter(|&&p| p == 1.0).count();
                let zeros = probs.iter().filter(|&&p| p == 0.0).count();
                // Reachable arrivals get exactly one certain observation.
                if m.transition_prob(0, cam, visitor) > 0.0 {
                    assert_eq!((ones, zeros), (1, 2), "cam {cam} visitor {visitor}");
                }
            }
        }
        // The camera at cell 5 sees the visitor at 5 as present, 1/4/6/9 as close.
        let g = GridSpec::new(4, 4, true);
        assert_eq!(proximity(&g, 5, 5), PRESENT);
        for c in [1, 4, 6, 9] {
            assert_eq!(proximity(&g, 5, c), CLOSE);
        }
        assert_eq!(proximity(&g, 5, 15), ABSENT);
        assert_eq!(proximity(&g, 0, 12), CLOSE);
    }

    #[test]
    fn museum_motion() {
        let p = museum(4, MuseumReward::Threshold(0.8)).unwrap();
        let m = &p.model;
        assert!((m.transition_prob(5, 0, 5) - 0.6).abs() < 1e-12);
        assert!((m.transition_prob(5, 0, 6) - 0.1).abs() < 1e-12);
        assert_eq!(m.transition_prob(5, 0, 10), 0.0);
        assert!(matches!(p.reward, RewardSpec::BeliefThreshold { alpha, .. } if alpha == 0.8));
    }

    #[test]
    fn maze_moves_wrap_and_invert() {
        let g = grid::parse_grid(grid::MAZE_LINES).unwrap();
        let p = maze("maze_lines", &g, 4.3).unwrap();
        let m = &p.model;
        let step = |s: usize, a: usize| (0..m.n_states()).find(|&t| m.transition_prob(s, a, t) == 1.0).unwrap();
        for s in 0..m.n_states() {
            assert_eq!(step(step(s, 0), 1), s);
            assert_eq!(step(step(s, 2), 3), s);
            assert_eq!(step(s, OBSERVE), s);
            assert_eq!(m.obs_prob(s, OBSERVE, s, color(&g, s)), 1.0);
            assert_eq!(m.obs_prob(s, 0, step(s, 0), NULL_OBS), 1.0);
        }
        // (0,0) north wraps to (0,5).
        assert_eq!(step(0, 0), g.index(0, 5));
        assert_eq!(step(0, 3), g.index(11, 0));
    }

    #[test]
    fn grid_x_moves_are_noisy() {
        let p = grid_x(true, false).unwrap();
        let m = &p.model;
        // East from (0,0) reaches (1,0) with 0.8.
        assert!((m.transition_prob(0, 2, 1) - 0.8).abs() < 1e-12);
        assert!((m.transition_prob(0, 2, 0) - 0.2).abs() < 1e-12);
        // West from (0,0) bumps the wall.
        assert_eq!(m.transition_prob(0, 3, 0), 1.0);
        assert_eq!(m.obs_prob(0, 2, 2, BLACK), 0.0);
        let not_x = grid_x(false, false).unwrap();
        let point = Belief::point(0);
        let bx = p.reward.evaluate(&point, 0, &point);
        assert!((bx - 4.0 / 3.0).abs() < 1e-12);
        assert!((not_x.reward.evaluate(&point, 0, &point) + 4.0 / 3.0).abs() < 1e-12);
        assert!(p.reward.evaluate(p.b0(), 0, p.b0()).abs() < 1e-12);
    }

    #[test]
    fn seek_and_seek_structure() {
        let p = seek_and_seek(false).unwrap();
        let m = &p.model;
        assert_eq!(m.n_states(), 32 * 32);
        assert_eq!(p.b0().support_len(), 32);
        let h0 = crate::reward::entropy(p.b0());
        assert!((h0 - (32f64).ln()).abs() < 1e-12);
        // Every transition is deterministic in both state and observation.
        for s in 0..m.n_states() {
            for a in 0..4 {
                assert_eq!(m.outcomes(s, a).len(), 1);
            }
        }
        // The object never moves.
        for s in 0..m.n_states() {
            for a in 0..4 {
                assert_eq!(m.outcomes(s, a)[0].next % 32, s % 32);
            }
        }
    }
}
