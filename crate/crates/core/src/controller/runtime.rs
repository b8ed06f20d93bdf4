//! Test-time decomposition without gold plans.
//!
//! Hardness thresholds are calibrated on the training split: for effective
//! factor `x'` the threshold is the `floor((1 - x') * 100)`-th percentile of
//! training hardness, and a problem is hard when `h(start, goal)` reaches it.
//! Hard problems get a window over a cheap skeleton path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{best_window, window_meta_plan, ControllerConfig, ControllerError, MetaPlan, Mode, Variant};
use crate::domain::{BlocksState, BlocksWorld, Direction, MazeGrid, MazeState, Problem};
use crate::hardness::{problem_hardness, Hardness, HardnessSelector};
use crate::hybrid::greedy_descent;
use crate::search::manhattan;

/// Percentile thresholds of training-split hardness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    pub selector: HardnessSelector,
    /// Entry `p` is the threshold for percentile `p`, `0..=100`. `None`
    /// means no problem is hard.
    pub thresholds: Vec<Option<u32>>,
}

impl Calibration {
    pub fn fit<W: Hardness>(train: &[Problem<W>], selector: HardnessSelector) -> Result<Self, ControllerError> {
        let mut values = train
            .iter()
            .map(|p| problem_hardness(p, selector))
            .collect::<Result<Vec<_>, _>>()?;
        values.sort_unstable();
        Ok(Calibration::from_sorted(selector, &values))
    }

    fn from_sorted(selector: HardnessSelector, values: &[u32]) -> Self {
        let n = values.len();
        let thresholds = (0..=100usize)
            .map(|p| match p {
                0 => Some(0),
                100 => None,
                _ => values.get(p * n / 100).copied(),
            })
            .collect();
        Calibration { selector, thresholds }
    }

    pub fn percentile(x_eff: f64) -> usize {
        (((1.0 - x_eff.clamp(0.0, 1.0)) * 100.0) + 1e-9).floor() as usize
    }

    pub fn threshold(&self, x_eff: f64) -> Option<u32> {
        self.thresholds[Self::percentile(x_eff).min(100)]
    }

    pub fn is_hard(&self, hardness: u32, x_eff: f64) -> bool {
        self.threshold(x_eff).is_some_and(|tau| hardness >= tau)
    }
}

/// Cheap state path from one state toward another, used to place the
/// runtime window. `None` when no skeleton is available.
pub trait Skeleton: Hardness {
    fn skeleton(&self, from: &Self::State, to: &Self::State) -> Option<Vec<Self::State>>;
}

impl Skeleton for MazeGrid {
    /// Manhattan descent that ignores obstacles (vertical moves first), with
    /// every blocked cell snapped to the nearest free cell.
    fn skeleton(&self, from: &MazeState, to: &MazeState) -> Option<Vec<MazeState>> {
        let mut cur = *from;
        let mut path = vec![cur];
        while cur != *to {
            let dir = if to.row < cur.row {
                Direction::Up
            } else if to.row > cur.row {
                Direction::Down
            } else if to.col < cur.col {
                Direction::Left
            } else {
                Direction::Right
            };
            cur = self.neighbor(cur, dir)?;
            path.push(cur);
        }
        let snap = |c: MazeState| {
            self.free_cells()
                .min_by_key(|f| (manhattan(*f, c), f.row, f.col))
                .unwrap_or(c)
        };
        Some(path.into_iter().map(|c| if self.is_free(c) { c } else { snap(c) }).collect())
    }
}

impl Skeleton for BlocksWorld {
    /// Greedy mismatch descent, abandoned after `2 * blocks` moves.
    fn skeleton(&self, from: &BlocksState, to: &BlocksState) -> Option<Vec<BlocksState>> {
        let walk = greedy_descent(self, from, to, 2 * self.len());
        walk.reached.then_some(walk.states)
    }
}

fn problem_seed(seed: u64, id: &str) -> u64 {
    let digest = Sha256::digest(id.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

/// Meta-plan for a problem at test time.
pub fn runtime_decompose<W: Skeleton>(
    problem: &Problem<W>,
    config: &ControllerConfig,
    calibration: &Calibration,
) -> Result<MetaPlan<W::State>, ControllerError> {
    config.check()?;
    let x_eff = config.effective_x();
    let whole = |mode| MetaPlan::single(problem.start.clone(), problem.goal.clone(), mode);
    let hard = match config.variant {
        Variant::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(problem_seed(config.seed, &problem.id));
            rng.gen::<f64>() < x_eff
        }
        _ => calibration.is_hard(problem_hardness(problem, calibration.selector)?, x_eff),
    };
    if !hard {
        return Ok(whole(Mode::Sys1));
    }
    let edge_only = match config.variant {
        Variant::NoSubgoal | Variant::Random => return Ok(whole(Mode::Sys2)),
        Variant::SlidingWindow => false,
        Variant::EdgeWindow => true,
    };
    match problem.instance.skeleton(&problem.start, &problem.goal) {
        Some(states) if states.len() > 1 => {
            let window = best_window(&problem.instance, &states, x_eff, config.selector, edge_only)?;
            Ok(window_meta_plan(&states, window))
        }
        _ => Ok(whole(Mode::Sys2)),
    }
}
