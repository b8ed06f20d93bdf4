//! Seeded problem-set generators.
//!
//! Mazes are rejection-sampled until every optimal-length bucket of every
//! split holds its quota. Blocksworld pairs are drawn from uniformly random
//! configurations and routed to a split by optimal plan length.

use std::collections::HashSet;

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand::seq::index;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Block, BlocksState, BlocksWorld, MazeGrid, MazeState, Problem, Split, World};
use crate::search::oracle::{astar_plan, bfs_plan};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerationError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("gave up after {attempts} attempts; still missing {missing} problems")]
    Exhausted { attempts: u64, missing: usize },
}

/// Problems grouped by split, each in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits<W: World> {
    pub train: Vec<Problem<W>>,
    pub val: Vec<Problem<W>>,
    pub test: Vec<Problem<W>>,
}

impl<W: World> Splits<W> {
    pub fn get(&self, split: Split) -> &[Problem<W>] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.val.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = &Problem<W>> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }

    pub fn into_vec(self) -> Vec<Problem<W>> {
        let mut all = self.train;
        all.extend(self.val);
        all.extend(self.test);
        all
    }

    /// Regroups a flat list by each problem's split tag.
    pub fn from_problems(problems: impl IntoIterator<Item = Problem<W>>) -> Self {
        let mut out = Splits {
            train: vec![],
            val: vec![],
            test: vec![],
        };
        for p in problems {
            match p.split {
                Split::Train => out.train.push(p),
                Split::Val => out.val.push(p),
                Split::Test => out.test.push(p),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazeConfig {
    pub rows: usize,
    pub cols: usize,
    pub obstacle_fraction: f64,
    pub min_length: usize,
    pub max_length: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub max_attempts: u64,
}

impl Default for MazeConfig {
    fn default() -> Self {
        MazeConfig {
            rows: 5,
            cols: 5,
            obstacle_fraction: 0.4,
            min_length: 1,
            max_length: 8,
            train: 3200,
            val: 400,
            test: 400,
            max_attempts: 5_000_000,
        }
    }
}

impl MazeConfig {
    pub fn obstacle_count(&self) -> usize {
        ((self.rows * self.cols) as f64 * self.obstacle_fraction + 1e-9).floor() as usize
    }

    fn check(&self) -> Result<(), GenerationError> {
        let cells = self.rows * self.cols;
        if cells < 2 {
            return Err(GenerationError::Config("grid needs at least two cells".into()));
        }
        if !(0.0..1.0).contains(&self.obstacle_fraction) || self.obstacle_count() + 2 > cells {
            return Err(GenerationError::Config(format!(
                "obstacle fraction {} leaves no room for start and goal",
                self.obstacle_fraction
            )));
        }
        if self.min_length == 0 || self.min_length > self.max_length {
            return Err(GenerationError::Config(format!(
                "plan-length range [{}, {}] must be non-empty and start at 1 or more",
                self.min_length, self.max_length
            )));
        }
        Ok(())
    }
}

/// Splits `total` as evenly as possible over `buckets`, lower buckets first.
fn quotas(total: usize, buckets: usize) -> Vec<usize> {
    (0..buckets)
        .map(|i| total / buckets + usize::from(i < total % buckets))
        .collect()
}

fn problem_id(prefix: &str, split: Split, n: usize) -> String {
    format!("{prefix}-{split}-{n:05}")
}

/// Generates a length-balanced maze problem set.
pub fn generate_maze_dataset(seed: u64, config: &MazeConfig) -> Result<Splits<MazeGrid>, GenerationError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buckets = config.max_length - config.min_length + 1;
    let sizes = [config.train, config.val, config.test];
    let mut remaining: Vec<Vec<usize>> = sizes.iter().map(|&n| quotas(n, buckets)).collect();
    let mut missing: usize = sizes.iter().sum();
    let mut out: Splits<MazeGrid> = Splits::from_problems([]);
    let cells = config.rows * config.cols;
    let n_obstacles = config.obstacle_count();

    let mut attempts = 0u64;
    while missing > 0 {
        if attempts >= config.max_attempts {
            return Err(GenerationError::Exhausted { attempts, missing });
        }
        attempts += 1;
        let obstacles = index::sample(&mut rng, cells, n_obstacles)
            .into_iter()
            .map(|i| MazeState::new(i / config.cols, i % config.cols));
        let grid = MazeGrid::new(config.rows, config.cols, obstacles).expect("cells inside grid");
        let free: Vec<MazeState> = grid.free_cells().collect();
        let ends = index::sample(&mut rng, free.len(), 2);
        let (start, goal) = (free[ends.index(0)], free[ends.index(1)]);
        let Some(plan) = bfs_plan(&grid, &start, &goal) else {
            continue;
        };
        let len = plan.len();
        if len < config.min_length || len > config.max_length {
            continue;
        }
        let bucket = len - config.min_length;
        let Some(slot) = (0..3).find(|&s| remaining[s][bucket] > 0) else {
            continue;
        };
        remaining[slot][bucket] -= 1;
        missing -= 1;
        let split = Split::ALL[slot];
        let list = match split {
            Split::Train => &mut out.train,
            Split::Val => &mut out.val,
            Split::Test => &mut out.test,
        };
        let id = problem_id("maze", split, list.len());
        list.push(Problem::new(id, grid, start, goal, split).with_gold(plan));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlocksConfig {
    pub min_blocks: usize,
    pub max_blocks: usize,
    pub train: usize,
    pub val: usize,
    pub test: usize,
    /// Inclusive optimal-length range for train and val.
    pub train_lengths: (usize, usize),
    /// Inclusive optimal-length range for test.
    pub test_lengths: (usize, usize),
    pub max_attempts: u64,
}

impl Default for BlocksConfig {
    fn default() -> Self {
        BlocksConfig {
            min_blocks: 4,
            max_blocks: 7,
            train: 3000,
            val: 250,
            test: 200,
            train_lengths: (1, 6),
            test_lengths: (7, 10),
            max_attempts: 2_000_000,
        }
    }
}

impl BlocksConfig {
    fn check(&self) -> Result<(), GenerationError> {
        if self.min_blocks < 2 || self.min_blocks > self.max_blocks || self.max_blocks > 26 {
            return Err(GenerationError::Config(format!(
                "block counts [{}, {}] must lie within [2, 26]",
                self.min_blocks, self.max_blocks
            )));
        }
        for (lo, hi) in [self.train_lengths, self.test_lengths] {
            if lo == 0 || lo > hi {
                return Err(GenerationError::Config(format!("bad length range [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Number of ways to place `n` labelled blocks into exactly `k` stacks
/// (Lah numbers), for `k = 1..=n`.
fn stack_count_weights(n: usize) -> Vec<u128> {
    let factorial = |m: usize| (1..=m as u128).product::<u128>();
    let choose = |a: usize, b: usize| factorial(a) / (factorial(b) * factorial(a - b));
    (1..=n)
        .map(|k| choose(n - 1, k - 1) * factorial(n) / factorial(k))
        .collect()
}

/// A configuration drawn uniformly from all arrangements of `blocks`.
pub fn random_configuration<R: Rng>(rng: &mut R, blocks: &[Block]) -> BlocksState {
    let n = blocks.len();
    let weights = stack_count_weights(n);
    let k = WeightedIndex::new(weights.iter().map(|&w| w as f64))
        .expect("positive weights")
        .sample(rng)
        + 1;
    let mut order = blocks.to_vec();
    order.shuffle(rng);
    let mut cuts: Vec<usize> = index::sample(rng, n - 1, k - 1).into_iter().map(|c| c + 1).collect();
    cuts.sort_unstable();
    let mut stacks = vec![];
    let mut lo = 0;
    for cut in cuts.into_iter().chain([n]) {
        stacks.push(order[lo..cut].to_vec());
        lo = cut;
    }
    BlocksState::new(stacks).expect("a permutation has no duplicates")
}

/// Generates Blocksworld splits: train/val from the short length range,
/// test from the long one, no repeated (start, goal) pairs.
pub fn generate_blocks_dataset(seed: u64, config: &BlocksConfig) -> Result<Splits<BlocksWorld>, GenerationError> {
    config.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = config.train_lengths.1.max(config.test_lengths.1) as u32;
    let mut seen: HashSet<(BlocksState, BlocksState)> = HashSet::new();
    let mut out: Splits<BlocksWorld> = Splits::from_problems([]);
    let in_range = |len: usize, (lo, hi): (usize, usize)| (lo..=hi).contains(&len);

    let mut attempts = 0u64;
    loop {
        let missing = config.train.saturating_sub(out.train.len())
            + config.val.saturating_sub(out.val.len())
            + config.test.saturating_sub(out.test.len());
        if missing == 0 {
            return Ok(out);
        }
        if attempts >= config.max_attempts {
            return Err(GenerationError::Exhausted { attempts, missing });
        }
        attempts += 1;
        let n = rng.gen_range(config.min_blocks..=config.max_blocks);
        let world = BlocksWorld::with_count(n);
        let start = random_configuration(&mut rng, world.blocks());
        let goal = random_configuration(&mut rng, world.blocks());
        if start == goal || seen.contains(&(start.clone(), goal.clone())) {
            continue;
        }
        let short_open = out.train.len() < config.train || out.val.len() < config.val;
        let long_open = out.test.len() < config.test;
        // Skip the search when no split could take the pair anyway.
        let lower = world.heuristic(&start, &goal) as usize;
        if !(short_open && lower <= config.train_lengths.1) && !(long_open && lower <= config.test_lengths.1) {
            continue;
        }
        let Some(plan) = astar_plan(&world, &start, &goal, Some(bound)) else {
            continue;
        };
        let len = plan.len();
        let split = if in_range(len, config.train_lengths) && out.train.len() < config.train {
            Split::Train
        } else if in_range(len, config.train_lengths) && out.val.len() < config.val {
            Split::Val
        } else if in_range(len, config.test_lengths) && long_open {
            Split::Test
        } else {
            continue;
        };
        seen.insert((start.clone(), goal.clone()));
        let list = match split {
            Split::Train => &mut out.train,
            Split::Val => &mut out.val,
            Split::Test => &mut out.test,
        };
        let id = problem_id("blocks", split, list.len());
        list.push(Problem::new(id, world, start, goal, split).with_gold(plan));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::validate_plan;
    use std::collections::HashMap;

    fn small_maze(lo: usize, hi: usize, n: usize) -> MazeConfig {
        MazeConfig {
            min_length: lo,
            max_length: hi,
            train: n,
            val: n / 4,
            test: n / 4,
            ..MazeConfig::default()
        }
    }

    #[test]
    fn quotas_spread_remainder() {
        assert_eq!(quotas(3200, 8), vec![400; 8]);
        assert_eq!(quotas(10, 4), vec![3, 3, 2, 2]);
    }

    #[test]
    fn ten_obstacles_by_default() {
        assert_eq!(MazeConfig::default().obstacle_count(), 10);
    }

    #[test]
    fn single_length_range() {
        let sets = generate_maze_dataset(3, &small_maze(1, 1, 40)).unwrap();
        assert_eq!(sets.len(), 60);
        for p in sets.iter() {
            assert_eq!(p.gold_plan.as_ref().unwrap().len(), 1);
            assert_eq!(p.instance.obstacles().len(), 10);
        }
    }

    #[test]
    fn balanced_buckets_and_valid_gold() {
        let sets = generate_maze_dataset(11, &small_maze(1, 8, 160)).unwrap();
        for split in Split::ALL {
            let mut counts: HashMap<usize, usize> = HashMap::new();
            for p in sets.get(split) {
                p.check().unwrap();
                assert!(validate_plan(p, p.gold_plan.as_ref().unwrap()).is_valid());
                *counts.entry(p.optimal_length.unwrap()).or_default() += 1;
            }
            let quota = sets.get(split).len() / 8;
            assert!(counts.values().all(|&c| c == quota), "{split}: {counts:?}");
        }
    }

    #[test]
    fn maze_generation_is_deterministic() {
        let cfg = small_maze(1, 8, 16);
        assert_eq!(generate_maze_dataset(5, &cfg).unwrap(), generate_maze_dataset(5, &cfg).unwrap());
        assert_ne!(generate_maze_dataset(5, &cfg).unwrap(), generate_maze_dataset(6, &cfg).unwrap());
    }

    #[test]
    fn impossible_lengths_exhaust() {
        let cfg = MazeConfig {
            min_length: 30,
            max_length: 30,
            max_attempts: 500,
            ..small_maze(1, 1, 4)
        };
        assert!(matches!(
            generate_maze_dataset(1, &cfg),
            Err(GenerationError::Exhausted { attempts: 500, .. })
        ));
    }

    #[test]
    fn lah_weights() {
        // 1, 3, 13, 73 total arrangements for 1..4 blocks.
        let totals: Vec<u128> = (1..=4).map(|n| stack_count_weights(n).iter().sum()).collect();
        assert_eq!(totals, vec![1, 3, 13, 73]);
    }

    #[test]
    fn random_configurations_are_uniform_over_three_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let blocks: Vec<Block> = (0..3).map(Block::nth).collect();
        let mut counts: HashMap<BlocksState, usize> = HashMap::new();
        for _ in 0..13_000 {
            *counts.entry(random_configuration(&mut rng, &blocks)).or_default() += 1;
        }
        assert_eq!(counts.len(), 13);
        assert!(counts.values().all(|&c| (800..1200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn small_blocks_dataset() {
        let cfg = BlocksConfig {
            min_blocks: 4,
            max_blocks: 6,
            train: 40,
            val: 10,
            test: 10,
            ..BlocksConfig::default()
        };
        let sets = generate_blocks_dataset(2, &cfg).unwrap();
        assert_eq!((sets.train.len(), sets.val.len(), sets.test.len()), (40, 10, 10));
        let mut pairs = HashSet::new();
        for p in sets.iter() {
            p.check().unwrap();
            assert_ne!(p.start, p.goal);
            assert!(pairs.insert((p.start.clone(), p.goal.clone())));
            let len = p.optimal_length.unwrap();
            match p.split {
                Split::Test => assert!((7..=10).contains(&len)),
                _ => assert!((1..=6).contains(&len)),
            }
        }
        assert_eq!(sets, generate_blocks_dataset(2, &cfg).unwrap());
    }
}
