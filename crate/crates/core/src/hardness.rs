//! Hardness functions over (sub-)goals and hardness ranking of problem sets.

use std::fmt::{self, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{BlocksState, BlocksWorld, DomainTag, MazeGrid, MazeState, Problem, TokenError, World};
use crate::search::manhattan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HardnessSelector {
    /// Obstacles inside the rectangle spanned by the two cells.
    MazeObstacles,
    MazeManhattan,
    /// Weighted count of misplaced blocks.
    BlocksDistance,
}

impl HardnessSelector {
    pub const ALL: [HardnessSelector; 3] = [
        HardnessSelector::MazeObstacles,
        HardnessSelector::MazeManhattan,
        HardnessSelector::BlocksDistance,
    ];

    pub fn domain(self) -> DomainTag {
        match self {
            HardnessSelector::MazeObstacles | HardnessSelector::MazeManhattan => DomainTag::Maze,
            HardnessSelector::BlocksDistance => DomainTag::Blocks,
        }
    }

    pub fn default_for(domain: DomainTag) -> Self {
        match domain {
            DomainTag::Maze => HardnessSelector::MazeObstacles,
            DomainTag::Blocks => HardnessSelector::BlocksDistance,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HardnessSelector::MazeObstacles => "maze-obstacles",
            HardnessSelector::MazeManhattan => "maze-manhattan",
            HardnessSelector::BlocksDistance => "blocks-distance",
        }
    }
}

impl Display for HardnessSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HardnessSelector {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HardnessSelector::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| TokenError::new(s, "hardness selector"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("hardness function {selector} does not apply to the {domain} domain")]
pub struct HardnessError {
    pub selector: HardnessSelector,
    pub domain: DomainTag,
}

/// Domains with hardness functions.
pub trait Hardness: World {
    fn hardness(&self, selector: HardnessSelector, a: &Self::State, b: &Self::State) -> Result<u32, HardnessError>;
}

fn check<W: World>(selector: HardnessSelector) -> Result<(), HardnessError> {
    if selector.domain() == W::TAG {
        Ok(())
    } else {
        Err(HardnessError {
            selector,
            domain: W::TAG,
        })
    }
}

/// Obstacle cells in the closed rectangle with corners `a` and `b`.
pub fn maze_obstacles(grid: &MazeGrid, a: MazeState, b: MazeState) -> u32 {
    let rows = a.row.min(b.row)..=a.row.max(b.row);
    let cols = a.col.min(b.col)..=a.col.max(b.col);
    grid.obstacles()
        .iter()
        .filter(|o| rows.contains(&o.row) && cols.contains(&o.col))
        .count() as u32
}

/// Each block whose neighbour below or above differs between `a` and `b`
/// costs 1, plus 1 more when it is not on the table in `a`.
pub fn blocks_distance(a: &BlocksState, b: &BlocksState) -> u32 {
    a.blocks()
        .into_iter()
        .filter(|&blk| a.below(blk) != b.below(blk) || a.above(blk) != b.above(blk))
        .map(|blk| if a.on_table(blk) { 1 } else { 2 })
        .sum()
}

impl Hardness for MazeGrid {
    fn hardness(&self, selector: HardnessSelector, a: &MazeState, b: &MazeState) -> Result<u32, HardnessError> {
        check::<Self>(selector)?;
        Ok(match selector {
            HardnessSelector::MazeObstacles => maze_obstacles(self, *a, *b),
            _ => manhattan(*a, *b),
        })
    }
}

impl Hardness for BlocksWorld {
    fn hardness(&self, selector: HardnessSelector, a: &BlocksState, b: &BlocksState) -> Result<u32, HardnessError> {
        check::<Self>(selector)?;
        Ok(blocks_distance(a, b))
    }
}

/// Hardness of each problem's full goal, `h(start, goal)`.
pub fn problem_hardness<W: Hardness>(problem: &Problem<W>, selector: HardnessSelector) -> Result<u32, HardnessError> {
    problem.instance.hardness(selector, &problem.start, &problem.goal)
}

/// Indices of `problems` in ascending hardness; ties keep input order.
pub fn rank_indices<W: Hardness>(problems: &[Problem<W>], selector: HardnessSelector) -> Result<Vec<usize>, HardnessError> {
    let keys = problems
        .iter()
        .map(|p| problem_hardness(p, selector))
        .collect::<Result<Vec<_>, _>>()?;
    let mut order: Vec<usize> = (0..problems.len()).collect();
    order.sort_by_key(|&i| keys[i]);
    Ok(order)
}

/// Stable ascending sort by `h(start, goal)`.
pub fn rank_problems<W: Hardness>(problems: &[Problem<W>], selector: HardnessSelector) -> Result<Vec<Problem<W>>, HardnessError> {
    Ok(rank_indices(problems, selector)?
        .into_iter()
        .map(|i| problems[i].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Split;
    use proptest::prelude::*;

    const S: fn(usize, usize) -> MazeState = MazeState::new;

    #[test]
    fn obstacle_rectangle() {
        let g = MazeGrid::new(5, 5, [S(1, 1), S(3, 3)]).unwrap();
        assert_eq!(maze_obstacles(&g, S(0, 0), S(2, 2)), 1);
        assert_eq!(maze_obstacles(&g, S(2, 2), S(0, 0)), 1);
        assert_eq!(maze_obstacles(&g, S(4, 4), S(0, 0)), 2);
        assert_eq!(maze_obstacles(&g, S(1, 1), S(1, 1)), 1);
    }

    #[test]
    fn blocks_distance_examples() {
        let s = |l: &[&str]| BlocksState::from_labels(l).unwrap();
        assert_eq!(blocks_distance(&s(&["AB"]), &s(&["AB"])), 0);
        assert_eq!(blocks_distance(&s(&["AB"]), &s(&["BA"])), 3);
        // A keeps its support but loses B from above: misplaced, on table.
        assert_eq!(blocks_distance(&s(&["AB"]), &s(&["A", "B"])), 3);
    }

    #[test]
    fn selector_must_match_domain() {
        let g = MazeGrid::open(2, 2);
        let err = g.hardness(HardnessSelector::BlocksDistance, &S(0, 0), &S(1, 1)).unwrap_err();
        assert_eq!(err.domain, DomainTag::Maze);
        assert_eq!(
            "maze-manhattan".parse::<HardnessSelector>().unwrap(),
            HardnessSelector::MazeManhattan
        );
    }

    fn maze_problem(id: &str, obstacles: &[(usize, usize)]) -> Problem<MazeGrid> {
        let grid = MazeGrid::new(5, 5, obstacles.iter().map(|&(r, c)| S(r, c))).unwrap();
        Problem::new(id, grid, S(0, 0), S(4, 4), Split::Train)
    }

    #[test]
    fn ranking_orders_and_is_stable() {
        let hard = maze_problem("hard", &[(1, 1), (1, 2), (2, 1), (3, 2), (2, 3)]);
        let easy = maze_problem("easy", &[(1, 1), (3, 3)]);
        let ranked = rank_problems(&[hard.clone(), easy.clone()], HardnessSelector::MazeObstacles).unwrap();
        assert_eq!(ranked[0].id, "easy");
        let ties: Vec<_> = (0..4).map(|i| maze_problem(&i.to_string(), &[(2, 2)])).collect();
        let ranked = rank_problems(&ties, HardnessSelector::MazeObstacles).unwrap();
        assert_eq!(ranked.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["0", "1", "2", "3"]);
    }

    fn cell() -> impl Strategy<Value = MazeState> {
        (0usize..6, 0usize..6).prop_map(|(r, c)| S(r, c))
    }

    fn grid() -> impl Strategy<Value = MazeGrid> {
        proptest::collection::btree_set(cell(), 0..15).prop_map(|o| MazeGrid::new(6, 6, o).unwrap())
    }

    proptest! {
        #[test]
        fn maze_functions_symmetric(g in grid(), a in cell(), b in cell()) {
            for sel in [HardnessSelector::MazeObstacles, HardnessSelector::MazeManhattan] {
                prop_assert_eq!(g.hardness(sel, &a, &b).unwrap(), g.hardness(sel, &b, &a).unwrap());
            }
        }

        #[test]
        fn obstacle_count_monotone_under_containment(g in grid(), a in cell(), b in cell(), c in cell()) {
            // The rectangle spanned by a and the bounding box of {b, c} contains
            // the rectangle spanned by a and b.
            let lo = S(a.row.min(b.row).min(c.row), a.col.min(b.col).min(c.col));
            let hi = S(a.row.max(b.row).max(c.row), a.col.max(b.col).max(c.col));
            prop_assert!(maze_obstacles(&g, lo, hi) >= maze_obstacles(&g, a, b));
        }

        #[test]
        fn ranking_matches_recomputed_sort(seeds in proptest::collection::vec(0u8..8, 1..40)) {
            let problems: Vec<_> = seeds.iter().enumerate().map(|(i, &k)| {
                let obstacles: Vec<(usize, usize)> = (0..k as usize).map(|j| (1 + j % 3, 1 + j / 3)).collect();
                maze_problem(&i.to_string(), &obstacles)
            }).collect();
            let ranked = rank_problems(&problems, HardnessSelector::MazeObstacles).unwrap();
            let mut oracle: Vec<(u32, usize)> = problems.iter().enumerate()
                .map(|(i, p)| (p.instance.obstacles().len() as u32, i)).collect();
            oracle.sort();
            let expect: Vec<String> = oracle.iter().map(|&(_, i)| i.to_string()).collect();
            prop_assert_eq!(ranked.iter().map(|p| p.id.clone()).collect::<Vec<_>>(), expect);
        }
    }
}
