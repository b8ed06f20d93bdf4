//! Grid mazes with four-way movement.
//!
//! Coordinates are `(row, col)`, 0-indexed, with `up` decreasing the row.

use std::collections::BTreeSet;
use std::fmt::{self, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DomainTag, InvalidMove, TokenError, World};
use crate::search::manhattan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct MazeState {
    pub row: usize,
    pub col: usize,
}

impl MazeState {
    pub const fn new(row: usize, col: usize) -> Self {
        MazeState { row, col }
    }
}

impl Display for MazeState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

impl FromStr for MazeState {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TokenError::new(s, "maze cell `(row,col)`");
        let inner = s
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(err)?;
        let (r, c) = inner.split_once(',').ok_or_else(err)?;
        Ok(MazeState {
            row: r.trim().parse().map_err(|_| err())?,
            col: c.trim().parse().map_err(|_| err())?,
        })
    }
}

impl From<MazeState> for String {
    fn from(s: MazeState) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for MazeState {
    type Error = TokenError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    /// Canonical probe order.
    pub const ALL: [Direction; 4] = [Direction::Up, Direction::Down, Direction::Left, Direction::Right];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::Up => Direction::Down,
            Direction::Down => Direction::Up,
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }

    fn offset(self) -> (isize, isize) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }
}

impl Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

impl FromStr for Direction {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "up" => Ok(Direction::Up),
            "down" => Ok(Direction::Down),
            "left" => Ok(Direction::Left),
            "right" => Ok(Direction::Right),
            other => Err(TokenError::new(other, "maze action")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error("grid must have at least one row and one column")]
    Empty,
    #[error("obstacle {0} lies outside the grid")]
    ObstacleOutside(MazeState),
}

/// A rectangular maze. Obstacles are kept sorted so serialization is stable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct MazeGrid {
    rows: usize,
    cols: usize,
    obstacles: BTreeSet<MazeState>,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    rows: usize,
    cols: usize,
    obstacles: Vec<MazeState>,
}

impl TryFrom<RawGrid> for MazeGrid {
    type Error = GridError;

    fn try_from(raw: RawGrid) -> Result<Self, Self::Error> {
        MazeGrid::new(raw.rows, raw.cols, raw.obstacles)
    }
}

impl From<MazeGrid> for RawGrid {
    fn from(g: MazeGrid) -> RawGrid {
        RawGrid {
            rows: g.rows,
            cols: g.cols,
            obstacles: g.obstacles.into_iter().collect(),
        }
    }
}

impl MazeGrid {
    pub fn new(
        rows: usize,
        cols: usize,
        obstacles: impl IntoIterator<Item = MazeState>,
    ) -> Result<Self, GridError> {
        if rows == 0 || cols == 0 {
            return Err(GridError::Empty);
        }
        let obstacles: BTreeSet<MazeState> = obstacles.into_iter().collect();
        if let Some(bad) = obstacles.iter().find(|c| c.row >= rows || c.col >= cols) {
            return Err(GridError::ObstacleOutside(*bad));
        }
        Ok(MazeGrid { rows, cols, obstacles })
    }

    /// A grid without obstacles.
    pub fn open(rows: usize, cols: usize) -> Self {
        MazeGrid::new(rows, cols, []).expect("non-empty grid")
    }

    /// Parses the character rendering (`.` free, `#` obstacle, `S`/`G`
    /// count as free). Returns the grid plus the `S` and `G` cells if present.
    pub fn from_text(text: &str) -> Result<(Self, Option<MazeState>, Option<MazeState>), TokenError> {
        let mut obstacles = vec![];
        let (mut start, mut goal) = (None, None);
        let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let cols = lines.first().map_or(0, |l| l.trim().chars().count());
        for (r, line) in lines.iter().enumerate() {
            let line = line.trim();
            if line.chars().count() != cols {
                return Err(TokenError::new(line, "grid row of uniform width"));
            }
            for (c, ch) in line.chars().enumerate() {
                match ch {
                    '.' => {}
                    '#' => obstacles.push(MazeState::new(r, c)),
                    'S' => start = Some(MazeState::new(r, c)),
                    'G' => goal = Some(MazeState::new(r, c)),
                    _ => return Err(TokenError::new(ch.to_string(), "grid character")),
                }
            }
        }
        let grid = MazeGrid::new(lines.len(), cols, obstacles)
            .map_err(|_| TokenError::new(text, "non-empty grid"))?;
        Ok((grid, start, goal))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn obstacles(&self) -> &BTreeSet<MazeState> {
        &self.obstacles
    }

    pub fn in_bounds(&self, cell: MazeState) -> bool {
        cell.row < self.rows && cell.col < self.cols
    }

    pub fn is_obstacle(&self, cell: MazeState) -> bool {
        self.obstacles.contains(&cell)
    }

    pub fn is_free(&self, cell: MazeState) -> bool {
        self.in_bounds(cell) && !self.is_obstacle(cell)
    }

    pub fn cells(&self) -> impl Iterator<Item = MazeState> + '_ {
        (0..self.rows).flat_map(move |r| (0..self.cols).map(move |c| MazeState::new(r, c)))
    }

    pub fn free_cells(&self) -> impl Iterator<Item = MazeState> + '_ {
        self.cells().filter(|c| !self.is_obstacle(*c))
    }

    /// The neighbouring cell in `dir`, if it lies on the grid at all.
    pub fn neighbor(&self, cell: MazeState, dir: Direction) -> Option<MazeState> {
        let (dr, dc) = dir.offset();
        let row = cell.row.checked_add_signed(dr)?;
        let col = cell.col.checked_add_signed(dc)?;
        let next = MazeState::new(row, col);
        self.in_bounds(next).then_some(next)
    }

    /// Text rendering with `S` and `G` marking the endpoints.
    pub fn render(&self, start: Option<MazeState>, goal: Option<MazeState>) -> String {
        let mut out = String::with_capacity((self.cols + 1) * self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                let cell = MazeState::new(r, c);
                let ch = if Some(cell) == start {
                    'S'
                } else if Some(cell) == goal {
                    'G'
                } else if self.is_obstacle(cell) {
                    '#'
                } else {
                    '.'
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

/// One maze transition.
pub fn maze_step(grid: &MazeGrid, state: MazeState, dir: Direction) -> Result<MazeState, InvalidMove> {
    let next = grid.neighbor(state, dir).ok_or(InvalidMove::OutOfBounds)?;
    if grid.is_obstacle(next) {
        return Err(InvalidMove::Obstacle);
    }
    Ok(next)
}

impl World for MazeGrid {
    type State = MazeState;
    type Action = Direction;

    const TAG: DomainTag = DomainTag::Maze;

    fn step(&self, state: &MazeState, action: &Direction) -> Result<MazeState, InvalidMove> {
        maze_step(self, *state, *action)
    }

    fn probe_actions(&self, _state: &MazeState) -> Vec<Direction> {
        Direction::ALL.to_vec()
    }

    fn valid_actions(&self, state: &MazeState) -> Vec<Direction> {
        Direction::ALL
            .into_iter()
            .filter(|d| maze_step(self, *state, *d).is_ok())
            .collect()
    }

    fn heuristic(&self, from: &MazeState, to: &MazeState) -> u32 {
        manhattan(*from, *to)
    }

    fn contains(&self, state: &MazeState) -> bool {
        self.is_free(*state)
    }

    fn step_bound(&self) -> usize {
        self.rows * self.cols
    }

    fn describe(&self, start: &MazeState, goal: &MazeState) -> String {
        format!(
            "maze {}x{} start {} goal {}\n{}",
            self.rows,
            self.cols,
            start,
            goal,
            self.render(Some(*start), Some(*goal))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const S: fn(usize, usize) -> MazeState = MazeState::new;

    #[test]
    fn step_up_from_centre() {
        let g = MazeGrid::open(5, 5);
        assert_eq!(maze_step(&g, S(2, 2), Direction::Up), Ok(S(1, 2)));
    }

    #[test]
    fn step_off_the_top_edge() {
        let g = MazeGrid::open(5, 5);
        assert_eq!(maze_step(&g, S(0, 0), Direction::Up), Err(InvalidMove::OutOfBounds));
    }

    #[test]
    fn step_into_obstacle() {
        let g = MazeGrid::new(5, 5, [S(1, 2)]).unwrap();
        assert_eq!(maze_step(&g, S(2, 2), Direction::Up), Err(InvalidMove::Obstacle));
    }

    #[test]
    fn valid_actions_interior_and_corner() {
        let g = MazeGrid::open(5, 5);
        assert_eq!(g.valid_actions(&S(2, 2)), Direction::ALL.to_vec());
        assert_eq!(g.valid_actions(&S(0, 0)), vec![Direction::Down, Direction::Right]);
    }

    #[test]
    fn grid_rejects_outside_obstacle() {
        assert_eq!(
            MazeGrid::new(3, 3, [S(3, 0)]),
            Err(GridError::ObstacleOutside(S(3, 0)))
        );
    }

    #[test]
    fn render_and_parse_text() {
        let g = MazeGrid::new(3, 4, [S(0, 1), S(2, 3)]).unwrap();
        let text = g.render(Some(S(0, 0)), Some(S(2, 2)));
        assert_eq!(text, "S#..\n....\n..G#\n");
        let (back, s, goal) = MazeGrid::from_text(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(s, Some(S(0, 0)));
        assert_eq!(goal, Some(S(2, 2)));
    }

    #[test]
    fn state_text_round_trip() {
        assert_eq!("(3,4)".parse::<MazeState>().unwrap(), S(3, 4));
        assert!("(3;4)".parse::<MazeState>().is_err());
    }

    fn grid_strategy() -> impl Strategy<Value = MazeGrid> {
        proptest::collection::btree_set((0usize..5, 0usize..5), 0..12).prop_map(|cells| {
            MazeGrid::new(5, 5, cells.into_iter().map(|(r, c)| S(r, c))).unwrap()
        })
    }

    proptest! {
        #[test]
        fn steps_are_reversible(grid in grid_strategy(), r in 0usize..5, c in 0usize..5, d in 0usize..4) {
            let from = S(r, c);
            prop_assume!(grid.is_free(from));
            let dir = Direction::ALL[d];
            if let Ok(to) = maze_step(&grid, from, dir) {
                prop_assert_eq!(maze_step(&grid, to, dir.opposite()), Ok(from));
            }
        }

        #[test]
        fn steps_are_deterministic(grid in grid_strategy(), r in 0usize..5, c in 0usize..5, d in 0usize..4) {
            let dir = Direction::ALL[d];
            prop_assert_eq!(maze_step(&grid, S(r, c), dir), maze_step(&grid, S(r, c), dir));
        }
    }
}
