//! Controller training data and runtime decomposition.
//!
//! Training data: problems are ranked by `h(start, goal)`; the easiest
//! `floor((1 - x) * N)` are labelled fast-planner only and the rest get a
//! window of `round(x * n)` plan steps handed to the search planner, placed
//! where `h(s0, su) - h(su, sv) + h(sv, sg)` is smallest.

mod runtime;

use std::fmt::{self, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{state_sequence, Plan, Problem, TokenError, World};
use crate::hardness::{rank_indices, Hardness, HardnessError, HardnessSelector};

pub use runtime::{runtime_decompose, Calibration, Skeleton};

/// Which planner a sub-goal goes to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    #[serde(rename = "SYS1")]
    Sys1,
    #[serde(rename = "SYS2")]
    Sys2,
}

impl Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Sys1 => "SYS1",
            Mode::Sys2 => "SYS2",
        })
    }
}

impl FromStr for Mode {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "SYS1" => Ok(Mode::Sys1),
            "SYS2" => Ok(Mode::Sys2),
            other => Err(TokenError::new(other, "mode tag SYS1|SYS2")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct SubGoal<S> {
    pub from: S,
    pub to: S,
    pub mode: Mode,
}

/// Ordered, chained sub-goals from the start state to the goal state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct MetaPlan<S> {
    pub subgoals: Vec<SubGoal<S>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetaPlanError {
    #[error("a meta-plan needs between one and three sub-goals, got {0}")]
    Size(usize),
    #[error("the first sub-goal does not start at the start state")]
    StartAnchor,
    #[error("the last sub-goal does not end at the goal state")]
    GoalAnchor,
    #[error("sub-goal {0} does not start where the previous one ends")]
    Broken(usize),
    #[error("more than one SYS2 sub-goal")]
    ManySys2,
}

impl<S: Clone + PartialEq> MetaPlan<S> {
    pub fn single(from: S, to: S, mode: Mode) -> Self {
        MetaPlan {
            subgoals: vec![SubGoal { from, to, mode }],
        }
    }

    pub fn sys2_count(&self) -> usize {
        self.subgoals.iter().filter(|s| s.mode == Mode::Sys2).count()
    }

    pub fn is_sys1_only(&self) -> bool {
        self.sys2_count() == 0
    }

    pub fn check(&self, start: &S, goal: &S) -> Result<(), MetaPlanError> {
        let n = self.subgoals.len();
        if !(1..=3).contains(&n) {
            return Err(MetaPlanError::Size(n));
        }
        if &self.subgoals[0].from != start {
            return Err(MetaPlanError::StartAnchor);
        }
        if &self.subgoals[n - 1].to != goal {
            return Err(MetaPlanError::GoalAnchor);
        }
        if let Some(k) = (1..n).find(|&k| self.subgoals[k].from != self.subgoals[k - 1].to) {
            return Err(MetaPlanError::Broken(k));
        }
        if self.sys2_count() > 1 {
            return Err(MetaPlanError::ManySys2);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    SlidingWindow,
    /// The search window must touch the start or the goal.
    EdgeWindow,
    /// Hard instances go wholly to the search planner.
    NoSubgoal,
    /// Instances are declared hard at random.
    Random,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::SlidingWindow, Variant::EdgeWindow, Variant::NoSubgoal, Variant::Random];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::SlidingWindow => "sliding-window",
            Variant::EdgeWindow => "edge-window",
            Variant::NoSubgoal => "no-subgoal",
            Variant::Random => "random",
        }
    }
}

impl Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| TokenError::new(s, "controller variant"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    /// Hybridization factor in `[0, 1]`.
    pub x: f64,
    /// Test-time shift added to `x`.
    pub bias: f64,
    pub variant: Variant,
    pub selector: HardnessSelector,
    pub seed: u64,
}

impl ControllerConfig {
    pub fn new(x: f64, selector: HardnessSelector) -> Self {
        ControllerConfig {
            x,
            bias: 0.0,
            variant: Variant::SlidingWindow,
            selector,
            seed: 0,
        }
    }

    pub fn with_bias(mut self, bias: f64) -> Self {
        self.bias = bias;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `x + bias`, clamped to `[0, 1]`.
    pub fn effective_x(&self) -> f64 {
        (self.x + self.bias).clamp(0.0, 1.0)
    }

    pub fn check(&self) -> Result<(), ControllerError> {
        check_x(self.x)?;
        if !(-1.0..=1.0).contains(&self.bias) {
            return Err(ControllerError::BiasOutOfRange(self.bias));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("hybridization factor {0} lies outside [0, 1]")]
    XOutOfRange(f64),
    #[error("bias {0} lies outside [-1, 1]")]
    BiasOutOfRange(f64),
    #[error("a window needs x > 0; label the instance fast-planner only instead")]
    ZeroWindow,
    #[error("cannot place a window on an empty plan")]
    EmptyPlan,
    #[error("problem {0} has no gold plan")]
    MissingGold(String),
    #[error("gold plan of problem {0} is not executable")]
    BadGold(String),
    #[error(transparent)]
    Hardness(#[from] HardnessError),
}

fn check_x(x: f64) -> Result<(), ControllerError> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(ControllerError::XOutOfRange(x))
    }
}

/// `round(x * n)` clamped to `[1, n]`.
pub fn window_length(x: f64, n: usize) -> usize {
    ((x * n as f64).round() as usize).clamp(1, n.max(1))
}

/// A window `[u, v]` over a state sequence and its objective value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub u: usize,
    pub v: usize,
    pub objective: i64,
}

/// Scores `h(s0, su) - h(su, sv) + h(sv, sg)` for one placement.
pub fn window_objective<W: Hardness>(
    world: &W,
    states: &[W::State],
    u: usize,
    v: usize,
    selector: HardnessSelector,
) -> Result<i64, HardnessError> {
    let n = states.len() - 1;
    let h = |a: usize, b: usize| world.hardness(selector, &states[a], &states[b]).map(i64::from);
    Ok(h(0, u)? - h(u, v)? + h(v, n)?)
}

/// Best window of `round(x * n)` steps over `states` (`n + 1` states).
/// With `edge_only`, only placements touching either end are considered.
/// Ties go to the smallest `u`.
pub fn best_window<W: Hardness>(
    world: &W,
    states: &[W::State],
    x: f64,
    selector: HardnessSelector,
    edge_only: bool,
) -> Result<Window, ControllerError> {
    check_x(x)?;
    if x == 0.0 {
        return Err(ControllerError::ZeroWindow);
    }
    let n = states.len().checked_sub(1).filter(|&n| n > 0).ok_or(ControllerError::EmptyPlan)?;
    let w = window_length(x, n);
    let placements: Vec<usize> = if edge_only {
        let mut us = vec![0, n - w];
        us.dedup();
        us
    } else {
        (0..=n - w).collect()
    };
    let mut best: Option<Window> = None;
    for u in placements {
        let objective = window_objective(world, states, u, u + w, selector)?;
        if best.is_none_or(|b| objective < b.objective) {
            best = Some(Window { u, v: u + w, objective });
        }
    }
    Ok(best.expect("at least one placement"))
}

/// Up to three chained sub-goals around `window`.
pub fn window_meta_plan<S: Clone + PartialEq>(states: &[S], window: Window) -> MetaPlan<S> {
    let n = states.len() - 1;
    let mut subgoals = vec![];
    if window.u > 0 {
        subgoals.push(SubGoal {
            from: states[0].clone(),
            to: states[window.u].clone(),
            mode: Mode::Sys1,
        });
    }
    subgoals.push(SubGoal {
        from: states[window.u].clone(),
        to: states[window.v].clone(),
        mode: Mode::Sys2,
    });
    if window.v < n {
        subgoals.push(SubGoal {
            from: states[window.v].clone(),
            to: states[n].clone(),
            mode: Mode::Sys1,
        });
    }
    MetaPlan { subgoals }
}

fn gold_states<W: World>(problem: &Problem<W>, plan: &Plan<W::Action>) -> Result<Vec<W::State>, ControllerError> {
    let states = state_sequence(&problem.instance, &problem.start, plan)
        .map_err(|_| ControllerError::BadGold(problem.id.clone()))?;
    if states.last() != Some(&problem.goal) {
        return Err(ControllerError::BadGold(problem.id.clone()));
    }
    Ok(states)
}

fn decompose<W: Hardness>(
    problem: &Problem<W>,
    gold: &Plan<W::Action>,
    x: f64,
    selector: HardnessSelector,
    edge_only: bool,
) -> Result<MetaPlan<W::State>, ControllerError> {
    let states = gold_states(problem, gold)?;
    let window = best_window(&problem.instance, &states, x, selector, edge_only)?;
    Ok(window_meta_plan(&states, window))
}

/// Sliding-window decomposition of a gold plan.
pub fn sliding_window_decompose<W: Hardness>(
    problem: &Problem<W>,
    gold: &Plan<W::Action>,
    x: f64,
    selector: HardnessSelector,
) -> Result<MetaPlan<W::State>, ControllerError> {
    decompose(problem, gold, x, selector, false)
}

/// Ablation: the search window sits at the start or the end of the plan.
pub fn edge_window_decompose<W: Hardness>(
    problem: &Problem<W>,
    gold: &Plan<W::Action>,
    x: f64,
    selector: HardnessSelector,
) -> Result<MetaPlan<W::State>, ControllerError> {
    decompose(problem, gold, x, selector, true)
}

/// One line of the controller dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct ControllerRecord<S> {
    pub problem_id: String,
    pub meta_plan: MetaPlan<S>,
}

/// `floor((1 - x) * n)`, tolerant of float noise such as `(1 - 0.7) * 10`.
pub fn easy_count(x: f64, n: usize) -> usize {
    (((1.0 - x) * n as f64) + 1e-9).floor() as usize
}

/// Builds controller training records in ascending hardness order.
pub fn build_controller_dataset<W: Hardness>(
    problems: &[Problem<W>],
    config: &ControllerConfig,
) -> Result<Vec<ControllerRecord<W::State>>, ControllerError> {
    config.check()?;
    let x = config.x;
    let order = rank_indices(problems, config.selector)?;
    let easy = easy_count(x, problems.len());
    let mut hard = vec![false; problems.len()];
    match config.variant {
        Variant::Random => {
            use rand::seq::index;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
            for i in index::sample(&mut rng, problems.len(), problems.len() - easy) {
                hard[i] = true;
            }
        }
        _ => {
            for &i in &order[easy..] {
                hard[i] = true;
            }
        }
    }
    order
        .into_iter()
        .map(|i| {
            let p = &problems[i];
            let meta_plan = if !hard[i] {
                MetaPlan::single(p.start.clone(), p.goal.clone(), Mode::Sys1)
            } else {
                let gold = || p.gold_plan.as_ref().ok_or_else(|| ControllerError::MissingGold(p.id.clone()));
                match config.variant {
                    Variant::SlidingWindow => sliding_window_decompose(p, gold()?, x, config.selector)?,
                    Variant::EdgeWindow => edge_window_decompose(p, gold()?, x, config.selector)?,
                    Variant::NoSubgoal | Variant::Random => {
                        MetaPlan::single(p.start.clone(), p.goal.clone(), Mode::Sys2)
                    }
                }
            };
            Ok(ControllerRecord {
                problem_id: p.id.clone(),
                meta_plan,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Direction, MazeGrid, MazeState, Split};

    const S: fn(usize, usize) -> MazeState = MazeState::new;
    use Direction::*;

    /// Staircase walk from (0,0) to (4,4) on a 5x5 grid, right then down.
    fn staircase(obstacles: &[(usize, usize)]) -> (Problem<MazeGrid>, Plan<Direction>) {
        let grid = MazeGrid::new(5, 5, obstacles.iter().map(|&(r, c)| S(r, c))).unwrap();
        let plan = Plan::new([Right, Down].repeat(4));
        let p = Problem::new("c", grid, S(0, 0), S(4, 4), Split::Train).with_gold(plan.clone());
        (p, plan)
    }

    /// Exhaustive placement scan written independently of `best_window`.
    fn brute_force(grid: &MazeGrid, states: &[MazeState], w: usize) -> (usize, i64) {
        let n = states.len() - 1;
        let count = |a: MazeState, b: MazeState| {
            grid.cells()
                .filter(|c| {
                    grid.is_obstacle(*c)
                        && c.row >= a.row.min(b.row)
                        && c.row <= a.row.max(b.row)
                        && c.col >= a.col.min(b.col)
                        && c.col <= a.col.max(b.col)
                })
                .count() as i64
        };
        let mut best = (usize::MAX, i64::MAX);
        for u in 0..=n {
            for v in u..=n {
                if v - u != w {
                    continue;
                }
                let obj = count(states[0], states[u]) - count(states[u], states[v]) + count(states[v], states[n]);
                if obj < best.1 {
                    best = (u, obj);
                }
            }
        }
        best
    }

    #[test]
    fn window_lengths() {
        assert_eq!(window_length(0.5, 8), 4);
        assert_eq!(window_length(0.5, 5), 3);
        assert_eq!(window_length(0.01, 5), 1);
        assert_eq!(window_length(1.0, 1), 1);
    }

    #[test]
    fn half_window_on_eight_steps_matches_enumeration() {
        let (p, plan) = staircase(&[(1, 0), (0, 2), (3, 2), (4, 3), (2, 4)]);
        let states = state_sequence(&p.instance, &p.start, &plan).unwrap();
        let window = best_window(&p.instance, &states, 0.5, HardnessSelector::MazeObstacles, false).unwrap();
        let (u, obj) = brute_force(&p.instance, &states, 4);
        assert_eq!((window.u, window.objective), (u, obj));
        assert_eq!(window.v - window.u, 4);
        let mp = sliding_window_decompose(&p, &plan, 0.5, HardnessSelector::MazeObstacles).unwrap();
        mp.check(&p.start, &p.goal).unwrap();
        assert_eq!(mp.sys2_count(), 1);
    }

    #[test]
    fn full_window_is_single_sys2() {
        let (p, plan) = staircase(&[(2, 0)]);
        for decompose in [sliding_window_decompose::<MazeGrid>, edge_window_decompose::<MazeGrid>] {
            let mp = decompose(&p, &plan, 1.0, HardnessSelector::MazeObstacles).unwrap();
            assert_eq!(mp, MetaPlan::single(p.start, p.goal, Mode::Sys2));
        }
    }

    #[test]
    fn one_step_plan_clamps_window() {
        let grid = MazeGrid::open(2, 2);
        let plan = Plan::new(vec![Right]);
        let p = Problem::new("o", grid, S(0, 0), S(0, 1), Split::Train);
        let mp = sliding_window_decompose(&p, &plan, 0.2, HardnessSelector::MazeObstacles).unwrap();
        assert_eq!(mp, MetaPlan::single(S(0, 0), S(0, 1), Mode::Sys2));
    }

    #[test]
    fn zero_x_rejected() {
        let (p, plan) = staircase(&[]);
        assert_eq!(
            sliding_window_decompose(&p, &plan, 0.0, HardnessSelector::MazeObstacles),
            Err(ControllerError::ZeroWindow)
        );
    }

    #[test]
    fn edge_window_picks_better_end() {
        // Obstacles sit near the goal, so the window goes there.
        let (p, plan) = staircase(&[(3, 2), (4, 2), (4, 3)]);
        let states = state_sequence(&p.instance, &p.start, &plan).unwrap();
        let edge = best_window(&p.instance, &states, 0.5, HardnessSelector::MazeObstacles, true).unwrap();
        let start_obj = window_objective(&p.instance, &states, 0, 4, HardnessSelector::MazeObstacles).unwrap();
        let end_obj = window_objective(&p.instance, &states, 4, 8, HardnessSelector::MazeObstacles).unwrap();
        assert_eq!(edge.objective, start_obj.min(end_obj));
        assert_eq!(edge.u, 4);
        let mp = edge_window_decompose(&p, &plan, 0.5, HardnessSelector::MazeObstacles).unwrap();
        assert_eq!(mp.subgoals.len(), 2);
    }

    #[test]
    fn edge_window_never_beats_sliding_window() {
        let (p, plan) = staircase(&[(1, 3), (3, 1)]);
        let states = state_sequence(&p.instance, &p.start, &plan).unwrap();
        for x in [0.25, 0.5, 0.75] {
            let edge = best_window(&p.instance, &states, x, HardnessSelector::MazeObstacles, true).unwrap();
            let slide = best_window(&p.instance, &states, x, HardnessSelector::MazeObstacles, false).unwrap();
            assert!(edge.objective >= slide.objective);
        }
    }

    fn four_problems() -> Vec<Problem<MazeGrid>> {
        [&[][..], &[(1, 0), (2, 0), (3, 0)][..], &[(0, 4)][..], &[(2, 1), (4, 1)][..]]
            .iter()
            .enumerate()
            .map(|(i, cols)| {
                let (mut p, _) = staircase(cols);
                p.id = format!("p{i}");
                p
            })
            .collect()
    }

    #[test]
    fn dataset_easy_count() {
        let problems = four_problems();
        let cfg = ControllerConfig::new(0.5, HardnessSelector::MazeObstacles);
        let records = build_controller_dataset(&problems, &cfg).unwrap();
        assert_eq!(records.len(), 4);
        let easy: Vec<&str> = records
            .iter()
            .filter(|r| r.meta_plan.is_sys1_only())
            .map(|r| r.problem_id.as_str())
            .collect();
        assert_eq!(easy, ["p0", "p2"]);
    }

    #[test]
    fn dataset_extremes() {
        let problems = four_problems();
        let all_easy = build_controller_dataset(&problems, &ControllerConfig::new(0.0, HardnessSelector::MazeObstacles)).unwrap();
        assert!(all_easy.iter().all(|r| r.meta_plan.subgoals.len() == 1 && r.meta_plan.is_sys1_only()));
        let all_hard = build_controller_dataset(&problems, &ControllerConfig::new(1.0, HardnessSelector::MazeObstacles)).unwrap();
        for r in &all_hard {
            assert_eq!(r.meta_plan, MetaPlan::single(S(0, 0), S(4, 4), Mode::Sys2));
        }
    }

    #[test]
    fn dataset_random_variant_counts() {
        let problems = four_problems();
        let cfg = ControllerConfig::new(0.75, HardnessSelector::MazeObstacles).with_variant(Variant::Random).with_seed(3);
        let records = build_controller_dataset(&problems, &cfg).unwrap();
        assert_eq!(records.iter().filter(|r| r.meta_plan.is_sys1_only()).count(), 1);
    }

    #[test]
    fn easy_count_floors() {
        assert_eq!(easy_count(0.7, 10), 3);
        assert_eq!(easy_count(0.5, 5), 2);
        assert_eq!(easy_count(0.0, 7), 7);
        assert_eq!(easy_count(1.0, 7), 0);
    }

    #[test]
    fn meta_plan_checks() {
        let mp = MetaPlan {
            subgoals: vec![
                SubGoal { from: 0, to: 1, mode: Mode::Sys1 },
                SubGoal { from: 2, to: 3, mode: Mode::Sys2 },
            ],
        };
        assert_eq!(mp.check(&0, &3), Err(MetaPlanError::Broken(1)));
        assert_eq!(MetaPlan::single(0, 3, Mode::Sys1).check(&1, &3), Err(MetaPlanError::StartAnchor));
    }

    #[test]
    fn config_validation() {
        assert!(ControllerConfig::new(1.5, HardnessSelector::MazeObstacles).check().is_err());
        let c = ControllerConfig::new(0.5, HardnessSelector::MazeObstacles).with_bias(0.75);
        assert_eq!(c.effective_x(), 1.0);
    }
}
