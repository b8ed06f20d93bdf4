//! The hybrid executive: runs each sub-goal of a meta-plan on its planner
//! under a shared states-explored budget and concatenates the partial plans.
//!
//! The fast planner is a search-free greedy surrogate. It walks downhill on
//! the domain heuristic, never revisits a state, and is charged one unit per
//! emitted action.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::controller::{MetaPlan, Mode, SubGoal};
use crate::domain::{Plan, Problem, World};
use crate::search::{run_search, truncate_run, Algorithm, Run, TraceConfig};

/// Result of a greedy walk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Walk<W: World> {
    pub plan: Plan<W::Action>,
    /// Visited states, starting with the origin.
    pub states: Vec<W::State>,
    pub reached: bool,
}

/// Repeatedly takes the legal action whose successor is unvisited and has
/// the lowest heuristic to `to` (ties by action order), for at most
/// `max_steps` steps.
pub fn greedy_descent<W: World>(world: &W, from: &W::State, to: &W::State, max_steps: usize) -> Walk<W> {
    let mut state = from.clone();
    let mut visited: HashSet<W::State> = HashSet::from([state.clone()]);
    let mut actions = vec![];
    let mut states = vec![state.clone()];
    while &state != to && actions.len() < max_steps {
        let next = world
            .valid_actions(&state)
            .into_iter()
            .filter_map(|a| world.step(&state, &a).ok().map(|s| (a, s)))
            .filter(|(_, s)| !visited.contains(s))
            .min_by_key(|(_, s)| world.heuristic(s, to));
        let Some((a, s)) = next else { break };
        visited.insert(s.clone());
        actions.push(a);
        states.push(s.clone());
        state = s;
    }
    Walk {
        reached: &state == to,
        plan: Plan::new(actions),
        states,
    }
}

/// Fast-planner surrogate on one (sub-)problem. The plan may fall short of
/// the goal; its cost is its length.
pub fn greedy_plan<W: World>(world: &W, from: &W::State, to: &W::State) -> Plan<W::Action> {
    greedy_descent(world, from, to, 4 * world.step_bound()).plan
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HybridConfig {
    pub algorithm: Algorithm,
    pub trace: TraceConfig,
    /// Total states-explored budget across all sub-goals.
    pub budget: Option<u64>,
}

impl HybridConfig {
    pub fn new(algorithm: Algorithm, trace: TraceConfig) -> Self {
        HybridConfig {
            algorithm,
            trace,
            budget: None,
        }
    }

    pub fn with_budget(mut self, budget: Option<u64>) -> Self {
        self.budget = budget;
        self
    }
}

/// What happened on one sub-goal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment<W: World> {
    pub subgoal: SubGoal<W::State>,
    /// The partial plan, `None` when the search planner failed.
    pub plan: Option<Plan<W::Action>>,
    pub states_explored: u64,
    /// The search log, for search-planner segments.
    pub run: Option<Run<W>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HybridRun<W: World> {
    pub problem_id: String,
    pub meta_plan: MetaPlan<W::State>,
    pub segments: Vec<Segment<W>>,
    /// Concatenation of the partial plans produced.
    pub plan: Plan<W::Action>,
    pub states_explored: u64,
    /// Every sub-goal was attempted and every search segment found a plan.
    pub completed: bool,
}

impl<W: World> HybridRun<W> {
    pub fn sys2_calls(&self) -> usize {
        self.segments.iter().filter(|s| s.subgoal.mode == Mode::Sys2).count()
    }

    /// Serializable summary without the search logs.
    pub fn record(&self, valid: bool) -> RunRecord<W::State, W::Action> {
        RunRecord {
            problem_id: self.problem_id.clone(),
            meta_plan: self.meta_plan.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentRecord {
                    subgoal: s.subgoal.clone(),
                    plan: s.plan.clone(),
                    states_explored: s.states_explored,
                })
                .collect(),
            plan: self.plan.clone(),
            states_explored: self.states_explored,
            completed: self.completed,
            valid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize, A: Serialize", deserialize = "S: Deserialize<'de>, A: Deserialize<'de>"))]
pub struct SegmentRecord<S, A> {
    pub subgoal: SubGoal<S>,
    pub plan: Option<Plan<A>>,
    pub states_explored: u64,
}

/// One line of a planning-run log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize, A: Serialize", deserialize = "S: Deserialize<'de>, A: Deserialize<'de>"))]
pub struct RunRecord<S, A> {
    pub problem_id: String,
    pub meta_plan: MetaPlan<S>,
    pub segments: Vec<SegmentRecord<S, A>>,
    pub plan: Plan<A>,
    pub states_explored: u64,
    pub completed: bool,
    pub valid: bool,
}

/// Executes `meta_plan` on `problem`.
pub fn solve_hybrid<W: World>(problem: &Problem<W>, meta_plan: &MetaPlan<W::State>, config: &HybridConfig) -> HybridRun<W> {
    let world = &problem.instance;
    let mut used = 0u64;
    let mut segments = vec![];
    let mut completed = true;
    for (k, sg) in meta_plan.subgoals.iter().enumerate() {
        let remaining = config.budget.map(|b| b.saturating_sub(used));
        if remaining == Some(0) {
            completed = false;
            break;
        }
        let segment = match sg.mode {
            Mode::Sys1 => {
                let mut plan = greedy_plan(world, &sg.from, &sg.to);
                if let Some(r) = remaining {
                    plan.actions.truncate(usize::try_from(r).unwrap_or(usize::MAX));
                }
                Segment {
                    subgoal: sg.clone(),
                    states_explored: plan.len() as u64,
                    plan: Some(plan),
                    run: None,
                }
            }
            Mode::Sys2 => {
                let sub = problem.sub_problem(&format!("sg{k}"), sg.from.clone(), sg.to.clone());
                let mut run = run_search(&sub, config.algorithm, &config.trace);
                if let Some(r) = remaining {
                    run = truncate_run(&run, r);
                }
                Segment {
                    subgoal: sg.clone(),
                    plan: run.plan.clone(),
                    states_explored: run.states_explored(),
                    run: Some(run),
                }
            }
        };
        used += segment.states_explored;
        let failed = segment.plan.is_none();
        segments.push(segment);
        if failed {
            completed = false;
            break;
        }
    }
    let plan = Plan::concat(&segments.iter().filter_map(|s| s.plan.clone()).collect::<Vec<_>>());
    HybridRun {
        problem_id: problem.id.clone(),
        meta_plan: meta_plan.clone(),
        segments,
        plan,
        states_explored: used,
        completed,
    }
}

/// The whole problem on one planner.
pub fn solve_single<W: World>(problem: &Problem<W>, mode: Mode, config: &HybridConfig) -> HybridRun<W> {
    solve_hybrid(problem, &MetaPlan::single(problem.start.clone(), problem.goal.clone(), mode), config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_plan, Direction, MazeGrid, MazeState, Split};
    use crate::search::astar;

    const S: fn(usize, usize) -> MazeState = MazeState::new;

    fn problem(text: &str) -> Problem<MazeGrid> {
        let (grid, s, g) = MazeGrid::from_text(text).unwrap();
        Problem::new("h", grid, s.unwrap(), g.unwrap(), Split::Test)
    }

    fn config() -> HybridConfig {
        HybridConfig::new(Algorithm::Astar, TraceConfig::uncapped())
    }

    #[test]
    fn greedy_walks_straight_on_open_grid() {
        let p = problem("S..\n...\n..G");
        let plan = greedy_plan(&p.instance, &p.start, &p.goal);
        assert_eq!(plan.len(), 4);
        assert!(validate_plan(&p, &plan).is_valid());
    }

    #[test]
    fn greedy_stalls_in_dead_end() {
        // Descent enters the pocket and has nowhere unvisited to go.
        let p = problem("S.#G\n.##.\n....");
        let walk = greedy_descent(&p.instance, &p.start, &p.goal, 100);
        assert!(!walk.reached);
        assert_eq!(walk.states.last(), Some(&S(0, 1)));
    }

    #[test]
    fn single_sys2_matches_bare_search() {
        let p = problem("S...\n.##.\n...G");
        let run = solve_single(&p, Mode::Sys2, &config());
        let bare = astar(&p, &TraceConfig::uncapped());
        assert_eq!(run.states_explored, bare.states_explored());
        assert_eq!(Some(run.plan), bare.plan);
        assert!(run.completed);
    }

    #[test]
    fn chained_segments_concatenate() {
        let p = problem("S...\n....\n...G");
        let mid = S(0, 3);
        let mp = MetaPlan {
            subgoals: vec![
                SubGoal { from: p.start, to: mid, mode: Mode::Sys1 },
                SubGoal { from: mid, to: p.goal, mode: Mode::Sys2 },
            ],
        };
        let run = solve_hybrid(&p, &mp, &config());
        assert!(run.completed);
        assert_eq!(run.plan.len(), 5);
        assert!(validate_plan(&p, &run.plan).is_valid());
        let sys2 = run.segments[1].states_explored;
        assert_eq!(run.states_explored, 3 + sys2);
    }

    #[test]
    fn budget_is_shared() {
        let p = problem("S...\n....\n...G");
        let mid = S(0, 3);
        let mp = MetaPlan {
            subgoals: vec![
                SubGoal { from: p.start, to: mid, mode: Mode::Sys1 },
                SubGoal { from: mid, to: p.goal, mode: Mode::Sys2 },
            ],
        };
        let run = solve_hybrid(&p, &mp, &config().with_budget(Some(5)));
        assert!(!run.completed);
        assert_eq!(run.states_explored, 5);
        assert_eq!(run.segments[1].plan, None);
        let starved = solve_hybrid(&p, &mp, &config().with_budget(Some(2)));
        assert_eq!(starved.segments.len(), 1);
        assert_eq!(starved.plan.actions, vec![Direction::Right; 2]);
    }
}
