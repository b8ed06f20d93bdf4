use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};

use super::tracer::{Probe, Tracer};
use super::{Algorithm, Run, TraceConfig};
use crate::domain::{InvalidMove, Problem, World};

/// A* with unit edge costs and the domain heuristic.
///
/// The frontier is ordered by `f = g + t`, then lower `t`, then insertion
/// order. A probe whose successor is closed, or already open with an equal
/// or better `g`, is recorded as `already-visited`. The search stops once the
/// expansion that generated the goal has been fully recorded.
pub fn astar<W: World>(problem: &Problem<W>, config: &TraceConfig) -> Run<W> {
    let mut tracer = Tracer::new(problem, Algorithm::Astar, config);
    if tracer.found() {
        return tracer.finish();
    }
    let world = &problem.instance;
    let goal = &problem.goal;

    let mut open = BinaryHeap::new();
    let mut best_g: HashMap<W::State, u32> = HashMap::new();
    let mut closed: HashSet<W::State> = HashSet::new();
    let h0 = world.heuristic(&problem.start, goal);
    open.push(Reverse((h0, h0, 0u64, 0usize)));
    best_g.insert(problem.start.clone(), 0);
    let mut seq = 1u64;

    while let Some(Reverse((_, _, _, id))) = open.pop() {
        let state = tracer.node(id).state.clone();
        if !closed.insert(state.clone()) {
            continue;
        }
        tracer.ensure_recorded(id);
        let g = tracer.node(id).g;

        let mut probes = vec![];
        let mut fresh = vec![];
        for action in world.probe_actions(&state) {
            match world.step(&state, &action) {
                Ok(next) => {
                    let known = closed.contains(&next) || best_g.get(&next).is_some_and(|&b| b <= g + 1);
                    if known {
                        probes.push(Probe::Rejected {
                            action,
                            state: Some(next),
                            reason: InvalidMove::AlreadyVisited,
                        });
                    } else {
                        best_g.insert(next.clone(), g + 1);
                        let node = tracer.add_node(id, action, next);
                        probes.push(Probe::Generated { node });
                        fresh.push(node);
                    }
                }
                Err(reason) => probes.push(Probe::Rejected {
                    action,
                    state: None,
                    reason,
                }),
            }
        }
        if tracer.record_expansion(id, &probes) {
            break;
        }
        for node in fresh {
            let t = world.heuristic(&tracer.node(node).state, goal);
            open.push(Reverse((g + 1 + t, t, seq, node)));
            seq += 1;
        }
    }
    tracer.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_plan, Direction, MazeGrid, MazeState, Split};
    use crate::search::{EventOrigin, Validity};

    const S: fn(usize, usize) -> MazeState = MazeState::new;

    fn problem(grid: MazeGrid, from: MazeState, to: MazeState) -> Problem<MazeGrid> {
        Problem::new("t", grid, from, to, Split::Test)
    }

    #[test]
    fn open_grid_diagonal() {
        let p = problem(MazeGrid::open(3, 3), S(0, 0), S(2, 2));
        let run = astar(&p, &TraceConfig::uncapped());
        let plan = run.plan.clone().unwrap();
        assert_eq!(plan.len(), 4);
        assert!(validate_plan(&p, &plan).is_valid());
        for e in &run.events {
            assert_eq!(e.f(), e.t.map(|t| t + e.g));
        }
    }

    #[test]
    fn walled_off_goal_fails() {
        let wall = (0..5).map(|r| S(r, 2));
        let p = problem(MazeGrid::new(5, 5, wall).unwrap(), S(0, 0), S(4, 4));
        let run = astar(&p, &TraceConfig::uncapped());
        assert!(run.plan.is_none());
        assert!(run.goal_event.is_none());
    }

    #[test]
    fn start_is_goal() {
        let p = problem(MazeGrid::open(2, 2), S(1, 1), S(1, 1));
        let run = astar(&p, &TraceConfig::uncapped());
        assert_eq!(run.states_explored(), 1);
        assert_eq!(run.plan.unwrap().len(), 0);
        assert_eq!(run.goal_event, Some(0));
    }

    #[test]
    fn one_step_trace_is_exact() {
        // Root, then the four probes of (0,0): up and left leave the grid.
        let p = problem(MazeGrid::open(3, 3), S(0, 0), S(0, 1));
        let run = astar(&p, &TraceConfig::uncapped());
        assert_eq!(run.states_explored(), 5);
        assert_eq!(run.events[0].origin, EventOrigin::Root);
        let actions: Vec<_> = run.events[1..].iter().map(|e| e.action.unwrap()).collect();
        assert_eq!(actions, Direction::ALL.to_vec());
        assert_eq!(run.events[1].validity, Validity::Invalid(InvalidMove::OutOfBounds));
        assert_eq!(run.events[2].validity, Validity::Valid);
        assert_eq!(run.events[4].state, Some(S(0, 1)));
        assert_eq!(run.goal_event, Some(4));
        assert_eq!(run.plan.unwrap().actions, vec![Direction::Right]);
    }
}
