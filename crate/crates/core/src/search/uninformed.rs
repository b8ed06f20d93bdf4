use std::collections::{HashSet, VecDeque};

use super::tracer::{Probe, Tracer};
use super::{Algorithm, Run, TraceConfig};
use crate::domain::{InvalidMove, Problem, World};

/// Breadth-first search with a FIFO frontier. States are marked visited
/// when generated.
pub fn bfs<W: World>(problem: &Problem<W>, config: &TraceConfig) -> Run<W> {
    uninformed(problem, config, Algorithm::Bfs)
}

/// Depth-first search with an explicit stack. Successors are pushed in
/// reverse probe order so the first legal action is explored first; the
/// first time the goal is generated ends the search.
pub fn dfs<W: World>(problem: &Problem<W>, config: &TraceConfig) -> Run<W> {
    uninformed(problem, config, Algorithm::Dfs)
}

fn uninformed<W: World>(problem: &Problem<W>, config: &TraceConfig, algorithm: Algorithm) -> Run<W> {
    let mut tracer = Tracer::new(problem, algorithm, config);
    if tracer.found() {
        return tracer.finish();
    }
    let world = &problem.instance;
    let mut seen: HashSet<W::State> = HashSet::from([problem.start.clone()]);
    let mut frontier = VecDeque::from([0usize]);

    loop {
        let next = match algorithm {
            Algorithm::Dfs => frontier.pop_back(),
            _ => frontier.pop_front(),
        };
        let Some(id) = next else { break };
        tracer.ensure_recorded(id);
        let state = tracer.node(id).state.clone();

        let mut probes = vec![];
        let mut fresh = vec![];
        for action in world.probe_actions(&state) {
            match world.step(&state, &action) {
                Ok(succ) if seen.contains(&succ) => probes.push(Probe::Rejected {
                    action,
                    state: Some(succ),
                    reason: InvalidMove::AlreadyVisited,
                }),
                Ok(succ) => {
                    seen.insert(succ.clone());
                    let node = tracer.add_node(id, action, succ);
                    probes.push(Probe::Generated { node });
                    fresh.push(node);
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
        match algorithm {
            Algorithm::Dfs => frontier.extend(fresh.into_iter().rev()),
            _ => frontier.extend(fresh),
        }
    }
    tracer.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_plan, MazeGrid, MazeState, Split};

    const S: fn(usize, usize) -> MazeState = MazeState::new;

    #[test]
    fn bfs_open_grid_is_optimal() {
        let p = Problem::new("t", MazeGrid::open(3, 3), S(0, 0), S(2, 2), Split::Test);
        let run = bfs(&p, &TraceConfig::uncapped());
        assert_eq!(run.plan.unwrap().len(), 4);
        assert!(run.events.iter().all(|e| e.t.is_none()));
    }

    #[test]
    fn dfs_single_move() {
        let p = Problem::new("t", MazeGrid::open(3, 3), S(0, 0), S(0, 1), Split::Test);
        let run = dfs(&p, &TraceConfig::uncapped());
        let plan = run.plan.unwrap();
        assert!(validate_plan(&p, &plan).is_valid());
        assert_eq!(plan.len(), 1);
    }

    /// Two routes from S to G: three moves straight right, or seven moves
    /// up and around the wall. DFS probes `up` first and commits to the
    /// detour.
    #[test]
    fn dfs_takes_the_long_route() {
        let text = "\
....
.##.
S..G
....
";
        let (grid, start, goal) = MazeGrid::from_text(text).unwrap();
        let p = Problem::new("t", grid, start.unwrap(), goal.unwrap(), Split::Test);
        let shortest = bfs(&p, &TraceConfig::uncapped()).plan.unwrap();
        let deep = dfs(&p, &TraceConfig::uncapped()).plan.unwrap();
        assert!(validate_plan(&p, &deep).is_valid());
        assert_eq!(shortest.len(), 3);
        assert_eq!(deep.len(), 7);
    }
}
