//! Untraced shortest-plan solvers used to label generated problems.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::domain::{Plan, World};

type Parents<W> = HashMap<<W as World>::State, Option<(<W as World>::State, <W as World>::Action)>>;

fn rebuild<W: World>(
    parents: &Parents<W>,
    goal: &W::State,
) -> Plan<W::Action> {
    let mut actions = vec![];
    let mut cur = goal.clone();
    while let Some(Some((prev, action))) = parents.get(&cur) {
        actions.push(*action);
        cur = prev.clone();
    }
    actions.reverse();
    Plan::new(actions)
}

/// Plain breadth-first shortest plan over legal actions.
pub fn bfs_plan<W: World>(world: &W, start: &W::State, goal: &W::State) -> Option<Plan<W::Action>> {
    let mut parents: Parents<W> = HashMap::new();
    parents.insert(start.clone(), None);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(state) = queue.pop_front() {
        if &state == goal {
            return Some(rebuild::<W>(&parents, goal));
        }
        for action in world.valid_actions(&state) {
            let next = world.step(&state, &action).expect("valid action");
            if !parents.contains_key(&next) {
                parents.insert(next.clone(), Some((state.clone(), action)));
                queue.push_back(next);
            }
        }
    }
    None
}

/// A* shortest plan with the domain heuristic. With `bound`, gives up on
/// plans longer than the bound (nodes with `f > bound` are pruned).
pub fn astar_plan<W: World>(
    world: &W,
    start: &W::State,
    goal: &W::State,
    bound: Option<u32>,
) -> Option<Plan<W::Action>> {
    let mut parents: Parents<W> = HashMap::new();
    let mut best_g: HashMap<W::State, u32> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    parents.insert(start.clone(), None);
    best_g.insert(start.clone(), 0);
    let h = world.heuristic(start, goal);
    open.push(Reverse((h, h, seq, start.clone())));
    while let Some(Reverse((f, _, _, state))) = open.pop() {
        let g = best_g[&state];
        if f > g + world.heuristic(&state, goal) {
            continue; // stale entry
        }
        if &state == goal {
            return Some(rebuild::<W>(&parents, goal));
        }
        for action in world.valid_actions(&state) {
            let next = world.step(&state, &action).expect("valid action");
            let ng = g + 1;
            if best_g.get(&next).is_some_and(|&b| b <= ng) {
                continue;
            }
            let t = world.heuristic(&next, goal);
            if bound.is_some_and(|b| ng + t > b) {
                continue;
            }
            best_g.insert(next.clone(), ng);
            parents.insert(next.clone(), Some((state.clone(), action)));
            seq += 1;
            open.push(Reverse((ng + t, t, seq, next)));
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{validate_between, BlocksState, BlocksWorld, MazeGrid, MazeState};

    #[test]
    fn maze_shortest_paths_agree() {
        let grid = MazeGrid::new(4, 4, [MazeState::new(1, 1), MazeState::new(1, 2), MazeState::new(2, 2)]).unwrap();
        let (s, g) = (MazeState::new(0, 0), MazeState::new(3, 3));
        let a = bfs_plan(&grid, &s, &g).unwrap();
        let b = astar_plan(&grid, &s, &g, None).unwrap();
        assert_eq!(a.len(), 6);
        assert_eq!(b.len(), 6);
        assert!(validate_between(&grid, &s, &g, &b).is_valid());
    }

    #[test]
    fn blocks_reversal_and_bound() {
        let w = BlocksWorld::with_count(3);
        let s = BlocksState::from_labels(&["ABC"]).unwrap();
        let g = BlocksState::from_labels(&["CBA"]).unwrap();
        let plan = astar_plan(&w, &s, &g, None).unwrap();
        assert_eq!(plan.len(), bfs_plan(&w, &s, &g).unwrap().len());
        assert!(validate_between(&w, &s, &g, &plan).is_valid());
        assert!(astar_plan(&w, &s, &g, Some(plan.len() as u32 - 1)).is_none());
        assert!(astar_plan(&w, &s, &g, Some(plan.len() as u32)).is_some());
    }
}
