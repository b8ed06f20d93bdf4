//! Bookkeeping shared by the engines: search nodes, the event log and the
//! recording cap.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Algorithm, Event, EventOrigin, ExplorationEvent, RecordingCap, Run, SearchRun, TraceConfig, Validity};
use crate::domain::{InvalidMove, Plan, Problem, World};

pub(crate) struct Node<W: World> {
    pub state: W::State,
    pub parent: Option<usize>,
    pub action: Option<W::Action>,
    pub g: u32,
    pub event: Option<usize>,
}

/// The result of probing one action during an expansion.
pub(crate) enum Probe<W: World> {
    /// A new search node.
    Generated { node: usize },
    Rejected {
        action: W::Action,
        state: Option<W::State>,
        reason: InvalidMove,
    },
}

pub(crate) struct Tracer<'a, W: World> {
    problem: &'a Problem<W>,
    algorithm: Algorithm,
    cap: Option<RecordingCap>,
    rng: ChaCha8Rng,
    nodes: Vec<Node<W>>,
    events: Vec<Event<W>>,
    goal_node: Option<usize>,
}

impl<'a, W: World> Tracer<'a, W> {
    /// Creates the root node (id 0) and records it as event 0.
    pub fn new(problem: &'a Problem<W>, algorithm: Algorithm, config: &TraceConfig) -> Self {
        let mut tracer = Tracer {
            problem,
            algorithm,
            cap: config.recording_cap,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            nodes: vec![Node {
                state: problem.start.clone(),
                parent: None,
                action: None,
                g: 0,
                event: Some(0),
            }],
            events: vec![],
            goal_node: None,
        };
        let t = tracer.score(&problem.start);
        tracer.events.push(ExplorationEvent {
            index: 0,
            origin: EventOrigin::Root,
            parent: None,
            action: None,
            state: Some(problem.start.clone()),
            validity: Validity::Valid,
            g: 0,
            t,
        });
        if problem.start == problem.goal {
            tracer.goal_node = Some(0);
        }
        tracer
    }

    pub fn world(&self) -> &W {
        &self.problem.instance
    }

    pub fn goal(&self) -> &W::State {
        &self.problem.goal
    }

    pub fn found(&self) -> bool {
        self.goal_node.is_some()
    }

    pub fn node(&self, id: usize) -> &Node<W> {
        &self.nodes[id]
    }

    fn score(&self, state: &W::State) -> Option<u32> {
        self.algorithm
            .scores_heuristic()
            .then(|| self.world().heuristic(state, self.goal()))
    }

    pub fn add_node(&mut self, parent: usize, action: W::Action, state: W::State) -> usize {
        let g = self.nodes[parent].g + 1;
        self.nodes.push(Node {
            state,
            parent: Some(parent),
            action: Some(action),
            g,
            event: None,
        });
        self.nodes.len() - 1
    }

    /// Logs a node that is about to be expanded but was never recorded.
    pub fn ensure_recorded(&mut self, id: usize) {
        if self.nodes[id].event.is_some() {
            return;
        }
        let parent = self.nodes[id].parent.expect("root is always recorded");
        let parent_event = self.nodes[parent].event.expect("expanded nodes are recorded");
        let node = &self.nodes[id];
        let event = ExplorationEvent {
            index: self.events.len(),
            origin: EventOrigin::Deferred,
            parent: Some(parent_event),
            action: node.action,
            state: Some(node.state.clone()),
            validity: Validity::Valid,
            g: node.g,
            t: self.score(&node.state),
        };
        self.nodes[id].event = Some(event.index);
        self.events.push(event);
    }

    /// Records the probes of one expansion, honouring the recording cap.
    /// Returns whether the goal was generated.
    pub fn record_expansion(&mut self, parent: usize, probes: &[Probe<W>]) -> bool {
        let parent_event = self.nodes[parent].event.expect("expanded nodes are recorded");
        let parent_g = self.nodes[parent].g;
        let keep = self.selection(probes);
        for (probe, keep) in probes.iter().zip(keep) {
            if !keep {
                continue;
            }
            let index = self.events.len();
            let event = match probe {
                Probe::Generated { node } => {
                    self.nodes[*node].event = Some(index);
                    let n = &self.nodes[*node];
                    ExplorationEvent {
                        index,
                        origin: EventOrigin::Probe,
                        parent: Some(parent_event),
                        action: n.action,
                        state: Some(n.state.clone()),
                        validity: Validity::Valid,
                        g: n.g,
                        t: self.score(&n.state),
                    }
                }
                Probe::Rejected { action, state, reason } => ExplorationEvent {
                    index,
                    origin: EventOrigin::Probe,
                    parent: Some(parent_event),
                    action: Some(*action),
                    state: state.clone(),
                    validity: Validity::Invalid(*reason),
                    g: parent_g + 1,
                    t: state.as_ref().and_then(|s| self.score(s)),
                },
            };
            self.events.push(event);
        }
        if self.goal_node.is_none() {
            self.goal_node = probes.iter().find_map(|p| match p {
                Probe::Generated { node } if &self.nodes[*node].state == self.goal() => Some(*node),
                _ => None,
            });
        }
        self.goal_node.is_some()
    }

    fn selection(&mut self, probes: &[Probe<W>]) -> Vec<bool> {
        let Some(cap) = self.cap else {
            return vec![true; probes.len()];
        };
        let mut keep = vec![false; probes.len()];
        let mut generated: Vec<(bool, u32, usize)> = probes
            .iter()
            .enumerate()
            .filter_map(|(i, p)| match p {
                Probe::Generated { node } => {
                    let s = &self.nodes[*node].state;
                    Some((s != self.goal(), self.world().heuristic(s, self.goal()), i))
                }
                Probe::Rejected { .. } => None,
            })
            .collect();
        generated.sort_unstable();
        for &(_, _, i) in generated.iter().take(cap.valid) {
            keep[i] = true;
        }
        let rejected: Vec<usize> = probes
            .iter()
            .enumerate()
            .filter(|(_, p)| matches!(p, Probe::Rejected { .. }))
            .map(|(i, _)| i)
            .collect();
        let amount = cap.invalid.min(rejected.len());
        for pick in index::sample(&mut self.rng, rejected.len(), amount) {
            keep[rejected[pick]] = true;
        }
        keep
    }

    pub fn finish(self) -> Run<W> {
        let goal_event = self.goal_node.and_then(|n| self.nodes[n].event);
        let plan = self.goal_node.map(|mut id| {
            let mut actions = vec![];
            while let Some(parent) = self.nodes[id].parent {
                actions.push(self.nodes[id].action.expect("non-root nodes carry an action"));
                id = parent;
            }
            actions.reverse();
            Plan::new(actions)
        });
        SearchRun {
            problem_id: self.problem.id.clone(),
            algorithm: self.algorithm,
            events: self.events,
            goal_event,
            plan,
        }
    }
}
