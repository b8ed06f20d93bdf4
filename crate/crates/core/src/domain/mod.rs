//! Planning domains: states, actions, transitions and plan validation.
//!
//! Both domains implement [`World`], which is the only thing the search
//! engines, the controller and the orchestrator know about. A world value is
//! the per-problem instance (a maze grid, a block universe); states and
//! actions are small value types with a canonical text form that is shared
//! by the JSONL files and the verbalized datasets.

pub mod blocks;
pub mod generate;
pub mod maze;

use std::fmt::{self, Debug, Display};
use std::hash::Hash;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use blocks::{Block, BlockMove, BlocksState, BlocksWorld, Destination};
pub use maze::{Direction, MazeGrid, MazeState};

/// Why a transition was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvalidMove {
    OutOfBounds,
    Obstacle,
    /// Judged by the search engines, never by `World::step`.
    AlreadyVisited,
    BlockNotClear,
    DestinationNotClear,
    DestinationMissing,
    SelfMove,
    UnknownBlock,
}

impl InvalidMove {
    pub const ALL: [InvalidMove; 8] = [
        InvalidMove::OutOfBounds,
        InvalidMove::Obstacle,
        InvalidMove::AlreadyVisited,
        InvalidMove::BlockNotClear,
        InvalidMove::DestinationNotClear,
        InvalidMove::DestinationMissing,
        InvalidMove::SelfMove,
        InvalidMove::UnknownBlock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            InvalidMove::OutOfBounds => "out-of-bounds",
            InvalidMove::Obstacle => "obstacle",
            InvalidMove::AlreadyVisited => "already-visited",
            InvalidMove::BlockNotClear => "block-not-clear",
            InvalidMove::DestinationNotClear => "destination-not-clear",
            InvalidMove::DestinationMissing => "destination-missing",
            InvalidMove::SelfMove => "self-move",
            InvalidMove::UnknownBlock => "unknown-block",
        }
    }
}

impl Display for InvalidMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InvalidMove {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InvalidMove::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| TokenError::new(s, "invalid-move reason"))
    }
}

/// A token that could not be read as a state, action or tag.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot read `{token}` as {expected}")]
pub struct TokenError {
    pub token: String,
    pub expected: &'static str,
}

impl TokenError {
    pub fn new(token: impl Into<String>, expected: &'static str) -> Self {
        TokenError {
            token: token.into(),
            expected,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainTag {
    Maze,
    Blocks,
}

impl Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainTag::Maze => "maze",
            DomainTag::Blocks => "blocks",
        })
    }
}

impl FromStr for DomainTag {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maze" => Ok(DomainTag::Maze),
            "blocks" => Ok(DomainTag::Blocks),
            other => Err(TokenError::new(other, "domain tag")),
        }
    }
}

/// A planning domain instance.
pub trait World: Clone + Debug + PartialEq + Send + Sync + Serialize + DeserializeOwned {
    type State: Clone
        + Eq
        + Hash
        + Ord
        + Debug
        + Display
        + FromStr<Err = TokenError>
        + Serialize
        + DeserializeOwned
        + Send
        + Sync;
    type Action: Copy
        + Eq
        + Hash
        + Debug
        + Display
        + FromStr<Err = TokenError>
        + Serialize
        + DeserializeOwned
        + Send
        + Sync;

    const TAG: DomainTag;

    fn step(&self, state: &Self::State, action: &Self::Action) -> Result<Self::State, InvalidMove>;

    /// Every action a search engine probes at `state`, legal or not, in the
    /// fixed order traces are recorded in.
    fn probe_actions(&self, state: &Self::State) -> Vec<Self::Action>;

    /// Legal actions at `state`, in canonical order.
    fn valid_actions(&self, state: &Self::State) -> Vec<Self::Action>;

    /// Admissible estimate of the remaining plan length (the A* `t` score).
    fn heuristic(&self, from: &Self::State, to: &Self::State) -> u32;

    /// Whether `state` is a legal state of this instance.
    fn contains(&self, state: &Self::State) -> bool;

    /// Trivial upper bound on the length of a simple path between two states.
    fn step_bound(&self) -> usize;

    /// Human-readable rendering of a (start, goal) pair on this instance.
    fn describe(&self, start: &Self::State, goal: &Self::State) -> String;
}

/// An ordered action sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Plan<A> {
    pub actions: Vec<A>,
}

impl<A> Plan<A> {
    pub fn new(actions: Vec<A>) -> Self {
        Plan { actions }
    }

    pub fn empty() -> Self {
        Plan { actions: vec![] }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

impl<A: Clone> Plan<A> {
    pub fn concat(parts: &[Plan<A>]) -> Self {
        Plan {
            actions: parts.iter().flat_map(|p| p.actions.iter().cloned()).collect(),
        }
    }
}

impl<A> FromIterator<A> for Plan<A> {
    fn from_iter<I: IntoIterator<Item = A>>(iter: I) -> Self {
        Plan {
            actions: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];
}

impl Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(TokenError::new(other, "split")),
        }
    }
}

/// A (start, goal) pair on one domain instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "", deserialize = ""))]
pub struct Problem<W: World> {
    pub id: String,
    pub domain: DomainTag,
    pub instance: W,
    pub start: W::State,
    pub goal: W::State,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold_plan: Option<Plan<W::Action>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimal_length: Option<usize>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProblemError {
    #[error("problem {id}: domain tag {found} does not match {expected}")]
    WrongDomain {
        id: String,
        found: DomainTag,
        expected: DomainTag,
    },
    #[error("problem {id}: {which} state {state} is not a state of the instance")]
    ForeignState {
        id: String,
        which: &'static str,
        state: String,
    },
    #[error("problem {id}: gold plan fails: {verdict}")]
    BadGoldPlan { id: String, verdict: String },
    #[error("problem {id}: optimal length {claimed} disagrees with gold plan length {actual}")]
    LengthMismatch {
        id: String,
        claimed: usize,
        actual: usize,
    },
}

impl<W: World> Problem<W> {
    pub fn new(id: impl Into<String>, instance: W, start: W::State, goal: W::State, split: Split) -> Self {
        Problem {
            id: id.into(),
            domain: W::TAG,
            instance,
            start,
            goal,
            gold_plan: None,
            optimal_length: None,
            split,
        }
    }

    pub fn with_gold(mut self, plan: Plan<W::Action>) -> Self {
        self.optimal_length = Some(plan.len());
        self.gold_plan = Some(plan);
        self
    }

    /// The same instance with different endpoints; used for sub-goals.
    pub fn sub_problem(&self, suffix: &str, start: W::State, goal: W::State) -> Self {
        Problem::new(
            format!("{}/{}", self.id, suffix),
            self.instance.clone(),
            start,
            goal,
            self.split,
        )
    }

    /// Checks the structural invariants of a problem read from disk.
    pub fn check(&self) -> Result<(), ProblemError> {
        if self.domain != W::TAG {
            return Err(ProblemError::WrongDomain {
                id: self.id.clone(),
                found: self.domain,
                expected: W::TAG,
            });
        }
        for (which, state) in [("start", &self.start), ("goal", &self.goal)] {
            if !self.instance.contains(state) {
                return Err(ProblemError::ForeignState {
                    id: self.id.clone(),
                    which,
                    state: state.to_string(),
                });
            }
        }
        if let Some(plan) = &self.gold_plan {
            let verdict = validate_plan(self, plan);
            if !verdict.is_valid() {
                return Err(ProblemError::BadGoldPlan {
                    id: self.id.clone(),
                    verdict: verdict.to_string(),
                });
            }
            if let Some(claimed) = self.optimal_length {
                if claimed != plan.len() {
                    return Err(ProblemError::LengthMismatch {
                        id: self.id.clone(),
                        claimed,
                        actual: plan.len(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Outcome of executing a plan from the start state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// Step `step` (1-based) was an illegal transition.
    IllegalStep { step: usize, reason: InvalidMove },
    /// Every step was legal but the final state is not the goal.
    MissedGoal,
}

impl Verdict {
    pub fn is_valid(self) -> bool {
        matches!(self, Verdict::Valid)
    }

    pub fn failed_step(self) -> Option<usize> {
        match self {
            Verdict::IllegalStep { step, .. } => Some(step),
            _ => None,
        }
    }
}

impl Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::IllegalStep { step, reason } => write!(f, "invalid at step {step} ({reason})"),
            Verdict::MissedGoal => f.write_str("does not reach the goal"),
        }
    }
}

/// Executes `plan` from the problem's start state.
pub fn validate_plan<W: World>(problem: &Problem<W>, plan: &Plan<W::Action>) -> Verdict {
    validate_between(&problem.instance, &problem.start, &problem.goal, plan)
}

pub fn validate_between<W: World>(
    world: &W,
    start: &W::State,
    goal: &W::State,
    plan: &Plan<W::Action>,
) -> Verdict {
    let mut state = start.clone();
    for (i, action) in plan.actions.iter().enumerate() {
        match world.step(&state, action) {
            Ok(next) => state = next,
            Err(reason) => return Verdict::IllegalStep { step: i + 1, reason },
        }
    }
    if &state == goal {
        Verdict::Valid
    } else {
        Verdict::MissedGoal
    }
}

/// The states visited by a plan, starting with `start`. Stops before the
/// first illegal step and reports it.
pub fn state_sequence<W: World>(
    world: &W,
    start: &W::State,
    plan: &Plan<W::Action>,
) -> Result<Vec<W::State>, Verdict> {
    let mut states = Vec::with_capacity(plan.len() + 1);
    states.push(start.clone());
    for (i, action) in plan.actions.iter().enumerate() {
        let next = world
            .step(states.last().expect("non-empty"), action)
            .map_err(|reason| Verdict::IllegalStep { step: i + 1, reason })?;
        states.push(next);
    }
    Ok(states)
}
