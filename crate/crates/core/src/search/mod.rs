//! Traced symbolic search: A*, breadth-first and depth-first.
//!
//! Every engine records each probe it makes (legal or not) as an
//! [`ExplorationEvent`]. The number of recorded events is the run's
//! states-explored count, and truncating a run to a state budget is a prefix
//! cut of that log.

mod astar;
mod heuristics;
pub mod oracle;
mod tracer;
mod uninformed;

use std::fmt::{self, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{DomainTag, InvalidMove, Plan, Problem, TokenError, World};

pub use astar::astar;
pub use heuristics::{blocks_mismatch, manhattan};
pub use uninformed::{bfs, dfs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Astar,
    Bfs,
    Dfs,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Astar, Algorithm::Bfs, Algorithm::Dfs];

    /// Only A* carries heuristic scores in its trace.
    pub fn scores_heuristic(self) -> bool {
        matches!(self, Algorithm::Astar)
    }
}

impl Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Astar => "astar",
            Algorithm::Bfs => "bfs",
            Algorithm::Dfs => "dfs",
        })
    }
}

impl FromStr for Algorithm {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "astar" => Ok(Algorithm::Astar),
            "bfs" => Ok(Algorithm::Bfs),
            "dfs" => Ok(Algorithm::Dfs),
            other => Err(TokenError::new(other, "search algorithm")),
        }
    }
}

/// Per-expansion recording limit. Unrecorded successors still enter the
/// frontier; the limit only affects what is logged and counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordingCap {
    pub valid: usize,
    pub invalid: usize,
}

impl RecordingCap {
    /// Three best-scored legal successors and two sampled illegal probes.
    pub const BLOCKS: RecordingCap = RecordingCap { valid: 3, invalid: 2 };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub recording_cap: Option<RecordingCap>,
    /// Seeds the sampling of recorded illegal probes under a cap.
    pub seed: u64,
}

impl TraceConfig {
    pub fn uncapped() -> Self {
        TraceConfig {
            recording_cap: None,
            seed: 0,
        }
    }

    /// Mazes record everything; Blocksworld uses [`RecordingCap::BLOCKS`].
    pub fn for_domain(tag: DomainTag) -> Self {
        TraceConfig {
            recording_cap: match tag {
                DomainTag::Maze => None,
                DomainTag::Blocks => Some(RecordingCap::BLOCKS),
            },
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "status", content = "reason")]
pub enum Validity {
    Valid,
    Invalid(InvalidMove),
}

impl Validity {
    pub fn is_valid(self) -> bool {
        matches!(self, Validity::Valid)
    }
}

impl Display for Validity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Validity::Valid => f.write_str("valid"),
            Validity::Invalid(r) => write!(f, "invalid:{r}"),
        }
    }
}

impl FromStr for Validity {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "valid" {
            return Ok(Validity::Valid);
        }
        s.strip_prefix("invalid:")
            .ok_or_else(|| TokenError::new(s, "validity tag"))?
            .parse()
            .map(Validity::Invalid)
    }
}

/// How an event came to be recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventOrigin {
    /// The start state.
    Root,
    /// A probe made while expanding the parent event.
    Probe,
    /// A successor left unrecorded by the recording cap, logged when the
    /// engine later expanded it.
    Deferred,
}

/// One recorded exploration step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize, A: Serialize", deserialize = "S: Deserialize<'de>, A: Deserialize<'de>"))]
pub struct ExplorationEvent<S, A> {
    pub index: usize,
    pub origin: EventOrigin,
    /// The parent's event index; `None` only for the root.
    pub parent: Option<usize>,
    pub action: Option<A>,
    /// The state reached, when the probe names a state of the domain
    /// (legal successors and already-visited ones).
    pub state: Option<S>,
    pub validity: Validity,
    /// Path cost from the start.
    pub g: u32,
    /// Heuristic estimate to the goal (A* only).
    pub t: Option<u32>,
}

impl<S, A> ExplorationEvent<S, A> {
    pub fn f(&self) -> Option<u32> {
        self.t.map(|t| self.g + t)
    }
}

/// The full log of one search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound(serialize = "S: Serialize, A: Serialize", deserialize = "S: Deserialize<'de>, A: Deserialize<'de>"))]
pub struct SearchRun<S, A> {
    pub problem_id: String,
    pub algorithm: Algorithm,
    pub events: Vec<ExplorationEvent<S, A>>,
    /// Event at which the goal state was first recorded.
    pub goal_event: Option<usize>,
    /// `Some` on success.
    pub plan: Option<Plan<A>>,
}

pub type Run<W> = SearchRun<<W as World>::State, <W as World>::Action>;
pub type Event<W> = ExplorationEvent<<W as World>::State, <W as World>::Action>;

impl<S, A> SearchRun<S, A> {
    pub fn states_explored(&self) -> u64 {
        self.events.len() as u64
    }

    pub fn succeeded(&self) -> bool {
        self.plan.is_some()
    }
}

impl<S: Display, A: Display> Display for SearchRun<S, A> {
    /// Compact one-line-per-event rendering for debugging.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} on {} ({} events)", self.algorithm, self.problem_id, self.events.len())?;
        for e in &self.events {
            write!(f, "#{:<4}", e.index)?;
            match &e.action {
                Some(a) => write!(f, " {a:<18}")?,
                None => write!(f, " {:<18}", "start")?,
            }
            match &e.state {
                Some(s) => write!(f, " {s:<12}")?,
                None => write!(f, " {:<12}", "-")?,
            }
            write!(f, " {:<28} g={}", e.validity.to_string(), e.g)?;
            if let (Some(t), Some(fv)) = (e.t, e.f()) {
                write!(f, " t={t} f={fv}")?;
            }
            writeln!(f)?;
        }
        match &self.plan {
            Some(p) => writeln!(f, "plan of length {}", p.len()),
            None => writeln!(f, "no plan"),
        }
    }
}

/// Runs the named engine.
pub fn run_search<W: World>(problem: &Problem<W>, algorithm: Algorithm, config: &TraceConfig) -> Run<W> {
    match algorithm {
        Algorithm::Astar => astar(problem, config),
        Algorithm::Bfs => bfs(problem, config),
        Algorithm::Dfs => dfs(problem, config),
    }
}

/// Keeps the first `cap` events. The plan survives only if the goal was
/// recorded inside the kept prefix.
pub fn truncate_run<S: Clone, A: Clone>(run: &SearchRun<S, A>, cap: u64) -> SearchRun<S, A> {
    assert!(cap >= 1, "truncation cap must be positive");
    let keep = run.events.len().min(usize::try_from(cap).unwrap_or(usize::MAX));
    let reached = run.goal_event.filter(|&g| (g as u64) < cap);
    SearchRun {
        problem_id: run.problem_id.clone(),
        algorithm: run.algorithm,
        events: run.events[..keep].to_vec(),
        goal_event: reached,
        plan: reached.and(run.plan.clone()),
    }
}
