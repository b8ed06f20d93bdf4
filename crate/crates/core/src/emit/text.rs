//! Text grammar for plans, search traces and meta-plans.
//!
//! ```text
//! PLAN:
//! right
//! down
//! ```
//!
//! ```text
//! TRACE astar maze-test-00007
//! step 0 | start (0,0) | valid | g=0 t=4
//! step 1 | from (0,0) #0 | action up | to - | invalid:out-of-bounds | g=1
//! step 2 | from (0,0) #0 | action down | to (1,0) | valid | g=1 t=3 f=4
//! step 9 | deferred from (1,0) #2 | action right | to (1,1) | valid | g=2 t=2 f=4
//! GOAL: none
//! PLAN: none
//! ```
//!
//! ```text
//! subgoal 1 | (0,0) -> (2,2) | SYS1
//! subgoal 2 | (2,2) -> (4,4) | SYS2
//! ```

use std::fmt::{Display, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::controller::{MetaPlan, Mode, SubGoal};
use crate::domain::{Plan, TokenError};
use crate::search::{Algorithm, EventOrigin, ExplorationEvent, SearchRun, Validity};

pub const TEMPLATE_VERSION: &str = "hybridplan-text/1";

const SEP: &str = " | ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message} at `{token}`")]
pub struct ParseError {
    /// 1-based; 0 for a missing line at the end of the text.
    pub line: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, token: &str, message: impl Into<String>) -> Self {
        ParseError {
            line,
            token: token.to_owned(),
            message: message.into(),
        }
    }

    fn token(line: usize, e: TokenError) -> Self {
        ParseError {
            line,
            message: format!("expected {}", e.expected),
            token: e.token,
        }
    }
}

/// Text rendering with a matching parser.
pub trait Verbalize {
    fn verbalize(&self) -> String;
}

impl<A: Display> Verbalize for Plan<A> {
    fn verbalize(&self) -> String {
        let mut s = String::from("PLAN:\n");
        for a in &self.actions {
            let _ = writeln!(s, "{a}");
        }
        s
    }
}

impl<S: Display, A: Display> Verbalize for SearchRun<S, A> {
    fn verbalize(&self) -> String {
        let mut s = format!("TRACE {} {}\n", self.algorithm, self.problem_id);
        for e in &self.events {
            event_line(&mut s, e, &self.events);
        }
        match self.goal_event {
            Some(g) => {
                let _ = writeln!(s, "GOAL: {g}");
            }
            None => s.push_str("GOAL: none\n"),
        }
        match &self.plan {
            Some(p) => s.push_str(&p.verbalize()),
            None => s.push_str("PLAN: none\n"),
        }
        s
    }
}

fn event_line<S: Display, A: Display>(s: &mut String, e: &ExplorationEvent<S, A>, all: &[ExplorationEvent<S, A>]) {
    let _ = write!(s, "step {}", e.index);
    let parent_state = |p: usize| all[p].state.as_ref().map_or_else(|| "-".to_owned(), ToString::to_string);
    match (e.origin, e.parent) {
        (EventOrigin::Root, _) | (_, None) => {
            let state = e.state.as_ref().map_or_else(|| "-".to_owned(), ToString::to_string);
            let _ = write!(s, "{SEP}start {state}");
        }
        (origin, Some(p)) => {
            let word = if origin == EventOrigin::Deferred { "deferred from" } else { "from" };
            let _ = write!(s, "{SEP}{word} {} #{p}", parent_state(p));
            match &e.action {
                Some(a) => {
                    let _ = write!(s, "{SEP}action {a}");
                }
                None => s.push_str(" | action -"),
            }
            match &e.state {
                Some(st) => {
                    let _ = write!(s, "{SEP}to {st}");
                }
                None => s.push_str(" | to -"),
            }
        }
    }
    let _ = write!(s, "{SEP}{}{SEP}g={}", e.validity, e.g);
    if let Some(t) = e.t {
        let _ = write!(s, " t={t}");
        if e.origin != EventOrigin::Root {
            let _ = write!(s, " f={}", e.g + t);
        }
    }
    s.push('\n');
}

impl<S: Display + Clone + PartialEq> Verbalize for MetaPlan<S> {
    fn verbalize(&self) -> String {
        let mut s = String::new();
        for (k, sg) in self.subgoals.iter().enumerate() {
            let _ = writeln!(s, "subgoal {} | {} -> {} | {}", k + 1, sg.from, sg.to, sg.mode);
        }
        s
    }
}

fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l))
}

fn parse_token<T: FromStr<Err = TokenError>>(line: usize, token: &str) -> Result<T, ParseError> {
    token.parse().map_err(|e| ParseError::token(line, e))
}

fn parse_num(line: usize, token: &str) -> Result<u64, ParseError> {
    token.parse().map_err(|_| ParseError::new(line, token, "expected a number"))
}

/// Strict parse of a `PLAN:` block.
pub fn parse_plan_text<A: FromStr<Err = TokenError>>(text: &str) -> Result<Plan<A>, ParseError> {
    let mut lines = numbered(text);
    parse_plan_lines(&mut lines, 1)?.ok_or_else(|| ParseError::new(1, "PLAN: none", "expected a plan"))
}

/// Parses `PLAN:` plus the remaining lines, or `PLAN: none`.
fn parse_plan_lines<'t, A: FromStr<Err = TokenError>>(
    lines: &mut impl Iterator<Item = (usize, &'t str)>,
    expected_line: usize,
) -> Result<Option<Plan<A>>, ParseError> {
    let (n, header) = lines
        .next()
        .ok_or_else(|| ParseError::new(expected_line, "", "missing `PLAN:` header"))?;
    match header {
        "PLAN:" => {}
        "PLAN: none" => {
            if let Some((n, extra)) = lines.next() {
                return Err(ParseError::new(n, extra, "text after `PLAN: none`"));
            }
            return Ok(None);
        }
        other => return Err(ParseError::new(n, other, "expected `PLAN:` header")),
    }
    let mut actions = vec![];
    for (n, l) in lines {
        actions.push(parse_token(n, l)?);
    }
    Ok(Some(Plan::new(actions)))
}

pub fn parse_meta_plan_text<S>(text: &str) -> Result<MetaPlan<S>, ParseError>
where
    S: FromStr<Err = TokenError> + Clone + PartialEq,
{
    let mut subgoals = vec![];
    for (n, l) in numbered(text) {
        let fields: Vec<&str> = l.split(SEP).collect();
        let [head, span, mode] = fields[..] else {
            return Err(ParseError::new(n, l, "expected `subgoal <k> | <from> -> <to> | <mode>`"));
        };
        let k = head
            .strip_prefix("subgoal ")
            .ok_or_else(|| ParseError::new(n, head, "expected `subgoal <k>`"))?;
        if parse_num(n, k)? != subgoals.len() as u64 + 1 {
            return Err(ParseError::new(n, k, "sub-goals must be numbered 1, 2, ..."));
        }
        let (from, to) = span
            .split_once(" -> ")
            .ok_or_else(|| ParseError::new(n, span, "expected `<from> -> <to>`"))?;
        subgoals.push(SubGoal {
            from: parse_token(n, from)?,
            to: parse_token(n, to)?,
            mode: parse_token::<Mode>(n, mode)?,
        });
    }
    if subgoals.is_empty() {
        return Err(ParseError::new(0, "", "empty meta-plan"));
    }
    Ok(MetaPlan { subgoals })
}

fn parse_scores(n: usize, token: &str, root: bool) -> Result<(u32, Option<u32>), ParseError> {
    let parts: Vec<&str> = token.split(' ').collect();
    let value = |part: &str, key: &str| -> Result<u32, ParseError> {
        let v = part
            .strip_prefix(key)
            .ok_or_else(|| ParseError::new(n, part, format!("expected `{key}<n>`")))?;
        let v = parse_num(n, v)?;
        u32::try_from(v).map_err(|_| ParseError::new(n, part, "score out of range"))
    };
    match parts[..] {
        [g] => Ok((value(g, "g=")?, None)),
        [g, t] if root => Ok((value(g, "g=")?, Some(value(t, "t=")?))),
        [g, t, f] if !root => {
            let (g, t) = (value(g, "g=")?, value(t, "t=")?);
            if value(f, "f=")? != g + t {
                return Err(ParseError::new(n, f, "f differs from g + t"));
            }
            Ok((g, Some(t)))
        }
        _ => Err(ParseError::new(n, token, "malformed scores")),
    }
}

fn parse_event<S, A>(n: usize, line: &str, index: usize, earlier: &[ExplorationEvent<S, A>]) -> Result<ExplorationEvent<S, A>, ParseError>
where
    S: FromStr<Err = TokenError> + PartialEq,
    A: FromStr<Err = TokenError>,
{
    let fields: Vec<&str> = line.split(SEP).collect();
    let step = fields[0]
        .strip_prefix("step ")
        .ok_or_else(|| ParseError::new(n, fields[0], "expected `step <i>`"))?;
    if parse_num(n, step)? != index as u64 {
        return Err(ParseError::new(n, step, format!("expected step {index}")));
    }
    let opt = |tok: &str| -> Result<Option<S>, ParseError> {
        if tok == "-" {
            Ok(None)
        } else {
            parse_token(n, tok).map(Some)
        }
    };
    if let [_, start, validity, scores] = fields[..] {
        let state = start
            .strip_prefix("start ")
            .ok_or_else(|| ParseError::new(n, start, "expected `start <state>`"))?;
        let (g, t) = parse_scores(n, scores, true)?;
        return Ok(ExplorationEvent {
            index,
            origin: EventOrigin::Root,
            parent: None,
            action: None,
            state: opt(state)?,
            validity: parse_token(n, validity)?,
            g,
            t,
        });
    }
    let [_, from, action, to, validity, scores] = fields[..] else {
        return Err(ParseError::new(n, line, "expected six `|`-separated fields"));
    };
    let (origin, rest) = if let Some(r) = from.strip_prefix("deferred from ") {
        (EventOrigin::Deferred, r)
    } else if let Some(r) = from.strip_prefix("from ") {
        (EventOrigin::Probe, r)
    } else {
        return Err(ParseError::new(n, from, "expected `from <state> #<i>`"));
    };
    let (pstate, pidx) = rest
        .rsplit_once(" #")
        .ok_or_else(|| ParseError::new(n, rest, "expected `<state> #<i>`"))?;
    let parent = parse_num(n, pidx)? as usize;
    let Some(pevent) = earlier.get(parent) else {
        return Err(ParseError::new(n, pidx, "parent event not yet defined"));
    };
    if pevent.state.as_ref() != opt(pstate)?.as_ref() {
        return Err(ParseError::new(n, pstate, "parent state does not match its event"));
    }
    let action = action
        .strip_prefix("action ")
        .ok_or_else(|| ParseError::new(n, action, "expected `action <a>`"))?;
    let action = if action == "-" { None } else { Some(parse_token(n, action)?) };
    let to = to
        .strip_prefix("to ")
        .ok_or_else(|| ParseError::new(n, to, "expected `to <state>`"))?;
    let (g, t) = parse_scores(n, scores, false)?;
    Ok(ExplorationEvent {
        index,
        origin,
        parent: Some(parent),
        action,
        state: opt(to)?,
        validity: parse_token::<Validity>(n, validity)?,
        g,
        t,
    })
}

pub fn parse_trace_text<S, A>(text: &str) -> Result<SearchRun<S, A>, ParseError>
where
    S: FromStr<Err = TokenError> + PartialEq,
    A: FromStr<Err = TokenError>,
{
    let mut lines = numbered(text).peekable();
    let (n, header) = lines.next().ok_or_else(|| ParseError::new(1, "", "empty trace"))?;
    let mut head = header.splitn(3, ' ');
    let (Some("TRACE"), Some(alg), Some(problem_id)) = (head.next(), head.next(), head.next()) else {
        return Err(ParseError::new(n, header, "expected `TRACE <algorithm> <problem>`"));
    };
    let algorithm: Algorithm = parse_token(n, alg)?;
    let mut events = vec![];
    while let Some(&(n, l)) = lines.peek() {
        if !l.starts_with("step ") {
            break;
        }
        lines.next();
        events.push(parse_event(n, l, events.len(), &events)?);
    }
    let (n, goal) = lines.next().ok_or_else(|| ParseError::new(0, "", "missing `GOAL:` line"))?;
    let goal = goal
        .strip_prefix("GOAL: ")
        .ok_or_else(|| ParseError::new(n, goal, "expected `GOAL: <i>|none`"))?;
    let goal_event = match goal {
        "none" => None,
        g => {
            let g = parse_num(n, g)? as usize;
            if g >= events.len() {
                return Err(ParseError::new(n, goal, "goal event out of range"));
            }
            Some(g)
        }
    };
    let plan = parse_plan_lines(&mut lines, n + 1)?;
    Ok(SearchRun {
        problem_id: problem_id.to_owned(),
        algorithm,
        events,
        goal_event,
        plan,
    })
}
