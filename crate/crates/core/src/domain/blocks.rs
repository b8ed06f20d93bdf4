//! Blocksworld with labelled blocks and an unbounded table.

use std::collections::BTreeSet;
use std::fmt::{self, Display};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DomainTag, InvalidMove, TokenError, World};
use crate::search::blocks_mismatch;

/// A block label, `A` through `Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "char", into = "char")]
pub struct Block(char);

impl Block {
    pub fn new(label: char) -> Result<Self, TokenError> {
        if label.is_ascii_uppercase() {
            Ok(Block(label))
        } else {
            Err(TokenError::new(label.to_string(), "block label A-Z"))
        }
    }

    /// The `i`-th label (`0 -> A`).
    pub fn nth(i: usize) -> Self {
        assert!(i < 26, "at most 26 blocks");
        Block((b'A' + i as u8) as char)
    }

    pub fn label(self) -> char {
        self.0
    }
}

impl TryFrom<char> for Block {
    type Error = TokenError;

    fn try_from(c: char) -> Result<Self, Self::Error> {
        Block::new(c)
    }
}

impl From<Block> for char {
    fn from(b: Block) -> char {
        b.0
    }
}

impl Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Where a moved block ends up. Orders blocks before the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Destination {
    Block(Block),
    Table,
}

impl Display for Destination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Destination::Block(b) => write!(f, "{b}"),
            Destination::Table => f.write_str("table"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BlockMove {
    pub block: Block,
    pub dest: Destination,
}

impl BlockMove {
    pub fn onto(block: Block, dest: Block) -> Self {
        BlockMove {
            block,
            dest: Destination::Block(dest),
        }
    }

    pub fn to_table(block: Block) -> Self {
        BlockMove {
            block,
            dest: Destination::Table,
        }
    }
}

impl Display for BlockMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "move {} onto {}", self.block, self.dest)
    }
}

impl FromStr for BlockMove {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TokenError::new(s, "blocks action `move X onto Y|table`");
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [verb, block, onto, dest] = parts[..] else {
            return Err(err());
        };
        if verb != "move" || onto != "onto" {
            return Err(err());
        }
        let block = single_block(block).ok_or_else(err)?;
        let dest = if dest == "table" {
            Destination::Table
        } else {
            Destination::Block(single_block(dest).ok_or_else(err)?)
        };
        Ok(BlockMove { block, dest })
    }
}

fn single_block(token: &str) -> Option<Block> {
    let mut chars = token.chars();
    let c = chars.next()?;
    if chars.next().is_some() {
        return None;
    }
    Block::new(c).ok()
}

impl From<BlockMove> for String {
    fn from(m: BlockMove) -> String {
        m.to_string()
    }
}

impl TryFrom<String> for BlockMove {
    type Error = TokenError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlocksStateError {
    #[error("block {0} appears more than once")]
    Duplicate(Block),
}

/// A block configuration: stacks listed bottom to top, no empty stacks, and
/// stacks sorted by bottom block so equal configurations compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct BlocksState {
    stacks: Vec<Vec<Block>>,
}

impl BlocksState {
    pub fn new(stacks: Vec<Vec<Block>>) -> Result<Self, BlocksStateError> {
        let mut seen = BTreeSet::new();
        for b in stacks.iter().flatten() {
            if !seen.insert(*b) {
                return Err(BlocksStateError::Duplicate(*b));
            }
        }
        Ok(Self::canonical(stacks))
    }

    fn canonical(mut stacks: Vec<Vec<Block>>) -> Self {
        stacks.retain(|s| !s.is_empty());
        stacks.sort_by_key(|s| s[0]);
        BlocksState { stacks }
    }

    /// Builds a state from label strings, e.g. `["AB", "C"]`.
    pub fn from_labels(stacks: &[&str]) -> Result<Self, TokenError> {
        let stacks = stacks
            .iter()
            .map(|s| s.chars().map(Block::new).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        BlocksState::new(stacks).map_err(|e| TokenError::new(e.to_string(), "block configuration"))
    }

    pub fn stacks(&self) -> &[Vec<Block>] {
        &self.stacks
    }

    pub fn blocks(&self) -> BTreeSet<Block> {
        self.stacks.iter().flatten().copied().collect()
    }

    pub fn block_count(&self) -> usize {
        self.stacks.iter().map(Vec::len).sum()
    }

    fn locate(&self, block: Block) -> Option<(usize, usize)> {
        self.stacks.iter().enumerate().find_map(|(i, s)| {
            s.iter().position(|b| *b == block).map(|j| (i, j))
        })
    }

    /// What `block` rests on: `Some(Table)` or `Some(Block(x))`; `None` if
    /// the block is absent.
    pub fn below(&self, block: Block) -> Option<Destination> {
        let (i, j) = self.locate(block)?;
        Some(if j == 0 {
            Destination::Table
        } else {
            Destination::Block(self.stacks[i][j - 1])
        })
    }

    /// The block directly on top of `block`, if any.
    pub fn above(&self, block: Block) -> Option<Block> {
        let (i, j) = self.locate(block)?;
        self.stacks[i].get(j + 1).copied()
    }

    pub fn is_clear(&self, block: Block) -> bool {
        self.stacks.iter().any(|s| s.last() == Some(&block))
    }

    pub fn on_table(&self, block: Block) -> bool {
        self.below(block) == Some(Destination::Table)
    }

    /// Top blocks, sorted.
    pub fn clear_blocks(&self) -> Vec<Block> {
        let mut tops: Vec<Block> = self.stacks.iter().filter_map(|s| s.last().copied()).collect();
        tops.sort();
        tops
    }
}

impl Display for BlocksState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.stacks {
            f.write_str("[")?;
            for b in s {
                write!(f, "{b}")?;
            }
            f.write_str("]")?;
        }
        Ok(())
    }
}

impl FromStr for BlocksState {
    type Err = TokenError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || TokenError::new(s, "block configuration `[AB][C]`");
        let body = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')).ok_or_else(err)?;
        let labels: Vec<&str> = body.split("][").collect();
        if labels.iter().any(|l| l.is_empty() || l.contains(['[', ']'])) {
            return Err(err());
        }
        BlocksState::from_labels(&labels).map_err(|_| err())
    }
}

impl From<BlocksState> for String {
    fn from(s: BlocksState) -> String {
        s.to_string()
    }
}

impl TryFrom<String> for BlocksState {
    type Error = TokenError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// One Blocksworld transition: a clear block goes onto the table or onto
/// another clear block.
pub fn blocks_step(state: &BlocksState, mv: BlockMove) -> Result<BlocksState, InvalidMove> {
    let (from_stack, pos) = state.locate(mv.block).ok_or(InvalidMove::UnknownBlock)?;
    if let Destination::Block(d) = mv.dest {
        if state.locate(d).is_none() {
            return Err(InvalidMove::DestinationMissing);
        }
        if d == mv.block {
            return Err(InvalidMove::SelfMove);
        }
    }
    if pos + 1 != state.stacks[from_stack].len() {
        return Err(InvalidMove::BlockNotClear);
    }
    let mut stacks = state.stacks.clone();
    match mv.dest {
        Destination::Block(d) => {
            if !state.is_clear(d) {
                return Err(InvalidMove::DestinationNotClear);
            }
            stacks[from_stack].pop();
            let target = stacks
                .iter_mut()
                .find(|s| s.last() == Some(&d))
                .expect("clear destination is a stack top");
            target.push(mv.block);
        }
        Destination::Table => {
            if pos == 0 {
                // Already on the table: a no-op, treated like a self-move.
                return Err(InvalidMove::SelfMove);
            }
            stacks[from_stack].pop();
            stacks.push(vec![mv.block]);
        }
    }
    Ok(BlocksState::canonical(stacks))
}

/// The block universe of one Blocksworld problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlocksWorld {
    blocks: Vec<Block>,
}

impl BlocksWorld {
    pub fn new(blocks: impl IntoIterator<Item = Block>) -> Self {
        let set: BTreeSet<Block> = blocks.into_iter().collect();
        BlocksWorld {
            blocks: set.into_iter().collect(),
        }
    }

    /// Blocks `A..` up to `n` of them.
    pub fn with_count(n: usize) -> Self {
        BlocksWorld::new((0..n).map(Block::nth))
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

impl World for BlocksWorld {
    type State = BlocksState;
    type Action = BlockMove;

    const TAG: DomainTag = DomainTag::Blocks;

    fn step(&self, state: &BlocksState, action: &BlockMove) -> Result<BlocksState, InvalidMove> {
        if !self.blocks.contains(&action.block) {
            return Err(InvalidMove::UnknownBlock);
        }
        blocks_step(state, *action)
    }

    /// Every (block, destination) pair with distinct block and destination:
    /// blocks sorted, destinations sorted with the table last.
    fn probe_actions(&self, _state: &BlocksState) -> Vec<BlockMove> {
        let mut out = Vec::with_capacity(self.blocks.len() * self.blocks.len());
        for &b in &self.blocks {
            for &d in &self.blocks {
                if d != b {
                    out.push(BlockMove::onto(b, d));
                }
            }
            out.push(BlockMove::to_table(b));
        }
        out
    }

    fn valid_actions(&self, state: &BlocksState) -> Vec<BlockMove> {
        let tops = state.clear_blocks();
        let mut out = vec![];
        for &b in &tops {
            for &d in &tops {
                if d != b {
                    out.push(BlockMove::onto(b, d));
                }
            }
            if !state.on_table(b) {
                out.push(BlockMove::to_table(b));
            }
        }
        out
    }

    fn heuristic(&self, from: &BlocksState, to: &BlocksState) -> u32 {
        blocks_mismatch(from, to)
    }

    fn contains(&self, state: &BlocksState) -> bool {
        state.block_count() == self.blocks.len() && state.blocks().into_iter().eq(self.blocks.iter().copied())
    }

    fn step_bound(&self) -> usize {
        2 * self.blocks.len()
    }

    fn describe(&self, start: &BlocksState, goal: &BlocksState) -> String {
        let labels: Vec<String> = self.blocks.iter().map(ToString::to_string).collect();
        format!("blocks {}\nstart {}\ngoal {}\n", labels.join(" "), start, goal)
    }
}
