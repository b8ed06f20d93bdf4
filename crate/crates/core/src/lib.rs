//! Hybrid fast/slow planning.
//!
//! A controller splits each planning problem into chained sub-goals and tags
//! each one for a fast search-free planner or a deliberate search planner.
//! The crate covers the two benchmark domains (grid mazes and Blocksworld),
//! traced A*/BFS/DFS engines, hardness functions, controller training-data
//! generation, the hybrid executive, budget-matched evaluation and the
//! dataset emitters.

pub mod domain;
pub mod search;
pub mod hardness;
pub mod controller;
pub mod hybrid;
pub mod eval;
pub mod emit;
