//! Web-agent tree search with action validation, destructive-action handling
//! and speculative backtracking, run against a deterministic simulated web.

pub mod actions;
pub mod axtree;
pub mod mockweb;
pub mod digest;
pub mod generator;
pub mod reward;
pub mod backtrack;
pub mod search;
pub mod trace;
pub mod runner;
