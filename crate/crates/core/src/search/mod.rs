//! Best-first tree search over the web environment.

mod frontier;
mod run;
mod tree;

pub use frontier::{
    drop_unreachable, prune_queue, prune_to_budget, select_action, Frontier, FrontierEntry,
};
pub use run::{
    mark_checkpoint, probe_stability, run_search, ConfigError, Counters, FailureReason,
    SearchConfig, SearchResult,
};
pub use tree::{NodeId, NodeState, SearchNode, SearchTree};
