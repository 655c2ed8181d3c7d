//! JSON Lines search traces.

use serde::{Deserialize, Serialize};

use crate::generator::Attempt;
use crate::mockweb::{NetworkRequest, TabSnapshot};
use crate::search::{Counters, FailureReason, FrontierEntry, NodeId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub action: String,
    pub reward: f64,
    pub class: u8,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub repetitive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryRecord {
    pub origin: NodeId,
    pub action: String,
    pub reward: f64,
    pub class: u8,
    pub seq: u64,
}

impl From<&FrontierEntry> for EntryRecord {
    fn from(e: &FrontierEntry) -> Self {
        EntryRecord {
            origin: e.origin,
            action: e.action.to_string(),
            reward: e.reward,
            class: e.class.code(),
            seq: e.seq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BacktrackOutcomeKind {
    Committed,
    Aborted,
    NoPlan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Expand {
        node: NodeId,
        depth: usize,
        attempts: Vec<Attempt>,
    },
    Candidates {
        node: NodeId,
        candidates: Vec<CandidateRecord>,
        merged: Vec<CandidateRecord>,
        terminating_count: u32,
    },
    Prune {
        budget: usize,
        removed: Vec<EntryRecord>,
        size: usize,
    },
    Select {
        entry: EntryRecord,
        frontier_size: usize,
    },
    Backtrack {
        target: NodeId,
        #[serde(skip_serializing_if = "Option::is_none")]
        rollback: Option<NodeId>,
        fork_tabs: Vec<TabSnapshot>,
        active: usize,
        replay: Vec<String>,
        rng: u64,
        outcome: BacktrackOutcomeKind,
        #[serde(skip_serializing_if = "Option::is_none")]
        mismatch_step: Option<usize>,
        #[serde(skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        obs_digest: Option<String>,
    },
    Execute {
        step: usize,
        origin: NodeId,
        #[serde(skip_serializing_if = "Option::is_none")]
        node: Option<NodeId>,
        action: String,
        class: u8,
        rng: u64,
        network: Vec<NetworkRequest>,
        #[serde(skip_serializing_if = "Option::is_none")]
        obs_digest: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        checkpoint: Option<bool>,
        #[serde(skip_serializing_if = "Option::is_none")]
        error: Option<String>,
        #[serde(skip_serializing_if = "Option::is_none")]
        observation: Option<String>,
    },
    DestructiveReroot {
        node: NodeId,
        destruction_count: u32,
        budget: usize,
        dropped: usize,
        valid_nodes: usize,
        frontier_size: usize,
    },
    Terminate {
        node: NodeId,
        answer: String,
        success: bool,
    },
    Result {
        task: String,
        seed: u64,
        success: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        failure: Option<FailureReason>,
        trajectory: Vec<String>,
        counters: Counters,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub event: EventKind,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    events: Vec<TraceEvent>,
    full: bool,
}

impl Trace {
    /// `full` keeps observation text on execute events.
    pub fn new(full: bool) -> Self {
        Trace {
            events: Vec::new(),
            full,
        }
    }

    pub fn full(&self) -> bool {
        self.full
    }

    pub fn push(&mut self, event: EventKind) {
        let seq = self.events.len() as u64;
        self.events.push(TraceEvent { seq, event });
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("trace events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<TraceEvent>, serde_json::Error> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(serde_json::from_str)
            .collect()
    }
}
