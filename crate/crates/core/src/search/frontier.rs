use std::cmp::Reverse;
use std::collections::BTreeMap;

use ordered_float::OrderedFloat;
use serde::{Deserialize, Serialize};

use super::tree::{NodeId, SearchTree};
use crate::actions::{ActionClass, Candidate, WebAction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierEntry {
    pub origin: NodeId,
    pub action: WebAction,
    pub reward: f64,
    pub class: ActionClass,
    pub seq: u64,
}

type Key = (Reverse<OrderedFloat<f64>>, u64);

fn key_of(e: &FrontierEntry) -> Key {
    (Reverse(OrderedFloat(e.reward)), e.seq)
}

/// Priority queue of unexecuted actions: highest reward first, FIFO on ties.
#[derive(Debug, Clone, Default)]
pub struct Frontier {
    entries: BTreeMap<Key, FrontierEntry>,
    next_seq: u64,
}

impl Frontier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, origin: NodeId, candidate: Candidate) -> u64 {
        let seq = self.next_seq;
        self.next_seq += 1;
        let e = FrontierEntry {
            origin,
            action: candidate.action,
            reward: candidate.reward,
            class: candidate.class,
            seq,
        };
        self.entries.insert(key_of(&e), e);
        seq
    }

    /// Put back an entry previously taken out, keeping its sequence number.
    pub fn restore(&mut self, entry: FrontierEntry) {
        self.next_seq = self.next_seq.max(entry.seq + 1);
        self.entries.insert(key_of(&entry), entry);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &FrontierEntry> {
        self.entries.values()
    }

    pub fn pop_best(&mut self) -> Option<FrontierEntry> {
        self.entries.pop_first().map(|(_, e)| e)
    }

    pub fn pop_worst(&mut self) -> Option<FrontierEntry> {
        self.entries.pop_last().map(|(_, e)| e)
    }

    pub fn count_class(&self, class: ActionClass) -> usize {
        self.iter().filter(|e| e.class == class).count()
    }

    /// Remove and return the best entry of `class`.
    pub fn take_best_of(&mut self, class: ActionClass) -> Option<FrontierEntry> {
        let key = self
            .entries
            .iter()
            .find(|(_, e)| e.class == class)
            .map(|(k, _)| *k)?;
        self.entries.remove(&key)
    }

    /// Remove every entry failing `keep`, returning the removed ones in order.
    pub fn drain_where(&mut self, mut keep: impl FnMut(&FrontierEntry) -> bool) -> Vec<FrontierEntry> {
        let doomed: Vec<Key> = self
            .entries
            .iter()
            .filter(|(_, e)| !keep(e))
            .map(|(k, _)| *k)
            .collect();
        doomed
            .into_iter()
            .filter_map(|k| self.entries.remove(&k))
            .collect()
    }

    pub fn clear(&mut self) -> Vec<FrontierEntry> {
        std::mem::take(&mut self.entries).into_values().collect()
    }
}

/// Drop entries that can no longer be reached: invalid origins, and origins
/// with no checkpoint ancestor unless the origin is the live node.
pub fn drop_unreachable(frontier: &mut Frontier, tree: &SearchTree, current: NodeId) -> Vec<FrontierEntry> {
    frontier.drain_where(|e| {
        let n = tree.node(e.origin);
        n.valid && (e.origin == current || tree.nearest_checkpoint(e.origin).is_some())
    })
}

/// Enforce the frontier budget: keep only the best terminating and the best
/// destructive entry, then evict lowest rewards until `|F| <= budget`.
pub fn prune_to_budget(frontier: &mut Frontier, budget: usize) -> Vec<FrontierEntry> {
    if frontier.len() <= budget {
        return Vec::new();
    }
    let mut removed = Vec::new();
    for class in [ActionClass::Terminating, ActionClass::Destructive] {
        let mut seen = false;
        removed.extend(frontier.drain_where(|e| {
            if e.class != class {
                return true;
            }
            !std::mem::replace(&mut seen, true)
        }));
    }
    while frontier.len() > budget {
        removed.extend(frontier.pop_worst());
    }
    removed
}

pub fn prune_queue(
    frontier: &mut Frontier,
    budget: usize,
    tree: &SearchTree,
    current: NodeId,
) -> Vec<FrontierEntry> {
    let mut removed = drop_unreachable(frontier, tree, current);
    removed.extend(prune_to_budget(frontier, budget));
    removed
}

/// Context-aware selection. Returns the chosen entry after removing it; every
/// other entry stays in the frontier.
pub fn select_action(
    frontier: &mut Frontier,
    terminating_count: u32,
    destruction_count: u32,
    budget: usize,
    k_t: u32,
    k_d: u32,
) -> Option<FrontierEntry> {
    let mut deferred: Vec<FrontierEntry> = Vec::new();
    let restore = |f: &mut Frontier, d: &mut Vec<FrontierEntry>| {
        for e in d.drain(..) {
            f.restore(e);
        }
    };

    let pressure = frontier.len() > budget || frontier.count_class(ActionClass::Destructive) > 1;
    if pressure {
        while let Some(e) = frontier.pop_best() {
            match e.class {
                ActionClass::Terminating if terminating_count < k_t => deferred.push(e),
                ActionClass::Destructive => {
                    restore(frontier, &mut deferred);
                    if destruction_count >= k_d {
                        if let Some(t) = frontier.take_best_of(ActionClass::Terminating) {
                            frontier.restore(e);
                            return Some(t);
                        }
                    }
                    return Some(e);
                }
                _ => {
                    restore(frontier, &mut deferred);
                    return Some(e);
                }
            }
        }
    } else {
        while let Some(e) = frontier.pop_best() {
            let take = match e.class {
                ActionClass::Safe => true,
                ActionClass::Terminating => terminating_count >= k_t,
                ActionClass::Destructive => false,
            };
            if take {
                restore(frontier, &mut deferred);
                return Some(e);
            }
            deferred.push(e);
        }
    }

    if deferred.is_empty() {
        return None;
    }
    restore(frontier, &mut deferred);
    if destruction_count >= k_d {
        if let Some(t) = frontier.take_best_of(ActionClass::Terminating) {
            return Some(t);
        }
    }
    frontier
        .take_best_of(ActionClass::Destructive)
        .or_else(|| frontier.pop_best())
}
