use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frontier::{drop_unreachable, prune_to_budget, select_action, Frontier, FrontierEntry};
use super::tree::{NodeId, NodeState, SearchTree};
use crate::actions::{classify, is_destructive_post, merge_actions, ActionClass, Candidate, WebAction};
use crate::axtree::AXTree;
use crate::backtrack::backtrack;
use crate::digest::trajectory_digest;
use crate::generator::{context_variations, generate_candidates, GenProvider};
use crate::mockweb::{EnvHandle, TaskSpec};
use crate::reward::{score_candidates, RewardProvider};
use crate::trace::{CandidateRecord, EntryRecord, EventKind, Trace};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub step_budget: usize,
    pub frontier_budget: usize,
    pub branching: usize,
    pub max_depth: usize,
    pub k_t: u32,
    pub k_d: u32,
    pub min_queue: usize,
    pub max_retry: usize,
    pub seed: u64,
    /// When false, entries proposed at other nodes are discarded instead of backtracked to.
    pub backtracking: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            step_budget: 20,
            frontier_budget: 4,
            branching: 3,
            max_depth: 5,
            k_t: 2,
            k_d: 1,
            min_queue: 2,
            max_retry: 5,
            seed: 0,
            backtracking: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0} must be positive")]
pub struct ConfigError(pub &'static str);

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            (self.step_budget, "step budget"),
            (self.frontier_budget, "frontier budget"),
            (self.branching, "branching"),
            (self.max_depth, "max depth"),
            (self.min_queue, "min queue size"),
            (self.max_retry, "max retry"),
        ];
        match positive.iter().find(|(v, _)| *v == 0) {
            Some((_, name)) => Err(ConfigError(name)),
            None => Ok(()),
        }
    }

    /// The frontier floor never exceeds the starting budget.
    pub fn effective_min_queue(&self) -> usize {
        self.min_queue.min(self.frontier_budget)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub steps: usize,
    pub backtracks_attempted: usize,
    pub backtracks_committed: usize,
    pub backtracks_aborted: usize,
    pub destructive_executions: usize,
    pub preflagged_executions: usize,
    pub preflagged_confirmed: usize,
    pub terminating_count: u32,
    pub destruction_count: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    BudgetExhausted,
    FrontierEmpty,
    /// A stop executed but the answer or final state did not satisfy the task.
    WrongAnswer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub success: bool,
    pub trajectory: Vec<WebAction>,
    pub answer: Option<String>,
    pub counters: Counters,
    pub failure: Option<FailureReason>,
}

/// Render `url` fresh in a speculative tab, refresh, and compare.
pub fn probe_stability(env: &mut EnvHandle, url: &str) -> bool {
    let Ok(ctx) = env.fork_tabs(&[url.to_string()]) else {
        return false;
    };
    let first = env.observe().serialize();
    let second = env.refresh().serialize();
    env.abort_fork(ctx);
    first == second
}

/// Checkpoint test for a freshly reached node: refresh-stable and on a new url.
pub fn mark_checkpoint(tree: &mut SearchTree, node: NodeId, env: &mut EnvHandle) -> bool {
    let url = tree.node(node).url().to_string();
    let new_url = tree
        .node(node)
        .parent
        .is_none_or(|p| tree.node(p).url() != url);
    let ok = new_url && probe_stability(env, &url);
    tree.node_mut(node).checkpoint = ok;
    ok
}

struct Search<'a> {
    env: &'a mut EnvHandle,
    task: &'a TaskSpec,
    cfg: &'a SearchConfig,
    policy: &'a mut dyn GenProvider,
    reward: &'a dyn RewardProvider,
    trace: &'a mut Trace,
    tree: SearchTree,
    frontier: Frontier,
    current: NodeId,
    budget: usize,
    counters: Counters,
}

impl Search<'_> {
    fn expand(&mut self, node: NodeId) {
        let n = self.tree.node(node);
        let obs = n.observation().clone();
        let incoming = n.action.clone();
        let space = self.env.action_space(&obs);
        let history = self.tree.history(node);
        let contexts = context_variations(self.task, &history, &obs, &space, self.cfg.branching);
        let env = &*self.env;
        let validate = |a: &WebAction| env.validate(a, &obs);
        let generation = generate_candidates(self.policy, &contexts, self.cfg.max_retry, &validate);
        self.trace.push(EventKind::Expand {
            node,
            depth: self.tree.node(node).depth,
            attempts: generation.attempts,
        });

        let digest = trajectory_digest(&self.task.goal, &self.tree.trajectory(node), &obs);
        let scored = score_candidates(self.reward, &self.task.goal, &digest, &generation.actions);
        let authenticated = self.env.authenticated();
        let candidates: Vec<Candidate> = scored
            .into_iter()
            .map(|(a, r)| {
                let class = classify(&a, &obs, authenticated);
                Candidate::new(a, r, class)
            })
            .collect();
        let record = |c: &Candidate| CandidateRecord {
            action: c.action.to_string(),
            reward: c.reward,
            class: c.class.code(),
            repetitive: incoming.as_ref() == Some(&c.action),
        };
        let raw: Vec<CandidateRecord> = candidates.iter().map(record).collect();
        let merged = merge_actions(candidates);
        if merged.iter().any(|c| c.class == ActionClass::Terminating) {
            self.counters.terminating_count += 1;
        }
        self.trace.push(EventKind::Candidates {
            node,
            candidates: raw,
            merged: merged.iter().map(record).collect(),
            terminating_count: self.counters.terminating_count,
        });
        for c in merged {
            self.frontier.push(node, c);
        }
        self.tree.node_mut(node).expanded = true;
        self.check_frontier();
    }

    fn check_frontier(&self) {
        debug_assert!(
            self.frontier.iter().all(|e| self.tree.node(e.origin).valid),
            "frontier holds an entry from an invalid node"
        );
    }

    /// Select an entry runnable from the current node, backtracking if needed.
    fn select(&mut self) -> Option<FrontierEntry> {
        loop {
            let entry = select_action(
                &mut self.frontier,
                self.counters.terminating_count,
                self.counters.destruction_count,
                self.budget,
                self.cfg.k_t,
                self.cfg.k_d,
            )?;
            self.trace.push(EventKind::Select {
                entry: EntryRecord::from(&entry),
                frontier_size: self.frontier.len(),
            });
            if entry.origin == self.current {
                return Some(entry);
            }
            if !self.cfg.backtracking {
                continue;
            }
            self.counters.backtracks_attempted += 1;
            let report = backtrack(self.env, &self.tree, entry.origin, &entry.action);
            self.trace.push(report.to_event());
            if report.committed() {
                self.counters.backtracks_committed += 1;
                self.current = entry.origin;
                return Some(entry);
            }
            self.counters.backtracks_aborted += 1;
        }
    }

    fn prune(&mut self) {
        let mut removed = drop_unreachable(&mut self.frontier, &self.tree, self.current);
        if !self.cfg.backtracking {
            let cur = self.current;
            removed.extend(self.frontier.drain_where(|e| e.origin == cur));
        }
        removed.extend(prune_to_budget(&mut self.frontier, self.budget));
        if !removed.is_empty() {
            self.trace.push(EventKind::Prune {
                budget: self.budget,
                removed: removed.iter().map(EntryRecord::from).collect(),
                size: self.frontier.len(),
            });
        }
        self.check_frontier();
    }

    fn finish(&mut self, success: bool, failure: Option<FailureReason>, answer: Option<String>) -> SearchResult {
        let trajectory = self.tree.trajectory(self.current);
        self.trace.push(EventKind::Result {
            task: self.task.id.clone(),
            seed: self.cfg.seed,
            success,
            failure,
            trajectory: trajectory.iter().map(ToString::to_string).collect(),
            counters: self.counters.clone(),
        });
        SearchResult {
            success,
            trajectory,
            answer,
            counters: self.counters.clone(),
            failure,
        }
    }

    fn run(&mut self) -> SearchResult {
        let root = self.tree.root();
        let root_url = self.tree.node(root).url().to_string();
        let stable = probe_stability(self.env, &root_url);
        self.tree.node_mut(root).checkpoint = stable;

        while self.counters.steps < self.cfg.step_budget {
            let cur = self.tree.node(self.current);
            if cur.valid && !cur.expanded && cur.depth < self.cfg.max_depth {
                self.expand(self.current);
            }
            let Some(entry) = self.select() else {
                return self.finish(false, Some(FailureReason::FrontierEmpty), None);
            };
            self.prune();

            let rng = self.env.rng_position();
            self.counters.steps += 1;
            let step = self.counters.steps;
            let executed = self.env.execute(&entry.action);
            let class = entry.class.code();
            let step_out = match executed {
                Ok(s) => s,
                Err(e) => {
                    self.trace.push(EventKind::Execute {
                        step,
                        origin: entry.origin,
                        node: None,
                        action: entry.action.to_string(),
                        class,
                        rng,
                        network: Vec::new(),
                        obs_digest: None,
                        checkpoint: None,
                        error: Some(e.0),
                        observation: None,
                    });
                    continue;
                }
            };

            let state = NodeState::capture(self.env, step_out.observation);
            let child = self.tree.add_child(self.current, entry.action.clone(), state);
            let url = self.tree.node(child).url().to_string();
            let parent_url = self.tree.node(self.current).url().to_string();
            let stable = probe_stability(self.env, &url);
            let checkpoint = stable && url != parent_url;
            self.tree.node_mut(child).checkpoint = checkpoint;
            self.current = child;

            let confirmed = is_destructive_post(&step_out.network);
            if entry.class == ActionClass::Destructive {
                self.counters.preflagged_executions += 1;
                if confirmed {
                    self.counters.preflagged_confirmed += 1;
                }
            }
            let node = self.tree.node(child);
            self.trace.push(EventKind::Execute {
                step,
                origin: entry.origin,
                node: Some(child),
                action: entry.action.to_string(),
                class,
                rng,
                network: step_out.network,
                obs_digest: Some(node.digest.clone()),
                checkpoint: Some(checkpoint),
                error: None,
                observation: self.trace.full().then(|| node.observation().serialize()),
            });

            if let Some(answer) = entry.action.stop_answer() {
                let success = self.env.evaluate_task(self.task, Some(answer));
                self.trace.push(EventKind::Terminate {
                    node: child,
                    answer: answer.to_string(),
                    success,
                });
                let failure = (!success).then_some(FailureReason::WrongAnswer);
                return self.finish(success, failure, Some(answer.to_string()));
            }

            if confirmed {
                self.handle_destructive(child, stable);
            }
        }
        self.finish(false, Some(FailureReason::BudgetExhausted), None)
    }

    fn handle_destructive(&mut self, node: NodeId, stable: bool) {
        let dropped = self.frontier.clear().len();
        self.tree.reroot(node);
        self.tree.node_mut(node).checkpoint = stable;
        self.counters.destruction_count += 1;
        self.counters.destructive_executions += 1;
        self.budget = self
            .budget
            .saturating_sub(1)
            .max(self.cfg.effective_min_queue());
        self.trace.push(EventKind::DestructiveReroot {
            node,
            destruction_count: self.counters.destruction_count,
            budget: self.budget,
            dropped,
            valid_nodes: self.tree.nodes().filter(|n| n.valid).count(),
            frontier_size: self.frontier.len(),
        });
        self.check_frontier();
    }
}

/// Run one task from a freshly reset environment.
pub fn run_search(
    env: &mut EnvHandle,
    initial: AXTree,
    task: &TaskSpec,
    cfg: &SearchConfig,
    policy: &mut dyn GenProvider,
    reward: &dyn RewardProvider,
    trace: &mut Trace,
) -> SearchResult {
    let tree = SearchTree::new(NodeState::capture(env, initial));
    let mut search = Search {
        env,
        task,
        cfg,
        policy,
        reward,
        trace,
        tree,
        frontier: Frontier::new(),
        current: 0,
        budget: cfg.frontier_budget,
        counters: Counters::default(),
    };
    search.run()
}
