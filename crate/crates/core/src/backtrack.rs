//! Speculative backtracking: rebuild the nearest checkpoint in forked tabs,
//! replay stored actions with snapshot validation, then commit or abort.

use crate::actions::{is_destructive_pre, WebAction};
use crate::axtree::{compare_observation, compare_whole, AXTree};
use crate::digest::obs_digest;
use crate::mockweb::{EnvHandle, TabSnapshot};
use crate::search::{NodeId, SearchTree};
use crate::trace::{BacktrackOutcomeKind, EventKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BacktrackPlan {
    pub rollback: NodeId,
    /// Nodes from `rollback` to the target, both included.
    pub nodes: Vec<NodeId>,
    /// Edge actions between consecutive entries of `nodes`.
    pub replay: Vec<WebAction>,
}

impl BacktrackPlan {
    /// Target of the next action after validating `nodes[k]`: the following
    /// replay action, or `pending` at the target itself.
    fn pivot_action<'a>(&'a self, k: usize, pending: &'a WebAction) -> &'a WebAction {
        self.replay.get(k).unwrap_or(pending)
    }
}

pub fn find_path(tree: &SearchTree, target: NodeId) -> Option<BacktrackPlan> {
    let rollback = tree.nearest_checkpoint(target)?;
    let mut nodes: Vec<NodeId> = tree
        .ancestors(target)
        .into_iter()
        .take_while(|&n| n != rollback)
        .collect();
    nodes.push(rollback);
    nodes.reverse();
    let replay = nodes[1..]
        .iter()
        .map(|&n| tree.node(n).action.clone().expect("non-root node has an edge"))
        .collect();
    Some(BacktrackPlan {
        rollback,
        nodes,
        replay,
    })
}

/// Shift `tab_focus` indices past the tabs that existed before the fork.
pub fn remap_tab_action(action: &WebAction, offset: usize) -> WebAction {
    match action {
        WebAction::TabFocus { index } => WebAction::TabFocus {
            index: index + offset,
        },
        other => other.clone(),
    }
}

fn matches_snapshot(expected: &AXTree, actual: &AXTree, next: &WebAction) -> bool {
    match next.target_bid() {
        Some(bid) => compare_observation(expected, actual, bid).unwrap_or(false),
        None => compare_whole(expected, actual),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BacktrackOutcome {
    Committed,
    Aborted { step: usize, reason: String },
    NoPlan,
}

#[derive(Debug, Clone)]
pub struct BacktrackReport {
    pub target: NodeId,
    pub plan: Option<BacktrackPlan>,
    pub fork_tabs: Vec<TabSnapshot>,
    pub active: usize,
    pub replay: Vec<WebAction>,
    pub rng: u64,
    pub outcome: BacktrackOutcome,
    pub obs_digest: Option<String>,
}

impl BacktrackReport {
    pub fn committed(&self) -> bool {
        self.outcome == BacktrackOutcome::Committed
    }

    pub fn to_event(&self) -> EventKind {
        let (outcome, mismatch_step, reason) = match &self.outcome {
            BacktrackOutcome::Committed => (BacktrackOutcomeKind::Committed, None, None),
            BacktrackOutcome::Aborted { step, reason } => {
                (BacktrackOutcomeKind::Aborted, Some(*step), Some(reason.clone()))
            }
            BacktrackOutcome::NoPlan => (BacktrackOutcomeKind::NoPlan, None, None),
        };
        EventKind::Backtrack {
            target: self.target,
            rollback: self.plan.as_ref().map(|p| p.rollback),
            fork_tabs: self.fork_tabs.clone(),
            active: self.active,
            replay: self.replay.iter().map(ToString::to_string).collect(),
            rng: self.rng,
            outcome,
            mismatch_step,
            reason,
            obs_digest: self.obs_digest.clone(),
        }
    }
}

/// Move the environment to `target`, about to run `pending` there. The main
/// tabs are untouched unless every validation step passes.
pub fn backtrack(
    env: &mut EnvHandle,
    tree: &SearchTree,
    target: NodeId,
    pending: &WebAction,
) -> BacktrackReport {
    let mut report = BacktrackReport {
        target,
        plan: None,
        fork_tabs: Vec::new(),
        active: 0,
        replay: Vec::new(),
        rng: env.rng_position(),
        outcome: BacktrackOutcome::NoPlan,
        obs_digest: None,
    };
    let Some(plan) = find_path(tree, target) else {
        return report;
    };
    let rollback = &tree.node(plan.rollback).state;
    report.fork_tabs = rollback.tabs.clone();
    report.active = rollback.active_tab;
    report.plan = Some(plan.clone());
    report.outcome = replay_in_fork(env, tree, &plan, pending, &mut report.replay);
    if report.committed() {
        report.obs_digest = Some(obs_digest(&env.observe()));
    }
    report
}

fn replay_in_fork(
    env: &mut EnvHandle,
    tree: &SearchTree,
    plan: &BacktrackPlan,
    pending: &WebAction,
    remapped: &mut Vec<WebAction>,
) -> BacktrackOutcome {
    let abort = |step: usize, reason: String| BacktrackOutcome::Aborted { step, reason };
    let rollback = &tree.node(plan.rollback).state;
    let urls: Vec<String> = rollback.tabs.iter().map(|t| t.url.clone()).collect();
    let ctx = match env.fork_tabs(&urls) {
        Ok(ctx) => ctx,
        Err(e) => return abort(0, e.to_string()),
    };
    let offset = ctx.offset();
    *remapped = plan.replay.iter().map(|a| remap_tab_action(a, offset)).collect();

    let setup = rollback
        .tabs
        .iter()
        .enumerate()
        .try_for_each(|(i, snap)| env.restore_tab(offset + i, snap))
        .and_then(|_| env.focus(offset + rollback.active_tab));
    if let Err(e) = setup {
        env.abort_fork(ctx);
        return abort(0, e.to_string());
    }

    for (k, &node) in plan.nodes.iter().enumerate() {
        let actual = env.observe();
        let expected = tree.node(node).observation();
        if !matches_snapshot(expected, &actual, plan.pivot_action(k, pending)) {
            env.abort_fork(ctx);
            return abort(k, "snapshot mismatch".into());
        }
        let Some(action) = remapped.get(k) else {
            break;
        };
        if is_destructive_pre(action, &actual, env.authenticated()) {
            env.abort_fork(ctx);
            return abort(k, format!("replay action {action} looks destructive"));
        }
        if let Err(e) = env.execute(action) {
            env.abort_fork(ctx);
            return abort(k, e.to_string());
        }
    }

    match env.commit_fork(ctx) {
        Ok(()) => BacktrackOutcome::Committed,
        Err(e) => abort(plan.nodes.len(), e.to_string()),
    }
}

/// Re-run a committed backtrack recorded in a trace.
pub fn reapply_committed(
    env: &mut EnvHandle,
    fork_tabs: &[TabSnapshot],
    active: usize,
    replay: &[WebAction],
) -> Result<(), String> {
    let urls: Vec<String> = fork_tabs.iter().map(|t| t.url.clone()).collect();
    let ctx = env.fork_tabs(&urls).map_err(|e| e.to_string())?;
    let offset = ctx.offset();
    let run = |env: &mut EnvHandle| -> Result<(), String> {
        for (i, snap) in fork_tabs.iter().enumerate() {
            env.restore_tab(offset + i, snap).map_err(|e| e.to_string())?;
        }
        env.focus(offset + active).map_err(|e| e.to_string())?;
        for a in replay {
            env.execute(a).map_err(|e| e.to_string())?;
        }
        Ok(())
    };
    match run(env) {
        Ok(()) => env.commit_fork(ctx).map_err(|e| e.to_string()),
        Err(e) => {
            env.abort_fork(ctx);
            Err(e)
        }
    }
}
