//! Candidate action generation: context variations, a validate-and-retry loop
//! with feedback, and scripted or random proposal providers.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{
    auto_correct, is_select_role, is_text_entry_role, parse_action, ActionKind, ActionSpace,
    ScrollDirection, ValidationResult, WebAction,
};
use crate::axtree::AXTree;
use crate::digest::obs_digest;
use crate::mockweb::{TaskExample, TaskSpec};

const SUMMARY_ELEMENTS: usize = 5;

/// One step of concise history.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryStep {
    pub summary: String,
    pub thought: String,
    pub action: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenContext {
    pub goal: String,
    pub rephrased_goal: Option<String>,
    pub history: Vec<HistoryStep>,
    pub examples: Vec<TaskExample>,
    pub observation: String,
    pub obs_digest: String,
    pub action_space: Vec<String>,
    pub variation: usize,
}

/// Root name, url and the first few elements that carry a bid.
pub fn summarize_observation(obs: &AXTree, url: &str) -> String {
    let elems: Vec<String> = obs
        .walk()
        .into_iter()
        .filter_map(|(_, n)| n.bid.as_ref().map(|b| format!("[{b}] {} '{}'", n.role, n.name)))
        .take(SUMMARY_ELEMENTS)
        .collect();
    format!("{} ({url}): {}", obs.root().name, elems.join("; "))
}

/// The last `n` steps, oldest first.
pub fn build_history(trajectory: &[HistoryStep], n: usize) -> Vec<HistoryStep> {
    trajectory[trajectory.len().saturating_sub(n)..].to_vec()
}

/// Contexts for `count` proposals. Variations cycle through full history, the
/// last step only, and full history with examples and the rephrased goal; each
/// further cycle shortens the history by one step.
pub fn context_variations(
    task: &TaskSpec,
    history: &[HistoryStep],
    obs: &AXTree,
    space: &ActionSpace,
    count: usize,
) -> Vec<GenContext> {
    let observation = obs.serialize();
    let digest = obs_digest(obs);
    (0..count)
        .map(|variation| {
            let round = variation / 3;
            let full = history.len().saturating_sub(round);
            let (n, enriched) = match variation % 3 {
                0 => (full, false),
                1 => (1usize.saturating_sub(round), false),
                _ => (full, true),
            };
            GenContext {
                goal: task.goal.clone(),
                rephrased_goal: if enriched { task.rephrased_goal.clone() } else { None },
                history: build_history(history, n),
                examples: if enriched { task.examples.clone() } else { Vec::new() },
                observation: observation.clone(),
                obs_digest: digest.clone(),
                action_space: space.listing(),
                variation,
            }
        })
        .collect()
}

pub trait GenProvider {
    /// Propose one action text. `attempt` counts from 0 within a variation;
    /// `feedback` explains why the previous attempt was rejected.
    fn propose(&mut self, ctx: &GenContext, attempt: usize, feedback: Option<&str>) -> String;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("policy table parse error: {0}")]
pub struct PolicyError(pub String);

/// Lookup table keyed by `"<obs digest>:<variation>:<attempt>"`, falling back to
/// `"<obs digest>:<variation>"`. Missing keys propose nothing.
#[derive(Debug, Clone, Default)]
pub struct ScriptedPolicy {
    table: BTreeMap<String, String>,
}

impl ScriptedPolicy {
    pub fn from_json(text: &str) -> Result<Self, PolicyError> {
        let table = serde_json::from_str(text).map_err(|e| PolicyError(e.to_string()))?;
        Ok(ScriptedPolicy { table })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PolicyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PolicyError(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl GenProvider for ScriptedPolicy {
    fn propose(&mut self, ctx: &GenContext, attempt: usize, _feedback: Option<&str>) -> String {
        let d = &ctx.obs_digest;
        let v = ctx.variation;
        self.table
            .get(&format!("{d}:{v}:{attempt}"))
            .or_else(|| self.table.get(&format!("{d}:{v}")))
            .cloned()
            .unwrap_or_default()
    }
}

/// Uniform choice over concrete actions on visible elements.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl GenProvider for RandomPolicy {
    fn propose(&mut self, ctx: &GenContext, _attempt: usize, _feedback: Option<&str>) -> String {
        let Ok(obs) = AXTree::parse(&ctx.observation) else {
            return String::new();
        };
        let kinds: Vec<ActionKind> = ctx
            .action_space
            .iter()
            .filter_map(|k| ActionKind::from_name(k))
            .collect();
        let mut options: Vec<WebAction> = Vec::new();
        for (_, node) in obs.walk() {
            let Some(bid) = &node.bid else { continue };
            if kinds.contains(&ActionKind::Click) {
                options.push(WebAction::Click { bid: bid.clone() });
            }
            if kinds.contains(&ActionKind::Fill) && is_text_entry_role(&node.role) {
                options.push(WebAction::Fill {
                    bid: bid.clone(),
                    value: ctx.goal.split_whitespace().last().unwrap_or("").to_string(),
                    press_enter: false,
                });
            }
            if kinds.contains(&ActionKind::SelectOption) && is_select_role(&node.role) {
                if let Some(opt) = node.children.iter().find(|c| c.role == "option") {
                    options.push(WebAction::SelectOption {
                        bid: bid.clone(),
                        option: opt.name.clone(),
                    });
                }
            }
        }
        if kinds.contains(&ActionKind::Scroll) {
            options.push(WebAction::Scroll {
                direction: ScrollDirection::Down,
            });
        }
        if kinds.contains(&ActionKind::GoBack) {
            options.push(WebAction::GoBack);
        }
        options.push(WebAction::Stop {
            answer: String::new(),
        });
        options
            .choose(&mut self.rng)
            .map(ToString::to_string)
            .unwrap_or_default()
    }
}

/// One provider call and its verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub variation: usize,
    pub attempt: usize,
    pub raw: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub action: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Generation {
    pub actions: Vec<WebAction>,
    pub attempts: Vec<Attempt>,
}

/// For each context, retry up to `max_retry` times until the provider emits an
/// action that parses and validates; rejection reasons feed the next attempt.
/// A variation that never succeeds contributes nothing.
pub fn generate_candidates(
    provider: &mut dyn GenProvider,
    contexts: &[GenContext],
    max_retry: usize,
    validate: &dyn Fn(&WebAction) -> ValidationResult,
) -> Generation {
    let mut out = Generation::default();
    for ctx in contexts {
        let mut feedback: Option<String> = None;
        for attempt in 0..max_retry {
            let raw = provider.propose(ctx, attempt, feedback.as_deref());
            let corrected = auto_correct(&raw);
            let verdict = parse_action(&corrected)
                .map_err(|e| e.to_string())
                .and_then(|a| match validate(&a) {
                    ValidationResult::Valid => Ok(a),
                    ValidationResult::Invalid(reason) => Err(reason),
                });
            let mut record = Attempt {
                variation: ctx.variation,
                attempt,
                raw,
                action: None,
                error: None,
            };
            match verdict {
                Ok(action) => {
                    record.action = Some(action.to_string());
                    out.attempts.push(record);
                    out.actions.push(action);
                    break;
                }
                Err(reason) => {
                    record.error = Some(reason.clone());
                    out.attempts.push(record);
                    feedback = Some(reason);
                }
            }
        }
    }
    out
}
