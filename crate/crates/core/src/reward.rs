//! Checklist-based process reward: per-item probabilities combined into one score.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::WebAction;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RewardError {
    #[error("checklist has no items")]
    EmptyChecklist,
    #[error("checklist item {index} has invalid probabilities ({p_yes}, {p_inprogress})")]
    InvalidProbability {
        index: usize,
        p_yes: f64,
        p_inprogress: f64,
    },
    #[error("reward table parse error: {0}")]
    Parse(String),
    #[error("reward table has no \"default\" entry")]
    MissingDefault,
}

/// `(p_yes, p_inprogress)` per checklist item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct ChecklistProbs(Vec<(f64, f64)>);

impl ChecklistProbs {
    pub fn new(items: Vec<(f64, f64)>) -> Result<Self, RewardError> {
        if items.is_empty() {
            return Err(RewardError::EmptyChecklist);
        }
        for (index, &(p_yes, p_inprogress)) in items.iter().enumerate() {
            let unit = |p: f64| (0.0..=1.0).contains(&p);
            if !unit(p_yes) || !unit(p_inprogress) || p_yes + p_inprogress > 1.0 + 1e-12 {
                return Err(RewardError::InvalidProbability {
                    index,
                    p_yes,
                    p_inprogress,
                });
            }
        }
        Ok(ChecklistProbs(items))
    }

    pub fn items(&self) -> &[(f64, f64)] {
        &self.0
    }
}

impl TryFrom<Vec<(f64, f64)>> for ChecklistProbs {
    type Error = RewardError;

    fn try_from(items: Vec<(f64, f64)>) -> Result<Self, Self::Error> {
        ChecklistProbs::new(items)
    }
}

impl From<ChecklistProbs> for Vec<(f64, f64)> {
    fn from(p: ChecklistProbs) -> Self {
        p.0
    }
}

/// Mean over items of `p_yes + 0.5 * p_inprogress`.
pub fn combine_checklist(probs: &ChecklistProbs) -> f64 {
    let items = probs.items();
    let total: f64 = items.iter().map(|&(y, p)| y + 0.5 * p).sum();
    total / items.len() as f64
}

pub trait RewardProvider {
    fn checklist(&self, goal: &str, trajectory_digest: &str, action: &WebAction) -> ChecklistProbs;
}

/// Score each candidate in order.
pub fn score_candidates<P: RewardProvider + ?Sized>(
    provider: &P,
    goal: &str,
    trajectory_digest: &str,
    candidates: &[WebAction],
) -> Vec<(WebAction, f64)> {
    candidates
        .iter()
        .map(|a| {
            let probs = provider.checklist(goal, trajectory_digest, a);
            (a.clone(), combine_checklist(&probs))
        })
        .collect()
}

/// Lookup table keyed by `"<trajectory digest>|<action>"`. A `"*|<action>"` key
/// matches the action anywhere; `"default"` covers everything else.
#[derive(Debug, Clone)]
pub struct ScriptedReward {
    table: BTreeMap<String, ChecklistProbs>,
    default: ChecklistProbs,
}

impl ScriptedReward {
    pub fn from_json(text: &str) -> Result<Self, RewardError> {
        let mut table: BTreeMap<String, ChecklistProbs> =
            serde_json::from_str(text).map_err(|e| RewardError::Parse(e.to_string()))?;
        let default = table.remove("default").ok_or(RewardError::MissingDefault)?;
        Ok(ScriptedReward { table, default })
    }

    pub fn key(trajectory_digest: &str, action: &WebAction) -> String {
        format!("{trajectory_digest}|{action}")
    }
}

impl RewardProvider for ScriptedReward {
    fn checklist(&self, _goal: &str, trajectory_digest: &str, action: &WebAction) -> ChecklistProbs {
        self.table
            .get(&Self::key(trajectory_digest, action))
            .or_else(|| self.table.get(&Self::key("*", action)))
            .unwrap_or(&self.default)
            .clone()
    }
}

pub fn make_scripted_provider(path: impl AsRef<Path>) -> Result<ScriptedReward, RewardError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| RewardError::Parse(format!("{}: {e}", path.display())))?;
    ScriptedReward::from_json(&text)
}
