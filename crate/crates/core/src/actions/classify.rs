use serde::{Deserialize, Serialize};

use super::WebAction;
use crate::axtree::{AXTree, AttrKey};
use crate::mockweb::NetworkRequest;

/// Button labels treated as navigation or transient, never destructive.
pub const TRANSIENT_LABELS: [&str; 4] = ["back", "search", "refresh", "export"];

/// Frontier priority class. The numeric codes (3 safe, 2 destructive,
/// 1 terminating) are what traces and reports show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionClass {
    Terminating,
    Destructive,
    Safe,
}

impl ActionClass {
    pub fn code(self) -> u8 {
        match self {
            ActionClass::Terminating => 1,
            ActionClass::Destructive => 2,
            ActionClass::Safe => 3,
        }
    }
}

/// Pre-execution heuristic: does this action look like it writes server state?
pub fn is_destructive_pre(action: &WebAction, obs: &AXTree, authenticated: bool) -> bool {
    if !authenticated {
        return false;
    }
    match action {
        WebAction::Click { bid } => {
            let Some(node) = obs.find(bid) else {
                return false;
            };
            if node.role != "button" {
                return false;
            }
            let label = node.name.to_lowercase();
            if TRANSIENT_LABELS.iter().any(|t| label.contains(t)) {
                return false;
            }
            let has_popup = node
                .attr(AttrKey::HasPopup)
                .is_some_and(|v| v.as_bool() || v.as_text().is_some_and(|t| t != "false"));
            !(has_popup || node.flag(AttrKey::Disabled))
        }
        WebAction::Fill { press_enter, .. } => *press_enter,
        WebAction::Press { key, .. } => key == "Enter",
        _ => false,
    }
}

/// Post-execution heuristic over the requests the step issued.
pub fn is_destructive_post(log: &[NetworkRequest]) -> bool {
    log.iter().any(|r| r.method.is_mutating())
}

pub fn classify(action: &WebAction, obs: &AXTree, authenticated: bool) -> ActionClass {
    if action.is_stop() {
        ActionClass::Terminating
    } else if is_destructive_pre(action, obs, authenticated) {
        ActionClass::Destructive
    } else {
        ActionClass::Safe
    }
}
