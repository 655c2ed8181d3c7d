use std::collections::BTreeSet;

use super::{ActionKind, WebAction};
use crate::axtree::{AXNode, AXTree, AttrKey};

const TEXT_ENTRY_ROLES: [&str; 4] = ["textbox", "searchbox", "spinbutton", "textarea"];
const SELECT_ROLES: [&str; 2] = ["combobox", "listbox"];

pub fn is_text_entry_role(role: &str) -> bool {
    TEXT_ENTRY_ROLES.contains(&role)
}

pub fn is_select_role(role: &str) -> bool {
    SELECT_ROLES.contains(&role)
}

/// Action kinds available in the current state, plus the tab count needed to
/// range-check `tab_focus`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSpace {
    pub enabled: BTreeSet<ActionKind>,
    pub tab_count: usize,
}

impl ActionSpace {
    pub fn allows(&self, kind: ActionKind) -> bool {
        self.enabled.contains(&kind)
    }

    /// One kind per line, as shown to generators.
    pub fn listing(&self) -> Vec<String> {
        self.enabled.iter().map(|k| k.to_string()).collect()
    }
}

/// Conditional action space.
///
/// `click`, `fill`, `goto`, `new_tab` and `stop` are always present. `press`
/// is offered only when the page has a text-entry element to press keys in.
pub fn dynamic_action_space(
    obs: &AXTree,
    page_is_long: bool,
    tab_count: usize,
    history_len: usize,
    last_action: Option<&WebAction>,
) -> ActionSpace {
    let mut enabled: BTreeSet<ActionKind> = [
        ActionKind::Click,
        ActionKind::Fill,
        ActionKind::Goto,
        ActionKind::NewTab,
        ActionKind::Stop,
    ]
    .into_iter()
    .collect();

    if page_is_long {
        enabled.insert(ActionKind::Scroll);
    }
    let walk = obs.walk();
    if walk.iter().any(|(_, n)| is_select_role(&n.role)) {
        enabled.insert(ActionKind::SelectOption);
    }
    if walk
        .iter()
        .any(|(_, n)| n.bid.is_some() && is_text_entry_role(&n.role))
    {
        enabled.insert(ActionKind::Press);
    }
    if tab_count >= 2 {
        enabled.insert(ActionKind::TabFocus);
        enabled.insert(ActionKind::TabClose);
    }
    if history_len > 0 {
        enabled.insert(ActionKind::GoBack);
    }
    if matches!(last_action, Some(WebAction::GoBack)) {
        enabled.insert(ActionKind::GoForward);
    }
    ActionSpace { enabled, tab_count }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValidationResult {
    Valid,
    Invalid(String),
}

impl ValidationResult {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationResult::Valid)
    }

    pub fn reason(&self) -> Option<&str> {
        match self {
            ValidationResult::Valid => None,
            ValidationResult::Invalid(r) => Some(r),
        }
    }
}

fn options_of(node: &AXNode) -> Vec<&str> {
    let mut out = Vec::new();
    let mut stack: Vec<&AXNode> = node.children.iter().collect();
    while let Some(n) = stack.pop() {
        if n.role == "option" {
            out.push(n.name.trim());
        }
        stack.extend(n.children.iter());
    }
    out
}

/// Static pre-execution check of `action` against the observation it would run
/// on. `url_exists` stands in for opening the URL in a scratch tab.
pub fn validate_action(
    action: &WebAction,
    obs: &AXTree,
    space: &ActionSpace,
    url_exists: &dyn Fn(&str) -> bool,
) -> ValidationResult {
    use ValidationResult::{Invalid, Valid};

    let kind = action.kind();
    if !space.allows(kind) {
        return Invalid(format!("action '{kind}' is not available on this page"));
    }

    let target = match action.target_bid() {
        Some(bid) => match obs.find(bid) {
            Some(node) => Some(node),
            None => return Invalid(format!("element '{bid}' does not exist in the current page")),
        },
        None => None,
    };

    match action {
        WebAction::Click { bid } => {
            if target.is_some_and(|n| n.flag(AttrKey::Disabled)) {
                return Invalid(format!("cannot click disabled element '{bid}'"));
            }
        }
        WebAction::Fill { bid, .. } => {
            let node = target.expect("checked above");
            if node.flag(AttrKey::Readonly) {
                return Invalid(format!("cannot fill read-only field '{bid}'"));
            }
            if node.flag(AttrKey::Disabled) {
                return Invalid(format!("cannot fill disabled element '{bid}'"));
            }
            if !is_text_entry_role(&node.role) {
                return Invalid(format!("element '{bid}' ({}) is not a text field", node.role));
            }
        }
        WebAction::SelectOption { bid, option } => {
            let node = target.expect("checked above");
            if node.flag(AttrKey::Disabled) {
                return Invalid(format!("cannot select on disabled element '{bid}'"));
            }
            if !is_select_role(&node.role) {
                return Invalid(format!("element '{bid}' ({}) is not a select menu", node.role));
            }
            if !options_of(node).contains(&option.trim()) {
                return Invalid(format!("option '{option}' is not available in '{bid}'"));
            }
        }
        WebAction::Press { bid, .. } => {
            if target.is_some_and(|n| n.flag(AttrKey::Disabled)) {
                return Invalid(format!("cannot press keys on disabled element '{bid}'"));
            }
        }
        WebAction::Goto { url } | WebAction::NewTab { url } => {
            if !url_exists(url) {
                return Invalid(format!("invalid URL '{url}'"));
            }
        }
        WebAction::TabFocus { index } if *index >= space.tab_count => {
            return Invalid(format!(
                "tab index {index} out of range ({} tabs open)",
                space.tab_count
            ));
        }
        _ => {}
    }
    Valid
}
