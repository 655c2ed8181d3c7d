//! Agent actions: the call-expression DSL, the dynamic action space, pre-execution
//! validation, destructive-action heuristics and candidate merging.

mod classify;
mod merge;
mod parse;
mod space;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use classify::{classify, is_destructive_post, is_destructive_pre, ActionClass, TRANSIENT_LABELS};
pub use merge::{merge_actions, normalize_fill_text, Candidate};
pub use parse::{auto_correct, parse_action, ActionParseError};
pub use space::{
    dynamic_action_space, is_select_role, is_text_entry_role, validate_action, ActionSpace,
    ValidationResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    Click,
    Fill,
    SelectOption,
    Scroll,
    Goto,
    NewTab,
    TabFocus,
    TabClose,
    GoBack,
    GoForward,
    Press,
    Stop,
    Noop,
}

impl ActionKind {
    pub const ALL: [ActionKind; 13] = [
        ActionKind::Click,
        ActionKind::Fill,
        ActionKind::SelectOption,
        ActionKind::Scroll,
        ActionKind::Goto,
        ActionKind::NewTab,
        ActionKind::TabFocus,
        ActionKind::TabClose,
        ActionKind::GoBack,
        ActionKind::GoForward,
        ActionKind::Press,
        ActionKind::Stop,
        ActionKind::Noop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::Click => "click",
            ActionKind::Fill => "fill",
            ActionKind::SelectOption => "select_option",
            ActionKind::Scroll => "scroll",
            ActionKind::Goto => "goto",
            ActionKind::NewTab => "new_tab",
            ActionKind::TabFocus => "tab_focus",
            ActionKind::TabClose => "tab_close",
            ActionKind::GoBack => "go_back",
            ActionKind::GoForward => "go_forward",
            ActionKind::Press => "press",
            ActionKind::Stop => "stop",
            ActionKind::Noop => "noop",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ActionKind::ALL.into_iter().find(|k| k.as_str() == name)
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScrollDirection {
    Up,
    Down,
}

/// One parsed agent action. `Display` yields the canonical DSL text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum WebAction {
    Click { bid: String },
    Fill { bid: String, value: String, press_enter: bool },
    SelectOption { bid: String, option: String },
    Scroll { direction: ScrollDirection },
    Goto { url: String },
    NewTab { url: String },
    TabFocus { index: usize },
    TabClose,
    GoBack,
    GoForward,
    Press { bid: String, key: String },
    Stop { answer: String },
    Noop,
}

impl WebAction {
    pub fn kind(&self) -> ActionKind {
        match self {
            WebAction::Click { .. } => ActionKind::Click,
            WebAction::Fill { .. } => ActionKind::Fill,
            WebAction::SelectOption { .. } => ActionKind::SelectOption,
            WebAction::Scroll { .. } => ActionKind::Scroll,
            WebAction::Goto { .. } => ActionKind::Goto,
            WebAction::NewTab { .. } => ActionKind::NewTab,
            WebAction::TabFocus { .. } => ActionKind::TabFocus,
            WebAction::TabClose => ActionKind::TabClose,
            WebAction::GoBack => ActionKind::GoBack,
            WebAction::GoForward => ActionKind::GoForward,
            WebAction::Press { .. } => ActionKind::Press,
            WebAction::Stop { .. } => ActionKind::Stop,
            WebAction::Noop => ActionKind::Noop,
        }
    }

    /// The element this action touches, if any (the pivotal node).
    pub fn target_bid(&self) -> Option<&str> {
        match self {
            WebAction::Click { bid }
            | WebAction::Fill { bid, .. }
            | WebAction::SelectOption { bid, .. }
            | WebAction::Press { bid, .. } => Some(bid),
            _ => None,
        }
    }

    pub fn is_stop(&self) -> bool {
        matches!(self, WebAction::Stop { .. })
    }

    pub fn stop_answer(&self) -> Option<&str> {
        match self {
            WebAction::Stop { answer } => Some(answer),
            _ => None,
        }
    }
}

impl fmt::Display for WebAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = crate::axtree::escape_quoted;
        let b = |v: bool| if v { "True" } else { "False" };
        match self {
            WebAction::Click { bid } => write!(f, "click('{}')", q(bid)),
            WebAction::Fill {
                bid,
                value,
                press_enter,
            } => write!(f, "fill('{}', '{}', {})", q(bid), q(value), b(*press_enter)),
            WebAction::SelectOption { bid, option } => {
                write!(f, "select_option('{}', '{}')", q(bid), q(option))
            }
            WebAction::Scroll { direction } => match direction {
                ScrollDirection::Up => f.write_str("scroll('up')"),
                ScrollDirection::Down => f.write_str("scroll('down')"),
            },
            WebAction::Goto { url } => write!(f, "goto('{}')", q(url)),
            WebAction::NewTab { url } => write!(f, "new_tab('{}')", q(url)),
            WebAction::TabFocus { index } => write!(f, "tab_focus({index})"),
            WebAction::TabClose => f.write_str("tab_close()"),
            WebAction::GoBack => f.write_str("go_back()"),
            WebAction::GoForward => f.write_str("go_forward()"),
            WebAction::Press { bid, key } => write!(f, "press('{}', '{}')", q(bid), q(key)),
            WebAction::Stop { answer } => write!(f, "stop('{}')", q(answer)),
            WebAction::Noop => f.write_str("noop()"),
        }
    }
}

impl std::str::FromStr for WebAction {
    type Err = ActionParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_action(s)
    }
}

impl Serialize for WebAction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for WebAction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_action(&s).map_err(serde::de::Error::custom)
    }
}
