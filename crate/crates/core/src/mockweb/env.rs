use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scenario::{render_template, Effect, Scenario, SuccessCriterion, TaskSpec};
use super::{HttpMethod, MockWebError, NetworkRequest};
use crate::actions::{
    dynamic_action_space, is_destructive_pre, validate_action, ActionSpace, ScrollDirection,
    ValidationResult, WebAction,
};
use crate::axtree::{AXNode, AXTree, AttrKey, AttrValue, Attrs};

const WINDOW: usize = 8;
const WINDOW_STEP: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{0}")]
pub struct ExecutionError(pub String);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ForkError {
    #[error("a speculative fork is already open")]
    ForkInFork,
    #[error("no speculative fork is open")]
    NotInFork,
    #[error("fork needs at least one tab")]
    NoTabs,
    #[error("url '{0}' is not a page of this scenario")]
    UnknownUrl(String),
    #[error("tab {0} does not exist")]
    NoSuchTab(usize),
    #[error("every forked tab was closed")]
    EmptyFork,
}

/// Temporary state of one tab that can be stored and re-applied.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TabSnapshot {
    pub url: String,
    pub window: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<String, Attrs>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alerts: Vec<String>,
}

#[derive(Debug, Clone)]
struct TabState {
    url: String,
    window: usize,
    overrides: BTreeMap<String, Attrs>,
    alerts: Vec<String>,
    nonce: String,
    back: Vec<String>,
    forward: Vec<String>,
}

/// Bookkeeping returned by [`EnvHandle::fork_tabs`]; consumed by commit or abort.
#[derive(Debug)]
#[must_use]
pub struct SpecContext {
    base_tabs: usize,
    base_active: usize,
    base_last_action: Option<WebAction>,
}

impl SpecContext {
    /// Number of tabs that existed before the fork; forked tab `i` has index `offset + i`.
    pub fn offset(&self) -> usize {
        self.base_tabs
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    pub observation: AXTree,
    pub network: Vec<NetworkRequest>,
}

#[derive(Debug, Clone)]
pub struct EnvHandle {
    scenario: Arc<Scenario>,
    store: BTreeMap<String, String>,
    tabs: Vec<TabState>,
    active: usize,
    last_log: Vec<NetworkRequest>,
    last_action: Option<WebAction>,
    rng: ChaCha8Rng,
    draws: u64,
    in_fork: bool,
}

impl EnvHandle {
    pub fn reset(
        scenario: Arc<Scenario>,
        task_id: &str,
        seed: u64,
    ) -> Result<(EnvHandle, AXTree), MockWebError> {
        if scenario.task(task_id).is_none() {
            return Err(MockWebError::NoSuchTask(task_id.to_string()));
        }
        let mut env = EnvHandle {
            store: scenario.store.clone(),
            scenario,
            tabs: Vec::new(),
            active: 0,
            last_log: Vec::new(),
            last_action: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws: 0,
            in_fork: false,
        };
        let start = env.scenario.start_url.clone();
        let mut log = Vec::new();
        let tab = env.fresh_tab(&start, &mut log);
        env.tabs.push(tab);
        env.last_log = log;
        let obs = env.observe();
        Ok((env, obs))
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn authenticated(&self) -> bool {
        self.scenario.authenticated
    }

    pub fn store(&self) -> &BTreeMap<String, String> {
        &self.store
    }

    pub fn tab_count(&self) -> usize {
        self.tabs.len()
    }

    pub fn active_index(&self) -> usize {
        self.active
    }

    pub fn active_url(&self) -> &str {
        &self.tabs[self.active].url
    }

    pub fn history_len(&self) -> usize {
        self.tabs[self.active].back.len()
    }

    pub fn page_is_long(&self) -> bool {
        self.scenario
            .page(self.active_url())
            .is_some_and(|p| p.long)
    }

    pub fn last_action(&self) -> Option<&WebAction> {
        self.last_action.as_ref()
    }

    pub fn last_log(&self) -> &[NetworkRequest] {
        &self.last_log
    }

    pub fn in_fork(&self) -> bool {
        self.in_fork
    }

    pub fn url_exists(&self, url: &str) -> bool {
        self.scenario.has_page(url)
    }

    /// Number of nonces drawn so far.
    pub fn rng_position(&self) -> u64 {
        self.draws
    }

    pub fn set_rng_position(&mut self, draws: u64) {
        self.rng.set_word_pos(u128::from(draws) * 2);
        self.draws = draws;
    }

    pub fn action_space(&self, obs: &AXTree) -> ActionSpace {
        dynamic_action_space(
            obs,
            self.page_is_long(),
            self.tabs.len(),
            self.history_len(),
            self.last_action.as_ref(),
        )
    }

    /// Validate `action` against the live active tab.
    pub fn validate(&self, action: &WebAction, obs: &AXTree) -> ValidationResult {
        let space = self.action_space(obs);
        validate_action(action, obs, &space, &|u| self.url_exists(u))
    }

    pub fn tab_snapshots(&self) -> Vec<TabSnapshot> {
        self.tabs
            .iter()
            .map(|t| TabSnapshot {
                url: t.url.clone(),
                window: t.window,
                overrides: t.overrides.clone(),
                alerts: t.alerts.clone(),
            })
            .collect()
    }

    /// Render the active tab.
    pub fn observe(&self) -> AXTree {
        self.render(&self.tabs[self.active])
    }

    fn render(&self, tab: &TabState) -> AXTree {
        let page = self
            .scenario
            .page(&tab.url)
            .expect("tabs only hold declared pages");
        let text = render_template(&page.axtree_template, &self.store, &tab.nonce);
        let mut root = AXTree::parse(&text)
            .expect("templates are checked at load and store values are escaped")
            .into_root();
        if !tab.overrides.is_empty() {
            apply_overrides(&mut root, &tab.overrides);
        }
        if page.long {
            let start = tab.window * WINDOW_STEP;
            root.children = root.children.into_iter().skip(start).take(WINDOW).collect();
        }
        for msg in &tab.alerts {
            root.children.push(AXNode::new("alert", msg.clone()));
        }
        AXTree::from_root(root).expect("windowing preserves bid uniqueness")
    }

    fn max_window(&self, tab: &TabState) -> usize {
        let page = self.scenario.page(&tab.url).expect("declared page");
        if !page.long {
            return 0;
        }
        let text = render_template(&page.axtree_template, &self.store, &tab.nonce);
        let n = AXTree::parse(&text).map(|t| t.root().children.len()).unwrap_or(0);
        if n <= WINDOW {
            0
        } else {
            (n - WINDOW).div_ceil(WINDOW_STEP)
        }
    }

    fn draw_nonce(&mut self, url: &str) -> String {
        if self.scenario.page(url).is_some_and(|p| p.is_volatile()) {
            self.draws += 1;
            format!("{:016x}", self.rng.next_u64())
        } else {
            String::new()
        }
    }

    fn fresh_tab(&mut self, url: &str, log: &mut Vec<NetworkRequest>) -> TabState {
        log.push(NetworkRequest::new(HttpMethod::Get, url));
        TabState {
            url: url.to_string(),
            window: 0,
            overrides: BTreeMap::new(),
            alerts: Vec::new(),
            nonce: self.draw_nonce(url),
            back: Vec::new(),
            forward: Vec::new(),
        }
    }

    /// Load `url` into the active tab, clearing all temporary page state.
    fn load(&mut self, url: &str, log: &mut Vec<NetworkRequest>) {
        log.push(NetworkRequest::new(HttpMethod::Get, url));
        let nonce = self.draw_nonce(url);
        let tab = &mut self.tabs[self.active];
        tab.url = url.to_string();
        tab.window = 0;
        tab.overrides.clear();
        tab.alerts.clear();
        tab.nonce = nonce;
    }

    fn navigate(&mut self, url: &str, log: &mut Vec<NetworkRequest>) {
        let tab = &mut self.tabs[self.active];
        let prev = std::mem::replace(&mut tab.url, url.to_string());
        tab.back.push(prev);
        tab.forward.clear();
        self.load(url, log);
    }

    fn open_tab(&mut self, url: &str, log: &mut Vec<NetworkRequest>) {
        let tab = self.fresh_tab(url, log);
        self.tabs.push(tab);
        self.active = self.tabs.len() - 1;
    }

    fn close_active(&mut self) {
        if self.tabs.len() > 1 {
            self.tabs.remove(self.active);
            self.active = self.active.saturating_sub(1);
        }
    }

    /// Reload the active tab. Temporary state is discarded; volatile pages draw a fresh nonce.
    pub fn refresh(&mut self) -> AXTree {
        let url = self.active_url().to_string();
        let mut log = Vec::new();
        self.load(&url, &mut log);
        self.last_log = log;
        self.observe()
    }

    pub fn execute(&mut self, action: &WebAction) -> Result<Step, ExecutionError> {
        let obs = self.observe();
        if let ValidationResult::Invalid(reason) = self.validate(action, &obs) {
            return Err(ExecutionError(reason));
        }
        if self.in_fork && is_destructive_pre(action, &obs, self.authenticated()) {
            return Err(ExecutionError(format!(
                "refusing destructive action {action} in a speculative tab"
            )));
        }

        let mut log = Vec::new();
        let page = self
            .scenario
            .page(self.active_url())
            .expect("declared page");
        let effects = action
            .target_bid()
            .and_then(|bid| page.elements.get(bid))
            .cloned()
            .unwrap_or_default();

        match action {
            WebAction::Click { .. } => self.fire(&effects.click, "", &mut log)?,
            WebAction::Fill {
                bid,
                value,
                press_enter,
            } => {
                let mut list = effects.fill.clone();
                if *press_enter {
                    list.extend(effects.submit.iter().cloned());
                }
                check_errors(&list)?;
                self.set_override(bid, AttrKey::Value, AttrValue::Text(value.clone()));
                self.fire(&list, value, &mut log)?;
            }
            WebAction::SelectOption { bid, option } => {
                check_errors(&effects.select_option)?;
                self.set_override(bid, AttrKey::Value, AttrValue::Text(option.clone()));
                self.fire(&effects.select_option, option, &mut log)?;
            }
            WebAction::Press { bid, key } => {
                if key == "Enter" {
                    let input = obs
                        .find(bid)
                        .and_then(|n| n.attr(AttrKey::Value))
                        .and_then(|v| v.as_text())
                        .unwrap_or("")
                        .to_string();
                    self.fire(&effects.submit, &input, &mut log)?;
                }
            }
            WebAction::Scroll { direction } => {
                let max = self.max_window(&self.tabs[self.active]);
                let tab = &mut self.tabs[self.active];
                tab.window = match direction {
                    ScrollDirection::Down => (tab.window + 1).min(max),
                    ScrollDirection::Up => tab.window.saturating_sub(1),
                };
            }
            WebAction::Goto { url } => self.navigate(url, &mut log),
            WebAction::NewTab { url } => self.open_tab(url, &mut log),
            WebAction::TabFocus { index } => self.active = *index,
            WebAction::TabClose => self.close_active(),
            WebAction::GoBack => {
                let tab = &mut self.tabs[self.active];
                let prev = tab.back.pop().expect("go_back is only valid with history");
                let cur = std::mem::replace(&mut tab.url, prev.clone());
                tab.forward.push(cur);
                self.load(&prev, &mut log);
            }
            WebAction::GoForward => {
                let tab = &mut self.tabs[self.active];
                let Some(next) = tab.forward.pop() else {
                    return Err(ExecutionError("no page to go forward to".into()));
                };
                let cur = std::mem::replace(&mut tab.url, next.clone());
                tab.back.push(cur);
                self.load(&next, &mut log);
            }
            WebAction::Stop { .. } | WebAction::Noop => {}
        }

        self.last_action = Some(action.clone());
        self.last_log = log.clone();
        Ok(Step {
            observation: self.observe(),
            network: log,
        })
    }

    fn set_override(&mut self, bid: &str, key: AttrKey, value: AttrValue) {
        self.tabs[self.active]
            .overrides
            .entry(bid.to_string())
            .or_default()
            .insert(key, value);
    }

    fn fire(
        &mut self,
        effects: &[Effect],
        input: &str,
        log: &mut Vec<NetworkRequest>,
    ) -> Result<(), ExecutionError> {
        check_errors(effects)?;
        let fields = self.observe();
        for effect in effects {
            match effect {
                Effect::Navigate(url) => self.navigate(url, log),
                Effect::StoreSet { key, value } => {
                    let v = expand_value(value, input, &fields);
                    self.store.insert(key.clone(), v);
                }
                Effect::TempSet { bid, attr, value } => {
                    self.set_override(bid, *attr, value.clone())
                }
                Effect::Alert(msg) => self.tabs[self.active].alerts.push(msg.clone()),
                Effect::OpenTab(url) => self.open_tab(url, log),
                Effect::CloseTab => self.close_active(),
                Effect::Request { method, url } => log.push(NetworkRequest::new(*method, url)),
                Effect::Error(_) => unreachable!("checked above"),
            }
        }
        Ok(())
    }

    /// Open one speculative tab per url after the existing tabs and focus the first.
    pub fn fork_tabs(&mut self, urls: &[String]) -> Result<SpecContext, ForkError> {
        if self.in_fork {
            return Err(ForkError::ForkInFork);
        }
        if urls.is_empty() {
            return Err(ForkError::NoTabs);
        }
        if let Some(u) = urls.iter().find(|u| !self.url_exists(u)) {
            return Err(ForkError::UnknownUrl(u.clone()));
        }
        let ctx = SpecContext {
            base_tabs: self.tabs.len(),
            base_active: self.active,
            base_last_action: self.last_action.clone(),
        };
        let mut scratch = Vec::new();
        for u in urls {
            let tab = self.fresh_tab(u, &mut scratch);
            self.tabs.push(tab);
        }
        self.active = ctx.base_tabs;
        self.in_fork = true;
        Ok(ctx)
    }

    /// Re-apply stored temporary state onto an open tab showing the same url.
    pub fn restore_tab(&mut self, index: usize, snap: &TabSnapshot) -> Result<(), ForkError> {
        let tab = self.tabs.get_mut(index).ok_or(ForkError::NoSuchTab(index))?;
        if tab.url != snap.url {
            return Err(ForkError::UnknownUrl(snap.url.clone()));
        }
        tab.window = snap.window;
        tab.overrides = snap.overrides.clone();
        tab.alerts = snap.alerts.clone();
        Ok(())
    }

    pub fn focus(&mut self, index: usize) -> Result<(), ForkError> {
        if index >= self.tabs.len() {
            return Err(ForkError::NoSuchTab(index));
        }
        self.active = index;
        Ok(())
    }

    pub fn abort_fork(&mut self, ctx: SpecContext) {
        self.tabs.truncate(ctx.base_tabs);
        self.active = ctx.base_active;
        self.last_action = ctx.base_last_action;
        self.in_fork = false;
    }

    /// Close the original tabs; forked tabs are renumbered from 0.
    pub fn commit_fork(&mut self, ctx: SpecContext) -> Result<(), ForkError> {
        if !self.in_fork {
            return Err(ForkError::NotInFork);
        }
        if self.tabs.len() <= ctx.base_tabs || self.active < ctx.base_tabs {
            self.abort_fork(ctx);
            return Err(ForkError::EmptyFork);
        }
        self.tabs.drain(..ctx.base_tabs);
        self.active -= ctx.base_tabs;
        self.in_fork = false;
        Ok(())
    }

    pub fn evaluate_task(&self, task: &TaskSpec, stop_answer: Option<&str>) -> bool {
        match &task.success {
            SuccessCriterion::StoreEquals { key, value } => self.store.get(key) == Some(value),
            SuccessCriterion::AnswerEquals(expected) => {
                stop_answer.is_some_and(|a| a.trim() == expected.trim())
            }
            SuccessCriterion::UrlIs(url) => self.active_url() == url,
        }
    }
}

fn check_errors(effects: &[Effect]) -> Result<(), ExecutionError> {
    match effects.iter().find_map(|e| match e {
        Effect::Error(msg) => Some(msg),
        _ => None,
    }) {
        Some(msg) => Err(ExecutionError(msg.clone())),
        None => Ok(()),
    }
}

fn apply_overrides(node: &mut AXNode, overrides: &BTreeMap<String, Attrs>) {
    if let Some(attrs) = node.bid.as_ref().and_then(|b| overrides.get(b)) {
        for (k, v) in attrs {
            node.attrs.insert(*k, v.clone());
        }
    }
    for child in &mut node.children {
        apply_overrides(child, overrides);
    }
}

/// Expand `{{input}}` and `{{field.BID}}` inside a store_set value.
fn expand_value(template: &str, input: &str, obs: &AXTree) -> String {
    let mut out = String::new();
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else {
            out.push_str(&rest[start..]);
            return out;
        };
        let name = after[..end].trim();
        if name == "input" {
            out.push_str(input);
        } else if let Some(bid) = name.strip_prefix("field.") {
            let v = obs
                .find(bid)
                .and_then(|n| n.attr(AttrKey::Value))
                .and_then(|v| v.as_text())
                .unwrap_or("");
            out.push_str(v);
        } else {
            out.push_str(&rest[start..start + end + 4]);
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out
}
