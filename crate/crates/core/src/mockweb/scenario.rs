use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HttpMethod, MockWebError};
use crate::axtree::{escape_quoted, AXTree, AttrKey, AttrValue};

/// A simulated site: pages, the initial server-side store, and its tasks.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub start_url: String,
    #[serde(default = "default_true")]
    pub authenticated: bool,
    pub pages: Vec<PageSpec>,
    #[serde(default)]
    pub store: BTreeMap<String, String>,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
    /// Endpoints that requests may target without being browsable pages.
    #[serde(default)]
    pub external_urls: Vec<String>,
    #[serde(skip)]
    url_index: HashMap<String, usize>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PageSpec {
    pub url: String,
    /// AX text with `{{store.KEY}}` and `{{nonce}}` placeholders.
    pub axtree_template: String,
    #[serde(default)]
    pub long: bool,
    #[serde(default)]
    pub elements: BTreeMap<String, ElementEffects>,
}

impl PageSpec {
    /// A page without `{{nonce}}` renders identically on every reload.
    pub fn is_volatile(&self) -> bool {
        self.axtree_template.contains("{{nonce}}")
    }
}

/// Effects fired by each interaction with one element. `submit` fires on
/// `fill(..., True)` and on `press(bid, 'Enter')`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementEffects {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub click: Vec<Effect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fill: Vec<Effect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub select_option: Vec<Effect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub submit: Vec<Effect>,
}

impl ElementEffects {
    fn all(&self) -> impl Iterator<Item = &Effect> {
        self.click
            .iter()
            .chain(&self.fill)
            .chain(&self.select_option)
            .chain(&self.submit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    Navigate(String),
    /// Value may reference `{{input}}` (the typed or selected text) and
    /// `{{field.BID}}` (the current value of another element on the page).
    StoreSet { key: String, value: String },
    TempSet { bid: String, attr: AttrKey, value: AttrValue },
    Alert(String),
    OpenTab(String),
    CloseTab,
    Request { method: HttpMethod, url: String },
    Error(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskExample {
    pub goal: String,
    #[serde(default)]
    pub thought: String,
    pub action: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskSpec {
    pub id: String,
    pub goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rephrased_goal: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub examples: Vec<TaskExample>,
    pub success: SuccessCriterion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessCriterion {
    StoreEquals { key: String, value: String },
    AnswerEquals(String),
    UrlIs(String),
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, MockWebError> {
        let mut s: Scenario =
            serde_json::from_str(text).map_err(|e| MockWebError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn page(&self, url: &str) -> Option<&PageSpec> {
        self.url_index.get(url).map(|&i| &self.pages[i])
    }

    pub fn has_page(&self, url: &str) -> bool {
        self.url_index.contains_key(url)
    }

    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    fn validate(&mut self) -> Result<(), MockWebError> {
        self.url_index.clear();
        for (i, p) in self.pages.iter().enumerate() {
            if self.url_index.insert(p.url.clone(), i).is_some() {
                return Err(MockWebError::DuplicatePageUrl(p.url.clone()));
            }
        }
        if !self.has_page(&self.start_url) {
            return Err(MockWebError::MissingStartUrl(self.start_url.clone()));
        }
        let external: HashSet<&str> = self.external_urls.iter().map(String::as_str).collect();

        for page in &self.pages {
            let rendered = render_template(&page.axtree_template, &self.store, "0");
            let tree = AXTree::parse(&rendered).map_err(|e| MockWebError::Template {
                url: page.url.clone(),
                error: e.to_string(),
            })?;
            let dangling_bid = |bid: &str| MockWebError::DanglingBid {
                page: page.url.clone(),
                bid: bid.to_string(),
            };
            for (bid, effects) in &page.elements {
                if !tree.contains_bid(bid) {
                    return Err(dangling_bid(bid));
                }
                for effect in effects.all() {
                    let target = match effect {
                        Effect::Navigate(u) | Effect::OpenTab(u) => {
                            (!self.has_page(u)).then_some(u)
                        }
                        Effect::Request { url, .. } => {
                            (!self.has_page(url) && !external.contains(url.as_str())).then_some(url)
                        }
                        Effect::TempSet { bid, .. } if !tree.contains_bid(bid) => {
                            return Err(dangling_bid(bid))
                        }
                        _ => None,
                    };
                    if let Some(u) = target {
                        return Err(MockWebError::DanglingUrl {
                            page: page.url.clone(),
                            url: u.clone(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, MockWebError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| MockWebError::Parse(format!("{}: {e}", path.display())))?;
    Scenario::from_json(&text)
}

/// Substitute `{{store.KEY}}` and `{{nonce}}`. Store values are escaped for
/// use inside quoted names; unknown keys render empty.
pub fn render_template(template: &str, store: &BTreeMap<String, String>, nonce: &str) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(start) = rest.find("{{") {
        out.push_str(&rest[..start]);
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else {
            out.push_str(&rest[start..]);
            return out;
        };
        let name = after[..end].trim();
        if name == "nonce" {
            out.push_str(nonce);
        } else if let Some(key) = name.strip_prefix("store.") {
            out.push_str(&escape_quoted(store.get(key).map(String::as_str).unwrap_or("")));
        } else {
            out.push_str(&rest[start..start + 2 + end + 2]);
        }
        rest = &after[end + 2..];
    }
    out.push_str(rest);
    out
}
