//! Deterministic simulated web environment.

mod env;
mod scenario;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use env::{EnvHandle, ExecutionError, ForkError, SpecContext, Step, TabSnapshot};
pub use scenario::{
    load_scenario, render_template, Effect, ElementEffects, PageSpec, Scenario, SuccessCriterion,
    TaskExample, TaskSpec,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MockWebError {
    #[error("scenario parse error: {0}")]
    Parse(String),
    #[error("start url '{0}' is not a declared page")]
    MissingStartUrl(String),
    #[error("page url '{0}' declared twice")]
    DuplicatePageUrl(String),
    #[error("page '{page}' declares effects for unknown bid '{bid}'")]
    DanglingBid { page: String, bid: String },
    #[error("page '{page}' references undeclared url '{url}'")]
    DanglingUrl { page: String, url: String },
    #[error("template of '{url}' does not parse: {error}")]
    Template { url: String, error: String },
    #[error("no task with id '{0}'")]
    NoSuchTask(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum HttpMethod {
    Get,
    Post,
    Put,
    Delete,
    Patch,
}

impl HttpMethod {
    pub fn is_mutating(self) -> bool {
        self != HttpMethod::Get
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkRequest {
    pub method: HttpMethod,
    pub url: String,
}

impl NetworkRequest {
    pub fn new(method: HttpMethod, url: impl Into<String>) -> Self {
        NetworkRequest {
            method,
            url: url.into(),
        }
    }
}
