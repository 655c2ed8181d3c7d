#![allow(dead_code)]

pub mod reference;
pub mod sites;

use std::path::PathBuf;

use webnav::runner::{load_suite, TaskRef};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn desk_dir() -> PathBuf {
    fixtures().join("desk")
}

pub fn desk_tasks() -> Vec<TaskRef> {
    load_suite(&desk_dir().join("suite.json")).expect("desk suite loads")
}

pub fn precision_tasks() -> Vec<TaskRef> {
    load_suite(&fixtures().join("precision").join("suite.json")).expect("precision suite loads")
}
