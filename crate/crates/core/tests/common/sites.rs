//! Random simulated sites and search trees grown over them.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};
use webnav::actions::{ScrollDirection, WebAction};
use webnav::axtree::AXTree;
use webnav::mockweb::{EnvHandle, Scenario};
use webnav::search::{mark_checkpoint, NodeId, NodeState, SearchTree};

pub const TASK: &str = "t";

/// A site of links, text boxes, long pages and tab-opening links. With
/// `drift`, every page but the start page shows a fresh nonce at top level and
/// the start page holds links only.
pub fn generate(seed: u64, drift: bool, rng: &mut ChaCha8Rng) -> Arc<Scenario> {
    let host = format!("http://gen{seed}.test");
    let n = rng.gen_range(3..=7);
    let url = |i: usize| format!("{host}/p{i}");
    let mut pages = Vec::new();
    for i in 0..n {
        let plain_root = drift && i == 0;
        let mut lines = vec![format!("RootWebArea 'Page {i}'")];
        let mut elements = Map::new();
        let mut next_bid = 1;
        let mut bid = || {
            let b = next_bid.to_string();
            next_bid += 1;
            b
        };
        if drift && i > 0 {
            lines.push("    StaticText 'Ticker {{nonce}}'".into());
        }
        let long = !plain_root && rng.gen_bool(0.3);
        if long {
            for r in 0..8 {
                lines.push(format!("    StaticText 'row {r}'"));
            }
        }
        let first = usize::from(drift);
        for _ in 0..rng.gen_range(1..=3) {
            let j = rng.gen_range(first..n);
            let b = bid();
            lines.push(format!("    [{b}] link 'Go to page {j}'"));
            elements.insert(b, json!({"click": [{"navigate": url(j)}]}));
        }
        if !plain_root && rng.gen_bool(0.5) {
            let b = bid();
            lines.push(format!("    [{b}] textbox 'Note'"));
        }
        if !drift && rng.gen_bool(0.3) {
            let j = rng.gen_range(0..n);
            let b = bid();
            lines.push(format!("    [{b}] link 'Open page {j} in a new tab'"));
            elements.insert(b, json!({"click": [{"open_tab": url(j)}]}));
        }
        pages.push(json!({
            "url": url(i),
            "long": long,
            "axtree_template": lines.join("\n") + "\n",
            "elements": Value::Object(elements),
        }));
    }
    let scenario = json!({
        "name": format!("gen{seed}"),
        "start_url": url(0),
        "pages": pages,
        "tasks": [{"id": TASK, "goal": "explore", "success": {"url_is": url(0)}}],
    });
    Arc::new(Scenario::from_json(&scenario.to_string()).expect("generated scenario is valid"))
}

/// Trees are recorded under this seed; replaying under another seed makes
/// volatile pages show different content.
pub const RECORD_SEED: u64 = 0;

pub fn fresh(scenario: &Arc<Scenario>, seed: u64) -> (EnvHandle, AXTree) {
    EnvHandle::reset(scenario.clone(), TASK, seed).expect("generated task exists")
}

/// A uniformly chosen valid safe action, if any.
pub fn random_action(env: &EnvHandle, obs: &AXTree, rng: &mut ChaCha8Rng) -> Option<WebAction> {
    let mut options = Vec::new();
    for (_, node) in obs.walk() {
        let Some(bid) = &node.bid else { continue };
        match node.role.as_str() {
            "link" => options.push(WebAction::Click { bid: bid.clone() }),
            "textbox" => options.push(WebAction::Fill {
                bid: bid.clone(),
                value: ["alpha", "beta", "gamma"].choose(rng).unwrap().to_string(),
                press_enter: false,
            }),
            _ => {}
        }
    }
    if env.page_is_long() {
        options.push(WebAction::Scroll {
            direction: ScrollDirection::Down,
        });
        options.push(WebAction::Scroll {
            direction: ScrollDirection::Up,
        });
    }
    for index in 0..env.tab_count() {
        if index != env.active_index() {
            options.push(WebAction::TabFocus { index });
        }
    }
    options.retain(|a| env.validate(a, obs).is_valid());
    options.choose(rng).cloned()
}

/// Drive a fresh environment along the tree path to `node`.
pub fn env_at(scenario: &Arc<Scenario>, tree: &SearchTree, node: NodeId, seed: u64) -> EnvHandle {
    let (mut env, _) = fresh(scenario, seed);
    for a in tree.trajectory(node) {
        env.execute(&a).expect("tree paths replay from a reset");
    }
    env
}

/// Grow a tree of up to `size` nodes by extending random existing nodes.
pub fn build_tree(scenario: &Arc<Scenario>, size: usize, rng: &mut ChaCha8Rng) -> SearchTree {
    let (mut env, obs) = fresh(scenario, RECORD_SEED);
    let mut tree = SearchTree::new(NodeState::capture(&env, obs));
    mark_checkpoint(&mut tree, 0, &mut env);
    for _ in 0..size * 3 {
        if tree.len() >= size {
            break;
        }
        let parent = rng.gen_range(0..tree.len());
        let mut env = env_at(scenario, &tree, parent, RECORD_SEED);
        let obs = env.observe();
        let Some(action) = random_action(&env, &obs, rng) else {
            continue;
        };
        let step = env.execute(&action).expect("validated actions execute");
        let child = tree.add_child(parent, action, NodeState::capture(&env, step.observation));
        mark_checkpoint(&mut tree, child, &mut env);
    }
    tree
}

/// An action to run at `node`: a click or fill on one of its elements, or a
/// stop when it has none.
pub fn pending_action(tree: &SearchTree, node: NodeId, rng: &mut ChaCha8Rng) -> WebAction {
    let bids: Vec<(String, String)> = tree
        .node(node)
        .observation()
        .walk()
        .into_iter()
        .filter_map(|(_, n)| n.bid.clone().map(|b| (b, n.role.clone())))
        .collect();
    match bids.choose(rng) {
        Some((bid, role)) if role == "textbox" => WebAction::Fill {
            bid: bid.clone(),
            value: "delta".into(),
            press_enter: false,
        },
        Some((bid, _)) => WebAction::Click { bid: bid.clone() },
        None => WebAction::Stop { answer: "none".into() },
    }
}
