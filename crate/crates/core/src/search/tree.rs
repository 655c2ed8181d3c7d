use crate::actions::WebAction;
use crate::axtree::AXTree;
use crate::digest::obs_digest;
use crate::generator::{summarize_observation, HistoryStep};
use crate::mockweb::{EnvHandle, TabSnapshot};

pub type NodeId = usize;

/// What a node remembers about the browser when it was reached.
#[derive(Debug, Clone)]
pub struct NodeState {
    pub observation: AXTree,
    pub url: String,
    pub tabs: Vec<TabSnapshot>,
    pub active_tab: usize,
}

impl NodeState {
    pub fn capture(env: &EnvHandle, observation: AXTree) -> Self {
        NodeState {
            observation,
            url: env.active_url().to_string(),
            tabs: env.tab_snapshots(),
            active_tab: env.active_index(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchNode {
    pub id: NodeId,
    pub state: NodeState,
    pub parent: Option<NodeId>,
    /// Edge action from the parent.
    pub action: Option<WebAction>,
    pub depth: usize,
    pub checkpoint: bool,
    pub valid: bool,
    pub expanded: bool,
    pub digest: String,
    /// Actions executed before this node became a root.
    prefix: Vec<WebAction>,
}

impl SearchNode {
    pub fn observation(&self) -> &AXTree {
        &self.state.observation
    }

    pub fn url(&self) -> &str {
        &self.state.url
    }
}

#[derive(Debug, Clone)]
pub struct SearchTree {
    nodes: Vec<SearchNode>,
    root: NodeId,
}

impl SearchTree {
    pub fn new(state: NodeState) -> Self {
        let digest = obs_digest(&state.observation);
        SearchTree {
            nodes: vec![SearchNode {
                id: 0,
                state,
                parent: None,
                action: None,
                depth: 0,
                checkpoint: false,
                valid: true,
                expanded: false,
                digest,
                prefix: Vec::new(),
            }],
            root: 0,
        }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &SearchNode {
        &self.nodes[id]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut SearchNode {
        &mut self.nodes[id]
    }

    pub fn nodes(&self) -> impl Iterator<Item = &SearchNode> {
        self.nodes.iter()
    }

    pub fn add_child(&mut self, parent: NodeId, action: WebAction, state: NodeState) -> NodeId {
        let id = self.nodes.len();
        let digest = obs_digest(&state.observation);
        let depth = self.nodes[parent].depth + 1;
        self.nodes.push(SearchNode {
            id,
            state,
            parent: Some(parent),
            action: Some(action),
            depth,
            checkpoint: false,
            valid: true,
            expanded: false,
            digest,
            prefix: Vec::new(),
        });
        id
    }

    /// `id` and its ancestors, nearest first.
    pub fn ancestors(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = vec![id];
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Nearest checkpoint among `id` and its ancestors.
    pub fn nearest_checkpoint(&self, id: NodeId) -> Option<NodeId> {
        self.ancestors(id)
            .into_iter()
            .find(|&n| self.nodes[n].checkpoint)
    }

    /// Every action executed to reach `id`, including those before the last re-root.
    pub fn trajectory(&self, id: NodeId) -> Vec<WebAction> {
        let chain = self.ancestors(id);
        let top = *chain.last().expect("non-empty");
        let mut out = self.nodes[top].prefix.clone();
        out.extend(
            chain
                .iter()
                .rev()
                .filter_map(|&n| self.nodes[n].action.clone()),
        );
        out
    }

    /// Concise history along the tree path to `id`.
    pub fn history(&self, id: NodeId) -> Vec<HistoryStep> {
        let chain = self.ancestors(id);
        chain
            .windows(2)
            .rev()
            .map(|w| {
                let (child, parent) = (&self.nodes[w[0]], &self.nodes[w[1]]);
                HistoryStep {
                    summary: summarize_observation(parent.observation(), parent.url()),
                    thought: String::new(),
                    action: child.action.as_ref().expect("non-root").to_string(),
                }
            })
            .collect()
    }

    /// Make `id` the root and invalidate every other node.
    pub fn reroot(&mut self, id: NodeId) {
        let prefix = self.trajectory(id);
        for n in &mut self.nodes {
            n.valid = false;
        }
        let node = &mut self.nodes[id];
        node.valid = true;
        node.parent = None;
        node.action = None;
        node.depth = 0;
        node.prefix = prefix;
        self.root = id;
    }
}
