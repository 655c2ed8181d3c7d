//! Accessibility-tree observations.
//!
//! Trees are exchanged as indented text, one node per line:
//!
//! ```text
//! RootWebArea 'Projects · Dashboard' focused=True url='http://s/'
//!     [201] link 'Byte Blaze' url='http://s/byteblaze'
//!         image 'Byte Blaze'
//! ```
//!
//! Depth is encoded with four spaces per level. A line is an optional `[bid]`,
//! the role, the quoted name and zero or more `key=value` attributes. The
//! parser also accepts the comma separated, bare-flag style found in agent
//! prompts (`[64] button '', hasPopup='menu', focused`), but serialization
//! always produces the canonical form above.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

const INDENT: &str = "    ";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AxError {
    #[error("line {line}: malformed node: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate bid '{0}'")]
    DuplicateBid(String),
    #[error("line {line}: bad indentation")]
    BadIndent { line: usize },
    #[error("tree has no RootWebArea root")]
    NoRoot,
    #[error("no node with bid '{0}'")]
    NoSuchBid(String),
}

/// Attribute keys, declared in canonical serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AttrKey {
    Url,
    Value,
    Expanded,
    Disabled,
    Readonly,
    Checked,
    Focused,
    HasPopup,
    Pressed,
}

impl AttrKey {
    pub const ALL: [AttrKey; 9] = [
        AttrKey::Url,
        AttrKey::Value,
        AttrKey::Expanded,
        AttrKey::Disabled,
        AttrKey::Readonly,
        AttrKey::Checked,
        AttrKey::Focused,
        AttrKey::HasPopup,
        AttrKey::Pressed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AttrKey::Url => "url",
            AttrKey::Value => "value",
            AttrKey::Expanded => "expanded",
            AttrKey::Disabled => "disabled",
            AttrKey::Readonly => "readonly",
            AttrKey::Checked => "checked",
            AttrKey::Focused => "focused",
            AttrKey::HasPopup => "hasPopup",
            AttrKey::Pressed => "pressed",
        }
    }

    /// Keys that take part in semantic node equivalence.
    pub fn is_state(self) -> bool {
        matches!(
            self,
            AttrKey::Value
                | AttrKey::Disabled
                | AttrKey::Checked
                | AttrKey::Readonly
                | AttrKey::Expanded
                | AttrKey::Pressed
        )
    }
}

impl FromStr for AttrKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AttrKey::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown attribute '{s}'"))
    }
}

impl serde::Serialize for AttrKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> serde::Deserialize<'de> for AttrKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Text(String),
}

impl AttrValue {
    pub fn as_bool(&self) -> bool {
        matches!(self, AttrValue::Bool(true))
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            AttrValue::Text(t) => Some(t),
            AttrValue::Bool(_) => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Bool(true) => f.write_str("True"),
            AttrValue::Bool(false) => f.write_str("False"),
            AttrValue::Text(t) => write_quoted(f, t),
        }
    }
}

pub type Attrs = BTreeMap<AttrKey, AttrValue>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AXNode {
    pub bid: Option<String>,
    pub role: String,
    pub name: String,
    pub attrs: Attrs,
    pub children: Vec<AXNode>,
}

impl AXNode {
    pub fn new(role: impl Into<String>, name: impl Into<String>) -> Self {
        AXNode {
            bid: None,
            role: role.into(),
            name: name.into(),
            attrs: Attrs::new(),
            children: Vec::new(),
        }
    }

    pub fn with_bid(mut self, bid: impl Into<String>) -> Self {
        self.bid = Some(bid.into());
        self
    }

    pub fn with_attr(mut self, key: AttrKey, value: AttrValue) -> Self {
        self.attrs.insert(key, value);
        self
    }

    pub fn with_child(mut self, child: AXNode) -> Self {
        self.children.push(child);
        self
    }

    pub fn attr(&self, key: AttrKey) -> Option<&AttrValue> {
        self.attrs.get(&key)
    }

    pub fn flag(&self, key: AttrKey) -> bool {
        self.attr(key).is_some_and(AttrValue::as_bool)
    }

    fn write_line(&self, f: &mut impl fmt::Write, depth: usize) -> fmt::Result {
        for _ in 0..depth {
            f.write_str(INDENT)?;
        }
        if let Some(bid) = &self.bid {
            write!(f, "[{bid}] ")?;
        }
        f.write_str(&self.role)?;
        f.write_char(' ')?;
        write_quoted(f, &self.name)?;
        for (key, value) in &self.attrs {
            write!(f, " {}={}", key.as_str(), value)?;
        }
        f.write_char('\n')?;
        for child in &self.children {
            child.write_line(f, depth + 1)?;
        }
        Ok(())
    }
}

/// Semantic equivalence of two nodes: role, trimmed name and state attributes.
///
/// `bid`, `url`, `focused` and `hasPopup` are ignored. An absent boolean state
/// is the same as an explicit `False`.
pub fn node_equivalent(a: &AXNode, b: &AXNode) -> bool {
    if a.role != b.role || a.name.trim() != b.name.trim() {
        return false;
    }
    AttrKey::ALL
        .into_iter()
        .filter(|k| k.is_state())
        .all(|k| normalized_state(a.attr(k)) == normalized_state(b.attr(k)))
}

fn normalized_state(v: Option<&AttrValue>) -> Option<&AttrValue> {
    match v {
        Some(AttrValue::Bool(false)) | None => None,
        other => other,
    }
}

fn subtree_equivalent(a: &AXNode, b: &AXNode) -> bool {
    node_equivalent(a, b)
        && a.children.len() == b.children.len()
        && a
            .children
            .iter()
            .zip(&b.children)
            .all(|(x, y)| subtree_equivalent(x, y))
}

/// A validated observation: single `RootWebArea` root with unique bids.
#[derive(Debug, Clone)]
pub struct AXTree {
    root: AXNode,
    bid_index: HashMap<String, Vec<usize>>,
}

impl PartialEq for AXTree {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Eq for AXTree {}

impl AXTree {
    pub fn from_root(root: AXNode) -> Result<Self, AxError> {
        if root.role != "RootWebArea" {
            return Err(AxError::NoRoot);
        }
        let mut bid_index = HashMap::new();
        let mut path = Vec::new();
        index_bids(&root, &mut path, &mut bid_index)?;
        Ok(AXTree { root, bid_index })
    }

    pub fn parse(text: &str) -> Result<Self, AxError> {
        let mut stack: Vec<AXNode> = Vec::new();
        let mut saw_root = false;

        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            if raw.trim().is_empty() {
                continue;
            }
            let body = raw.trim_start_matches(' ');
            let indent = raw.len() - body.len();
            if indent % INDENT.len() != 0 || body.starts_with('\t') {
                return Err(AxError::BadIndent { line: line_no });
            }
            let depth = indent / INDENT.len();
            let node = parse_line(body).map_err(|reason| AxError::MalformedLine {
                line: line_no,
                reason,
            })?;

            if !saw_root {
                if depth != 0 || node.role != "RootWebArea" {
                    return Err(AxError::NoRoot);
                }
                saw_root = true;
                stack.push(node);
                continue;
            }
            // Stack holds the current root-to-leaf chain; a new node at `depth`
            // becomes a child of stack[depth - 1].
            if depth == 0 || depth > stack.len() {
                return Err(AxError::BadIndent { line: line_no });
            }
            while stack.len() > depth {
                let done = stack.pop().expect("non-empty stack");
                stack.last_mut().expect("parent").children.push(done);
            }
            stack.push(node);
        }

        while stack.len() > 1 {
            let done = stack.pop().expect("non-empty stack");
            stack.last_mut().expect("parent").children.push(done);
        }
        let root = stack.pop().ok_or(AxError::NoRoot)?;
        AXTree::from_root(root)
    }

    pub fn root(&self) -> &AXNode {
        &self.root
    }

    pub fn into_root(self) -> AXNode {
        self.root
    }

    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.root
            .write_line(&mut out, 0)
            .expect("writing to a String cannot fail");
        out
    }

    pub fn find(&self, bid: &str) -> Option<&AXNode> {
        self.path_of(bid).and_then(|p| self.node_at(p))
    }

    pub fn contains_bid(&self, bid: &str) -> bool {
        self.bid_index.contains_key(bid)
    }

    pub fn path_of(&self, bid: &str) -> Option<&[usize]> {
        self.bid_index.get(bid).map(Vec::as_slice)
    }

    pub fn node_at(&self, path: &[usize]) -> Option<&AXNode> {
        let mut node = &self.root;
        for &i in path {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    pub fn bids(&self) -> impl Iterator<Item = &str> {
        self.bid_index.keys().map(String::as_str)
    }

    /// Pre-order walk yielding each node with its positional path.
    pub fn walk(&self) -> Vec<(Vec<usize>, &AXNode)> {
        fn go<'a>(n: &'a AXNode, path: &mut Vec<usize>, out: &mut Vec<(Vec<usize>, &'a AXNode)>) {
            out.push((path.clone(), n));
            for (i, c) in n.children.iter().enumerate() {
                path.push(i);
                go(c, path, out);
                path.pop();
            }
        }
        let mut out = Vec::new();
        go(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn len(&self) -> usize {
        fn count(n: &AXNode) -> usize {
            1 + n.children.iter().map(count).sum::<usize>()
        }
        count(&self.root)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Region around `pivotal_bid`: its ancestors, its own subtree, and the
    /// children of every ancestor.
    pub fn neighborhood(&self, pivotal_bid: &str) -> Result<Neighborhood, AxError> {
        let pivot = self
            .path_of(pivotal_bid)
            .ok_or_else(|| AxError::NoSuchBid(pivotal_bid.to_string()))?
            .to_vec();
        let mut members = BTreeSet::new();

        let mut node = &self.root;
        for depth in 0..pivot.len() {
            let prefix = &pivot[..depth];
            members.insert(prefix.to_vec());
            for i in 0..node.children.len() {
                let mut child = prefix.to_vec();
                child.push(i);
                members.insert(child);
            }
            node = &node.children[pivot[depth]];
        }

        let mut stack = vec![(pivot.clone(), node)];
        while let Some((path, n)) = stack.pop() {
            for (i, c) in n.children.iter().enumerate() {
                let mut p = path.clone();
                p.push(i);
                stack.push((p, c));
            }
            members.insert(path);
        }

        Ok(Neighborhood { pivot, members })
    }
}

impl fmt::Display for AXTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write_line(f, 0)
    }
}

impl FromStr for AXTree {
    type Err = AxError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AXTree::parse(s)
    }
}

fn index_bids(
    node: &AXNode,
    path: &mut Vec<usize>,
    index: &mut HashMap<String, Vec<usize>>,
) -> Result<(), AxError> {
    if let Some(bid) = &node.bid {
        if index.insert(bid.clone(), path.clone()).is_some() {
            return Err(AxError::DuplicateBid(bid.clone()));
        }
    }
    for (i, child) in node.children.iter().enumerate() {
        path.push(i);
        index_bids(child, path, index)?;
        path.pop();
    }
    Ok(())
}

/// Node paths (child indices from the root) making up a pivotal node's region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Neighborhood {
    pub pivot: Vec<usize>,
    pub members: BTreeSet<Vec<usize>>,
}

impl Neighborhood {
    pub fn contains(&self, path: &[usize]) -> bool {
        self.members.contains(path)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Snapshot validation against a stored observation, anchored at the node the
/// next action will touch.
///
/// Ancestors are aligned top-down by position; at every level the full child
/// list of the ancestor must match node-for-node, and the pivotal subtree must
/// match structurally. Nodes outside the neighborhood are never inspected.
pub fn compare_observation(
    expected: &AXTree,
    actual: &AXTree,
    pivotal_bid: &str,
) -> Result<bool, AxError> {
    let pe = expected
        .path_of(pivotal_bid)
        .ok_or_else(|| AxError::NoSuchBid(pivotal_bid.to_string()))?;
    let Some(pa) = actual.path_of(pivotal_bid) else {
        return Ok(false);
    };
    if pe != pa {
        return Ok(false);
    }

    let (mut ne, mut na) = (&expected.root, &actual.root);
    for &idx in pe {
        if !node_equivalent(ne, na) || ne.children.len() != na.children.len() {
            return Ok(false);
        }
        if !ne
            .children
            .iter()
            .zip(&na.children)
            .all(|(x, y)| node_equivalent(x, y))
        {
            return Ok(false);
        }
        ne = &ne.children[idx];
        na = &na.children[idx];
    }
    Ok(subtree_equivalent(ne, na))
}

/// Whole-tree semantic equivalence, used when the next action has no target
/// element (scroll, navigation, tab operations).
pub fn compare_whole(expected: &AXTree, actual: &AXTree) -> bool {
    subtree_equivalent(&expected.root, &actual.root)
}

fn write_quoted(f: &mut impl fmt::Write, s: &str) -> fmt::Result {
    f.write_char('\'')?;
    for c in s.chars() {
        match c {
            '\\' => f.write_str("\\\\")?,
            '\'' => f.write_str("\\'")?,
            '\n' => f.write_str("\\n")?,
            c => f.write_char(c)?,
        }
    }
    f.write_char('\'')
}

/// Escape text so it can be spliced between single quotes.
pub fn escape_quoted(s: &str) -> String {
    let mut out = String::new();
    write_quoted(&mut out, s).expect("string write");
    out[1..out.len() - 1].to_string()
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl Cursor<'_> {
    fn skip_ws(&mut self, commas: bool) {
        while let Some(&c) = self.chars.peek() {
            if c == ' ' || (commas && c == ',') {
                self.chars.next();
            } else {
                break;
            }
        }
    }

    fn word(&mut self) -> String {
        let mut out = String::new();
        while let Some(&c) = self.chars.peek() {
            if c == ' ' || c == ',' || c == '=' || c == '\'' || c == '"' {
                break;
            }
            out.push(c);
            self.chars.next();
        }
        out
    }

    fn quoted(&mut self) -> Result<String, String> {
        let quote = match self.chars.next() {
            Some(q @ ('\'' | '"')) => q,
            _ => return Err("expected quoted text".into()),
        };
        let mut out = String::new();
        loop {
            match self.chars.next() {
                None => return Err("unterminated quote".into()),
                Some('\\') => match self.chars.next() {
                    Some('n') => out.push('\n'),
                    Some(c) => out.push(c),
                    None => return Err("dangling escape".into()),
                },
                Some(c) if c == quote => return Ok(out),
                Some(c) => out.push(c),
            }
        }
    }
}

fn parse_line(body: &str) -> Result<AXNode, String> {
    let mut cur = Cursor {
        chars: body.chars().peekable(),
    };
    let mut bid = None;
    if cur.chars.peek() == Some(&'[') {
        cur.chars.next();
        let mut b = String::new();
        loop {
            match cur.chars.next() {
                Some(']') => break,
                Some(c) if c.is_ascii_alphanumeric() => b.push(c),
                Some(c) => return Err(format!("invalid bid character '{c}'")),
                None => return Err("unterminated bid".into()),
            }
        }
        if b.is_empty() {
            return Err("empty bid".into());
        }
        bid = Some(b);
        cur.skip_ws(false);
    }
    let role = cur.word();
    if role.is_empty() {
        return Err("missing role".into());
    }
    cur.skip_ws(false);
    let name = cur.quoted()?;

    let mut attrs = Attrs::new();
    loop {
        cur.skip_ws(true);
        if cur.chars.peek().is_none() {
            break;
        }
        let key_text = cur.word();
        if key_text.is_empty() {
            return Err("expected attribute".into());
        }
        let key: AttrKey = key_text.parse()?;
        let value = if cur.chars.peek() == Some(&'=') {
            cur.chars.next();
            match cur.chars.peek() {
                Some('\'' | '"') => AttrValue::Text(cur.quoted()?),
                _ => match cur.word().as_str() {
                    "True" => AttrValue::Bool(true),
                    "False" => AttrValue::Bool(false),
                    other => return Err(format!("bad attribute value '{other}'")),
                },
            }
        } else {
            AttrValue::Bool(true)
        };
        if attrs.insert(key, value).is_some() {
            return Err(format!("repeated attribute '{key_text}'"));
        }
    }

    Ok(AXNode {
        bid,
        role,
        name,
        attrs,
        children: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GITLAB: &str = "RootWebArea 'Projects · Dashboard · GitLab', focused, url='http://127.0.0.1:8023/'
    banner ''
        [52] link 'Skip to content', url='http://127.0.0.1:8023/#content-body'
        StaticText 'GitLab'
        [58] link 'Dashboard', url='http://127.0.0.1:8023/'
        list ''
            listitem ''
                [64] button '', hasPopup='menu', expanded=False
        list ''
            listitem ''
                [130] textbox 'Search GitLab'
            listitem ''
                [201] link 'Byte Blaze', focused, expanded=True, url='http://127.0.0.1:8023/byteblaze'
                    image 'Byte Blaze'
";

    #[test]
    fn parses_minimal_tree() {
        let t = AXTree::parse("RootWebArea 'Home'\n    [1] link 'About' url='http://s/a'").unwrap();
        assert_eq!(t.root().name, "Home");
        let link = t.find("1").unwrap();
        assert_eq!(link.role, "link");
        assert_eq!(
            link.attr(AttrKey::Url),
            Some(&AttrValue::Text("http://s/a".into()))
        );
    }

    #[test]
    fn rejects_duplicate_bid() {
        let err = AXTree::parse("RootWebArea 'X'\n    [1] button 'Go'\n    [1] link 'Go'").unwrap_err();
        assert_eq!(err, AxError::DuplicateBid("1".into()));
    }

    #[test]
    fn rejects_depth_jump_and_odd_indent() {
        assert!(matches!(
            AXTree::parse("RootWebArea 'X'\n        [1] button 'Go'"),
            Err(AxError::BadIndent { line: 2 })
        ));
        assert!(matches!(
            AXTree::parse("RootWebArea 'X'\n   [1] button 'Go'"),
            Err(AxError::BadIndent { .. })
        ));
        assert!(matches!(
            AXTree::parse("RootWebArea 'X'\nRootWebArea 'Y'"),
            Err(AxError::BadIndent { .. })
        ));
    }

    #[test]
    fn rejects_missing_root_and_garbage() {
        assert_eq!(AXTree::parse("").unwrap_err(), AxError::NoRoot);
        assert_eq!(AXTree::parse("link 'x'").unwrap_err(), AxError::NoRoot);
        assert!(matches!(
            AXTree::parse("RootWebArea 'X'\n    button Go"),
            Err(AxError::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(
            AXTree::parse("RootWebArea 'X'\n    button 'Go' colour='red'"),
            Err(AxError::MalformedLine { .. })
        ));
    }

    #[test]
    fn serializes_single_root() {
        let t = AXTree::parse("RootWebArea 'Home'").unwrap();
        assert_eq!(t.serialize(), "RootWebArea 'Home'\n");
    }

    #[test]
    fn attrs_serialize_in_canonical_order() {
        let root = AXNode::new("RootWebArea", "R").with_child(
            AXNode::new("button", "Go")
                .with_bid("4")
                .with_attr(AttrKey::Disabled, AttrValue::Bool(true))
                .with_attr(AttrKey::Url, AttrValue::Text("u".into())),
        );
        let t = AXTree::from_root(root).unwrap();
        assert_eq!(
            t.serialize(),
            "RootWebArea 'R'\n    [4] button 'Go' url='u' disabled=True\n"
        );
    }

    #[test]
    fn gitlab_listing_excerpt() {
        let t = AXTree::parse(GITLAB).unwrap();
        let n = t.find("201").unwrap();
        assert_eq!((n.role.as_str(), n.name.as_str()), ("link", "Byte Blaze"));
        assert!(n.flag(AttrKey::Focused));
        assert_eq!(
            t.find("64").unwrap().attr(AttrKey::HasPopup),
            Some(&AttrValue::Text("menu".into()))
        );
        assert!(t.find("99").is_none());
        // canonical re-serialization is a fixpoint
        let canon = t.serialize();
        assert_eq!(AXTree::parse(&canon).unwrap().serialize(), canon);
    }

    #[test]
    fn escapes_round_trip() {
        let text = "RootWebArea 'It\\'s'\n    StaticText 'a\\\\b'\n";
        let t = AXTree::parse(text).unwrap();
        assert_eq!(t.root().name, "It's");
        assert_eq!(t.serialize(), text);
    }

    #[test]
    fn equivalence_rules() {
        let a = AXNode::new("button", "Submit").with_bid("1");
        assert!(node_equivalent(&a, &a.clone()));
        assert!(!node_equivalent(&a, &AXNode::new("button", "Send")));
        let disabled = a.clone().with_attr(AttrKey::Disabled, AttrValue::Bool(true));
        assert!(!node_equivalent(&a, &disabled));
        // bid, url and focus are not semantic
        let drifted = AXNode::new("button", " Submit ")
            .with_bid("77")
            .with_attr(AttrKey::Url, AttrValue::Text("x".into()))
            .with_attr(AttrKey::Focused, AttrValue::Bool(true));
        assert!(node_equivalent(&a, &drifted));
        // explicit False equals absent
        let f = a.clone().with_attr(AttrKey::Checked, AttrValue::Bool(false));
        assert!(node_equivalent(&a, &f));
        // case matters
        assert!(!node_equivalent(&a, &AXNode::new("button", "SUBMIT")));
    }

    fn fixture() -> AXTree {
        // root
        //   [a] main
        //     [b] list
        //       [p] link 'P'     <- pivotal (depth 3)
        //         [q] img
        //       [s] link 'S'
        //     [u] heading
        //   [c] nav
        //     [d] link 'cousin'
        AXTree::parse(
            "RootWebArea 'R'
    [a] main ''
        [b] list ''
            [p] link 'P'
                [q] image 'Q'
            [s] link 'S'
        [u] heading 'U'
    [c] navigation ''
        [d] link 'cousin'
",
        )
        .unwrap()
    }

    #[test]
    fn neighborhood_depth3() {
        let t = fixture();
        let hood = t.neighborhood("p").unwrap();
        let names: BTreeSet<_> = hood
            .members
            .iter()
            .map(|p| t.node_at(p).unwrap().bid.clone().unwrap_or_default())
            .collect();
        let want: BTreeSet<String> = ["", "a", "b", "p", "q", "s", "u", "c"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(names, want);
        assert!(!hood.contains(t.path_of("d").unwrap()));
    }

    #[test]
    fn neighborhood_leaf_child_of_root() {
        let t = AXTree::parse("RootWebArea 'R'\n    [1] link 'a'\n    [2] link 'b'\n        StaticText 'x'\n").unwrap();
        let hood = t.neighborhood("1").unwrap();
        assert_eq!(hood.len(), 3);
        assert!(!hood.contains(&[1, 0]));
        assert_eq!(t.neighborhood("9").unwrap_err(), AxError::NoSuchBid("9".into()));
    }

    #[test]
    fn compare_examples() {
        let t = fixture();
        assert!(compare_observation(&t, &t, "p").unwrap());

        let missing = AXTree::parse(&t.serialize().replace("[p] ", "")).unwrap();
        assert!(!compare_observation(&t, &missing, "p").unwrap());

        let cousin = AXTree::parse(&t.serialize().replace("'cousin'", "'renamed'")).unwrap();
        assert!(compare_observation(&t, &cousin, "p").unwrap());

        let sibling = AXTree::parse(&t.serialize().replace("link 'S'", "link 'T'")).unwrap();
        assert!(!compare_observation(&t, &sibling, "p").unwrap());

        let desc = AXTree::parse(&t.serialize().replace("image 'Q'", "image 'Z'")).unwrap();
        assert!(!compare_observation(&t, &desc, "p").unwrap());

        assert!(matches!(
            compare_observation(&t, &t, "zz"),
            Err(AxError::NoSuchBid(_))
        ));
    }
}
