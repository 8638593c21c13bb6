//! Ordered, labeled XML data trees.
//!
//! A [`DataTree`] is the universe every query runs against: a rooted tree of
//! labeled nodes with optional text values and stable [`NodeId`] identities.
//! Attributes are encoded as leaf children labeled `@name`, so matching and
//! formulas treat elements and attributes identically. Trees are immutable
//! after construction and safe to share across concurrent readers.

mod parse;

pub use parse::parse_document;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Errors raised by document parsing and tree interrogation.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum XmlError {
    #[error("parse error at {line}:{col}: {message}")]
    Parse { line: u32, col: u32, message: String },
    #[error("unsupported construct at {line}:{col}: {construct}")]
    Unsupported { construct: String, line: u32, col: u32 },
    #[error("unknown node id {0}")]
    UnknownNode(NodeId),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

/// Identity of a node, stable for the lifetime of the owning tree.
///
/// Ids are never reused after construction; subtrees extracted with
/// [`DataTree::subtree`] keep the ids of the original tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A single node: element name, optional text value, children in document order.
///
/// An attribute `x="1"` on an element is represented as a leaf child with
/// label `@x` and value `1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataNode {
    pub id: NodeId,
    pub label: String,
    pub value: Option<String>,
    pub children: Vec<NodeId>,
}

/// An immutable rooted tree of [`DataNode`]s.
#[derive(Debug, Clone)]
pub struct DataTree {
    root: NodeId,
    nodes: BTreeMap<NodeId, DataNode>,
    // Derived navigation state, computed once at construction.
    parent: BTreeMap<NodeId, NodeId>,
    pre: BTreeMap<NodeId, u32>,
    post: BTreeMap<NodeId, u32>,
}

impl DataTree {
    /// Builds a tree from a root id and a node map, checking tree invariants:
    /// the root exists, every referenced child exists, every non-root node has
    /// exactly one parent, and every node is reachable from the root.
    pub fn from_parts(root: NodeId, nodes: BTreeMap<NodeId, DataNode>) -> Result<Self, XmlError> {
        if !nodes.contains_key(&root) {
            return Err(XmlError::InvalidTree(format!("root {root} not in node map")));
        }
        let mut parent = BTreeMap::new();
        for (id, node) in &nodes {
            if node.label.is_empty() {
                return Err(XmlError::InvalidTree(format!("node {id} has an empty label")));
            }
            if node.id != *id {
                return Err(XmlError::InvalidTree(format!(
                    "node keyed {id} carries id {}",
                    node.id
                )));
            }
            for child in &node.children {
                if !nodes.contains_key(child) {
                    return Err(XmlError::InvalidTree(format!(
                        "node {id} references unknown child {child}"
                    )));
                }
                if parent.insert(*child, *id).is_some() {
                    return Err(XmlError::InvalidTree(format!(
                        "node {child} appears in more than one children list"
                    )));
                }
            }
        }
        if parent.contains_key(&root) {
            return Err(XmlError::InvalidTree("root has a parent".into()));
        }
        // Preorder/postorder numbering; doubles as the reachability check.
        let mut pre = BTreeMap::new();
        let mut post = BTreeMap::new();
        let mut pre_counter = 0u32;
        let mut post_counter = 0u32;
        // (node, next child index) stack; iterative to tolerate deep trees.
        let mut stack = vec![(root, 0usize)];
        pre.insert(root, pre_counter);
        while let Some((n, i)) = stack.pop() {
            let node = &nodes[&n];
            if i < node.children.len() {
                stack.push((n, i + 1));
                let c = node.children[i];
                pre_counter += 1;
                if pre.insert(c, pre_counter).is_some() {
                    return Err(XmlError::InvalidTree(format!("cycle through node {c}")));
                }
                stack.push((c, 0));
            } else {
                post.insert(n, post_counter);
                post_counter += 1;
            }
        }
        if pre.len() != nodes.len() {
            return Err(XmlError::InvalidTree(format!(
                "{} of {} nodes unreachable from root",
                nodes.len() - pre.len(),
                nodes.len()
            )));
        }
        Ok(DataTree { root, nodes, parent, pre, post })
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a DataTree always has at least its root
    }

    pub fn node(&self, id: NodeId) -> Result<&DataNode, XmlError> {
        self.nodes.get(&id).ok_or(XmlError::UnknownNode(id))
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains_key(&id)
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.nodes[&id].label
    }

    pub fn value(&self, id: NodeId) -> Option<&str> {
        self.nodes[&id].value.as_deref()
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[&id].children
    }

    pub fn parent_of(&self, id: NodeId) -> Option<NodeId> {
        self.parent.get(&id).copied()
    }

    /// Value of the attribute child `@name`, if present.
    pub fn attribute(&self, id: NodeId, name: &str) -> Option<&str> {
        let want = format!("@{name}");
        self.nodes[&id]
            .children
            .iter()
            .find(|c| self.nodes[c].label == want)
            .and_then(|c| self.nodes[c].value.as_deref())
    }

    /// Position of a node in document (preorder) order.
    pub fn doc_order(&self, id: NodeId) -> u32 {
        self.pre[&id]
    }

    /// True iff `a` is a proper ancestor of `d`.
    pub fn is_ancestor(&self, a: NodeId, d: NodeId) -> bool {
        a != d && self.pre[&a] <= self.pre[&d] && self.post[&d] <= self.post[&a]
    }

    /// All nodes in document order, starting with the root.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut order: Vec<NodeId> = self.nodes.keys().copied().collect();
        order.sort_by_key(|n| self.pre[n]);
        order
    }

    /// Proper descendants of `n` in document (preorder) order.
    pub fn descendants(&self, n: NodeId) -> Result<Vec<NodeId>, XmlError> {
        self.node(n)?;
        let mut out = Vec::new();
        let mut stack: Vec<NodeId> = self.children(n).iter().rev().copied().collect();
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(self.children(c).iter().rev());
        }
        Ok(out)
    }

    /// Extracts the subtree rooted at `n`, keeping the original node ids.
    pub fn subtree(&self, n: NodeId) -> Result<DataTree, XmlError> {
        self.node(n)?;
        let mut nodes = BTreeMap::new();
        nodes.insert(n, self.nodes[&n].clone());
        for d in self.descendants(n)? {
            nodes.insert(d, self.nodes[&d].clone());
        }
        DataTree::from_parts(n, nodes)
    }

    /// Absolute child-index path of a node, e.g. `/doc/book[2]/title[1]`.
    ///
    /// Indexes count same-label siblings only; attribute children render as
    /// `/doc/book[1]/@x` without an index.
    pub fn path_of(&self, id: NodeId) -> String {
        let mut segments = Vec::new();
        let mut cur = id;
        while let Some(p) = self.parent_of(cur) {
            let label = self.label(cur);
            if label.starts_with('@') {
                segments.push(label.to_string());
            } else {
                let position = self
                    .children(p)
                    .iter()
                    .filter(|c| self.label(**c) == label)
                    .position(|c| *c == cur)
                    .expect("node present in its parent's children")
                    + 1;
                segments.push(format!("{label}[{position}]"));
            }
            cur = p;
        }
        segments.push(self.label(self.root).to_string());
        segments.reverse();
        format!("/{}", segments.join("/"))
    }

    /// Serializes to compact XML bytes. Children are emitted in document
    /// order, `@`-labeled leaves become attributes of their parent, and a
    /// node's value becomes its leading text content.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = String::new();
        self.write_node(self.root, &mut out);
        out.into_bytes()
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        let node = &self.nodes[&id];
        out.push('<');
        out.push_str(&node.label);
        let mut element_children = Vec::new();
        for c in &node.children {
            let child = &self.nodes[c];
            if let Some(name) = child.label.strip_prefix('@') {
                out.push(' ');
                out.push_str(name);
                out.push_str("=\"");
                escape_into(child.value.as_deref().unwrap_or(""), true, out);
                out.push('"');
            } else {
                element_children.push(*c);
            }
        }
        if node.value.is_none() && element_children.is_empty() {
            out.push_str("/>");
            return;
        }
        out.push('>');
        if let Some(v) = &node.value {
            escape_into(v, false, out);
        }
        for c in element_children {
            self.write_node(c, out);
        }
        out.push_str("</");
        out.push_str(&node.label);
        out.push('>');
    }
}

fn escape_into(text: &str, in_attribute: bool, out: &mut String) {
    for ch in text.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' if in_attribute => out.push_str("&quot;"),
            _ => out.push(ch),
        }
    }
}

/// True iff `candidate`'s nodes are a subset of `tree`'s nodes and every
/// candidate edge connects the same node pair as some edge of `tree`.
///
/// The candidate is expected to carry node ids drawn from `tree`'s id space,
/// as produced by [`DataTree::subtree`].
pub fn is_subtree(candidate: &DataTree, tree: &DataTree) -> bool {
    for (id, node) in &candidate.nodes {
        let Some(counterpart) = tree.nodes.get(id) else {
            return false;
        };
        for child in &node.children {
            if !counterpart.children.contains(child) {
                return false;
            }
        }
    }
    true
}

/// Incremental constructor for [`DataTree`]s built in memory (tests,
/// witness emission). Ids are assigned in creation order.
#[derive(Debug)]
pub struct TreeBuilder {
    nodes: BTreeMap<NodeId, DataNode>,
    root: NodeId,
    next: u32,
}

impl TreeBuilder {
    pub fn new(root_label: impl Into<String>, root_value: Option<String>) -> Self {
        let root = NodeId(0);
        let mut nodes = BTreeMap::new();
        nodes.insert(
            root,
            DataNode { id: root, label: root_label.into(), value: root_value, children: Vec::new() },
        );
        TreeBuilder { nodes, root, next: 1 }
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn add_child(
        &mut self,
        parent: NodeId,
        label: impl Into<String>,
        value: Option<String>,
    ) -> NodeId {
        let id = NodeId(self.next);
        self.next += 1;
        self.nodes
            .insert(id, DataNode { id, label: label.into(), value, children: Vec::new() });
        self.nodes.get_mut(&parent).expect("parent exists").children.push(id);
        id
    }

    pub fn build(self) -> DataTree {
        DataTree::from_parts(self.root, self.nodes).expect("builder maintains tree invariants")
    }
}
