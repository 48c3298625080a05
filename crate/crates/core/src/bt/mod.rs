//! Behavior-tree data model.
//!
//! A [`BehaviorTree`] is a plain owned value: a rooted tree of [`BtNode`]s
//! with no sharing between subtrees. Control nodes compose the statuses of
//! their children, leaves (actions and conditions) talk to the world through
//! named ports.
//!
//! The XML dialect is a subset of BehaviorTree.CPP v4, see [`parse_bt`] and
//! [`serialize_bt`].

mod xml;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use xml::{parse_bt, serialize_bt, serialize_node, ParseError};

/// Decorator flavours. Every decorator has exactly one child.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DecoratorKind {
    Inverter,
    RetryUntilSuccessful {
        num_attempts: u32,
    },
    Repeat {
        num_cycles: u32,
    },
    /// Tick-count timeout: the child may be ticked at most `max_ticks` times.
    Timeout {
        max_ticks: u32,
    },
    ForceSuccess,
    ForceFailure,
}

impl DecoratorKind {
    pub fn tag(&self) -> &'static str {
        match self {
            DecoratorKind::Inverter => "Inverter",
            DecoratorKind::RetryUntilSuccessful { .. } => "RetryUntilSuccessful",
            DecoratorKind::Repeat { .. } => "Repeat",
            DecoratorKind::Timeout { .. } => "Timeout",
            DecoratorKind::ForceSuccess => "ForceSuccess",
            DecoratorKind::ForceFailure => "ForceFailure",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    /// Ticks children in order, resuming at the running child (with memory).
    Sequence,
    /// Like [`NodeKind::Sequence`] but restarts from the first child every tick.
    ReactiveSequence,
    /// Ticks children in order until one does not fail (with memory).
    Fallback,
    ReactiveFallback,
    Parallel {
        success_threshold: usize,
        failure_threshold: usize,
    },
    Decorator(DecoratorKind),
    Action(String),
    Condition(String),
}

/// Every control-node tag understood by the parser, in a stable order.
pub const CONTROL_TAGS: &[&str] = &[
    "Sequence",
    "ReactiveSequence",
    "Fallback",
    "ReactiveFallback",
    "Parallel",
    "Inverter",
    "RetryUntilSuccessful",
    "Repeat",
    "Timeout",
    "ForceSuccess",
    "ForceFailure",
];

impl NodeKind {
    /// The XML tag for control nodes, or the primitive id for leaves.
    pub fn tag(&self) -> &str {
        match self {
            NodeKind::Sequence => "Sequence",
            NodeKind::ReactiveSequence => "ReactiveSequence",
            NodeKind::Fallback => "Fallback",
            NodeKind::ReactiveFallback => "ReactiveFallback",
            NodeKind::Parallel { .. } => "Parallel",
            NodeKind::Decorator(d) => d.tag(),
            NodeKind::Action(id) | NodeKind::Condition(id) => id,
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, NodeKind::Action(_) | NodeKind::Condition(_))
    }

    pub fn leaf_id(&self) -> Option<&str> {
        match self {
            NodeKind::Action(id) | NodeKind::Condition(id) => Some(id),
            _ => None,
        }
    }
}

/// A port binding: either a literal string or a `{key}` blackboard reference.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PortValue {
    Literal(String),
    BlackboardRef(String),
}

impl PortValue {
    /// Interprets an attribute value, recognising the `{key}` form.
    pub fn from_attr(raw: &str) -> PortValue {
        if let Some(inner) = raw.strip_prefix('{').and_then(|s| s.strip_suffix('}')) {
            if is_blackboard_key(inner) {
                return PortValue::BlackboardRef(inner.to_string());
            }
        }
        PortValue::Literal(raw.to_string())
    }

    pub fn to_attr(&self) -> String {
        match self {
            PortValue::Literal(s) => s.clone(),
            PortValue::BlackboardRef(k) => format!("{{{k}}}"),
        }
    }
}

impl fmt::Display for PortValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_attr())
    }
}

/// Blackboard keys are non-empty and contain neither braces nor whitespace.
pub fn is_blackboard_key(key: &str) -> bool {
    !key.is_empty() && !key.chars().any(|c| c == '{' || c == '}' || c.is_whitespace())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BtNode {
    pub kind: NodeKind,
    pub name: Option<String>,
    pub ports: BTreeMap<String, PortValue>,
    pub children: Vec<BtNode>,
}

impl BtNode {
    pub fn new(kind: NodeKind, children: Vec<BtNode>) -> Self {
        BtNode {
            kind,
            name: None,
            ports: BTreeMap::new(),
            children,
        }
    }

    pub fn action(id: impl Into<String>) -> Self {
        BtNode::new(NodeKind::Action(id.into()), Vec::new())
    }

    pub fn condition(id: impl Into<String>) -> Self {
        BtNode::new(NodeKind::Condition(id.into()), Vec::new())
    }

    pub fn sequence(children: Vec<BtNode>) -> Self {
        BtNode::new(NodeKind::Sequence, children)
    }

    pub fn fallback(children: Vec<BtNode>) -> Self {
        BtNode::new(NodeKind::Fallback, children)
    }

    pub fn decorator(kind: DecoratorKind, child: BtNode) -> Self {
        BtNode::new(NodeKind::Decorator(kind), vec![child])
    }

    pub fn with_port(mut self, name: impl Into<String>, value: PortValue) -> Self {
        self.ports.insert(name.into(), value);
        self
    }

    pub fn with_literal(self, name: impl Into<String>, value: impl Into<String>) -> Self {
        self.with_port(name, PortValue::Literal(value.into()))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Label used in stack traces: the display name if set, else the tag.
    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or_else(|| self.kind.tag())
    }

    /// Checks the structural invariants of this node (not its descendants).
    pub fn check_shape(&self) -> Result<(), String> {
        let n = self.children.len();
        match &self.kind {
            NodeKind::Action(id) | NodeKind::Condition(id) => {
                if id.is_empty() {
                    return Err("leaf id must be non-empty".into());
                }
                if n != 0 {
                    return Err(format!("leaf `{id}` must not have children"));
                }
            }
            NodeKind::Decorator(d) => {
                if n != 1 {
                    return Err("decorator must have exactly one child".into());
                }
                let count = match d {
                    DecoratorKind::RetryUntilSuccessful { num_attempts } => Some(*num_attempts),
                    DecoratorKind::Repeat { num_cycles } => Some(*num_cycles),
                    DecoratorKind::Timeout { max_ticks } => Some(*max_ticks),
                    _ => None,
                };
                if count == Some(0) {
                    return Err(format!("{} count must be at least 1", d.tag()));
                }
            }
            NodeKind::Parallel {
                success_threshold,
                failure_threshold,
            } => {
                if n == 0 {
                    return Err("control node must have at least one child".into());
                }
                if !(1..=n).contains(success_threshold) || !(1..=n).contains(failure_threshold) {
                    return Err(format!(
                        "Parallel thresholds out of range (success {success_threshold}, failure {failure_threshold}, children {n})"
                    ));
                }
            }
            _ => {
                if n == 0 {
                    return Err("control node must have at least one child".into());
                }
            }
        }
        Ok(())
    }

    /// Pre-order walk yielding every node with its path.
    pub fn walk(&self) -> Vec<(NodePath, &BtNode)> {
        let mut out = Vec::new();
        let mut stack = vec![(NodePath::root(), self)];
        while let Some((path, node)) = stack.pop() {
            for (i, child) in node.children.iter().enumerate().rev() {
                stack.push((path.child(i), child));
            }
            out.push((path, node));
        }
        out
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(BtNode::node_count).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(BtNode::depth).max().unwrap_or(0)
    }

    /// Leaf ids with multiplicity, in pre-order.
    pub fn leaf_ids(&self) -> Vec<String> {
        self.walk()
            .into_iter()
            .filter_map(|(_, n)| n.kind.leaf_id().map(str::to_string))
            .collect()
    }

    pub fn get(&self, path: &NodePath) -> Option<&BtNode> {
        let mut node = self;
        for &i in path.indices() {
            node = node.children.get(i)?;
        }
        Some(node)
    }

    fn get_mut(&mut self, path: &NodePath) -> Option<&mut BtNode> {
        let mut node = self;
        for &i in path.indices() {
            node = node.children.get_mut(i)?;
        }
        Some(node)
    }
}

/// Child-index path from the root. The empty path addresses the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodePath(Vec<usize>);

impl NodePath {
    pub fn root() -> Self {
        NodePath(Vec::new())
    }

    pub fn new(indices: Vec<usize>) -> Self {
        NodePath(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn child(&self, i: usize) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        NodePath(v)
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn prefix(&self, len: usize) -> Self {
        NodePath(self.0[..len.min(self.0.len())].to_vec())
    }

    pub fn starts_with(&self, other: &NodePath) -> bool {
        self.0.starts_with(&other.0)
    }
}

impl fmt::Display for NodePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "]")
    }
}

impl From<Vec<usize>> for NodePath {
    fn from(v: Vec<usize>) -> Self {
        NodePath(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BehaviorTree {
    pub tree_id: String,
    pub root: BtNode,
}

impl BehaviorTree {
    pub fn new(tree_id: impl Into<String>, root: BtNode) -> Self {
        BehaviorTree {
            tree_id: tree_id.into(),
            root,
        }
    }

    pub fn get(&self, path: &NodePath) -> Option<&BtNode> {
        self.root.get(path)
    }

    /// Labels of every node from the root down to `path`, inclusive.
    pub fn labels_along(&self, path: &NodePath) -> Option<Vec<String>> {
        let mut node = &self.root;
        let mut out = vec![node.label().to_string()];
        for &i in path.indices() {
            node = node.children.get(i)?;
            out.push(node.label().to_string());
        }
        Some(out)
    }

    /// Checks every node invariant in the tree.
    pub fn check(&self) -> Result<(), (NodePath, String)> {
        for (path, node) in self.root.walk() {
            node.check_shape().map_err(|e| (path.clone(), e))?;
            for key in node.ports.values().filter_map(|v| match v {
                PortValue::BlackboardRef(k) => Some(k),
                PortValue::Literal(_) => None,
            }) {
                if !is_blackboard_key(key) {
                    return Err((path.clone(), format!("invalid blackboard key `{key}`")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeStats {
    pub node_count: usize,
    pub transition_count: usize,
    pub depth: usize,
    pub leaf_ids: Vec<String>,
}

/// Node, edge and depth counts plus the leaf-id multiset (sorted).
pub fn tree_stats(tree: &BehaviorTree) -> TreeStats {
    let node_count = tree.root.node_count();
    let mut leaf_ids = tree.root.leaf_ids();
    leaf_ids.sort();
    TreeStats {
        node_count,
        transition_count: node_count - 1,
        depth: tree.root.depth(),
        leaf_ids,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("path {path} does not resolve in the tree")]
pub struct PathError {
    pub path: NodePath,
}

/// Returns a copy of `tree` with the node at `path` replaced.
pub fn splice_subtree(tree: &BehaviorTree, path: &NodePath, replacement: BtNode) -> Result<BehaviorTree, PathError> {
    let mut out = tree.clone();
    let slot = out.root.get_mut(path).ok_or_else(|| PathError { path: path.clone() })?;
    *slot = replacement;
    Ok(out)
}
