//! Inference-time validation of candidate trees.
//!
//! A candidate is accepted only if it parses and every node is drawn from the
//! manifest: leaf ids are known primitives, ports match the primitive's
//! parameter schema exactly, and control tags are whitelisted.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{parse_bt, BehaviorTree, BtNode, NodeKind, NodePath, PortValue};
use crate::manifest::{PrimitiveKind, PrimitiveManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationCode {
    SyntaxError,
    UnknownNode,
    UnknownParam,
    MissingParam,
    BadParamKind,
    ForbiddenControlNode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// `None` for document-level syntax errors.
    pub node_path: Option<NodePath>,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Accept,
    Reject,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        let verdict = if violations.is_empty() {
            Verdict::Accept
        } else {
            Verdict::Reject
        };
        ValidationReport { verdict, violations }
    }

    pub fn syntax_error(message: impl Into<String>) -> Self {
        Self::from_violations(vec![Violation {
            code: ViolationCode::SyntaxError,
            node_path: None,
            message: message.into(),
        }])
    }

    pub fn accepted(&self) -> bool {
        self.verdict == Verdict::Accept
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    /// Only syntax errors are present (or none): the XML itself was fine.
    pub fn xml_valid(&self) -> bool {
        !self.has(ViolationCode::SyntaxError)
    }

    /// Human-readable bullet list used as corrective context in prompts.
    pub fn describe(&self) -> String {
        self.violations
            .iter()
            .map(|v| match &v.node_path {
                Some(p) => format!("- {:?} at {}: {}", v.code, p, v.message),
                None => format!("- {:?}: {}", v.code, v.message),
            })
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Parses and checks `xml_text` against `m`. Never fails: every problem is
/// a violation in the report. On acceptance the tree is returned with leaf
/// kinds resolved from the manifest (bare condition tags become
/// [`NodeKind::Condition`]).
pub fn validate(xml_text: &str, m: &PrimitiveManifest) -> (ValidationReport, Option<BehaviorTree>) {
    let tree = match parse_bt(xml_text) {
        Ok(t) => t,
        Err(e) => return (ValidationReport::syntax_error(e.to_string()), None),
    };
    let (report, tree) = validate_tree(tree, m);
    (report, tree)
}

/// Vocabulary checks on an already-parsed tree.
pub fn validate_tree(mut tree: BehaviorTree, m: &PrimitiveManifest) -> (ValidationReport, Option<BehaviorTree>) {
    let mut violations = Vec::new();
    check_node(&tree.root, &NodePath::root(), m, &mut violations);
    let report = ValidationReport::from_violations(violations);
    if !report.accepted() {
        return (report, None);
    }
    resolve_leaf_kinds(&mut tree.root, m);
    (report, Some(tree))
}

fn check_node(node: &BtNode, path: &NodePath, m: &PrimitiveManifest, out: &mut Vec<Violation>) {
    match node.kind.leaf_id() {
        Some(id) => check_leaf(node, id, path, m, out),
        None => {
            let tag = node.kind.tag();
            if !m.allows_control(tag) {
                out.push(Violation {
                    code: ViolationCode::ForbiddenControlNode,
                    node_path: Some(path.clone()),
                    message: format!("control node `{tag}` is not allowed by the manifest"),
                });
            }
        }
    }
    for (i, child) in node.children.iter().enumerate() {
        check_node(child, &path.child(i), m, out);
    }
}

fn check_leaf(node: &BtNode, id: &str, path: &NodePath, m: &PrimitiveManifest, out: &mut Vec<Violation>) {
    let Some(spec) = m.get(id) else {
        out.push(Violation {
            code: ViolationCode::UnknownNode,
            node_path: Some(path.clone()),
            message: format!("`{id}` is not an available primitive"),
        });
        return;
    };
    let at = |code, message| Violation {
        code,
        node_path: Some(path.clone()),
        message,
    };
    for (name, value) in &node.ports {
        match spec.param(name) {
            None => out.push(at(
                ViolationCode::UnknownParam,
                format!("`{id}` has no parameter `{name}`"),
            )),
            Some(param) if !param.kind.accepts(value) => out.push(at(
                ViolationCode::BadParamKind,
                format!(
                    "`{id}.{name}` expects {}, got `{}`",
                    param.kind,
                    match value {
                        PortValue::Literal(s) => s.as_str(),
                        PortValue::BlackboardRef(k) => k.as_str(),
                    }
                ),
            )),
            Some(_) => {}
        }
    }
    for param in spec.params.iter().filter(|p| p.required) {
        if !node.ports.contains_key(&param.name) {
            out.push(at(
                ViolationCode::MissingParam,
                format!("`{id}` is missing required parameter `{}`", param.name),
            ));
        }
    }
}

fn resolve_leaf_kinds(node: &mut BtNode, m: &PrimitiveManifest) {
    if let Some(id) = node.kind.leaf_id() {
        if let Some(spec) = m.get(id) {
            node.kind = match spec.kind {
                PrimitiveKind::Action => NodeKind::Action(spec.id.clone()),
                PrimitiveKind::Condition => NodeKind::Condition(spec.id.clone()),
            };
        }
    }
    for child in &mut node.children {
        resolve_leaf_kinds(child, m);
    }
}

/// Leaf-id containment in the manifest: the action-coherency predicate.
/// Independent of [`validate`]; used by the benchmark on raw candidates.
pub fn action_coherent(tree: &BehaviorTree, m: &PrimitiveManifest) -> bool {
    tree.root.leaf_ids().iter().all(|id| m.contains(id))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no <root>...</root> document found in model output")]
pub struct ExtractError;

fn root_open_positions(text: &str) -> impl Iterator<Item = usize> + '_ {
    text.match_indices("<root")
        .filter_map(move |(i, _)| match text[i + 5..].chars().next() {
            Some(c) if c == '>' || c == '/' || c.is_whitespace() => Some(i),
            _ => None,
        })
}

/// Pulls the first well-formed `<root ...>...</root>` span out of free-form
/// model output (prose, code fences, trailing commentary).
pub fn extract_xml(raw_model_output: &str) -> Result<String, ExtractError> {
    const CLOSE: &str = "</root>";
    for start in root_open_positions(raw_model_output) {
        let tail = &raw_model_output[start..];
        // self-closing <root/>
        if let Some(gt) = tail.find('>') {
            if tail[..gt].ends_with('/') {
                let candidate = &tail[..=gt];
                if roxmltree::Document::parse(candidate).is_ok() {
                    return Ok(candidate.to_string());
                }
            }
        }
        for (end, _) in tail.match_indices(CLOSE) {
            let candidate = &tail[..end + CLOSE.len()];
            if roxmltree::Document::parse(candidate).is_ok() {
                return Ok(candidate.to_string());
            }
        }
    }
    Err(ExtractError)
}
