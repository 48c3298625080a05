//! BehaviorTree.CPP-style XML reading and writing.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use roxmltree::{Document, Node};
use thiserror::Error;

use super::{BehaviorTree, BtNode, DecoratorKind, NodeKind, PortValue, CONTROL_TAGS};

/// Syntactic failure with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{column}: {reason}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub reason: String,
}

const DEFAULT_TREE_ID: &str = "MainTree";

struct Ctx<'a, 'input> {
    doc: &'a Document<'input>,
    trees: HashMap<String, Node<'a, 'input>>,
    /// SubTree ids currently being expanded, for cycle detection.
    expanding: Vec<String>,
}

impl<'a, 'input> Ctx<'a, 'input> {
    fn err(&self, node: Node<'_, '_>, reason: impl Into<String>) -> ParseError {
        let pos = self.doc.text_pos_at(node.range().start);
        ParseError {
            line: pos.row,
            column: pos.col,
            reason: reason.into(),
        }
    }
}

fn element_children<'a, 'input>(node: Node<'a, 'input>) -> Vec<Node<'a, 'input>> {
    node.children().filter(|c| c.is_element()).collect()
}

/// Parses a `<root><BehaviorTree ...>...</BehaviorTree></root>` document.
///
/// Multi-tree documents are supported: `<SubTree ID="..."/>` references are
/// inlined, and the executed tree is `main_tree_to_execute` when given,
/// otherwise the first `<BehaviorTree>` in document order.
pub fn parse_bt(xml_text: &str) -> Result<BehaviorTree, ParseError> {
    let doc = Document::parse(xml_text).map_err(|e| {
        let pos = e.pos();
        ParseError {
            line: pos.row,
            column: pos.col,
            reason: format!("malformed XML: {e}"),
        }
    })?;
    let root = doc.root_element();
    let mut ctx = Ctx {
        doc: &doc,
        trees: HashMap::new(),
        expanding: Vec::new(),
    };
    if root.tag_name().name() != "root" {
        return Err(ctx.err(root, "missing <root> wrapper element"));
    }

    let mut order = Vec::new();
    let mut pending_ids: Vec<Node<'_, '_>> = Vec::new();
    for child in element_children(root) {
        match child.tag_name().name() {
            "BehaviorTree" => pending_ids.push(child),
            "TreeNodesModel" => {}
            other => return Err(ctx.err(child, format!("unknown element tag `{other}` under <root>"))),
        }
    }
    if pending_ids.is_empty() {
        return Err(ctx.err(root, "missing <BehaviorTree> element"));
    }
    let single = pending_ids.len() == 1;
    for bt in pending_ids {
        let id = match bt.attribute("ID") {
            Some(id) if !id.is_empty() => id.to_string(),
            _ if single => DEFAULT_TREE_ID.to_string(),
            _ => return Err(ctx.err(bt, "<BehaviorTree> requires an ID in multi-tree documents")),
        };
        if ctx.trees.insert(id.clone(), bt).is_some() {
            return Err(ctx.err(bt, format!("duplicate BehaviorTree ID `{id}`")));
        }
        order.push(id);
    }

    let main_id = match root.attribute("main_tree_to_execute") {
        Some(id) => {
            if !ctx.trees.contains_key(id) {
                return Err(ctx.err(root, format!("main_tree_to_execute `{id}` is not defined")));
            }
            id.to_string()
        }
        None => order[0].clone(),
    };
    let root_node = expand_tree(&mut ctx, &main_id)?;
    Ok(BehaviorTree {
        tree_id: main_id,
        root: root_node,
    })
}

fn expand_tree(ctx: &mut Ctx<'_, '_>, id: &str) -> Result<BtNode, ParseError> {
    let bt = ctx.trees[id];
    let kids = element_children(bt);
    if kids.len() != 1 {
        return Err(ctx.err(
            bt,
            format!(
                "<BehaviorTree ID=\"{id}\"> must contain exactly one root node, found {}",
                kids.len()
            ),
        ));
    }
    ctx.expanding.push(id.to_string());
    let node = convert(ctx, kids[0])?;
    ctx.expanding.pop();
    Ok(node)
}

fn parse_count(ctx: &Ctx<'_, '_>, node: Node<'_, '_>, attr: &str) -> Result<i64, ParseError> {
    let raw = node.attribute(attr).ok_or_else(|| {
        ctx.err(
            node,
            format!("<{}> requires attribute `{attr}`", node.tag_name().name()),
        )
    })?;
    raw.trim()
        .parse::<i64>()
        .map_err(|_| ctx.err(node, format!("attribute `{attr}` must be an integer, got `{raw}`")))
}

fn positive_count(ctx: &Ctx<'_, '_>, node: Node<'_, '_>, attr: &str) -> Result<u32, ParseError> {
    let v = parse_count(ctx, node, attr)?;
    if v < 1 || v > u32::MAX as i64 {
        return Err(ctx.err(node, format!("attribute `{attr}` must be at least 1, got {v}")));
    }
    Ok(v as u32)
}

fn parallel_threshold(
    ctx: &Ctx<'_, '_>,
    node: Node<'_, '_>,
    names: [&'static str; 2],
    default: usize,
    children: usize,
) -> Result<(usize, Option<&'static str>), ParseError> {
    for name in names {
        if node.attribute(name).is_some() {
            let v = parse_count(ctx, node, name)?;
            // -1 means "all children", as in BehaviorTree.CPP.
            let resolved = if v == -1 { children as i64 } else { v };
            if resolved < 1 || resolved > children as i64 {
                return Err(ctx.err(
                    node,
                    format!("Parallel threshold out of range: {name}={v} with {children} children"),
                ));
            }
            return Ok((resolved as usize, Some(name)));
        }
    }
    Ok((default, None))
}

fn convert(ctx: &mut Ctx<'_, '_>, el: Node<'_, '_>) -> Result<BtNode, ParseError> {
    let tag = el.tag_name().name();
    let kids = element_children(el);
    let mut consumed: Vec<&str> = vec!["name"];

    let kind = match tag {
        "Sequence" => NodeKind::Sequence,
        "ReactiveSequence" => NodeKind::ReactiveSequence,
        "Fallback" => NodeKind::Fallback,
        "ReactiveFallback" => NodeKind::ReactiveFallback,
        "Parallel" => {
            if kids.is_empty() {
                return Err(ctx.err(el, "control node must have at least one child"));
            }
            let n = kids.len();
            let (success, s_attr) = parallel_threshold(ctx, el, ["success_count", "success_threshold"], n, n)?;
            let (failure, f_attr) = parallel_threshold(ctx, el, ["failure_count", "failure_threshold"], 1, n)?;
            consumed.extend(s_attr);
            consumed.extend(f_attr);
            NodeKind::Parallel {
                success_threshold: success,
                failure_threshold: failure,
            }
        }
        "Inverter" | "ForceSuccess" | "ForceFailure" | "RetryUntilSuccessful" | "Repeat" | "Timeout" => {
            if kids.len() != 1 {
                return Err(ctx.err(el, "decorator must have exactly one child"));
            }
            let d = match tag {
                "Inverter" => DecoratorKind::Inverter,
                "ForceSuccess" => DecoratorKind::ForceSuccess,
                "ForceFailure" => DecoratorKind::ForceFailure,
                "RetryUntilSuccessful" => {
                    consumed.push("num_attempts");
                    DecoratorKind::RetryUntilSuccessful {
                        num_attempts: positive_count(ctx, el, "num_attempts")?,
                    }
                }
                "Repeat" => {
                    consumed.push("num_cycles");
                    DecoratorKind::Repeat {
                        num_cycles: positive_count(ctx, el, "num_cycles")?,
                    }
                }
                _ => {
                    consumed.push("max_ticks");
                    DecoratorKind::Timeout {
                        max_ticks: positive_count(ctx, el, "max_ticks")?,
                    }
                }
            };
            NodeKind::Decorator(d)
        }
        "SubTree" => {
            if !kids.is_empty() {
                return Err(ctx.err(el, "<SubTree> must not have children"));
            }
            let id = el
                .attribute("ID")
                .ok_or_else(|| ctx.err(el, "<SubTree> requires attribute `ID`"))?;
            if !ctx.trees.contains_key(id) {
                return Err(ctx.err(el, format!("SubTree references undefined tree `{id}`")));
            }
            if ctx.expanding.iter().any(|t| t == id) {
                return Err(ctx.err(el, format!("SubTree cycle through `{id}`")));
            }
            return expand_tree(ctx, id);
        }
        "Action" | "Condition" => {
            let id = el
                .attribute("ID")
                .filter(|s| !s.is_empty())
                .ok_or_else(|| ctx.err(el, format!("<{tag}> requires a non-empty `ID`")))?;
            consumed.push("ID");
            if tag == "Action" {
                NodeKind::Action(id.to_string())
            } else {
                NodeKind::Condition(id.to_string())
            }
        }
        "root" | "BehaviorTree" | "TreeNodesModel" => {
            return Err(ctx.err(el, format!("unexpected <{tag}> inside a tree")));
        }
        other => {
            if !kids.is_empty() {
                return Err(ctx.err(el, format!("unknown element tag `{other}`")));
            }
            NodeKind::Action(other.to_string())
        }
    };

    let mut children = Vec::with_capacity(kids.len());
    if kind.is_leaf() {
        if !kids.is_empty() {
            return Err(ctx.err(el, format!("leaf `{}` must not have children", kind.tag())));
        }
    } else {
        for k in kids {
            children.push(convert(ctx, k)?);
        }
    }

    let mut ports = BTreeMap::new();
    for attr in el.attributes() {
        if attr.namespace().is_some() || consumed.contains(&attr.name()) {
            continue;
        }
        ports.insert(attr.name().to_string(), PortValue::from_attr(attr.value()));
    }
    let node = BtNode {
        kind,
        name: el.attribute("name").map(str::to_string),
        ports,
        children,
    };
    node.check_shape().map_err(|reason| ctx.err(el, reason))?;
    Ok(node)
}

fn is_xml_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn escape_attr(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\n' => out.push_str("&#10;"),
            '\r' => out.push_str("&#13;"),
            '\t' => out.push_str("&#9;"),
            c => out.push(c),
        }
    }
}

fn push_attr(out: &mut String, name: &str, value: &str) {
    out.push(' ');
    out.push_str(name);
    out.push_str("=\"");
    escape_attr(value, out);
    out.push('"');
}

const RESERVED_TAGS: &[&str] = &[
    "Action",
    "Condition",
    "SubTree",
    "root",
    "BehaviorTree",
    "TreeNodesModel",
];

fn write_node(node: &BtNode, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    out.push_str(&pad);
    out.push('<');
    let tag: String;
    match &node.kind {
        NodeKind::Condition(id) => {
            tag = "Condition".into();
            out.push_str(&tag);
            push_attr(out, "ID", id);
        }
        NodeKind::Action(id)
            if !is_xml_name(id) || CONTROL_TAGS.contains(&id.as_str()) || RESERVED_TAGS.contains(&id.as_str()) =>
        {
            tag = "Action".into();
            out.push_str(&tag);
            push_attr(out, "ID", id);
        }
        kind => {
            tag = kind.tag().to_string();
            out.push_str(&tag);
        }
    }
    if let Some(name) = &node.name {
        push_attr(out, "name", name);
    }
    match &node.kind {
        NodeKind::Parallel {
            success_threshold,
            failure_threshold,
        } => {
            push_attr(out, "success_count", &success_threshold.to_string());
            push_attr(out, "failure_count", &failure_threshold.to_string());
        }
        NodeKind::Decorator(DecoratorKind::RetryUntilSuccessful { num_attempts }) => {
            push_attr(out, "num_attempts", &num_attempts.to_string())
        }
        NodeKind::Decorator(DecoratorKind::Repeat { num_cycles }) => {
            push_attr(out, "num_cycles", &num_cycles.to_string())
        }
        NodeKind::Decorator(DecoratorKind::Timeout { max_ticks }) => {
            push_attr(out, "max_ticks", &max_ticks.to_string())
        }
        _ => {}
    }
    for (name, value) in &node.ports {
        push_attr(out, name, &value.to_attr());
    }
    if node.children.is_empty() {
        out.push_str("/>\n");
        return;
    }
    out.push_str(">\n");
    for child in &node.children {
        write_node(child, indent + 1, out);
    }
    let _ = writeln!(out, "{pad}</{tag}>");
}

/// Serializes a single node (and its subtree) as an indented XML fragment.
pub fn serialize_node(node: &BtNode) -> String {
    let mut out = String::new();
    write_node(node, 0, &mut out);
    out
}

/// Emits a complete, indented document. Attribute order is `ID` (explicit
/// leaves only), `name`, node parameters, then ports alphabetically.
pub fn serialize_bt(tree: &BehaviorTree) -> String {
    let mut out = String::from("<root BTCPP_format=\"4\">\n  <BehaviorTree");
    push_attr(&mut out, "ID", &tree.tree_id);
    out.push_str(">\n");
    write_node(&tree.root, 2, &mut out);
    out.push_str("  </BehaviorTree>\n</root>\n");
    out
}
