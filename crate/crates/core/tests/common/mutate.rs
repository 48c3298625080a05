//! The four validator mutation classes.

use btforge::bt::{parse_bt, serialize_bt, BehaviorTree, BtNode, NodeKind, NodePath};
use btforge::manifest::PrimitiveManifest;
use btforge::validator::ViolationCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    RenameLeaf,
    DropRequiredPort,
    ForbiddenWrapper,
    Truncate,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [
        Mutation::RenameLeaf,
        Mutation::DropRequiredPort,
        Mutation::ForbiddenWrapper,
        Mutation::Truncate,
    ];

    /// The violation a mutant of this class must be rejected with.
    pub fn expected(self) -> ViolationCode {
        match self {
            Mutation::RenameLeaf => ViolationCode::UnknownNode,
            Mutation::DropRequiredPort => ViolationCode::MissingParam,
            Mutation::ForbiddenWrapper => ViolationCode::ForbiddenControlNode,
            Mutation::Truncate => ViolationCode::SyntaxError,
        }
    }
}

fn get_mut<'a>(node: &'a mut BtNode, path: &[usize]) -> &'a mut BtNode {
    match path.split_first() {
        None => node,
        Some((&i, rest)) => get_mut(&mut node.children[i], rest),
    }
}

fn leaves(tree: &BehaviorTree) -> Vec<NodePath> {
    tree.root
        .walk()
        .into_iter()
        .filter(|(_, n)| n.kind.is_leaf())
        .map(|(p, _)| p)
        .collect()
}

/// Applies `m` to an accepted document. `None` when the tree offers no
/// target (a tree with no required port cannot lose one).
pub fn mutate(xml: &str, manifest: &PrimitiveManifest, m: Mutation) -> Option<String> {
    let mut tree = parse_bt(xml).ok()?;
    match m {
        Mutation::RenameLeaf => {
            let path = leaves(&tree).into_iter().next()?;
            let node = get_mut(&mut tree.root, path.indices());
            let fresh = format!("{}Unlisted", node.kind.tag());
            node.kind = match &node.kind {
                NodeKind::Condition(_) => NodeKind::Condition(fresh),
                _ => NodeKind::Action(fresh),
            };
            Some(serialize_bt(&tree))
        }
        Mutation::DropRequiredPort => {
            for path in leaves(&tree) {
                let node = get_mut(&mut tree.root, path.indices());
                let spec = manifest.get(node.kind.leaf_id()?)?;
                if let Some(p) = spec
                    .params
                    .iter()
                    .find(|p| p.required && node.ports.contains_key(&p.name))
                {
                    node.ports.remove(&p.name);
                    return Some(serialize_bt(&tree));
                }
            }
            None
        }
        Mutation::ForbiddenWrapper => {
            let root = std::mem::replace(&mut tree.root, BtNode::action("placeholder"));
            tree.root = BtNode::new(NodeKind::ReactiveSequence, vec![root]);
            Some(serialize_bt(&tree))
        }
        Mutation::Truncate => {
            let mut cut = xml.len() / 2;
            while !xml.is_char_boundary(cut) {
                cut -= 1;
            }
            Some(xml[..cut].to_string())
        }
    }
}
