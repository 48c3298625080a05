//! The closed vocabulary of robot primitives a tree may use.
//!
//! Manifests are YAML documents:
//!
//! ```yaml
//! primitives:
//!   - id: MoveTo
//!     kind: action
//!     description: Drive to a named waypoint
//!     params:
//!       - { name: goal, type: text, required: true }
//!       - { name: speed, type: enum, values: [slow, fast], required: false }
//! control_nodes: [Sequence, Fallback, RetryUntilSuccessful]
//! ```
//!
//! `type` is one of `text`, `number`, `enum` (with `values`) or `blackboard`
//! (the port must be a `{key}` reference). `required` defaults to `true`.
//! Omitting `control_nodes` allows every control tag the parser knows.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{PortValue, CONTROL_TAGS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimitiveKind {
    Action,
    Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Text,
    Number,
    Enum(Vec<String>),
    /// Only a blackboard reference is accepted (typically an output port).
    Blackboard,
}

impl ValueKind {
    /// Structural check of a port value against this kind.
    pub fn accepts(&self, value: &PortValue) -> bool {
        match (self, value) {
            (_, PortValue::BlackboardRef(_)) => true,
            (ValueKind::Text, PortValue::Literal(_)) => true,
            (ValueKind::Number, PortValue::Literal(s)) => s.trim().parse::<f64>().is_ok_and(f64::is_finite),
            (ValueKind::Enum(values), PortValue::Literal(s)) => values.iter().any(|v| v == s),
            (ValueKind::Blackboard, PortValue::Literal(_)) => false,
        }
    }

    fn type_name(&self) -> &'static str {
        match self {
            ValueKind::Text => "text",
            ValueKind::Number => "number",
            ValueKind::Enum(_) => "enum",
            ValueKind::Blackboard => "blackboard",
        }
    }
}

impl fmt::Display for ValueKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueKind::Enum(values) => write!(f, "enum[{}]", values.join("|")),
            other => f.write_str(other.type_name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ValueKind,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PrimitiveSpec {
    pub id: String,
    pub kind: PrimitiveKind,
    pub params: Vec<ParamSpec>,
    pub description: String,
}

impl PrimitiveSpec {
    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimitiveManifest {
    primitives: Vec<PrimitiveSpec>,
    allowed_control_nodes: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("invalid manifest YAML: {0}")]
    Yaml(String),
    #[error("manifest has no primitives")]
    Empty,
    #[error("primitive id must be non-empty")]
    EmptyId,
    #[error("duplicate primitive id `{0}`")]
    DuplicatePrimitive(String),
    #[error("duplicate param `{param}` in primitive `{primitive}`")]
    DuplicateParam { primitive: String, param: String },
    #[error("unknown value_kind `{kind}` for param `{param}` of `{primitive}`")]
    UnknownValueKind {
        primitive: String,
        param: String,
        kind: String,
    },
    #[error("enum param `{param}` of `{primitive}` has no values")]
    EmptyEnum { primitive: String, param: String },
    #[error("unknown control node tag `{0}`")]
    UnknownControlNode(String),
    #[error("unparseable action list line: `{0}`")]
    ActionList(String),
}

// On-disk representation.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    primitives: Vec<RawPrimitive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    control_nodes: Option<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrimitive {
    id: String,
    kind: PrimitiveKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<RawParam>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    description: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    name: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    values: Vec<String>,
    #[serde(default = "default_required")]
    required: bool,
}

fn default_required() -> bool {
    true
}

impl PrimitiveManifest {
    /// Builds a manifest, enforcing id/param uniqueness and a non-empty list.
    /// `control_nodes = None` allows every known control tag.
    pub fn new(primitives: Vec<PrimitiveSpec>, control_nodes: Option<Vec<String>>) -> Result<Self, ManifestError> {
        if primitives.is_empty() {
            return Err(ManifestError::Empty);
        }
        let mut ids = HashSet::new();
        for p in &primitives {
            if p.id.is_empty() {
                return Err(ManifestError::EmptyId);
            }
            if !ids.insert(p.id.as_str()) {
                return Err(ManifestError::DuplicatePrimitive(p.id.clone()));
            }
            let mut names = HashSet::new();
            for param in &p.params {
                if !names.insert(param.name.as_str()) {
                    return Err(ManifestError::DuplicateParam {
                        primitive: p.id.clone(),
                        param: param.name.clone(),
                    });
                }
                if matches!(&param.kind, ValueKind::Enum(v) if v.is_empty()) {
                    return Err(ManifestError::EmptyEnum {
                        primitive: p.id.clone(),
                        param: param.name.clone(),
                    });
                }
            }
        }
        let allowed_control_nodes = match control_nodes {
            None => CONTROL_TAGS.iter().map(|s| s.to_string()).collect(),
            Some(tags) => {
                for t in &tags {
                    if !CONTROL_TAGS.contains(&t.as_str()) {
                        return Err(ManifestError::UnknownControlNode(t.clone()));
                    }
                }
                tags.into_iter().collect()
            }
        };
        Ok(PrimitiveManifest {
            primitives,
            allowed_control_nodes,
        })
    }

    pub fn primitives(&self) -> &[PrimitiveSpec] {
        &self.primitives
    }

    pub fn get(&self, id: &str) -> Option<&PrimitiveSpec> {
        self.primitives.iter().find(|p| p.id == id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.get(id).is_some()
    }

    pub fn allowed_control_nodes(&self) -> &BTreeSet<String> {
        &self.allowed_control_nodes
    }

    pub fn allows_control(&self, tag: &str) -> bool {
        self.allowed_control_nodes.contains(tag)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.primitives.iter().map(|p| p.id.as_str())
    }

    /// Writes the manifest back to the YAML schema accepted by [`load_manifest`].
    pub fn to_yaml(&self) -> String {
        let all: BTreeSet<String> = CONTROL_TAGS.iter().map(|s| s.to_string()).collect();
        let control_nodes = if self.allowed_control_nodes == all {
            None
        } else {
            // keep the canonical tag order
            Some(
                CONTROL_TAGS
                    .iter()
                    .filter(|t| self.allowed_control_nodes.contains(**t))
                    .map(|t| t.to_string())
                    .collect(),
            )
        };
        let raw = RawManifest {
            primitives: self
                .primitives
                .iter()
                .map(|p| RawPrimitive {
                    id: p.id.clone(),
                    kind: p.kind,
                    params: p
                        .params
                        .iter()
                        .map(|param| RawParam {
                            name: param.name.clone(),
                            kind: param.kind.type_name().to_string(),
                            values: match &param.kind {
                                ValueKind::Enum(v) => v.clone(),
                                _ => Vec::new(),
                            },
                            required: param.required,
                        })
                        .collect(),
                    description: p.description.clone(),
                })
                .collect(),
            control_nodes,
        };
        serde_yaml::to_string(&raw).expect("manifest serialization is infallible")
    }
}

pub fn load_manifest(yaml_text: &str) -> Result<PrimitiveManifest, ManifestError> {
    let raw: RawManifest = serde_yaml::from_str(yaml_text).map_err(|e| ManifestError::Yaml(e.to_string()))?;
    let mut primitives = Vec::with_capacity(raw.primitives.len());
    for p in raw.primitives {
        let mut params = Vec::with_capacity(p.params.len());
        for param in p.params {
            let kind = match param.kind.as_str() {
                "text" => ValueKind::Text,
                "number" => ValueKind::Number,
                "enum" => ValueKind::Enum(param.values),
                "blackboard" | "blackboard-any" => ValueKind::Blackboard,
                other => {
                    return Err(ManifestError::UnknownValueKind {
                        primitive: p.id,
                        param: param.name,
                        kind: other.to_string(),
                    })
                }
            };
            params.push(ParamSpec {
                name: param.name,
                kind,
                required: param.required,
            });
        }
        primitives.push(PrimitiveSpec {
            id: p.id,
            kind: p.kind,
            params,
            description: p.description,
        });
    }
    PrimitiveManifest::new(primitives, raw.control_nodes)
}

const SEPARATOR: &str = " — ";

/// One line per primitive, in manifest order:
/// `MoveTo(goal: text, speed?: enum[slow|fast]) — Drive to a named waypoint`.
/// Optional params carry a `?`; the separator is omitted for empty descriptions.
pub fn render_action_list(m: &PrimitiveManifest) -> String {
    let mut out = String::new();
    for p in &m.primitives {
        out.push_str(&p.id);
        out.push('(');
        for (i, param) in p.params.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            out.push_str(&param.name);
            if !param.required {
                out.push('?');
            }
            out.push_str(": ");
            out.push_str(&param.kind.to_string());
        }
        out.push(')');
        let description = p.description.split_whitespace().collect::<Vec<_>>().join(" ");
        if !description.is_empty() {
            out.push_str(SEPARATOR);
            out.push_str(&description);
        }
        out.push('\n');
    }
    out
}

/// Inverse of [`render_action_list`]. Every primitive is read back as an
/// action and all control nodes are allowed, since the listing carries
/// neither.
pub fn parse_action_list(text: &str) -> Result<PrimitiveManifest, ManifestError> {
    let mut primitives = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let bad = || ManifestError::ActionList(line.to_string());
        let open = line.find('(').ok_or_else(bad)?;
        let close = line[open..].find(')').map(|i| i + open).ok_or_else(bad)?;
        let id = &line[..open];
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(bad());
        }
        let rest = &line[close + 1..];
        let description = if rest.is_empty() {
            String::new()
        } else {
            rest.strip_prefix(SEPARATOR).ok_or_else(bad)?.to_string()
        };
        let mut params = Vec::new();
        let inner = &line[open + 1..close];
        if !inner.trim().is_empty() {
            for chunk in inner.split(", ") {
                let (name, kind) = chunk.split_once(": ").ok_or_else(bad)?;
                let (name, required) = match name.strip_suffix('?') {
                    Some(n) => (n, false),
                    None => (name, true),
                };
                let kind = match kind {
                    "text" => ValueKind::Text,
                    "number" => ValueKind::Number,
                    "blackboard" => ValueKind::Blackboard,
                    k => {
                        let values = k
                            .strip_prefix("enum[")
                            .and_then(|v| v.strip_suffix(']'))
                            .ok_or_else(bad)?;
                        ValueKind::Enum(values.split('|').map(str::to_string).collect())
                    }
                };
                params.push(ParamSpec {
                    name: name.to_string(),
                    kind,
                    required,
                });
            }
        }
        primitives.push(PrimitiveSpec {
            id: id.to_string(),
            kind: PrimitiveKind::Action,
            params,
            description,
        });
    }
    PrimitiveManifest::new(primitives, None)
}
