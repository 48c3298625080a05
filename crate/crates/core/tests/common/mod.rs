#![allow(dead_code)]

pub mod tick_oracle;

use std::path::PathBuf;

use serde::Deserialize;

/// The benchmark suite shipped at the repository root.
pub fn suite_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../suite")
}

pub fn fixture(name: &str) -> PathBuf {
    suite_dir().join("fixtures").join(name)
}

/// A line of `er_faults.jsonl`. `subtree` is present on runtime-fault
/// fixtures and names the child of the top-level composite to be replaced.
#[derive(Debug, Deserialize)]
pub struct FaultLine {
    pub task_id: String,
    pub outputs: Vec<String>,
    #[serde(default)]
    pub subtree: Option<Vec<usize>>,
}

pub fn fault_lines() -> Vec<FaultLine> {
    std::fs::read_to_string(fixture("er_faults.jsonl"))
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub mod mutate;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

/// Every `*.xml` under the corpus directory, sorted by name.
pub fn corpus_files() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "xml"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read_to_string(&p).unwrap(),
            )
        })
        .collect();
    out.sort();
    out
}

pub fn corpus_manifest() -> btforge::manifest::PrimitiveManifest {
    btforge::manifest::load_manifest(&std::fs::read_to_string(corpus_dir().join("manifest.yaml")).unwrap()).unwrap()
}

/// A seeded random tree whose leaves all conform to `m`. Leaves fill every
/// parameter, so the drop-a-required-port mutation always has a target when
/// any primitive has a required parameter.
pub fn valid_tree(m: &btforge::manifest::PrimitiveManifest, seed: u64) -> String {
    use btforge::bt::{serialize_bt, BehaviorTree, BtNode, NodeKind, PortValue};
    use btforge::manifest::{PrimitiveKind, ValueKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn node(m: &btforge::manifest::PrimitiveManifest, rng: &mut ChaCha8Rng, depth: usize) -> BtNode {
        if depth == 0 || rng.random_bool(0.35) {
            let prims = m.primitives();
            let p = &prims[rng.random_range(0..prims.len())];
            let mut n = match p.kind {
                PrimitiveKind::Action => BtNode::action(&p.id),
                PrimitiveKind::Condition => BtNode::condition(&p.id),
            };
            for param in &p.params {
                let v = match &param.kind {
                    ValueKind::Text => PortValue::Literal("kitchen".into()),
                    ValueKind::Number => PortValue::Literal("3".into()),
                    ValueKind::Enum(vals) => PortValue::Literal(vals[0].clone()),
                    ValueKind::Blackboard => PortValue::BlackboardRef("slot".into()),
                };
                n = n.with_port(&param.name, v);
            }
            return n;
        }
        let k = rng.random_range(1..4);
        let children = (0..k).map(|_| node(m, rng, depth - 1)).collect();
        let kind = if rng.random_bool(0.5) {
            NodeKind::Sequence
        } else {
            NodeKind::Fallback
        };
        BtNode::new(kind, children)
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = node(m, &mut rng, 4);
    serialize_bt(&BehaviorTree::new("Main", root))
}

/// Seed files for the cleanse stage: `good` distinct well-formed trees plus
/// `bad` malformed files of assorted kinds, interleaved.
pub fn planted_seed_set(good: usize, bad: usize) -> Vec<(String, String)> {
    use std::collections::HashSet;

    let m = corpus_manifest();
    let mut keys = HashSet::new();
    let mut trees = Vec::new();
    let mut seed = 0;
    while trees.len() < good {
        let xml = valid_tree(&m, seed);
        seed += 1;
        let t = btforge::bt::parse_bt(&xml).unwrap();
        if keys.insert(btforge::dataset::canonical_key(&t)) {
            trees.push(xml);
        }
    }
    let broken = |i: usize, src: &str| -> String {
        match i % 6 {
            0 => src[..src.len() / 3].to_string(),
            1 => src.replacen("</BehaviorTree>", "</Behavior>", 1),
            2 => String::new(),
            3 => "<root><BehaviorTree ID=\"X\"><Inverter><A/><B/></Inverter></BehaviorTree></root>".into(),
            4 => "<root><BehaviorTree ID=\"X\"><Parallel success_count=\"3\"><A/></Parallel></BehaviorTree></root>"
                .into(),
            _ => "<notroot><BehaviorTree ID=\"X\"><A/></BehaviorTree></notroot>".into(),
        }
    };
    let mut out = Vec::with_capacity(good + bad);
    let stride = (good / bad.max(1)).max(1);
    let mut b = 0;
    for (i, xml) in trees.into_iter().enumerate() {
        out.push((format!("seed_{i:04}.xml"), xml.clone()));
        if b < bad && i % stride == 0 {
            out.push((format!("seed_{i:04}_bad.xml"), broken(b, &xml)));
            b += 1;
        }
    }
    while b < bad {
        out.push((format!("extra_{b:02}_bad.xml"), broken(b, "<root>")));
        b += 1;
    }
    out
}
