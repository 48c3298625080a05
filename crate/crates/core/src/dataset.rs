//! Instruction-dataset curation: cleanse seed trees, expand them with
//! leaf-preserving structural variants over several rounds, describe each
//! tree, and emit Alpaca-style records.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::bt::{
    parse_bt, serialize_bt, serialize_node, tree_stats, BehaviorTree, BtNode, DecoratorKind, NodeKind, PortValue,
};
use crate::generator::{task_input, Generator, PromptRecord, SYSTEM_INSTRUCTION};
use crate::manifest::{render_action_list, ParamSpec, PrimitiveKind, PrimitiveManifest, PrimitiveSpec, ValueKind};
use crate::validator::extract_xml;

pub const VARIANT_INSTRUCTION: &str = "You restructure robot behavior trees. Given a BehaviorTree.CPP XML tree, \
write a different but plausible tree for a related task. Keep every action and condition node exactly as it is, \
with the same IDs and ports, and change only the control-flow structure. Answer with the XML document only.";

pub const DESCRIPTION_INSTRUCTION: &str = "You describe robot behavior trees. Given a BehaviorTree.CPP XML tree, \
write a short natural-language task description, as a user would request it, of what the robot accomplishes. \
Answer with the description only.";

/// Alpaca-schema record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub instruction: String,
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurationConfig {
    pub variants_per_tree: usize,
    pub rounds: usize,
    /// Forwarded to the generator's sampling settings by the caller.
    pub top_p: f64,
    pub max_description_words: usize,
    pub dedup: bool,
    pub split_test_fraction: f64,
    pub seed: u64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        CurationConfig {
            variants_per_tree: 3,
            rounds: 2,
            top_p: 0.99,
            max_description_words: 200,
            dedup: true,
            split_test_fraction: 0.05,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DatasetError {
    #[error("invalid curation config: {0}")]
    Config(String),
    #[error("curation produced no records")]
    Empty,
}

impl CurationConfig {
    pub fn check(&self) -> Result<(), DatasetError> {
        let frac = |x: f64| x > 0.0 && x < 1.0;
        if self.variants_per_tree == 0 || self.rounds == 0 || self.max_description_words == 0 {
            return Err(DatasetError::Config("counts must be at least 1".into()));
        }
        if !frac(self.split_test_fraction) || !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(DatasetError::Config("fractions must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// A dropped input or candidate and why.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub source: String,
    pub reason: String,
}

/// Dedup key: hash of the serialized root, ignoring the tree id.
pub fn canonical_key(tree: &BehaviorTree) -> String {
    let digest = Sha256::digest(serialize_node(&tree.root).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cleansed {
    pub trees: Vec<(String, BehaviorTree)>,
    /// Inputs that failed to parse.
    pub rejected: Vec<Rejection>,
    /// Inputs structurally identical to an earlier one.
    pub duplicates: Vec<Rejection>,
}

/// Keeps the inputs that parse, dropping structural duplicates.
pub fn cleanse(named: &[(String, String)]) -> Cleansed {
    let mut out = Cleansed::default();
    let mut seen = HashSet::new();
    for (name, text) in named {
        match parse_bt(text) {
            Err(e) => out.rejected.push(Rejection {
                source: name.clone(),
                reason: e.to_string(),
            }),
            Ok(tree) => {
                if seen.insert(canonical_key(&tree)) {
                    out.trees.push((name.clone(), tree));
                } else {
                    out.duplicates.push(Rejection {
                        source: name.clone(),
                        reason: "duplicate of an earlier tree".into(),
                    });
                }
            }
        }
    }
    out
}

/// Reads every `*.xml` file in `dir` (sorted by name) and cleanses them.
pub fn cleanse_dir(dir: &Path) -> std::io::Result<Cleansed> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "xml"))
        .collect();
    files.sort();
    let mut named = Vec::with_capacity(files.len());
    for f in files {
        let name = f
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        // Undecodable bytes are a parse failure, not an I/O failure.
        let bytes = std::fs::read(&f)?;
        named.push((name, String::from_utf8_lossy(&bytes).into_owned()));
    }
    Ok(cleanse(&named))
}

fn sorted_leaves(tree: &BehaviorTree) -> Vec<String> {
    tree_stats(tree).leaf_ids
}

/// Request for variant `index` of `tree`.
pub fn variant_prompt(tree: &BehaviorTree, index: usize, total: usize) -> PromptRecord {
    PromptRecord {
        instruction: VARIANT_INSTRUCTION.to_string(),
        input: format!("Variant {} of {total}.\n{}", index + 1, serialize_bt(tree)),
        output: None,
    }
}

pub fn description_prompt(tree: &BehaviorTree) -> PromptRecord {
    PromptRecord {
        instruction: DESCRIPTION_INSTRUCTION.to_string(),
        input: serialize_bt(tree),
        output: None,
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct VariantOutcome {
    pub accepted: Vec<BehaviorTree>,
    pub dropped: Vec<Rejection>,
    pub requested: usize,
}

impl VariantOutcome {
    pub fn drop_rate(&self) -> f64 {
        if self.requested == 0 {
            0.0
        } else {
            self.dropped.len() as f64 / self.requested as f64
        }
    }
}

/// Requests `cfg.variants_per_tree` variants per tree. A candidate is kept
/// only if it parses, has exactly its source's leaf-id multiset and (with
/// dedup on) is structurally new. `seen` holds the canonical keys already in
/// the corpus and is extended with accepted variants.
pub fn generate_variants(
    trees: &[BehaviorTree],
    gen: &dyn Generator,
    cfg: &CurationConfig,
    seen: &mut HashSet<String>,
) -> VariantOutcome {
    let mut out = VariantOutcome::default();
    for (t, tree) in trees.iter().enumerate() {
        let leaves = sorted_leaves(tree);
        for i in 0..cfg.variants_per_tree {
            out.requested += 1;
            let source = format!("tree {t} variant {}", i + 1);
            let reject = |reason: String| Rejection {
                source: source.clone(),
                reason,
            };
            let text = match gen.complete(&variant_prompt(tree, i, cfg.variants_per_tree)) {
                Ok(t) => t,
                Err(e) => {
                    out.dropped.push(reject(e.to_string()));
                    continue;
                }
            };
            let parsed = extract_xml(&text)
                .map_err(|e| e.to_string())
                .and_then(|x| parse_bt(&x).map_err(|e| e.to_string()));
            let variant = match parsed {
                Ok(v) => v,
                Err(e) => {
                    out.dropped.push(reject(e));
                    continue;
                }
            };
            if sorted_leaves(&variant) != leaves {
                out.dropped.push(reject("execution nodes changed".into()));
                continue;
            }
            if cfg.dedup && !seen.insert(canonical_key(&variant)) {
                out.dropped.push(reject("duplicate tree".into()));
                continue;
            }
            out.accepted.push(variant);
        }
    }
    out
}

fn is_number(s: &str) -> bool {
    s.trim().parse::<f64>().is_ok_and(f64::is_finite)
}

/// The primitives a tree uses, inferred from its leaves. A parameter is
/// required when every occurrence sets it; it is a number when all its
/// literal values are numeric, blackboard-only when never literal.
pub fn derive_manifest(tree: &BehaviorTree) -> PrimitiveManifest {
    struct Acc {
        kind: PrimitiveKind,
        uses: usize,
        params: BTreeMap<String, (usize, bool, bool)>,
        order: Vec<String>,
    }
    let mut acc: BTreeMap<String, Acc> = BTreeMap::new();
    let mut order = Vec::new();
    for (_, node) in tree.root.walk() {
        let (id, kind) = match &node.kind {
            NodeKind::Action(id) => (id, PrimitiveKind::Action),
            NodeKind::Condition(id) => (id, PrimitiveKind::Condition),
            _ => continue,
        };
        let a = acc.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            Acc {
                kind,
                uses: 0,
                params: BTreeMap::new(),
                order: Vec::new(),
            }
        });
        a.uses += 1;
        for (name, value) in &node.ports {
            let p = a.params.entry(name.clone()).or_insert_with(|| {
                a.order.push(name.clone());
                (0, true, false)
            });
            p.0 += 1;
            if let PortValue::Literal(s) = value {
                p.1 &= is_number(s);
                p.2 = true;
            }
        }
    }
    let primitives = order
        .iter()
        .map(|id| {
            let a = &acc[id];
            let params = a
                .order
                .iter()
                .map(|name| {
                    let (count, numeric, literal) = a.params[name];
                    ParamSpec {
                        name: name.clone(),
                        kind: match (literal, numeric) {
                            (false, _) => ValueKind::Blackboard,
                            (true, true) => ValueKind::Number,
                            (true, false) => ValueKind::Text,
                        },
                        required: count == a.uses,
                    }
                })
                .collect();
            PrimitiveSpec {
                id: id.clone(),
                kind: a.kind,
                params,
                description: String::new(),
            }
        })
        .collect();
    PrimitiveManifest::new(primitives, None).expect("derived manifest is well formed")
}

fn clip_words(text: &str, max: usize) -> String {
    text.split_whitespace().take(max).collect::<Vec<_>>().join(" ")
}

/// Builds a record for `tree`, asking `gen` only for the description.
pub fn make_record(tree: &BehaviorTree, gen: &dyn Generator, cfg: &CurationConfig) -> Result<DatasetRecord, String> {
    let description = gen.complete(&description_prompt(tree)).map_err(|e| e.to_string())?;
    let description = clip_words(&description, cfg.max_description_words);
    if description.is_empty() {
        return Err("empty description".into());
    }
    let manifest = derive_manifest(tree);
    Ok(DatasetRecord {
        instruction: SYSTEM_INSTRUCTION.to_string(),
        input: task_input(&description, &manifest),
        output: serialize_bt(tree),
    })
}

/// The action list embedded in a record's input.
pub fn record_action_list(record: &DatasetRecord) -> Option<&str> {
    record.input.split_once("Available actions:\n").map(|(_, list)| list)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records: usize,
    pub mean_nodes: f64,
    pub mean_transitions: f64,
    pub max_nodes: usize,
    pub max_transitions: usize,
    /// Whitespace-token count over all record fields; a stand-in for a
    /// model tokenizer.
    pub token_proxy_total: usize,
}

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

pub fn corpus_stats(records: &[DatasetRecord]) -> CorpusStats {
    let stats: Vec<_> = records
        .iter()
        .filter_map(|r| parse_bt(&r.output).ok())
        .map(|t| tree_stats(&t))
        .collect();
    if stats.is_empty() {
        return CorpusStats::default();
    }
    let n = stats.len() as f64;
    CorpusStats {
        records: records.len(),
        mean_nodes: round2(stats.iter().map(|s| s.node_count as f64).sum::<f64>() / n),
        mean_transitions: round2(stats.iter().map(|s| s.transition_count as f64).sum::<f64>() / n),
        max_nodes: stats.iter().map(|s| s.node_count).max().unwrap_or(0),
        max_transitions: stats.iter().map(|s| s.transition_count).max().unwrap_or(0),
        token_proxy_total: records
            .iter()
            .map(|r| {
                [&r.instruction, &r.input, &r.output]
                    .iter()
                    .map(|f| f.split_whitespace().count())
                    .sum::<usize>()
            })
            .sum(),
    }
}

/// Seeded shuffle, then the first `round(n * fraction)` records become the
/// test split.
pub fn split(records: &[DatasetRecord], test_fraction: f64, seed: u64) -> (Vec<DatasetRecord>, Vec<DatasetRecord>) {
    let mut idx: Vec<usize> = (0..records.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = ((records.len() as f64) * test_fraction).round() as usize;
    let test = idx[..n_test].iter().map(|&i| records[i].clone()).collect();
    let mut train_idx = idx[n_test..].to_vec();
    train_idx.sort_unstable();
    let train = train_idx.into_iter().map(|i| records[i].clone()).collect();
    (train, test)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageCounts {
    pub seeds: usize,
    pub cleansed: usize,
    /// Accepted variants per expansion round.
    pub rounds: Vec<usize>,
    pub merged: usize,
    pub records: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Curated {
    pub records: Vec<DatasetRecord>,
    pub train: Vec<DatasetRecord>,
    pub test: Vec<DatasetRecord>,
    pub stats: CorpusStats,
    pub stages: StageCounts,
    pub cleanse_log: Vec<Rejection>,
    pub variant_log: Vec<Rejection>,
    pub record_log: Vec<Rejection>,
}

/// Full pipeline. The merged corpus is the union of all expansion rounds;
/// the cleansed seeds themselves are not emitted.
pub fn curate(seeds: &[(String, String)], gen: &dyn Generator, cfg: &CurationConfig) -> Result<Curated, DatasetError> {
    cfg.check()?;
    let cleansed = cleanse(seeds);
    let mut out = Curated {
        cleanse_log: cleansed.rejected.iter().chain(&cleansed.duplicates).cloned().collect(),
        ..Curated::default()
    };
    out.stages.seeds = seeds.len();
    out.stages.cleansed = cleansed.trees.len();
    let mut seen: HashSet<String> = cleansed.trees.iter().map(|(_, t)| canonical_key(t)).collect();
    let mut current: Vec<BehaviorTree> = cleansed.trees.into_iter().map(|(_, t)| t).collect();
    let mut merged = Vec::new();
    for _ in 0..cfg.rounds {
        let round = generate_variants(&current, gen, cfg, &mut seen);
        out.stages.rounds.push(round.accepted.len());
        out.variant_log.extend(round.dropped);
        merged.extend(round.accepted.iter().cloned());
        current = round.accepted;
    }
    out.stages.merged = merged.len();
    for (i, tree) in merged.iter().enumerate() {
        match make_record(tree, gen, cfg) {
            Ok(r) => out.records.push(r),
            Err(reason) => out.record_log.push(Rejection {
                source: format!("merged tree {i}"),
                reason,
            }),
        }
    }
    if out.records.is_empty() {
        return Err(DatasetError::Empty);
    }
    out.stages.records = out.records.len();
    out.stats = corpus_stats(&out.records);
    (out.train, out.test) = split(&out.records, cfg.split_test_fraction, cfg.seed);
    Ok(out)
}

/// Offline stand-in for the curation model. Variants are deterministic
/// leaf-preserving restructurings chosen by a hash of the request; a fixed
/// share of requests returns a renamed leaf or an unchanged copy so the
/// pipeline's filters have something to drop.
#[derive(Debug, Clone, Copy, Default)]
pub struct CurationMock;

fn request_hash(p: &PromptRecord) -> u64 {
    let d = Sha256::digest(p.input.as_bytes());
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

fn first_leaf_mut(node: &mut BtNode) -> Option<&mut BtNode> {
    if node.kind.is_leaf() {
        return Some(node);
    }
    node.children.iter_mut().find_map(first_leaf_mut)
}

fn restructure(mut root: BtNode, choice: u64) -> BtNode {
    match choice % 4 {
        0 => BtNode::sequence(vec![root]),
        1 => match root.kind {
            NodeKind::Sequence if !root.children.is_empty() => {
                root.kind = NodeKind::Fallback;
                root
            }
            NodeKind::Fallback => {
                root.kind = NodeKind::Sequence;
                root
            }
            _ => BtNode::decorator(DecoratorKind::ForceSuccess, root),
        },
        2 => {
            let retry = DecoratorKind::RetryUntilSuccessful { num_attempts: 2 };
            if let Some(leaf) = first_leaf_mut(&mut root) {
                let inner = std::mem::replace(leaf, BtNode::action("_"));
                *leaf = BtNode::decorator(retry, inner);
                root
            } else {
                BtNode::decorator(retry, root)
            }
        }
        _ => {
            if !root.kind.is_leaf() && root.children.len() > 1 && !matches!(root.kind, NodeKind::Decorator(_)) {
                root.children.reverse();
                root
            } else {
                BtNode::fallback(vec![root])
            }
        }
    }
}

impl Generator for CurationMock {
    fn complete(&self, prompt: &PromptRecord) -> Result<String, crate::generator::TransportError> {
        let h = request_hash(prompt);
        if prompt.instruction == DESCRIPTION_INSTRUCTION {
            let tree =
                parse_bt(&prompt.input).map_err(|e| crate::generator::TransportError::BadResponse(e.to_string()))?;
            let mut steps: Vec<String> = Vec::new();
            for id in tree.root.leaf_ids() {
                if steps.last() != Some(&id) {
                    steps.push(id);
                }
            }
            return Ok(format!(
                "Have the robot carry out these steps: {}.",
                steps.join(", then ")
            ));
        }
        let xml = prompt.input.split_once('\n').map(|(_, x)| x).unwrap_or(&prompt.input);
        let tree = parse_bt(xml).map_err(|e| crate::generator::TransportError::BadResponse(e.to_string()))?;
        let mut root = tree.root.clone();
        match h % 10 {
            // Renamed execution node: must be dropped.
            0 => {
                if let Some(leaf) = first_leaf_mut(&mut root) {
                    if let Some(id) = leaf.kind.leaf_id() {
                        leaf.kind = NodeKind::Action(format!("{id}Renamed"));
                    }
                }
            }
            // Unchanged copy: must be dropped as a duplicate.
            1 => {}
            _ => root = restructure(root, h >> 8),
        }
        Ok(format!(
            "```xml\n{}```",
            serialize_bt(&BehaviorTree::new(tree.tree_id, root))
        ))
    }
}

/// Per-record leaf-id check against the record's own action list.
pub fn leaf_ids_listed(record: &DatasetRecord) -> bool {
    let Some(list) = record_action_list(record) else {
        return false;
    };
    let Ok(m) = crate::manifest::parse_action_list(list) else {
        return false;
    };
    let Ok(tree) = parse_bt(&record.output) else {
        return false;
    };
    let listed: BTreeSet<&str> = m.ids().collect();
    tree.root.leaf_ids().iter().all(|id| listed.contains(id.as_str()))
}

/// Renders the action list for a tree (derived, never generated).
pub fn action_list_for(tree: &BehaviorTree) -> String {
    render_action_list(&derive_manifest(tree))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::ScriptedGenerator;

    fn tree(xml_body: &str) -> BehaviorTree {
        parse_bt(&format!(
            "<root><BehaviorTree ID=\"T\">{xml_body}</BehaviorTree></root>"
        ))
        .unwrap()
    }

    fn doc(body: &str) -> String {
        format!("<root><BehaviorTree ID=\"T\">{body}</BehaviorTree></root>")
    }

    const SRC: &str = r#"<Sequence><MoveTo goal="a"/><Pick object="b"/></Sequence>"#;

    fn run(reply: &str) -> VariantOutcome {
        let gen = ScriptedGenerator::new([reply.to_string()]);
        let cfg = CurationConfig {
            variants_per_tree: 1,
            ..CurationConfig::default()
        };
        let src = tree(SRC);
        let mut seen = HashSet::from([canonical_key(&src)]);
        generate_variants(&[src], &gen, &cfg, &mut seen)
    }

    #[test]
    fn restructured_variant_is_kept() {
        let out = run(&doc(r#"<Fallback><MoveTo goal="a"/><Pick object="b"/></Fallback>"#));
        assert_eq!(out.accepted.len(), 1);
        assert_eq!(out.drop_rate(), 0.0);
    }

    #[test]
    fn renamed_leaf_is_dropped() {
        let out = run(&doc(r#"<Sequence><GoTo goal="a"/><Pick object="b"/></Sequence>"#));
        assert!(out.accepted.is_empty());
        assert_eq!(out.dropped[0].reason, "execution nodes changed");
    }

    #[test]
    fn identical_variant_is_dropped() {
        let out = run(&doc(SRC));
        assert!(out.accepted.is_empty());
        assert_eq!(out.dropped[0].reason, "duplicate tree");
        assert_eq!(out.drop_rate(), 1.0);
    }

    #[test]
    fn cleanse_drops_unparsable_and_duplicates() {
        let named = vec![
            ("a.xml".to_string(), doc(SRC)),
            ("b.xml".to_string(), doc(SRC).replace("ID=\"T\"", "ID=\"Other\"")),
            ("c.xml".to_string(), "<root><BehaviorTree>".to_string()),
        ];
        let c = cleanse(&named);
        assert_eq!(c.trees.len(), 1);
        assert_eq!(c.duplicates[0].source, "b.xml");
        assert_eq!(c.rejected[0].source, "c.xml");
        assert_eq!(cleanse(&[]), Cleansed::default());
    }

    #[test]
    fn derived_manifest_kinds() {
        let t =
            tree(r#"<Sequence><Wait ticks="2"/><Wait/><Plan out="{p}"/><Say text="hi"/><Say text="3"/></Sequence>"#);
        let m = derive_manifest(&t);
        let wait = m.get("Wait").unwrap();
        assert_eq!(
            (wait.params[0].kind.clone(), wait.params[0].required),
            (ValueKind::Number, false)
        );
        assert_eq!(m.get("Plan").unwrap().params[0].kind, ValueKind::Blackboard);
        assert_eq!(m.get("Say").unwrap().params[0].kind, ValueKind::Text);
        assert_eq!(action_list_for(&t).lines().count(), 3);
    }

    #[test]
    fn corpus_stats_means() {
        let rec = |body: &str| DatasetRecord {
            instruction: "i".into(),
            input: "x y".into(),
            output: doc(body),
        };
        let s = corpus_stats(&[
            rec("<Sequence><A/><B/></Sequence>"),
            rec("<Sequence><A/><B/><C/><D/></Sequence>"),
        ]);
        assert_eq!((s.mean_nodes, s.mean_transitions), (4.0, 3.0));
        assert_eq!((s.max_nodes, s.max_transitions), (5, 4));
    }

    #[test]
    fn descriptions_are_clipped() {
        let gen = ScriptedGenerator::new(["one two three four five"]);
        let cfg = CurationConfig {
            max_description_words: 3,
            ..CurationConfig::default()
        };
        let r = make_record(&tree(SRC), &gen, &cfg).unwrap();
        assert!(r.input.starts_with("Task: one two three\n"), "{}", r.input);
        assert!(leaf_ids_listed(&r));
    }

    #[test]
    fn mock_is_deterministic_and_leaf_preserving_when_accepted() {
        let cfg = CurationConfig::default();
        let seeds: Vec<_> = (0..20)
            .map(|i| {
                (
                    format!("{i}.xml"),
                    doc(&format!(
                        r#"<Sequence><MoveTo goal="w{i}"/><Pick object="o"/></Sequence>"#
                    )),
                )
            })
            .collect();
        let a = curate(&seeds, &CurationMock, &cfg).unwrap();
        let b = curate(&seeds, &CurationMock, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert!(!a.variant_log.is_empty(), "mock should trigger some drops");
        assert_eq!(a.stages.merged, a.stages.rounds.iter().sum::<usize>());
        assert!(a.records.iter().all(leaf_ids_listed));
    }
}
