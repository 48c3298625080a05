//! Reference evaluator for tick semantics, written independently of the
//! arena-based executor: state lives in a tree mirroring the BT and a node's
//! state is discarded by rebuilding it.

use std::collections::HashMap;

use btforge::bt::{BehaviorTree, BtNode, DecoratorKind, NodeKind, NodePath};
use btforge::executor::TickStatus;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use TickStatus::{Failure as F, Running as R, Success as S};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub status: TickStatus,
    pub ticks: u64,
    pub trace: Vec<(u64, Vec<usize>, TickStatus)>,
    pub failed_leaves: Vec<Vec<usize>>,
}

struct Mem {
    pos: usize,
    n: u32,
    finished: Vec<Option<TickStatus>>,
    kids: Vec<Mem>,
}

fn fresh(node: &BtNode) -> Mem {
    Mem {
        pos: 0,
        n: 0,
        finished: vec![None; node.children.len()],
        kids: node.children.iter().map(fresh).collect(),
    }
}

struct Ctx<'a> {
    scripts: &'a HashMap<String, Vec<TickStatus>>,
    calls: HashMap<String, usize>,
    tick: u64,
    trace: Vec<(u64, Vec<usize>, TickStatus)>,
    failed: Vec<Vec<usize>>,
}

impl Ctx<'_> {
    fn leaf(&mut self, id: &str) -> TickStatus {
        let script = &self.scripts[id];
        let n = self.calls.entry(id.to_string()).or_default();
        let s = script[(*n).min(script.len() - 1)];
        *n += 1;
        s
    }
}

fn eval(node: &BtNode, mem: &mut Mem, path: &mut Vec<usize>, cx: &mut Ctx) -> TickStatus {
    let out = step(node, mem, path, cx);
    cx.trace.push((cx.tick, path.clone(), out));
    if out != R {
        *mem = fresh(node);
    }
    out
}

fn child(node: &BtNode, mem: &mut Mem, i: usize, path: &mut Vec<usize>, cx: &mut Ctx) -> TickStatus {
    path.push(i);
    let s = eval(&node.children[i], &mut mem.kids[i], path, cx);
    path.pop();
    s
}

fn step(node: &BtNode, mem: &mut Mem, path: &mut Vec<usize>, cx: &mut Ctx) -> TickStatus {
    let n = node.children.len();
    match &node.kind {
        NodeKind::Action(id) | NodeKind::Condition(id) => {
            let s = cx.leaf(id);
            if s == F {
                cx.failed.push(path.clone());
            }
            s
        }
        NodeKind::Sequence | NodeKind::Fallback => {
            let pass = if node.kind == NodeKind::Sequence { S } else { F };
            for i in mem.pos..n {
                let s = child(node, mem, i, path, cx);
                if s != pass {
                    if s == R {
                        mem.pos = i;
                    }
                    return s;
                }
            }
            pass
        }
        NodeKind::ReactiveSequence | NodeKind::ReactiveFallback => {
            let pass = if node.kind == NodeKind::ReactiveSequence { S } else { F };
            for i in 0..n {
                let s = child(node, mem, i, path, cx);
                if s == pass {
                    continue;
                }
                if s == R {
                    for j in (0..n).filter(|&j| j != i) {
                        mem.kids[j] = fresh(&node.children[j]);
                    }
                }
                return s;
            }
            pass
        }
        NodeKind::Parallel {
            success_threshold,
            failure_threshold,
        } => {
            for i in 0..n {
                if mem.finished[i].is_none() {
                    let s = child(node, mem, i, path, cx);
                    if s != R {
                        mem.finished[i] = Some(s);
                    }
                }
            }
            let ok = mem.finished.iter().filter(|x| **x == Some(S)).count();
            let bad = mem.finished.iter().filter(|x| **x == Some(F)).count();
            if ok >= *success_threshold {
                S
            } else if bad >= *failure_threshold || n - bad < *success_threshold {
                F
            } else {
                R
            }
        }
        NodeKind::Decorator(d) => match d {
            DecoratorKind::Inverter => match child(node, mem, 0, path, cx) {
                S => F,
                F => S,
                R => R,
            },
            DecoratorKind::ForceSuccess => match child(node, mem, 0, path, cx) {
                R => R,
                _ => S,
            },
            DecoratorKind::ForceFailure => match child(node, mem, 0, path, cx) {
                R => R,
                _ => F,
            },
            DecoratorKind::RetryUntilSuccessful { num_attempts } => {
                let mut s = child(node, mem, 0, path, cx);
                while s == F && mem.n + 1 < *num_attempts {
                    mem.n += 1;
                    s = child(node, mem, 0, path, cx);
                }
                s
            }
            DecoratorKind::Repeat { num_cycles } => {
                let mut s = child(node, mem, 0, path, cx);
                while s == S && mem.n + 1 < *num_cycles {
                    mem.n += 1;
                    s = child(node, mem, 0, path, cx);
                }
                s
            }
            DecoratorKind::Timeout { max_ticks } => {
                if mem.n == *max_ticks {
                    mem.kids[0] = fresh(&node.children[0]);
                    F
                } else {
                    mem.n += 1;
                    child(node, mem, 0, path, cx)
                }
            }
        },
    }
}

/// Runs the tree to completion or `budget` ticks. Budget exhaustion counts
/// as Failure.
pub fn oracle_run(tree: &BehaviorTree, scripts: &HashMap<String, Vec<TickStatus>>, budget: u64) -> OracleRun {
    let mut mem = fresh(&tree.root);
    let mut cx = Ctx {
        scripts,
        calls: HashMap::new(),
        tick: 0,
        trace: Vec::new(),
        failed: Vec::new(),
    };
    let mut status = R;
    let mut ticks = 0;
    while ticks < budget && status == R {
        cx.tick = ticks;
        status = eval(&tree.root, &mut mem, &mut Vec::new(), &mut cx);
        ticks += 1;
    }
    OracleRun {
        status: if status == R { F } else { status },
        ticks,
        trace: cx.trace,
        failed_leaves: cx.failed,
    }
}

pub fn executor_run(tree: &BehaviorTree, scripts: &HashMap<String, Vec<TickStatus>>, budget: u64) -> OracleRun {
    use btforge::executor::{execute, FailureKind, ScriptedEnvironment};
    let mut env = ScriptedEnvironment::new();
    for (id, s) in scripts {
        env = env.script(id.clone(), s.clone());
    }
    let r = execute(tree, &mut env, budget).expect("scripted run");
    OracleRun {
        status: r.final_status,
        ticks: r.ticks_used,
        trace: r
            .trace
            .iter()
            .map(|e| (e.tick, e.path.indices().to_vec(), e.status))
            .collect(),
        failed_leaves: r
            .failure_reports
            .iter()
            .filter(|f| f.kind == FailureKind::Leaf)
            .map(|f| f.node_path.indices().to_vec())
            .collect(),
    }
}

pub const LEAF_SCRIPTS: [&[TickStatus]; 7] = [&[S], &[F], &[R], &[R, S], &[F, S], &[S, F], &[R, F]];

/// A tree shape with leaf placeholders; leaves are numbered in pre-order.
#[derive(Debug, Clone)]
pub enum Shape {
    Leaf(usize),
    Node(NodeKind, Vec<Shape>),
}

pub fn composite_kinds(arity: usize) -> Vec<NodeKind> {
    let mut v = vec![
        NodeKind::Sequence,
        NodeKind::ReactiveSequence,
        NodeKind::Fallback,
        NodeKind::ReactiveFallback,
    ];
    for st in 1..=arity {
        for ft in 1..=arity {
            v.push(NodeKind::Parallel {
                success_threshold: st,
                failure_threshold: ft,
            });
        }
    }
    v
}

pub fn decorator_kinds() -> Vec<NodeKind> {
    [
        DecoratorKind::Inverter,
        DecoratorKind::ForceSuccess,
        DecoratorKind::ForceFailure,
        DecoratorKind::RetryUntilSuccessful { num_attempts: 2 },
        DecoratorKind::Repeat { num_cycles: 2 },
        DecoratorKind::Timeout { max_ticks: 2 },
    ]
    .into_iter()
    .map(NodeKind::Decorator)
    .collect()
}

/// A case: a tree whose leaves are `L0..Ln` plus one script per leaf.
pub struct Case {
    pub tree: BehaviorTree,
    pub scripts: HashMap<String, Vec<TickStatus>>,
}

fn build(shape: &Shape) -> BtNode {
    match shape {
        Shape::Leaf(i) => BtNode::action(format!("L{i}")),
        Shape::Node(k, kids) => BtNode::new(k.clone(), kids.iter().map(build).collect()),
    }
}

fn leaf_count(shape: &Shape) -> usize {
    match shape {
        Shape::Leaf(_) => 1,
        Shape::Node(_, kids) => kids.iter().map(leaf_count).sum(),
    }
}

fn case_from(shape: &Shape, script_idx: &[usize]) -> Case {
    let scripts = script_idx
        .iter()
        .enumerate()
        .map(|(i, &s)| (format!("L{i}"), LEAF_SCRIPTS[s].to_vec()))
        .collect();
    Case {
        tree: BehaviorTree::new("T", build(shape)),
        scripts,
    }
}

/// Every shape of depth <= 2 with up to three children per node.
pub fn shapes_depth2() -> Vec<Shape> {
    let mut out = vec![Shape::Leaf(0)];
    for k in decorator_kinds() {
        out.push(Shape::Node(k, vec![Shape::Leaf(0)]));
    }
    for arity in 1..=3 {
        for k in composite_kinds(arity) {
            out.push(Shape::Node(k, (0..arity).map(Shape::Leaf).collect()));
        }
    }
    out
}

/// Every depth <= 2 tree crossed with every assignment of leaf scripts.
pub fn exhaustive_depth2() -> Vec<Case> {
    let mut cases = Vec::new();
    for shape in shapes_depth2() {
        let leaves = leaf_count(&shape);
        let total = LEAF_SCRIPTS.len().pow(leaves as u32);
        for mut code in 0..total {
            let mut idx = Vec::with_capacity(leaves);
            for _ in 0..leaves {
                idx.push(code % LEAF_SCRIPTS.len());
                code /= LEAF_SCRIPTS.len();
            }
            cases.push(case_from(&shape, &idx));
        }
    }
    cases
}

fn renumber(shape: &Shape, next: &mut usize) -> Shape {
    match shape {
        Shape::Leaf(_) => {
            *next += 1;
            Shape::Leaf(*next - 1)
        }
        Shape::Node(k, kids) => Shape::Node(k.clone(), kids.iter().map(|c| renumber(c, next)).collect()),
    }
}

/// Random depth-3 trees: a control root over 1-3 children, each a depth <= 2
/// shape, with random leaf scripts.
pub fn random_depth3(rng: &mut ChaCha8Rng, count: usize) -> Vec<Case> {
    let pool = shapes_depth2();
    let decorators = decorator_kinds();
    (0..count)
        .map(|_| {
            let arity = rng.random_range(1..=3);
            let root_kind = if arity == 1 && rng.random_bool(0.4) {
                decorators[rng.random_range(0..decorators.len())].clone()
            } else {
                let kinds = composite_kinds(arity);
                kinds[rng.random_range(0..kinds.len())].clone()
            };
            let kids: Vec<Shape> = (0..arity)
                .map(|_| pool[rng.random_range(0..pool.len())].clone())
                .collect();
            let shape = renumber(&Shape::Node(root_kind, kids), &mut 0);
            let idx: Vec<usize> = (0..leaf_count(&shape))
                .map(|_| rng.random_range(0..LEAF_SCRIPTS.len()))
                .collect();
            case_from(&shape, &idx)
        })
        .collect()
}

/// Every depth-3 shape built from Sequence and Fallback alone, with up to
/// three children per node.
pub fn memory_shapes_depth3() -> Vec<Shape> {
    let kinds = [NodeKind::Sequence, NodeKind::Fallback];
    let mut inner = vec![Shape::Leaf(0)];
    for k in &kinds {
        for arity in 1..=3 {
            inner.push(Shape::Node(k.clone(), (0..arity).map(Shape::Leaf).collect()));
        }
    }
    let mut out = Vec::new();
    for k in &kinds {
        for arity in 1..=3u32 {
            for mut code in 0..inner.len().pow(arity) {
                let kids = (0..arity)
                    .map(|_| {
                        let s = inner[code % inner.len()].clone();
                        code /= inner.len();
                        s
                    })
                    .collect();
                out.push(renumber(&Shape::Node(k.clone(), kids), &mut 0));
            }
        }
    }
    out
}

/// Calls `f` on every [`memory_shapes_depth3`] tree crossed with every
/// assignment of the single-status scripts S, F and R. Streams, since there
/// are about a million cases. Returns the case count.
pub fn for_each_single_status_depth3(mut f: impl FnMut(&BehaviorTree, &HashMap<String, Vec<TickStatus>>)) -> usize {
    let mut count = 0;
    for shape in memory_shapes_depth3() {
        let tree = BehaviorTree::new("T", build(&shape));
        let leaves = leaf_count(&shape);
        let names: Vec<String> = (0..leaves).map(|i| format!("L{i}")).collect();
        let mut scripts = HashMap::new();
        for mut code in 0..3usize.pow(leaves as u32) {
            for name in &names {
                scripts.insert(name.clone(), LEAF_SCRIPTS[code % 3].to_vec());
                code /= 3;
            }
            f(&tree, &scripts);
            count += 1;
        }
    }
    count
}

pub fn path_of(v: &[usize]) -> NodePath {
    NodePath::new(v.to_vec())
}
