//! Deterministic tick engine.
//!
//! Each call to [`Executor::run`] ticks the root until it returns a terminal
//! status or the tick budget runs out. Node semantics:
//!
//! | node | per tick |
//! |------|----------|
//! | `Sequence` | resume at the running child; any failure fails and resets |
//! | `ReactiveSequence` | restart at child 0; a running child halts the others |
//! | `Fallback` | resume at the running child; any success succeeds and resets |
//! | `ReactiveFallback` | restart at child 0; a running child halts the others |
//! | `Parallel` | tick every unfinished child, then compare counts to thresholds |
//! | `RetryUntilSuccessful(n)` | re-tick a failed child within the same tick, up to `n` attempts |
//! | `Repeat(n)` | re-tick a succeeding child within the same tick until `n` successes |
//! | `Timeout(t)` | the child may be ticked `t` times; on the next tick it is halted and the node fails |
//!
//! A node that returns a terminal status has its whole subtree state reset.
//! Every leaf failure produces a [`FailureReport`] that is pushed to the
//! subscribed sinks before the tick returns.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{is_blackboard_key, BehaviorTree, BtNode, DecoratorKind, NodeKind, NodePath, PortValue};

pub const DEFAULT_TICK_BUDGET: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

impl TickStatus {
    pub fn is_terminal(self) -> bool {
        self != TickStatus::Running
    }
}

impl fmt::Display for TickStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BbValue {
    Bool(bool),
    Number(f64),
    Text(String),
}

impl fmt::Display for BbValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BbValue::Bool(b) => write!(f, "{b}"),
            BbValue::Number(n) => write!(f, "{n}"),
            BbValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Blackboard {
    entries: BTreeMap<String, BbValue>,
}

impl Blackboard {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &str) -> Option<&BbValue> {
        self.entries.get(key)
    }

    /// Returns `false` (and stores nothing) when `key` is not a valid key.
    pub fn set(&mut self, key: &str, value: BbValue) -> bool {
        if !is_blackboard_key(key) {
            return false;
        }
        self.entries.insert(key.to_string(), value);
        true
    }

    pub fn entries(&self) -> &BTreeMap<String, BbValue> {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves a port to text: literals as-is, references via lookup.
    pub fn resolve(&self, value: &PortValue) -> Option<String> {
        match value {
            PortValue::Literal(s) => Some(s.clone()),
            PortValue::BlackboardRef(k) => self.get(k).map(|v| v.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    /// A leaf returned Failure.
    Leaf,
    /// The tick budget ran out; points at the last leaf ticked.
    BudgetExceeded,
    /// The root failed without any leaf failure during the run (e.g. an
    /// Inverter over a success); points at the last leaf ticked.
    NonLeaf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureReport {
    pub kind: FailureKind,
    pub node_path: NodePath,
    /// Labels from the root down to the failing node (the stack trace).
    pub node_names: Vec<String>,
    pub failed_leaf: String,
    pub blackboard_snapshot: Blackboard,
    pub tick_index: u64,
    pub env_message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub tick: u64,
    pub path: NodePath,
    pub status: TickStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub final_status: TickStatus,
    pub ticks_used: u64,
    pub failure_reports: Vec<FailureReport>,
    pub trace: Vec<TraceEntry>,
    pub blackboard: Blackboard,
}

impl ExecutionResult {
    pub fn succeeded(&self) -> bool {
        self.final_status == TickStatus::Success
    }
}

/// What a leaf handler sees.
#[derive(Debug)]
pub struct LeafCall<'a> {
    pub id: &'a str,
    pub is_condition: bool,
    pub ports: &'a BTreeMap<String, PortValue>,
    pub path: &'a NodePath,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeafOutcome {
    pub status: TickStatus,
    pub message: String,
}

impl LeafOutcome {
    pub fn success() -> Self {
        LeafOutcome {
            status: TickStatus::Success,
            message: String::new(),
        }
    }

    pub fn running() -> Self {
        LeafOutcome {
            status: TickStatus::Running,
            message: String::new(),
        }
    }

    pub fn failure(message: impl Into<String>) -> Self {
        LeafOutcome {
            status: TickStatus::Failure,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("adapter error at leaf `{leaf}`: {message}")]
pub struct AdapterError {
    pub leaf: String,
    pub message: String,
}

/// Binds leaf ids to world behaviour.
pub trait EnvironmentAdapter {
    fn tick_leaf(&mut self, call: &LeafCall<'_>, bb: &mut Blackboard) -> Result<LeafOutcome, AdapterError>;

    /// Restores the initial world state.
    fn reset(&mut self);

    /// A running leaf was interrupted by its parent.
    fn halt_leaf(&mut self, _path: &NodePath) {}
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("tick budget must be at least 1")]
    ZeroBudget,
}

#[derive(Debug, Default)]
struct NodeState {
    cursor: usize,
    counter: u32,
    done: Vec<Option<TickStatus>>,
    running: bool,
}

struct RtNode<'t> {
    node: &'t BtNode,
    path: NodePath,
    children: Vec<usize>,
    state: NodeState,
}

type Sink<'s> = Box<dyn FnMut(&FailureReport) + 's>;

pub struct Executor<'t, 's> {
    tree: &'t BehaviorTree,
    nodes: Vec<RtNode<'t>>,
    sinks: Vec<Sink<'s>>,
    initial_blackboard: Blackboard,
}

struct Run<'r, 't, 's> {
    nodes: &'r mut [RtNode<'t>],
    sinks: &'r mut [Sink<'s>],
    tree: &'t BehaviorTree,
    env: &'r mut dyn EnvironmentAdapter,
    bb: Blackboard,
    reports: Vec<FailureReport>,
    trace: Vec<TraceEntry>,
    last_leaf: Option<usize>,
    tick: u64,
}

impl<'t, 's> Executor<'t, 's> {
    pub fn new(tree: &'t BehaviorTree) -> Self {
        let mut nodes = Vec::new();
        flatten(&tree.root, NodePath::root(), &mut nodes);
        Executor {
            tree,
            nodes,
            sinks: Vec::new(),
            initial_blackboard: Blackboard::new(),
        }
    }

    pub fn with_blackboard(mut self, bb: Blackboard) -> Self {
        self.initial_blackboard = bb;
        self
    }

    /// Registers a failure-report consumer. It is called synchronously,
    /// inside the tick in which the failure happens.
    pub fn subscribe(&mut self, sink: impl FnMut(&FailureReport) + 's) {
        self.sinks.push(Box::new(sink));
    }

    pub fn run(&mut self, env: &mut dyn EnvironmentAdapter, budget: u64) -> Result<ExecutionResult, ExecError> {
        if budget == 0 {
            return Err(ExecError::ZeroBudget);
        }
        for n in &mut self.nodes {
            n.state = NodeState::default();
        }
        let mut run = Run {
            nodes: &mut self.nodes,
            sinks: &mut self.sinks,
            tree: self.tree,
            env,
            bb: self.initial_blackboard.clone(),
            reports: Vec::new(),
            trace: Vec::new(),
            last_leaf: None,
            tick: 0,
        };
        let mut final_status = TickStatus::Running;
        let mut ticks_used = 0;
        while ticks_used < budget {
            run.tick = ticks_used;
            final_status = run.tick_node(0)?;
            ticks_used += 1;
            if final_status.is_terminal() {
                break;
            }
        }
        if final_status == TickStatus::Running {
            run.halt(0);
            let msg = format!("tick budget of {budget} exhausted");
            run.synthetic_report(FailureKind::BudgetExceeded, msg);
            final_status = TickStatus::Failure;
        } else if final_status == TickStatus::Failure && run.reports.is_empty() {
            run.synthetic_report(FailureKind::NonLeaf, "root failed without a leaf failure".into());
        }
        Ok(ExecutionResult {
            final_status,
            ticks_used,
            failure_reports: run.reports,
            trace: run.trace,
            blackboard: run.bb,
        })
    }
}

fn flatten<'t>(node: &'t BtNode, path: NodePath, out: &mut Vec<RtNode<'t>>) -> usize {
    let idx = out.len();
    out.push(RtNode {
        node,
        path: path.clone(),
        children: Vec::new(),
        state: NodeState::default(),
    });
    let children = node
        .children
        .iter()
        .enumerate()
        .map(|(i, c)| flatten(c, path.child(i), out))
        .collect();
    out[idx].children = children;
    idx
}

impl Run<'_, '_, '_> {
    fn tick_node(&mut self, idx: usize) -> Result<TickStatus, AdapterError> {
        let status = self.evaluate(idx)?;
        self.trace.push(TraceEntry {
            tick: self.tick,
            path: self.nodes[idx].path.clone(),
            status,
        });
        if status.is_terminal() {
            self.reset(idx);
        }
        Ok(status)
    }

    /// Clears the state of `idx` and its descendants, halting running leaves.
    fn reset(&mut self, idx: usize) {
        let mut stack = vec![idx];
        while let Some(i) = stack.pop() {
            let was_running = self.nodes[i].state.running;
            self.nodes[i].state = NodeState::default();
            if was_running {
                self.env.halt_leaf(&self.nodes[i].path);
            }
            stack.extend(self.nodes[i].children.iter().copied());
        }
    }

    fn halt(&mut self, idx: usize) {
        self.reset(idx);
    }

    fn evaluate(&mut self, idx: usize) -> Result<TickStatus, AdapterError> {
        let node = self.nodes[idx].node;
        let children = self.nodes[idx].children.clone();
        match &node.kind {
            NodeKind::Action(id) | NodeKind::Condition(id) => self.tick_leaf(idx, id),
            NodeKind::Sequence => {
                while self.nodes[idx].state.cursor < children.len() {
                    let c = children[self.nodes[idx].state.cursor];
                    match self.tick_node(c)? {
                        TickStatus::Success => self.nodes[idx].state.cursor += 1,
                        other => return Ok(other),
                    }
                }
                Ok(TickStatus::Success)
            }
            NodeKind::Fallback => {
                while self.nodes[idx].state.cursor < children.len() {
                    let c = children[self.nodes[idx].state.cursor];
                    match self.tick_node(c)? {
                        TickStatus::Failure => self.nodes[idx].state.cursor += 1,
                        other => return Ok(other),
                    }
                }
                Ok(TickStatus::Failure)
            }
            NodeKind::ReactiveSequence | NodeKind::ReactiveFallback => {
                let keep_going = if node.kind == NodeKind::ReactiveSequence {
                    TickStatus::Success
                } else {
                    TickStatus::Failure
                };
                for (i, &c) in children.iter().enumerate() {
                    let s = self.tick_node(c)?;
                    if s == keep_going {
                        continue;
                    }
                    if s == TickStatus::Running {
                        for (j, &other) in children.iter().enumerate() {
                            if j != i {
                                self.halt(other);
                            }
                        }
                    }
                    return Ok(s);
                }
                Ok(keep_going)
            }
            NodeKind::Parallel {
                success_threshold,
                failure_threshold,
            } => {
                if self.nodes[idx].state.done.len() != children.len() {
                    self.nodes[idx].state.done = vec![None; children.len()];
                }
                for (i, &c) in children.iter().enumerate() {
                    if self.nodes[idx].state.done[i].is_none() {
                        let s = self.tick_node(c)?;
                        if s.is_terminal() {
                            self.nodes[idx].state.done[i] = Some(s);
                        }
                    }
                }
                let done = &self.nodes[idx].state.done;
                let successes = done.iter().filter(|s| **s == Some(TickStatus::Success)).count();
                let failures = done.iter().filter(|s| **s == Some(TickStatus::Failure)).count();
                let pending = children.len() - successes - failures;
                if successes >= *success_threshold {
                    Ok(TickStatus::Success)
                } else if failures >= *failure_threshold || successes + pending < *success_threshold {
                    Ok(TickStatus::Failure)
                } else {
                    Ok(TickStatus::Running)
                }
            }
            NodeKind::Decorator(d) => {
                let child = children[0];
                match d {
                    DecoratorKind::Inverter => Ok(match self.tick_node(child)? {
                        TickStatus::Success => TickStatus::Failure,
                        TickStatus::Failure => TickStatus::Success,
                        TickStatus::Running => TickStatus::Running,
                    }),
                    DecoratorKind::ForceSuccess => Ok(match self.tick_node(child)? {
                        TickStatus::Running => TickStatus::Running,
                        _ => TickStatus::Success,
                    }),
                    DecoratorKind::ForceFailure => Ok(match self.tick_node(child)? {
                        TickStatus::Running => TickStatus::Running,
                        _ => TickStatus::Failure,
                    }),
                    DecoratorKind::RetryUntilSuccessful { num_attempts } => loop {
                        match self.tick_node(child)? {
                            TickStatus::Failure => {
                                self.nodes[idx].state.counter += 1;
                                if self.nodes[idx].state.counter >= *num_attempts {
                                    return Ok(TickStatus::Failure);
                                }
                            }
                            other => return Ok(other),
                        }
                    },
                    DecoratorKind::Repeat { num_cycles } => loop {
                        match self.tick_node(child)? {
                            TickStatus::Success => {
                                self.nodes[idx].state.counter += 1;
                                if self.nodes[idx].state.counter >= *num_cycles {
                                    return Ok(TickStatus::Success);
                                }
                            }
                            other => return Ok(other),
                        }
                    },
                    DecoratorKind::Timeout { max_ticks } => {
                        if self.nodes[idx].state.counter >= *max_ticks {
                            self.halt(child);
                            return Ok(TickStatus::Failure);
                        }
                        self.nodes[idx].state.counter += 1;
                        self.tick_node(child)
                    }
                }
            }
        }
    }

    fn tick_leaf(&mut self, idx: usize, id: &str) -> Result<TickStatus, AdapterError> {
        let rt = &self.nodes[idx];
        let is_condition = matches!(rt.node.kind, NodeKind::Condition(_));
        let call = LeafCall {
            id,
            is_condition,
            ports: &rt.node.ports,
            path: &rt.path,
            tick: self.tick,
        };
        let outcome = self.env.tick_leaf(&call, &mut self.bb)?;
        if is_condition && outcome.status == TickStatus::Running {
            return Err(AdapterError {
                leaf: id.to_string(),
                message: "condition returned Running".into(),
            });
        }
        self.last_leaf = Some(idx);
        self.nodes[idx].state.running = outcome.status == TickStatus::Running;
        if outcome.status == TickStatus::Failure {
            let report = self.report_at(idx, FailureKind::Leaf, outcome.message);
            self.emit(report);
        }
        Ok(outcome.status)
    }

    fn report_at(&self, idx: usize, kind: FailureKind, env_message: String) -> FailureReport {
        let rt = &self.nodes[idx];
        FailureReport {
            kind,
            node_path: rt.path.clone(),
            node_names: self.tree.labels_along(&rt.path).unwrap_or_default(),
            failed_leaf: rt.node.kind.leaf_id().unwrap_or_default().to_string(),
            blackboard_snapshot: self.bb.clone(),
            tick_index: self.tick,
            env_message,
        }
    }

    fn emit(&mut self, report: FailureReport) {
        for sink in self.sinks.iter_mut() {
            sink(&report);
        }
        self.reports.push(report);
    }

    fn synthetic_report(&mut self, kind: FailureKind, message: String) {
        // Every tick reaches at least one leaf unless a Timeout expired at
        // the top, so there is always a last leaf after the first tick.
        let idx = self.last_leaf.unwrap_or(0);
        let report = self.report_at(idx, kind, message);
        self.emit(report);
    }
}

/// Ticks `tree` against `env` until it terminates or `budget` ticks elapse.
pub fn execute(
    tree: &BehaviorTree,
    env: &mut dyn EnvironmentAdapter,
    budget: u64,
) -> Result<ExecutionResult, ExecError> {
    Executor::new(tree).run(env, budget)
}

/// Test double: each leaf id replays a fixed status script, repeating the
/// last entry once exhausted. Ids without a script are adapter errors.
#[derive(Debug, Clone, Default)]
pub struct ScriptedEnvironment {
    scripts: HashMap<String, Vec<TickStatus>>,
    calls: HashMap<String, usize>,
    writes: HashMap<String, (String, BbValue)>,
}

impl ScriptedEnvironment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn script(mut self, id: impl Into<String>, statuses: Vec<TickStatus>) -> Self {
        assert!(!statuses.is_empty(), "leaf script must not be empty");
        self.scripts.insert(id.into(), statuses);
        self
    }

    /// Makes leaf `id` write `key = value` to the blackboard whenever ticked.
    pub fn writes(mut self, id: impl Into<String>, key: impl Into<String>, value: BbValue) -> Self {
        self.writes.insert(id.into(), (key.into(), value));
        self
    }

    pub fn calls(&self, id: &str) -> usize {
        self.calls.get(id).copied().unwrap_or(0)
    }
}

impl EnvironmentAdapter for ScriptedEnvironment {
    fn tick_leaf(&mut self, call: &LeafCall<'_>, bb: &mut Blackboard) -> Result<LeafOutcome, AdapterError> {
        let script = self.scripts.get(call.id).ok_or_else(|| AdapterError {
            leaf: call.id.to_string(),
            message: "no binding for leaf".into(),
        })?;
        let n = self.calls.entry(call.id.to_string()).or_insert(0);
        let status = script[(*n).min(script.len() - 1)];
        *n += 1;
        if let Some((key, value)) = self.writes.get(call.id) {
            bb.set(key, value.clone());
        }
        Ok(LeafOutcome {
            status,
            message: format!("{} scripted {status}", call.id),
        })
    }

    fn reset(&mut self) {
        self.calls.clear();
    }
}
