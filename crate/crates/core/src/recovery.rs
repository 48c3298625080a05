//! Generation retry loop and runtime recovery by subtree regeneration.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bench::TaskSpec;
use crate::bt::{serialize_node, splice_subtree, BehaviorTree, NodeKind, NodePath, PathError};
use crate::executor::{execute, Blackboard, EnvironmentAdapter, ExecError, ExecutionResult, FailureReport, TickStatus};
use crate::generator::{build_prompt, ConfigError, Generator, PromptMode, PromptRecord, TransportError};
use crate::manifest::render_action_list;
use crate::validator::{extract_xml, validate, validate_tree, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegenScope {
    FailedSubtree,
    WholeTree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoveryPolicy {
    pub max_inference_retries: u32,
    /// Zero disables runtime recovery.
    pub max_regen_rounds: u32,
    pub regen_scope: RegenScope,
    pub tick_budget: u64,
}

impl Default for RecoveryPolicy {
    fn default() -> Self {
        RecoveryPolicy {
            max_inference_retries: 5,
            max_regen_rounds: 3,
            regen_scope: RegenScope::FailedSubtree,
            tick_budget: crate::executor::DEFAULT_TICK_BUDGET,
        }
    }
}

impl RecoveryPolicy {
    /// One generation, no retries, no regeneration.
    pub fn plain() -> Self {
        RecoveryPolicy {
            max_inference_retries: 1,
            max_regen_rounds: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptStage {
    Initial,
    Regeneration { round: u32 },
}

/// One generator request and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub stage: AttemptStage,
    pub candidate_text: String,
    pub report: ValidationReport,
    pub latency_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutcome {
    pub final_tree: BehaviorTree,
    pub result: ExecutionResult,
    pub inference_retries_used: u32,
    pub regen_rounds_used: u32,
    pub history: Vec<Attempt>,
}

#[derive(Debug, Error)]
pub enum RecoveryError {
    #[error("no valid tree after {} attempt(s)", history.len())]
    GenerationExhausted { history: Vec<Attempt> },
    #[error("execution still failing after {} regeneration round(s)", .0.regen_rounds_used)]
    RegenExhausted(Box<PipelineOutcome>),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

impl RecoveryError {
    /// Generator requests made before the error, where known.
    pub fn history(&self) -> &[Attempt] {
        match self {
            RecoveryError::GenerationExhausted { history } => history,
            RecoveryError::RegenExhausted(o) => &o.history,
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub tree: BehaviorTree,
    pub attempts_used: u32,
    pub history: Vec<Attempt>,
}

fn with_corrections(base: &PromptRecord, report: &ValidationReport) -> PromptRecord {
    let mut p = base.clone();
    p.input.push_str("\n\nYour previous answer was rejected:\n");
    p.input.push_str(&report.describe());
    p.input.push_str("Answer again with a corrected document.");
    p
}

/// Requests candidates until one passes validation or `budget` requests
/// have been made. Rejections are fed back into the next request.
fn validated_loop(
    task: &TaskSpec,
    gen: &dyn Generator,
    base: &PromptRecord,
    budget: u32,
    stage: AttemptStage,
    history: &mut Vec<Attempt>,
) -> Result<Option<(BehaviorTree, u32)>, TransportError> {
    let mut prompt = base.clone();
    for used in 1..=budget {
        let g = gen.request_bt(&prompt)?;
        let (report, tree) = match extract_xml(&g.text) {
            Ok(xml) => validate(&xml, &task.manifest),
            Err(e) => (ValidationReport::syntax_error(e.to_string()), None),
        };
        history.push(Attempt {
            stage: stage.clone(),
            candidate_text: g.text,
            report: report.clone(),
            latency_secs: g.latency_secs,
        });
        if let Some(tree) = tree.filter(|_| report.accepted()) {
            return Ok(Some((tree, used)));
        }
        prompt = with_corrections(base, &report);
    }
    Ok(None)
}

pub fn generate_validated(
    task: &TaskSpec,
    gen: &dyn Generator,
    policy: &RecoveryPolicy,
    mode: &PromptMode,
) -> Result<Validated, RecoveryError> {
    let base = build_prompt(task, mode)?;
    let mut history = Vec::new();
    let budget = policy.max_inference_retries.max(1);
    match validated_loop(task, gen, &base, budget, AttemptStage::Initial, &mut history)? {
        Some((tree, attempts_used)) => Ok(Validated {
            tree,
            attempts_used,
            history,
        }),
        None => Err(RecoveryError::GenerationExhausted { history }),
    }
}

/// What the generator is told about a runtime failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegenContext {
    pub task_description: String,
    pub action_list: String,
    pub failing_path: NodePath,
    pub node_names: Vec<String>,
    pub failed_leaf: String,
    pub blackboard: Blackboard,
    pub env_message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Escalation {
    pub subtree_path: NodePath,
    pub context: RegenContext,
}

/// Picks the subtree to regenerate for a failure report. Under
/// `FailedSubtree` this is the child of the top-level control node (found
/// below any root decorators) that contains the failed node.
pub fn escalate(
    task: &TaskSpec,
    report: &FailureReport,
    tree: &BehaviorTree,
    scope: RegenScope,
) -> Result<Escalation, PathError> {
    let failing = &report.node_path;
    if tree.get(failing).is_none() {
        return Err(PathError { path: failing.clone() });
    }
    let subtree_path = match scope {
        RegenScope::WholeTree => NodePath::root(),
        RegenScope::FailedSubtree => {
            let mut top = NodePath::root();
            while top.len() < failing.len() && matches!(tree.get(&top).map(|n| &n.kind), Some(NodeKind::Decorator(_))) {
                top = top.child(0);
            }
            let composite = tree
                .get(&top)
                .is_some_and(|n| !n.kind.is_leaf() && !matches!(n.kind, NodeKind::Decorator(_)));
            if composite && failing.len() > top.len() {
                failing.prefix(top.len() + 1)
            } else {
                NodePath::root()
            }
        }
    };
    Ok(Escalation {
        subtree_path,
        context: RegenContext {
            task_description: task.description.clone(),
            action_list: render_action_list(&task.manifest),
            failing_path: failing.clone(),
            node_names: report.node_names.clone(),
            failed_leaf: report.failed_leaf.clone(),
            blackboard: report.blackboard_snapshot.clone(),
            env_message: report.env_message.clone(),
        },
    })
}

/// Request text for a replacement subtree.
pub fn regen_prompt(base: &PromptRecord, tree: &BehaviorTree, esc: &Escalation) -> PromptRecord {
    let ctx = &esc.context;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Task: {}\n\nAvailable actions:\n{}",
        ctx.task_description.trim(),
        ctx.action_list
    );
    let _ = writeln!(s, "This tree failed while running:\n{}", crate::bt::serialize_bt(tree));
    let _ = writeln!(s, "Failed node: {} ({})", ctx.failing_path, ctx.node_names.join(" > "));
    let _ = writeln!(s, "Failed action: {}", ctx.failed_leaf);
    let _ = writeln!(s, "Environment message: {}", ctx.env_message);
    s.push_str("Blackboard at the failure:\n");
    if ctx.blackboard.is_empty() {
        s.push_str("  (empty)\n");
    }
    for (k, v) in ctx.blackboard.entries() {
        let _ = writeln!(s, "  {k} = {v}");
    }
    let current = tree.get(&esc.subtree_path).map(serialize_node).unwrap_or_default();
    let _ = write!(
        s,
        "\nReplace the subtree at {} shown below so the task succeeds. \
Answer with a <root> document whose BehaviorTree holds only the replacement subtree.\n{}",
        esc.subtree_path, current
    );
    PromptRecord {
        instruction: base.instruction.clone(),
        input: s,
        output: None,
    }
}

/// Generate, execute, and on whole-tree failure regenerate the failing
/// subtree, re-running the spliced tree from the initial world state.
pub fn run_with_recovery(
    task: &TaskSpec,
    gen: &dyn Generator,
    env: &mut dyn EnvironmentAdapter,
    policy: &RecoveryPolicy,
    mode: &PromptMode,
) -> Result<PipelineOutcome, RecoveryError> {
    let Validated {
        mut tree,
        attempts_used,
        mut history,
    } = generate_validated(task, gen, policy, mode)?;
    let base = build_prompt(task, mode)?;
    env.reset();
    let mut result = execute(&tree, env, policy.tick_budget)?;
    let mut rounds = 0;
    while result.final_status == TickStatus::Failure && rounds < policy.max_regen_rounds {
        rounds += 1;
        let Some(report) = result.failure_reports.last() else {
            break;
        };
        let esc = escalate(task, report, &tree, policy.regen_scope)?;
        let prompt = regen_prompt(&base, &tree, &esc);
        let stage = AttemptStage::Regeneration { round: rounds };
        let budget = policy.max_inference_retries.max(1);
        let Some((replacement, _)) = validated_loop(task, gen, &prompt, budget, stage, &mut history)? else {
            continue;
        };
        let spliced = splice_subtree(&tree, &esc.subtree_path, replacement.root)?;
        let (report, checked) = validate_tree(spliced, &task.manifest);
        let Some(checked) = checked.filter(|_| report.accepted()) else {
            continue;
        };
        tree = checked;
        env.reset();
        result = execute(&tree, env, policy.tick_budget)?;
    }
    let outcome = PipelineOutcome {
        final_tree: tree,
        result,
        inference_retries_used: attempts_used,
        regen_rounds_used: rounds,
        history,
    };
    if outcome.result.final_status == TickStatus::Failure && policy.max_regen_rounds > 0 {
        return Err(RecoveryError::RegenExhausted(Box::new(outcome)));
    }
    Ok(outcome)
}
