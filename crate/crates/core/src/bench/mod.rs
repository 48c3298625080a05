//! Benchmark suite, per-task harness and report.

mod metrics;
mod report;
mod suite;

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bt::parse_bt;
use crate::envsim::bind_adapter;
use crate::executor::{FailureReport, TickStatus};
use crate::generator::{mode_for, Generator, GeneratorConfig, ScriptedGenerator};
use crate::recovery::{run_with_recovery, Attempt, AttemptStage, RecoveryError, RecoveryPolicy};
use crate::validator::{action_coherent, extract_xml};

pub use metrics::{format_fraction, format_percent, pass_at_k, DomainError};
pub use report::{emit_report, write_report, Aggregate, BenchReport, Ratio};
pub use suite::{load_suite, load_task, Category, Difficulty, SuiteError, TaskFilter, TaskSpec};

/// Supplies a generator for each (task, sample) pair.
pub trait GeneratorSource: Sync {
    fn for_sample<'a>(&'a self, task: &TaskSpec, sample: usize) -> Box<dyn Generator + 'a>;
}

/// One generator shared by every task and sample.
pub struct SharedGenerator<G>(pub G);

impl<G: Generator> GeneratorSource for SharedGenerator<G> {
    fn for_sample<'a>(&'a self, _task: &TaskSpec, _sample: usize) -> Box<dyn Generator + 'a> {
        Box::new(&self.0)
    }
}

/// Per-task generator scripts, read from JSON lines of the form
/// `{"task_id": "...", "outputs": ["...", ...]}`. Every sample of a task
/// replays its script from the start.
#[derive(Debug, Clone, Default)]
pub struct ScriptBook {
    scripts: HashMap<String, Vec<String>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScriptLine {
    pub task_id: String,
    pub outputs: Vec<String>,
}

impl ScriptBook {
    pub fn new(lines: impl IntoIterator<Item = ScriptLine>) -> Self {
        ScriptBook {
            scripts: lines.into_iter().map(|l| (l.task_id, l.outputs)).collect(),
        }
    }

    pub fn from_jsonl(reader: impl BufRead) -> Result<Self, String> {
        let mut lines = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            lines.push(serde_json::from_str(&line).map_err(|e| format!("line {}: {e}", i + 1))?);
        }
        Ok(Self::new(lines))
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let f = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_jsonl(std::io::BufReader::new(f))
    }

    pub fn get(&self, task_id: &str) -> Option<&[String]> {
        self.scripts.get(task_id).map(Vec::as_slice)
    }

    pub fn task_ids(&self) -> impl Iterator<Item = &str> {
        self.scripts.keys().map(String::as_str)
    }
}

impl GeneratorSource for ScriptBook {
    fn for_sample<'a>(&'a self, task: &TaskSpec, _sample: usize) -> Box<dyn Generator + 'a> {
        Box::new(ScriptedGenerator::new(self.get(&task.id).unwrap_or_default().to_vec()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionSummary {
    pub final_status: TickStatus,
    pub ticks_used: u64,
    pub failure_reports: Vec<FailureReport>,
}

/// One independent pipeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub candidates: Vec<Attempt>,
    pub execution: Option<ExecutionSummary>,
    pub goal_met: bool,
    /// Executed to Success and reached the goal.
    pub correct: bool,
    pub inference_retries_used: u32,
    pub regen_rounds_used: u32,
    /// Raw text of the candidate the pipeline handed to execution (or its
    /// first candidate when none was accepted).
    pub scored_candidate: Option<String>,
    pub action_coherent: bool,
    pub xml_valid: bool,
    pub generation_secs: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub category: Category,
    pub difficulty: Difficulty,
    pub success: bool,
    pub correct_samples: u64,
    pub pass_at_k: BTreeMap<u64, f64>,
    pub inference_time_secs: f64,
    pub action_coherent: bool,
    pub xml_valid: bool,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchOptions {
    pub policy: RecoveryPolicy,
    pub samples: u64,
    pub k: u64,
    pub one_shot: bool,
    pub workers: usize,
}

impl Default for BenchOptions {
    fn default() -> Self {
        BenchOptions {
            policy: RecoveryPolicy::default(),
            samples: 3,
            k: 3,
            one_shot: false,
            workers: 4,
        }
    }
}

/// Text-level checks on a raw candidate, independent of the validator.
pub fn candidate_checks(task: &TaskSpec, raw: &str) -> (bool, bool) {
    match extract_xml(raw).ok().and_then(|x| parse_bt(&x).ok()) {
        Some(tree) => (true, action_coherent(&tree, &task.manifest)),
        None => (false, false),
    }
}

pub fn run_sample(task: &TaskSpec, gen: &dyn Generator, opts: &BenchOptions) -> SampleRecord {
    let cfg = GeneratorConfig {
        one_shot: opts.one_shot,
        ..GeneratorConfig::default()
    };
    let mode = mode_for(task, &cfg);
    let mut rec = SampleRecord {
        candidates: Vec::new(),
        execution: None,
        goal_met: false,
        correct: false,
        inference_retries_used: 0,
        regen_rounds_used: 0,
        scored_candidate: None,
        action_coherent: false,
        xml_valid: false,
        generation_secs: 0.0,
        error: None,
    };
    let mut env = match bind_adapter(task.world.clone(), &task.manifest) {
        Ok(env) => env,
        Err(e) => {
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let outcome = match run_with_recovery(task, gen, &mut env, &opts.policy, &mode) {
        Ok(o) => Ok(o),
        Err(RecoveryError::RegenExhausted(o)) => Ok(*o),
        Err(e) => Err(e),
    };
    match outcome {
        Ok(o) => {
            rec.goal_met = env.goal_met(&task.goal);
            rec.correct = o.result.succeeded() && rec.goal_met;
            rec.execution = Some(ExecutionSummary {
                final_status: o.result.final_status,
                ticks_used: o.result.ticks_used,
                failure_reports: o.result.failure_reports,
            });
            rec.inference_retries_used = o.inference_retries_used;
            rec.regen_rounds_used = o.regen_rounds_used;
            rec.candidates = o.history;
        }
        Err(e) => {
            rec.candidates = e.history().to_vec();
            rec.error = Some(e.to_string());
        }
    }
    let initial: Vec<&Attempt> = rec
        .candidates
        .iter()
        .filter(|a| a.stage == AttemptStage::Initial)
        .collect();
    rec.generation_secs = initial.iter().map(|a| a.latency_secs).sum();
    let scored = initial.iter().find(|a| a.report.accepted()).or(initial.first());
    if let Some(a) = scored {
        (rec.xml_valid, rec.action_coherent) = candidate_checks(task, &a.candidate_text);
        rec.scored_candidate = Some(a.candidate_text.clone());
    }
    rec
}

/// Runs `opts.samples` fresh pipelines for one task. SR uses the first
/// sample; pass@k counts correct samples.
pub fn run_task(task: &TaskSpec, source: &dyn GeneratorSource, opts: &BenchOptions) -> Result<TaskResult, DomainError> {
    let n = opts.samples;
    pass_at_k(n, 0, opts.k)?;
    let samples: Vec<SampleRecord> = (0..n as usize)
        .map(|i| run_sample(task, source.for_sample(task, i).as_ref(), opts))
        .collect();
    let c = samples.iter().filter(|s| s.correct).count() as u64;
    let first = &samples[0];
    Ok(TaskResult {
        task_id: task.id.clone(),
        category: task.category,
        difficulty: task.difficulty,
        success: first.correct,
        correct_samples: c,
        pass_at_k: BTreeMap::from([(opts.k, pass_at_k(n, c, opts.k)?)]),
        inference_time_secs: samples.iter().map(|s| s.generation_secs).sum::<f64>() / n as f64,
        action_coherent: first.action_coherent,
        xml_valid: first.xml_valid,
        samples,
    })
}

/// Runs every task on a pool of `opts.workers` threads. Results keep the
/// order of `tasks`.
pub fn run_suite(
    tasks: &[TaskSpec],
    source: &dyn GeneratorSource,
    opts: &BenchOptions,
) -> Result<Vec<TaskResult>, DomainError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| tasks.par_iter().map(|t| run_task(t, source, opts)).collect())
}
