//! `btforge`: validate, execute, generate and benchmark behavior trees.
//!
//! Exit codes: 0 success, 1 domain failure (rejected tree, failed run,
//! exhausted generation), 2 usage or configuration error.

mod config;

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use btforge::bench::{
    emit_report, load_suite, load_task, run_suite, write_report, BenchOptions, Category, Difficulty, GeneratorSource,
    ScriptBook, SharedGenerator, TaskFilter, TaskSpec,
};
use btforge::dataset::{curate, CurationMock, DatasetRecord};
use btforge::envsim::bind_adapter;
use btforge::executor::execute;
use btforge::generator::{mode_for, Generator, GeneratorConfig, HttpGenerator, MockGenerator, ScriptedGenerator};
use btforge::manifest::load_manifest;
use btforge::recovery::{run_with_recovery, RecoveryError, RecoveryPolicy};
use btforge::textmetrics::corpus_scores;
use btforge::validator::validate;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use config::{AppConfig, CONFIG_ENV};

#[derive(Parser)]
#[command(
    name = "btforge",
    version,
    about = "Behavior-tree generation, validation and benchmarking"
)]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a tree against a primitive manifest.
    Validate {
        tree: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        /// Also write the JSON report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute a tree in a task's simulated world.
    Run {
        tree: PathBuf,
        #[arg(long)]
        task: PathBuf,
        /// Replace the task's manifest.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        budget: Option<u64>,
        /// JSON-lines trace file; without it the trace goes to stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Generate a tree for one task and execute it.
    Solve {
        #[arg(long)]
        task: PathBuf,
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        recovery: RecoveryArgs,
        /// Outcome JSON; defaults to `<output_dir>/<task id>.outcome.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a task suite and write JSON and CSV reports.
    Bench {
        /// Directory with a `tasks/` folder (or task YAML files directly).
        #[arg(long)]
        suite: PathBuf,
        #[command(flatten)]
        source: SourceArgs,
        #[command(flatten)]
        recovery: RecoveryArgs,
        /// Independent pipeline runs per task.
        #[arg(long, default_value_t = 3)]
        samples: u64,
        /// k for pass@k; at most --samples.
        #[arg(long, default_value_t = 3)]
        k: u64,
        /// navigation or manipulation.
        #[arg(long)]
        category: Option<Category>,
        /// easy, medium or hard.
        #[arg(long)]
        difficulty: Option<Difficulty>,
        /// Restrict to these task ids (repeatable).
        #[arg(long = "task")]
        tasks: Vec<String>,
        /// Worker threads; defaults to the config value.
        #[arg(long)]
        workers: Option<usize>,
        /// Row label in the CSV.
        #[arg(long, default_value = "run")]
        label: String,
        /// Report JSON; the CSV lands next to it. Defaults to `<output_dir>/report.json`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Curate an instruction dataset from seed trees.
    Dataset {
        /// Directory of seed `*.xml` trees.
        #[arg(long)]
        seeds: PathBuf,
        #[arg(long)]
        endpoint: Option<String>,
        /// Use the deterministic offline curation generator.
        #[arg(long, conflicts_with = "endpoint")]
        mock: bool,
        /// Output directory for train/test/all JSONL and stats.json.
        #[arg(long)]
        out: PathBuf,
    },
    /// ROUGE and BLEU of predictions against reference records.
    EvalText {
        /// JSON lines: records with an `output` field, or bare strings.
        #[arg(long)]
        pred: PathBuf,
        /// Reference records, paired with predictions by line.
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SourceArgs {
    /// Chat-completions URL; overrides the config file.
    #[arg(long)]
    endpoint: Option<String>,
    /// Answer every task with its reference solution.
    #[arg(long, conflicts_with_all = ["endpoint", "mock_script"])]
    mock: bool,
    /// JSON lines of `{"task_id", "outputs": [...]}` replayed per task.
    #[arg(long, conflicts_with = "endpoint")]
    mock_script: Option<PathBuf>,
    /// Prepend the task's exemplar to the prompt.
    #[arg(long)]
    one_shot: bool,
}

#[derive(Args)]
struct RecoveryArgs {
    /// Enable inference retries and runtime regeneration.
    #[arg(long)]
    er: bool,
    /// Regeneration rounds after a runtime failure (with --er).
    #[arg(long, requires = "er")]
    max_regen: Option<u32>,
}

impl RecoveryArgs {
    fn policy(&self, cfg: &AppConfig) -> RecoveryPolicy {
        if !self.er {
            return RecoveryPolicy {
                tick_budget: cfg.recovery.tick_budget,
                ..RecoveryPolicy::plain()
            };
        }
        let mut p = cfg.recovery;
        if let Some(n) = self.max_regen {
            p.max_regen_rounds = n;
        }
        p
    }
}

enum Fail {
    Domain(anyhow::Error),
    Usage(anyhow::Error),
}

type CmdResult = Result<ExitCode, Fail>;

trait OrUsage<T> {
    fn usage(self) -> Result<T, Fail>;
}

impl<T, E: Into<anyhow::Error>> OrUsage<T> for Result<T, E> {
    fn usage(self) -> Result<T, Fail> {
        self.map_err(|e| Fail::Usage(e.into()))
    }
}

fn read(path: &Path) -> Result<String, Fail> {
    fs::read_to_string(path)
        .with_context(|| path.display().to_string())
        .usage()
}

fn write(path: &Path, text: &str) -> Result<(), Fail> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .with_context(|| dir.display().to_string())
            .usage()?;
    }
    fs::write(path, text)
        .with_context(|| path.display().to_string())
        .usage()
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

fn load_task_with(path: &Path, manifest: Option<&Path>) -> Result<TaskSpec, Fail> {
    let mut task = load_task(path).usage()?;
    if let Some(m) = manifest {
        task.manifest = load_manifest(&read(m)?)
            .with_context(|| m.display().to_string())
            .usage()?;
        task.manifest_ref = m.display().to_string();
    }
    Ok(task)
}

fn http_generator(cfg: &AppConfig, endpoint: Option<&str>) -> Result<HttpGenerator, Fail> {
    let mut g = cfg.generator.clone();
    if let Some(e) = endpoint {
        g.endpoint_url = e.to_string();
    }
    if g.endpoint_url.is_empty() {
        return Err(Fail::Usage(anyhow!(
            "no endpoint: pass --endpoint, set BTFORGE_ENDPOINT, or run offline with --mock"
        )));
    }
    HttpGenerator::new(g).usage()
}

fn gen_config(cfg: &AppConfig, src: &SourceArgs) -> GeneratorConfig {
    GeneratorConfig {
        one_shot: src.one_shot || cfg.generator.one_shot,
        ..cfg.generator.clone()
    }
}

fn cmd_validate(tree: &Path, manifest: &Path, out: Option<&Path>) -> CmdResult {
    let m = load_manifest(&read(manifest)?)
        .with_context(|| manifest.display().to_string())
        .usage()?;
    let (report, _) = validate(&read(tree)?, &m);
    if let Some(out) = out {
        write(out, &pretty(&report))?;
    }
    if report.accepted() {
        println!("Accept");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{}", pretty(&report));
        Ok(ExitCode::from(1))
    }
}

fn cmd_run(
    cfg: &AppConfig,
    tree: &Path,
    task: &Path,
    manifest: Option<&Path>,
    budget: Option<u64>,
    trace: Option<&Path>,
) -> CmdResult {
    let task = load_task_with(task, manifest)?;
    let (report, tree) = validate(&read(tree)?, &task.manifest);
    let Some(tree) = tree.filter(|_| report.accepted()) else {
        println!("{}", pretty(&report));
        return Ok(ExitCode::from(1));
    };
    let mut env = bind_adapter(task.world.clone(), &task.manifest).usage()?;
    let result = execute(&tree, &mut env, budget.unwrap_or(cfg.recovery.tick_budget)).usage()?;
    let lines: String = result
        .trace
        .iter()
        .map(|e| serde_json::to_string(e).expect("serializable") + "\n")
        .collect();
    let goal_met = env.goal_met(&task.goal);
    let summary = format!(
        "{} after {} tick(s); goal {}",
        result.final_status,
        result.ticks_used,
        if goal_met { "met" } else { "not met" }
    );
    match trace {
        Some(p) => {
            write(p, &lines)?;
            println!("{summary}");
        }
        None => {
            print!("{lines}");
            eprintln!("{summary}");
        }
    }
    for f in &result.failure_reports {
        eprintln!("failure at {} ({}): {}", f.node_path, f.failed_leaf, f.env_message);
    }
    Ok(ExitCode::from(u8::from(!(result.succeeded() && goal_met))))
}

fn cmd_solve(
    cfg: &AppConfig,
    task: &Path,
    manifest: Option<&Path>,
    src: &SourceArgs,
    rec: &RecoveryArgs,
    out: Option<&Path>,
) -> CmdResult {
    let task = load_task_with(task, manifest)?;
    let gen: Box<dyn Generator> = if src.mock {
        let reference = task
            .reference
            .clone()
            .ok_or_else(|| Fail::Usage(anyhow!("task {} has no reference solution", task.id)))?;
        Box::new(MockGenerator::new(reference))
    } else if let Some(p) = &src.mock_script {
        let book = ScriptBook::load(p).map_err(|e| Fail::Usage(anyhow!(e)))?;
        let outputs = book
            .get(&task.id)
            .ok_or_else(|| Fail::Usage(anyhow!("{}: no script for task {}", p.display(), task.id)))?;
        Box::new(ScriptedGenerator::new(outputs.to_vec()))
    } else {
        Box::new(http_generator(cfg, src.endpoint.as_deref())?)
    };
    let policy = rec.policy(cfg);
    let mode = mode_for(&task, &gen_config(cfg, src));
    let mut env = bind_adapter(task.world.clone(), &task.manifest).usage()?;
    let run = run_with_recovery(&task, gen.as_ref(), &mut env, &policy, &mode);
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.join(format!("{}.outcome.json", task.id)));
    let (doc, solved) = match &run {
        Ok(o) => {
            let goal_met = env.goal_met(&task.goal);
            let solved = o.result.succeeded() && goal_met;
            println!(
                "{}: {} after {} tick(s), goal {}, {} retr(y/ies), {} regeneration round(s)",
                task.id,
                o.result.final_status,
                o.result.ticks_used,
                if goal_met { "met" } else { "not met" },
                o.inference_retries_used,
                o.regen_rounds_used
            );
            (
                json!({"task_id": task.id, "solved": solved, "goal_met": goal_met, "outcome": o}),
                solved,
            )
        }
        Err(RecoveryError::Config(e)) => return Err(Fail::Usage(anyhow!("{e}"))),
        Err(e) => {
            println!("{}: {e}", task.id);
            let mut doc = json!({"task_id": task.id, "solved": false, "error": e.to_string(), "history": e.history()});
            if let RecoveryError::RegenExhausted(o) = e {
                doc["outcome"] = serde_json::to_value(o).expect("serializable");
            }
            (doc, false)
        }
    };
    write(&out, &pretty(&doc))?;
    println!("outcome: {}", out.display());
    if solved {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(Fail::Domain(anyhow!("task {} not solved", task.id)))
    }
}

/// Answers each task with its own reference solution.
struct ReferenceSource;

impl GeneratorSource for ReferenceSource {
    fn for_sample<'a>(&'a self, task: &TaskSpec, _sample: usize) -> Box<dyn Generator + 'a> {
        Box::new(MockGenerator::new(task.reference.clone().unwrap_or_default()))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_bench(
    cfg: &AppConfig,
    suite: &Path,
    src: &SourceArgs,
    rec: &RecoveryArgs,
    samples: u64,
    k: u64,
    filter: TaskFilter,
    workers: Option<usize>,
    label: &str,
    out: Option<&Path>,
) -> CmdResult {
    if k == 0 || k > samples {
        return Err(Fail::Usage(anyhow!(
            "need 1 <= k <= samples (got k={k}, samples={samples})"
        )));
    }
    let tasks = filter.apply(load_suite(suite).usage()?);
    if tasks.is_empty() {
        return Err(Fail::Usage(anyhow!("no tasks selected from {}", suite.display())));
    }
    let source: Box<dyn GeneratorSource> = if src.mock {
        Box::new(ReferenceSource)
    } else if let Some(p) = &src.mock_script {
        Box::new(ScriptBook::load(p).map_err(|e| Fail::Usage(anyhow!(e)))?)
    } else {
        Box::new(SharedGenerator(http_generator(cfg, src.endpoint.as_deref())?))
    };
    let opts = BenchOptions {
        policy: rec.policy(cfg),
        samples,
        k,
        one_shot: gen_config(cfg, src).one_shot,
        workers: workers.unwrap_or(cfg.workers),
    };
    let results = run_suite(&tasks, source.as_ref(), &opts).map_err(|e| Fail::Domain(e.into()))?;
    let report = emit_report(results, k, label);
    let out = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| cfg.output_dir.join("report.json"));
    let csv = write_report(&report, &out)
        .with_context(|| out.display().to_string())
        .usage()?;
    println!("{}", report.summary());
    for (c, agg) in &report.by_category {
        println!("  {c}: SR {} over {} task(s)", agg.sr, agg.tasks);
    }
    for (d, agg) in &report.by_difficulty {
        println!("  {d}: SR {} over {} task(s)", agg.sr, agg.tasks);
    }
    println!("report: {} ({})", out.display(), csv.display());
    Ok(ExitCode::SUCCESS)
}

fn read_seed_dir(dir: &Path) -> Result<Vec<(String, String)>, Fail> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| dir.display().to_string())
        .usage()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "xml"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|f| {
            let bytes = fs::read(&f).with_context(|| f.display().to_string()).usage()?;
            let name = f
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((name, String::from_utf8_lossy(&bytes).into_owned()))
        })
        .collect()
}

fn jsonl(records: &[DatasetRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("serializable") + "\n")
        .collect()
}

fn cmd_dataset(cfg: &AppConfig, seeds: &Path, endpoint: Option<&str>, mock: bool, out: &Path) -> CmdResult {
    let seeds = read_seed_dir(seeds)?;
    let gen: Box<dyn Generator> = if mock {
        Box::new(CurationMock)
    } else {
        let mut with_top_p = cfg.clone();
        with_top_p.generator.top_p = cfg.dataset.top_p;
        Box::new(http_generator(&with_top_p, endpoint)?)
    };
    let curated = curate(&seeds, gen.as_ref(), &cfg.dataset).map_err(|e| Fail::Domain(e.into()))?;
    write(&out.join("train.jsonl"), &jsonl(&curated.train))?;
    write(&out.join("test.jsonl"), &jsonl(&curated.test))?;
    write(&out.join("all.jsonl"), &jsonl(&curated.records))?;
    let stats = json!({
        "stats": curated.stats,
        "stages": curated.stages,
        "train": curated.train.len(),
        "test": curated.test.len(),
        "token_count": "whitespace proxy",
        "rejected": {
            "cleanse": curated.cleanse_log,
            "variants": curated.variant_log,
            "records": curated.record_log,
        },
    });
    write(&out.join("stats.json"), &pretty(&stats))?;
    let s = &curated.stats;
    println!(
        "{} seed(s) -> {} cleansed -> {} record(s) ({} train / {} test); mean {:.2} nodes, max {}",
        curated.stages.seeds,
        curated.stages.cleansed,
        s.records,
        curated.train.len(),
        curated.test.len(),
        s.mean_nodes,
        s.max_nodes
    );
    println!("written to {}", out.display());
    Ok(ExitCode::SUCCESS)
}

/// The `output` field of each JSON line; bare JSON strings are taken as is.
fn outputs(path: &Path) -> Result<Vec<String>, Fail> {
    let f = fs::File::open(path)
        .with_context(|| path.display().to_string())
        .usage()?;
    let mut out = Vec::new();
    for (i, line) in io::BufReader::new(f).lines().enumerate() {
        let line = line.with_context(|| path.display().to_string()).usage()?;
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(&line)
            .with_context(|| format!("{}:{}", path.display(), i + 1))
            .usage()?;
        let text = match v {
            serde_json::Value::String(s) => s,
            v => v
                .get("output")
                .and_then(|o| o.as_str())
                .map(str::to_string)
                .ok_or_else(|| Fail::Usage(anyhow!("{}:{}: no string `output` field", path.display(), i + 1)))?,
        };
        out.push(text);
    }
    Ok(out)
}

fn cmd_eval_text(pred: &Path, reference: &Path, out: Option<&Path>) -> CmdResult {
    let preds = outputs(pred)?;
    let refs = outputs(reference)?;
    if preds.len() != refs.len() {
        return Err(Fail::Usage(anyhow!(
            "{} prediction(s) but {} reference(s)",
            preds.len(),
            refs.len()
        )));
    }
    let pairs: Vec<(String, String)> = preds.into_iter().zip(refs).collect();
    let doc = json!({"pairs": pairs.len(), "scale": 100, "metrics": corpus_scores(&pairs)});
    if let Some(out) = out {
        write(out, &pretty(&doc))?;
    }
    println!("{}", pretty(&doc));
    Ok(ExitCode::SUCCESS)
}

fn dispatch(cli: Cli) -> CmdResult {
    let cfg = AppConfig::load(cli.config.as_deref()).map_err(|e| Fail::Usage(anyhow!(e)))?;
    match cli.cmd {
        Cmd::Validate { tree, manifest, out } => cmd_validate(&tree, &manifest, out.as_deref()),
        Cmd::Run {
            tree,
            task,
            manifest,
            budget,
            trace,
        } => cmd_run(&cfg, &tree, &task, manifest.as_deref(), budget, trace.as_deref()),
        Cmd::Solve {
            task,
            manifest,
            source,
            recovery,
            out,
        } => cmd_solve(&cfg, &task, manifest.as_deref(), &source, &recovery, out.as_deref()),
        Cmd::Bench {
            suite,
            source,
            recovery,
            samples,
            k,
            category,
            difficulty,
            tasks,
            workers,
            label,
            out,
        } => {
            let filter = TaskFilter {
                category,
                difficulty,
                ids: tasks.into_iter().collect(),
            };
            cmd_bench(
                &cfg,
                &suite,
                &source,
                &recovery,
                samples,
                k,
                filter,
                workers,
                &label,
                out.as_deref(),
            )
        }
        Cmd::Dataset {
            seeds,
            endpoint,
            mock,
            out,
        } => cmd_dataset(&cfg, &seeds, endpoint.as_deref(), mock, &out),
        Cmd::EvalText { pred, reference, out } => cmd_eval_text(&pred, &reference, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(code) => code,
        Err(Fail::Domain(e)) => {
            eprintln!("btforge: {e:#}");
            ExitCode::from(1)
        }
        Err(Fail::Usage(e)) => {
            eprintln!("btforge: {e:#}");
            ExitCode::from(2)
        }
    };
    let _ = io::stdout().flush();
    code
}
