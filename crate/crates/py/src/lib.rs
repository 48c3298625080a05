//! Python bindings. Structured results come back as plain dicts and lists.

use std::path::Path;

use btforge::bench::{
    emit_report, load_suite, load_task, pass_at_k as pass_at_k_impl, run_suite, BenchOptions, ScriptBook, TaskSpec,
};
use btforge::bt::{parse_bt, serialize_bt, BehaviorTree};
use btforge::dataset::{curate as curate_impl, CurationConfig, CurationMock};
use btforge::envsim::bind_adapter;
use btforge::executor::{execute as execute_impl, DEFAULT_TICK_BUDGET};
use btforge::generator::{PromptMode, ScriptedGenerator};
use btforge::manifest::{load_manifest, render_action_list, PrimitiveManifest};
use btforge::recovery::{run_with_recovery, RecoveryPolicy};
use btforge::textmetrics::score_pair as score_pair_impl;
use btforge::validator::validate as validate_impl;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde_json::Value;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => b.into_pyobject(py)?.to_owned().into_any(),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => i.into_pyobject(py)?.into_any(),
            (None, Some(u)) => u.into_pyobject(py)?.into_any(),
            _ => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(xs) => {
            let list = PyList::empty(py);
            for x in xs {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(m) => {
            let dict = PyDict::new(py);
            for (k, x) in m {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn to_dict<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(v).map_err(value_err)?)
}

/// A primitive manifest (the robot's action vocabulary).
#[pyclass(name = "Manifest", frozen)]
struct PyManifest(PrimitiveManifest);

#[pymethods]
impl PyManifest {
    #[staticmethod]
    fn from_yaml(text: &str) -> PyResult<Self> {
        load_manifest(text).map(PyManifest).map_err(value_err)
    }

    fn ids(&self) -> Vec<String> {
        self.0.ids().map(str::to_string).collect()
    }

    fn action_list(&self) -> String {
        render_action_list(&self.0)
    }

    fn to_yaml(&self) -> String {
        self.0.to_yaml()
    }

    fn __len__(&self) -> usize {
        self.0.primitives().len()
    }
}

/// A parsed behavior tree.
#[pyclass(name = "Tree", frozen)]
struct PyTree(BehaviorTree);

#[pymethods]
impl PyTree {
    #[staticmethod]
    fn parse(xml: &str) -> PyResult<Self> {
        parse_bt(xml).map(PyTree).map_err(value_err)
    }

    fn to_xml(&self) -> String {
        serialize_bt(&self.0)
    }

    #[getter]
    fn tree_id(&self) -> &str {
        &self.0.tree_id
    }

    fn node_count(&self) -> usize {
        self.0.root.node_count()
    }

    fn depth(&self) -> usize {
        self.0.root.depth()
    }

    fn leaf_ids(&self) -> Vec<String> {
        self.0.root.leaf_ids()
    }

    fn __repr__(&self) -> String {
        format!("Tree({:?}, {} nodes)", self.0.tree_id, self.0.root.node_count())
    }
}

/// Validation report for `xml` against `manifest`.
#[pyfunction]
fn validate<'py>(py: Python<'py>, xml: &str, manifest: &PyManifest) -> PyResult<Bound<'py, PyAny>> {
    let (report, _) = validate_impl(xml, &manifest.0);
    to_dict(py, &report)
}

fn task(path: &str) -> PyResult<TaskSpec> {
    load_task(Path::new(path)).map_err(value_err)
}

/// Executes `xml` in the simulated world of the task file at `task_path`.
#[pyfunction]
#[pyo3(signature = (task_path, xml, budget = DEFAULT_TICK_BUDGET))]
fn execute<'py>(py: Python<'py>, task_path: &str, xml: &str, budget: u64) -> PyResult<Bound<'py, PyAny>> {
    let task = task(task_path)?;
    let (report, tree) = validate_impl(xml, &task.manifest);
    let tree = tree
        .filter(|_| report.accepted())
        .ok_or_else(|| value_err(report.describe()))?;
    let mut env = bind_adapter(task.world.clone(), &task.manifest).map_err(value_err)?;
    let result = execute_impl(&tree, &mut env, budget).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let out = to_dict(py, &result)?;
    out.set_item("goal_met", env.goal_met(&task.goal))?;
    Ok(out)
}

/// Runs the generate-validate-execute pipeline with a scripted generator
/// that replays `outputs` in order.
#[pyfunction]
#[pyo3(signature = (task_path, outputs, er = true, max_regen = 3))]
fn solve<'py>(
    py: Python<'py>,
    task_path: &str,
    outputs: Vec<String>,
    er: bool,
    max_regen: u32,
) -> PyResult<Bound<'py, PyAny>> {
    let task = task(task_path)?;
    let policy = if er {
        RecoveryPolicy {
            max_regen_rounds: max_regen,
            ..RecoveryPolicy::default()
        }
    } else {
        RecoveryPolicy::plain()
    };
    let gen = ScriptedGenerator::new(outputs);
    let mut env = bind_adapter(task.world.clone(), &task.manifest).map_err(value_err)?;
    let out = PyDict::new(py);
    match run_with_recovery(&task, &gen, &mut env, &policy, &PromptMode::ZeroShot) {
        Ok(o) => {
            out.set_item("solved", o.result.succeeded() && env.goal_met(&task.goal))?;
            out.set_item("outcome", to_dict(py, &o)?)?;
        }
        Err(e) => {
            out.set_item("solved", false)?;
            out.set_item("error", e.to_string())?;
            out.set_item("history", to_dict(py, &e.history())?)?;
        }
    }
    Ok(out.into_any())
}

/// Benchmarks a suite directory against a JSON-lines generator script.
#[pyfunction]
#[pyo3(name = "bench", signature = (suite_dir, script_path, samples = 3, k = 3, er = false))]
fn run_bench<'py>(
    py: Python<'py>,
    suite_dir: &str,
    script_path: &str,
    samples: u64,
    k: u64,
    er: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let tasks = load_suite(Path::new(suite_dir)).map_err(value_err)?;
    let book = ScriptBook::load(Path::new(script_path)).map_err(value_err)?;
    let opts = BenchOptions {
        policy: if er {
            RecoveryPolicy::default()
        } else {
            RecoveryPolicy::plain()
        },
        samples,
        k,
        ..BenchOptions::default()
    };
    let results = py.detach(|| run_suite(&tasks, &book, &opts)).map_err(value_err)?;
    to_dict(py, &emit_report(results, k, "python"))
}

#[pyfunction]
fn pass_at_k(n: u64, c: u64, k: u64) -> PyResult<f64> {
    pass_at_k_impl(n, c, k).map_err(value_err)
}

/// ROUGE F1 scores and BLEU, each in [0, 1].
#[pyfunction]
fn score_pair<'py>(py: Python<'py>, prediction: &str, reference: &str) -> PyResult<Bound<'py, PyAny>> {
    to_dict(py, &score_pair_impl(prediction, reference))
}

/// Offline dataset curation over `(name, xml)` seed pairs.
#[pyfunction]
fn curate<'py>(py: Python<'py>, seeds: Vec<(String, String)>) -> PyResult<Bound<'py, PyAny>> {
    let curated = curate_impl(&seeds, &CurationMock, &CurationConfig::default()).map_err(value_err)?;
    let out = PyDict::new(py);
    out.set_item("records", to_dict(py, &curated.records)?)?;
    out.set_item("train", curated.train.len())?;
    out.set_item("test", curated.test.len())?;
    out.set_item("stats", to_dict(py, &curated.stats)?)?;
    out.set_item("stages", to_dict(py, &curated.stages)?)?;
    Ok(out.into_any())
}

#[pymodule]
#[pyo3(name = "btforge")]
fn btforge_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyManifest>()?;
    m.add_class::<PyTree>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(execute, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_bench, m)?)?;
    m.add_function(wrap_pyfunction!(pass_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(score_pair, m)?)?;
    m.add_function(wrap_pyfunction!(curate, m)?)?;
    Ok(())
}
