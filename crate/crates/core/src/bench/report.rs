use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::metrics::{format_fraction, format_percent};
use super::{Category, Difficulty, TaskResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn percent(&self) -> String {
        format_percent(self.num, self.den)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub tasks: u64,
    pub success: Ratio,
    pub sr: String,
    /// Mean per-task pass@k.
    pub pass_at_k: f64,
    pub pass_at_k_percent: String,
    pub mean_time_secs: f64,
    pub coherent: Ratio,
    pub action_coherency: String,
    pub syntax: Ratio,
    pub xml_syntax: String,
}

impl Aggregate {
    fn over<'a>(results: impl IntoIterator<Item = &'a TaskResult>, k: u64) -> Aggregate {
        let rs: Vec<&TaskResult> = results.into_iter().collect();
        let n = rs.len() as u64;
        let count = |f: &dyn Fn(&TaskResult) -> bool| Ratio {
            num: rs.iter().filter(|r| f(r)).count() as u64,
            den: n,
        };
        let mean = |f: &dyn Fn(&TaskResult) -> f64| {
            if n == 0 {
                0.0
            } else {
                rs.iter().map(|r| f(r)).sum::<f64>() / n as f64
            }
        };
        let success = count(&|r| r.success);
        let coherent = count(&|r| r.action_coherent);
        let syntax = count(&|r| r.xml_valid);
        let pak = mean(&|r| r.pass_at_k.get(&k).copied().unwrap_or(0.0));
        Aggregate {
            tasks: n,
            sr: success.percent(),
            success,
            pass_at_k: pak,
            pass_at_k_percent: format_fraction(pak),
            mean_time_secs: mean(&|r| r.inference_time_secs),
            action_coherency: coherent.percent(),
            coherent,
            xml_syntax: syntax.percent(),
            syntax,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub label: String,
    pub k: u64,
    pub overall: Aggregate,
    pub by_difficulty: BTreeMap<Difficulty, Aggregate>,
    pub by_category: BTreeMap<Category, Aggregate>,
    /// Keyed `category/difficulty`.
    pub by_cell: BTreeMap<String, Aggregate>,
    pub results: Vec<TaskResult>,
}

pub fn emit_report(results: Vec<TaskResult>, k: u64, label: &str) -> BenchReport {
    let by_difficulty = Difficulty::ALL
        .iter()
        .map(|&d| (d, Aggregate::over(results.iter().filter(|r| r.difficulty == d), k)))
        .collect();
    let by_category = Category::ALL
        .iter()
        .map(|&c| (c, Aggregate::over(results.iter().filter(|r| r.category == c), k)))
        .collect();
    let mut by_cell = BTreeMap::new();
    for c in Category::ALL {
        for d in Difficulty::ALL {
            let agg = Aggregate::over(results.iter().filter(|r| r.category == c && r.difficulty == d), k);
            by_cell.insert(format!("{c}/{d}"), agg);
        }
    }
    BenchReport {
        label: label.to_string(),
        k,
        overall: Aggregate::over(&results, k),
        by_difficulty,
        by_category,
        by_cell,
        results,
    }
}

impl BenchReport {
    /// Columns: SR / P@k / time per difficulty, then averages, action
    /// coherency and XML syntax. One row per category plus an overall row.
    pub fn to_csv(&self) -> String {
        let k = self.k;
        let mut out = String::from("run,scope");
        for d in Difficulty::ALL {
            let e = d.initial();
            let _ = write!(out, ",SR ({e}),P@{k} ({e}),Time ({e})");
        }
        let _ = writeln!(out, ",Avg SR,Avg P@{k},Avg Time,Action Coherency,XML Syntax");
        let row = |out: &mut String, scope: &str, cells: [&Aggregate; 3], all: &Aggregate| {
            let _ = write!(out, "{},{scope}", self.label);
            for a in cells {
                let _ = write!(out, ",{},{},{:.2}", a.sr, a.pass_at_k_percent, a.mean_time_secs);
            }
            let _ = writeln!(
                out,
                ",{},{},{:.2},{},{}",
                all.sr, all.pass_at_k_percent, all.mean_time_secs, all.action_coherency, all.xml_syntax
            );
        };
        for c in Category::ALL {
            let cells = Difficulty::ALL.map(|d| &self.by_cell[&format!("{c}/{d}")]);
            row(&mut out, &c.to_string(), cells, &self.by_category[&c]);
        }
        let cells = Difficulty::ALL.map(|d| &self.by_difficulty[&d]);
        row(&mut out, "all", cells, &self.overall);
        out
    }

    pub fn summary(&self) -> String {
        let o = &self.overall;
        format!(
            "{} tasks | Avg SR {} | Avg P@{} {} | mean time {:.3}s | coherency {} | syntax {}",
            o.tasks, o.sr, self.k, o.pass_at_k_percent, o.mean_time_secs, o.action_coherency, o.xml_syntax
        )
    }
}

/// Writes the report as JSON to `json_path` and as CSV next to it.
pub fn write_report(report: &BenchReport, json_path: &Path) -> std::io::Result<PathBuf> {
    if let Some(dir) = json_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    std::fs::write(json_path, json)?;
    let csv_path = json_path.with_extension("csv");
    std::fs::write(&csv_path, report.to_csv())?;
    Ok(csv_path)
}
