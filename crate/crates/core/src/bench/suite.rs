use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envsim::{check_goal, GoalPredicate, World};
use crate::generator::{PromptRecord, SYSTEM_INSTRUCTION};
use crate::manifest::{load_manifest, PrimitiveManifest};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Navigation,
    Manipulation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Medium,
    Hard,
}

impl Category {
    pub const ALL: [Category; 2] = [Category::Navigation, Category::Manipulation];
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Difficulty::Easy, Difficulty::Medium, Difficulty::Hard];

    pub fn initial(self) -> char {
        match self {
            Difficulty::Easy => 'E',
            Difficulty::Medium => 'M',
            Difficulty::Hard => 'H',
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Navigation => "navigation",
            Category::Manipulation => "manipulation",
        })
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Medium => "medium",
            Difficulty::Hard => "hard",
        })
    }
}

impl std::str::FromStr for Category {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "navigation" | "nav" => Ok(Category::Navigation),
            "manipulation" | "manip" => Ok(Category::Manipulation),
            _ => Err(format!("unknown category `{s}`")),
        }
    }
}

impl std::str::FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "easy" => Ok(Difficulty::Easy),
            "medium" => Ok(Difficulty::Medium),
            "hard" => Ok(Difficulty::Hard),
            _ => Err(format!("unknown difficulty `{s}`")),
        }
    }
}

/// A benchmark task with its manifest and reference solution resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub id: String,
    pub category: Category,
    pub difficulty: Difficulty,
    pub description: String,
    /// Where the manifest came from: a path, or `inline`.
    pub manifest_ref: String,
    pub manifest: PrimitiveManifest,
    pub world: World,
    pub goal: GoalPredicate,
    pub exemplar: Option<PromptRecord>,
    /// Hand-written solution XML, when the suite ships one.
    pub reference: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ManifestSource {
    Path(String),
    Inline(serde_yaml::Value),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Exemplar {
    input: String,
    output: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    id: String,
    category: Category,
    difficulty: Difficulty,
    description: String,
    manifest: ManifestSource,
    world: World,
    goal: GoalPredicate,
    #[serde(default)]
    exemplar: Option<Exemplar>,
    #[serde(default)]
    reference: Option<String>,
}

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}: {message}")]
    Malformed { path: PathBuf, message: String },
    #[error("duplicate task id `{id}` ({first} and {second})")]
    Duplicate {
        id: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("no task files under {0}")]
    Empty(PathBuf),
}

fn read(path: &Path) -> Result<String, SuiteError> {
    std::fs::read_to_string(path).map_err(|e| SuiteError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Loads one task file. Relative manifest and reference paths resolve
/// against the file's directory.
pub fn load_task(path: &Path) -> Result<TaskSpec, SuiteError> {
    let malformed = |message: String| SuiteError::Malformed {
        path: path.to_path_buf(),
        message,
    };
    let raw: TaskFile = crate::yaml::from_str(&read(path)?).map_err(|e| malformed(e.to_string()))?;
    if raw.description.trim().is_empty() {
        return Err(malformed("empty description".into()));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let (manifest_ref, manifest_text) = match raw.manifest {
        ManifestSource::Path(p) => {
            let text = read(&base.join(&p))?;
            (p, text)
        }
        ManifestSource::Inline(v) => (
            "inline".to_string(),
            serde_yaml::to_string(&v).map_err(|e| malformed(e.to_string()))?,
        ),
    };
    let manifest = load_manifest(&manifest_text).map_err(|e| malformed(format!("manifest: {e}")))?;
    let world = raw.world.normalized().map_err(|e| malformed(e.to_string()))?;
    check_goal(&world, &raw.goal).map_err(|e| malformed(e.to_string()))?;
    let reference = match raw.reference {
        Some(p) => Some(read(&base.join(p))?),
        None => None,
    };
    Ok(TaskSpec {
        id: raw.id,
        category: raw.category,
        difficulty: raw.difficulty,
        description: raw.description.trim().to_string(),
        manifest_ref,
        manifest,
        world,
        goal: raw.goal,
        exemplar: raw.exemplar.map(|e| PromptRecord {
            instruction: SYSTEM_INSTRUCTION.to_string(),
            input: e.input,
            output: Some(e.output),
        }),
        reference,
    })
}

fn task_files(dir: &Path) -> Result<Vec<PathBuf>, SuiteError> {
    let dir = if dir.join("tasks").is_dir() {
        dir.join("tasks")
    } else {
        dir.to_path_buf()
    };
    let entries = std::fs::read_dir(&dir).map_err(|e| SuiteError::Io {
        path: dir.clone(),
        message: e.to_string(),
    })?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("yaml" | "yml")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(SuiteError::Empty(dir));
    }
    Ok(files)
}

/// Loads a suite from a task file or a directory of task files (or a
/// directory holding a `tasks/` subdirectory). Tasks come back sorted by id.
pub fn load_suite(path: &Path) -> Result<Vec<TaskSpec>, SuiteError> {
    let files = if path.is_dir() {
        task_files(path)?
    } else {
        vec![path.to_path_buf()]
    };
    let mut seen: Vec<(String, PathBuf)> = Vec::new();
    let mut tasks = Vec::with_capacity(files.len());
    for f in files {
        let t = load_task(&f)?;
        if let Some((_, first)) = seen.iter().find(|(id, _)| *id == t.id) {
            return Err(SuiteError::Duplicate {
                id: t.id,
                first: first.clone(),
                second: f,
            });
        }
        seen.push((t.id.clone(), f));
        tasks.push(t);
    }
    tasks.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(tasks)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TaskFilter {
    pub category: Option<Category>,
    pub difficulty: Option<Difficulty>,
    pub ids: BTreeSet<String>,
}

impl TaskFilter {
    pub fn matches(&self, t: &TaskSpec) -> bool {
        self.category.is_none_or(|c| c == t.category)
            && self.difficulty.is_none_or(|d| d == t.difficulty)
            && (self.ids.is_empty() || self.ids.contains(&t.id))
    }

    pub fn apply(&self, tasks: Vec<TaskSpec>) -> Vec<TaskSpec> {
        tasks.into_iter().filter(|t| self.matches(t)).collect()
    }
}
