//! Application config: one TOML file plus environment overrides.
//!
//! ```toml
//! output_dir = "runs"
//! workers = 4
//!
//! [generator]
//! endpoint_url = "http://localhost:8000/v1/chat/completions"
//! model_name = "btgen"
//! auth_env = "BTGEN_TOKEN"
//!
//! [recovery]
//! max_inference_retries = 5
//! max_regen_rounds = 3
//!
//! [dataset]
//! variants_per_tree = 3
//! ```

use std::path::{Path, PathBuf};

use btforge::dataset::CurationConfig;
use btforge::generator::GeneratorConfig;
use btforge::recovery::RecoveryPolicy;
use serde::Deserialize;

pub const CONFIG_ENV: &str = "BTFORGE_CONFIG";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppConfig {
    pub output_dir: PathBuf,
    pub workers: usize,
    pub generator: GeneratorConfig,
    pub recovery: RecoveryPolicy,
    pub dataset: CurationConfig,
}

impl Default for AppConfig {
    fn default() -> Self {
        AppConfig {
            output_dir: PathBuf::from("."),
            workers: 4,
            generator: GeneratorConfig::default(),
            recovery: RecoveryPolicy::default(),
            dataset: CurationConfig::default(),
        }
    }
}

fn env_var(get: &dyn Fn(&str) -> Option<String>, key: &str) -> Option<String> {
    get(key).filter(|v| !v.is_empty())
}

fn parse_env<T: std::str::FromStr>(get: &dyn Fn(&str) -> Option<String>, key: &str) -> Result<Option<T>, String> {
    match env_var(get, key) {
        None => Ok(None),
        Some(v) => v.parse().map(Some).map_err(|_| format!("{key}: cannot parse `{v}`")),
    }
}

impl AppConfig {
    /// Reads `path` (or `$BTFORGE_CONFIG`), then applies `BTFORGE_*`
    /// overrides. No file at all means defaults.
    pub fn load(path: Option<&Path>) -> Result<AppConfig, String> {
        Self::load_with(path, &|k| std::env::var(k).ok())
    }

    pub fn load_with(path: Option<&Path>, get: &dyn Fn(&str) -> Option<String>) -> Result<AppConfig, String> {
        let path = path
            .map(Path::to_path_buf)
            .or_else(|| env_var(get, CONFIG_ENV).map(PathBuf::from));
        let mut cfg = match &path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                toml::from_str(&text).map_err(|e| format!("{}: {e}", p.display()))?
            }
            None => AppConfig::default(),
        };
        if let Some(v) = env_var(get, "BTFORGE_ENDPOINT") {
            cfg.generator.endpoint_url = v;
        }
        if let Some(v) = env_var(get, "BTFORGE_MODEL") {
            cfg.generator.model_name = v;
        }
        if let Some(v) = env_var(get, "BTFORGE_AUTH_ENV") {
            cfg.generator.auth_env = Some(v);
        }
        if let Some(v) = env_var(get, "BTFORGE_OUTPUT_DIR") {
            cfg.output_dir = PathBuf::from(v);
        }
        if let Some(v) = parse_env(get, "BTFORGE_WORKERS")? {
            cfg.workers = v;
        }
        if let Some(v) = parse_env(get, "BTFORGE_TIMEOUT_SECS")? {
            cfg.generator.timeout_secs = v;
        }
        cfg.generator.check().map_err(|e| e.to_string())?;
        cfg.dataset.check().map_err(|e| e.to_string())?;
        if cfg.workers == 0 {
            return Err("workers must be at least 1".into());
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let m: HashMap<String, String> = pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        move |k| m.get(k).cloned()
    }

    #[test]
    fn defaults_without_file() {
        let cfg = AppConfig::load_with(None, &env(&[])).unwrap();
        assert_eq!(cfg, AppConfig::default());
    }

    #[test]
    fn file_then_env_overrides() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(
            &p,
            "workers = 2\n[generator]\nendpoint_url = \"http://a\"\n[recovery]\nmax_regen_rounds = 1\n",
        )
        .unwrap();
        let cfg = AppConfig::load_with(Some(&p), &env(&[("BTFORGE_ENDPOINT", "http://b")])).unwrap();
        assert_eq!(cfg.workers, 2);
        assert_eq!(cfg.recovery.max_regen_rounds, 1);
        assert_eq!(cfg.generator.endpoint_url, "http://b");

        let via_env = AppConfig::load_with(None, &env(&[(CONFIG_ENV, p.to_str().unwrap())])).unwrap();
        assert_eq!(via_env.generator.endpoint_url, "http://a");
    }

    #[test]
    fn bad_values_are_errors() {
        assert!(AppConfig::load_with(None, &env(&[("BTFORGE_WORKERS", "many")])).is_err());
        assert!(AppConfig::load_with(None, &env(&[("BTFORGE_WORKERS", "0")])).is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "colour = 1\n").unwrap();
        assert!(AppConfig::load_with(Some(&p), &env(&[]))
            .unwrap_err()
            .contains("colour"));
    }
}
