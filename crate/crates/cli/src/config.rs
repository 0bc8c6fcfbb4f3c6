//! Run configuration: built-in defaults, then one TOML file, then flags.

use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stagewise::engine::{EngineConfig, RetryPolicy};
use stagewise::kernel::{KernelCommand, KernelConfig};
use stagewise::llm::{Backend, HttpBackend, ScriptedBackend};
use stagewise::prompts::PromptLibrary;
use stagewise::stages::PipelineVariant;
use stagewise::table::LengthMeasure;

pub const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Interchange file produced by `convert`.
    pub data: Option<PathBuf>,
    /// Run only the first N samples.
    pub limit: Option<usize>,
    pub variant: String,
    /// `http` or `scripted:<fixture path>`.
    pub backend: String,
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API token. Empty sends no token.
    pub token_env: String,
    /// `sim` or the path of a kernel program.
    pub kernel: String,
    pub kernel_args: Vec<String>,
    pub up_limit: u32,
    pub max_operations: usize,
    pub cell_timeout_secs: f64,
    pub sample_budget_secs: f64,
    pub concurrency: usize,
    pub prompts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub max_rows: Option<usize>,
    pub length_measure: LengthMeasure,
    /// Reserved. The engine is deterministic given the backend.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let retry = RetryPolicy::default();
        RunConfig {
            data: None,
            limit: None,
            variant: "original".into(),
            backend: "http".into(),
            endpoint: DEFAULT_ENDPOINT.into(),
            model: "gpt-4o-mini".into(),
            token_env: "OPENAI_API_KEY".into(),
            kernel: "sim".into(),
            kernel_args: Vec::new(),
            up_limit: retry.up_limit,
            max_operations: retry.max_operations,
            cell_timeout_secs: KernelConfig::default().cell_timeout.as_secs_f64(),
            sample_budget_secs: retry.sample_budget.as_secs_f64(),
            concurrency: 1,
            prompts: None,
            out: None,
            max_rows: None,
            length_measure: LengthMeasure::Characters,
            seed: 0,
        }
    }
}

/// Flag values; `None` leaves the lower layer in place.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub limit: Option<usize>,
    pub variant: Option<String>,
    pub backend: Option<String>,
    pub endpoint: Option<String>,
    pub model: Option<String>,
    pub token_env: Option<String>,
    pub kernel: Option<String>,
    pub kernel_args: Option<Vec<String>>,
    pub up_limit: Option<u32>,
    pub max_operations: Option<usize>,
    pub cell_timeout_secs: Option<f64>,
    pub sample_budget_secs: Option<f64>,
    pub concurrency: Option<usize>,
    pub prompts: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub max_rows: Option<usize>,
    pub length_measure: Option<LengthMeasure>,
    pub seed: Option<u64>,
}

macro_rules! layer {
    ($cfg:ident, $o:ident; $($field:ident),*; $($opt:ident),*) => {
        $(if let Some(v) = $o.$field { $cfg.$field = v; })*
        $(if $o.$opt.is_some() { $cfg.$opt = $o.$opt; })*
    };
}

impl RunConfig {
    /// Reads a TOML file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.data, &mut cfg.prompts, &mut cfg.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(fixture) = cfg.backend.strip_prefix("scripted:") {
            if Path::new(fixture).is_relative() {
                cfg.backend = format!("scripted:{}", base.join(fixture).display());
            }
        }
        if cfg.kernel.contains('/') && Path::new(&cfg.kernel).is_relative() {
            cfg.kernel = base.join(&cfg.kernel).display().to_string();
        }
        Ok(cfg)
    }

    pub fn layered(file: Option<&Path>, flags: Overrides) -> Result<RunConfig> {
        let mut cfg = match file {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        cfg.apply(flags);
        Ok(cfg)
    }

    pub fn apply(&mut self, o: Overrides) {
        let cfg = self;
        layer!(cfg, o;
            variant, backend, endpoint, model, token_env, kernel, kernel_args, up_limit,
            max_operations, cell_timeout_secs, sample_budget_secs, concurrency, length_measure, seed;
            data, limit, prompts, out, max_rows);
    }

    pub fn variant(&self) -> Result<PipelineVariant> {
        let v: PipelineVariant = self
            .variant
            .parse()
            .with_context(|| format!("unknown variant '{}' (expected original, only_reason, no_row_sel, no_dty_cle, with_col_sel or custom:<stages>)", self.variant))?;
        if v.is_experimental() {
            log::warn!("variant {} is an experimental custom sequence", v.name());
        }
        Ok(v)
    }

    fn kernel_command(&self) -> Result<KernelCommand> {
        if self.kernel == "sim" {
            return Ok(KernelCommand::Sim);
        }
        let path = PathBuf::from(&self.kernel);
        let found = if self.kernel.contains('/') {
            path.is_file()
        } else {
            std::env::var_os("PATH")
                .map(|p| std::env::split_paths(&p).any(|d| d.join(&path).is_file()))
                .unwrap_or(false)
        };
        if !found {
            bail!("kernel program '{}' not found", self.kernel);
        }
        Ok(KernelCommand::Program { path, args: self.kernel_args.clone() })
    }

    pub fn engine_config(&self) -> Result<EngineConfig> {
        if !(self.cell_timeout_secs > 0.0) || !(self.sample_budget_secs > 0.0) {
            bail!("timeouts must be positive");
        }
        if self.max_operations == 0 {
            bail!("max_operations must be at least 1");
        }
        Ok(EngineConfig {
            variant: self.variant()?,
            retry: RetryPolicy {
                up_limit: self.up_limit,
                max_operations: self.max_operations,
                sample_budget: Duration::from_secs_f64(self.sample_budget_secs),
            },
            kernel: KernelConfig {
                command: self.kernel_command()?,
                cell_timeout: Duration::from_secs_f64(self.cell_timeout_secs),
                ..KernelConfig::default()
            },
            max_rows: self.max_rows,
            ..EngineConfig::default()
        })
    }

    pub fn backend(&self) -> Result<Box<dyn Backend>> {
        if let Some(fixture) = self.backend.strip_prefix("scripted:") {
            return Ok(Box::new(ScriptedBackend::from_file(Path::new(fixture))?));
        }
        if self.backend != "http" {
            bail!("unknown backend '{}' (expected http or scripted:<path>)", self.backend);
        }
        let token_env = (!self.token_env.is_empty()).then_some(self.token_env.as_str());
        Ok(Box::new(HttpBackend::new(&self.endpoint, &self.model, token_env)?))
    }

    pub fn library(&self) -> Result<PromptLibrary> {
        match &self.prompts {
            Some(dir) => {
                if !dir.is_dir() {
                    bail!("prompt directory {} not found", dir.display());
                }
                Ok(PromptLibrary::load_dir(dir)?)
            }
            None => Ok(PromptLibrary::builtin()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "variant = \"only_reason\"\nup_limit = 5\nconcurrency = 2\ndata = \"wtq.jsonl\"\n").unwrap();
        let flags = Overrides { up_limit: Some(1), ..Overrides::default() };
        let cfg = RunConfig::layered(Some(&path), flags).unwrap();
        assert_eq!(cfg.variant, "only_reason");
        assert_eq!(cfg.up_limit, 1);
        assert_eq!(cfg.concurrency, 2);
        assert_eq!(cfg.model, "gpt-4o-mini");
        assert_eq!(cfg.data, Some(dir.path().join("wtq.jsonl")));
    }

    #[test]
    fn rejects_unknown_keys_and_variants() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "api_key = \"sk-123\"\n").unwrap();
        assert!(RunConfig::from_file(&path).is_err());

        let cfg = RunConfig { variant: "no_reasoning".into(), ..RunConfig::default() };
        let err = cfg.engine_config().unwrap_err();
        assert!(format!("{err:#}").contains("unknown variant 'no_reasoning'"));
    }

    #[test]
    fn missing_kernel_program() {
        let cfg = RunConfig { kernel: "/nonexistent/kernel".into(), ..RunConfig::default() };
        assert!(cfg.engine_config().unwrap_err().to_string().contains("/nonexistent/kernel"));
    }
}
