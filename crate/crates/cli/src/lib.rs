//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 when a run
//! finished with at least one infrastructure failure.

pub mod config;
pub mod convert;
pub mod report;
pub mod run;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stagewise::prompts::PromptLibrary;
use stagewise::table::LengthMeasure;

use crate::config::{Overrides, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INFRASTRUCTURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stagewise", version, about = "Stage-wise plan-then-execute table reasoning runs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a native WikiTQ or TabFact checkout to an interchange file.
    Convert {
        /// Benchmark checkout root.
        #[arg(long)]
        root: PathBuf,
        #[arg(long, value_enum)]
        split: convert::Split,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the engine over a dataset.
    Run(RunArgs),
    /// Print group, generation-count and ablation reports for finished runs.
    Report {
        /// Print JSON instead of text tables.
        #[arg(long)]
        json: bool,
        dirs: Vec<PathBuf>,
    },
    /// Write the built-in prompt library to a directory for editing.
    ExportPrompts { dir: PathBuf },
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// TOML file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Interchange file.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub limit: Option<usize>,
    /// original, only_reason, no_row_sel, no_dty_cle, with_col_sel or custom:<stage,...>
    #[arg(long)]
    pub variant: Option<String>,
    /// http or scripted:<fixture.json>
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub endpoint: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Environment variable holding the API token.
    #[arg(long)]
    pub token_env: Option<String>,
    /// sim, or a program speaking the kernel protocol.
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long = "kernel-arg", allow_hyphen_values = true)]
    pub kernel_args: Vec<String>,
    #[arg(long)]
    pub up_limit: Option<u32>,
    #[arg(long)]
    pub max_operations: Option<usize>,
    /// Per-cell timeout in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Wall-clock budget per sample in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    #[arg(long)]
    pub concurrency: Option<usize>,
    #[arg(long)]
    pub prompts: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_rows: Option<usize>,
    #[arg(long, value_parser = parse_measure)]
    pub length_measure: Option<LengthMeasure>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep answered samples from an earlier run in --out and execute the rest.
    #[arg(long)]
    pub resume: bool,
}

fn parse_measure(s: &str) -> Result<LengthMeasure, String> {
    match s {
        "characters" => Ok(LengthMeasure::Characters),
        "words" => Ok(LengthMeasure::Words),
        _ => Err(format!("expected characters or words, got '{s}'")),
    }
}

impl RunArgs {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            data: self.data.clone(),
            limit: self.limit,
            variant: self.variant.clone(),
            backend: self.backend.clone(),
            endpoint: self.endpoint.clone(),
            model: self.model.clone(),
            token_env: self.token_env.clone(),
            kernel: self.kernel.clone(),
            kernel_args: (!self.kernel_args.is_empty()).then(|| self.kernel_args.clone()),
            up_limit: self.up_limit,
            max_operations: self.max_operations,
            cell_timeout_secs: self.timeout,
            sample_budget_secs: self.budget,
            concurrency: self.concurrency,
            prompts: self.prompts.clone(),
            out: self.out.clone(),
            max_rows: self.max_rows,
            length_measure: self.length_measure,
            seed: self.seed,
        }
    }
}

fn execute(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Convert { root, split, out } => {
            let n = convert::cmd_convert(&root, split, &out)?;
            println!("wrote {n} samples to {}", out.display());
            Ok(EXIT_OK)
        }
        Command::Run(args) => {
            let cfg = RunConfig::layered(args.config.as_deref(), args.overrides())?;
            let summary = run::cmd_run(&cfg, args.resume)?;
            let acc = &summary.accuracy;
            println!("{} samples, {} correct, accuracy {:.2}", acc.total, acc.correct, acc.accuracy);
            for (status, n) in &acc.failed_by_status {
                println!("  {status}: {n}");
            }
            Ok(if summary.has_infrastructure_failure() { EXIT_INFRASTRUCTURE } else { EXIT_OK })
        }
        Command::Report { json, dirs } => {
            let report = report::cmd_report(&dirs)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.render());
            }
            Ok(EXIT_OK)
        }
        Command::ExportPrompts { dir } => {
            PromptLibrary::builtin().write_dir(&dir)?;
            println!("wrote prompt library to {}", dir.display());
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_USAGE
        }
    }
}
