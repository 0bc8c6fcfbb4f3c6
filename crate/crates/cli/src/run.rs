//! `run`: executes a batch and writes traces, answers and a summary.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use stagewise::dataset::interchange::read_interchange_file;
use stagewise::engine::{parse_predicted, run_batch_with, AnswerRecord, SampleOutcome, SampleStatus, TraceEvent, TraceKind};
use stagewise::eval::{accuracy, score, Accuracy, SampleResult};
use stagewise::llm::CallCounts;
use stagewise::table::TaskSample;

use crate::config::RunConfig;

pub const CONFIG_FILE: &str = "config.json";
pub const ANSWERS_FILE: &str = "answers.jsonl";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_DIR: &str = "traces";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    #[serde(flatten)]
    pub result: SampleResult,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub variant: String,
    pub split: String,
    pub accuracy: Accuracy,
    pub results: Vec<SummaryRow>,
}

impl RunSummary {
    pub fn results(&self) -> Vec<SampleResult> {
        self.results.iter().map(|r| r.result.clone()).collect()
    }

    pub fn has_infrastructure_failure(&self) -> bool {
        self.results.iter().any(|r| r.result.status == SampleStatus::Infrastructure)
    }

    pub fn load(dir: &Path) -> Result<RunSummary> {
        let path = dir.join(SUMMARY_FILE);
        let text = fs::read_to_string(&path).with_context(|| format!("missing summary {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// What one sample contributes to the run files.
#[derive(Debug, Clone)]
struct Finished {
    status: SampleStatus,
    counts: CallCounts,
    failure: Option<String>,
    answer: Option<AnswerRecord>,
}

impl From<&SampleOutcome> for Finished {
    fn from(o: &SampleOutcome) -> Self {
        Finished { status: o.status, counts: o.counts, failure: o.failure.clone(), answer: o.answer.clone() }
    }
}

pub fn trace_path(out: &Path, sample_id: &str) -> PathBuf {
    out.join(TRACE_DIR).join(format!("{sample_id}.trace.jsonl"))
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceEvent>> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .map(|(i, line)| {
            let line = line?;
            serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn write_trace(path: &Path, trace: &[TraceEvent]) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    let mut buf = Vec::new();
    for event in trace {
        serde_json::to_writer(&mut buf, event)?;
        buf.push(b'\n');
    }
    fs::write(&tmp, buf).with_context(|| format!("writing {}", tmp.display()))?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Rebuilds an answered sample from its trace alone. `None` when the trace
/// does not end in an answered `Finished` event.
pub fn answer_from_trace(sample: &TaskSample, trace: &[TraceEvent]) -> Option<AnswerRecord> {
    let last = trace.last()?;
    if last.kind != TraceKind::Finished || last.payload.get("status").map(String::as_str) != Some("answered") {
        return None;
    }
    let raw = trace.iter().rev().find(|e| e.kind == TraceKind::FinalOutput)?.payload.get("text")?.clone();
    let count = |k: TraceKind| trace.iter().filter(|e| e.kind == k).count() as u32;
    let counts = CallCounts {
        planning: count(TraceKind::PlanPrompt),
        codegen: count(TraceKind::GenPrompt),
        regen: count(TraceKind::RegenPrompt),
    };
    let predicted = parse_predicted(&raw, sample.kind).ok()?;
    Some(AnswerRecord { sample_id: sample.id.clone(), raw_output: raw, predicted, correct: None, counts })
}

fn load_samples(cfg: &RunConfig) -> Result<Vec<TaskSample>> {
    let Some(data) = &cfg.data else { bail!("no dataset given (--data or `data` in the config file)") };
    let mut samples = read_interchange_file(data)?;
    if let Some(n) = cfg.limit {
        samples.truncate(n);
    }
    if samples.is_empty() {
        bail!("{} contains no samples", data.display());
    }
    let mut seen = std::collections::HashSet::new();
    for s in &samples {
        if !seen.insert(s.id.as_str()) {
            bail!("duplicate sample id '{}' in {}", s.id, data.display());
        }
        if s.id.contains(['/', '\\']) || s.id.starts_with('.') {
            bail!("sample id '{}' cannot name a trace file", s.id);
        }
    }
    Ok(samples)
}

fn has_run_files(out: &Path) -> bool {
    out.join(SUMMARY_FILE).exists() || out.join(ANSWERS_FILE).exists() || out.join(TRACE_DIR).exists()
}

/// Executes the configured run. With `resume`, samples whose trace already
/// ends answered are kept and only the rest are executed again.
pub fn cmd_run(cfg: &RunConfig, resume: bool) -> Result<RunSummary> {
    let engine = cfg.engine_config()?;
    let Some(out) = cfg.out.clone() else { bail!("no output directory given (--out or `out` in the config file)") };
    let samples = load_samples(cfg)?;
    let library = cfg.library()?;
    let backend = cfg.backend()?;

    if has_run_files(&out) && !resume {
        bail!("{} already holds a run; pass --resume or choose another directory", out.display());
    }
    fs::create_dir_all(out.join(TRACE_DIR)).with_context(|| format!("creating {}", out.display()))?;
    if resume {
        if let Ok(text) = fs::read_to_string(out.join(CONFIG_FILE)) {
            if serde_json::from_str::<RunConfig>(&text).ok().as_ref() != Some(cfg) {
                log::warn!("resuming with a configuration that differs from {}", CONFIG_FILE);
            }
        }
    }
    fs::write(out.join(CONFIG_FILE), serde_json::to_string_pretty(cfg)? + "\n")?;

    let mut done: BTreeMap<String, Finished> = BTreeMap::new();
    if resume {
        for s in &samples {
            let path = trace_path(&out, &s.id);
            let Ok(trace) = read_trace(&path) else { continue };
            if let Some(answer) = answer_from_trace(s, &trace) {
                let finished = Finished { status: SampleStatus::Answered, counts: answer.counts, failure: None, answer: Some(answer) };
                done.insert(s.id.clone(), finished);
            }
        }
        log::info!("resume: {} of {} samples already answered", done.len(), samples.len());
    }
    let pending: Vec<TaskSample> = samples.iter().filter(|s| !done.contains_key(&s.id)).cloned().collect();

    let total = pending.len();
    let finished_count = AtomicUsize::new(0);
    let write_errors = std::sync::Mutex::new(Vec::new());
    let on_done = |sample: &TaskSample, outcome: &SampleOutcome| {
        let n = finished_count.fetch_add(1, Ordering::SeqCst) + 1;
        log::info!("[{n}/{total}] {} {}", sample.id, outcome.status);
        if let Err(e) = write_trace(&trace_path(&out, &sample.id), &outcome.trace) {
            write_errors.lock().unwrap().push(format!("{e:#}"));
        }
    };
    let outcomes = run_batch_with(&pending, &engine, backend.as_ref(), &library, cfg.concurrency, &on_done);
    if let Some(e) = write_errors.into_inner().unwrap().into_iter().next() {
        bail!("writing traces: {e}");
    }
    for o in &outcomes {
        done.insert(o.sample_id.clone(), Finished::from(o));
    }

    let mut answers = Vec::new();
    let mut rows = Vec::new();
    for s in &samples {
        let f = &done[&s.id];
        let correct = score(f.answer.as_ref().map(|a| &a.predicted), &s.gold);
        if let Some(a) = &f.answer {
            let record = AnswerRecord { correct: Some(correct), ..a.clone() };
            serde_json::to_writer(&mut answers, &record)?;
            answers.push(b'\n');
        }
        rows.push(SummaryRow {
            result: SampleResult {
                sample_id: s.id.clone(),
                status: f.status,
                correct,
                counts: f.counts,
                difficulty: s.difficulty_or_rule(cfg.length_measure),
                size_group: s.size_group(),
            },
            failure: f.failure.clone(),
        });
    }
    fs::File::create(out.join(ANSWERS_FILE))?.write_all(&answers)?;
    let results: Vec<SampleResult> = rows.iter().map(|r| r.result.clone()).collect();
    let summary = RunSummary {
        variant: engine.variant.name(),
        split: samples[0].split.clone(),
        accuracy: accuracy(&results),
        results: rows,
    };
    fs::write(out.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(summary)
}
