//! The per-sample plan-then-execute loop and the batch runner.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::codegen::{
    build_codegen_prompt, build_regen_prompt, extract_code, initial_code, CodeBase, CodeCell, CodegenError,
    GenContext, FINAL_DIRECTIVE,
};
use crate::kernel::client::cell_id;
use crate::kernel::{KernelConfig, KernelError, KernelSession, StatusOutcome, TableStatus};
use crate::llm::{complete, Backend, CallCounts, CallKind, GenerationLog, GenerationParams};
use crate::planner::{plan_stage, PlanError, SessionView};
use crate::prompts::PromptLibrary;
use crate::stages::{stage_sequence, PipelineVariant, StageId};
use crate::table::{parse_markdown, AnswerKey, TaskKind, TaskSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Running,
    Answered,
    RetryExhausted,
    PlanParse,
    AnswerParse,
    Infrastructure,
}

impl SampleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SampleStatus::Running => "running",
            SampleStatus::Answered => "answered",
            SampleStatus::RetryExhausted => "retry_exhausted",
            SampleStatus::PlanParse => "plan_parse",
            SampleStatus::AnswerParse => "answer_parse",
            SampleStatus::Infrastructure => "infrastructure",
        }
    }
}

impl fmt::Display for SampleStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceKind {
    StageStart,
    PlanPrompt,
    PlanResponse,
    GenPrompt,
    GenResponse,
    ExecOk,
    ExecErr,
    Rollback,
    RegenPrompt,
    CellAccepted,
    StatusRefresh,
    FinalOutput,
    Warning,
    Finished,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub seq: u32,
    /// Milliseconds since the sample started.
    pub elapsed_ms: u64,
    pub kind: TraceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage: Option<StageId>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub payload: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Regenerations allowed per operation.
    pub up_limit: u32,
    /// Operations kept per planned stage; the rest are dropped with a warning.
    pub max_operations: usize,
    pub sample_budget: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { up_limit: 3, max_operations: 8, sample_budget: Duration::from_secs(600) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub variant: PipelineVariant,
    pub retry: RetryPolicy,
    pub kernel: KernelConfig,
    pub params: GenerationParams,
    /// Row cap for the table rendering shown in prompts.
    pub max_rows: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            variant: PipelineVariant::Original,
            retry: RetryPolicy::default(),
            kernel: KernelConfig::default(),
            params: GenerationParams::default(),
            max_rows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub sample_id: String,
    pub raw_output: String,
    pub predicted: AnswerKey,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correct: Option<bool>,
    pub counts: CallCounts,
}

#[derive(Debug, Clone)]
pub struct SampleOutcome {
    pub sample_id: String,
    pub status: SampleStatus,
    pub answer: Option<AnswerRecord>,
    pub counts: CallCounts,
    pub failure: Option<String>,
    pub code_base: CodeBase,
    pub trace: Vec<TraceEvent>,
    /// Kernel table state when the run ended, if the kernel was reachable.
    pub final_table: Option<TableStatus>,
}

/// Maps printed output to an answer.
pub fn parse_predicted(raw_output: &str, kind: TaskKind) -> Result<AnswerKey, String> {
    let raw = raw_output.trim();
    if raw.is_empty() {
        return Err("empty output".into());
    }
    match kind {
        TaskKind::Qa => {
            let items: Vec<String> = raw
                .split(['\n', '|'])
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect();
            if items.is_empty() {
                return Err("no answer items".into());
            }
            Ok(AnswerKey::Denotations(items))
        }
        TaskKind::FactVerification => match raw.to_lowercase().as_str() {
            "true" | "yes" | "1" | "entailed" => Ok(AnswerKey::Label(1)),
            "false" | "no" | "0" | "refuted" => Ok(AnswerKey::Label(0)),
            other => Err(format!("not a verdict: {other:?}")),
        },
    }
}

struct Stop(SampleStatus, String);

impl From<KernelError> for Stop {
    fn from(e: KernelError) -> Self {
        Stop(SampleStatus::Infrastructure, e.to_string())
    }
}

struct Run<'a> {
    sample: &'a TaskSample,
    config: &'a EngineConfig,
    backend: &'a dyn Backend,
    library: &'a PromptLibrary,
    started: Instant,
    trace: Vec<TraceEvent>,
    log: GenerationLog,
    code_base: CodeBase,
    table_md: String,
}

impl Run<'_> {
    fn emit(&mut self, kind: TraceKind, stage: Option<StageId>, payload: &[(&str, String)]) {
        self.trace.push(TraceEvent {
            seq: self.trace.len() as u32,
            elapsed_ms: self.started.elapsed().as_millis() as u64,
            kind,
            stage,
            payload: payload.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
        });
    }

    fn check_budget(&self) -> Result<(), Stop> {
        if self.started.elapsed() > self.config.retry.sample_budget {
            return Err(Stop(
                SampleStatus::Infrastructure,
                format!("sample budget of {} s exceeded", self.config.retry.sample_budget.as_secs()),
            ));
        }
        Ok(())
    }

    fn render(&self, markdown: &str) -> String {
        match self.config.max_rows {
            Some(n) => parse_markdown(markdown).map_or_else(|_| markdown.to_string(), |t| t.to_markdown(Some(n))),
            None => markdown.to_string(),
        }
    }

    fn accept(&mut self, cell: CodeCell, status: TableStatus) {
        let id = cell_id(&cell).to_string();
        self.emit(TraceKind::CellAccepted, Some(cell.stage), &[("cell_id", id), ("code", cell.text())]);
        let stage = cell.stage;
        self.code_base.push(cell);
        self.table_md = self.render(&status.markdown);
        self.emit(
            TraceKind::StatusRefresh,
            Some(stage),
            &[("digest", status.digest), ("markdown", status.markdown)],
        );
    }

    /// Executes a cell and probes the table; a missing table counts as an
    /// execution error.
    fn execute(&mut self, session: &mut KernelSession, cell: &CodeCell) -> Result<Result<(String, TableStatus), (String, String)>, Stop> {
        let outcome = session.execute_cell(cell)?;
        if let Err(e) = outcome.result {
            return Ok(Err((e, outcome.stdout)));
        }
        match session.current_table_status()? {
            StatusOutcome::Ready(status) => Ok(Ok((outcome.stdout, status))),
            StatusOutcome::Missing(m) => Ok(Err((m, outcome.stdout))),
        }
    }

    fn run_operation(
        &mut self,
        session: &mut KernelSession,
        stage: StageId,
        index: Option<usize>,
        operation: &str,
    ) -> Result<(), Stop> {
        self.check_budget()?;
        let sample = self.sample;
        let gen_err = |e: CodegenError| Stop(SampleStatus::Infrastructure, e.to_string());
        let exchange = {
            let ctx = GenContext {
                stage,
                operation,
                code_base: &self.code_base,
                table_md: &self.table_md,
                query: &sample.query,
                kind: sample.kind,
            };
            build_codegen_prompt(self.library, &ctx).map_err(gen_err)?
        };
        let op_label = index.map_or_else(|| "0".to_string(), |i| i.to_string());
        self.emit(
            TraceKind::GenPrompt,
            Some(stage),
            &[("operation", op_label.clone()), ("prompt", exchange.user_prompt().to_string())],
        );
        let mut response = self.call(stage, &exchange, CallKind::CodeGeneration)?;
        let mut error_count = 0u32;
        let mut attempt = 1u32;
        loop {
            self.emit(TraceKind::GenResponse, Some(stage), &[("attempt", attempt.to_string()), ("response", response.clone())]);
            let (code, result) = match extract_code(&response) {
                Ok(code) => {
                    let cell = CodeCell::new(stage, index, operation, code.clone(), attempt);
                    let result = self.execute(session, &cell)?;
                    if let Ok((stdout, status)) = result {
                        self.emit(
                            TraceKind::ExecOk,
                            Some(stage),
                            &[("cell_id", cell_id(&cell).to_string()), ("stdout", stdout)],
                        );
                        self.accept(cell, status);
                        return Ok(());
                    }
                    (code, result.map(|_| ()))
                }
                Err(e) => (String::new(), Err((e.to_string(), String::new()))),
            };
            let Err((error, stdout)) = result else { unreachable!() };
            self.emit(
                TraceKind::ExecErr,
                Some(stage),
                &[("attempt", attempt.to_string()), ("error", error.clone()), ("stdout", stdout)],
            );
            session.restart_and_replay(&self.code_base)?;
            self.emit(TraceKind::Rollback, Some(stage), &[("replayed_cells", self.code_base.len().to_string())]);
            if error_count >= self.config.retry.up_limit {
                return Err(Stop(
                    SampleStatus::RetryExhausted,
                    format!("{stage} operation {op_label} failed {} times: {error}", error_count + 1),
                ));
            }
            self.check_budget()?;
            let exchange = {
                let ctx = GenContext {
                    stage,
                    operation,
                    code_base: &self.code_base,
                    table_md: &self.table_md,
                    query: &sample.query,
                    kind: sample.kind,
                };
                build_regen_prompt(self.library, &ctx, &code, &error).map_err(gen_err)?
            };
            self.emit(
                TraceKind::RegenPrompt,
                Some(stage),
                &[("operation", op_label.clone()), ("prompt", exchange.user_prompt().to_string())],
            );
            response = self.call(stage, &exchange, CallKind::ReGeneration)?;
            error_count += 1;
            attempt += 1;
        }
    }

    fn call(&mut self, stage: StageId, exchange: &crate::llm::ChatExchange, kind: CallKind) -> Result<String, Stop> {
        complete(self.backend, &self.sample.id, stage, exchange, &self.config.params, kind, &mut self.log)
            .map_err(|e| Stop(SampleStatus::Infrastructure, e.to_string()))
    }

    fn plan(&mut self, stage: StageId) -> Result<Vec<(Option<usize>, String)>, Stop> {
        self.check_budget()?;
        let sample = self.sample;
        let view = SessionView { sample_id: &sample.id, kind: sample.kind, table_md: &self.table_md, query: &sample.query };
        let result = plan_stage(self.backend, self.library, stage, &view, &self.config.params, &mut self.log);
        match result {
            Ok(outcome) => {
                self.emit(TraceKind::PlanPrompt, Some(stage), &[("prompt", outcome.prompt.user_text())]);
                self.emit(TraceKind::PlanResponse, Some(stage), &[("response", outcome.response.clone())]);
                let mut chain = outcome.chain;
                let dropped = chain.truncate(self.config.retry.max_operations);
                if dropped > 0 {
                    self.emit(
                        TraceKind::Warning,
                        Some(stage),
                        &[("message", format!("plan truncated to {} operations, {dropped} dropped", chain.len()))],
                    );
                }
                Ok(chain.operations.into_iter().map(|o| (Some(o.index), o.text)).collect())
            }
            Err((e, context)) => {
                if let Some((prompt, response)) = context {
                    self.emit(TraceKind::PlanPrompt, Some(stage), &[("prompt", prompt.user_text())]);
                    self.emit(TraceKind::PlanResponse, Some(stage), &[("response", response)]);
                }
                let status = match e {
                    PlanError::Parse(_) => SampleStatus::PlanParse,
                    _ => SampleStatus::Infrastructure,
                };
                Err(Stop(status, e.to_string()))
            }
        }
    }

    fn drive(&mut self, session: &mut KernelSession) -> Result<AnswerRecord, Stop> {
        let init = initial_code(&self.sample.table);
        self.emit(TraceKind::StageStart, Some(StageId::Initialization), &[]);
        match self.execute(session, &init)? {
            Ok((stdout, status)) => {
                self.emit(TraceKind::ExecOk, Some(StageId::Initialization), &[("cell_id", cell_id(&init).to_string()), ("stdout", stdout)]);
                self.accept(init, status);
            }
            Err((e, _)) => return Err(Stop(SampleStatus::Infrastructure, format!("initialization failed: {e}"))),
        }
        for stage in stage_sequence(&self.config.variant) {
            if stage == StageId::Initialization {
                continue;
            }
            self.emit(TraceKind::StageStart, Some(stage), &[]);
            let operations = if stage.spec().is_planned() {
                self.plan(stage)?
            } else {
                vec![(None, FINAL_DIRECTIVE.to_string())]
            };
            for (index, text) in operations {
                self.run_operation(session, stage, index, &text)?;
            }
        }
        let raw = match session.program_output(StageId::FinalAnswering) {
            Ok(text) => text,
            Err(KernelError::EmptyOutput(_)) => {
                return Err(Stop(SampleStatus::AnswerParse, "final answering printed nothing".into()))
            }
            Err(e) => return Err(e.into()),
        };
        self.emit(TraceKind::FinalOutput, Some(StageId::FinalAnswering), &[("text", raw.clone())]);
        let predicted = parse_predicted(&raw, self.sample.kind).map_err(|e| Stop(SampleStatus::AnswerParse, e))?;
        Ok(AnswerRecord {
            sample_id: self.sample.id.clone(),
            raw_output: raw,
            predicted,
            correct: None,
            counts: self.log.snapshot(),
        })
    }
}

/// Runs one sample end to end in its own kernel session.
pub fn run_sample(
    sample: &TaskSample,
    config: &EngineConfig,
    backend: &dyn Backend,
    library: &PromptLibrary,
) -> SampleOutcome {
    let mut run = Run {
        sample,
        config,
        backend,
        library,
        started: Instant::now(),
        trace: Vec::new(),
        log: GenerationLog::new(),
        code_base: CodeBase::new(),
        table_md: sample.table.to_markdown(config.max_rows),
    };
    let (status, answer, failure, final_table) = match KernelSession::start(config.kernel.clone()) {
        Err(e) => (SampleStatus::Infrastructure, None, Some(e.to_string()), None),
        Ok(mut session) => {
            let result = run.drive(&mut session);
            let final_table = match session.current_table_status() {
                Ok(StatusOutcome::Ready(s)) => Some(s),
                _ => None,
            };
            session.shutdown();
            match result {
                Ok(answer) => (SampleStatus::Answered, Some(answer), None, final_table),
                Err(Stop(status, msg)) => (status, None, Some(msg), final_table),
            }
        }
    };
    let mut payload = vec![("status", status.to_string())];
    if let Some(f) = &failure {
        payload.push(("failure", f.clone()));
    }
    run.emit(TraceKind::Finished, None, &payload);
    if let Some(f) = &failure {
        log::info!("sample {} ended {status}: {f}", sample.id);
    }
    SampleOutcome {
        sample_id: sample.id.clone(),
        status,
        answer,
        counts: run.log.snapshot(),
        failure,
        code_base: run.code_base,
        trace: run.trace,
        final_table,
    }
}

/// Runs samples on up to `concurrency` worker threads. Results keep input
/// order; `on_done` sees each outcome as soon as it is available.
pub fn run_batch_with(
    samples: &[TaskSample],
    config: &EngineConfig,
    backend: &dyn Backend,
    library: &PromptLibrary,
    concurrency: usize,
    on_done: &(dyn Fn(&TaskSample, &SampleOutcome) + Sync),
) -> Vec<SampleOutcome> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<SampleOutcome>>> = Mutex::new(vec![None; samples.len()]);
    let workers = concurrency.max(1).min(samples.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(sample) = samples.get(i) else { break };
                let outcome = run_sample(sample, config, backend, library);
                on_done(sample, &outcome);
                slots.lock().expect("result slots")[i] = Some(outcome);
            });
        }
    });
    slots
        .into_inner()
        .expect("result slots")
        .into_iter()
        .map(|o| o.expect("every sample ran"))
        .collect()
}

pub fn run_batch(
    samples: &[TaskSample],
    config: &EngineConfig,
    backend: &dyn Backend,
    library: &PromptLibrary,
    concurrency: usize,
) -> Vec<SampleOutcome> {
    run_batch_with(samples, config, backend, library, concurrency, &|_, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn verdict_parsing() {
        assert_eq!(parse_predicted("True", TaskKind::FactVerification), Ok(AnswerKey::Label(1)));
        assert_eq!(parse_predicted(" refuted\n", TaskKind::FactVerification), Ok(AnswerKey::Label(0)));
        assert!(parse_predicted("maybe", TaskKind::FactVerification).is_err());
        assert_eq!(
            parse_predicted("Paris\nLondon", TaskKind::Qa),
            Ok(AnswerKey::Denotations(vec!["Paris".into(), "London".into()]))
        );
        assert_eq!(
            parse_predicted("a | b", TaskKind::Qa),
            Ok(AnswerKey::Denotations(vec!["a".into(), "b".into()]))
        );
        assert!(parse_predicted("  ", TaskKind::Qa).is_err());
    }
}
