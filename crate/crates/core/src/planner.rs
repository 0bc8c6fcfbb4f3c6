//! Planning phase: stage planning prompts and operation-list parsing.
//!
//! Operation-list grammar, applied line by line after trimming:
//!
//! ```text
//! N. <text>      numbered item
//! - <text>       dashed item
//! <blank>        ignored
//! ```
//!
//! A single non-list line is tolerated as the first non-blank line
//! (a preamble such as "Here is the plan:"). A response consisting of the
//! word `None` yields an empty chain. Anything else is a parse error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{complete, Backend, CallKind, ChatExchange, GenerationLog, GenerationParams, LlmError};
use crate::prompts::{render, resolve_templates, stage_display, PromptError, PromptLibrary, Scenario};
use crate::stages::StageId;
use crate::table::TaskKind;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("unparseable plan: {0}")]
    Parse(String),
    #[error(transparent)]
    Backend(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Operation {
    /// 1-based.
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationChain {
    pub stage: StageId,
    pub operations: Vec<Operation>,
}

impl OperationChain {
    pub fn new<I, S>(stage: StageId, texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let operations = texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| Operation {
                index: i + 1,
                text: t.into(),
            })
            .collect();
        OperationChain { stage, operations }
    }

    pub fn len(&self) -> usize {
        self.operations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operations.is_empty()
    }

    /// Keeps the first `max` operations; returns how many were dropped.
    pub fn truncate(&mut self, max: usize) -> usize {
        let dropped = self.operations.len().saturating_sub(max);
        self.operations.truncate(max);
        dropped
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanPrompt {
    pub stage: StageId,
    pub table_markdown: String,
    pub query: Option<String>,
    /// Rendered table block and stage instruction.
    pub instruction: String,
    /// Rendered few-shot block.
    pub demos: String,
    pub system: String,
}

impl PlanPrompt {
    pub fn user_text(&self) -> String {
        format!("{}\n{}", self.demos, self.instruction)
    }

    pub fn exchange(&self) -> ChatExchange {
        ChatExchange::new(self.system.clone(), self.user_text())
    }
}

/// Inputs the planner reads from the live session.
#[derive(Debug, Clone, Copy)]
pub struct SessionView<'a> {
    pub sample_id: &'a str,
    pub kind: TaskKind,
    pub table_md: &'a str,
    pub query: &'a str,
}

pub fn build_plan_prompt(
    library: &PromptLibrary,
    stage: StageId,
    table_md: &str,
    query: &str,
    kind: TaskKind,
) -> Result<PlanPrompt, PlanError> {
    let spec = stage.spec();
    if !spec.is_planned() {
        return Err(PlanError::Config(format!("stage {stage} is not planned")));
    }
    if table_md.trim().is_empty() {
        return Err(PlanError::Config("empty table markdown".into()));
    }
    let composed = resolve_templates(library, stage, Scenario::Plan, kind)?;
    let stage_name = stage_display(stage);
    let instruction = render(
        &composed.text,
        &[
            ("table", table_md),
            ("query", query),
            ("stage", &stage_name),
            ("objective", spec.objective_text),
            ("stage_instruction", spec.instruction_text),
            ("note", spec.note_text),
        ],
    );
    Ok(PlanPrompt {
        stage,
        table_markdown: table_md.to_string(),
        query: spec.include_query_in_table_header.then(|| query.to_string()),
        instruction,
        demos: library.render_planning_demos(kind, stage),
        system: library.system(kind).to_string(),
    })
}

fn list_item(line: &str) -> Option<&str> {
    if let Some(rest) = line.strip_prefix('-') {
        return rest.starts_with(char::is_whitespace).then(|| rest.trim());
    }
    let digits = line.bytes().take_while(u8::is_ascii_digit).count();
    if digits == 0 {
        return None;
    }
    let rest = line[digits..].strip_prefix('.')?;
    rest.starts_with(char::is_whitespace).then(|| rest.trim())
}

fn is_none_sentinel(text: &str) -> bool {
    let t = text.trim();
    let t = t.strip_suffix('.').unwrap_or(t);
    t.eq_ignore_ascii_case("none")
}

pub fn parse_operation_list(stage: StageId, response: &str) -> Result<OperationChain, PlanError> {
    if is_none_sentinel(response) {
        return Ok(OperationChain::new(stage, Vec::<String>::new()));
    }
    let mut texts = Vec::new();
    let mut seen_content = false;
    for line in response.lines().map(str::trim).filter(|l| !l.is_empty()) {
        match list_item(line) {
            Some(text) if !text.is_empty() => texts.push(text.to_string()),
            Some(_) => return Err(PlanError::Parse(format!("empty operation in line {line:?}"))),
            None if !seen_content => {}
            None => return Err(PlanError::Parse(format!("unexpected line {line:?}"))),
        }
        seen_content = true;
    }
    if texts.is_empty() {
        return Err(PlanError::Parse(format!(
            "no operation list in response {:?}",
            excerpt(response)
        )));
    }
    Ok(OperationChain::new(stage, texts))
}

fn excerpt(text: &str) -> String {
    let t = text.trim();
    match t.char_indices().nth(80) {
        Some((i, _)) => format!("{}...", &t[..i]),
        None => t.to_string(),
    }
}

/// Renders a chain in the grammar [`parse_operation_list`] accepts.
pub fn render_chain(chain: &OperationChain) -> String {
    if chain.is_empty() {
        return "None".to_string();
    }
    chain
        .operations
        .iter()
        .map(|op| format!("{}. {}", op.index, op.text))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Result of one planning call.
#[derive(Debug, Clone)]
pub struct PlanOutcome {
    pub prompt: PlanPrompt,
    pub response: String,
    pub chain: OperationChain,
}

/// One Planning call on a fresh exchange, then parsing.
///
/// Backend errors are returned as is. A parse failure still carries the
/// prompt and response so they can be traced.
pub fn plan_stage(
    backend: &dyn Backend,
    library: &PromptLibrary,
    stage: StageId,
    view: &SessionView<'_>,
    params: &GenerationParams,
    log: &mut GenerationLog,
) -> Result<PlanOutcome, (PlanError, Option<(PlanPrompt, String)>)> {
    let prompt = build_plan_prompt(library, stage, view.table_md, view.query, view.kind)
        .map_err(|e| (e, None))?;
    let response = complete(
        backend,
        view.sample_id,
        stage,
        &prompt.exchange(),
        params,
        CallKind::Planning,
        log,
    )
    .map_err(|e| (PlanError::Backend(e), None))?;
    match parse_operation_list(stage, &response) {
        Ok(chain) => Ok(PlanOutcome {
            prompt,
            response,
            chain,
        }),
        Err(e) => Err((e, Some((prompt, response)))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ScriptedBackend;
    use proptest::prelude::*;

    const TABLE: &str = "| a |\n| --- |\n| 1 |";

    #[test]
    fn grammar_examples() {
        let chain = parse_operation_list(
            StageId::RowSelection,
            "1. Remove the summary row\n2. Keep rows for 2008",
        )
        .unwrap();
        assert_eq!(chain.len(), 2);
        assert_eq!(chain.operations[1].text, "Keep rows for 2008");

        assert!(parse_operation_list(StageId::RowSelection, "None").unwrap().is_empty());
        assert!(parse_operation_list(StageId::RowSelection, "  none.\n").unwrap().is_empty());

        assert!(matches!(
            parse_operation_list(StageId::Reasoning, "I think we should..."),
            Err(PlanError::Parse(_))
        ));
        assert!(parse_operation_list(StageId::Reasoning, "").is_err());
    }

    #[test]
    fn preamble_dashes_and_renumbering() {
        let chain = parse_operation_list(
            StageId::Reasoning,
            "Here is the plan:\n\n- filter rows\n3. count them\n\n7. print",
        )
        .unwrap();
        let idx: Vec<usize> = chain.operations.iter().map(|o| o.index).collect();
        assert_eq!(idx, [1, 2, 3]);
        assert_eq!(chain.operations[0].text, "filter rows");
    }

    #[test]
    fn rejects_stray_lines() {
        assert!(parse_operation_list(StageId::Reasoning, "Plan:\nAlso:\n1. x").is_err());
        assert!(parse_operation_list(StageId::Reasoning, "1. x\nthen something").is_err());
        assert!(parse_operation_list(StageId::Reasoning, "Here is the plan:").is_err());
        assert!(parse_operation_list(StageId::Reasoning, "1.x").is_err());
        assert!(parse_operation_list(StageId::Reasoning, "1.  \n").is_err());
        // "None" inside a list is an ordinary operation text.
        let chain = parse_operation_list(StageId::Reasoning, "1. None").unwrap();
        assert_eq!(chain.operations[0].text, "None");
    }

    #[test]
    fn reasoning_prompt_has_objective_and_question() {
        let lib = PromptLibrary::builtin();
        let p = build_plan_prompt(&lib, StageId::Reasoning, TABLE, "how many?", TaskKind::Qa).unwrap();
        let text = p.user_text();
        assert!(text.contains(StageId::Reasoning.spec().objective_text));
        assert!(text.contains("Question: how many?"));
        assert!(text.contains(TABLE));
        let demos_at = text.find("# Examples").unwrap();
        let table_at = text.find(TABLE).unwrap();
        let format_at = text.find("## Output format").unwrap();
        let note_at = text.find("## Note").unwrap();
        assert!(demos_at < table_at && table_at < format_at && format_at < note_at);
    }

    #[test]
    fn row_selection_prompt_hides_question() {
        let lib = PromptLibrary::builtin();
        let p = build_plan_prompt(&lib, StageId::RowSelection, TABLE, "how many?", TaskKind::Qa).unwrap();
        assert!(p.query.is_none());
        assert!(p.user_text().contains(TABLE));
        assert!(!p.user_text().contains("how many?"));
    }

    #[test]
    fn guards() {
        let lib = PromptLibrary::builtin();
        assert!(matches!(
            build_plan_prompt(&lib, StageId::FinalAnswering, TABLE, "q", TaskKind::Qa),
            Err(PlanError::Config(_))
        ));
        assert!(matches!(
            build_plan_prompt(&lib, StageId::Reasoning, "  ", "q", TaskKind::Qa),
            Err(PlanError::Config(_))
        ));
    }

    #[test]
    fn plan_stage_makes_one_call() {
        let lib = PromptLibrary::builtin();
        let backend = ScriptedBackend::queue(["1. a\n2. b\n3. c"]);
        let mut log = GenerationLog::new();
        let view = SessionView {
            sample_id: "s",
            kind: TaskKind::Qa,
            table_md: TABLE,
            query: "q",
        };
        let out = plan_stage(&backend, &lib, StageId::Reasoning, &view, &GenerationParams::default(), &mut log)
            .unwrap();
        assert_eq!(out.chain.len(), 3);
        assert_eq!(log.snapshot().planning, 1);
        let reqs = backend.requests();
        assert_eq!(reqs.len(), 1);
        assert_eq!(reqs[0].exchange.messages().len(), 2);
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(
            texts in prop::collection::vec("[a-zA-Z][a-zA-Z0-9 ,']{0,30}", 0..6)
        ) {
            let texts: Vec<String> = texts.into_iter().map(|t| t.trim().to_string()).collect();
            let chain = OperationChain::new(StageId::Reasoning, texts);
            let back = parse_operation_list(StageId::Reasoning, &render_chain(&chain)).unwrap();
            prop_assert_eq!(back, chain);
        }
    }
}
