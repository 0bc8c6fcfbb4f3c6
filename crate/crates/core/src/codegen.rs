//! Code cells, the accepted code base, codegen/regeneration prompts and
//! code extraction from model responses.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::ChatExchange;
use crate::prompts::{render, resolve_templates, stage_display, PromptError, PromptLibrary, Scenario};
use crate::stages::StageId;
use crate::table::{Table, TaskKind};

/// Operation text used for the unplanned final answering stage.
pub const FINAL_DIRECTIVE: &str = "print the final answer derived from the intermediate results";

const INIT_HEADER: &str = "# [initialization] load the table into df";

#[derive(Debug, Error)]
pub enum CodegenError {
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("empty generation")]
    EmptyGeneration,
    #[error("precondition violated: {0}")]
    Precondition(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCell {
    pub stage: StageId,
    pub operation_index: Option<usize>,
    pub source_text: String,
    /// 1 for the first generation, then one more per regeneration.
    pub attempt: u32,
    pub comment_header: String,
}

impl CodeCell {
    pub fn new(
        stage: StageId,
        operation_index: Option<usize>,
        operation_text: &str,
        source_text: String,
        attempt: u32,
    ) -> Self {
        CodeCell {
            stage,
            operation_index,
            source_text,
            attempt,
            comment_header: comment_header(stage, operation_index, operation_text),
        }
    }

    /// Header line followed by the source.
    pub fn text(&self) -> String {
        format!("{}\n{}", self.comment_header, self.source_text)
    }
}

pub fn comment_header(stage: StageId, operation_index: Option<usize>, operation_text: &str) -> String {
    let text = operation_text.split_whitespace().collect::<Vec<_>>().join(" ");
    match operation_index {
        Some(i) => format!("# [{stage}] {i}. {text}"),
        None => format!("# [{stage}] {text}"),
    }
}

/// Accepted cells in acceptance order; append-only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeBase {
    cells: Vec<CodeCell>,
}

impl CodeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, cell: CodeCell) {
        self.cells.push(cell);
    }

    pub fn cells(&self) -> &[CodeCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// The whole program: every cell with its header, in order.
    pub fn program(&self) -> String {
        self.cells
            .iter()
            .map(CodeCell::text)
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// The fixed loading snippet. JSON list literals are valid Python.
pub fn initial_code(table: &Table) -> CodeCell {
    let data = serde_json::to_string(table.rows()).expect("strings serialize");
    let columns = serde_json::to_string(table.columns()).expect("strings serialize");
    CodeCell {
        stage: StageId::Initialization,
        operation_index: None,
        source_text: format!("import pandas as pd\ndf = pd.DataFrame(data={data}, columns={columns})"),
        attempt: 1,
        comment_header: INIT_HEADER.to_string(),
    }
}

/// Context shared by codegen and regeneration prompts.
#[derive(Debug, Clone, Copy)]
pub struct GenContext<'a> {
    pub stage: StageId,
    pub operation: &'a str,
    pub code_base: &'a CodeBase,
    pub table_md: &'a str,
    pub query: &'a str,
    pub kind: TaskKind,
}

fn compose(
    library: &PromptLibrary,
    ctx: &GenContext<'_>,
    scenario: Scenario,
    failed: Option<(&str, &str)>,
) -> Result<ChatExchange, CodegenError> {
    let composed = resolve_templates(library, ctx.stage, scenario, ctx.kind)?;
    let program = ctx.code_base.program();
    let stage_name = stage_display(ctx.stage);
    let (failed_code, error) = failed.unwrap_or(("", ""));
    let body = render(
        &composed.text,
        &[
            ("table", ctx.table_md),
            ("query", ctx.query),
            ("stage", &stage_name),
            ("code_base", &program),
            ("operation", ctx.operation),
            ("failed_code", failed_code),
            ("error", error),
        ],
    );
    let user = match composed.demos {
        Some(_) => format!("{}\n{}", library.render_final_demos(ctx.kind), body),
        None => body,
    };
    Ok(ChatExchange::new(library.system(ctx.kind), user))
}

pub fn build_codegen_prompt(
    library: &PromptLibrary,
    ctx: &GenContext<'_>,
) -> Result<ChatExchange, CodegenError> {
    let scenario = if ctx.stage == StageId::FinalAnswering {
        Scenario::FinalGenerate
    } else {
        Scenario::Generate
    };
    compose(library, ctx, scenario, None)
}

pub fn build_regen_prompt(
    library: &PromptLibrary,
    ctx: &GenContext<'_>,
    failed_code: &str,
    error_text: &str,
) -> Result<ChatExchange, CodegenError> {
    if error_text.trim().is_empty() {
        return Err(CodegenError::Precondition("empty error text".into()));
    }
    let scenario = if ctx.stage == StageId::FinalAnswering {
        Scenario::FinalRegenerate
    } else {
        Scenario::Regenerate
    };
    compose(library, ctx, scenario, Some((failed_code, error_text)))
}

/// Concatenates fenced blocks in order; without fences, the trimmed
/// response itself.
pub fn extract_code(response: &str) -> Result<String, CodegenError> {
    let mut blocks: Vec<String> = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in response.lines() {
        let fence = line.trim_start().starts_with("```");
        match (&mut current, fence) {
            (None, true) => current = Some(Vec::new()),
            (Some(lines), true) => {
                blocks.push(lines.join("\n"));
                current = None;
            }
            (Some(lines), false) => lines.push(line),
            (None, false) => {}
        }
    }
    if let Some(lines) = current {
        blocks.push(lines.join("\n"));
    }
    let code = if blocks.is_empty() {
        response.trim().to_string()
    } else {
        blocks
            .iter()
            .map(|b| b.trim_matches('\n'))
            .filter(|b| !b.trim().is_empty())
            .collect::<Vec<_>>()
            .join("\n")
    };
    if code.trim().is_empty() {
        return Err(CodegenError::EmptyGeneration);
    }
    Ok(code)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> Table {
        Table::new(vec!["a".into(), "b".into()], vec![vec!["1".into(), "2".into()]]).unwrap()
    }

    #[test]
    fn initial_snippet() {
        let cell = initial_code(&table());
        assert_eq!(
            cell.source_text,
            "import pandas as pd\ndf = pd.DataFrame(data=[[\"1\",\"2\"]], columns=[\"a\",\"b\"])"
        );
        assert_eq!(cell.attempt, 1);
        assert_eq!(cell.stage, StageId::Initialization);
        assert!(cell.text().starts_with("# "));

        let empty = Table::new(vec!["a".into()], vec![]).unwrap();
        assert!(initial_code(&empty).source_text.ends_with("data=[], columns=[\"a\"])"));

        let quoted = Table::new(vec!["q\"x".into()], vec![vec!["it's \"x\"\\".into()]]).unwrap();
        assert!(initial_code(&quoted)
            .source_text
            .contains(r#"data=[["it's \"x\"\\"]], columns=["q\"x"]"#));
        assert_eq!(initial_code(&quoted), initial_code(&quoted));
    }

    #[test]
    fn headers() {
        let cell = CodeCell::new(StageId::Reasoning, Some(2), "count\n rows", "n = 1".into(), 1);
        assert_eq!(cell.comment_header, "# [reasoning] 2. count rows");
        let fin = CodeCell::new(StageId::FinalAnswering, None, FINAL_DIRECTIVE, "print(1)".into(), 1);
        assert_eq!(
            fin.text(),
            "# [final_answering] print the final answer derived from the intermediate results\nprint(1)"
        );
    }

    #[test]
    fn extraction() {
        assert_eq!(extract_code("here:\n```python\nx=1\n```\nthanks").unwrap(), "x=1");
        assert_eq!(extract_code("use a filter").unwrap(), "use a filter");
        assert!(matches!(extract_code("  \n"), Err(CodegenError::EmptyGeneration)));
        assert!(matches!(extract_code("```\n\n```"), Err(CodegenError::EmptyGeneration)));
        assert_eq!(
            extract_code("```python\nimport re\n```\nthen\n```\ny = 2\n```").unwrap(),
            "import re\ny = 2"
        );
        assert_eq!(extract_code("```python\nz = 3\n").unwrap(), "z = 3");
    }

    fn base_with_two() -> CodeBase {
        let mut base = CodeBase::new();
        base.push(initial_code(&table()));
        base.push(CodeCell::new(StageId::Reasoning, Some(1), "op one", "first = 1".into(), 1));
        base
    }

    #[test]
    fn codegen_prompt_embeds_code_base_in_order() {
        let lib = PromptLibrary::builtin();
        let base = base_with_two();
        let ctx = GenContext {
            stage: StageId::Reasoning,
            operation: "sum the column",
            code_base: &base,
            table_md: "| a |\n| --- |\n| 1 |",
            query: "what total?",
            kind: TaskKind::Qa,
        };
        let user = build_codegen_prompt(&lib, &ctx).unwrap().user_prompt().to_string();
        let first = user.find(&base.cells()[0].text()).unwrap();
        let second = user.find(&base.cells()[1].text()).unwrap();
        assert!(first < second);
        assert!(user.contains("sum the column"));
        assert!(user.contains("Question: what total?"));
        assert!(!user.contains("# Examples"));
    }

    #[test]
    fn row_selection_codegen_hides_question() {
        let lib = PromptLibrary::builtin();
        let base = base_with_two();
        let ctx = GenContext {
            stage: StageId::RowSelection,
            operation: "drop totals",
            code_base: &base,
            table_md: "| a |\n| --- |\n| 1 |",
            query: "SECRET QUESTION",
            kind: TaskKind::Qa,
        };
        let user = build_codegen_prompt(&lib, &ctx).unwrap().user_prompt().to_string();
        assert!(!user.contains("SECRET QUESTION"));
        assert!(user.contains("| a |"));
    }

    #[test]
    fn final_prompts() {
        let lib = PromptLibrary::builtin();
        let base = base_with_two();
        let ctx = GenContext {
            stage: StageId::FinalAnswering,
            operation: FINAL_DIRECTIVE,
            code_base: &base,
            table_md: "| a |\n| --- |\n| 1 |",
            query: "q",
            kind: TaskKind::Qa,
        };
        let user = build_codegen_prompt(&lib, &ctx).unwrap().user_prompt().to_string();
        assert_eq!(user.matches("## Example ").count(), 3);
        assert!(user.contains(FINAL_DIRECTIVE));

        let regen = build_regen_prompt(&lib, &ctx, "print(missing)", "NameError: name 'missing' is not defined")
            .unwrap();
        let text = regen.user_prompt();
        assert!(text.contains("print(missing)"));
        assert!(text.contains("NameError: name 'missing' is not defined"));
        assert!(text.contains("The final answering code below raised an error"));
    }

    #[test]
    fn regen_includes_codegen_content_and_failure() {
        let lib = PromptLibrary::builtin();
        let base = base_with_two();
        let ctx = GenContext {
            stage: StageId::DataTypeCleaning,
            operation: "convert a",
            code_base: &base,
            table_md: "| a |\n| --- |\n| 1 |",
            query: "q?",
            kind: TaskKind::FactVerification,
        };
        let text = build_regen_prompt(&lib, &ctx, "df['a'] = int(df)", "TypeError: bad (line 1: x)")
            .unwrap()
            .user_prompt()
            .to_string();
        for needle in [
            "| a |",
            "Statement: q?",
            "convert a",
            base.program().as_str(),
            "df['a'] = int(df)",
            "TypeError: bad (line 1: x)",
        ] {
            assert!(text.contains(needle), "missing {needle}");
        }
        assert!(matches!(
            build_regen_prompt(&lib, &ctx, "x", " "),
            Err(CodegenError::Precondition(_))
        ));
    }
}
