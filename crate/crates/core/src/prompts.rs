//! Prompt templates, few-shot demos and the stage/scenario composition map.
//!
//! Template texts live in a directory tree (one file per slot) and can be
//! edited without rebuilding; the built-in copy is embedded at compile time.
//! Which slots combine for a given stage and scenario is decided in code by
//! [`resolve_templates`].
//!
//! ```text
//! <kind>/system.txt
//! <kind>/table/with_query.txt
//! <kind>/table/without_query.txt
//! <kind>/<stage>/plan.txt
//! <kind>/<stage>/generate.txt
//! <kind>/shared/regenerate.txt
//! <kind>/final_answering/final_generate.txt
//! <kind>/final_answering/final_regenerate.txt
//! demos/planning/<kind>_{1,2,3}.txt
//! demos/final_answer/<kind>_{1,2,3}.txt
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::stages::StageId;
use crate::table::TaskKind;

pub const DEMOS_PER_SET: usize = 3;

const KINDS: [TaskKind; 2] = [TaskKind::Qa, TaskKind::FactVerification];

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("missing prompt file {}", .0.display())]
    Missing(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("prompt template {path}: {msg}")]
    Invalid { path: String, msg: String },
    #[error("no {scenario} template for stage {stage}")]
    IllegalScenario { stage: StageId, scenario: Scenario },
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    Plan,
    Generate,
    Regenerate,
    FinalGenerate,
    FinalRegenerate,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Plan => "plan",
            Scenario::Generate => "generate",
            Scenario::Regenerate => "regenerate",
            Scenario::FinalGenerate => "final_generate",
            Scenario::FinalRegenerate => "final_regenerate",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableBlock {
    WithQuery,
    WithoutQuery,
}

/// One template file of a task kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    System,
    Table(TableBlock),
    Plan(StageId),
    Generate(StageId),
    Regenerate,
    FinalGenerate,
    FinalRegenerate,
}

impl Slot {
    fn all() -> Vec<Slot> {
        let mut slots = vec![
            Slot::System,
            Slot::Table(TableBlock::WithQuery),
            Slot::Table(TableBlock::WithoutQuery),
        ];
        for stage in PLANNED_STAGES {
            slots.push(Slot::Plan(stage));
        }
        for stage in GENERATED_STAGES {
            slots.push(Slot::Generate(stage));
        }
        slots.extend([Slot::Regenerate, Slot::FinalGenerate, Slot::FinalRegenerate]);
        slots
    }

    pub fn relative_path(self, kind: TaskKind) -> String {
        let k = kind.as_str();
        match self {
            Slot::System => format!("{k}/system.txt"),
            Slot::Table(TableBlock::WithQuery) => format!("{k}/table/with_query.txt"),
            Slot::Table(TableBlock::WithoutQuery) => format!("{k}/table/without_query.txt"),
            Slot::Plan(stage) => format!("{k}/{stage}/plan.txt"),
            Slot::Generate(stage) => format!("{k}/{stage}/generate.txt"),
            Slot::Regenerate => format!("{k}/shared/regenerate.txt"),
            Slot::FinalGenerate => format!("{k}/final_answering/final_generate.txt"),
            Slot::FinalRegenerate => format!("{k}/final_answering/final_regenerate.txt"),
        }
    }

    fn required(self) -> &'static [&'static str] {
        match self {
            Slot::System | Slot::Plan(_) => &[],
            Slot::Table(TableBlock::WithQuery) => &["{table}", "{query}"],
            Slot::Table(TableBlock::WithoutQuery) => &["{table}"],
            Slot::Generate(_) => &["{code_base}", "{operation}"],
            Slot::Regenerate => &["{code_base}", "{operation}", "{failed_code}", "{error}"],
            Slot::FinalGenerate => &["{code_base}"],
            Slot::FinalRegenerate => &["{code_base}", "{failed_code}", "{error}"],
        }
    }

    fn forbidden(self) -> &'static [&'static str] {
        match self {
            Slot::Table(TableBlock::WithoutQuery) => &["{query}"],
            _ => &[],
        }
    }
}

const PLANNED_STAGES: [StageId; 4] = [
    StageId::RowSelection,
    StageId::DataTypeCleaning,
    StageId::Reasoning,
    StageId::ColumnSelection,
];

// Column selection reuses the row selection codegen template.
const GENERATED_STAGES: [StageId; 3] = [
    StageId::RowSelection,
    StageId::DataTypeCleaning,
    StageId::Reasoning,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DemoSet {
    Planning,
    FinalAnswer,
}

impl DemoSet {
    fn dir(self) -> &'static str {
        match self {
            DemoSet::Planning => "demos/planning",
            DemoSet::FinalAnswer => "demos/final_answer",
        }
    }

    fn sections(self) -> &'static [&'static str] {
        match self {
            DemoSet::Planning => &[
                "table",
                "question",
                "row_selection",
                "data_type_cleaning",
                "reasoning",
                "column_selection",
            ],
            DemoSet::FinalAnswer => &["table", "question", "code", "answer_code", "output"],
        }
    }

    fn relative_path(self, kind: TaskKind, n: usize) -> String {
        format!("{}/{}_{n}.txt", self.dir(), kind.as_str())
    }
}

/// A few-shot record: named sections of a demo file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Demo {
    sections: BTreeMap<String, String>,
}

impl Demo {
    pub fn section(&self, name: &str) -> &str {
        self.sections.get(name).map_or("", String::as_str)
    }

    fn parse(path: &str, text: &str, set: DemoSet) -> Result<Demo, PromptError> {
        let mut sections: BTreeMap<String, String> = BTreeMap::new();
        let mut current: Option<String> = None;
        for line in text.lines() {
            let header = line
                .strip_prefix('[')
                .and_then(|l| l.strip_suffix(']'))
                .filter(|name| set.sections().contains(name));
            if let Some(name) = header {
                if sections.contains_key(name) {
                    return Err(PromptError::Invalid {
                        path: path.to_string(),
                        msg: format!("duplicate section [{name}]"),
                    });
                }
                sections.insert(name.to_string(), String::new());
                current = Some(name.to_string());
                continue;
            }
            match &current {
                Some(name) => {
                    let body = sections.get_mut(name).expect("section inserted");
                    if !body.is_empty() {
                        body.push('\n');
                    }
                    body.push_str(line);
                }
                None if line.trim().is_empty() => {}
                None => {
                    return Err(PromptError::Invalid {
                        path: path.to_string(),
                        msg: "text before the first section".into(),
                    })
                }
            }
        }
        for name in set.sections() {
            match sections.get_mut(*name) {
                Some(body) => *body = body.trim_end().to_string(),
                None => {
                    return Err(PromptError::Invalid {
                        path: path.to_string(),
                        msg: format!("missing section [{name}]"),
                    })
                }
            }
        }
        Ok(Demo { sections })
    }
}

/// The template slots picked for one (stage, scenario) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComposedTemplate {
    pub table_block: TableBlock,
    pub instruction: Slot,
    pub demos: Option<DemoSet>,
    /// Table block template followed by the instruction template, unrendered.
    pub text: String,
}

/// Immutable after load; share freely across workers.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    files: BTreeMap<String, String>,
    demos: BTreeMap<(TaskKind, DemoKey), Vec<Demo>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum DemoKey {
    Planning,
    FinalAnswer,
}

impl From<DemoSet> for DemoKey {
    fn from(d: DemoSet) -> Self {
        match d {
            DemoSet::Planning => DemoKey::Planning,
            DemoSet::FinalAnswer => DemoKey::FinalAnswer,
        }
    }
}

macro_rules! embed {
    ($($path:literal),* $(,)?) => {
        &[$(($path, include_str!(concat!("../prompts/", $path)))),*]
    };
}

static BUILTIN: &[(&str, &str)] = embed![
    "qa/system.txt",
    "qa/table/with_query.txt",
    "qa/table/without_query.txt",
    "qa/row_selection/plan.txt",
    "qa/row_selection/generate.txt",
    "qa/data_type_cleaning/plan.txt",
    "qa/data_type_cleaning/generate.txt",
    "qa/reasoning/plan.txt",
    "qa/reasoning/generate.txt",
    "qa/column_selection/plan.txt",
    "qa/shared/regenerate.txt",
    "qa/final_answering/final_generate.txt",
    "qa/final_answering/final_regenerate.txt",
    "fact_verification/system.txt",
    "fact_verification/table/with_query.txt",
    "fact_verification/table/without_query.txt",
    "fact_verification/row_selection/plan.txt",
    "fact_verification/row_selection/generate.txt",
    "fact_verification/data_type_cleaning/plan.txt",
    "fact_verification/data_type_cleaning/generate.txt",
    "fact_verification/reasoning/plan.txt",
    "fact_verification/reasoning/generate.txt",
    "fact_verification/column_selection/plan.txt",
    "fact_verification/shared/regenerate.txt",
    "fact_verification/final_answering/final_generate.txt",
    "fact_verification/final_answering/final_regenerate.txt",
    "demos/planning/qa_1.txt",
    "demos/planning/qa_2.txt",
    "demos/planning/qa_3.txt",
    "demos/planning/fact_verification_1.txt",
    "demos/planning/fact_verification_2.txt",
    "demos/planning/fact_verification_3.txt",
    "demos/final_answer/qa_1.txt",
    "demos/final_answer/qa_2.txt",
    "demos/final_answer/qa_3.txt",
    "demos/final_answer/fact_verification_1.txt",
    "demos/final_answer/fact_verification_2.txt",
    "demos/final_answer/fact_verification_3.txt",
];

fn required_files() -> Vec<String> {
    let mut paths = Vec::new();
    for kind in KINDS {
        for slot in Slot::all() {
            paths.push(slot.relative_path(kind));
        }
        for set in [DemoSet::Planning, DemoSet::FinalAnswer] {
            for n in 1..=DEMOS_PER_SET {
                paths.push(set.relative_path(kind, n));
            }
        }
    }
    paths
}

impl PromptLibrary {
    /// The embedded default templates.
    pub fn builtin() -> PromptLibrary {
        let files = BUILTIN
            .iter()
            .map(|(p, t)| (p.to_string(), t.to_string()))
            .collect();
        Self::from_files(files).expect("embedded prompt templates are valid")
    }

    /// Loads every slot from `dir`; all files must be present.
    pub fn load_dir(dir: &Path) -> Result<PromptLibrary, PromptError> {
        let mut files = BTreeMap::new();
        for rel in required_files() {
            let path = dir.join(&rel);
            if !path.exists() {
                return Err(PromptError::Missing(path));
            }
            let text = std::fs::read_to_string(&path)
                .map_err(|source| PromptError::Io { path: path.clone(), source })?;
            files.insert(rel, text);
        }
        Self::from_files(files)
    }

    /// Writes the library as a directory tree that [`load_dir`] accepts.
    ///
    /// [`load_dir`]: PromptLibrary::load_dir
    pub fn write_dir(&self, dir: &Path) -> Result<(), PromptError> {
        for (rel, text) in &self.files {
            let path = dir.join(rel);
            let io = |source| PromptError::Io { path: path.clone(), source };
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io)?;
            }
            std::fs::write(&path, text).map_err(io)?;
        }
        Ok(())
    }

    fn from_files(files: BTreeMap<String, String>) -> Result<PromptLibrary, PromptError> {
        for kind in KINDS {
            for slot in Slot::all() {
                let rel = slot.relative_path(kind);
                let text = files
                    .get(&rel)
                    .ok_or_else(|| PromptError::Missing(PathBuf::from(&rel)))?;
                validate_slot(&rel, text, slot)?;
            }
        }
        let mut demos = BTreeMap::new();
        for kind in KINDS {
            for set in [DemoSet::Planning, DemoSet::FinalAnswer] {
                let mut list = Vec::with_capacity(DEMOS_PER_SET);
                for n in 1..=DEMOS_PER_SET {
                    let rel = set.relative_path(kind, n);
                    let text = files
                        .get(&rel)
                        .ok_or_else(|| PromptError::Missing(PathBuf::from(&rel)))?;
                    list.push(Demo::parse(&rel, text, set)?);
                }
                demos.insert((kind, set.into()), list);
            }
        }
        Ok(PromptLibrary { files, demos })
    }

    pub fn template(&self, kind: TaskKind, slot: Slot) -> &str {
        self.files
            .get(&slot.relative_path(kind))
            .map(|t| t.trim_end())
            .expect("slots are validated at load")
    }

    pub fn system(&self, kind: TaskKind) -> &str {
        self.template(kind, Slot::System)
    }

    pub fn demos(&self, kind: TaskKind, set: DemoSet) -> &[Demo] {
        &self.demos[&(kind, set.into())]
    }

    /// Renders the few-shot block that precedes a planning prompt for `stage`.
    /// Each demo shows the stage's table block and the operation list the
    /// stage expects.
    pub fn render_planning_demos(&self, kind: TaskKind, stage: StageId) -> String {
        let block = table_block_for(stage);
        let table_tpl = self.template(kind, Slot::Table(block));
        let mut out = String::from("# Examples\n");
        for (i, demo) in self.demos(kind, DemoSet::Planning).iter().enumerate() {
            out.push_str(&format!("\n## Example {}\n", i + 1));
            out.push_str(&render(
                table_tpl,
                &[("table", demo.section("table")), ("query", demo.section("question"))],
            ));
            out.push_str(&format!(
                "\n\nOperations for the {} stage:\n{}\n",
                stage_display(stage),
                demo.section(stage.as_str())
            ));
        }
        out.push_str("\n# Task\n");
        out
    }

    /// Renders the few-shot block that precedes a final answering prompt.
    pub fn render_final_demos(&self, kind: TaskKind) -> String {
        let table_tpl = self.template(kind, Slot::Table(TableBlock::WithQuery));
        let mut out = String::from("# Examples\n");
        for (i, demo) in self.demos(kind, DemoSet::FinalAnswer).iter().enumerate() {
            out.push_str(&format!("\n## Example {}\n", i + 1));
            out.push_str(&render(
                table_tpl,
                &[("table", demo.section("table")), ("query", demo.section("question"))],
            ));
            out.push_str(&format!(
                "\n\nCode so far:\n```python\n{}\n```\n\nFinal answering code:\n```python\n{}\n```\n\nOutput:\n{}\n",
                demo.section("code"),
                demo.section("answer_code"),
                demo.section("output"),
            ));
        }
        out.push_str("\n# Task\n");
        out
    }
}

fn validate_slot(rel: &str, text: &str, slot: Slot) -> Result<(), PromptError> {
    if text.trim().is_empty() {
        return Err(PromptError::Invalid { path: rel.to_string(), msg: "empty template".into() });
    }
    for p in slot.required() {
        if !text.contains(p) {
            return Err(PromptError::Invalid {
                path: rel.to_string(),
                msg: format!("missing placeholder {p}"),
            });
        }
    }
    for p in slot.forbidden() {
        if text.contains(p) {
            return Err(PromptError::Invalid {
                path: rel.to_string(),
                msg: format!("placeholder {p} not allowed here"),
            });
        }
    }
    Ok(())
}

pub fn stage_display(stage: StageId) -> String {
    stage.as_str().replace('_', " ")
}

// Column selection plans and generates with the question; only row
// selection hides it.
fn table_block_for(stage: StageId) -> TableBlock {
    if stage.spec().include_query_in_table_header {
        TableBlock::WithQuery
    } else {
        TableBlock::WithoutQuery
    }
}

/// Picks the template combination for `(stage, scenario)`.
pub fn resolve_templates(
    library: &PromptLibrary,
    stage: StageId,
    scenario: Scenario,
    kind: TaskKind,
) -> Result<ComposedTemplate, PromptError> {
    let illegal = || PromptError::IllegalScenario { stage, scenario };
    let planned = PLANNED_STAGES.contains(&stage);
    let (instruction, demos) = match scenario {
        Scenario::Plan if planned => (Slot::Plan(stage), Some(DemoSet::Planning)),
        Scenario::Generate if planned => {
            let slot = match stage {
                StageId::ColumnSelection => Slot::Generate(StageId::RowSelection),
                s => Slot::Generate(s),
            };
            (slot, None)
        }
        Scenario::Regenerate if planned => (Slot::Regenerate, None),
        Scenario::FinalGenerate if stage == StageId::FinalAnswering => {
            (Slot::FinalGenerate, Some(DemoSet::FinalAnswer))
        }
        Scenario::FinalRegenerate if stage == StageId::FinalAnswering => {
            (Slot::FinalRegenerate, None)
        }
        _ => return Err(illegal()),
    };
    let table_block = table_block_for(stage);
    let text = format!(
        "{}\n\n{}",
        library.template(kind, Slot::Table(table_block)),
        library.template(kind, instruction)
    );
    Ok(ComposedTemplate {
        table_block,
        instruction,
        demos,
        text,
    })
}

/// Substitutes `{name}` placeholders in one pass. Braces that do not name a
/// supplied variable are kept, so substituted values are never re-expanded.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let value = after.find('}').and_then(|close| {
            let name = &after[..close];
            vars.iter()
                .find(|(k, _)| *k == name)
                .map(|(_, v)| (*v, close))
        });
        match value {
            Some((v, close)) => {
                out.push_str(v);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_loads_with_three_demos_each() {
        let lib = PromptLibrary::builtin();
        for kind in KINDS {
            assert_eq!(lib.demos(kind, DemoSet::Planning).len(), 3);
            assert_eq!(lib.demos(kind, DemoSet::FinalAnswer).len(), 3);
        }
        let d = &lib.demos(TaskKind::Qa, DemoSet::Planning)[0];
        assert!(d.section("table").starts_with("| Rank |"));
        assert!(d.section("reasoning").starts_with("1. "));
    }

    #[test]
    fn composition_map() {
        let lib = PromptLibrary::builtin();
        use Scenario::*;
        let cases = [
            (StageId::RowSelection, Plan, TableBlock::WithoutQuery, Slot::Plan(StageId::RowSelection)),
            (StageId::DataTypeCleaning, Plan, TableBlock::WithQuery, Slot::Plan(StageId::DataTypeCleaning)),
            (StageId::Reasoning, Plan, TableBlock::WithQuery, Slot::Plan(StageId::Reasoning)),
            (StageId::ColumnSelection, Plan, TableBlock::WithQuery, Slot::Plan(StageId::ColumnSelection)),
            (StageId::RowSelection, Generate, TableBlock::WithoutQuery, Slot::Generate(StageId::RowSelection)),
            (StageId::DataTypeCleaning, Generate, TableBlock::WithQuery, Slot::Generate(StageId::DataTypeCleaning)),
            (StageId::Reasoning, Generate, TableBlock::WithQuery, Slot::Generate(StageId::Reasoning)),
            (StageId::ColumnSelection, Generate, TableBlock::WithQuery, Slot::Generate(StageId::RowSelection)),
            (StageId::Reasoning, Regenerate, TableBlock::WithQuery, Slot::Regenerate),
            (StageId::FinalAnswering, FinalGenerate, TableBlock::WithQuery, Slot::FinalGenerate),
            (StageId::FinalAnswering, FinalRegenerate, TableBlock::WithQuery, Slot::FinalRegenerate),
        ];
        for kind in KINDS {
            for (stage, scenario, block, slot) in cases {
                let c = resolve_templates(&lib, stage, scenario, kind).unwrap();
                assert_eq!((c.table_block, c.instruction), (block, slot), "{stage} {scenario}");
                assert!(c.text.starts_with(lib.template(kind, Slot::Table(block))));
                assert!(c.text.ends_with(lib.template(kind, slot)));
            }
        }
    }

    #[test]
    fn illegal_pairs_rejected() {
        let lib = PromptLibrary::builtin();
        for (stage, scenario) in [
            (StageId::FinalAnswering, Scenario::Plan),
            (StageId::FinalAnswering, Scenario::Generate),
            (StageId::Initialization, Scenario::Generate),
            (StageId::Reasoning, Scenario::FinalGenerate),
            (StageId::Initialization, Scenario::Plan),
        ] {
            assert!(matches!(
                resolve_templates(&lib, stage, scenario, TaskKind::Qa),
                Err(PromptError::IllegalScenario { .. })
            ));
        }
    }

    #[test]
    fn fact_reasoning_uses_statement_template() {
        let lib = PromptLibrary::builtin();
        let qa = resolve_templates(&lib, StageId::Reasoning, Scenario::Generate, TaskKind::Qa).unwrap();
        let fv = resolve_templates(&lib, StageId::Reasoning, Scenario::Generate, TaskKind::FactVerification)
            .unwrap();
        assert!(fv.text.contains("Statement: {query}"));
        assert!(qa.text.contains("Question: {query}"));
        assert_ne!(qa.text, fv.text);
    }

    #[test]
    fn render_is_single_pass() {
        assert_eq!(render("{a}-{b}", &[("a", "{b}"), ("b", "x")]), "{b}-x");
        assert_eq!(render("{unknown} {a", &[("a", "1")]), "{unknown} {a");
        assert_eq!(render("df.groupby({'k': 1})", &[]), "df.groupby({'k': 1})");
    }

    #[test]
    fn round_trip_through_directory() {
        let dir = tempfile::tempdir().unwrap();
        let lib = PromptLibrary::builtin();
        lib.write_dir(dir.path()).unwrap();
        let back = PromptLibrary::load_dir(dir.path()).unwrap();
        assert_eq!(back.files, lib.files);

        let edited = dir.path().join("qa/reasoning/plan.txt");
        std::fs::write(&edited, "Plan carefully.").unwrap();
        let back = PromptLibrary::load_dir(dir.path()).unwrap();
        assert_eq!(back.template(TaskKind::Qa, Slot::Plan(StageId::Reasoning)), "Plan carefully.");
    }

    #[test]
    fn load_dir_validates() {
        let dir = tempfile::tempdir().unwrap();
        PromptLibrary::builtin().write_dir(dir.path()).unwrap();
        std::fs::write(dir.path().join("qa/shared/regenerate.txt"), "fix {code_base}").unwrap();
        let err = PromptLibrary::load_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("{operation}"), "{err}");

        PromptLibrary::builtin().write_dir(dir.path()).unwrap();
        std::fs::write(dir.path().join("qa/table/without_query.txt"), "{table}\n{query}").unwrap();
        assert!(PromptLibrary::load_dir(dir.path()).is_err());

        PromptLibrary::builtin().write_dir(dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("demos/final_answer/qa_3.txt")).unwrap();
        assert!(matches!(
            PromptLibrary::load_dir(dir.path()),
            Err(PromptError::Missing(p)) if p.ends_with("qa_3.txt")
        ));
    }

    #[test]
    fn demo_parse_errors() {
        let err = Demo::parse("x", "[table]\nt\n[question]\nq\n", DemoSet::FinalAnswer).unwrap_err();
        assert!(err.to_string().contains("[code]"));
        assert!(Demo::parse("x", "stray\n[table]\n", DemoSet::Planning).is_err());
    }

    #[test]
    fn planning_demos_follow_operation_grammar() {
        let lib = PromptLibrary::builtin();
        let block = lib.render_planning_demos(TaskKind::Qa, StageId::RowSelection);
        assert_eq!(block.matches("## Example").count(), 3);
        assert!(block.contains("Operations for the row selection stage:\n1. Remove the summary row"));
        assert!(!block.contains("Question:"));
        let block = lib.render_planning_demos(TaskKind::Qa, StageId::Reasoning);
        assert!(block.contains("Question: which country won the most silver medals?"));
    }
}
