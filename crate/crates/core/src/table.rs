//! Table and task data model, Markdown rendering, and the grouping rules
//! used by the analysis reports.
//!
//! Every cell is stored as text. Typing happens only inside the execution
//! kernel during the data-type-cleaning stage.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("table has no columns")]
    NoColumns,
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
}

/// A rectangular table of text cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    source_id: String,
}

impl Table {
    pub fn new(columns: Vec<String>, rows: Vec<Vec<String>>) -> Result<Self, TableError> {
        Self::with_source(columns, rows, String::new())
    }

    pub fn with_source(
        columns: Vec<String>,
        rows: Vec<Vec<String>>,
        source_id: impl Into<String>,
    ) -> Result<Self, TableError> {
        if columns.is_empty() {
            return Err(TableError::NoColumns);
        }
        if let Some((row, cells)) = rows
            .iter()
            .enumerate()
            .find(|(_, r)| r.len() != columns.len())
        {
            return Err(TableError::RaggedRow {
                row,
                found: cells.len(),
                expected: columns.len(),
            });
        }
        Ok(Self {
            columns,
            rows,
            source_id: source_id.into(),
        })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// Re-checks the invariants; used after deserializing untrusted input.
    pub fn validate(&self) -> Result<(), TableError> {
        Self::with_source(self.columns.clone(), self.rows.clone(), "").map(|_| ())
    }

    /// Number of data cells (headers excluded).
    pub fn content_cell_count(&self) -> usize {
        self.rows.len() * self.columns.len()
    }

    pub fn to_markdown(&self, max_rows: Option<usize>) -> String {
        to_markdown(self, max_rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    #[serde(rename = "qa")]
    Qa,
    FactVerification,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Qa => "qa",
            TaskKind::FactVerification => "fact_verification",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gold or predicted answer: a denotation list for QA, a 0/1 label for
/// fact verification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnswerKey {
    Denotations(Vec<String>),
    Label(u8),
}

impl AnswerKey {
    pub fn matches_kind(&self, kind: TaskKind) -> bool {
        match (self, kind) {
            (AnswerKey::Denotations(items), TaskKind::Qa) => !items.is_empty(),
            (AnswerKey::Label(l), TaskKind::FactVerification) => *l <= 1,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Simple,
    Complex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeGroup {
    Small,
    Medium,
    Large,
}

/// One benchmark item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSample {
    pub id: String,
    pub kind: TaskKind,
    pub split: String,
    pub query: String,
    pub gold: AnswerKey,
    pub table: Table,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub difficulty: Option<Difficulty>,
}

impl TaskSample {
    /// Difficulty label: the stored label when present (TabFact), otherwise
    /// the question-length rule.
    pub fn difficulty_or_rule(&self, measure: LengthMeasure) -> Difficulty {
        self.difficulty
            .unwrap_or_else(|| wikitq_difficulty_by(&self.query, measure))
    }

    pub fn size_group(&self) -> SizeGroup {
        size_group(self.table.content_cell_count())
    }
}

pub fn content_cell_count(table: &Table) -> usize {
    table.content_cell_count()
}

/// 0..=49 -> Small (an empty table joins the smallest bucket), 50..=99 ->
/// Medium, 100 and up -> Large.
pub fn size_group(cell_count: usize) -> SizeGroup {
    match cell_count {
        0..=49 => SizeGroup::Small,
        50..=99 => SizeGroup::Medium,
        _ => SizeGroup::Large,
    }
}

/// How question length is measured for the difficulty rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthMeasure {
    #[default]
    Characters,
    Words,
}

pub const SIMPLE_QUESTION_MAX_LEN: usize = 49;

pub fn wikitq_difficulty(query: &str) -> Difficulty {
    wikitq_difficulty_by(query, LengthMeasure::Characters)
}

pub fn wikitq_difficulty_by(query: &str, measure: LengthMeasure) -> Difficulty {
    let len = match measure {
        LengthMeasure::Characters => query.chars().count(),
        LengthMeasure::Words => query.split_whitespace().count(),
    };
    if len <= SIMPLE_QUESTION_MAX_LEN {
        Difficulty::Simple
    } else {
        Difficulty::Complex
    }
}

fn escape_cell(cell: &str) -> String {
    let mut out = String::with_capacity(cell.len());
    for ch in cell.chars() {
        match ch {
            '\\' => out.push_str("\\\\"),
            '|' => out.push_str("\\|"),
            '\r' | '\n' => out.push(' '),
            c => out.push(c),
        }
    }
    out
}

fn push_row<'a>(out: &mut String, cells: impl Iterator<Item = &'a str>) {
    out.push('|');
    for cell in cells {
        out.push(' ');
        out.push_str(&escape_cell(cell));
        out.push_str(" |");
    }
}

/// Renders a pipe-delimited Markdown grid.
///
/// With `max_rows` set and exceeded, the first `max_rows` rows are followed
/// by an elision row of `...` cells and a line `N rows total`.
pub fn to_markdown(table: &Table, max_rows: Option<usize>) -> String {
    let mut out = String::new();
    push_row(&mut out, table.columns.iter().map(String::as_str));
    out.push('\n');
    push_row(&mut out, table.columns.iter().map(|_| "---"));
    let total = table.rows.len();
    let shown = max_rows.map_or(total, |m| m.min(total));
    for row in &table.rows[..shown] {
        out.push('\n');
        push_row(&mut out, row.iter().map(String::as_str));
    }
    if shown < total {
        out.push('\n');
        push_row(&mut out, table.columns.iter().map(|_| "..."));
        out.push('\n');
        if total == 1 {
            out.push_str("1 row total");
        } else {
            out.push_str(&format!("{total} rows total"));
        }
    }
    out
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MarkdownParseError {
    #[error("no header row")]
    MissingHeader,
    #[error("missing separator row")]
    MissingSeparator,
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error(transparent)]
    Table(#[from] TableError),
}

fn split_grid_line(line: &str, lineno: usize) -> Result<Vec<String>, MarkdownParseError> {
    let malformed = |msg: &str| MarkdownParseError::Malformed {
        line: lineno,
        msg: msg.to_string(),
    };
    let body = line
        .strip_prefix('|')
        .ok_or_else(|| malformed("row must start with '|'"))?;
    let mut cells = Vec::new();
    let mut current = String::new();
    let mut chars = body.chars();
    let mut closed = false;
    while let Some(c) = chars.next() {
        match c {
            '\\' => match chars.next() {
                Some(next) => current.push(next),
                None => return Err(malformed("dangling escape")),
            },
            '|' => {
                cells.push(std::mem::take(&mut current));
                closed = true;
                continue;
            }
            c => current.push(c),
        }
        closed = false;
    }
    if !closed {
        return Err(malformed("row must end with '|'"));
    }
    // Renderer pads each cell with exactly one space on both sides.
    Ok(cells
        .into_iter()
        .map(|c| {
            let c = c.strip_prefix(' ').unwrap_or(&c);
            c.strip_suffix(' ').unwrap_or(c).to_string()
        })
        .collect())
}

/// Parses a grid produced by [`to_markdown`] (without truncation). Lines
/// that do not start with `|` terminate the grid.
pub fn parse_markdown(text: &str) -> Result<Table, MarkdownParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .take_while(|(_, l)| l.starts_with('|'));
    let (hl, header) = lines.next().ok_or(MarkdownParseError::MissingHeader)?;
    let columns = split_grid_line(header, hl)?;
    let (sl, sep) = lines.next().ok_or(MarkdownParseError::MissingSeparator)?;
    let sep_cells = split_grid_line(sep, sl)?;
    if sep_cells.len() != columns.len() || sep_cells.iter().any(|c| !c.trim().starts_with("---"))
    {
        return Err(MarkdownParseError::MissingSeparator);
    }
    let rows = lines
        .map(|(n, l)| split_grid_line(l, n))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Table::new(columns, rows)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t(cols: &[&str], rows: &[&[&str]]) -> Table {
        Table::new(
            cols.iter().map(|s| s.to_string()).collect(),
            rows.iter()
                .map(|r| r.iter().map(|s| s.to_string()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn minimal_grid() {
        assert_eq!(to_markdown(&t(&["a"], &[&["v"]]), None), "| a |\n| --- |\n| v |");
    }

    #[test]
    fn truncation_adds_elision_and_note() {
        let table = t(&["a", "b"], &[&["1", "2"], &["3", "4"]]);
        let md = to_markdown(&table, Some(1));
        assert_eq!(
            md,
            "| a | b |\n| --- | --- |\n| 1 | 2 |\n| ... | ... |\n2 rows total"
        );
        // Not exceeded: no elision.
        assert_eq!(to_markdown(&table, Some(2)), to_markdown(&table, None));
    }

    #[test]
    fn pipes_are_escaped() {
        let table = t(&["c"], &[&["x|y"]]);
        let md = to_markdown(&table, None);
        assert!(md.contains("x\\|y"));
        let parsed = parse_markdown(&md).unwrap();
        assert_eq!(parsed.columns().len(), 1);
        assert_eq!(parsed.rows()[0][0], "x|y");
    }

    #[test]
    fn newlines_become_spaces() {
        let md = to_markdown(&t(&["c"], &[&["a\nb"]]), None);
        assert_eq!(md.lines().count(), 3);
        assert!(md.ends_with("| a b |"));
    }

    #[test]
    fn invariants_enforced() {
        assert_eq!(Table::new(vec![], vec![]), Err(TableError::NoColumns));
        assert!(matches!(
            Table::new(vec!["a".into()], vec![vec![]]),
            Err(TableError::RaggedRow { row: 0, .. })
        ));
        // Duplicate headers are allowed and preserved.
        let dup = t(&["x", "x"], &[]);
        assert_eq!(dup.columns(), ["x", "x"]);
    }

    #[test]
    fn cell_counts() {
        let cols = ["a", "b", "c", "d", "e"];
        let row: Vec<&str> = vec!["v"; 5];
        let rows: Vec<&[&str]> = vec![&row[..]; 10];
        assert_eq!(t(&cols, &rows).content_cell_count(), 50);
        assert_eq!(t(&["a"], &[]).content_cell_count(), 0);
        let row3: Vec<&str> = vec!["v"; 3];
        let rows33: Vec<&[&str]> = vec![&row3[..]; 33];
        assert_eq!(content_cell_count(&t(&["a", "b", "c"], &rows33)), 99);
    }

    #[test]
    fn size_group_boundaries() {
        assert_eq!(size_group(0), SizeGroup::Small);
        assert_eq!(size_group(1), SizeGroup::Small);
        assert_eq!(size_group(49), SizeGroup::Small);
        assert_eq!(size_group(50), SizeGroup::Medium);
        assert_eq!(size_group(99), SizeGroup::Medium);
        assert_eq!(size_group(100), SizeGroup::Large);
    }

    #[test]
    fn difficulty_by_length() {
        let q49 = "q".repeat(49);
        let q50 = "q".repeat(50);
        assert_eq!(wikitq_difficulty(&q49), Difficulty::Simple);
        assert_eq!(wikitq_difficulty(&q50), Difficulty::Complex);
        assert_eq!(wikitq_difficulty(""), Difficulty::Simple);
        // Characters, not bytes.
        assert_eq!(wikitq_difficulty(&"é".repeat(49)), Difficulty::Simple);
        assert_eq!(
            wikitq_difficulty_by(&q50, LengthMeasure::Words),
            Difficulty::Simple
        );
    }

    #[test]
    fn answer_key_serde_shape() {
        let qa = AnswerKey::Denotations(vec!["a".into()]);
        assert_eq!(serde_json::to_string(&qa).unwrap(), r#"["a"]"#);
        assert_eq!(serde_json::to_string(&AnswerKey::Label(1)).unwrap(), "1");
        assert!(qa.matches_kind(TaskKind::Qa));
        assert!(!qa.matches_kind(TaskKind::FactVerification));
        assert!(!AnswerKey::Denotations(vec![]).matches_kind(TaskKind::Qa));
        assert!(!AnswerKey::Label(2).matches_kind(TaskKind::FactVerification));
    }

    fn cell() -> impl Strategy<Value = String> {
        "[ a-zA-Z0-9|\\\\.,é-]{0,8}"
    }

    proptest! {
        #[test]
        fn markdown_round_trip(
            ncols in 1usize..5,
            cells in prop::collection::vec(cell(), 0..40),
            headers in prop::collection::vec(cell(), 5),
        ) {
            let columns: Vec<String> = headers[..ncols].to_vec();
            let rows: Vec<Vec<String>> = cells.chunks_exact(ncols).map(|c| c.to_vec()).collect();
            let table = Table::new(columns, rows).unwrap();
            let parsed = parse_markdown(&to_markdown(&table, None)).unwrap();
            prop_assert_eq!(parsed.columns(), table.columns());
            prop_assert_eq!(parsed.rows(), table.rows());
        }

        #[test]
        fn size_group_monotone(a in 0usize..500, b in 0usize..500) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(size_group(lo) <= size_group(hi));
        }
    }
}
