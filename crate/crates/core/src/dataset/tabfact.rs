//! TabFact native layout.
//!
//! ```text
//! <root>/collected_data/r1_training_all.json   simple statements
//! <root>/collected_data/r2_training_all.json   complex statements
//! <root>/data/small_test_id.json               table ids of the small test set
//! <root>/data/test_id.json                     table ids of the full test set
//! <root>/data/all_csv/<table_id>               '#'-separated table, header first
//! ```
//!
//! Each collected file maps a table id to `[statements, labels, caption]`.
//! The r1/r2 origin is the official difficulty label.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{read_to_string, DatasetError};
use crate::table::{AnswerKey, Difficulty, Table, TaskKind, TaskSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TabFactSplit {
    /// Every statement of the small test tables.
    SmallTest,
    /// Complex (r2) statements of the full test tables.
    ComplexTest,
}

impl TabFactSplit {
    pub fn label(self) -> &'static str {
        match self {
            TabFactSplit::SmallTest => "tabfact-small",
            TabFactSplit::ComplexTest => "tabfact-complex",
        }
    }

    fn id_file(self) -> &'static str {
        match self {
            TabFactSplit::SmallTest => "data/small_test_id.json",
            TabFactSplit::ComplexTest => "data/test_id.json",
        }
    }
}

#[derive(Deserialize)]
struct Entry(Vec<String>, Vec<u8>, #[allow(dead_code)] serde_json::Value);

type Collected = HashMap<String, Entry>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, DatasetError> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| DatasetError::malformed(path, e.line(), e.to_string()))
}

fn load_table(root: &Path, table_id: &str) -> Result<Table, DatasetError> {
    let path = root.join("data/all_csv").join(table_id);
    if !path.exists() {
        return Err(DatasetError::MissingTable(table_id.to_string()));
    }
    let text = read_to_string(&path)?;
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| DatasetError::malformed(&path, 1, "empty table file"))?
        .split('#')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let row: Vec<String> = line.split('#').map(str::to_string).collect();
        if row.len() != columns.len() {
            return Err(DatasetError::malformed(
                &path,
                i + 2,
                format!("expected {} cells, found {}", columns.len(), row.len()),
            ));
        }
        rows.push(row);
    }
    Table::with_source(columns, rows, table_id).map_err(|e| DatasetError::table(&path, 1, e))
}

fn push_statements(
    out: &mut Vec<TaskSample>,
    path: &Path,
    table_id: &str,
    table: &Table,
    entry: &Entry,
    difficulty: Difficulty,
    split: TabFactSplit,
) -> Result<(), DatasetError> {
    if entry.0.len() != entry.1.len() {
        return Err(DatasetError::malformed(
            path,
            0,
            format!("table '{table_id}': statement/label count mismatch"),
        ));
    }
    let tag = match difficulty {
        Difficulty::Simple => "r1",
        Difficulty::Complex => "r2",
    };
    for (i, (statement, &label)) in entry.0.iter().zip(&entry.1).enumerate() {
        if label > 1 {
            return Err(DatasetError::malformed(
                path,
                0,
                format!("table '{table_id}': label {label} is not 0/1"),
            ));
        }
        out.push(TaskSample {
            id: format!("{table_id}#{tag}#{i}"),
            kind: TaskKind::FactVerification,
            split: split.label().to_string(),
            query: statement.clone(),
            gold: AnswerKey::Label(label),
            table: table.clone(),
            difficulty: Some(difficulty),
        });
    }
    Ok(())
}

pub fn load_tabfact(data_root: &Path, split: TabFactSplit) -> Result<Vec<TaskSample>, DatasetError> {
    let r1_path = data_root.join("collected_data/r1_training_all.json");
    let r2_path = data_root.join("collected_data/r2_training_all.json");
    let r1: Collected = read_json(&r1_path)?;
    let r2: Collected = read_json(&r2_path)?;
    let ids: Vec<String> = read_json(&data_root.join(split.id_file()))?;

    let mut samples = Vec::new();
    for table_id in &ids {
        let simple = r1.get(table_id);
        let complex = r2.get(table_id);
        if simple.is_none() && complex.is_none() {
            return Err(DatasetError::MissingTable(table_id.clone()));
        }
        let wanted_simple = match split {
            TabFactSplit::SmallTest => simple,
            TabFactSplit::ComplexTest => None,
        };
        if wanted_simple.is_none() && complex.is_none() {
            continue;
        }
        let table = load_table(data_root, table_id)?;
        if let Some(entry) = wanted_simple {
            push_statements(&mut samples, &r1_path, table_id, &table, entry, Difficulty::Simple, split)?;
        }
        if let Some(entry) = complex {
            push_statements(&mut samples, &r2_path, table_id, &table, entry, Difficulty::Complex, split)?;
        }
    }
    Ok(samples)
}
