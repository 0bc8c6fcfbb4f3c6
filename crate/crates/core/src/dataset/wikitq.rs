//! WikiTableQuestions native layout.
//!
//! ```text
//! <root>/data/random-split-1-dev.tsv     id, utterance, context, targetValue
//! <root>/data/pristine-unseen-tables.tsv
//! <root>/csv/<dir>/<n>.tsv               tab-separated table, header first
//! <root>/csv/<dir>/<n>.csv               fallback when the .tsv is absent
//! ```
//!
//! TSV fields use the benchmark's escapes: `\n` newline, `\p` pipe, `\\`
//! backslash. `targetValue` lists answers separated by `|`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{read_to_string, DatasetError};
use crate::table::{AnswerKey, Table, TaskKind, TaskSample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WikiTqSplit {
    DevSplit1,
    Test,
}

impl WikiTqSplit {
    pub fn questions_file(self) -> &'static str {
        match self {
            WikiTqSplit::DevSplit1 => "data/random-split-1-dev.tsv",
            WikiTqSplit::Test => "data/pristine-unseen-tables.tsv",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            WikiTqSplit::DevSplit1 => "wikitq-dev",
            WikiTqSplit::Test => "wikitq-test",
        }
    }
}

pub(crate) fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('p') => out.push('|'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn load_table(root: &Path, context: &str) -> Result<Table, DatasetError> {
    let tsv: PathBuf = root.join(context).with_extension("tsv");
    if tsv.exists() {
        let text = read_to_string(&tsv)?;
        let mut lines = text.lines();
        let columns: Vec<String> = lines
            .next()
            .ok_or_else(|| DatasetError::malformed(&tsv, 1, "empty table file"))?
            .split('\t')
            .map(unescape)
            .collect();
        let rows = lines
            .map(|l| l.split('\t').map(unescape).collect::<Vec<_>>())
            .collect::<Vec<_>>();
        if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
            return Err(DatasetError::malformed(
                &tsv,
                i + 2,
                format!("expected {} cells, found {}", columns.len(), rows[i].len()),
            ));
        }
        return Table::with_source(columns, rows, context)
            .map_err(|e| DatasetError::table(&tsv, 1, e));
    }
    let csv_path = root.join(context);
    if !csv_path.exists() {
        return Err(DatasetError::Missing(tsv));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .escape(Some(b'\\'))
        .flexible(true)
        .from_path(&csv_path)
        .map_err(|e| DatasetError::malformed(&csv_path, 1, e.to_string()))?;
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| DatasetError::malformed(&csv_path, i + 1, e.to_string()))?;
        records.push(rec.iter().map(str::to_string).collect::<Vec<_>>());
    }
    let mut it = records.into_iter();
    let columns = it
        .next()
        .ok_or_else(|| DatasetError::malformed(&csv_path, 1, "empty table file"))?;
    let rows: Vec<Vec<String>> = it.collect();
    if let Some(i) = rows.iter().position(|r| r.len() != columns.len()) {
        return Err(DatasetError::malformed(
            &csv_path,
            i + 2,
            format!("expected {} cells, found {}", columns.len(), rows[i].len()),
        ));
    }
    Table::with_source(columns, rows, context).map_err(|e| DatasetError::table(&csv_path, 1, e))
}

/// Loads one question per line of the split's TSV. Difficulty is left unset.
pub fn load_wikitq(data_root: &Path, split: WikiTqSplit) -> Result<Vec<TaskSample>, DatasetError> {
    let qpath = data_root.join(split.questions_file());
    let text = read_to_string(&qpath)?;
    let mut tables: HashMap<String, Arc<Table>> = HashMap::new();
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if lineno == 1 && fields.first() == Some(&"id") {
            continue;
        }
        if fields.len() < 4 {
            return Err(DatasetError::malformed(
                &qpath,
                lineno,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let (id, utterance, context, target) = (fields[0], fields[1], fields[2], fields[3]);
        let table = match tables.get(context) {
            Some(t) => Arc::clone(t),
            None => {
                let t = Arc::new(load_table(data_root, context)?);
                tables.insert(context.to_string(), Arc::clone(&t));
                t
            }
        };
        let denotations: Vec<String> = target.split('|').map(unescape).collect();
        if denotations.iter().all(|d| d.is_empty()) {
            return Err(DatasetError::malformed(&qpath, lineno, "empty targetValue"));
        }
        samples.push(TaskSample {
            id: id.to_string(),
            kind: TaskKind::Qa,
            split: split.label().to_string(),
            query: unescape(utterance),
            gold: AnswerKey::Denotations(denotations),
            table: (*table).clone(),
            difficulty: None,
        });
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn layout(questions: &str) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("data")).unwrap();
        fs::create_dir_all(dir.path().join("csv/204-csv")).unwrap();
        fs::write(dir.path().join("data/random-split-1-dev.tsv"), questions).unwrap();
        fs::write(
            dir.path().join("csv/204-csv/1.tsv"),
            "Year\tTeam\n2004\tA\\pB\n2005\tC\n",
        )
        .unwrap();
        dir
    }

    #[test]
    fn loads_questions_and_tables() {
        let dir = layout(
            "id\tutterance\tcontext\ttargetValue\n\
             nt-0\twhich year?\tcsv/204-csv/1.csv\t2004\n\
             nt-1\twhich teams?\tcsv/204-csv/1.csv\tA\\pB|C\n",
        );
        let samples = load_wikitq(dir.path(), WikiTqSplit::DevSplit1).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].table.rows()[0][1], "A|B");
        assert_eq!(
            samples[1].gold,
            AnswerKey::Denotations(vec!["A|B".into(), "C".into()])
        );
        assert_eq!(samples[0].kind, TaskKind::Qa);
        assert!(samples[0].difficulty.is_none());
        assert_eq!(samples[0].split, "wikitq-dev");
    }

    #[test]
    fn csv_fallback() {
        let dir = layout("nt-0\tq\tcsv/204-csv/2.csv\tx\n");
        fs::write(
            dir.path().join("csv/204-csv/2.csv"),
            "\"Name\",\"Note\"\n\"a, b\",\"say \\\"hi\\\"\"\n",
        )
        .unwrap();
        let samples = load_wikitq(dir.path(), WikiTqSplit::DevSplit1).unwrap();
        assert_eq!(samples[0].table.rows()[0], vec!["a, b", "say \"hi\""]);
    }

    #[test]
    fn empty_questions_file() {
        let dir = layout("");
        assert!(load_wikitq(dir.path(), WikiTqSplit::DevSplit1)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn errors_name_path_and_line() {
        let dir = layout("id\tutterance\tcontext\ttargetValue\nnt-0\tonly two\n");
        let err = load_wikitq(dir.path(), WikiTqSplit::DevSplit1).unwrap_err();
        assert!(matches!(err, DatasetError::Malformed { line: 2, .. }), "{err}");

        let err = load_wikitq(dir.path(), WikiTqSplit::Test).unwrap_err();
        assert!(err.to_string().contains("pristine-unseen-tables.tsv"));

        let dir = layout("nt-0\tq\tcsv/204-csv/missing.csv\tx\n");
        let err = load_wikitq(dir.path(), WikiTqSplit::DevSplit1).unwrap_err();
        assert!(matches!(err, DatasetError::Missing(p) if p.ends_with("missing.tsv")));
    }

    #[test]
    fn ragged_table_is_malformed() {
        let dir = layout("nt-0\tq\tcsv/204-csv/3.csv\tx\n");
        fs::write(dir.path().join("csv/204-csv/3.tsv"), "a\tb\n1\n").unwrap();
        let err = load_wikitq(dir.path(), WikiTqSplit::DevSplit1).unwrap_err();
        assert!(matches!(err, DatasetError::Malformed { line: 2, .. }), "{err}");
    }

    #[test]
    fn unescape_rules() {
        assert_eq!(unescape(r"a\nb\pc\\d"), "a\nb|c\\d");
        assert_eq!(unescape(r"tail\"), "tail\\");
    }
}
