//! Normalized interchange format: one JSON object per line with keys `id`,
//! `kind`, `split`, `query`, `gold`, `table{columns, rows}` and an optional
//! `difficulty`. UTF-8, LF line endings.

use std::io::{BufRead, Write};
use std::path::Path;

use super::DatasetError;
use crate::table::TaskSample;

pub fn write_interchange<W: Write>(mut out: W, samples: &[TaskSample]) -> std::io::Result<()> {
    for sample in samples {
        serde_json::to_writer(&mut out, sample)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_interchange<R: BufRead>(input: R, path: &Path) -> Result<Vec<TaskSample>, DatasetError> {
    let mut samples = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let sample: TaskSample = serde_json::from_str(&line)
            .map_err(|e| DatasetError::malformed(path, i + 1, e.to_string()))?;
        sample
            .table
            .validate()
            .map_err(|e| DatasetError::table(path, i + 1, e))?;
        if !sample.gold.matches_kind(sample.kind) {
            return Err(DatasetError::malformed(
                path,
                i + 1,
                format!("gold answer does not fit task kind {}", sample.kind),
            ));
        }
        samples.push(sample);
    }
    Ok(samples)
}

pub fn read_interchange_file(path: &Path) -> Result<Vec<TaskSample>, DatasetError> {
    let file = std::fs::File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::Missing(path.to_path_buf())
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    read_interchange(std::io::BufReader::new(file), path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{AnswerKey, Difficulty, Table, TaskKind};
    use proptest::prelude::*;

    fn sample(kind: TaskKind, gold: AnswerKey) -> TaskSample {
        TaskSample {
            id: "s1".into(),
            kind,
            split: "wikitq-dev".into(),
            query: "q?".into(),
            gold,
            table: Table::new(vec!["a".into()], vec![vec!["1".into()]]).unwrap(),
            difficulty: None,
        }
    }

    #[test]
    fn record_layout() {
        let mut buf = Vec::new();
        write_interchange(
            &mut buf,
            &[sample(TaskKind::Qa, AnswerKey::Denotations(vec!["1".into()]))],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"id\":\"s1\",\"kind\":\"qa\",\"split\":\"wikitq-dev\",\"query\":\"q?\",\
             \"gold\":[\"1\"],\"table\":{\"columns\":[\"a\"],\"rows\":[[\"1\"]]}}\n"
        );
    }

    #[test]
    fn rejects_gold_kind_mismatch_and_ragged_tables() {
        let p = Path::new("x.jsonl");
        let bad = r#"{"id":"s","kind":"fact_verification","split":"s","query":"q","gold":["a"],"table":{"columns":["a"],"rows":[]}}"#;
        assert!(matches!(
            read_interchange(bad.as_bytes(), p),
            Err(DatasetError::Malformed { line: 1, .. })
        ));
        let ragged = r#"{"id":"s","kind":"qa","split":"s","query":"q","gold":["a"],"table":{"columns":["a"],"rows":[["1","2"]]}}"#;
        assert!(read_interchange(ragged.as_bytes(), p).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(
            query in ".{0,20}",
            label in 0u8..2,
            cells in prop::collection::vec(".{0,6}", 0..6),
            complex in any::<bool>(),
        ) {
            let mut s = sample(TaskKind::FactVerification, AnswerKey::Label(label));
            s.query = query;
            s.table = Table::new(vec!["c".into()], cells.into_iter().map(|c| vec![c]).collect()).unwrap();
            s.difficulty = complex.then_some(Difficulty::Complex);
            let mut buf = Vec::new();
            write_interchange(&mut buf, std::slice::from_ref(&s)).unwrap();
            let back = read_interchange(&buf[..], Path::new("mem")).unwrap();
            prop_assert_eq!(back, vec![s]);
        }
    }
}
