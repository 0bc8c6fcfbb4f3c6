#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stagewise::dataset::write_interchange;
use stagewise::llm::ScriptedFixture;
use stagewise::stages::{stage_sequence, PipelineVariant, StageId};
use stagewise::table::{AnswerKey, Table, TaskKind, TaskSample};

pub fn medal_table() -> Table {
    let rows = [["1", "Norway", "16"], ["2", "Germany", "12"], ["3", "Canada", "11"], ["Total", "", "39"]];
    Table::new(
        vec!["Rank".into(), "Nation".into(), "Gold".into()],
        rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
    )
    .unwrap()
}

pub fn medal_sample(id: &str) -> TaskSample {
    TaskSample {
        id: id.into(),
        kind: TaskKind::Qa,
        split: "wikitq-dev".into(),
        query: "which nation won the most gold medals?".into(),
        gold: AnswerKey::Denotations(vec!["Norway".into()]),
        table: medal_table(),
        difficulty: None,
    }
}

/// Plans of sizes 1, 1 and 3 plus the final cell; answers "Norway".
pub fn happy_script() -> Vec<String> {
    [
        "1. Remove the total row",
        "```python\ndf = df[df['Rank'] != 'Total']\n```",
        "1. Convert Gold to numbers",
        "df['Gold'] = pd.to_numeric(df['Gold'])",
        "1. Sort by Gold descending\n2. Take the first nation\n3. Keep it as the answer",
        "df = df.sort_values('Gold', ascending=False)",
        "top = df.iloc[0]['Nation']",
        "answer = top",
        "```python\nprint(answer)\n```",
    ]
    .map(String::from)
    .to_vec()
}

/// A script for any variant: every planned stage but reasoning plans
/// nothing, reasoning picks the answer.
pub fn variant_script(variant: &PipelineVariant, answer_row: usize) -> Vec<String> {
    let mut script = Vec::new();
    for stage in stage_sequence(variant) {
        match stage {
            StageId::Initialization => {}
            StageId::Reasoning => {
                script.push("1. Take the nation of the chosen row".to_string());
                script.push(format!("answer = df.iloc[{answer_row}]['Nation']"));
            }
            StageId::FinalAnswering => script.push("print(answer)".to_string()),
            _ => script.push("None".to_string()),
        }
    }
    script
}

pub fn write_data(dir: &Path, samples: &[TaskSample]) -> PathBuf {
    let path = dir.join("data.jsonl");
    write_interchange(std::fs::File::create(&path).unwrap(), samples).unwrap();
    path
}

pub fn write_fixture(dir: &Path, name: &str, queues: &[(&str, Vec<String>)]) -> PathBuf {
    let fixture = ScriptedFixture {
        queues: queues.iter().map(|(id, q)| (id.to_string(), q.clone())).collect::<BTreeMap<_, _>>(),
        ..ScriptedFixture::default()
    };
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&fixture).unwrap()).unwrap();
    path
}

pub fn stagewise(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stagewise"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn stagewise")
}

pub fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}
