use stagewise::engine::{run_batch, run_sample, EngineConfig, SampleStatus, TraceKind};
use stagewise::llm::{CallKind, ScriptedBackend};
use stagewise::prompts::PromptLibrary;
use stagewise::stages::{PipelineVariant, StageId};
use stagewise::table::{AnswerKey, Table, TaskKind, TaskSample};

fn sample(id: &str) -> TaskSample {
    let rows = [["1", "Norway", "16"], ["2", "Germany", "12"], ["3", "Canada", "11"], ["Total", "", "39"]];
    TaskSample {
        id: id.into(),
        kind: TaskKind::Qa,
        split: "test".into(),
        query: "which nation won the most gold medals?".into(),
        gold: AnswerKey::Denotations(vec!["Norway".into()]),
        table: Table::new(
            vec!["Rank".into(), "Nation".into(), "Gold".into()],
            rows.iter().map(|r| r.iter().map(|c| c.to_string()).collect()).collect(),
        )
        .unwrap(),
        difficulty: None,
    }
}

fn happy_script() -> Vec<&'static str> {
    vec![
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
}

fn kinds(trace: &[stagewise::engine::TraceEvent]) -> Vec<TraceKind> {
    trace.iter().map(|e| e.kind).collect()
}

#[test]
fn plans_of_one_one_three_cost_six_generations() {
    let backend = ScriptedBackend::queue(happy_script());
    let out = run_sample(&sample("s1"), &EngineConfig::default(), &backend, &PromptLibrary::builtin());
    assert_eq!(out.status, SampleStatus::Answered, "{:?}", out.failure);
    assert_eq!((out.counts.planning, out.counts.codegen, out.counts.regen), (3, 6, 0));
    let answer = out.answer.unwrap();
    assert_eq!(answer.raw_output, "Norway");
    assert_eq!(answer.predicted, AnswerKey::Denotations(vec!["Norway".into()]));
    assert_eq!(answer.counts, out.counts);
    assert_eq!(out.code_base.len(), 7);
    assert_eq!(*kinds(&out.trace).last().unwrap(), TraceKind::Finished);
}

#[test]
fn every_exchange_is_self_contained() {
    let backend = ScriptedBackend::queue(happy_script());
    run_sample(&sample("s1"), &EngineConfig::default(), &backend, &PromptLibrary::builtin());
    let requests = backend.requests();
    assert_eq!(requests.len(), 9);
    for r in &requests {
        assert_eq!(r.exchange.messages().len(), 2);
    }
    let final_req = requests.last().unwrap();
    assert_eq!(final_req.stage, StageId::FinalAnswering);
    assert_eq!(final_req.kind, CallKind::CodeGeneration);
    assert!(final_req.exchange.user_prompt().contains("top = df.iloc[0]['Nation']"));
}

#[test]
fn one_failure_then_success() {
    let mut script = happy_script();
    script.insert(3, "df['Gold'] = pd.to_numeric(df['Nation'])");
    let backend = ScriptedBackend::queue(script);
    let out = run_sample(&sample("s1"), &EngineConfig::default(), &backend, &PromptLibrary::builtin());
    assert_eq!(out.status, SampleStatus::Answered);
    assert_eq!(out.counts.regen, 1);
    let k = kinds(&out.trace);
    let err = k.iter().position(|e| *e == TraceKind::ExecErr).unwrap();
    assert_eq!(
        &k[err..err + 6],
        [
            TraceKind::ExecErr,
            TraceKind::Rollback,
            TraceKind::RegenPrompt,
            TraceKind::GenResponse,
            TraceKind::ExecOk,
            TraceKind::CellAccepted
        ]
    );
    let regen = backend.requests().into_iter().find(|r| r.kind == CallKind::ReGeneration).unwrap();
    assert!(regen.exchange.user_prompt().contains("Unable to parse string \"Norway\" at position 0"));
    assert_eq!(out.code_base.cells()[2].attempt, 2);
}

#[test]
fn exhausted_operation_stops_the_sample() {
    let mut script: Vec<&str> = happy_script()[..3].to_vec();
    script.extend(["x = 1/0"; 4]);
    let backend = ScriptedBackend::queue(script);
    let out = run_sample(&sample("s1"), &EngineConfig::default(), &backend, &PromptLibrary::builtin());
    assert_eq!(out.status, SampleStatus::RetryExhausted);
    assert_eq!(out.counts.regen, 3);
    assert_eq!(out.code_base.len(), 2);
    assert!(out.answer.is_none());
    let stages: Vec<_> = out.trace.iter().filter(|e| e.kind == TraceKind::StageStart).map(|e| e.stage.unwrap()).collect();
    assert_eq!(stages, [StageId::Initialization, StageId::RowSelection, StageId::DataTypeCleaning]);
}

#[test]
fn only_reason_plans_once() {
    let backend = ScriptedBackend::queue(["1. Pick the top nation", "answer = df.iloc[0]['Nation']", "print(answer)"]);
    let config = EngineConfig { variant: PipelineVariant::OnlyReason, ..EngineConfig::default() };
    let out = run_sample(&sample("s1"), &config, &backend, &PromptLibrary::builtin());
    assert_eq!(out.status, SampleStatus::Answered);
    assert_eq!(out.counts.planning, 1);
}

#[test]
fn plan_parse_and_answer_parse() {
    let backend = ScriptedBackend::queue(["I am not sure what to do."]);
    let out = run_sample(&sample("s1"), &EngineConfig::default(), &backend, &PromptLibrary::builtin());
    assert_eq!(out.status, SampleStatus::PlanParse);

    let backend = ScriptedBackend::queue(["None", "None", "None", "x = 1"]);
    let out = run_sample(&sample("s1"), &EngineConfig::default(), &backend, &PromptLibrary::builtin());
    assert_eq!(out.status, SampleStatus::AnswerParse);
    assert_eq!((out.counts.planning, out.counts.codegen), (3, 1));
}

#[test]
fn batch_keeps_order_and_isolates_failures() {
    let ids: Vec<String> = (0..10).map(|i| format!("s{i}")).collect();
    let samples: Vec<TaskSample> = ids.iter().map(|id| sample(id)).collect();
    let mut backend = ScriptedBackend::default();
    for id in &ids {
        if id != "s3" {
            backend = backend.with_sample_queue(id, happy_script());
        }
    }
    let out = run_batch(&samples, &EngineConfig::default(), &backend, &PromptLibrary::builtin(), 4);
    assert_eq!(out.iter().map(|o| o.sample_id.clone()).collect::<Vec<_>>(), ids);
    for o in &out {
        let expected = if o.sample_id == "s3" { SampleStatus::Infrastructure } else { SampleStatus::Answered };
        assert_eq!(o.status, expected);
    }
}
