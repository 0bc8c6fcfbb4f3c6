use std::path::PathBuf;
use std::time::{Duration, Instant};

use stagewise::codegen::{initial_code, CodeBase, CodeCell};
use stagewise::kernel::protocol::{Request, Response};
use stagewise::kernel::transport::{ProcessTransport, Transport};
use stagewise::kernel::{KernelCommand, KernelConfig, KernelError, KernelSession, StatusOutcome};
use stagewise::prompts::{DemoSet, PromptLibrary};
use stagewise::stages::StageId;
use stagewise::table::{Table, TaskKind};

fn sim_binary() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_stagewise-sim-kernel"))
}

fn process_config() -> KernelConfig {
    KernelConfig {
        command: KernelCommand::Program { path: sim_binary(), args: Vec::new() },
        ..KernelConfig::default()
    }
}

fn configs() -> Vec<KernelConfig> {
    vec![KernelConfig::default(), process_config()]
}

fn cell(stage: StageId, op: usize, source: &str) -> CodeCell {
    CodeCell::new(stage, Some(op), "step", source.to_string(), 1)
}

fn two_by_two() -> Table {
    Table::new(
        vec!["a".into(), "b".into()],
        vec![vec!["1".into(), "x".into()], vec!["2".into(), "y|z".into()]],
    )
    .unwrap()
}

fn ready(session: &mut KernelSession) -> (String, String) {
    match session.current_table_status().unwrap() {
        StatusOutcome::Ready(s) => (s.markdown, s.digest),
        StatusOutcome::Missing(m) => panic!("table missing: {m}"),
    }
}

fn roundtrip(t: &mut ProcessTransport, req: &str) -> Response {
    t.send(req).unwrap();
    serde_json::from_str(&t.recv(Duration::from_secs(5)).unwrap()).unwrap()
}

#[test]
fn handshake_over_pipes() {
    let mut t = ProcessTransport::spawn(&sim_binary(), &[]).unwrap();
    let early = roundtrip(&mut t, r#"{"op":"exec","cell_id":"reasoning:1:1","code":"x = 1"}"#);
    assert!(!early.ok);
    let hello = roundtrip(&mut t, &serde_json::to_string(&Request::Hello { protocol_version: 1 }).unwrap());
    assert!(hello.ok);
    assert_eq!(hello.protocol_version, Some(1));
    let again = roundtrip(&mut t, r#"{"op":"hello","protocol_version":1}"#);
    assert!(!again.ok);
    assert!(again.error.unwrap().contains("duplicate hello"));
    let bye = roundtrip(&mut t, r#"{"op":"shutdown"}"#);
    assert!(bye.ok);
}

#[test]
fn exec_success_error_and_syntax() {
    for config in configs() {
        let mut s = KernelSession::start(config).unwrap();
        let ok = s.execute_cell(&cell(StageId::Reasoning, 1, "x = 2\nprint(x * 21)")).unwrap();
        assert_eq!(ok.result, Ok(()));
        assert_eq!(ok.stdout, "42\n");
        let err = s.execute_cell(&cell(StageId::Reasoning, 2, "y = x / 0")).unwrap();
        assert_eq!(err.result, Err("ZeroDivisionError: division by zero (line 2: y = x / 0)".into()));
        let syn = s.execute_cell(&cell(StageId::Reasoning, 3, "print('a'\nz = 1")).unwrap();
        assert!(syn.result.unwrap_err().starts_with("SyntaxError"));
        assert!(syn.stdout.is_empty());
        s.shutdown();
    }
}

#[test]
fn stderr_is_kept_apart() {
    for config in configs() {
        let mut s = KernelSession::start(config).unwrap();
        let out = s
            .execute_cell(&cell(StageId::Reasoning, 1, "import sys\nprint('visible')\nsys.stderr.write('noise\\n')"))
            .unwrap();
        assert_eq!(out.stdout, "visible\n");
        assert_eq!(out.stderr, "noise\n");
    }
}

#[test]
fn timeout_kills_and_replay_recovers() {
    for mut config in configs() {
        config.cell_timeout = Duration::from_millis(700);
        let mut s = KernelSession::start(config).unwrap();
        let mut base = CodeBase::new();
        let init = initial_code(&two_by_two());
        assert_eq!(s.execute_cell(&init).unwrap().result, Ok(()));
        base.push(init);
        let before = ready(&mut s);
        let started = Instant::now();
        let hung = s.execute_cell(&cell(StageId::Reasoning, 1, "while True:\n    pass")).unwrap();
        assert!(hung.result.unwrap_err().starts_with("execution timeout"));
        assert!(started.elapsed() < Duration::from_secs(5));
        assert!(matches!(
            s.execute_cell(&cell(StageId::Reasoning, 1, "x = 1")),
            Err(KernelError::Unavailable(_))
        ));
        s.restart_and_replay(&base).unwrap();
        assert_eq!(ready(&mut s), before);
    }
}

#[test]
fn crash_is_contained() {
    for config in configs() {
        let mut s = KernelSession::start(config).unwrap();
        let mut base = CodeBase::new();
        let init = initial_code(&two_by_two());
        s.execute_cell(&init).unwrap();
        base.push(init);
        let before = ready(&mut s);
        let crash = s.execute_cell(&cell(StageId::Reasoning, 1, "import os\nos._exit(1)")).unwrap();
        assert!(crash.result.unwrap_err().contains("kernel process terminated"));
        s.restart_and_replay(&base).unwrap();
        assert_eq!(ready(&mut s), before);
        assert_eq!(s.restarts(), 1);
    }
}

#[test]
fn missing_table_object() {
    for config in configs() {
        let mut s = KernelSession::start(config).unwrap();
        assert_eq!(
            s.current_table_status().unwrap(),
            StatusOutcome::Missing("table object missing".into())
        );
        s.execute_cell(&initial_code(&two_by_two())).unwrap();
        s.execute_cell(&cell(StageId::Reasoning, 1, "del df")).unwrap();
        assert!(matches!(s.current_table_status().unwrap(), StatusOutcome::Missing(_)));
    }
}

#[test]
fn status_markdown_matches_table_rendering() {
    let table = two_by_two();
    for config in configs() {
        let mut s = KernelSession::start(config).unwrap();
        s.execute_cell(&initial_code(&table)).unwrap();
        let (markdown, digest) = ready(&mut s);
        assert_eq!(markdown, table.to_markdown(None));
        assert_eq!(digest.len(), 64);
    }
}

#[test]
fn replay_of_five_cells_is_deterministic() {
    let mut base = CodeBase::new();
    base.push(initial_code(&two_by_two()));
    for (i, src) in [
        "df['a'] = pd.to_numeric(df['a'])",
        "df['c'] = df['a'] * 10",
        "df = df[df['c'] > 10]",
        "total = df['c'].sum()",
    ]
    .into_iter()
    .enumerate()
    {
        base.push(cell(StageId::Reasoning, i + 1, src));
    }
    let mut digests = Vec::new();
    for config in configs() {
        let mut s = KernelSession::start(config).unwrap();
        for c in base.cells() {
            assert_eq!(s.execute_cell(c).unwrap().result, Ok(()));
        }
        let live = ready(&mut s);
        s.execute_cell(&cell(StageId::Reasoning, 9, "df = df.head(0)\nnoise = 1")).unwrap();
        assert_ne!(ready(&mut s), live);
        s.restart_and_replay(&base).unwrap();
        assert_eq!(ready(&mut s), live);
        digests.push(live.1);
    }
    assert_eq!(digests[0], digests[1]);
}

#[test]
fn replay_failure_is_non_determinism() {
    let mut base = CodeBase::new();
    base.push(cell(StageId::Reasoning, 1, "x = undefined_name"));
    let mut s = KernelSession::start(KernelConfig::default()).unwrap();
    assert!(matches!(s.restart_and_replay(&base), Err(KernelError::NonDeterminism { .. })));
}

#[test]
fn program_output_and_empty_output() {
    let mut s = KernelSession::start(process_config()).unwrap();
    s.execute_cell(&cell(StageId::Reasoning, 1, "print('scratch')")).unwrap();
    assert!(matches!(s.program_output(StageId::FinalAnswering), Err(KernelError::EmptyOutput(_))));
    let fin = CodeCell::new(StageId::FinalAnswering, None, "answer", "print('Paris')\nprint()".into(), 1);
    s.execute_cell(&fin).unwrap();
    assert_eq!(s.program_output(StageId::FinalAnswering).unwrap(), "Paris");
}

#[test]
fn unstartable_kernel_names_the_path() {
    let config = KernelConfig {
        command: KernelCommand::Program { path: "/nonexistent/kernel".into(), args: Vec::new() },
        ..KernelConfig::default()
    };
    let err = KernelSession::start(config).err().expect("spawn must fail");
    assert!(err.to_string().contains("/nonexistent/kernel"));
}

#[test]
fn bundled_final_answer_demos_execute() {
    let lib = PromptLibrary::builtin();
    for kind in [TaskKind::Qa, TaskKind::FactVerification] {
        for demo in lib.demos(kind, DemoSet::FinalAnswer) {
            let mut s = KernelSession::start(KernelConfig::default()).unwrap();
            let work = s.execute_cell(&cell(StageId::Reasoning, 1, demo.section("code"))).unwrap();
            assert_eq!(work.result, Ok(()), "demo code failed: {}", demo.section("code"));
            let fin = CodeCell::new(StageId::FinalAnswering, None, "answer", demo.section("answer_code").to_string(), 1);
            assert_eq!(s.execute_cell(&fin).unwrap().result, Ok(()));
            assert_eq!(s.program_output(StageId::FinalAnswering).unwrap(), demo.section("output").trim());
        }
    }
}
