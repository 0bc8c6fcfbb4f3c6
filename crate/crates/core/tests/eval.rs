use proptest::prelude::*;
use serde::Deserialize;

use stagewise::engine::SampleStatus;
use stagewise::eval::{
    accuracy, compare_variants, denotation_match, efficiency, fact_match, group_report, official_check, score,
    EvalError, SampleResult,
};
use stagewise::llm::CallCounts;
use stagewise::table::{AnswerKey, Difficulty, SizeGroup};

#[derive(Deserialize)]
struct GoldenPair {
    predicted: Vec<String>,
    gold: Vec<String>,
    official: bool,
}

fn golden() -> Vec<GoldenPair> {
    include_str!("fixtures/denotation_golden.jsonl")
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn golden_corpus_agrees_with_official_verdicts() {
    let pairs = golden();
    assert!(pairs.len() >= 50);
    let disagreements: Vec<String> = pairs
        .iter()
        .filter(|p| denotation_match(&p.predicted, &p.gold) != p.official || official_check(&p.predicted, &p.gold) != p.official)
        .map(|p| format!("{:?} vs {:?}", p.predicted, p.gold))
        .collect();
    assert!(disagreements.is_empty(), "{disagreements:#?}");
}

fn result(id: &str, correct: bool, d: Difficulty, s: SizeGroup) -> SampleResult {
    SampleResult {
        sample_id: id.into(),
        status: if correct { SampleStatus::Answered } else { SampleStatus::RetryExhausted },
        correct,
        counts: CallCounts { planning: 3, codegen: 6, regen: 0 },
        difficulty: d,
        size_group: s,
    }
}

#[test]
fn fact_labels_and_failures() {
    assert!(fact_match(1, 1));
    assert!(!fact_match(0, 1));
    assert!(!score(None, &AnswerKey::Label(1)));
    assert!(score(Some(&AnswerKey::Label(0)), &AnswerKey::Label(0)));
    assert!(!score(Some(&AnswerKey::Label(0)), &AnswerKey::Denotations(vec!["0".into()])));
}

#[test]
fn group_cells_match_hand_counts() {
    use Difficulty::*;
    use SizeGroup::*;
    let results = vec![
        result("a", true, Simple, Small),
        result("b", false, Simple, Small),
        result("c", true, Simple, Large),
        result("d", true, Complex, Medium),
        result("e", false, Complex, Medium),
        result("f", false, Complex, Large),
    ];
    let r = group_report(&results);
    assert_eq!(r.cell(Simple, Small).percent(), Some(50.0));
    assert_eq!(r.cell(Simple, Large).percent(), Some(100.0));
    assert_eq!(r.cell(Complex, Medium).percent(), Some(50.0));
    assert_eq!(r.cell(Complex, Large).percent(), Some(0.0));
    assert_eq!(r.cell(Complex, Small).percent(), None);
    assert_eq!(r.difficulty(Simple).correct, 2);
    assert_eq!(r.size(Large).total, 2);
    let text = r.render("WikiTQ (D)");
    assert!(text.contains("66.67"));
    assert!(text.contains('-'));
    assert_eq!(accuracy(&results).accuracy, 50.0);
    assert_eq!(accuracy(&results).failed_by_status["retry_exhausted"], 3);
}

#[test]
fn simple_only_leaves_complex_empty() {
    let results = vec![
        result("a", true, Difficulty::Simple, SizeGroup::Small),
        result("b", false, Difficulty::Simple, SizeGroup::Small),
    ];
    let r = group_report(&results);
    assert_eq!(stagewise::eval::format_percent(r.difficulty(Difficulty::Simple).percent()), "50.00");
    assert_eq!(stagewise::eval::format_percent(r.difficulty(Difficulty::Complex).percent()), "-");
}

#[test]
fn efficiency_means_and_maxima() {
    let mut results: Vec<SampleResult> = [6, 6, 5]
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut r = result(&i.to_string(), true, Difficulty::Simple, SizeGroup::Small);
            r.counts.codegen = *c;
            r
        })
        .collect();
    let e = efficiency(&results);
    assert_eq!(format!("{:.2}", e.codegen.mean), "5.67");
    assert_eq!(e.codegen.max, 6);
    assert_eq!(e.regen.mean, 0.0);
    results.push(SampleResult { counts: CallCounts { planning: 3, codegen: 9, regen: 3 }, ..result("x", false, Difficulty::Simple, SizeGroup::Small) });
    let e = efficiency(&results);
    assert_eq!(e.codegen.max, 9);
    assert_eq!(format!("{:.2}", e.codegen.mean), "5.67");
}

#[test]
fn ablation_deltas_and_guard() {
    let set = |n_correct: usize| -> Vec<SampleResult> {
        (0..10).map(|i| result(&format!("s{i}"), i < n_correct, Difficulty::Simple, SizeGroup::Small)).collect()
    };
    let table = compare_variants(&[("original".into(), set(9)), ("only_reason".into(), set(8))]).unwrap();
    assert_eq!(format!("{:.2}", table.rows[1].delta), "-10.00");
    let same = compare_variants(&[("original".into(), set(9)), ("again".into(), set(9))]).unwrap();
    assert!(same.rows.iter().all(|r| format!("{:.2}", r.delta) == "0.00"));
    let mut other = set(9);
    other[0].sample_id = "zz".into();
    assert_eq!(
        compare_variants(&[("original".into(), set(9)), ("x".into(), other)]),
        Err(EvalError::MismatchedSamples(vec!["s0".into(), "zz".into()]))
    );
}

fn item() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z ]{0,8}",
        (-1000i64..1000).prop_map(|n| n.to_string()),
        (-100.0f64..100.0).prop_map(|x| format!("{x:.3}")),
        "[0-9]{4}-[0-9]{1,2}-[0-9]{1,2}",
        "\"?[a-z]{1,5}( \\([a-z]+\\))?\\*?\"?",
    ]
}

proptest! {
    #[test]
    fn matcher_is_reflexive(items in prop::collection::vec(item(), 1..5)) {
        prop_assert!(denotation_match(&items, &items));
    }

    #[test]
    fn matcher_is_symmetric(a in prop::collection::vec(item(), 1..4), b in prop::collection::vec(item(), 1..4)) {
        prop_assert_eq!(denotation_match(&a, &b), denotation_match(&b, &a));
    }

    #[test]
    fn matcher_ignores_order(items in prop::collection::vec(item(), 1..5)) {
        let mut rev = items.clone();
        rev.reverse();
        prop_assert!(denotation_match(&rev, &items));
    }

    #[test]
    fn marginals_recompose(cells in prop::collection::vec((any::<bool>(), 0usize..2, 0usize..3), 1..40)) {
        let results: Vec<SampleResult> = cells.iter().enumerate().map(|(i, (c, d, s))| {
            result(&i.to_string(), *c, [Difficulty::Simple, Difficulty::Complex][*d], [SizeGroup::Small, SizeGroup::Medium, SizeGroup::Large][*s])
        }).collect();
        let r = group_report(&results);
        let overall = accuracy(&results).accuracy;
        let weighted: f64 = [Difficulty::Simple, Difficulty::Complex].iter()
            .map(|d| r.difficulty(*d))
            .filter(|t| t.total > 0)
            .map(|t| t.percent().unwrap() * t.total as f64)
            .sum::<f64>() / results.len() as f64;
        prop_assert!((weighted - overall).abs() < 1e-9);
        prop_assert_eq!(r.overall.total, results.len());
    }
}
