//! Scoring and reports: denotation matching, fact labels, difficulty/size
//! groups, generation-count efficiency and variant comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::engine::SampleStatus;
use crate::llm::CallCounts;
use crate::table::{AnswerKey, Difficulty, SizeGroup};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("result sets cover different samples; symmetric difference: {0:?}")]
    MismatchedSamples(Vec<String>),
    #[error("no result sets to compare")]
    Empty,
}

fn is_py_space(c: char) -> bool {
    c.is_whitespace() || ('\u{1c}'..='\u{1f}').contains(&c)
}

fn py_strip(s: &str) -> &str {
    s.trim_matches(is_py_space)
}

/// Start of the longest suffix made only of citation marks: `[..]` groups
/// (a leading group only when it is `[digits]`) and `•♦†‡*#+`.
fn citation_suffix_start(s: &[char]) -> usize {
    let n = s.len();
    let mut tile = vec![false; n + 1];
    tile[n] = true;
    for i in (0..n).rev() {
        let c = s[i];
        if "•♦†‡*#+".contains(c) {
            tile[i] = tile[i + 1];
        }
        if c == '[' && !tile[i] {
            if let Some(off) = s[i + 1..].iter().position(|&x| x == ']') {
                let j = i + 1 + off;
                let inner = &s[i + 1..j];
                let allowed = i > 0 || (!inner.is_empty() && inner.iter().all(char::is_ascii_digit));
                if allowed && tile[j + 1] {
                    tile[i] = true;
                }
            }
        }
    }
    (0..=n).find(|&i| tile[i]).unwrap_or(n)
}

/// Start of the longest suffix of ` (..)` groups, never at position 0.
fn parenthetical_suffix_start(s: &[char]) -> usize {
    let n = s.len();
    let mut tile = vec![false; n + 1];
    tile[n] = true;
    for i in (0..n.saturating_sub(1)).rev() {
        if s[i] == ' ' && s[i + 1] == '(' {
            if let Some(off) = s[i + 2..].iter().position(|&x| x == ')') {
                let j = i + 2 + off;
                tile[i] = tile[j + 1];
            }
        }
    }
    (1..=n).find(|&i| tile[i]).unwrap_or(n)
}

/// The official evaluator's string normalization.
pub fn normalize(text: &str) -> String {
    let mut x: String = text
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .map(|c| match c {
            '‘' | '’' | '´' | '`' => '\'',
            '“' | '”' => '"',
            '‐' | '‑' | '‒' | '–' | '—' | '−' => '-',
            other => other,
        })
        .collect();
    loop {
        let old = x.clone();
        let chars: Vec<char> = py_strip(&x).chars().collect();
        x = chars[..citation_suffix_start(&chars)].iter().collect();
        let chars: Vec<char> = py_strip(&x).chars().collect();
        x = chars[..parenthetical_suffix_start(&chars)].iter().collect();
        let stripped = py_strip(&x);
        x = match stripped.strip_prefix('"').and_then(|r| r.strip_suffix('"')) {
            Some(inner) if !inner.contains('"') => inner.to_string(),
            _ => stripped.to_string(),
        };
        if x == old {
            break;
        }
    }
    if x.ends_with('.') {
        x.pop();
    }
    x.split(is_py_space)
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
        .trim_matches(is_py_space)
        .to_string()
}

/// Drops underscores that Python accepts inside numeric literals.
fn strip_digit_underscores(s: &str) -> Option<String> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c == '_' {
            let ok = i > 0
                && i + 1 < chars.len()
                && chars[i - 1].is_ascii_digit()
                && chars[i + 1].is_ascii_digit();
            if !ok {
                return None;
            }
        } else {
            out.push(c);
        }
    }
    Some(out)
}

/// Python `int(text)`.
fn py_int(text: &str) -> Option<f64> {
    let t = strip_digit_underscores(py_strip(text))?;
    let digits = t.strip_prefix(['+', '-']).unwrap_or(&t);
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    t.parse::<f64>().ok()
}

/// Python `float(text)`, finite values only.
fn py_float(text: &str) -> Option<f64> {
    let t = strip_digit_underscores(py_strip(text))?;
    let body = t.strip_prefix(['+', '-']).unwrap_or(&t);
    let well_formed = body.chars().all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
        && body.chars().any(|c| c.is_ascii_digit());
    if !well_formed {
        return None;
    }
    t.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_number(text: &str) -> Option<f64> {
    py_int(text).or_else(|| py_float(text))
}

fn parse_date(text: &str) -> Option<(i64, i64, i64)> {
    let lower = text.to_lowercase();
    let parts: Vec<&str> = lower.split('-').collect();
    if parts.len() != 3 {
        return None;
    }
    let part = |p: &str, wild: &[&str]| -> Option<i64> {
        if wild.contains(&p) {
            Some(-1)
        } else {
            py_int(p).map(|v| v as i64)
        }
    };
    let year = part(parts[0], &["xx", "xxxx"])?;
    let month = part(parts[1], &["xx"])?;
    let day = part(parts[2], &["xx"])?;
    if year == -1 && month == -1 && day == -1 {
        return None;
    }
    if month != -1 && !(1..=12).contains(&month) {
        return None;
    }
    if day != -1 && !(1..=31).contains(&day) {
        return None;
    }
    Some((year, month, day))
}

/// A typed answer item.
#[derive(Debug, Clone, PartialEq)]
pub enum Denotation {
    Str { normalized: String },
    Number { normalized: String, amount: f64 },
    Date { normalized: String, ymd: (i64, i64, i64) },
}

impl Denotation {
    pub fn parse(original: &str) -> Denotation {
        let normalized = normalize(original);
        if let Some(x) = parse_number(original) {
            let amount = if (x - x.round()).abs() < 1e-6 { x.round() } else { x };
            return Denotation::Number { normalized, amount };
        }
        if let Some(ymd) = parse_date(original) {
            if ymd.1 == -1 && ymd.2 == -1 {
                return Denotation::Number { normalized, amount: ymd.0 as f64 };
            }
            return Denotation::Date { normalized, ymd };
        }
        Denotation::Str { normalized }
    }

    pub fn normalized(&self) -> &str {
        match self {
            Denotation::Str { normalized }
            | Denotation::Number { normalized, .. }
            | Denotation::Date { normalized, .. } => normalized,
        }
    }

    /// `self` is the gold item.
    pub fn matches(&self, other: &Denotation) -> bool {
        if self.normalized() == other.normalized() {
            return true;
        }
        match (self, other) {
            (Denotation::Number { amount: a, .. }, Denotation::Number { amount: b, .. }) => (a - b).abs() < 1e-6,
            (Denotation::Date { ymd: a, .. }, Denotation::Date { ymd: b, .. }) => a == b,
            _ => false,
        }
    }
}

/// The official check: equal lengths and every gold item matched by some
/// predicted item. Duplicates may reuse a predicted item.
pub fn official_check(predicted: &[String], gold: &[String]) -> bool {
    if predicted.len() != gold.len() {
        return false;
    }
    let pred: Vec<Denotation> = predicted.iter().map(|p| Denotation::parse(p)).collect();
    gold.iter()
        .map(|g| Denotation::parse(g))
        .all(|g| pred.iter().any(|p| g.matches(p)))
}

/// Multiset denotation match: equal lengths and a one-to-one pairing of
/// gold and predicted items under the official item match.
pub fn denotation_match(predicted: &[String], gold: &[String]) -> bool {
    if predicted.len() != gold.len() {
        return false;
    }
    let pred: Vec<Denotation> = predicted.iter().map(|p| Denotation::parse(p)).collect();
    let gold: Vec<Denotation> = gold.iter().map(|g| Denotation::parse(g)).collect();
    let mut owner: Vec<Option<usize>> = vec![None; pred.len()];
    fn augment(g: usize, gold: &[Denotation], pred: &[Denotation], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for p in 0..pred.len() {
            if seen[p] || !gold[g].matches(&pred[p]) {
                continue;
            }
            seen[p] = true;
            if owner[p].is_none_or(|o| augment(o, gold, pred, seen, owner)) {
                owner[p] = Some(g);
                return true;
            }
        }
        false
    }
    (0..gold.len()).all(|g| {
        let mut seen = vec![false; pred.len()];
        augment(g, &gold, &pred, &mut seen, &mut owner)
    })
}

pub fn fact_match(predicted: u8, gold: u8) -> bool {
    predicted == gold
}

/// Scores one prediction; a missing prediction is incorrect.
pub fn score(predicted: Option<&AnswerKey>, gold: &AnswerKey) -> bool {
    match (predicted, gold) {
        (Some(AnswerKey::Denotations(p)), AnswerKey::Denotations(g)) => denotation_match(p, g),
        (Some(AnswerKey::Label(p)), AnswerKey::Label(g)) => fact_match(*p, *g),
        _ => false,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleResult {
    pub sample_id: String,
    pub status: SampleStatus,
    pub correct: bool,
    pub counts: CallCounts,
    pub difficulty: Difficulty,
    pub size_group: SizeGroup,
}

fn percent(correct: usize, total: usize) -> Option<f64> {
    (total > 0).then(|| 100.0 * correct as f64 / total as f64)
}

pub fn format_percent(p: Option<f64>) -> String {
    p.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub failed_by_status: BTreeMap<String, usize>,
}

/// Every attempted sample counts in the denominator.
pub fn accuracy(results: &[SampleResult]) -> Accuracy {
    let correct = results.iter().filter(|r| r.correct).count();
    let mut failed_by_status = BTreeMap::new();
    for r in results.iter().filter(|r| r.status != SampleStatus::Answered) {
        *failed_by_status.entry(r.status.to_string()).or_insert(0) += 1;
    }
    Accuracy { total: results.len(), correct, accuracy: percent(correct, results.len()).unwrap_or(0.0), failed_by_status }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub correct: usize,
    pub total: usize,
}

impl Tally {
    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += correct as usize;
    }

    pub fn percent(&self) -> Option<f64> {
        percent(self.correct, self.total)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub cells: BTreeMap<String, Tally>,
    pub by_difficulty: BTreeMap<String, Tally>,
    pub by_size: BTreeMap<String, Tally>,
    pub overall: Tally,
}

fn difficulty_name(d: Difficulty) -> &'static str {
    match d {
        Difficulty::Simple => "simple",
        Difficulty::Complex => "complex",
    }
}

fn size_name(s: SizeGroup) -> &'static str {
    match s {
        SizeGroup::Small => "small",
        SizeGroup::Medium => "medium",
        SizeGroup::Large => "large",
    }
}

const DIFFICULTIES: [Difficulty; 2] = [Difficulty::Simple, Difficulty::Complex];
const SIZES: [SizeGroup; 3] = [SizeGroup::Small, SizeGroup::Medium, SizeGroup::Large];

pub fn group_report(results: &[SampleResult]) -> GroupReport {
    let mut report = GroupReport {
        cells: BTreeMap::new(),
        by_difficulty: DIFFICULTIES.iter().map(|d| (difficulty_name(*d).to_string(), Tally::default())).collect(),
        by_size: SIZES.iter().map(|s| (size_name(*s).to_string(), Tally::default())).collect(),
        overall: Tally::default(),
    };
    for d in DIFFICULTIES {
        for s in SIZES {
            report.cells.insert(format!("{}/{}", difficulty_name(d), size_name(s)), Tally::default());
        }
    }
    for r in results {
        let key = format!("{}/{}", difficulty_name(r.difficulty), size_name(r.size_group));
        report.cells.get_mut(&key).expect("all cells present").add(r.correct);
        report.by_difficulty.get_mut(difficulty_name(r.difficulty)).expect("present").add(r.correct);
        report.by_size.get_mut(size_name(r.size_group)).expect("present").add(r.correct);
        report.overall.add(r.correct);
    }
    report
}

impl GroupReport {
    pub fn cell(&self, d: Difficulty, s: SizeGroup) -> Tally {
        self.cells[&format!("{}/{}", difficulty_name(d), size_name(s))]
    }

    pub fn difficulty(&self, d: Difficulty) -> Tally {
        self.by_difficulty[difficulty_name(d)]
    }

    pub fn size(&self, s: SizeGroup) -> Tally {
        self.by_size[size_name(s)]
    }

    /// A marginal row (`S C | S M L`) under `label`, then the full grid.
    pub fn render(&self, label: &str) -> String {
        let p = |t: Tally| format_percent(t.percent());
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>8} {:>8}   {:>8} {:>8} {:>8}", "", "Simple", "Complex", "Small", "Medium", "Large");
        let _ = writeln!(
            out,
            "{:<16} {:>8} {:>8}   {:>8} {:>8} {:>8}",
            label,
            p(self.difficulty(Difficulty::Simple)),
            p(self.difficulty(Difficulty::Complex)),
            p(self.size(SizeGroup::Small)),
            p(self.size(SizeGroup::Medium)),
            p(self.size(SizeGroup::Large)),
        );
        out.push('\n');
        let _ = writeln!(out, "{:<10} {:>8} {:>8} {:>8} {:>8}", "", "Small", "Medium", "Large", "All");
        for d in DIFFICULTIES {
            let _ = writeln!(
                out,
                "{:<10} {:>8} {:>8} {:>8} {:>8}",
                if d == Difficulty::Simple { "Simple" } else { "Complex" },
                p(self.cell(d, SizeGroup::Small)),
                p(self.cell(d, SizeGroup::Medium)),
                p(self.cell(d, SizeGroup::Large)),
                p(self.difficulty(d)),
            );
        }
        let _ = writeln!(
            out,
            "{:<10} {:>8} {:>8} {:>8} {:>8}",
            "All",
            p(self.size(SizeGroup::Small)),
            p(self.size(SizeGroup::Medium)),
            p(self.size(SizeGroup::Large)),
            p(self.overall),
        );
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub mean: f64,
    pub max: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Efficiency {
    pub completed: usize,
    pub attempted: usize,
    pub planning: CountStats,
    pub codegen: CountStats,
    pub regen: CountStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EfficiencyReport {
    pub variants: BTreeMap<String, Efficiency>,
}

/// Means over Answered samples, maxima over every attempted sample.
pub fn efficiency(results: &[SampleResult]) -> Efficiency {
    let done: Vec<&SampleResult> = results.iter().filter(|r| r.status == SampleStatus::Answered).collect();
    let stat = |f: fn(&CallCounts) -> u32| CountStats {
        mean: if done.is_empty() { 0.0 } else { done.iter().map(|r| f(&r.counts) as f64).sum::<f64>() / done.len() as f64 },
        max: results.iter().map(|r| f(&r.counts)).max().unwrap_or(0),
    };
    Efficiency {
        completed: done.len(),
        attempted: results.len(),
        planning: stat(|c| c.planning),
        codegen: stat(|c| c.codegen),
        regen: stat(|c| c.regen),
    }
}

pub fn efficiency_report(sets: &[(String, Vec<SampleResult>)]) -> EfficiencyReport {
    EfficiencyReport { variants: sets.iter().map(|(v, r)| (v.clone(), efficiency(r))).collect() }
}

impl EfficiencyReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>14} {:>14} {:>14}", "variant", "planning", "codegen", "regen");
        for (variant, e) in &self.variants {
            let cell = |s: CountStats| format!("{:.2} (<= {})", s.mean, s.max);
            let _ = writeln!(out, "{:<16} {:>14} {:>14} {:>14}", variant, cell(e.planning), cell(e.codegen), cell(e.regen));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: String,
    pub accuracy: f64,
    /// Percentage points relative to the baseline (first) set.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationTable {
    pub baseline: String,
    pub rows: Vec<AblationRow>,
}

/// Compares result sets over the same samples; the first set is the
/// baseline.
pub fn compare_variants(sets: &[(String, Vec<SampleResult>)]) -> Result<AblationTable, EvalError> {
    let (baseline, base_results) = sets.first().ok_or(EvalError::Empty)?;
    let ids = |r: &[SampleResult]| r.iter().map(|x| x.sample_id.clone()).collect::<BTreeSet<_>>();
    let base_ids = ids(base_results);
    for (_, results) in &sets[1..] {
        let other = ids(results);
        if other != base_ids {
            return Err(EvalError::MismatchedSamples(base_ids.symmetric_difference(&other).cloned().collect()));
        }
    }
    let base_acc = accuracy(base_results).accuracy;
    Ok(AblationTable {
        baseline: baseline.clone(),
        rows: sets
            .iter()
            .map(|(v, r)| {
                let acc = accuracy(r).accuracy;
                AblationRow { variant: v.clone(), accuracy: acc, delta: acc - base_acc }
            })
            .collect(),
    })
}

impl AblationTable {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<16} {:>9} {:>9}", "variant", "accuracy", "delta");
        for row in &self.rows {
            let _ = writeln!(out, "{:<16} {:>9.2} {:>+9.2}", row.variant, row.accuracy, row.delta);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn normalization_steps() {
        assert_eq!(normalize("  New   York "), "new york");
        assert_eq!(normalize("Team A [1]"), "team a");
        assert_eq!(normalize("[1]"), "");
        assert_eq!(normalize("[a]"), "[a]");
        assert_eq!(normalize("Brazil (BRA) (x)"), "brazil");
        assert_eq!(normalize("(BRA)"), "(bra)");
        assert_eq!(normalize("\"Hi\" [2]"), "hi");
        assert_eq!(normalize("Zürich."), "zurich");
        assert_eq!(normalize("1990–1995"), "1990-1995");
    }

    #[test]
    fn typed_values() {
        assert!(matches!(Denotation::parse("007"), Denotation::Number { amount, .. } if amount == 7.0));
        assert!(matches!(Denotation::parse("2008-xx-xx"), Denotation::Number { amount, .. } if amount == 2008.0));
        assert!(matches!(Denotation::parse("2008-5-1"), Denotation::Date { ymd: (2008, 5, 1), .. }));
        assert!(matches!(Denotation::parse("2,300"), Denotation::Str { .. }));
        assert!(matches!(Denotation::parse("nan"), Denotation::Str { .. }));
        assert!(matches!(Denotation::parse("1_000"), Denotation::Number { amount, .. } if amount == 1000.0));
    }

    #[test]
    fn duplicates_need_distinct_partners() {
        let (p, g) = (strs(&["a", "b"]), strs(&["a", "a"]));
        assert!(official_check(&p, &g));
        assert!(!denotation_match(&p, &g));
        assert!(denotation_match(&strs(&["1", "1.0"]), &strs(&["1", "1"])));
    }

    #[test]
    fn percentages_and_empty_cells() {
        assert_eq!(format_percent(percent(1, 2)), "50.00");
        assert_eq!(format_percent(percent(0, 0)), "-");
        assert_eq!(format_percent(percent(2, 3)), "66.67");
    }
}
