//! `report`: re-scores nothing, reads the summaries of finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;
use stagewise::eval::{compare_variants, efficiency_report, group_report, AblationTable, EfficiencyReport, GroupReport};

use crate::run::RunSummary;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub groups: BTreeMap<String, GroupReport>,
    pub efficiency: EfficiencyReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ablation: Option<AblationTable>,
    #[serde(skip)]
    order: Vec<String>,
}

impl Report {
    pub fn render(&self) -> String {
        let mut out = String::new();
        for label in &self.order {
            let _ = writeln!(out, "== {label} ==");
            out.push_str(&self.groups[label].render(label));
            out.push('\n');
        }
        out.push_str("== generation counts (mean, max) ==\n");
        out.push_str(&self.efficiency.render());
        if let Some(ablation) = &self.ablation {
            let _ = writeln!(out, "\n== ablation vs {} ==", ablation.baseline);
            out.push_str(&ablation.render());
        }
        out
    }
}

/// Labels each run by its variant, falling back to the directory name when
/// two runs share a variant.
fn labels(dirs: &[PathBuf], summaries: &[RunSummary]) -> Vec<String> {
    let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
    for s in summaries {
        *seen.entry(s.variant.as_str()).or_default() += 1;
    }
    dirs.iter()
        .zip(summaries)
        .map(|(d, s)| {
            if seen[s.variant.as_str()] > 1 {
                let name = d.file_name().map_or_else(|| d.display().to_string(), |n| n.to_string_lossy().into_owned());
                format!("{} ({name})", s.variant)
            } else {
                s.variant.clone()
            }
        })
        .collect()
}

pub fn cmd_report(dirs: &[PathBuf]) -> Result<Report> {
    if dirs.is_empty() {
        bail!("report needs at least one run directory");
    }
    let summaries = dirs.iter().map(|d| RunSummary::load(d)).collect::<Result<Vec<_>>>()?;
    let labels = labels(dirs, &summaries);
    let mut sets: Vec<(String, Vec<_>)> = labels.iter().cloned().zip(summaries.iter().map(RunSummary::results)).collect();
    let groups = sets.iter().map(|(l, r)| (l.clone(), group_report(r))).collect();
    let efficiency = efficiency_report(&sets);
    let ablation = if sets.len() > 1 {
        if let Some(i) = summaries.iter().position(|s| s.variant == "original") {
            let base = sets.remove(i);
            sets.insert(0, base);
        }
        Some(compare_variants(&sets)?)
    } else {
        None
    };
    Ok(Report { groups, efficiency, ablation, order: labels })
}
