//! Analytical stages and the pipeline variants built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageId {
    Initialization,
    RowSelection,
    DataTypeCleaning,
    Reasoning,
    FinalAnswering,
    ColumnSelection,
}

impl StageId {
    pub const ALL: [StageId; 6] = [
        StageId::Initialization,
        StageId::RowSelection,
        StageId::DataTypeCleaning,
        StageId::Reasoning,
        StageId::FinalAnswering,
        StageId::ColumnSelection,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageId::Initialization => "initialization",
            StageId::RowSelection => "row_selection",
            StageId::DataTypeCleaning => "data_type_cleaning",
            StageId::Reasoning => "reasoning",
            StageId::FinalAnswering => "final_answering",
            StageId::ColumnSelection => "column_selection",
        }
    }

    pub fn spec(self) -> &'static StageSpec {
        &STAGE_SPECS[self as usize]
    }
}

impl fmt::Display for StageId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StageId {
    type Err = StageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| StageError::UnknownStage(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanningMode {
    PlannedFewShot,
    NoPlanning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CodegenMode {
    /// Fixed snippet, no model call.
    Fixed,
    ZeroShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageSpec {
    pub id: StageId,
    pub objective_text: &'static str,
    pub instruction_text: &'static str,
    pub note_text: &'static str,
    pub planning_mode: PlanningMode,
    pub codegen_mode: CodegenMode,
    pub include_query_in_table_header: bool,
}

impl StageSpec {
    pub fn is_planned(&self) -> bool {
        self.planning_mode == PlanningMode::PlannedFewShot
    }
}

// Indexed by `StageId as usize`.
static STAGE_SPECS: [StageSpec; 6] = [
    StageSpec {
        id: StageId::Initialization,
        objective_text: "Store the table in a pandas DataFrame named df.",
        instruction_text: "Run the fixed loading snippet; every cell is kept as a string.",
        note_text: "",
        planning_mode: PlanningMode::NoPlanning,
        codegen_mode: CodegenMode::Fixed,
        include_query_in_table_header: true,
    },
    StageSpec {
        id: StageId::RowSelection,
        objective_text: "Remove redundant rows that do not describe a distinct record.",
        instruction_text: "Drop summary rows, repeated header rows and similar noise; keep every record row.",
        note_text: "Do not filter by the conditions of the task here.",
        planning_mode: PlanningMode::PlannedFewShot,
        codegen_mode: CodegenMode::ZeroShot,
        include_query_in_table_header: false,
    },
    StageSpec {
        id: StageId::DataTypeCleaning,
        objective_text: "Convert the columns the task needs from strings into suitable types.",
        instruction_text: "Strip noise such as separators, units and footnote marks, then convert to numbers or dates.",
        note_text: "Only touch columns that the task depends on.",
        planning_mode: PlanningMode::PlannedFewShot,
        codegen_mode: CodegenMode::ZeroShot,
        include_query_in_table_header: true,
    },
    StageSpec {
        id: StageId::Reasoning,
        objective_text: "Compute the intermediate results that lead to the answer.",
        instruction_text: "Use filtering, sorting, counting, arithmetic and similar operations; keep results in variables.",
        note_text: "Do not print the final answer in this stage.",
        planning_mode: PlanningMode::PlannedFewShot,
        codegen_mode: CodegenMode::ZeroShot,
        include_query_in_table_header: true,
    },
    StageSpec {
        id: StageId::FinalAnswering,
        objective_text: "Combine the intermediate results and print the final answer.",
        instruction_text: "Print only the answer.",
        note_text: "",
        planning_mode: PlanningMode::NoPlanning,
        codegen_mode: CodegenMode::FewShot,
        include_query_in_table_header: true,
    },
    StageSpec {
        id: StageId::ColumnSelection,
        objective_text: "Keep only the columns related to the task.",
        instruction_text: "Drop columns that the task cannot depend on.",
        note_text: "When unsure, keep the column.",
        planning_mode: PlanningMode::PlannedFewShot,
        codegen_mode: CodegenMode::ZeroShot,
        include_query_in_table_header: true,
    },
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StageError {
    #[error("unknown stage '{0}'")]
    UnknownStage(String),
    #[error("unknown pipeline variant '{0}' (expected original, only_reason, no_row_sel, no_dty_cle, with_col_sel or custom:<stages>)")]
    UnknownVariant(String),
    #[error("invalid custom stage sequence: {0}")]
    InvalidSequence(String),
}

/// A stage division. `Custom` sequences are experimental.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum PipelineVariant {
    Original,
    OnlyReason,
    NoRowSel,
    NoDtyCle,
    WithColSel,
    Custom(Vec<StageId>),
}

impl PipelineVariant {
    pub const NAMED: [PipelineVariant; 5] = [
        PipelineVariant::Original,
        PipelineVariant::OnlyReason,
        PipelineVariant::NoRowSel,
        PipelineVariant::NoDtyCle,
        PipelineVariant::WithColSel,
    ];

    pub fn name(&self) -> String {
        match self {
            PipelineVariant::Original => "original".into(),
            PipelineVariant::OnlyReason => "only_reason".into(),
            PipelineVariant::NoRowSel => "no_row_sel".into(),
            PipelineVariant::NoDtyCle => "no_dty_cle".into(),
            PipelineVariant::WithColSel => "with_col_sel".into(),
            PipelineVariant::Custom(stages) => format!(
                "custom:{}",
                stages.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(",")
            ),
        }
    }

    pub fn is_experimental(&self) -> bool {
        matches!(self, PipelineVariant::Custom(_))
    }

    /// Validates a custom sequence: Initialization first, FinalAnswering
    /// last, planned stages in between, no repeats.
    pub fn custom(stages: Vec<StageId>) -> Result<Self, StageError> {
        let bad = |m: &str| Err(StageError::InvalidSequence(m.to_string()));
        if stages.first() != Some(&StageId::Initialization) {
            return bad("must begin with initialization");
        }
        if stages.last() != Some(&StageId::FinalAnswering) || stages.len() < 2 {
            return bad("must end with final_answering");
        }
        let middle = &stages[1..stages.len() - 1];
        if middle.iter().any(|s| !s.spec().is_planned()) {
            return bad("only planned stages may appear between the ends");
        }
        for (i, s) in middle.iter().enumerate() {
            if middle[..i].contains(s) {
                return bad(&format!("stage {s} repeated"));
            }
        }
        Ok(PipelineVariant::Custom(stages))
    }
}

/// The stage order of a variant.
pub fn stage_sequence(variant: &PipelineVariant) -> Vec<StageId> {
    use StageId::*;
    match variant {
        PipelineVariant::Original => {
            vec![Initialization, RowSelection, DataTypeCleaning, Reasoning, FinalAnswering]
        }
        PipelineVariant::OnlyReason => vec![Initialization, Reasoning, FinalAnswering],
        PipelineVariant::NoRowSel => vec![Initialization, DataTypeCleaning, Reasoning, FinalAnswering],
        PipelineVariant::NoDtyCle => vec![Initialization, RowSelection, Reasoning, FinalAnswering],
        PipelineVariant::WithColSel => vec![
            Initialization,
            ColumnSelection,
            RowSelection,
            DataTypeCleaning,
            Reasoning,
            FinalAnswering,
        ],
        PipelineVariant::Custom(stages) => stages.clone(),
    }
}

/// Planning calls one sample costs under a variant.
pub fn planned_stage_count(variant: &PipelineVariant) -> usize {
    stage_sequence(variant)
        .into_iter()
        .filter(|s| s.spec().is_planned())
        .count()
}

impl fmt::Display for PipelineVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for PipelineVariant {
    type Err = StageError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(PipelineVariant::Original),
            "only_reason" => Ok(PipelineVariant::OnlyReason),
            "no_row_sel" => Ok(PipelineVariant::NoRowSel),
            "no_dty_cle" => Ok(PipelineVariant::NoDtyCle),
            "with_col_sel" => Ok(PipelineVariant::WithColSel),
            _ => match s.strip_prefix("custom:") {
                Some(list) => PipelineVariant::custom(
                    list.split(',')
                        .map(|p| p.trim().parse())
                        .collect::<Result<_, _>>()?,
                ),
                None => Err(StageError::UnknownVariant(s.to_string())),
            },
        }
    }
}

impl From<PipelineVariant> for String {
    fn from(v: PipelineVariant) -> String {
        v.name()
    }
}

impl TryFrom<String> for PipelineVariant {
    type Error = StageError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use StageId::*;

    #[test]
    fn spec_table_is_indexed_by_id() {
        for id in StageId::ALL {
            assert_eq!(id.spec().id, id);
        }
    }

    #[test]
    fn mode_invariants() {
        assert_eq!(Initialization.spec().planning_mode, PlanningMode::NoPlanning);
        assert_eq!(Initialization.spec().codegen_mode, CodegenMode::Fixed);
        assert_eq!(FinalAnswering.spec().planning_mode, PlanningMode::NoPlanning);
        assert_eq!(FinalAnswering.spec().codegen_mode, CodegenMode::FewShot);
        for s in [RowSelection, DataTypeCleaning, Reasoning, ColumnSelection] {
            assert!(s.spec().is_planned());
            assert_eq!(s.spec().codegen_mode, CodegenMode::ZeroShot);
        }
        assert!(!RowSelection.spec().include_query_in_table_header);
        assert!(ColumnSelection.spec().include_query_in_table_header);
    }

    #[test]
    fn sequences() {
        assert_eq!(
            stage_sequence(&PipelineVariant::Original),
            [Initialization, RowSelection, DataTypeCleaning, Reasoning, FinalAnswering]
        );
        assert_eq!(stage_sequence(&PipelineVariant::OnlyReason).len(), 3);
        let col = stage_sequence(&PipelineVariant::WithColSel);
        assert_eq!(col.len(), 6);
        assert_eq!(col[1], ColumnSelection);
        assert!(!stage_sequence(&PipelineVariant::NoRowSel).contains(&RowSelection));
        assert!(!stage_sequence(&PipelineVariant::NoDtyCle).contains(&DataTypeCleaning));
        for v in PipelineVariant::NAMED {
            let seq = stage_sequence(&v);
            assert_eq!(seq.first(), Some(&Initialization));
            assert_eq!(seq.last(), Some(&FinalAnswering));
            if v != PipelineVariant::WithColSel {
                assert!(!seq.contains(&ColumnSelection));
            }
        }
    }

    #[test]
    fn planning_call_counts() {
        assert_eq!(planned_stage_count(&PipelineVariant::Original), 3);
        assert_eq!(planned_stage_count(&PipelineVariant::OnlyReason), 1);
        assert_eq!(planned_stage_count(&PipelineVariant::WithColSel), 4);
    }

    #[test]
    fn variant_names_round_trip() {
        for v in PipelineVariant::NAMED {
            assert_eq!(v.name().parse::<PipelineVariant>().unwrap(), v);
        }
        let custom: PipelineVariant = "custom:initialization,reasoning,final_answering".parse().unwrap();
        assert!(custom.is_experimental());
        assert_eq!(stage_sequence(&custom), [Initialization, Reasoning, FinalAnswering]);
        assert!("fancy".parse::<PipelineVariant>().is_err());
        assert!("custom:reasoning,final_answering".parse::<PipelineVariant>().is_err());
        assert!("custom:initialization,reasoning,reasoning,final_answering"
            .parse::<PipelineVariant>()
            .is_err());
        let json = serde_json::to_string(&PipelineVariant::NoDtyCle).unwrap();
        assert_eq!(json, "\"no_dty_cle\"");
    }
}
