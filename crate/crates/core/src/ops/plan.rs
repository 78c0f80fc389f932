//! The declarative pipeline IR: an ordered list of parameterized operator
//! applications over named tables, serialized as JSON.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{OperatorCall, OperatorKind};

/// Machine-readable description of the IR, also served by the
/// `plan-schema` CLI subcommand.
pub const PLAN_SCHEMA_JSON: &str = include_str!("plan_schema.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineStep {
    #[serde(flatten)]
    pub call: OperatorCall,
    /// Input table for unary operators. Defaults to the previous step's
    /// output, or the sole source table for the first step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub output_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelinePlan {
    pub steps: Vec<PipelineStep>,
    pub final_output: String,
}

impl PipelinePlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plans serialize")
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    pub fn operator_kinds(&self) -> Vec<OperatorKind> {
        self.steps.iter().map(|s| s.call.kind()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PlanLimits {
    pub max_steps: usize,
}

impl Default for PlanLimits {
    fn default() -> Self {
        Self { max_steps: 10 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("step {step}: unknown operator {name:?}")]
    UnknownOperator { step: usize, name: String },
    #[error("step {step} ({op}) reads undefined table {name:?}")]
    DanglingRef { step: usize, op: OperatorKind, name: String },
    #[error("final output {name:?} is not a source table or step output")]
    DanglingFinalOutput { name: String },
    #[error("step {step} output name {name:?} is already bound")]
    DuplicateOutput { step: usize, name: String },
    #[error("plan has {got} steps, allowed range is 1..={max}")]
    StepCount { got: usize, max: usize },
    #[error("step {step}: {message}")]
    InvalidParams { step: usize, message: String },
}

/// Parses and validates IR text with default limits and no known source
/// names (source references are then checked at execution time).
pub fn parse_plan(text: &str) -> Result<PipelinePlan, PlanError> {
    parse_plan_with(text, &PlanLimits::default(), None)
}

/// Parses IR text. When `sources` is given, table references must resolve
/// to a source or an earlier step output.
pub fn parse_plan_with(
    text: &str,
    limits: &PlanLimits,
    sources: Option<&BTreeSet<String>>,
) -> Result<PipelinePlan, PlanError> {
    let raw: serde_json::Value = serde_json::from_str(text).map_err(|e| PlanError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;

    // check operator names upfront for a crisp error instead of a generic
    // unknown-variant message
    if let Some(steps) = raw.get("steps").and_then(|s| s.as_array()) {
        for (i, step) in steps.iter().enumerate() {
            if let Some(op) = step.get("op").and_then(|o| o.as_str()) {
                if OperatorKind::from_name(op).is_none() {
                    return Err(PlanError::UnknownOperator { step: i, name: op.to_string() });
                }
            }
        }
    }

    let plan: PipelinePlan = serde_json::from_value(raw).map_err(|e| PlanError::Syntax {
        line: 0,
        column: 0,
        message: e.to_string(),
    })?;
    validate_plan(&plan, limits, sources)?;
    Ok(plan)
}

pub fn validate_plan(
    plan: &PipelinePlan,
    limits: &PlanLimits,
    sources: Option<&BTreeSet<String>>,
) -> Result<(), PlanError> {
    if plan.steps.is_empty() || plan.steps.len() > limits.max_steps {
        return Err(PlanError::StepCount { got: plan.steps.len(), max: limits.max_steps });
    }

    let mut bound: BTreeSet<String> = sources
        .map(|s| s.iter().map(|n| n.trim().to_string()).collect())
        .unwrap_or_default();
    let checking_refs = sources.is_some();

    for (i, step) in plan.steps.iter().enumerate() {
        for name in step.call.table_refs() {
            if checking_refs && !bound.contains(name.trim()) {
                return Err(PlanError::DanglingRef {
                    step: i,
                    op: step.call.kind(),
                    name: name.to_string(),
                });
            }
        }
        if let Some(input) = &step.input {
            if checking_refs && !bound.contains(input.trim()) {
                return Err(PlanError::DanglingRef {
                    step: i,
                    op: step.call.kind(),
                    name: input.clone(),
                });
            }
        }
        validate_params(i, &step.call)?;
        let out = step.output_name.trim().to_string();
        if !bound.insert(out.clone()) {
            return Err(PlanError::DuplicateOutput { step: i, name: out });
        }
    }

    if checking_refs && !bound.contains(plan.final_output.trim()) {
        return Err(PlanError::DanglingFinalOutput { name: plan.final_output.clone() });
    }
    Ok(())
}

fn validate_params(step: usize, call: &OperatorCall) -> Result<(), PlanError> {
    let fail = |message: String| Err(PlanError::InvalidParams { step, message });
    match call {
        OperatorCall::Join(p) => {
            if p.on.is_empty() {
                return fail("join needs at least one key pair".into());
            }
        }
        OperatorCall::Union(p) => {
            if p.tables.len() < 2 {
                return fail(format!("union needs at least 2 tables, got {}", p.tables.len()));
            }
        }
        OperatorCall::GroupBy(p) => {
            if p.aggs.is_empty() {
                return fail("groupby needs at least one aggregate".into());
            }
        }
        OperatorCall::Rename(p) => {
            let mut olds = BTreeSet::new();
            let mut news = BTreeSet::new();
            for (old, new) in &p.mapping {
                if !olds.insert(old.trim()) {
                    return fail(format!("column {old:?} renamed twice"));
                }
                if !news.insert(new.trim()) {
                    return fail(format!("two columns renamed to {new:?}"));
                }
            }
        }
        _ => {}
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const RENAME_PLAN: &str = r#"{
        "steps": [
            {"op": "Rename", "params": {"mapping": [["Store_id", "Shop_id"]]}, "output_name": "t1"}
        ],
        "final_output": "t1"
    }"#;

    #[test]
    fn well_formed_single_step_plan_parses() {
        let plan = parse_plan(RENAME_PLAN).unwrap();
        assert_eq!(plan.step_count(), 1);
        assert_eq!(plan.operator_kinds(), vec![OperatorKind::Rename]);
    }

    #[test]
    fn unknown_operator_is_named() {
        let text = r#"{"steps":[{"op":"Sort","params":{},"output_name":"t"}],"final_output":"t"}"#;
        let err = parse_plan(text).unwrap_err();
        assert_eq!(err, PlanError::UnknownOperator { step: 0, name: "Sort".into() });
    }

    #[test]
    fn dangling_ref_names_the_step() {
        let text = r#"{
            "steps": [
                {"op": "Rename", "params": {"mapping": []}, "input": "src", "output_name": "a"},
                {"op": "Join", "params": {"left": "a", "right": "ghost", "on": [["k","k"]], "how": "inner"}, "output_name": "b"}
            ],
            "final_output": "b"
        }"#;
        let sources = BTreeSet::from(["src".to_string()]);
        let err = parse_plan_with(text, &PlanLimits::default(), Some(&sources)).unwrap_err();
        assert_eq!(
            err,
            PlanError::DanglingRef { step: 1, op: OperatorKind::Join, name: "ghost".into() }
        );
    }

    #[test]
    fn empty_plan_is_rejected() {
        let text = r#"{"steps":[],"final_output":"t"}"#;
        assert!(matches!(parse_plan(text), Err(PlanError::StepCount { got: 0, .. })));
    }

    #[test]
    fn step_count_cap_is_enforced() {
        let step = r#"{"op": "DropColumns", "params": {"names": []}, "output_name": "tN"}"#;
        let steps: Vec<String> = (0..11)
            .map(|i| step.replace("tN", &format!("t{i}")))
            .collect();
        let text = format!(r#"{{"steps":[{}],"final_output":"t10"}}"#, steps.join(","));
        assert!(matches!(parse_plan(&text), Err(PlanError::StepCount { got: 11, max: 10 })));
    }

    #[test]
    fn duplicate_output_names_are_rejected() {
        let text = r#"{
            "steps": [
                {"op": "DropColumns", "params": {"names": []}, "output_name": "t"},
                {"op": "DropColumns", "params": {"names": []}, "output_name": "t"}
            ],
            "final_output": "t"
        }"#;
        assert!(matches!(parse_plan(text), Err(PlanError::DuplicateOutput { step: 1, .. })));
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_plan("{not json").unwrap_err();
        match err {
            PlanError::Syntax { line, column, .. } => {
                assert!(line >= 1 && column >= 1);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn rename_collisions_rejected_at_parse() {
        let text = r#"{
            "steps": [{"op": "Rename", "params": {"mapping": [["a","x"],["a","y"]]}, "output_name": "t"}],
            "final_output": "t"
        }"#;
        assert!(matches!(parse_plan(text), Err(PlanError::InvalidParams { step: 0, .. })));
    }

    #[test]
    fn plan_json_round_trips() {
        let plan = parse_plan(RENAME_PLAN).unwrap();
        let again = parse_plan(&plan.to_json()).unwrap();
        assert_eq!(plan, again);
    }

    #[test]
    fn plan_schema_doc_is_valid_json() {
        let v: serde_json::Value = serde_json::from_str(PLAN_SCHEMA_JSON).unwrap();
        assert!(v.get("properties").is_some());
    }
}
