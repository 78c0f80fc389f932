//! Plan execution over an environment of named tables.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::plan::PipelinePlan;
use super::table_ops::{self, OpError};
use super::OperatorCall;
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExecErrorKind {
    MissingColumn,
    MissingTable,
    TypeMismatch,
    DuplicateColumn,
    EmptyPivot,
    BadDateFormat,
    ExpressionError,
}

impl fmt::Display for ExecErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExecErrorKind::MissingColumn => "MissingColumn",
            ExecErrorKind::MissingTable => "MissingTable",
            ExecErrorKind::TypeMismatch => "TypeMismatch",
            ExecErrorKind::DuplicateColumn => "DuplicateColumn",
            ExecErrorKind::EmptyPivot => "EmptyPivot",
            ExecErrorKind::BadDateFormat => "BadDateFormat",
            ExecErrorKind::ExpressionError => "ExpressionError",
        };
        f.write_str(s)
    }
}

/// Why and where a plan failed. Returned instead of a table; no partial
/// results leak out of a failed execution.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionDiagnostics {
    /// Index of the failing step; absent when resolution of the final
    /// output failed after all steps ran.
    pub failed_step: Option<usize>,
    pub error_kind: ExecErrorKind,
    pub message: String,
}

impl fmt::Display for ExecutionDiagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.failed_step {
            Some(i) => write!(f, "step {i}: {}: {}", self.error_kind, self.message),
            None => write!(f, "{}: {}", self.error_kind, self.message),
        }
    }
}

fn resolve<'a>(
    env: &'a BTreeMap<String, Table>,
    name: &str,
) -> Result<&'a Table, OpError> {
    env.get(name.trim()).ok_or_else(|| OpError {
        kind: ExecErrorKind::MissingTable,
        message: format!("table {name:?} is not defined"),
    })
}

fn apply_step(
    call: &OperatorCall,
    input: Option<&str>,
    env: &BTreeMap<String, Table>,
) -> Result<Table, OpError> {
    // unary operators read the explicit step input, defaulting to the
    // previous step's output or the sole source table
    let unary_input = |env: &BTreeMap<String, Table>| -> Result<Table, OpError> {
        match input {
            Some(name) => resolve(env, name).cloned(),
            None => Err(OpError {
                kind: ExecErrorKind::MissingTable,
                message: "step has no resolvable input table".to_string(),
            }),
        }
    };

    match call {
        OperatorCall::Join(p) => {
            let left = resolve(env, &p.left)?;
            let right = resolve(env, &p.right)?;
            table_ops::op_join(left, right, &p.on, p.how)
        }
        OperatorCall::Union(p) => {
            let tables: Vec<&Table> = p
                .tables
                .iter()
                .map(|n| resolve(env, n))
                .collect::<Result<_, _>>()?;
            table_ops::op_union(&tables)
        }
        OperatorCall::GroupBy(p) => {
            let t = unary_input(env)?;
            table_ops::op_groupby(&t, &p.keys, &p.aggs)
        }
        OperatorCall::Pivot(p) => {
            let t = unary_input(env)?;
            table_ops::op_pivot(&t, &p.index, &p.pivot_col, &p.value_col, p.agg_fn)
        }
        OperatorCall::Unpivot(p) => {
            let t = unary_input(env)?;
            table_ops::op_unpivot(&t, &p.id_cols, &p.var_name, &p.value_name)
        }
        OperatorCall::AddColumn(p) => {
            let t = unary_input(env)?;
            table_ops::op_add_column(&t, &p.name, &p.constant)
        }
        OperatorCall::DropColumns(p) => {
            let t = unary_input(env)?;
            table_ops::op_drop_columns(&t, &p.names)
        }
        OperatorCall::Rename(p) => {
            let t = unary_input(env)?;
            table_ops::op_rename(&t, &p.mapping)
        }
        OperatorCall::ColumnArithmetic(p) => {
            let t = unary_input(env)?;
            table_ops::op_column_arithmetic(&t, &p.out_name, &p.expression)
        }
        OperatorCall::DateFormatting(p) => {
            let t = unary_input(env)?;
            table_ops::op_date_format(&t, &p.col, &p.in_format, &p.out_format)
        }
    }
}

/// Runs the plan's steps in order over an environment seeded with the
/// source tables and returns the table bound to `final_output`. The first
/// failing step aborts execution.
pub fn execute_plan(
    plan: &PipelinePlan,
    sources: &BTreeMap<String, Table>,
) -> Result<Table, ExecutionDiagnostics> {
    let mut env: BTreeMap<String, Table> = sources
        .iter()
        .map(|(k, v)| (k.trim().to_string(), v.clone()))
        .collect();
    let source_names: Vec<String> = env.keys().cloned().collect();

    let mut previous_output: Option<String> = None;
    for (i, step) in plan.steps.iter().enumerate() {
        let implicit = previous_output.clone().or_else(|| {
            if source_names.len() == 1 {
                Some(source_names[0].clone())
            } else {
                None
            }
        });
        let input = step.input.clone().or(implicit);
        let result = apply_step(&step.call, input.as_deref(), &env);
        match result {
            Ok(table) => {
                let out_name = step.output_name.trim().to_string();
                env.insert(out_name.clone(), table.with_name(out_name.clone()));
                previous_output = Some(out_name);
            }
            Err(e) => {
                return Err(ExecutionDiagnostics {
                    failed_step: Some(i),
                    error_kind: e.kind,
                    message: e.message,
                })
            }
        }
    }

    match env.get(plan.final_output.trim()) {
        Some(t) => Ok(t.clone()),
        None => Err(ExecutionDiagnostics {
            failed_step: None,
            error_kind: ExecErrorKind::MissingTable,
            message: format!("final output {:?} is not defined", plan.final_output),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::super::plan::{parse_plan, PipelineStep};
    use super::super::{OperatorCall, RenameParams};
    use super::*;
    use crate::table::{read_csv_str, CsvOptions};

    fn sources_one(name: &str, csv: &str) -> BTreeMap<String, Table> {
        let t = read_csv_str(name, csv, &CsvOptions::default()).unwrap();
        BTreeMap::from([(name.to_string(), t)])
    }

    fn rename_plan() -> PipelinePlan {
        PipelinePlan {
            steps: vec![PipelineStep {
                call: OperatorCall::Rename(RenameParams {
                    mapping: vec![("Store_id".into(), "Shop_id".into())],
                }),
                input: None,
                output_name: "t1".into(),
            }],
            final_output: "t1".into(),
        }
    }

    #[test]
    fn rename_step_renames_schema() {
        let sources = sources_one("sales", "Date,Store_id\n2024-01-01,1\n");
        let out = execute_plan(&rename_plan(), &sources).unwrap();
        let names: Vec<_> = out.schema().names().collect();
        assert!(names.contains(&"Shop_id"));
        assert!(!names.contains(&"Store_id"));
    }

    #[test]
    fn missing_column_aborts_with_diagnostics() {
        let sources = sources_one("sales", "Date\n2024-01-01\n");
        let err = execute_plan(&rename_plan(), &sources).unwrap_err();
        assert_eq!(err.error_kind, ExecErrorKind::MissingColumn);
        assert_eq!(err.failed_step, Some(0));
    }

    #[test]
    fn undefined_final_output_is_reported() {
        let sources = sources_one("sales", "Store_id\n1\n");
        let mut plan = rename_plan();
        plan.final_output = "nope".into();
        let err = execute_plan(&plan, &sources).unwrap_err();
        assert_eq!(err.error_kind, ExecErrorKind::MissingTable);
        assert_eq!(err.failed_step, None);
    }

    #[test]
    fn implicit_input_is_ambiguous_with_two_sources() {
        let mut sources = sources_one("a", "Store_id\n1\n");
        sources.extend(sources_one("b", "Store_id\n2\n"));
        let err = execute_plan(&rename_plan(), &sources).unwrap_err();
        assert_eq!(err.error_kind, ExecErrorKind::MissingTable);
    }

    #[test]
    fn executor_is_deterministic() {
        let sources = sources_one(
            "sales",
            "Region,Amount\nnorth,1\nsouth,2\nnorth,3\n",
        );
        let plan = parse_plan(
            r#"{"steps":[{"op":"GroupBy","params":{"keys":["Region"],"aggs":[{"col":"Amount","fn":"sum","out_name":"Total"}]},"output_name":"g"}],"final_output":"g"}"#,
        )
        .unwrap();
        let a = execute_plan(&plan, &sources).unwrap();
        let b = execute_plan(&plan, &sources).unwrap();
        assert_eq!(
            crate::table::write_csv_string(&a),
            crate::table::write_csv_string(&b)
        );
    }
}
