//! The transformation operator engine: nine relational operators, the
//! declarative pipeline IR they compose into, and the executor.

pub mod datefmt;
pub mod exec;
pub mod expr;
pub mod plan;
mod table_ops;

pub use exec::{execute_plan, ExecErrorKind, ExecutionDiagnostics};
pub use plan::{parse_plan, validate_plan, PipelinePlan, PipelineStep, PlanError, PlanLimits, PLAN_SCHEMA_JSON};
pub use table_ops::{
    op_add_column, op_column_arithmetic, op_date_format, op_drop_columns, op_groupby, op_join,
    op_pivot, op_rename, op_union, op_unpivot,
};

use serde::{Deserialize, Serialize};

use crate::table::CellValue;
use expr::ArithExpr;

/// The closed set of supported transformation operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum OperatorKind {
    Join,
    GroupBy,
    Pivot,
    Unpivot,
    Union,
    AddColumn,
    DropColumns,
    Rename,
    ColumnArithmetic,
    DateFormatting,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 10] = [
        OperatorKind::Join,
        OperatorKind::GroupBy,
        OperatorKind::Pivot,
        OperatorKind::Unpivot,
        OperatorKind::Union,
        OperatorKind::AddColumn,
        OperatorKind::DropColumns,
        OperatorKind::Rename,
        OperatorKind::ColumnArithmetic,
        OperatorKind::DateFormatting,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Join => "Join",
            OperatorKind::GroupBy => "GroupBy",
            OperatorKind::Pivot => "Pivot",
            OperatorKind::Unpivot => "Unpivot",
            OperatorKind::Union => "Union",
            OperatorKind::AddColumn => "AddColumn",
            OperatorKind::DropColumns => "DropColumns",
            OperatorKind::Rename => "Rename",
            OperatorKind::ColumnArithmetic => "ColumnArithmetic",
            OperatorKind::DateFormatting => "DateFormatting",
        }
    }

    pub fn from_name(name: &str) -> Option<OperatorKind> {
        Self::ALL.iter().copied().find(|k| k.name() == name)
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggFn {
    Sum,
    Mean,
    Count,
    Min,
    Max,
}

impl AggFn {
    pub fn name(&self) -> &'static str {
        match self {
            AggFn::Sum => "sum",
            AggFn::Mean => "mean",
            AggFn::Count => "count",
            AggFn::Min => "min",
            AggFn::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JoinHow {
    Inner,
    Left,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinParams {
    pub left: String,
    pub right: String,
    /// Pairs of (left column, right column) equi-join keys.
    pub on: Vec<(String, String)>,
    pub how: JoinHow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggSpec {
    pub col: String,
    #[serde(rename = "fn")]
    pub agg: AggFn,
    pub out_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupByParams {
    pub keys: Vec<String>,
    pub aggs: Vec<AggSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PivotParams {
    pub index: Vec<String>,
    pub pivot_col: String,
    pub value_col: String,
    pub agg_fn: AggFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnpivotParams {
    pub id_cols: Vec<String>,
    pub var_name: String,
    pub value_name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnionParams {
    pub tables: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddColumnParams {
    pub name: String,
    pub constant: CellValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropColumnsParams {
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenameParams {
    /// Pairs of (old name, new name).
    pub mapping: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticParams {
    pub out_name: String,
    pub expression: ArithExpr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DateFormatParams {
    pub col: String,
    /// A pattern over `yyyy`/`mm`/`dd` with literal separators, or `auto`.
    pub in_format: String,
    pub out_format: String,
}

/// One parameterized operator application. Column and table references are
/// late-bound names, validated against the live environment at execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "params")]
pub enum OperatorCall {
    Join(JoinParams),
    GroupBy(GroupByParams),
    Pivot(PivotParams),
    Unpivot(UnpivotParams),
    Union(UnionParams),
    AddColumn(AddColumnParams),
    DropColumns(DropColumnsParams),
    Rename(RenameParams),
    ColumnArithmetic(ArithmeticParams),
    DateFormatting(DateFormatParams),
}

impl OperatorCall {
    pub fn kind(&self) -> OperatorKind {
        match self {
            OperatorCall::Join(_) => OperatorKind::Join,
            OperatorCall::GroupBy(_) => OperatorKind::GroupBy,
            OperatorCall::Pivot(_) => OperatorKind::Pivot,
            OperatorCall::Unpivot(_) => OperatorKind::Unpivot,
            OperatorCall::Union(_) => OperatorKind::Union,
            OperatorCall::AddColumn(_) => OperatorKind::AddColumn,
            OperatorCall::DropColumns(_) => OperatorKind::DropColumns,
            OperatorCall::Rename(_) => OperatorKind::Rename,
            OperatorCall::ColumnArithmetic(_) => OperatorKind::ColumnArithmetic,
            OperatorCall::DateFormatting(_) => OperatorKind::DateFormatting,
        }
    }

    /// Table names this call reads explicitly (unary operators read the
    /// step input instead).
    pub fn table_refs(&self) -> Vec<&str> {
        match self {
            OperatorCall::Join(p) => vec![p.left.as_str(), p.right.as_str()],
            OperatorCall::Union(p) => p.tables.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }

    pub fn is_unary(&self) -> bool {
        self.table_refs().is_empty()
    }
}
