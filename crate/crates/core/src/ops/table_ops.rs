//! Reference implementations of the nine transformation operators. Every
//! operator is a pure function from immutable tables to a new table or an
//! error value; nothing partially constructed ever escapes.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;

use super::datefmt::{parse_auto, DatePattern};
use super::exec::ExecErrorKind;
use super::expr::ArithExpr;
use super::{AggFn, AggSpec, JoinHow};
use crate::table::{CellValue, ColumnSpec, DataKind, Schema, Table};

/// Maximum distinct pivot values tolerated before the operator refuses.
pub const PIVOT_VALUE_CAP: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpError {
    pub kind: ExecErrorKind,
    pub message: String,
}

impl OpError {
    fn new(kind: ExecErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    fn missing_column(table: &Table, col: &str) -> Self {
        Self::new(
            ExecErrorKind::MissingColumn,
            format!("column {:?} not found in table {:?}", col.trim(), table.name()),
        )
    }
}

fn col_index(table: &Table, name: &str) -> Result<usize, OpError> {
    table
        .schema()
        .index_of(name)
        .ok_or_else(|| OpError::missing_column(table, name))
}

fn new_table(name: &str, columns: Vec<ColumnSpec>, rows: Vec<Vec<CellValue>>) -> Result<Table, OpError> {
    let schema = Schema::new(columns).map_err(|e| OpError::new(ExecErrorKind::DuplicateColumn, e.to_string()))?;
    Table::new(name, schema, rows).map_err(|e| OpError::new(ExecErrorKind::TypeMismatch, e.to_string()))
}

/// Equi-join on the given key pairs. Right-side key columns are dropped;
/// right non-key columns colliding with a left name get a `_r` suffix.
/// `Left` pads unmatched left rows with Null.
pub fn op_join(
    left: &Table,
    right: &Table,
    on: &[(String, String)],
    how: JoinHow,
) -> Result<Table, OpError> {
    if on.is_empty() {
        return Err(OpError::new(ExecErrorKind::MissingColumn, "join requires at least one key pair"));
    }
    let left_keys: Vec<usize> = on
        .iter()
        .map(|(l, _)| col_index(left, l))
        .collect::<Result<_, _>>()?;
    let right_keys: Vec<usize> = on
        .iter()
        .map(|(_, r)| col_index(right, r))
        .collect::<Result<_, _>>()?;

    let right_carry: Vec<usize> = (0..right.schema().len())
        .filter(|i| !right_keys.contains(i))
        .collect();

    let mut columns: Vec<ColumnSpec> = left.schema().columns().to_vec();
    let taken: Vec<String> = columns.iter().map(|c| c.name.trim().to_string()).collect();
    for &i in &right_carry {
        let spec = &right.schema().columns()[i];
        let trimmed = spec.name.trim();
        let name = if taken.iter().any(|t| t == trimmed) {
            format!("{trimmed}_r")
        } else {
            spec.name.clone()
        };
        columns.push(ColumnSpec::new(name, spec.dtype));
    }

    // bucket right rows by key tuple
    let mut buckets: HashMap<Vec<CellValue>, Vec<usize>> = HashMap::new();
    for (ri, row) in right.rows().iter().enumerate() {
        let key: Vec<CellValue> = right_keys.iter().map(|&k| row[k].clone()).collect();
        buckets.entry(key).or_default().push(ri);
    }

    let mut rows = Vec::new();
    for lrow in left.rows() {
        let key: Vec<CellValue> = left_keys.iter().map(|&k| lrow[k].clone()).collect();
        match buckets.get(&key) {
            Some(matches) => {
                for &ri in matches {
                    let mut row = lrow.clone();
                    let rrow = &right.rows()[ri];
                    row.extend(right_carry.iter().map(|&i| rrow[i].clone()));
                    rows.push(row);
                }
            }
            None => {
                if how == JoinHow::Left {
                    let mut row = lrow.clone();
                    row.extend(right_carry.iter().map(|_| CellValue::Null));
                    rows.push(row);
                }
            }
        }
    }

    new_table("join", columns, rows)
}

fn numeric_input(table: &Table, spec: &AggSpec, idx: usize) -> Result<(), OpError> {
    let dtype = table.schema().columns()[idx].dtype;
    let numeric = matches!(dtype, DataKind::Integer | DataKind::Float | DataKind::Any);
    if spec.agg != AggFn::Count && !numeric {
        return Err(OpError::new(
            ExecErrorKind::TypeMismatch,
            format!("aggregate {} needs a numeric column, {:?} is {dtype}", spec.agg.name(), spec.col),
        ));
    }
    Ok(())
}

fn agg_output_kind(agg: AggFn, input: DataKind) -> DataKind {
    match agg {
        AggFn::Count => DataKind::Integer,
        AggFn::Mean => DataKind::Float,
        AggFn::Sum | AggFn::Min | AggFn::Max => {
            if input == DataKind::Integer {
                DataKind::Integer
            } else {
                DataKind::Float
            }
        }
    }
}

/// Reduces the non-Null values of a group. Count counts non-Null cells;
/// the other aggregates of an all-Null group yield Null.
fn aggregate(agg: AggFn, values: &[&CellValue]) -> CellValue {
    let present: Vec<&CellValue> = values.iter().copied().filter(|v| !v.is_null()).collect();
    if agg == AggFn::Count {
        return CellValue::Integer(present.len() as i64);
    }
    if present.is_empty() {
        return CellValue::Null;
    }
    let all_int = present.iter().all(|v| matches!(v, CellValue::Integer(_)));
    match agg {
        AggFn::Sum => {
            if all_int {
                let mut acc = 0i64;
                for v in &present {
                    if let CellValue::Integer(i) = v {
                        acc += i;
                    }
                }
                CellValue::Integer(acc)
            } else {
                CellValue::Float(present.iter().filter_map(|v| v.as_f64()).sum())
            }
        }
        AggFn::Mean => {
            let sum: f64 = present.iter().filter_map(|v| v.as_f64()).sum();
            CellValue::Float(sum / present.len() as f64)
        }
        AggFn::Min | AggFn::Max => {
            if all_int {
                let it = present.iter().filter_map(|v| match v {
                    CellValue::Integer(i) => Some(*i),
                    _ => None,
                });
                let v = if agg == AggFn::Min { it.min() } else { it.max() };
                CellValue::Integer(v.expect("nonempty"))
            } else {
                let it = present.iter().filter_map(|v| v.as_f64());
                let v = if agg == AggFn::Min {
                    it.fold(f64::INFINITY, f64::min)
                } else {
                    it.fold(f64::NEG_INFINITY, f64::max)
                };
                CellValue::Float(v)
            }
        }
        AggFn::Count => unreachable!(),
    }
}

/// Groups rows by the key tuple in first-appearance order. Output schema
/// is the keys followed by the aggregate output columns.
pub fn op_groupby(table: &Table, keys: &[String], aggs: &[AggSpec]) -> Result<Table, OpError> {
    let key_idx: Vec<usize> = keys.iter().map(|k| col_index(table, k)).collect::<Result<_, _>>()?;
    let agg_idx: Vec<usize> = aggs.iter().map(|a| col_index(table, &a.col)).collect::<Result<_, _>>()?;
    for (spec, &idx) in aggs.iter().zip(&agg_idx) {
        numeric_input(table, spec, idx)?;
    }

    let mut group_order: Vec<Vec<CellValue>> = Vec::new();
    let mut groups: HashMap<Vec<CellValue>, Vec<usize>> = HashMap::new();
    for (ri, row) in table.rows().iter().enumerate() {
        let key: Vec<CellValue> = key_idx.iter().map(|&k| row[k].clone()).collect();
        groups
            .entry(key.clone())
            .or_insert_with(|| {
                group_order.push(key);
                Vec::new()
            })
            .push(ri);
    }

    let mut columns: Vec<ColumnSpec> = key_idx
        .iter()
        .map(|&i| table.schema().columns()[i].clone())
        .collect();
    for (spec, &idx) in aggs.iter().zip(&agg_idx) {
        let input = table.schema().columns()[idx].dtype;
        columns.push(ColumnSpec::new(spec.out_name.clone(), agg_output_kind(spec.agg, input)));
    }

    let mut rows = Vec::new();
    for key in &group_order {
        let members = &groups[key];
        let mut row = key.clone();
        for (spec, &idx) in aggs.iter().zip(&agg_idx) {
            let values: Vec<&CellValue> = members.iter().map(|&ri| &table.rows()[ri][idx]).collect();
            row.push(aggregate(spec.agg, &values));
        }
        rows.push(row);
    }

    new_table("groupby", columns, rows)
}

/// Long-to-wide reshape: one row per distinct index tuple, one column per
/// distinct pivot value (lexicographic order), cells reduced by `agg_fn`.
pub fn op_pivot(
    table: &Table,
    index: &[String],
    pivot_col: &str,
    value_col: &str,
    agg_fn: AggFn,
) -> Result<Table, OpError> {
    let index_idx: Vec<usize> = index.iter().map(|k| col_index(table, k)).collect::<Result<_, _>>()?;
    let pivot_idx = col_index(table, pivot_col)?;
    let value_idx = col_index(table, value_col)?;
    let value_spec = AggSpec { col: value_col.to_string(), agg: agg_fn, out_name: String::new() };
    numeric_input(table, &value_spec, value_idx)?;

    // rows with a Null pivot cell carry no category and are skipped
    let mut pivot_values: Vec<String> = table
        .rows()
        .iter()
        .filter(|r| !r[pivot_idx].is_null())
        .map(|r| r[pivot_idx].render())
        .collect();
    pivot_values.sort();
    pivot_values.dedup();

    if pivot_values.is_empty() && table.row_count() > 0 {
        return Err(OpError::new(
            ExecErrorKind::EmptyPivot,
            format!("pivot column {pivot_col:?} has no usable values"),
        ));
    }
    if pivot_values.len() > PIVOT_VALUE_CAP {
        return Err(OpError::new(
            ExecErrorKind::TypeMismatch,
            format!(
                "pivot column {pivot_col:?} has {} distinct values, more than the cap of {PIVOT_VALUE_CAP}",
                pivot_values.len()
            ),
        ));
    }

    let mut row_order: Vec<Vec<CellValue>> = Vec::new();
    let mut cells: HashMap<(Vec<CellValue>, String), Vec<usize>> = HashMap::new();
    let mut seen: HashMap<Vec<CellValue>, ()> = HashMap::new();
    for (ri, row) in table.rows().iter().enumerate() {
        let key: Vec<CellValue> = index_idx.iter().map(|&k| row[k].clone()).collect();
        if seen.insert(key.clone(), ()).is_none() {
            row_order.push(key.clone());
        }
        if row[pivot_idx].is_null() {
            continue;
        }
        cells.entry((key, row[pivot_idx].render())).or_default().push(ri);
    }

    let value_kind = table.schema().columns()[value_idx].dtype;
    let mut columns: Vec<ColumnSpec> = index_idx
        .iter()
        .map(|&i| table.schema().columns()[i].clone())
        .collect();
    for v in &pivot_values {
        columns.push(ColumnSpec::new(v.clone(), agg_output_kind(agg_fn, value_kind)));
    }

    let mut rows = Vec::new();
    for key in &row_order {
        let mut row = key.clone();
        for v in &pivot_values {
            match cells.get(&(key.clone(), v.clone())) {
                Some(members) => {
                    let values: Vec<&CellValue> =
                        members.iter().map(|&ri| &table.rows()[ri][value_idx]).collect();
                    row.push(aggregate(agg_fn, &values));
                }
                None => row.push(CellValue::Null),
            }
        }
        rows.push(row);
    }

    new_table("pivot", columns, rows)
}

/// Wide-to-long reshape: each input row yields one output row per non-id
/// column, in schema order.
pub fn op_unpivot(
    table: &Table,
    id_cols: &[String],
    var_name: &str,
    value_name: &str,
) -> Result<Table, OpError> {
    let id_idx: Vec<usize> = id_cols.iter().map(|k| col_index(table, k)).collect::<Result<_, _>>()?;
    let melt_idx: Vec<usize> = (0..table.schema().len()).filter(|i| !id_idx.contains(i)).collect();
    if melt_idx.is_empty() {
        return Err(OpError::new(ExecErrorKind::MissingColumn, "no columns left to unpivot"));
    }
    let id_names: Vec<&str> = id_idx.iter().map(|&i| table.schema().columns()[i].name.trim()).collect();
    for name in [var_name, value_name] {
        if id_names.contains(&name.trim()) {
            return Err(OpError::new(
                ExecErrorKind::DuplicateColumn,
                format!("output column {name:?} collides with an id column"),
            ));
        }
    }
    if var_name.trim() == value_name.trim() {
        return Err(OpError::new(
            ExecErrorKind::DuplicateColumn,
            format!("variable and value columns are both named {var_name:?}"),
        ));
    }

    let melted_kinds: Vec<DataKind> =
        melt_idx.iter().map(|&i| table.schema().columns()[i].dtype).collect();
    let value_kind = if melted_kinds.windows(2).all(|w| w[0] == w[1]) {
        melted_kinds[0]
    } else {
        DataKind::Any
    };

    let mut columns: Vec<ColumnSpec> = id_idx
        .iter()
        .map(|&i| table.schema().columns()[i].clone())
        .collect();
    columns.push(ColumnSpec::new(var_name, DataKind::Text));
    columns.push(ColumnSpec::new(value_name, value_kind));

    let mut rows = Vec::new();
    for row in table.rows() {
        for &mi in &melt_idx {
            let mut out: Vec<CellValue> = id_idx.iter().map(|&i| row[i].clone()).collect();
            out.push(CellValue::Text(table.schema().columns()[mi].name.trim().to_string()));
            out.push(row[mi].clone());
            rows.push(out);
        }
    }

    new_table("unpivot", columns, rows)
}

/// Appends rows of later tables under the first table's column order.
/// All tables must share the same trimmed column-name set.
pub fn op_union(tables: &[&Table]) -> Result<Table, OpError> {
    if tables.len() < 2 {
        return Err(OpError::new(
            ExecErrorKind::TypeMismatch,
            format!("union needs at least 2 tables, got {}", tables.len()),
        ));
    }
    let first = tables[0];
    let names: Vec<String> = first.schema().names().map(str::to_string).collect();
    for t in &tables[1..] {
        if t.schema().name_set() != first.schema().name_set() {
            return Err(OpError::new(
                ExecErrorKind::TypeMismatch,
                format!(
                    "tables {:?} and {:?} have different column name sets",
                    first.name(),
                    t.name()
                ),
            ));
        }
    }

    // per column: shared kind, Integer+Float widened to Float, else Any
    let mut columns = Vec::new();
    for name in &names {
        let kinds: Vec<DataKind> = tables
            .iter()
            .map(|t| {
                let i = t.schema().index_of(name).expect("name sets equal");
                t.schema().columns()[i].dtype
            })
            .collect();
        let kind = kinds.iter().copied().reduce(|a, b| {
            if a == b {
                a
            } else if matches!((a, b), (DataKind::Integer, DataKind::Float) | (DataKind::Float, DataKind::Integer)) {
                DataKind::Float
            } else {
                DataKind::Any
            }
        });
        columns.push(ColumnSpec::new(name.clone(), kind.expect("nonempty")));
    }

    let mut rows = Vec::new();
    for t in tables {
        let order: Vec<usize> = names
            .iter()
            .map(|n| t.schema().index_of(n).expect("name sets equal"))
            .collect();
        for row in t.rows() {
            let out: Vec<CellValue> = order
                .iter()
                .zip(&columns)
                .map(|(&i, spec)| match (&row[i], spec.dtype) {
                    (CellValue::Integer(v), DataKind::Float) => CellValue::Float(*v as f64),
                    (cell, _) => cell.clone(),
                })
                .collect();
            rows.push(out);
        }
    }

    new_table("union", columns, rows)
}

pub fn op_add_column(table: &Table, name: &str, constant: &CellValue) -> Result<Table, OpError> {
    if table.schema().index_of(name).is_some() {
        return Err(OpError::new(
            ExecErrorKind::DuplicateColumn,
            format!("column {name:?} already exists"),
        ));
    }
    let kind = constant.kind().unwrap_or(DataKind::Any);
    let mut columns = table.schema().columns().to_vec();
    columns.push(ColumnSpec::new(name, kind));
    let rows = table
        .rows()
        .iter()
        .map(|r| {
            let mut row = r.clone();
            row.push(constant.clone());
            row
        })
        .collect();
    new_table(table.name(), columns, rows)
}

pub fn op_drop_columns(table: &Table, names: &[String]) -> Result<Table, OpError> {
    let drop_idx: Vec<usize> = names.iter().map(|n| col_index(table, n)).collect::<Result<_, _>>()?;
    let keep: Vec<usize> = (0..table.schema().len()).filter(|i| !drop_idx.contains(i)).collect();
    let columns = keep.iter().map(|&i| table.schema().columns()[i].clone()).collect();
    let rows = table
        .rows()
        .iter()
        .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
        .collect();
    new_table(table.name(), columns, rows)
}

pub fn op_rename(table: &Table, mapping: &[(String, String)]) -> Result<Table, OpError> {
    let mut olds = Vec::new();
    for (old, _) in mapping {
        col_index(table, old)?;
        if olds.contains(&old.trim()) {
            return Err(OpError::new(
                ExecErrorKind::DuplicateColumn,
                format!("column {old:?} renamed twice"),
            ));
        }
        olds.push(old.trim());
    }
    let mut columns = table.schema().columns().to_vec();
    for (old, new) in mapping {
        let i = table.schema().index_of(old).expect("checked above");
        columns[i].name = new.clone();
    }
    new_table(table.name(), columns, table.rows().to_vec())
}

/// Appends a row-wise computed numeric column. Any Null operand or a zero
/// divisor yields Null for that row.
pub fn op_column_arithmetic(
    table: &Table,
    out_name: &str,
    expression: &ArithExpr,
) -> Result<Table, OpError> {
    if table.schema().index_of(out_name).is_some() {
        return Err(OpError::new(
            ExecErrorKind::DuplicateColumn,
            format!("column {out_name:?} already exists"),
        ));
    }
    let refs = expression.column_refs();
    if refs.is_empty() {
        return Err(OpError::new(
            ExecErrorKind::ExpressionError,
            "expression references no columns",
        ));
    }
    let mut ref_idx = BTreeMap::new();
    for r in &refs {
        let i = col_index(table, r)?;
        let dtype = table.schema().columns()[i].dtype;
        if !matches!(dtype, DataKind::Integer | DataKind::Float) {
            return Err(OpError::new(
                ExecErrorKind::TypeMismatch,
                format!("expression needs numeric columns, {r:?} is {dtype}"),
            ));
        }
        ref_idx.insert(r.to_string(), i);
    }

    let integral = expression.is_integral()
        && refs
            .iter()
            .all(|r| table.schema().columns()[ref_idx[*r]].dtype == DataKind::Integer);

    let mut columns = table.schema().columns().to_vec();
    columns.push(ColumnSpec::new(
        out_name,
        if integral { DataKind::Integer } else { DataKind::Float },
    ));

    let mut rows = Vec::with_capacity(table.row_count());
    for row in table.rows() {
        let value = if integral {
            let lookup = |c: &str| match ref_idx.get(c).map(|&i| &row[i]) {
                Some(CellValue::Integer(v)) => Some(*v),
                _ => None,
            };
            expression.eval_i64(&lookup).map(CellValue::Integer)
        } else {
            let lookup = |c: &str| ref_idx.get(c).and_then(|&i| row[i].as_f64());
            expression.eval_f64(&lookup).map(CellValue::Float)
        };
        let mut out = row.clone();
        out.push(value.unwrap_or(CellValue::Null));
        rows.push(out);
    }

    new_table(table.name(), columns, rows)
}

/// Rewrites a column of date strings (or dates) from `in_format` (or
/// `auto`) into `out_format`. The canonical dashed output becomes a Date
/// column; any other output format stays Text.
pub fn op_date_format(
    table: &Table,
    col: &str,
    in_format: &str,
    out_format: &str,
) -> Result<Table, OpError> {
    let idx = col_index(table, col)?;
    let in_pattern = if in_format == "auto" {
        None
    } else {
        Some(
            DatePattern::compile(in_format)
                .map_err(|e| OpError::new(ExecErrorKind::BadDateFormat, e))?,
        )
    };
    let out_pattern = DatePattern::compile(out_format)
        .map_err(|e| OpError::new(ExecErrorKind::BadDateFormat, e))?;
    let out_is_date = out_format == "yyyy-mm-dd";

    let parse_cell = |cell: &CellValue| -> Result<Option<NaiveDate>, String> {
        match cell {
            CellValue::Null => Ok(None),
            CellValue::Date(d) => Ok(Some(*d)),
            CellValue::Text(s) => {
                let parsed = match &in_pattern {
                    Some(p) => p.parse(s),
                    None => parse_auto(s).map(|(_, d)| d),
                };
                parsed.map(Some).ok_or_else(|| s.clone())
            }
            other => Err(other.render()),
        }
    };

    let mut out_cells = Vec::with_capacity(table.row_count());
    for (ri, row) in table.rows().iter().enumerate() {
        match parse_cell(&row[idx]) {
            Ok(None) => out_cells.push(CellValue::Null),
            Ok(Some(d)) => {
                if out_is_date {
                    out_cells.push(CellValue::Date(d));
                } else {
                    out_cells.push(CellValue::Text(out_pattern.render(d)));
                }
            }
            Err(bad) => {
                return Err(OpError::new(
                    ExecErrorKind::BadDateFormat,
                    format!("row {ri}: cell {bad:?} does not match format {in_format:?}"),
                ))
            }
        }
    }

    let mut columns = table.schema().columns().to_vec();
    columns[idx].dtype = if out_is_date { DataKind::Date } else { DataKind::Text };
    let rows = table
        .rows()
        .iter()
        .zip(out_cells)
        .map(|(r, cell)| {
            let mut row = r.clone();
            row[idx] = cell;
            row
        })
        .collect();
    new_table(table.name(), columns, rows)
}
