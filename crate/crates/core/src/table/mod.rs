//! Relational table model: typed cells, schemas, immutable tables, and
//! CSV ingestion with type inference.

mod csv_io;

pub use csv_io::{read_csv, read_csv_str, write_csv, write_csv_string, CsvOptions};

use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] ::csv::Error),
    #[error("ragged row {row}: expected {expected} fields, got {got}")]
    RaggedRow { row: usize, expected: usize, got: usize },
    #[error("duplicate column name after trimming: {0:?}")]
    DuplicateColumn(String),
    #[error("row {row} has {got} cells, schema has {expected} columns")]
    RowWidth { row: usize, expected: usize, got: usize },
    #[error("cell at row {row}, column {column:?} does not conform to dtype {dtype}: {value}")]
    CellType { row: usize, column: String, dtype: DataKind, value: String },
    #[error("empty header: a header row is required")]
    EmptyHeader,
}

/// One cell of a table. `Float` equality is bitwise except that any two
/// NaNs compare equal, so tables containing NaN still compare sanely.
#[derive(Debug, Clone)]
pub enum CellValue {
    Null,
    Boolean(bool),
    Integer(i64),
    Float(f64),
    Text(String),
    Date(NaiveDate),
}

impl CellValue {
    pub fn kind(&self) -> Option<DataKind> {
        match self {
            CellValue::Null => None,
            CellValue::Boolean(_) => Some(DataKind::Boolean),
            CellValue::Integer(_) => Some(DataKind::Integer),
            CellValue::Float(_) => Some(DataKind::Float),
            CellValue::Text(_) => Some(DataKind::Text),
            CellValue::Date(_) => Some(DataKind::Date),
        }
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, CellValue::Integer(_) | CellValue::Float(_))
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            CellValue::Integer(i) => Some(*i as f64),
            CellValue::Float(f) => Some(*f),
            _ => None,
        }
    }

    /// Canonical text rendering, identical to the CSV serialization of the
    /// cell. Null renders as the empty string.
    pub fn render(&self) -> String {
        match self {
            CellValue::Null => String::new(),
            CellValue::Boolean(b) => b.to_string(),
            CellValue::Integer(i) => i.to_string(),
            CellValue::Float(f) => f.to_string(),
            CellValue::Text(s) => s.clone(),
            CellValue::Date(d) => d.format("%Y-%m-%d").to_string(),
        }
    }
}

impl PartialEq for CellValue {
    fn eq(&self, other: &Self) -> bool {
        use CellValue::*;
        match (self, other) {
            (Null, Null) => true,
            (Boolean(a), Boolean(b)) => a == b,
            (Integer(a), Integer(b)) => a == b,
            (Float(a), Float(b)) => {
                if a.is_nan() && b.is_nan() {
                    true
                } else {
                    a.to_bits() == b.to_bits()
                }
            }
            (Text(a), Text(b)) => a == b,
            (Date(a), Date(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for CellValue {}

impl Hash for CellValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        use CellValue::*;
        match self {
            Null => state.write_u8(0),
            Boolean(b) => {
                state.write_u8(1);
                b.hash(state);
            }
            Integer(i) => {
                state.write_u8(2);
                i.hash(state);
            }
            Float(f) => {
                state.write_u8(3);
                // all NaNs hash alike so Eq and Hash stay consistent
                let bits = if f.is_nan() { f64::NAN.to_bits() } else { f.to_bits() };
                bits.hash(state);
            }
            Text(s) => {
                state.write_u8(4);
                s.hash(state);
            }
            Date(d) => {
                state.write_u8(5);
                d.hash(state);
            }
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Serialize for CellValue {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            CellValue::Null => serializer.serialize_unit(),
            CellValue::Boolean(b) => serializer.serialize_bool(*b),
            CellValue::Integer(i) => serializer.serialize_i64(*i),
            CellValue::Float(f) => serializer.serialize_f64(*f),
            CellValue::Text(s) => serializer.serialize_str(s),
            CellValue::Date(d) => {
                use serde::ser::SerializeMap;
                let mut m = serializer.serialize_map(Some(1))?;
                m.serialize_entry("date", &d.format("%Y-%m-%d").to_string())?;
                m.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for CellValue {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = serde_json::Value::deserialize(deserializer)?;
        match v {
            serde_json::Value::Null => Ok(CellValue::Null),
            serde_json::Value::Bool(b) => Ok(CellValue::Boolean(b)),
            serde_json::Value::Number(n) => {
                if let Some(i) = n.as_i64() {
                    Ok(CellValue::Integer(i))
                } else if let Some(f) = n.as_f64() {
                    Ok(CellValue::Float(f))
                } else {
                    Err(D::Error::custom(format!("unsupported number {n}")))
                }
            }
            serde_json::Value::String(s) => Ok(CellValue::Text(s)),
            serde_json::Value::Object(m) => {
                if let Some(serde_json::Value::String(s)) = m.get("date") {
                    parse_iso_date(s)
                        .map(CellValue::Date)
                        .ok_or_else(|| D::Error::custom(format!("invalid date literal {s:?}")))
                } else {
                    Err(D::Error::custom("cell object must be {\"date\": \"yyyy-mm-dd\"}"))
                }
            }
            other => Err(D::Error::custom(format!("unsupported cell literal {other}"))),
        }
    }
}

/// Strict `yyyy-mm-dd` parse: 4-2-2 digit groups and a valid calendar date.
pub fn parse_iso_date(s: &str) -> Option<NaiveDate> {
    let bytes = s.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return None;
    }
    if !bytes[..4].iter().all(u8::is_ascii_digit)
        || !bytes[5..7].iter().all(u8::is_ascii_digit)
        || !bytes[8..].iter().all(u8::is_ascii_digit)
    {
        return None;
    }
    let year: i32 = s[..4].parse().ok()?;
    let month: u32 = s[5..7].parse().ok()?;
    let day: u32 = s[8..].parse().ok()?;
    NaiveDate::from_ymd_opt(year, month, day)
}

/// Column data kinds, ordered from narrowest to widest for inference.
/// `Any` admits every value and never results from inference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Boolean,
    Integer,
    Float,
    Date,
    Text,
    Any,
}

impl DataKind {
    /// Inference preference order (narrowest first).
    pub const INFERENCE_ORDER: [DataKind; 5] = [
        DataKind::Boolean,
        DataKind::Integer,
        DataKind::Float,
        DataKind::Date,
        DataKind::Text,
    ];

    pub fn admits(&self, cell: &CellValue) -> bool {
        match cell {
            CellValue::Null => true,
            _ => *self == DataKind::Any || cell.kind() == Some(*self),
        }
    }
}

impl fmt::Display for DataKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DataKind::Boolean => "boolean",
            DataKind::Integer => "integer",
            DataKind::Float => "float",
            DataKind::Date => "date",
            DataKind::Text => "text",
            DataKind::Any => "any",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub dtype: DataKind,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, dtype: DataKind) -> Self {
        Self { name: name.into(), dtype }
    }
}

/// An ordered list of uniquely named columns. Names are compared after
/// trimming leading/trailing whitespace; comparison is case-sensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self, TableError> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            let trimmed = c.name.trim().to_string();
            if !seen.insert(trimmed.clone()) {
                return Err(TableError::DuplicateColumn(trimmed));
            }
        }
        Ok(Self { columns })
    }

    /// Builds a schema of `Any`-typed columns from bare names.
    pub fn from_names<I, S>(names: I) -> Result<Self, TableError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(
            names
                .into_iter()
                .map(|n| ColumnSpec::new(n, DataKind::Any))
                .collect(),
        )
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Position of a column whose trimmed name equals the trimmed query.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        let want = name.trim();
        self.columns.iter().position(|c| c.name.trim() == want)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.trim())
    }

    pub fn name_set(&self) -> BTreeSet<String> {
        self.names().map(str::to_string).collect()
    }
}

/// An immutable named table. All mutation happens by constructing new
/// tables, so values are safe to share across threads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    name: String,
    schema: Schema,
    rows: Vec<Vec<CellValue>>,
}

impl Table {
    pub fn new(
        name: impl Into<String>,
        schema: Schema,
        rows: Vec<Vec<CellValue>>,
    ) -> Result<Self, TableError> {
        let width = schema.len();
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(TableError::RowWidth { row: i, expected: width, got: row.len() });
            }
            for (cell, spec) in row.iter().zip(schema.columns()) {
                if !spec.dtype.admits(cell) {
                    return Err(TableError::CellType {
                        row: i,
                        column: spec.name.clone(),
                        dtype: spec.dtype,
                        value: cell.render(),
                    });
                }
            }
        }
        Ok(Self { name: name.into(), schema, rows })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, index: usize) -> impl Iterator<Item = &CellValue> {
        self.rows.iter().map(move |r| &r[index])
    }

    pub fn with_name(&self, name: impl Into<String>) -> Table {
        Table { name: name.into(), schema: self.schema.clone(), rows: self.rows.clone() }
    }
}

/// Trimmed column names of a table as a set.
pub fn schema_names(table: &Table) -> BTreeSet<String> {
    table.schema().name_set()
}

/// A bounded row-prefix view of a table, used wherever only a glimpse of
/// the data may be exposed.
#[derive(Debug, Clone)]
pub struct TableSample {
    table: Table,
    max_rows: usize,
}

impl TableSample {
    pub fn new(table: &Table, max_rows: usize) -> Self {
        assert!(max_rows > 0, "sample size must be positive");
        let rows: Vec<_> = table.rows().iter().take(max_rows).cloned().collect();
        let sample = Table::new(table.name().to_string(), table.schema().clone(), rows)
            .expect("sample rows conform by construction");
        Self { table: sample, max_rows }
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    pub fn max_rows(&self) -> usize {
        self.max_rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(s: &str) -> CellValue {
        CellValue::Date(parse_iso_date(s).unwrap())
    }

    #[test]
    fn float_equality_is_bitwise_with_nan_exception() {
        assert_eq!(CellValue::Float(f64::NAN), CellValue::Float(f64::NAN));
        assert_eq!(CellValue::Float(1.5), CellValue::Float(1.5));
        assert_ne!(CellValue::Float(0.0), CellValue::Float(-0.0));
        assert_ne!(CellValue::Float(1.0), CellValue::Integer(1));
    }

    #[test]
    fn null_equals_only_null() {
        assert_eq!(CellValue::Null, CellValue::Null);
        assert_ne!(CellValue::Null, CellValue::Text(String::new()));
        assert_ne!(CellValue::Null, CellValue::Integer(0));
    }

    #[test]
    fn schema_rejects_duplicate_trimmed_names() {
        let err = Schema::from_names(["a", " a "]).unwrap_err();
        assert!(matches!(err, TableError::DuplicateColumn(n) if n == "a"));
    }

    #[test]
    fn schema_names_trims_and_ignores_rows() {
        let schema = Schema::from_names([" a ", "b"]).unwrap();
        let t = Table::new("t", schema, vec![]).unwrap();
        let names = schema_names(&t);
        assert_eq!(names, BTreeSet::from(["a".to_string(), "b".to_string()]));
    }

    #[test]
    fn schema_names_on_two_column_table() {
        let schema = Schema::from_names(["Date", "Shop_id"]).unwrap();
        let t = Table::new("t", schema, vec![]).unwrap();
        assert_eq!(
            schema_names(&t),
            BTreeSet::from(["Date".to_string(), "Shop_id".to_string()])
        );
    }

    #[test]
    fn empty_schema_has_no_names() {
        let t = Table::new("t", Schema::new(vec![]).unwrap(), vec![]).unwrap();
        assert!(schema_names(&t).is_empty());
    }

    #[test]
    fn table_rejects_ragged_and_ill_typed_rows() {
        let schema = Schema::new(vec![ColumnSpec::new("n", DataKind::Integer)]).unwrap();
        let err = Table::new("t", schema.clone(), vec![vec![]]).unwrap_err();
        assert!(matches!(err, TableError::RowWidth { .. }));
        let err =
            Table::new("t", schema, vec![vec![CellValue::Text("x".into())]]).unwrap_err();
        assert!(matches!(err, TableError::CellType { .. }));
    }

    #[test]
    fn null_conforms_to_every_dtype() {
        for dtype in [DataKind::Boolean, DataKind::Integer, DataKind::Date, DataKind::Any] {
            let schema = Schema::new(vec![ColumnSpec::new("c", dtype)]).unwrap();
            assert!(Table::new("t", schema, vec![vec![CellValue::Null]]).is_ok());
        }
    }

    #[test]
    fn sample_is_a_row_prefix() {
        let schema = Schema::from_names(["a"]).unwrap();
        let rows: Vec<Vec<CellValue>> =
            (0..10).map(|i| vec![CellValue::Integer(i)]).collect();
        let t = Table::new("t", schema, rows).unwrap();
        let s = TableSample::new(&t, 3);
        assert_eq!(s.table().row_count(), 3);
        assert_eq!(s.table().rows()[2][0], CellValue::Integer(2));
        let s_all = TableSample::new(&t, 100);
        assert_eq!(s_all.table().row_count(), 10);
    }

    #[test]
    fn cell_serde_round_trip() {
        for cell in [
            CellValue::Null,
            CellValue::Boolean(true),
            CellValue::Integer(-3),
            CellValue::Float(2.5),
            CellValue::Text("2024-01-01".into()),
            date("2024-01-01"),
        ] {
            let json = serde_json::to_string(&cell).unwrap();
            let back: CellValue = serde_json::from_str(&json).unwrap();
            assert_eq!(cell, back, "through {json}");
        }
        // a date never collapses into text
        assert_ne!(date("2024-01-01"), CellValue::Text("2024-01-01".into()));
    }

    #[test]
    fn iso_date_parsing_is_strict() {
        assert!(parse_iso_date("2024-01-01").is_some());
        assert!(parse_iso_date("2024-1-1").is_none());
        assert!(parse_iso_date("2024.01.01").is_none());
        assert!(parse_iso_date("2024-13-01").is_none());
    }
}
