//! CSV ingestion and serialization (RFC-4180 quoting, UTF-8).
//!
//! Type inference picks, per column, the narrowest kind in the order
//! Boolean < Integer < Float < Date < Text that admits every non-empty
//! field. Only dashed `yyyy-mm-dd` dates are recognized on ingestion;
//! every other date shape stays Text so that reformatting remains an
//! observable pipeline step.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::{parse_iso_date, CellValue, ColumnSpec, DataKind, Schema, Table, TableError};

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub header: bool,
    pub infer_types: bool,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: b',', header: true, infer_types: true }
    }
}

fn admits_text(kind: DataKind, field: &str) -> bool {
    match kind {
        DataKind::Boolean => field.eq_ignore_ascii_case("true") || field.eq_ignore_ascii_case("false"),
        DataKind::Integer => field.parse::<i64>().is_ok(),
        DataKind::Float => match field.parse::<f64>() {
            Ok(f) => f.is_finite(),
            Err(_) => false,
        },
        DataKind::Date => parse_iso_date(field).is_some(),
        DataKind::Text => true,
        DataKind::Any => true,
    }
}

/// Narrowest kind admitting every non-empty field; Boolean when the column
/// holds no non-empty fields at all.
fn infer_column_kind<'a>(fields: impl Iterator<Item = &'a str> + Clone) -> DataKind {
    for kind in DataKind::INFERENCE_ORDER {
        if fields.clone().filter(|f| !f.is_empty()).all(|f| admits_text(kind, f)) {
            return kind;
        }
    }
    DataKind::Text
}

fn parse_cell(kind: DataKind, field: &str) -> CellValue {
    if field.is_empty() {
        return CellValue::Null;
    }
    match kind {
        DataKind::Boolean => CellValue::Boolean(field.eq_ignore_ascii_case("true")),
        DataKind::Integer => CellValue::Integer(field.parse().expect("admitted integer")),
        DataKind::Float => CellValue::Float(field.parse().expect("admitted float")),
        DataKind::Date => CellValue::Date(parse_iso_date(field).expect("admitted date")),
        DataKind::Text | DataKind::Any => CellValue::Text(field.to_string()),
    }
}

pub fn read_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<Table, TableError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "table".to_string());
    read_csv_str(&name, &text, options)
}

/// Parses CSV text into a table named `name`.
pub fn read_csv_str(name: &str, text: &str, options: &CsvOptions) -> Result<Table, TableError> {
    let mut reader = ::csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(false)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut records: Vec<::csv::StringRecord> = Vec::new();
    for record in reader.records() {
        records.push(record?);
    }

    let (header, data_records) = if options.header {
        if records.is_empty() {
            return Err(TableError::EmptyHeader);
        }
        let header: Vec<String> = records[0].iter().map(|f| f.to_string()).collect();
        (header, &records[1..])
    } else {
        let width = records.first().map(|r| r.len()).unwrap_or(0);
        let header = (1..=width).map(|i| format!("col{i}")).collect();
        (header, &records[..])
    };

    let width = header.len();
    for (i, record) in data_records.iter().enumerate() {
        if record.len() != width {
            return Err(TableError::RaggedRow { row: i + 1, expected: width, got: record.len() });
        }
    }

    let kinds: Vec<DataKind> = (0..width)
        .map(|c| {
            if options.infer_types {
                infer_column_kind(data_records.iter().map(move |r| &r[c]).map(|s| s as &str))
            } else {
                DataKind::Text
            }
        })
        .collect();

    let schema = Schema::new(
        header
            .iter()
            .zip(&kinds)
            .map(|(name, kind)| ColumnSpec::new(name.clone(), *kind))
            .collect(),
    )?;

    let rows: Vec<Vec<CellValue>> = data_records
        .iter()
        .map(|record| {
            record
                .iter()
                .zip(&kinds)
                .map(|(field, kind)| parse_cell(*kind, field))
                .collect()
        })
        .collect();

    Table::new(name, schema, rows)
}

pub fn write_csv(table: &Table, path: impl AsRef<Path>) -> Result<(), TableError> {
    let path = path.as_ref();
    let text = write_csv_string(table);
    let mut f = File::create(path).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })?;
    f.write_all(text.as_bytes()).map_err(|source| TableError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Serializes a table to CSV text. Null becomes an empty field, dates the
/// dashed `yyyy-mm-dd` form, and floats their shortest round-trip decimal.
pub fn write_csv_string(table: &Table) -> String {
    let mut writer = ::csv::WriterBuilder::new().from_writer(Vec::new());
    let header: Vec<&str> = table.schema().columns().iter().map(|c| c.name.as_str()).collect();
    writer.write_record(&header).expect("in-memory write");
    for row in table.rows() {
        let fields: Vec<String> = row.iter().map(CellValue::render).collect();
        writer.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str) -> Table {
        read_csv_str("t", text, &CsvOptions::default()).unwrap()
    }

    fn kinds(t: &Table) -> Vec<DataKind> {
        t.schema().columns().iter().map(|c| c.dtype).collect()
    }

    #[test]
    fn infers_integer_and_text() {
        let t = read("a,b\n1,x\n");
        assert_eq!(kinds(&t), vec![DataKind::Integer, DataKind::Text]);
        assert_eq!(t.row_count(), 1);
        assert_eq!(t.rows()[0], vec![CellValue::Integer(1), CellValue::Text("x".into())]);
    }

    #[test]
    fn mixed_integer_and_float_widen_to_float() {
        let t = read("v\n1\n2.5\n");
        assert_eq!(kinds(&t), vec![DataKind::Float]);
        assert_eq!(t.rows()[0][0], CellValue::Float(1.0));
        assert_eq!(t.rows()[1][0], CellValue::Float(2.5));
    }

    #[test]
    fn dotted_dates_stay_text() {
        let t = read("Date\n2024.01.01\n2024.01.02\n");
        assert_eq!(kinds(&t), vec![DataKind::Text]);
        assert_eq!(t.rows()[0][0], CellValue::Text("2024.01.01".into()));
    }

    #[test]
    fn dashed_dates_become_dates() {
        let t = read("Date\n2024-01-01\n");
        assert_eq!(kinds(&t), vec![DataKind::Date]);
    }

    #[test]
    fn booleans_and_empty_cells() {
        let t = read("flag\ntrue\n\nfalse\n");
        assert_eq!(kinds(&t), vec![DataKind::Boolean]);
        assert_eq!(t.rows()[1][0], CellValue::Null);
    }

    #[test]
    fn ragged_row_is_rejected() {
        let err = read_csv_str("t", "a,b\n1\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, TableError::RaggedRow { row: 1, expected: 2, got: 1 }));
    }

    #[test]
    fn duplicate_headers_after_trimming_are_rejected() {
        let err = read_csv_str("t", "a, a \n1,2\n", &CsvOptions::default()).unwrap_err();
        assert!(matches!(err, TableError::DuplicateColumn(_)));
    }

    #[test]
    fn empty_table_round_trips_as_header_only() {
        let schema = Schema::from_names(["a"]).unwrap();
        let t = Table::new("t", schema, vec![]).unwrap();
        assert_eq!(write_csv_string(&t), "a\n");
    }

    #[test]
    fn null_serializes_as_empty_field() {
        let schema = Schema::from_names(["a", "b"]).unwrap();
        let t = Table::new(
            "t",
            schema,
            vec![vec![CellValue::Null, CellValue::Text("x".into())]],
        )
        .unwrap();
        assert_eq!(write_csv_string(&t), "a,b\n,x\n");
    }

    #[test]
    fn date_serializes_dashed() {
        let schema = Schema::new(vec![ColumnSpec::new("d", DataKind::Date)]).unwrap();
        let t = Table::new(
            "t",
            schema,
            vec![vec![CellValue::Date(parse_iso_date("2024-01-01").unwrap())]],
        )
        .unwrap();
        assert_eq!(write_csv_string(&t), "d\n2024-01-01\n");
    }

    #[test]
    fn custom_delimiter_and_headerless_input() {
        let options = CsvOptions { delimiter: b';', header: false, infer_types: true };
        let t = read_csv_str("t", "1;x\n2;y\n", &options).unwrap();
        assert_eq!(
            t.schema().names().collect::<Vec<_>>(),
            vec!["col1", "col2"]
        );
        assert_eq!(t.row_count(), 2);
    }

    #[test]
    fn quoted_fields_keep_delimiters() {
        let t = read("a,b\n\"x,y\",2\n");
        assert_eq!(t.rows()[0][0], CellValue::Text("x,y".into()));
    }

    #[test]
    fn round_trip_preserves_schema_rows_and_cells() {
        let text = "Date,Shop_id,n,note\n2024-01-01,s1,3,hello\n2024-01-02,s2,,\"with,comma\"\n";
        let t = read(text);
        let back = read_csv_str("t", &write_csv_string(&t), &CsvOptions::default()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn inference_is_monotone_in_added_rows() {
        // appending rows may only widen the inferred kind
        let samples = ["true", "1", "2.5", "2024-01-01", "abc"];
        for a in samples {
            for b in samples {
                let one = read(&format!("c\n{a}\n"));
                let two = read(&format!("c\n{a}\n{b}\n"));
                let pos = |k: DataKind| {
                    DataKind::INFERENCE_ORDER.iter().position(|x| *x == k).unwrap()
                };
                assert!(
                    pos(kinds(&two)[0]) >= pos(kinds(&one)[0]),
                    "{a} then {b} narrowed the column kind"
                );
            }
        }
    }
}
