//! Columnar-typed, row-major datasets and their on-disk formats.

mod arff;
mod csv_schema;
mod extract;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use arff::{parse_arff, read_arff, to_arff_string, write_arff};
pub use csv_schema::{read_csv_with_schema, CsvSchema, SchemaAttribute};
pub use extract::{distinct_present_values, extract_token, DistinctCount};

/// The type of one attribute column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "categories", rename_all = "snake_case")]
pub enum AttributeKind {
    Numeric,
    Nominal(Vec<String>),
    #[serde(rename = "string")]
    StringKind,
    #[serde(rename = "date")]
    DateKind,
}

impl AttributeKind {
    pub fn is_numeric(&self) -> bool {
        matches!(self, AttributeKind::Numeric)
    }

    pub fn is_nominal(&self) -> bool {
        matches!(self, AttributeKind::Nominal(_))
    }

    pub fn categories(&self) -> Option<&[String]> {
        match self {
            AttributeKind::Nominal(cats) => Some(cats),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn new(name: impl Into<String>, kind: AttributeKind) -> Self {
        Attribute { name: name.into(), kind }
    }

    pub fn numeric(name: impl Into<String>) -> Self {
        Attribute::new(name, AttributeKind::Numeric)
    }

    pub fn nominal<S: Into<String>>(name: impl Into<String>, categories: impl IntoIterator<Item = S>) -> Self {
        Attribute::new(name, AttributeKind::Nominal(categories.into_iter().map(Into::into).collect()))
    }
}

/// A present cell. Nominal values are indices into the category list; dates
/// are kept as their ISO-8601 text.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Value {
    Numeric(f64),
    Nominal(u32),
    Text(String),
    Date(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Numeric(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_category(&self) -> Option<u32> {
        match self {
            Value::Nominal(i) => Some(*i),
            _ => None,
        }
    }
}

pub type Cell = Option<Value>;
pub type Row = Vec<Cell>;

#[derive(Debug, Error, PartialEq)]
pub enum DatasetError {
    #[error("dataset has no attributes")]
    NoAttributes,
    #[error("class index {class_index} out of range for {attributes} attributes")]
    ClassIndexOutOfRange { class_index: usize, attributes: usize },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("row {row}, attribute `{attribute}`: value does not match the declared kind")]
    KindMismatch { row: usize, attribute: String },
    #[error("row {row}, attribute `{attribute}`: category index {index} outside the category list")]
    CategoryOutOfRange { row: usize, attribute: String, index: u32 },
    #[error("attribute `{attribute}`: numeric value is not finite")]
    NonFinite { attribute: String },
    #[error("nominal attribute `{attribute}` has an empty category list but present values")]
    EmptyCategories { attribute: String },
    #[error("attribute `{attribute}`: `{value}` is not an ISO-8601 date")]
    InvalidDate { attribute: String, value: String },
}

/// A validated dataset. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    name: String,
    attributes: Vec<Attribute>,
    rows: Vec<Row>,
    class_index: usize,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        attributes: Vec<Attribute>,
        rows: Vec<Row>,
        class_index: usize,
    ) -> Result<Self, DatasetError> {
        let dataset = Dataset { name: name.into(), attributes, rows, class_index };
        dataset.validate()?;
        Ok(dataset)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        let width = self.attributes.len();
        if width == 0 {
            return Err(DatasetError::NoAttributes);
        }
        if self.class_index >= width {
            return Err(DatasetError::ClassIndexOutOfRange { class_index: self.class_index, attributes: width });
        }
        for (r, row) in self.rows.iter().enumerate() {
            if row.len() != width {
                return Err(DatasetError::RaggedRow { row: r, expected: width, found: row.len() });
            }
            for (attr, cell) in self.attributes.iter().zip(row) {
                let Some(value) = cell else { continue };
                let ok = match (&attr.kind, value) {
                    (AttributeKind::Numeric, Value::Numeric(x)) => {
                        if !x.is_finite() {
                            return Err(DatasetError::NonFinite { attribute: attr.name.clone() });
                        }
                        true
                    }
                    (AttributeKind::Nominal(cats), Value::Nominal(i)) => {
                        if cats.is_empty() {
                            return Err(DatasetError::EmptyCategories { attribute: attr.name.clone() });
                        }
                        if *i as usize >= cats.len() {
                            return Err(DatasetError::CategoryOutOfRange {
                                row: r,
                                attribute: attr.name.clone(),
                                index: *i,
                            });
                        }
                        true
                    }
                    (AttributeKind::StringKind, Value::Text(_)) => true,
                    (AttributeKind::DateKind, Value::Date(s)) => {
                        if !is_iso_date(s) {
                            return Err(DatasetError::InvalidDate { attribute: attr.name.clone(), value: s.clone() });
                        }
                        true
                    }
                    _ => false,
                };
                if !ok {
                    return Err(DatasetError::KindMismatch { row: r, attribute: attr.name.clone() });
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.attributes.len()
    }

    pub fn n_cells(&self) -> usize {
        self.rows.len() * self.attributes.len()
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn class_attribute(&self) -> &Attribute {
        &self.attributes[self.class_index]
    }

    /// Indices of every attribute except the class, in column order.
    pub fn feature_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.attributes.len()).filter(move |&j| j != self.class_index)
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = Option<&Value>> + '_ {
        self.rows.iter().map(move |row| row[j].as_ref())
    }

    pub fn class_column(&self) -> impl Iterator<Item = Option<&Value>> + '_ {
        self.column(self.class_index)
    }

    /// A dataset with the same schema and a subset (or repetition) of rows.
    pub fn select_rows(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            attributes: self.attributes.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            class_index: self.class_index,
        }
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Dataset {
        self.name = name.into();
        self
    }

    pub fn into_parts(self) -> (String, Vec<Attribute>, Vec<Row>, usize) {
        (self.name, self.attributes, self.rows, self.class_index)
    }
}

/// Accepts `YYYY-MM-DD` and `YYYY-MM-DDTHH:MM:SS`.
pub fn is_iso_date(s: &str) -> bool {
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
        || chrono::NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").is_ok()
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("schema file: {0}")]
    Schema(#[from] serde_json::Error),
    #[error("invalid dataset: {0}")]
    Invalid(#[from] DatasetError),
}

impl LoadError {
    pub(crate) fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        LoadError::Parse { line, column, message: message.into() }
    }
}

/// Which on-disk representation a dataset file uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataFormat {
    Arff,
    /// CSV with a header row, typed by a JSON sidecar.
    CsvWithSchema { schema: PathBuf },
}

impl DataFormat {
    /// `.csv` files pair with `<stem>.schema.json` next to them; anything else is ARFF.
    pub fn infer(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => DataFormat::CsvWithSchema {
                schema: path.with_extension("schema.json"),
            },
            _ => DataFormat::Arff,
        }
    }
}

pub fn load_dataset(path: &Path, format: &DataFormat) -> Result<Dataset, LoadError> {
    match format {
        DataFormat::Arff => read_arff(path, None),
        DataFormat::CsvWithSchema { schema } => read_csv_with_schema(path, schema),
    }
}

pub(crate) fn read_to_string(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn num(x: f64) -> Cell {
        Some(Value::Numeric(x))
    }

    #[test]
    fn rejects_ragged_rows_and_bad_class_index() {
        let attrs = vec![Attribute::numeric("a"), Attribute::numeric("b")];
        let err = Dataset::new("d", attrs.clone(), vec![vec![num(1.0)]], 1).unwrap_err();
        assert_eq!(err, DatasetError::RaggedRow { row: 0, expected: 2, found: 1 });
        let err = Dataset::new("d", attrs, vec![], 2).unwrap_err();
        assert!(matches!(err, DatasetError::ClassIndexOutOfRange { .. }));
    }

    #[test]
    fn rejects_category_outside_list_and_kind_mismatch() {
        let attrs = vec![Attribute::nominal("c", ["a", "b"]), Attribute::numeric("y")];
        let err = Dataset::new("d", attrs.clone(), vec![vec![Some(Value::Nominal(2)), num(0.0)]], 1).unwrap_err();
        assert!(matches!(err, DatasetError::CategoryOutOfRange { index: 2, .. }));
        let err = Dataset::new("d", attrs, vec![vec![num(1.0), num(0.0)]], 1).unwrap_err();
        assert!(matches!(err, DatasetError::KindMismatch { .. }));
    }

    #[test]
    fn empty_category_list_only_for_fully_missing_columns() {
        let attrs = vec![Attribute::new("e", AttributeKind::Nominal(vec![])), Attribute::numeric("y")];
        assert!(Dataset::new("d", attrs.clone(), vec![vec![None, num(0.0)]], 1).is_ok());
        let err = Dataset::new("d", attrs, vec![vec![Some(Value::Nominal(0)), num(0.0)]], 1).unwrap_err();
        assert!(matches!(err, DatasetError::EmptyCategories { .. }));
    }

    #[test]
    fn dates_must_be_iso() {
        assert!(is_iso_date("2020-01-06"));
        assert!(is_iso_date("2020-01-06T10:00:00"));
        assert!(!is_iso_date("06/01/2020"));
        let attrs = vec![Attribute::new("t", AttributeKind::DateKind), Attribute::numeric("y")];
        let rows = vec![vec![Some(Value::Date("yesterday".into())), num(0.0)]];
        assert!(matches!(Dataset::new("d", attrs, rows, 1), Err(DatasetError::InvalidDate { .. })));
    }

    #[test]
    fn format_inference_pairs_csv_with_sidecar() {
        assert_eq!(DataFormat::infer(Path::new("x/data.arff")), DataFormat::Arff);
        assert_eq!(
            DataFormat::infer(Path::new("x/data.csv")),
            DataFormat::CsvWithSchema { schema: PathBuf::from("x/data.schema.json") }
        );
    }
}
