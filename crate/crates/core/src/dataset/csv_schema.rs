//! CSV files typed by a JSON schema sidecar:
//! `{"class_index": int, "attributes": [{"name", "kind", "categories"?}]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{is_iso_date, read_to_string, Attribute, AttributeKind, Dataset, LoadError, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaAttribute {
    pub name: String,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub categories: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub class_index: usize,
    pub attributes: Vec<SchemaAttribute>,
}

fn default_schema_version() -> u32 {
    1
}

impl CsvSchema {
    pub fn for_dataset(d: &Dataset) -> CsvSchema {
        let attributes = d
            .attributes()
            .iter()
            .map(|a| {
                let (kind, categories) = match &a.kind {
                    AttributeKind::Numeric => ("numeric", None),
                    AttributeKind::Nominal(c) => ("nominal", Some(c.clone())),
                    AttributeKind::StringKind => ("string", None),
                    AttributeKind::DateKind => ("date", None),
                };
                SchemaAttribute { name: a.name.clone(), kind: kind.into(), categories }
            })
            .collect();
        CsvSchema { schema_version: 1, class_index: d.class_index(), attributes }
    }

    fn to_attributes(&self) -> Result<Vec<Attribute>, LoadError> {
        self.attributes
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let kind = match (a.kind.as_str(), &a.categories) {
                    ("numeric", None) => AttributeKind::Numeric,
                    ("nominal", Some(c)) => AttributeKind::Nominal(c.clone()),
                    ("nominal", None) => {
                        return Err(LoadError::SchemaMismatch(format!(
                            "attributes[{i}] (`{}`): nominal attribute without categories",
                            a.name
                        )))
                    }
                    ("string", None) => AttributeKind::StringKind,
                    ("date", None) => AttributeKind::DateKind,
                    (kind, _) => {
                        return Err(LoadError::SchemaMismatch(format!(
                            "attributes[{i}] (`{}`): unsupported kind `{kind}` or unexpected categories",
                            a.name
                        )))
                    }
                };
                Ok(Attribute::new(a.name.clone(), kind))
            })
            .collect()
    }
}

pub fn read_csv_with_schema(path: &Path, schema_path: &Path) -> Result<Dataset, LoadError> {
    let schema: CsvSchema = serde_json::from_str(&read_to_string(schema_path)?)?;
    let text = read_to_string(path)?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("dataset").to_string();
    parse_csv(&text, &schema, name)
}

pub(crate) fn parse_csv(text: &str, schema: &CsvSchema, name: String) -> Result<Dataset, LoadError> {
    let attributes = schema.to_attributes()?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| LoadError::parse(1, 1, e.to_string()))?
        .clone();
    if headers.len() != attributes.len() {
        return Err(LoadError::SchemaMismatch(format!(
            "header has {} columns, schema declares {}",
            headers.len(),
            attributes.len()
        )));
    }
    for (j, (h, a)) in headers.iter().zip(&attributes).enumerate() {
        if h.trim() != a.name {
            return Err(LoadError::SchemaMismatch(format!(
                "column {} is `{}` in the header but `{}` in the schema",
                j + 1,
                h.trim(),
                a.name
            )));
        }
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            LoadError::parse(line, 1, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != attributes.len() {
            return Err(LoadError::SchemaMismatch(format!(
                "line {line}: {} values but schema declares {}",
                record.len(),
                attributes.len()
            )));
        }
        let mut row = Vec::with_capacity(attributes.len());
        for (j, (raw, attr)) in record.iter().zip(&attributes).enumerate() {
            let field = raw.trim();
            let column = j + 1;
            if field.is_empty() || field == "?" {
                row.push(None);
                continue;
            }
            let value = match &attr.kind {
                AttributeKind::Numeric => match field.parse::<f64>() {
                    Ok(x) if x.is_finite() => Value::Numeric(x),
                    _ => return Err(LoadError::parse(line, column, format!("`{field}` is not numeric"))),
                },
                AttributeKind::Nominal(cats) => match cats.iter().position(|c| c == field) {
                    Some(i) => Value::Nominal(i as u32),
                    None => {
                        return Err(LoadError::parse(
                            line,
                            column,
                            format!("`{field}` is not a category of `{}`", attr.name),
                        ))
                    }
                },
                AttributeKind::StringKind => Value::Text(field.to_string()),
                AttributeKind::DateKind => {
                    if !is_iso_date(field) {
                        return Err(LoadError::parse(line, column, format!("`{field}` is not an ISO-8601 date")));
                    }
                    Value::Date(field.to_string())
                }
            };
            row.push(Some(value));
        }
        rows.push(row);
    }
    Ok(Dataset::new(name, attributes, rows, schema.class_index)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> CsvSchema {
        serde_json::from_str(
            r#"{"class_index": 2, "attributes": [
                {"name": "x", "kind": "numeric"},
                {"name": "c", "kind": "nominal", "categories": ["a", "b"]},
                {"name": "y", "kind": "nominal", "categories": ["p", "q"]}
            ]}"#,
        )
        .unwrap()
    }

    #[test]
    fn class_index_comes_from_sidecar() {
        let d = parse_csv("x,c,y\n1,a,p\n,b,q\n", &schema(), "t".into()).unwrap();
        assert_eq!(d.class_index(), 2);
        assert_eq!(d.rows()[1][0], None);
    }

    #[test]
    fn header_arity_mismatch() {
        assert!(matches!(
            parse_csv("x,c\n1,a\n", &schema(), "t".into()),
            Err(LoadError::SchemaMismatch(_))
        ));
        assert!(matches!(
            parse_csv("x,c,y\n1,a\n", &schema(), "t".into()),
            Err(LoadError::SchemaMismatch(_))
        ));
    }

    #[test]
    fn unknown_category_reports_line_and_column() {
        match parse_csv("x,c,y\n1,a,p\n2,z,p\n", &schema(), "t".into()) {
            Err(LoadError::Parse { line, column, .. }) => assert_eq!((line, column), (3, 2)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_round_trips_from_dataset() {
        let d = parse_csv("x,c,y\n1,a,p\n", &schema(), "t".into()).unwrap();
        assert_eq!(CsvSchema::for_dataset(&d), schema());
    }
}
