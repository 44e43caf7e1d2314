//! A strict ARFF subset: `@relation`, `@attribute`, `@data`, `%` comment
//! lines and `?` for missing cells. The class is the last attribute unless
//! the caller says otherwise.

use std::fmt::Write as _;
use std::path::Path;

use super::{is_iso_date, read_to_string, Attribute, AttributeKind, Cell, Dataset, LoadError, Value};

pub fn read_arff(path: &Path, class_index: Option<usize>) -> Result<Dataset, LoadError> {
    parse_arff(&read_to_string(path)?, class_index)
}

/// One lexical field of a comma-separated line, with its 1-based column.
struct Field {
    text: String,
    quoted: bool,
    column: usize,
}

fn split_fields(line: &str, line_no: usize) -> Result<Vec<Field>, LoadError> {
    let mut fields = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    loop {
        while i < chars.len() && chars[i].is_whitespace() {
            i += 1;
        }
        let column = i + 1;
        let mut text = String::new();
        let mut quoted = false;
        if i < chars.len() && (chars[i] == '\'' || chars[i] == '"') {
            let quote = chars[i];
            quoted = true;
            i += 1;
            loop {
                match chars.get(i) {
                    None => return Err(LoadError::parse(line_no, column, "unterminated quoted value")),
                    Some('\\') if i + 1 < chars.len() => {
                        text.push(chars[i + 1]);
                        i += 2;
                    }
                    Some(&c) if c == quote => {
                        i += 1;
                        break;
                    }
                    Some(&c) => {
                        text.push(c);
                        i += 1;
                    }
                }
            }
            while i < chars.len() && chars[i].is_whitespace() {
                i += 1;
            }
            if i < chars.len() && chars[i] != ',' {
                return Err(LoadError::parse(line_no, i + 1, "expected `,` after quoted value"));
            }
        } else {
            while i < chars.len() && chars[i] != ',' {
                text.push(chars[i]);
                i += 1;
            }
            text = text.trim_end().to_string();
        }
        fields.push(Field { text, quoted, column });
        if i >= chars.len() {
            break;
        }
        i += 1; // comma
    }
    Ok(fields)
}

/// Splits `word rest` where `word` may be quoted.
fn take_token(s: &str) -> Option<(String, &str)> {
    let s = s.trim_start();
    let mut chars = s.char_indices();
    let (_, first) = chars.next()?;
    if first == '\'' || first == '"' {
        let mut out = String::new();
        let mut escaped = false;
        for (i, c) in chars {
            if escaped {
                out.push(c);
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == first {
                return Some((out, &s[i + 1..]));
            } else {
                out.push(c);
            }
        }
        None
    } else {
        let end = s.find(char::is_whitespace).unwrap_or(s.len());
        Some((s[..end].to_string(), &s[end..]))
    }
}

fn parse_attribute(rest: &str, line_no: usize, offset: usize) -> Result<Attribute, LoadError> {
    let (name, type_part) =
        take_token(rest).ok_or_else(|| LoadError::parse(line_no, offset, "missing attribute name"))?;
    let type_part = type_part.trim();
    let type_col = offset + rest.len() - type_part.len().min(rest.len());
    if type_part.starts_with('{') {
        let close = type_part
            .rfind('}')
            .ok_or_else(|| LoadError::parse(line_no, type_col, "unterminated nominal category list"))?;
        let inner = &type_part[1..close];
        let mut categories = Vec::new();
        if !inner.trim().is_empty() {
            for field in split_fields(inner, line_no)? {
                if field.text.is_empty() {
                    return Err(LoadError::parse(line_no, type_col + field.column, "empty category name"));
                }
                if categories.contains(&field.text) {
                    return Err(LoadError::parse(
                        line_no,
                        type_col + field.column,
                        format!("duplicate category `{}`", field.text),
                    ));
                }
                categories.push(field.text);
            }
        }
        return Ok(Attribute::new(name, AttributeKind::Nominal(categories)));
    }
    let (kind_word, _format) =
        take_token(type_part).ok_or_else(|| LoadError::parse(line_no, type_col, "missing attribute type"))?;
    let kind = match kind_word.to_ascii_lowercase().as_str() {
        "numeric" | "real" | "integer" => AttributeKind::Numeric,
        "string" => AttributeKind::StringKind,
        "date" => AttributeKind::DateKind,
        other => return Err(LoadError::parse(line_no, type_col, format!("unsupported attribute type `{other}`"))),
    };
    Ok(Attribute::new(name, kind))
}

fn parse_cell(attr: &Attribute, field: &Field, line_no: usize) -> Result<Cell, LoadError> {
    if !field.quoted && field.text == "?" {
        return Ok(None);
    }
    let err = |msg: String| LoadError::parse(line_no, field.column, msg);
    let value = match &attr.kind {
        AttributeKind::Numeric => {
            let x: f64 = field
                .text
                .parse()
                .map_err(|_| err(format!("`{}` is not numeric (attribute `{}`)", field.text, attr.name)))?;
            if !x.is_finite() {
                return Err(err(format!("non-finite numeric value in attribute `{}`", attr.name)));
            }
            Value::Numeric(x)
        }
        AttributeKind::Nominal(cats) => {
            let idx = cats.iter().position(|c| c == &field.text).ok_or_else(|| {
                err(format!("`{}` is not a category of nominal attribute `{}`", field.text, attr.name))
            })?;
            Value::Nominal(idx as u32)
        }
        AttributeKind::StringKind => Value::Text(field.text.clone()),
        AttributeKind::DateKind => {
            if !is_iso_date(&field.text) {
                return Err(err(format!("`{}` is not an ISO-8601 date (attribute `{}`)", field.text, attr.name)));
            }
            Value::Date(field.text.clone())
        }
    };
    Ok(Some(value))
}

pub fn parse_arff(text: &str, class_index: Option<usize>) -> Result<Dataset, LoadError> {
    let mut relation: Option<String> = None;
    let mut attributes: Vec<Attribute> = Vec::new();
    let mut rows = Vec::new();
    let mut in_data = false;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let indent = raw.len() - raw.trim_start().len();
        if !in_data {
            let (keyword, rest) = match line.find(char::is_whitespace) {
                Some(p) => (&line[..p], &line[p..]),
                None => (line, ""),
            };
            match keyword.to_ascii_lowercase().as_str() {
                "@relation" => {
                    let (name, _) = take_token(rest)
                        .ok_or_else(|| LoadError::parse(line_no, indent + 1, "missing relation name"))?;
                    relation = Some(name);
                }
                "@attribute" => {
                    if relation.is_none() {
                        return Err(LoadError::parse(line_no, indent + 1, "@attribute before @relation"));
                    }
                    attributes.push(parse_attribute(rest, line_no, indent + keyword.len() + 1)?);
                }
                "@data" => {
                    if attributes.is_empty() {
                        return Err(LoadError::parse(line_no, indent + 1, "@data before any @attribute"));
                    }
                    in_data = true;
                }
                other => {
                    return Err(LoadError::parse(line_no, indent + 1, format!("unexpected header line `{other}`")))
                }
            }
            continue;
        }
        if line.starts_with('{') {
            return Err(LoadError::parse(line_no, indent + 1, "sparse rows are not supported"));
        }
        let fields = split_fields(raw, line_no)?;
        if fields.len() != attributes.len() {
            return Err(LoadError::SchemaMismatch(format!(
                "line {line_no}: {} values but {} attributes declared",
                fields.len(),
                attributes.len()
            )));
        }
        let row = attributes
            .iter()
            .zip(&fields)
            .map(|(attr, field)| parse_cell(attr, field, line_no))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    let relation = relation.ok_or_else(|| LoadError::parse(1, 1, "missing @relation"))?;
    if !in_data {
        return Err(LoadError::parse(text.lines().count().max(1), 1, "missing @data section"));
    }
    let class_index = class_index.unwrap_or(attributes.len() - 1);
    Ok(Dataset::new(relation, attributes, rows, class_index)?)
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty()
        || s == "?"
        || s.chars().any(|c| c.is_whitespace() || matches!(c, ',' | '\'' | '"' | '{' | '}' | '%' | '\\'))
}

fn quote(s: &str) -> String {
    if needs_quotes(s) {
        let escaped = s.replace('\\', "\\\\").replace('\'', "\\'");
        format!("'{escaped}'")
    } else {
        s.to_string()
    }
}

/// Serializes to the same ARFF subset; numbers use shortest round-trip form.
/// The class index is not representable in ARFF: readers default to the last
/// attribute, so callers writing a different class index must record it.
pub fn to_arff_string(d: &Dataset) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@relation {}", quote(d.name()));
    for attr in d.attributes() {
        let kind = match &attr.kind {
            AttributeKind::Numeric => "numeric".to_string(),
            AttributeKind::Nominal(cats) => {
                format!("{{{}}}", cats.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","))
            }
            AttributeKind::StringKind => "string".to_string(),
            AttributeKind::DateKind => "date".to_string(),
        };
        let _ = writeln!(out, "@attribute {} {kind}", quote(&attr.name));
    }
    out.push_str("@data\n");
    for row in d.rows() {
        let cells: Vec<String> = row
            .iter()
            .zip(d.attributes())
            .map(|(cell, attr)| match cell {
                None => "?".to_string(),
                Some(Value::Numeric(x)) => format!("{x}"),
                Some(Value::Nominal(i)) => quote(&attr.kind.categories().expect("nominal")[*i as usize]),
                Some(Value::Text(s)) | Some(Value::Date(s)) => quote(s),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

pub fn write_arff(d: &Dataset, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, to_arff_string(d))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "% comment\n@relation toy\n@attribute x numeric\n@attribute 'col b' {a,b}\n@attribute class {yes,no}\n@data\n1.5,a,yes\n?,'b',no\n";

    #[test]
    fn three_columns_with_one_missing_cell() {
        let d = parse_arff(SMALL, None).unwrap();
        assert_eq!(d.name(), "toy");
        assert_eq!(d.n_attributes(), 3);
        assert_eq!(d.class_index(), 2);
        assert_eq!(d.attributes()[1].name, "col b");
        let missing = d.rows().iter().flatten().filter(|c| c.is_none()).count();
        assert_eq!(missing, 1);
        assert_eq!(d.rows()[0][0], Some(Value::Numeric(1.5)));
        assert_eq!(d.rows()[1][1], Some(Value::Nominal(1)));
    }

    #[test]
    fn nominal_cell_outside_category_list_is_a_parse_error() {
        let text = "@relation t\n@attribute c {a,b}\n@data\nz\n";
        match parse_arff(text, None) {
            Err(LoadError::Parse { line, column, message }) => {
                assert_eq!((line, column), (4, 1));
                assert!(message.contains("`z`"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn arity_mismatch_is_a_schema_error() {
        let text = "@relation t\n@attribute a numeric\n@attribute b numeric\n@data\n1,2,3\n";
        assert!(matches!(parse_arff(text, None), Err(LoadError::SchemaMismatch(_))));
    }

    #[test]
    fn reports_column_of_bad_numeric() {
        let text = "@relation t\n@attribute a numeric\n@attribute b numeric\n@data\n1, x\n";
        match parse_arff(text, None) {
            Err(LoadError::Parse { line, column, .. }) => assert_eq!((line, column), (5, 4)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn explicit_class_index_and_dates() {
        let text = "@relation t\n@attribute when date \"yyyy-MM-dd\"\n@attribute s string\n@attribute y numeric\n@data\n2020-01-06,'hello world',3\n";
        let d = parse_arff(text, Some(0)).unwrap();
        assert_eq!(d.class_index(), 0);
        assert_eq!(d.rows()[0][1], Some(Value::Text("hello world".into())));
    }

    #[test]
    fn writer_output_parses_back_identically() {
        let d = parse_arff(SMALL, None).unwrap();
        let again = parse_arff(&to_arff_string(&d), None).unwrap();
        assert_eq!(d, again);
    }

    #[test]
    fn rejects_unknown_types_and_missing_sections() {
        assert!(parse_arff("@relation t\n@attribute a relational\n@data\n", None).is_err());
        assert!(parse_arff("@relation t\n@attribute a numeric\n", None).is_err());
        assert!(parse_arff("@attribute a numeric\n@data\n", None).is_err());
    }
}
