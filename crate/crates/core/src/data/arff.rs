use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use super::{Attribute, AttributeKind, Dataset};
use crate::error::{Error, Result};

/// Loads a dense ARFF file (nominal and numeric attributes only).
///
/// The class is the last declared attribute unless `class_attribute` names
/// another one. Nominal domains are taken from the header.
pub fn load_arff(path: impl AsRef<Path>, class_attribute: Option<&str>) -> Result<Dataset> {
    read_arff(File::open(path)?, class_attribute)
}

pub fn read_arff<R: Read>(reader: R, class_attribute: Option<&str>) -> Result<Dataset> {
    let mut relation = String::new();
    let mut declared: Vec<Attribute> = Vec::new();
    let mut in_data = false;
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();

    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let line_no = k + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        if in_data {
            rows.push((line_no, split_values(trimmed)));
            continue;
        }
        let lower = trimmed.to_ascii_lowercase();
        if lower.starts_with("@relation") {
            relation = unquote(trimmed["@relation".len()..].trim()).to_string();
        } else if lower.starts_with("@attribute") {
            let rest = trimmed["@attribute".len()..].trim();
            let (name, ty) =
                split_name(rest).ok_or_else(|| Error::Arff(format!("line {}: bad attribute declaration", line_no)))?;
            let index = declared.len();
            let ty = ty.trim();
            let attr = if ty.starts_with('{') {
                let inner = ty
                    .strip_prefix('{')
                    .and_then(|t| t.strip_suffix('}'))
                    .ok_or_else(|| Error::Arff(format!("line {}: unterminated nominal domain", line_no)))?;
                let values: Vec<String> = split_values(inner);
                Attribute::nominal(name, index, values)
            } else {
                match ty.to_ascii_lowercase().as_str() {
                    "numeric" | "real" | "integer" => Attribute::numeric(name, index),
                    other => {
                        return Err(Error::UnknownAttributeType { name, kind: other.to_string() });
                    }
                }
            };
            declared.push(attr);
        } else if lower.starts_with("@data") {
            in_data = true;
        } else {
            return Err(Error::Arff(format!("line {}: unexpected header line", line_no)));
        }
    }
    if declared.len() < 2 {
        return Err(Error::Arff("need at least one attribute and a class".into()));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile);
    }

    let class_idx = match class_attribute {
        Some(name) => {
            declared.iter().position(|a| a.name == name).ok_or_else(|| Error::MissingClassColumn(name.to_string()))?
        }
        None => declared.len() - 1,
    };
    if !declared[class_idx].is_nominal() {
        return Err(Error::NotNominal(declared[class_idx].name.clone()));
    }

    let mut values = Vec::with_capacity(rows.len() * (declared.len() - 1));
    let mut labels = Vec::with_capacity(rows.len());
    for (line_no, cells) in &rows {
        if cells.len() != declared.len() {
            return Err(Error::RaggedRow { line: *line_no, expected: declared.len(), found: cells.len() });
        }
        for (c, (attr, cell)) in declared.iter().zip(cells).enumerate() {
            if cell == "?" {
                return Err(Error::MissingValue { line: *line_no, column: attr.name.clone() });
            }
            let v = match &attr.kind {
                AttributeKind::Nominal { .. } => attr.value_index(cell).ok_or_else(|| Error::DomainViolation {
                    line: *line_no,
                    attribute: attr.name.clone(),
                    value: cell.clone(),
                })? as f64,
                AttributeKind::Numeric { .. } => cell.parse::<f64>().map_err(|_| Error::UnparseableCell {
                    line: *line_no,
                    column: attr.name.clone(),
                    value: cell.clone(),
                })?,
            };
            if c == class_idx {
                labels.push(v as usize);
            } else {
                values.push(v);
            }
        }
    }
    let class_attr = declared.remove(class_idx);
    Dataset::new(relation, declared, class_attr, values, labels)
}

/// Splits `name type` where the name may be quoted.
fn split_name(rest: &str) -> Option<(String, &str)> {
    let first = rest.chars().next()?;
    if first == '\'' || first == '"' {
        let end = rest[1..].find(first)? + 1;
        Some((rest[1..end].to_string(), &rest[end + 1..]))
    } else {
        let end = rest.find(char::is_whitespace)?;
        Some((rest[..end].to_string(), &rest[end..]))
    }
}

fn unquote(s: &str) -> &str {
    let b = s.as_bytes();
    if b.len() >= 2 && (b[0] == b'\'' || b[0] == b'"') && b[b.len() - 1] == b[0] {
        &s[1..s.len() - 1]
    } else {
        s
    }
}

/// Comma-separated values with optional single or double quoting.
fn split_values(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quote: Option<char> = None;
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match quote {
            Some(q) if ch == '\\' => {
                if let Some(next) = chars.next() {
                    cur.push(next);
                } else {
                    cur.push(q);
                }
            }
            Some(q) if ch == q => quote = None,
            Some(_) => cur.push(ch),
            None if ch == '\'' || ch == '"' => quote = Some(ch),
            None if ch == ',' => {
                out.push(cur.trim().to_string());
                cur.clear();
            }
            None => cur.push(ch),
        }
    }
    out.push(cur.trim().to_string());
    out
}

fn quote_if_needed(s: &str) -> String {
    if s.is_empty()
        || s.chars().any(|c| c == ',' || c == ' ' || c == '\'' || c == '"' || c == '{' || c == '}' || c == '%')
    {
        format!("'{}'", s.replace('\\', "\\\\").replace('\'', "\\'"))
    } else {
        s.to_string()
    }
}

/// Writes the dataset as ARFF with the class declared last.
pub fn write_arff<W: Write>(ds: &Dataset, mut w: W) -> Result<()> {
    let relation = if ds.relation().is_empty() { "data" } else { ds.relation() };
    writeln!(w, "@relation {}", quote_if_needed(relation))?;
    writeln!(w)?;
    for attr in ds.attributes().iter().chain(std::iter::once(ds.class_attribute())) {
        match &attr.kind {
            AttributeKind::Nominal { values } => {
                let vals: Vec<String> = values.iter().map(|v| quote_if_needed(v)).collect();
                writeln!(w, "@attribute {} {{{}}}", quote_if_needed(&attr.name), vals.join(","))?;
            }
            AttributeKind::Numeric { .. } => writeln!(w, "@attribute {} numeric", quote_if_needed(&attr.name))?,
        }
    }
    writeln!(w)?;
    writeln!(w, "@data")?;
    let class_values = ds.class_attribute().values();
    for (i, row) in ds.rows().enumerate() {
        let mut cells: Vec<String> = ds
            .attributes()
            .iter()
            .zip(row)
            .map(|(a, &v)| match &a.kind {
                AttributeKind::Nominal { values } => quote_if_needed(&values[v as usize]),
                AttributeKind::Numeric { .. } => format!("{}", v),
            })
            .collect();
        cells.push(quote_if_needed(&class_values[ds.labels()[i]]));
        writeln!(w, "{}", cells.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "% comment\n@relation demo\n@attribute a {0,1}\n@attribute x numeric\n@attribute class {neg,pos}\n@data\n";

    #[test]
    fn domain_from_header() {
        let text = format!("{}1,0.5,pos\n1,1.5,neg\n", HEADER);
        let ds = read_arff(text.as_bytes(), None).unwrap();
        assert_eq!(ds.attributes()[0].values(), &["0".to_string(), "1".to_string()]);
        assert_eq!(ds.labels(), &[1, 0]);
        assert_eq!(ds.relation(), "demo");
    }

    #[test]
    fn value_outside_domain() {
        let text = format!("{}2,0.5,pos\n", HEADER);
        let err = read_arff(text.as_bytes(), None);
        assert!(matches!(err, Err(Error::DomainViolation { line: 7, .. })));
    }

    #[test]
    fn unknown_type() {
        let text = "@relation r\n@attribute s string\n@attribute c {a}\n@data\nx,a\n";
        assert!(matches!(read_arff(text.as_bytes(), None), Err(Error::UnknownAttributeType { .. })));
    }

    #[test]
    fn class_override() {
        let text = format!("{}1,0.5,pos\n0,1.5,neg\n", HEADER);
        let ds = read_arff(text.as_bytes(), Some("a")).unwrap();
        assert_eq!(ds.class_attribute().name, "a");
        assert_eq!(ds.n_attributes(), 2);
        assert_eq!(ds.labels(), &[1, 0]);
    }

    #[test]
    fn quoting_round_trip() {
        let text =
            "@relation 'my rel'\n@attribute 'odd name' {'a b','c,d'}\n@attribute c {x,y}\n@data\n'a b',x\n'c,d',y\n";
        let ds = read_arff(text.as_bytes(), None).unwrap();
        assert_eq!(ds.attributes()[0].name, "odd name");
        let mut out = Vec::new();
        write_arff(&ds, &mut out).unwrap();
        assert_eq!(read_arff(out.as_slice(), None).unwrap(), ds);
    }
}
