use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Attribute, AttributeKind, Dataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Nominal,
    Numeric,
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "?"
}

/// Loads a CSV file with a header row.
///
/// `class_column` names the class column (default: last). Columns without a
/// hint are numeric when every cell parses as a number, nominal otherwise.
/// Nominal domains are listed in order of first appearance.
pub fn load_csv(
    path: impl AsRef<Path>,
    class_column: Option<&str>,
    hints: &HashMap<String, ColumnKind>,
) -> Result<Dataset> {
    let file = File::open(path.as_ref())?;
    let relation = path.as_ref().file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    read_csv(file, &relation, class_column, hints)
}

pub fn read_csv<R: Read>(
    reader: R,
    relation: &str,
    class_column: Option<&str>,
    hints: &HashMap<String, ColumnKind>,
) -> Result<Dataset> {
    let mut rdr = ::csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(Error::EmptyFile);
    }
    let mut records: Vec<Vec<String>> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(Error::RaggedRow { line: k + 2, expected: header.len(), found: rec.len() });
        }
        records.push(rec.iter().map(|s| s.trim().to_string()).collect());
    }
    if records.is_empty() {
        return Err(Error::EmptyFile);
    }

    let class_idx = match class_column {
        Some(name) => {
            header.iter().position(|h| h == name).ok_or_else(|| Error::MissingClassColumn(name.to_string()))?
        }
        None => header.len() - 1,
    };
    if header.len() < 2 {
        return Err(Error::MissingClassColumn(header[0].clone()));
    }

    let mut attributes = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    for (c, name) in header.iter().enumerate() {
        if c == class_idx {
            continue;
        }
        let kind = match hints.get(name) {
            Some(&k) => k,
            None => infer_kind(&records, c),
        };
        let (attr, col) = match kind {
            ColumnKind::Numeric => {
                let mut col = Vec::with_capacity(records.len());
                for (k, rec) in records.iter().enumerate() {
                    let cell = &rec[c];
                    let v: f64 = cell.parse().map_err(|_| Error::UnparseableCell {
                        line: k + 2,
                        column: name.clone(),
                        value: cell.clone(),
                    })?;
                    if !v.is_finite() {
                        return Err(Error::UnparseableCell { line: k + 2, column: name.clone(), value: cell.clone() });
                    }
                    col.push(v);
                }
                (Attribute::numeric(name.clone(), attributes.len()), col)
            }
            ColumnKind::Nominal => {
                let (domain, col) = nominal_column(&records, c, name)?;
                (Attribute::nominal(name.clone(), attributes.len(), domain), col)
            }
        };
        attributes.push(attr);
        columns.push(col);
    }
    let (class_domain, class_col) = nominal_column(&records, class_idx, &header[class_idx])?;
    let class_attr = Attribute::nominal(header[class_idx].clone(), attributes.len(), class_domain);
    let labels = class_col.into_iter().map(|v| v as usize).collect();

    let m = attributes.len();
    let mut values = Vec::with_capacity(records.len() * m);
    for i in 0..records.len() {
        values.extend(columns.iter().map(|col| col[i]));
    }
    Dataset::new(relation, attributes, class_attr, values, labels)
}

fn infer_kind(records: &[Vec<String>], c: usize) -> ColumnKind {
    let numeric = records.iter().all(|r| r[c].parse::<f64>().map(|v| v.is_finite()).unwrap_or(false));
    if numeric {
        ColumnKind::Numeric
    } else {
        ColumnKind::Nominal
    }
}

fn nominal_column(records: &[Vec<String>], c: usize, name: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut domain: Vec<String> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut col = Vec::with_capacity(records.len());
    for (k, rec) in records.iter().enumerate() {
        let cell = rec[c].as_str();
        if is_missing(cell) {
            return Err(Error::MissingValue { line: k + 2, column: name.to_string() });
        }
        let next = domain.len();
        let v = *index.entry(cell).or_insert(next);
        if v == next {
            domain.push(cell.to_string());
        }
        col.push(v as f64);
    }
    Ok((domain, col))
}

/// Writes the dataset as CSV with the class as the last column.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = ::csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.attributes().iter().map(|a| a.name.as_str()).collect();
    header.push(&ds.class_attribute().name);
    w.write_record(&header)?;
    let class_values = ds.class_attribute().values();
    let mut record = Vec::with_capacity(header.len());
    for (i, row) in ds.rows().enumerate() {
        record.clear();
        for (attr, &v) in ds.attributes().iter().zip(row) {
            record.push(match &attr.kind {
                AttributeKind::Nominal { values } => values[v as usize].clone(),
                AttributeKind::Numeric { .. } => format!("{}", v),
            });
        }
        record.push(class_values[ds.labels()[i]].clone());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hints(pairs: &[(&str, ColumnKind)]) -> HashMap<String, ColumnKind> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn parses_mixed_columns() {
        let text = "a,b,class\n0.5,x,0\n1.5,y,1\n2,x,1\n";
        let ds = read_csv(text.as_bytes(), "t", None, &HashMap::new()).unwrap();
        assert_eq!(ds.n_attributes(), 2);
        assert_eq!(ds.n_instances(), 3);
        assert!(ds.attributes()[0].is_numeric());
        assert_eq!(ds.attributes()[1].values(), &["x".to_string(), "y".to_string()]);
        assert_eq!(ds.labels(), &[0, 1, 1]);
    }

    #[test]
    fn numeric_hint_rejects_question_mark() {
        let text = "a,class\n1,0\n2,1\n?,1\n";
        let err = read_csv(text.as_bytes(), "t", None, &hints(&[("a", ColumnKind::Numeric)]));
        assert!(matches!(err, Err(Error::UnparseableCell { line: 4, .. })));
    }

    #[test]
    fn missing_values_rejected() {
        let text = "a,class\nx,0\n?,1\n";
        let err = read_csv(text.as_bytes(), "t", None, &HashMap::new());
        assert!(matches!(err, Err(Error::MissingValue { line: 3, .. })));
    }

    #[test]
    fn ragged_and_empty() {
        let err = read_csv("a,b,class\n1,2,0\n1,0\n".as_bytes(), "t", None, &HashMap::new());
        assert!(matches!(err, Err(Error::RaggedRow { line: 3, .. })));
        let err = read_csv("".as_bytes(), "t", None, &HashMap::new());
        assert!(matches!(err, Err(Error::EmptyFile)));
        let err = read_csv("a,class\n".as_bytes(), "t", None, &HashMap::new());
        assert!(matches!(err, Err(Error::EmptyFile)));
    }

    #[test]
    fn class_column_by_name() {
        let text = "label,a\nyes,1\nno,2\n";
        let ds = read_csv(text.as_bytes(), "t", Some("label"), &HashMap::new()).unwrap();
        assert_eq!(ds.class_attribute().name, "label");
        assert_eq!(ds.attributes()[0].name, "a");
        let err = read_csv(text.as_bytes(), "t", Some("nope"), &HashMap::new());
        assert!(matches!(err, Err(Error::MissingClassColumn(_))));
    }

    #[test]
    fn quoted_cells_round_trip() {
        let text = "\"name, with comma\",class\n\"a \"\"b\"\"\",0\nc,1\n";
        let ds = read_csv(text.as_bytes(), "t", None, &HashMap::new()).unwrap();
        let mut out = Vec::new();
        write_csv(&ds, &mut out).unwrap();
        let back = read_csv(out.as_slice(), "t", None, &HashMap::new()).unwrap();
        assert_eq!(ds, back);
        assert_eq!(ds.attributes()[0].values()[0], "a \"b\"");
    }
}
