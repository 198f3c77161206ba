//! Data model and delimited-text ingestion.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How an attribute behaves inside a group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeRole {
    /// Shared by every member of a group, e.g. the business name.
    #[serde(alias = "common")]
    CommonValue,
    /// A few primary values shared by most members, plus local exceptions.
    #[serde(alias = "dominant")]
    DominantValue,
    /// Many-to-many values such as categories.
    #[serde(alias = "multi")]
    MultiValue,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    pub role: AttributeRole,
    #[serde(default)]
    pub multi_valued: bool,
}

impl Attribute {
    pub fn new(name: impl Into<String>, role: AttributeRole, multi_valued: bool) -> Self {
        Attribute {
            name: name.into(),
            role,
            multi_valued,
        }
    }
}

/// Ordered attribute list. Attribute positions are used as keys everywhere.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schema {
    attributes: Vec<Attribute>,
    common: Vec<usize>,
    dominant: Vec<usize>,
    multi: Vec<usize>,
}

impl Schema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for a in &attributes {
            if a.name.trim().is_empty() {
                return Err(Error::Schema("attribute with an empty name".into()));
            }
            if !seen.insert(a.name.as_str()) {
                return Err(Error::Schema(format!(
                    "attribute `{}` declared twice",
                    a.name
                )));
            }
        }
        let pick = |role| {
            attributes
                .iter()
                .enumerate()
                .filter(|(_, a)| a.role == role)
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        let (common, dominant, multi) = (
            pick(AttributeRole::CommonValue),
            pick(AttributeRole::DominantValue),
            pick(AttributeRole::MultiValue),
        );
        if common.is_empty() {
            return Err(Error::Schema(
                "at least one common-value attribute is required".into(),
            ));
        }
        if dominant.is_empty() {
            return Err(Error::Schema(
                "at least one dominant-value attribute is required".into(),
            ));
        }
        Ok(Schema {
            attributes,
            common,
            dominant,
            multi,
        })
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.attributes.iter().position(|a| a.name == name)
    }

    pub fn name(&self, attr: usize) -> &str {
        &self.attributes[attr].name
    }

    /// Positions of the common-value attributes.
    pub fn common(&self) -> &[usize] {
        &self.common
    }

    /// Positions of the dominant-value attributes.
    pub fn dominant(&self) -> &[usize] {
        &self.dominant
    }

    /// Positions of the multi-value attributes.
    pub fn multi(&self) -> &[usize] {
        &self.multi
    }
}

/// One observation of an entity. `values[i]` holds the normalized values of
/// schema attribute `i`; an empty set means the value is missing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub values: Vec<BTreeSet<String>>,
}

impl Record {
    pub fn values(&self, attr: usize) -> &BTreeSet<String> {
        &self.values[attr]
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    schema: Schema,
    records: Vec<Record>,
}

impl Dataset {
    pub fn new(schema: Schema, records: Vec<Record>) -> Result<Self> {
        let mut seen = HashMap::new();
        for (i, r) in records.iter().enumerate() {
            if r.values.len() != schema.len() {
                return Err(Error::MalformedRow {
                    row: i as u64 + 1,
                    message: format!(
                        "record `{}` has {} attributes, schema has {}",
                        r.id,
                        r.values.len(),
                        schema.len()
                    ),
                });
            }
            if seen.insert(r.id.as_str(), i).is_some() {
                return Err(Error::DuplicateId {
                    row: i as u64 + 1,
                    id: r.id.clone(),
                });
            }
        }
        Ok(Dataset { schema, records })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn record(&self, idx: usize) -> &Record {
        &self.records[idx]
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// A dataset holding only the records at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }
}

/// Planted group membership: record id to group id.
pub type GoldStandard = BTreeMap<String, String>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParseOptions {
    /// Field delimiter, a single ASCII character.
    pub delimiter: char,
    /// Separator between values inside a multi-valued cell.
    pub value_separator: String,
    /// Header name of the record id column.
    pub id_column: String,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            delimiter: ',',
            value_separator: ";".into(),
            id_column: "id".into(),
        }
    }
}

impl ParseOptions {
    fn delimiter_byte(&self) -> Result<u8> {
        if self.delimiter.is_ascii() {
            Ok(self.delimiter as u8)
        } else {
            Err(Error::Config(format!(
                "delimiter {:?} is not ASCII",
                self.delimiter
            )))
        }
    }
}

/// Trims, collapses internal whitespace runs to one space and lowercases.
pub fn normalize_value(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    out
}

fn csv_row(err: &csv::Error) -> u64 {
    err.position().map(|p| p.line()).unwrap_or(0)
}

/// Reads a delimited dataset whose header names an id column plus any
/// subset of the schema attributes.
pub fn parse_dataset<R: Read>(
    input: R,
    schema: &Schema,
    options: &ParseOptions,
) -> Result<Dataset> {
    if options.value_separator.is_empty() {
        return Err(Error::Config("value separator must not be empty".into()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter_byte()?)
        .has_headers(true)
        .from_reader(input);
    let header = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            row: 1,
            message: e.to_string(),
        })?
        .clone();

    let mut id_col = None;
    let mut columns = Vec::with_capacity(header.len());
    for (col, name) in header.iter().enumerate() {
        let name = name.trim();
        if name == options.id_column {
            id_col = Some(col);
            columns.push(None);
        } else {
            let attr = schema
                .index_of(name)
                .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
            columns.push(Some(attr));
        }
    }
    let id_col = id_col.ok_or_else(|| Error::MissingIdColumn(options.id_column.clone()))?;

    let mut records = Vec::new();
    let mut seen: HashMap<String, u64> = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::MalformedRow {
            row: csv_row(&e),
            message: e.to_string(),
        })?;
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        let id = row.get(id_col).unwrap_or("").trim().to_string();
        if id.is_empty() {
            return Err(Error::MalformedRow {
                row: line,
                message: "empty record id".into(),
            });
        }
        if seen.insert(id.clone(), line).is_some() {
            return Err(Error::DuplicateId { row: line, id });
        }
        let mut values = vec![BTreeSet::new(); schema.len()];
        for (col, cell) in row.iter().enumerate() {
            let Some(attr) = columns[col] else { continue };
            if schema.attributes()[attr].multi_valued {
                for part in cell.split(options.value_separator.as_str()) {
                    let v = normalize_value(part);
                    if !v.is_empty() {
                        values[attr].insert(v);
                    }
                }
            } else {
                let v = normalize_value(cell);
                if !v.is_empty() {
                    values[attr].insert(v);
                }
            }
        }
        records.push(Record { id, values });
    }
    Ok(Dataset {
        schema: schema.clone(),
        records,
    })
}

/// Writes a dataset in the format accepted by [`parse_dataset`].
pub fn write_dataset<W: Write>(out: W, dataset: &Dataset, options: &ParseOptions) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(options.delimiter_byte()?)
        .from_writer(out);
    let wrap = |e: csv::Error| Error::io("<output>", std::io::Error::other(e));
    let mut header = vec![options.id_column.clone()];
    header.extend(dataset.schema().attributes().iter().map(|a| a.name.clone()));
    writer.write_record(&header).map_err(wrap)?;
    for r in dataset.records() {
        let mut row = vec![r.id.clone()];
        for set in &r.values {
            row.push(
                set.iter()
                    .cloned()
                    .collect::<Vec<_>>()
                    .join(&options.value_separator),
            );
        }
        writer.write_record(&row).map_err(wrap)?;
    }
    writer.flush().map_err(|e| Error::io("<output>", e))?;
    Ok(())
}

/// Reads a `record_id<TAB>group_id` file.
pub fn parse_gold<R: Read>(input: R) -> Result<GoldStandard> {
    let mut text = String::new();
    let mut input = input;
    input
        .read_to_string(&mut text)
        .map_err(|e| Error::io("<gold>", e))?;
    let mut gold = GoldStandard::new();
    for (i, line) in text.lines().enumerate() {
        let row = i as u64 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let (Some(id), Some(group), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::MalformedRow {
                row,
                message: "expected `record_id<TAB>group_id`".into(),
            });
        };
        let id = id.trim().to_string();
        if gold.insert(id.clone(), group.trim().to_string()).is_some() {
            return Err(Error::DuplicateId { row, id });
        }
    }
    Ok(gold)
}

/// Writes an assignment as `record_id<TAB>group_id` lines sorted by record id.
pub fn write_assignment<W: Write>(mut out: W, assignment: &BTreeMap<String, String>) -> Result<()> {
    for (id, group) in assignment {
        writeln!(out, "{id}\t{group}").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> Schema {
        Schema::new(vec![
            Attribute::new("name", AttributeRole::CommonValue, false),
            Attribute::new("phone", AttributeRole::DominantValue, false),
            Attribute::new("url", AttributeRole::DominantValue, true),
        ])
        .unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_value("  Home  Depot, The "), "home depot, the");
        assert_eq!(normalize_value("808"), "808");
        assert_eq!(normalize_value(" \t "), "");
    }

    #[test]
    fn schema_requires_roles() {
        let only_common = Schema::new(vec![Attribute::new(
            "name",
            AttributeRole::CommonValue,
            false,
        )]);
        assert!(matches!(only_common, Err(Error::Schema(_))));
        let dup = Schema::new(vec![
            Attribute::new("a", AttributeRole::CommonValue, false),
            Attribute::new("a", AttributeRole::DominantValue, false),
        ]);
        assert!(matches!(dup, Err(Error::Schema(_))));
    }

    #[test]
    fn parses_multi_valued_cells() {
        let text =
            "id,name,phone,url\nr13,Taco Casa,900,tacocasa;tacocasatexas\nr14,Taco Casa,900,\n";
        let ds = parse_dataset(text.as_bytes(), &schema(), &ParseOptions::default()).unwrap();
        assert_eq!(ds.len(), 2);
        let urls: Vec<_> = ds.record(0).values(2).iter().cloned().collect();
        assert_eq!(urls, ["tacocasa", "tacocasatexas"]);
        assert!(ds.record(1).values(2).is_empty());
    }

    #[test]
    fn empty_body_gives_empty_dataset() {
        let ds =
            parse_dataset("id,name\n".as_bytes(), &schema(), &ParseOptions::default()).unwrap();
        assert!(ds.is_empty());
    }

    #[test]
    fn duplicate_id_names_the_row() {
        let text = "id,name\nr1,a\nr2,b\nr1,c\n";
        let err = parse_dataset(text.as_bytes(), &schema(), &ParseOptions::default()).unwrap_err();
        match err {
            Error::DuplicateId { row, id } => {
                assert_eq!(row, 4);
                assert_eq!(id, "r1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_column_and_malformed_row() {
        let err = parse_dataset(
            "id,colour\n".as_bytes(),
            &schema(),
            &ParseOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownColumn(c) if c == "colour"));
        let err = parse_dataset(
            "id,name\nr1,a,extra\n".as_bytes(),
            &schema(),
            &ParseOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::MalformedRow { row: 2, .. }));
    }

    #[test]
    fn tab_delimited_gold() {
        let gold = parse_gold("r1\tg1\nr2\tg1\n\nr3\tg2\n".as_bytes()).unwrap();
        assert_eq!(gold.len(), 3);
        assert_eq!(gold["r2"], "g1");
        assert!(parse_gold("r1 g1\n".as_bytes()).is_err());
    }
}
