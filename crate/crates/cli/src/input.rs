//! Row readers for CSV (with header) and NDJSON input.

use std::fs::File;
use std::io::{self, BufRead, BufReader, Read};
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use streamcpd::InputTransform;

use crate::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Ndjson,
}

impl Format {
    pub fn from_path(p: &Path) -> Self {
        match p.extension().and_then(|e| e.to_str()) {
            Some("ndjson" | "jsonl") => Self::Ndjson,
            _ => Self::Csv,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

/// Key used when the input has no key column.
pub const DEFAULT_KEY: &str = "";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub key: String,
    pub values: Vec<f64>,
}

/// What the reader hands to the sink for each input line.
#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Row(Row),
    /// `line` is 1-based and counts the header.
    Malformed {
        line: u64,
        reason: String,
    },
}

pub struct Selection<'a> {
    pub key_column: Option<&'a str>,
    pub columns: Option<&'a [String]>,
    pub transform: InputTransform,
}

pub fn open(path: Option<&Path>) -> Result<Box<dyn Read>> {
    match path {
        None => Ok(Box::new(io::stdin().lock())),
        Some(p) => File::open(p)
            .map(|f| Box::new(f) as Box<dyn Read>)
            .map_err(|e| CliError::runtime(format!("cannot open {}: {e}", p.display()))),
    }
}

/// Streams every line of `reader` into `sink` and returns the value column
/// names. Layout problems (missing key or value column) are configuration
/// errors; bad rows are passed on as [`Item::Malformed`].
pub fn read<R, F>(reader: R, format: Format, sel: &Selection, sink: F) -> Result<Vec<String>>
where
    R: Read,
    F: FnMut(Item) -> Result<()>,
{
    match format {
        Format::Csv => read_csv(reader, sel, sink),
        Format::Ndjson => read_ndjson(BufReader::new(reader), sel, sink),
    }
}

fn finish(key: String, mut values: Vec<f64>, sel: &Selection, line: u64) -> Item {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Item::Malformed {
            line,
            reason: format!("non-finite value {v}"),
        };
    }
    if let Err(e) = sel.transform.apply(&mut values) {
        return Item::Malformed {
            line,
            reason: e.to_string(),
        };
    }
    Item::Row(Row { key, values })
}

fn read_csv<R: Read, F: FnMut(Item) -> Result<()>>(reader: R, sel: &Selection, mut sink: F) -> Result<Vec<String>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::runtime(format!("cannot read CSV header: {e}")))?
        .clone();
    if header.is_empty() {
        return Ok(Vec::new());
    }
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::config(format!("column {name:?} not found in CSV header")))
    };
    let key_idx = sel.key_column.map(find).transpose()?;
    let value_idx: Vec<usize> = match sel.columns {
        Some(cols) => cols.iter().map(|c| find(c)).collect::<Result<_>>()?,
        None => (0..header.len()).filter(|&i| Some(i) != key_idx).collect(),
    };
    if value_idx.is_empty() {
        return Err(CliError::config("no value columns in CSV input"));
    }
    let names = value_idx.iter().map(|&i| header[i].to_string()).collect();

    let mut record = csv::StringRecord::new();
    let mut line = 1u64;
    loop {
        line += 1;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                sink(Item::Malformed {
                    line,
                    reason: e.to_string(),
                })?;
                continue;
            }
        }
        if record.len() != header.len() {
            sink(Item::Malformed {
                line,
                reason: format!("expected {} fields, found {}", header.len(), record.len()),
            })?;
            continue;
        }
        let key = key_idx.map_or(DEFAULT_KEY, |i| &record[i]).to_string();
        let parsed: std::result::Result<Vec<f64>, String> = value_idx
            .iter()
            .map(|&i| {
                record[i]
                    .parse::<f64>()
                    .map_err(|_| format!("{:?} is not a number", &record[i]))
            })
            .collect();
        let item = match parsed {
            Ok(values) => finish(key, values, sel, line),
            Err(reason) => Item::Malformed { line, reason },
        };
        sink(item)?;
    }
    Ok(names)
}

fn read_ndjson<R: BufRead, F: FnMut(Item) -> Result<()>>(
    reader: R,
    sel: &Selection,
    mut sink: F,
) -> Result<Vec<String>> {
    let mut names: Option<Vec<String>> = sel.columns.map(<[String]>::to_vec);
    for (i, text) in reader.lines().enumerate() {
        let line = i as u64 + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let obj = match serde_json::from_str::<serde_json::Map<String, serde_json::Value>>(&text) {
            Ok(o) => o,
            Err(e) => {
                sink(Item::Malformed {
                    line,
                    reason: e.to_string(),
                })?;
                continue;
            }
        };
        let key = match sel.key_column {
            None => DEFAULT_KEY.to_string(),
            Some(k) => match obj.get(k) {
                Some(serde_json::Value::String(s)) => s.clone(),
                Some(v @ serde_json::Value::Number(_)) => v.to_string(),
                _ => {
                    sink(Item::Malformed {
                        line,
                        reason: format!("missing or non-scalar key field {k:?}"),
                    })?;
                    continue;
                }
            },
        };
        // Without an explicit column list the first usable record fixes it:
        // its numeric fields in name order.
        let cols = names.get_or_insert_with(|| {
            obj.iter()
                .filter(|(k, v)| v.is_number() && Some(k.as_str()) != sel.key_column)
                .map(|(k, _)| k.clone())
                .collect()
        });
        if cols.is_empty() {
            return Err(CliError::config(format!(
                "line {line}: record has no numeric fields to use as values"
            )));
        }
        let parsed: std::result::Result<Vec<f64>, String> = cols
            .iter()
            .map(|c| {
                obj.get(c)
                    .and_then(serde_json::Value::as_f64)
                    .ok_or_else(|| format!("missing numeric field {c:?}"))
            })
            .collect();
        let item = match parsed {
            Ok(values) => finish(key, values, sel, line),
            Err(reason) => Item::Malformed { line, reason },
        };
        sink(item)?;
    }
    Ok(names.unwrap_or_default())
}
