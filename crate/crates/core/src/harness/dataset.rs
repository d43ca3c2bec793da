use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::oracle::Label;
use crate::sentence::{Alphabet, Sentence, MAX_LEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Jsonl,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(Format::Jsonl),
            "csv" => Ok(Format::Csv),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Jsonl => "jsonl",
            Format::Csv => "csv",
        })
    }
}

/// One labelled example. When `paired_text` is present (a premise), only
/// `text` (the hypothesis) is attacked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub text: Sentence,
    pub label: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paired_text: Option<Sentence>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Keep only the first `limit` records.
    pub limit: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub records: Vec<DatasetRecord>,
    /// Number of texts cut down to the maximum sentence length.
    pub truncated: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct labels plus one, i.e. the smallest class count that fits.
    pub fn num_classes(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.label.0 + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn training_pairs(&self) -> Vec<(Sentence, Label)> {
        self.records
            .iter()
            .map(|r| (r.text.clone(), r.label))
            .collect()
    }
}

/// Reads a labelled corpus. JSONL rows are objects with `text` and `label`
/// and optional `id` and `paired_text`; CSV files need a header with the same
/// column names. Rows missing an id get their zero-based row index.
pub fn load_dataset(
    path: impl AsRef<Path>,
    format: Format,
    options: &LoadOptions,
) -> Result<Dataset> {
    let path = path.as_ref();
    let mut loader = Loader {
        path: path.display().to_string(),
        limit: options.limit.unwrap_or(usize::MAX),
        dataset: Dataset {
            records: Vec::new(),
            truncated: 0,
        },
    };
    match format {
        Format::Jsonl => loader.jsonl(BufReader::new(File::open(path)?))?,
        Format::Csv => loader.csv(File::open(path)?)?,
    }
    if loader.dataset.truncated > 0 {
        log::warn!(
            "{}: truncated {} texts to {} characters",
            loader.path,
            loader.dataset.truncated,
            MAX_LEN
        );
    }
    Ok(loader.dataset)
}

struct Loader {
    path: String,
    limit: usize,
    dataset: Dataset,
}

impl Loader {
    fn malformed(&self, line: usize, message: impl Into<String>) -> Error {
        Error::MalformedRow {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn full(&self) -> bool {
        self.dataset.records.len() >= self.limit
    }

    fn jsonl<R: BufRead>(&mut self, reader: R) -> Result<()> {
        for (i, line) in reader.lines().enumerate() {
            if self.full() {
                break;
            }
            let line_no = i + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: Value =
                serde_json::from_str(&line).map_err(|e| self.malformed(line_no, e.to_string()))?;
            let obj = value
                .as_object()
                .ok_or_else(|| self.malformed(line_no, "expected a JSON object"))?;
            let text = match obj.get("text") {
                Some(Value::String(t)) => t.as_str(),
                Some(_) => return Err(self.malformed(line_no, "`text` must be a string")),
                None => return Err(self.malformed(line_no, "missing field `text`")),
            };
            let label = match obj.get("label") {
                Some(Value::Number(n)) => n.as_u64().ok_or_else(|| {
                    self.malformed(line_no, "`label` must be a nonnegative integer")
                })?,
                Some(Value::String(s)) => s.trim().parse().map_err(|_| {
                    self.malformed(line_no, "`label` must be a nonnegative integer")
                })?,
                Some(_) => {
                    return Err(self.malformed(line_no, "`label` must be a nonnegative integer"))
                }
                None => return Err(self.malformed(line_no, "missing field `label`")),
            };
            let id = match obj.get("id") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.clone()),
                Some(Value::Number(n)) => Some(n.to_string()),
                Some(_) => return Err(self.malformed(line_no, "`id` must be a string or number")),
            };
            let paired = match obj.get("paired_text") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(s.as_str()),
                Some(_) => return Err(self.malformed(line_no, "`paired_text` must be a string")),
            };
            self.push(line_no, id, text, label as usize, paired)?;
        }
        Ok(())
    }

    fn csv(&mut self, file: File) -> Result<()> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(file);
        let headers = reader
            .headers()
            .map_err(|e| self.malformed(1, e.to_string()))?
            .clone();
        let column = |name: &str| headers.iter().position(|h| h.trim() == name);
        let text_col = column("text").ok_or_else(|| Error::MissingColumn("text".into()))?;
        let label_col = column("label").ok_or_else(|| Error::MissingColumn("label".into()))?;
        let id_col = column("id");
        let paired_col = column("paired_text");
        for row in reader.records() {
            if self.full() {
                break;
            }
            let row = row.map_err(|e| {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                self.malformed(line, e.to_string())
            })?;
            let line_no = row.position().map(|p| p.line() as usize).unwrap_or(0);
            let field = |col: usize| {
                row.get(col)
                    .ok_or_else(|| self.malformed(line_no, "row has too few fields"))
            };
            let text = field(text_col)?;
            let label: usize = field(label_col)?
                .trim()
                .parse()
                .map_err(|_| self.malformed(line_no, "`label` must be a nonnegative integer"))?;
            let id = match id_col {
                Some(c) => Some(field(c)?.to_string()).filter(|s| !s.is_empty()),
                None => None,
            };
            let paired = match paired_col {
                Some(c) => Some(field(c)?).filter(|s| !s.is_empty()),
                None => None,
            };
            self.push(line_no, id, text, label, paired)?;
        }
        Ok(())
    }

    fn sentence(&mut self, line: usize, text: &str) -> Result<Sentence> {
        let mut chars: Vec<char> = text.chars().collect();
        if let Some(offset) = chars.iter().position(|&c| c == '\0') {
            return Err(self.malformed(line, format!("text contains U+0000 at offset {offset}")));
        }
        if chars.len() > MAX_LEN {
            chars.truncate(MAX_LEN);
            self.dataset.truncated += 1;
        }
        Sentence::from_chars(chars).map_err(|e| self.malformed(line, e.to_string()))
    }

    fn push(
        &mut self,
        line: usize,
        id: Option<String>,
        text: &str,
        label: usize,
        paired: Option<&str>,
    ) -> Result<()> {
        let text = self.sentence(line, text)?;
        let paired_text = paired.map(|p| self.sentence(line, p)).transpose()?;
        let id = id.unwrap_or_else(|| self.dataset.records.len().to_string());
        self.dataset.records.push(DatasetRecord {
            id,
            text,
            label: Label(label),
            paired_text,
        });
        Ok(())
    }
}

/// Every character occurring in an attackable text.
pub fn extract_alphabet(records: &[DatasetRecord]) -> Result<Alphabet> {
    Alphabet::new(records.iter().flat_map(|r| r.text.chars().iter().copied()))
}

/// Hex SHA-256 of the alphabet's sorted characters.
pub fn alphabet_fingerprint(alphabet: &Alphabet) -> String {
    let text: String = alphabet.chars().iter().collect();
    fingerprint(text.as_bytes())
}

pub(crate) fn fingerprint(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
