use std::collections::HashSet;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::FilterError;
use crate::io::AtomicFile;

/// One corpus example. Keys not listed here survive a read/write cycle
/// through `extra`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    /// Country code or region tag.
    pub region: String,
    /// ISO 639-3 language code.
    pub language: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Id of the record this one was derived from (translations).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl CorpusRecord {
    pub fn new(
        id: impl Into<String>,
        region: impl Into<String>,
        language: impl Into<String>,
        text: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            region: region.into(),
            language: language.into(),
            text: text.into(),
            image_ref: None,
            reward: None,
            source: None,
            provenance: None,
            extra: Map::new(),
        }
    }

    pub fn with_reward(mut self, reward: f64) -> Self {
        self.reward = Some(reward);
        self
    }

    pub fn with_source(mut self, source: impl Into<String>) -> Self {
        self.source = Some(source.into());
        self
    }
}

/// Streams records from JSONL, rejecting duplicate ids and blank-line noise.
pub struct JsonlReader<R> {
    lines: std::io::Lines<BufReader<R>>,
    line_no: usize,
    seen: HashSet<String>,
    label: String,
}

impl JsonlReader<std::fs::File> {
    pub fn open(path: &Path) -> Result<Self, FilterError> {
        let file = std::fs::File::open(path)
            .map_err(|e| FilterError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self::new(file, path.display().to_string()))
    }
}

impl<R: std::io::Read> JsonlReader<R> {
    pub fn new(reader: R, label: impl Into<String>) -> Self {
        Self { lines: BufReader::new(reader).lines(), line_no: 0, seen: HashSet::new(), label: label.into() }
    }
}

impl<R: std::io::Read> Iterator for JsonlReader<R> {
    type Item = Result<CorpusRecord, FilterError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(FilterError::Io(format!("{}: {e}", self.label)))),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let at = || format!("{}:{}", self.label, self.line_no);
            let record: CorpusRecord = match serde_json::from_str(&line) {
                Ok(r) => r,
                Err(e) => return Some(Err(FilterError::Parse(format!("{}: {e}", at())))),
            };
            if record.reward.is_some_and(|r| !r.is_finite()) {
                return Some(Err(FilterError::Parse(format!("{}: non-finite reward", at()))));
            }
            if !self.seen.insert(record.id.clone()) {
                return Some(Err(FilterError::DuplicateId(format!("{} ({})", record.id, at()))));
            }
            return Some(Ok(record));
        }
    }
}

pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>, FilterError> {
    JsonlReader::open(path)?.collect()
}

pub fn to_jsonl_line(record: &CorpusRecord) -> String {
    serde_json::to_string(record).expect("records serialize")
}

/// Writes records as JSONL, atomically replacing `path`.
pub fn write_corpus<'a>(
    path: &Path,
    records: impl IntoIterator<Item = &'a CorpusRecord>,
) -> Result<usize, FilterError> {
    let io_err = |e: std::io::Error| FilterError::Io(format!("{}: {e}", path.display()));
    let mut out = AtomicFile::create(path).map_err(io_err)?;
    let mut n = 0;
    for record in records {
        writeln!(out, "{}", to_jsonl_line(record)).map_err(io_err)?;
        n += 1;
    }
    out.commit().map_err(io_err)?;
    Ok(n)
}
