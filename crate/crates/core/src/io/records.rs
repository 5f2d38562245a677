//! JSON-lines sample and score records.
//!
//! Sample records carry dense node ids and bin indices; the `nodes.csv`
//! written next to them maps ids back to names.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::atomic_write;
use crate::error::{Error, Result};
use crate::eval::EvalCategory;
use crate::graph::{NodeId, Timestamp};
use crate::sampling::{Category, Label, Sample};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub src: NodeId,
    pub dst: NodeId,
    pub t: Timestamp,
    pub label: Label,
    pub category: Category,
    pub batch: usize,
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_category: Option<EvalCategory>,
}

impl SampleRecord {
    pub fn new(sample: &Sample, batch: usize, eval_category: Option<EvalCategory>) -> Self {
        SampleRecord {
            src: sample.src,
            dst: sample.dst,
            t: sample.t,
            label: sample.label,
            category: sample.category,
            batch,
            key: sample.key(),
            eval_category,
        }
    }

    pub fn sample(&self) -> Sample {
        Sample {
            src: self.src,
            dst: self.dst,
            t: self.t,
            label: self.label,
            category: self.category,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub key: String,
    pub score: f64,
}

fn write_lines<'a, T: Serialize + 'a>(path: &Path, items: impl IntoIterator<Item = &'a T>) -> Result<()> {
    atomic_write(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    })
}

fn read_lines<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Ingest {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_sample_records<'a>(path: &Path, records: impl IntoIterator<Item = &'a SampleRecord>) -> Result<()> {
    write_lines(path, records)
}

pub fn read_sample_records(path: &Path) -> Result<Vec<SampleRecord>> {
    read_lines(path)
}

pub fn write_scores<'a>(path: &Path, scores: impl IntoIterator<Item = &'a ScoreRecord>) -> Result<()> {
    write_lines(path, scores)
}

pub fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>> {
    read_lines(path)
}

/// Scores keyed by sample key. A key listed twice must carry the same score.
pub fn read_scores_map(path: &Path) -> Result<HashMap<String, f64>> {
    let mut map = HashMap::new();
    for r in read_scores(path)? {
        if let Some(old) = map.insert(r.key.clone(), r.score) {
            if old != r.score {
                return Err(Error::InvalidArgument(format!(
                    "key {} has conflicting scores {old} and {}",
                    r.key, r.score
                )));
            }
        }
    }
    Ok(map)
}
