//! Heuristic link scorers.
//!
//! These stand in for a learned embedding model so the sample, score and
//! AUC pipeline can run end to end. The index passed to a scorer must be
//! built from training edges only.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::HistoryIndex;
use crate::rng::{substream, Domain};
use crate::sampling::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScorerKind {
    Constant,
    Random,
    Memory,
    Recency,
}

impl ScorerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::Constant => "constant",
            ScorerKind::Random => "random",
            ScorerKind::Memory => "memory",
            ScorerKind::Recency => "recency",
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        [
            ScorerKind::Constant,
            ScorerKind::Random,
            ScorerKind::Memory,
            ScorerKind::Recency,
        ]
        .into_iter()
        .find(|k| k.as_str() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown scorer {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScorerSpec {
    pub kind: ScorerKind,
    /// Decay per bin, recency only.
    pub lambda: f64,
    /// Random only.
    pub seed: u64,
}

impl Default for ScorerSpec {
    fn default() -> Self {
        ScorerSpec {
            kind: ScorerKind::Memory,
            lambda: std::f64::consts::LN_2 / 72.0,
            seed: 0,
        }
    }
}

impl ScorerSpec {
    pub fn new(kind: ScorerKind) -> Self {
        ScorerSpec {
            kind,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    pub fn bind<'a>(&self, index: &'a HistoryIndex) -> Result<Scorer<'a>> {
        self.validate()?;
        Ok(Scorer { spec: *self, index })
    }
}

/// A scorer spec bound to a training index.
#[derive(Debug, Clone, Copy)]
pub struct Scorer<'a> {
    spec: ScorerSpec,
    index: &'a HistoryIndex,
}

impl Scorer<'_> {
    pub fn score(&self, sample: &Sample) -> f64 {
        match self.spec.kind {
            ScorerKind::Constant => score_constant(sample),
            ScorerKind::Random => score_random(self.spec.seed, sample),
            ScorerKind::Memory => score_memory(self.index, sample),
            ScorerKind::Recency => score_recency(self.index, sample, self.spec.lambda),
        }
    }

    pub fn spec(&self) -> &ScorerSpec {
        &self.spec
    }
}

/// 1 if the directed pair was seen in training, else 0.
pub fn score_memory(index: &HistoryIndex, sample: &Sample) -> f64 {
    if index.contains_pair(sample.src, sample.dst) {
        1.0
    } else {
        0.0
    }
}

/// `exp(-lambda * (t - t_last))` for the latest training occurrence
/// `t_last <= t`; 0 when there is none.
pub fn score_recency(index: &HistoryIndex, sample: &Sample, lambda: f64) -> f64 {
    match index.latest_at_or_before(sample.src, sample.dst, sample.t) {
        Some(last) => (-lambda * (sample.t.0 - last.0) as f64).exp(),
        None => 0.0,
    }
}

pub fn score_constant(_sample: &Sample) -> f64 {
    0.5
}

/// Uniform in `[0, 1)`, a pure function of the seed and the sample's key.
pub fn score_random(seed: u64, sample: &Sample) -> f64 {
    substream(seed, Domain::Scoring, sample.key_hash()).gen()
}
