//! Negative sampling strategies.
//!
//! Two literature baselines (random receiver replacement and historical
//! pairs), the three domain-informed strategies (random sender and
//! receiver, temporal, negative loops), positive enhancement, and their
//! combination [`Sampler::dins`].
//!
//! Every negative `(src, dst, t)` is checked against the full edge set of
//! the sampler's graph before it is emitted. Node draws try rejection
//! sampling up to the retry cap, then scan for the admissible nodes; a draw
//! with no admissible node is counted in the batch's [`Tally`].

mod strategies;

pub(crate) use strategies::draw_exhaustive;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{Batch, DynamicGraph, Edge, NodeId, Timestamp};
use crate::index::HistoryIndex;
use crate::rng::{substream, Domain, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "pos")]
    Positive,
    #[serde(rename = "neg")]
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Observed,
    RandomReceiver,
    RandomSender,
    Historical,
    Temporal,
    NegativeLoop,
    PositiveEnhancement,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Observed => "observed",
            Category::RandomReceiver => "random_receiver",
            Category::RandomSender => "random_sender",
            Category::Historical => "historical",
            Category::Temporal => "temporal",
            Category::NegativeLoop => "negative_loop",
            Category::PositiveEnhancement => "positive_enhancement",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sample {
    pub src: NodeId,
    pub dst: NodeId,
    pub t: Timestamp,
    pub label: Label,
    pub category: Category,
}

impl Sample {
    pub fn negative(src: NodeId, dst: NodeId, t: Timestamp, category: Category) -> Self {
        Sample {
            src,
            dst,
            t,
            label: Label::Negative,
            category,
        }
    }

    pub fn positive(e: &Edge, category: Category) -> Self {
        Sample {
            src: e.src,
            dst: e.dst,
            t: e.t,
            label: Label::Positive,
            category,
        }
    }

    pub fn is_negative(&self) -> bool {
        self.label == Label::Negative
    }

    fn digest(&self) -> [u8; 32] {
        let text = format!("{},{},{},{}", self.src, self.dst, self.t, self.category);
        Sha256::digest(text.as_bytes()).into()
    }

    /// Stable identifier of `(src, dst, t, category)`: 16 lowercase hex digits.
    pub fn key(&self) -> String {
        self.digest()[..8].iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The key as an integer.
    pub fn key_hash(&self) -> u64 {
        let d = self.digest();
        u64::from_be_bytes(d[..8].try_into().expect("8 bytes"))
    }
}

/// Requested samples that could not be produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub random_receiver_skipped: usize,
    pub random_sender_skipped: usize,
    pub historical_fallback: usize,
    pub temporal_shortfall: usize,
    pub loop_shortfall: usize,
}

impl Tally {
    pub fn merge(&mut self, other: &Tally) {
        self.random_receiver_skipped += other.random_receiver_skipped;
        self.random_sender_skipped += other.random_sender_skipped;
        self.historical_fallback += other.historical_fallback;
        self.temporal_shortfall += other.temporal_shortfall;
        self.loop_shortfall += other.loop_shortfall;
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSet {
    pub origin_batch: usize,
    pub samples: Vec<Sample>,
    pub tally: Tally,
}

impl SampleSet {
    pub fn new(origin_batch: usize) -> Self {
        SampleSet {
            origin_batch,
            ..Default::default()
        }
    }

    pub fn count(&self, category: Category) -> usize {
        self.samples.iter().filter(|s| s.category == category).count()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Which nodes negative loops may be drawn from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopPool {
    /// Nodes without a loop before the batch's first timestamp, computed once.
    #[default]
    Batch,
    /// Nodes without a loop before each sampled timestamp.
    PerT,
}

impl FromStr for LoopPool {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "batch" => Ok(LoopPool::Batch),
            "per-t" => Ok(LoopPool::PerT),
            _ => Err(Error::InvalidArgument(format!("unknown loop pool {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Random,
    Historical,
    Dins,
    SenderReceiver,
    Temporal,
    Loops,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [
        Strategy::Random,
        Strategy::Historical,
        Strategy::Dins,
        Strategy::SenderReceiver,
        Strategy::Temporal,
        Strategy::Loops,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::Historical => "historical",
            Strategy::Dins => "dins",
            Strategy::SenderReceiver => "sender_receiver",
            Strategy::Temporal => "temporal",
            Strategy::Loops => "loops",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown strategy {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Temporal negatives per positive.
    pub q: usize,
    /// Temporal horizon in bins.
    pub t_f: u64,
    pub batch_size: usize,
    pub seed: u64,
    /// Rejection attempts per node draw before falling back to a scan.
    pub retry_cap: usize,
    pub loop_pool: LoopPool,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            q: 5,
            t_f: 288,
            batch_size: 1000,
            seed: 0,
            retry_cap: 32,
            loop_pool: LoopPool::Batch,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q == 0 {
            return Err(Error::InvalidArgument("q must be at least 1".into()));
        }
        if self.t_f == 0 {
            return Err(Error::InvalidArgument("t_f must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if self.retry_cap == 0 {
            return Err(Error::InvalidArgument("retry cap must be at least 1".into()));
        }
        Ok(())
    }
}

/// Samples negatives against one graph. `index` must be built from `graph`.
#[derive(Debug, Clone, Copy)]
pub struct Sampler<'g> {
    pub graph: &'g DynamicGraph,
    pub index: &'g HistoryIndex,
    pub config: SamplerConfig,
}

impl<'g> Sampler<'g> {
    pub fn new(graph: &'g DynamicGraph, index: &'g HistoryIndex, config: SamplerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Sampler { graph, index, config })
    }

    /// Runs one strategy on one batch.
    pub fn sample_batch(&self, strategy: Strategy, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        match strategy {
            Strategy::Random => self.random_baseline(batch, rng),
            Strategy::Historical => self.historical_baseline(batch, rng),
            Strategy::Dins => self.dins(batch, rng),
            Strategy::SenderReceiver => self.sender_receiver(batch, rng),
            Strategy::Temporal => self.temporal(batch, rng),
            Strategy::Loops => self.negative_loops(batch, rng),
        }
    }

    /// The RNG stream a batch is sampled with.
    pub fn batch_rng(&self, batch_index: usize) -> StreamRng {
        substream(self.config.seed, Domain::Training, batch_index as u64)
    }

    /// Samples every batch of the graph, in parallel, returning results in
    /// batch order. Each batch uses its own RNG stream.
    pub fn sample_all(&self, strategy: Strategy) -> Result<Vec<SampleSet>> {
        let batches = self.graph.batches(self.config.batch_size)?;
        Ok(batches
            .par_iter()
            .map(|b| self.sample_batch(strategy, b, &mut self.batch_rng(b.index)))
            .collect())
    }
}

#[cfg(test)]
mod tests;
