//! Seven-category link-prediction evaluation.
//!
//! Every test positive anchors one negative per category: a random sender,
//! a random receiver, a negative loop, and the same pair probed 6, 12 and
//! 24 hours later. `Overall` pools all six negative lists against the
//! positives, each positive counted once.

mod auc;

pub use auc::{auc, auc_for, auc_from_scores, ScoredSample};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, Edge, NodeId, Timestamp};
use crate::index::HistoryIndex;
use crate::rng::{substream, Domain, StreamRng};
use crate::sampling::{draw_exhaustive, Category, Sample, SampleSet, Sampler, SamplerConfig};
use crate::scorers::Scorer;
use crate::split::MonthlySplit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EvalCategory {
    #[serde(rename = "random_sender")]
    RandomSender,
    #[serde(rename = "random_receiver")]
    RandomReceiver,
    #[serde(rename = "loop")]
    Loop,
    #[serde(rename = "6h")]
    H6,
    #[serde(rename = "12h")]
    H12,
    #[serde(rename = "24h")]
    H24,
    #[serde(rename = "overall")]
    Overall,
}

impl EvalCategory {
    pub const ALL: [EvalCategory; 7] = [
        EvalCategory::RandomSender,
        EvalCategory::RandomReceiver,
        EvalCategory::Loop,
        EvalCategory::H6,
        EvalCategory::H12,
        EvalCategory::H24,
        EvalCategory::Overall,
    ];

    /// The six categories that generate their own negatives.
    pub const BASE: [EvalCategory; 6] = [
        EvalCategory::RandomSender,
        EvalCategory::RandomReceiver,
        EvalCategory::Loop,
        EvalCategory::H6,
        EvalCategory::H12,
        EvalCategory::H24,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EvalCategory::RandomSender => "random_sender",
            EvalCategory::RandomReceiver => "random_receiver",
            EvalCategory::Loop => "loop",
            EvalCategory::H6 => "6h",
            EvalCategory::H12 => "12h",
            EvalCategory::H24 => "24h",
            EvalCategory::Overall => "overall",
        }
    }

    /// Probe offset in bins for the hour categories.
    pub fn offset(self) -> Option<u64> {
        match self {
            EvalCategory::H6 => Some(72),
            EvalCategory::H12 => Some(144),
            EvalCategory::H24 => Some(288),
            _ => None,
        }
    }

    /// Category tag carried by the generated negatives.
    pub fn sample_category(self) -> Option<Category> {
        match self {
            EvalCategory::RandomSender => Some(Category::RandomSender),
            EvalCategory::RandomReceiver => Some(Category::RandomReceiver),
            EvalCategory::Loop => Some(Category::NegativeLoop),
            EvalCategory::H6 | EvalCategory::H12 | EvalCategory::H24 => Some(Category::Temporal),
            EvalCategory::Overall => None,
        }
    }

    fn stream(self) -> u64 {
        self as u64
    }
}

impl fmt::Display for EvalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EvalCategory {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EvalCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown eval category {s:?}")))
    }
}

/// How many loop negatives the `Loop` category draws.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopEval {
    /// One per test positive, at its timestamp.
    #[default]
    PerPositive,
    /// One per distinct test timestamp.
    PerTimestamp,
}

impl FromStr for LoopEval {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-positive" => Ok(LoopEval::PerPositive),
            "per-timestamp" => Ok(LoopEval::PerTimestamp),
            _ => Err(Error::InvalidArgument(format!("unknown loop eval mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub seed: u64,
    pub retry_cap: usize,
    pub loop_eval: LoopEval,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            seed: 0,
            retry_cap: 32,
            loop_eval: LoopEval::PerPositive,
        }
    }
}

/// Negatives of one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryNegatives {
    pub category: EvalCategory,
    pub negatives: Vec<Sample>,
    pub shortfall: usize,
}

/// Test positives and the negatives of the six base categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSets {
    pub positives: Vec<Sample>,
    pub categories: Vec<CategoryNegatives>,
}

impl EvalSets {
    /// Negatives of `category`; `Overall` chains all six.
    pub fn negatives(&self, category: EvalCategory) -> impl Iterator<Item = &Sample> + '_ {
        self.categories
            .iter()
            .filter(move |c| category == EvalCategory::Overall || c.category == category)
            .flat_map(|c| c.negatives.iter())
    }

    pub fn shortfall(&self, category: EvalCategory) -> usize {
        self.categories
            .iter()
            .filter(|c| category == EvalCategory::Overall || c.category == category)
            .map(|c| c.shortfall)
            .sum()
    }

    /// Every sample once per category it belongs to, positives first
    /// (tagged `None`).
    pub fn iter_tagged(&self) -> impl Iterator<Item = (Option<EvalCategory>, &Sample)> + '_ {
        self.positives.iter().map(|s| (None, s)).chain(
            self.categories
                .iter()
                .flat_map(|c| c.negatives.iter().map(move |s| (Some(c.category), s))),
        )
    }

    pub fn len(&self) -> usize {
        self.positives.len() + self.categories.iter().map(|c| c.negatives.len()).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Builds evaluation negatives against the full edge set of `graph`.
/// H-type probes past `last_bin` are tallied as shortfalls.
#[derive(Debug, Clone, Copy)]
pub struct EvalBuilder<'g> {
    pub graph: &'g DynamicGraph,
    pub index: &'g HistoryIndex,
    pub last_bin: Timestamp,
    pub config: EvalConfig,
}

impl<'g> EvalBuilder<'g> {
    pub fn new(graph: &'g DynamicGraph, index: &'g HistoryIndex, last_bin: Timestamp, config: EvalConfig) -> Self {
        EvalBuilder {
            graph,
            index,
            last_bin,
            config,
        }
    }

    fn sampler(&self) -> Result<Sampler<'g>> {
        Sampler::new(
            self.graph,
            self.index,
            SamplerConfig {
                retry_cap: self.config.retry_cap,
                ..Default::default()
            },
        )
    }

    /// Negatives of one category for `positives`, using that category's
    /// RNG stream.
    pub fn build(&self, positives: &[Edge], category: EvalCategory) -> Result<CategoryNegatives> {
        if category == EvalCategory::Overall {
            let sets = self.build_all(positives)?;
            return Ok(CategoryNegatives {
                category,
                negatives: sets.negatives(category).copied().collect(),
                shortfall: sets.shortfall(category),
            });
        }
        let mut rng = substream(self.config.seed, Domain::Evaluation, category.stream());
        let sampler = self.sampler()?;
        let mut out = SampleSet::new(0);
        let mut shortfall = 0;
        match category {
            EvalCategory::RandomSender => {
                for e in positives {
                    sampler.random_sender_for(e, &mut rng, &mut out);
                }
                shortfall = out.tally.random_sender_skipped;
            }
            EvalCategory::RandomReceiver => {
                for e in positives {
                    sampler.random_receiver_for(e, &mut rng, &mut out);
                }
                shortfall = out.tally.random_receiver_skipped;
            }
            EvalCategory::Loop => shortfall = self.loops(positives, &mut rng, &mut out.samples),
            EvalCategory::H6 | EvalCategory::H12 | EvalCategory::H24 => {
                let delta = category.offset().expect("hour category");
                for e in positives {
                    let t = e.t.offset(delta);
                    if t <= self.last_bin && !self.index.pair_occurred(e.src, e.dst, t) {
                        out.samples.push(Sample::negative(e.src, e.dst, t, Category::Temporal));
                    } else {
                        shortfall += 1;
                    }
                }
            }
            EvalCategory::Overall => unreachable!(),
        }
        Ok(CategoryNegatives {
            category,
            negatives: out.samples,
            shortfall,
        })
    }

    /// Loop negatives drawn from nodes without a loop before the first test
    /// timestamp, excluding loops that exist exactly at `t`.
    fn loops(&self, positives: &[Edge], rng: &mut StreamRng, out: &mut Vec<Sample>) -> usize {
        let Some(first) = positives.iter().map(|e| e.t).min() else {
            return 0;
        };
        let times: Vec<Timestamp> = match self.config.loop_eval {
            LoopEval::PerPositive => positives.iter().map(|e| e.t).collect(),
            LoopEval::PerTimestamp => {
                let mut ts: Vec<Timestamp> = positives.iter().map(|e| e.t).collect();
                ts.sort_unstable();
                ts.dedup();
                ts
            }
        };
        let pool: Vec<NodeId> = self.index.loopless_nodes(first);
        let mut shortfall = 0;
        for t in times {
            let admissible = |r: NodeId| !self.index.pair_occurred(r, r, t);
            let drawn = (!pool.is_empty())
                .then(|| {
                    (0..self.config.retry_cap)
                        .map(|_| pool[rng.gen_range(0..pool.len())])
                        .find(|&r| admissible(r))
                        .or_else(|| draw_exhaustive(pool.iter().copied(), admissible, rng))
                })
                .flatten();
            match drawn {
                Some(r) => out.push(Sample::negative(r, r, t, Category::NegativeLoop)),
                None => shortfall += 1,
            }
        }
        shortfall
    }

    /// All six base categories, built concurrently.
    pub fn build_all(&self, positives: &[Edge]) -> Result<EvalSets> {
        if positives.is_empty() {
            return Err(Error::InvalidArgument("no test positives to evaluate".into()));
        }
        let categories = EvalCategory::BASE
            .par_iter()
            .map(|&c| self.build(positives, c))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalSets {
            positives: positives
                .iter()
                .map(|e| Sample::positive(e, Category::Observed))
                .collect(),
            categories,
        })
    }
}

/// Evaluation sets for a split's test edges, against all of its edges.
pub fn build_for_split(split: &MonthlySplit, index: &HistoryIndex, config: EvalConfig) -> Result<EvalSets> {
    EvalBuilder::new(&split.graph, index, split.eval_last_bin(), config).build_all(split.test())
}

/// Where scores come from.
#[derive(Debug, Clone, Copy)]
pub enum ScoreSource<'a> {
    Builtin(Scorer<'a>),
    /// Scores keyed by [`Sample::key`].
    Imported(&'a HashMap<String, f64>),
}

impl ScoreSource<'_> {
    pub fn name(&self) -> String {
        match self {
            ScoreSource::Builtin(s) => s.spec().kind.to_string(),
            ScoreSource::Imported(_) => "imported".into(),
        }
    }

    fn scores(&self, samples: &[Sample]) -> Result<Vec<f64>> {
        let scores: Vec<f64> = match self {
            ScoreSource::Builtin(s) => samples.par_iter().map(|x| s.score(x)).collect(),
            ScoreSource::Imported(map) => {
                let mut missing: Vec<String> = Vec::new();
                let mut seen = std::collections::HashSet::new();
                let mut scores = Vec::with_capacity(samples.len());
                for x in samples {
                    let key = x.key();
                    match map.get(&key) {
                        Some(&v) => scores.push(v),
                        None => {
                            if seen.insert(key.clone()) {
                                missing.push(key);
                            }
                            scores.push(f64::NAN);
                        }
                    }
                }
                if !missing.is_empty() {
                    return Err(Error::MissingScores {
                        missing: missing.len(),
                        first: missing.into_iter().take(10).collect(),
                    });
                }
                scores
            }
        };
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFiniteScore {
                key: samples[i].key(),
                score: scores[i],
            });
        }
        Ok(scores)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: EvalCategory,
    /// `None` when the category produced no negatives.
    pub auc: Option<f64>,
    pub n_pos: usize,
    pub n_neg: usize,
    pub shortfall: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    /// Training strategy the scores came from, if any.
    pub strategy: Option<String>,
    pub seed: u64,
    pub scorer: String,
    pub categories: Vec<CategoryReport>,
}

impl EvalReport {
    pub fn get(&self, category: EvalCategory) -> Option<&CategoryReport> {
        self.categories.iter().find(|c| c.category == category)
    }

    pub fn auc(&self, category: EvalCategory) -> Option<f64> {
        self.get(category).and_then(|c| c.auc)
    }
}

/// Scores every sample and reports AUC for all seven categories.
pub fn evaluate(
    sets: &EvalSets,
    source: ScoreSource<'_>,
    label: &str,
    strategy: Option<&str>,
    seed: u64,
) -> Result<EvalReport> {
    let negatives: Vec<Sample> = sets.negatives(EvalCategory::Overall).copied().collect();
    let mut all = sets.positives.clone();
    all.extend_from_slice(&negatives);
    let scores = source.scores(&all)?;
    let (pos, neg) = scores.split_at(sets.positives.len());

    let mut categories = Vec::with_capacity(7);
    let mut offset = 0;
    let mut report = |category: EvalCategory, neg: &[f64], shortfall: usize| {
        let auc = auc_from_scores(pos, neg);
        categories.push(CategoryReport {
            category,
            auc,
            n_pos: pos.len(),
            n_neg: neg.len(),
            shortfall,
            note: auc.is_none().then(|| "no negatives; AUC undefined".to_owned()),
        });
    };
    for c in &sets.categories {
        let end = offset + c.negatives.len();
        report(c.category, &neg[offset..end], c.shortfall);
        offset = end;
    }
    report(EvalCategory::Overall, neg, sets.shortfall(EvalCategory::Overall));

    Ok(EvalReport {
        label: label.to_owned(),
        strategy: strategy.map(str::to_owned),
        seed,
        scorer: source.name(),
        categories,
    })
}

#[cfg(test)]
mod tests;
