//! Tie-aware ROC AUC in Mann-Whitney form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampling::{Label, Sample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoredSample {
    pub sample: Sample,
    /// Higher means more likely to exist.
    pub score: f64,
}

/// Fraction of positive/negative pairs in which the positive scores higher,
/// counting ties as one half. Sort plus one sweep over tie groups; the pair
/// count is accumulated exactly in integers (doubled to keep the halves).
pub fn auc_from_scores(positives: &[f64], negatives: &[f64]) -> Option<f64> {
    if positives.is_empty() || negatives.is_empty() {
        return None;
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&s| (s, true))
        .chain(negatives.iter().map(|&s| (s, false)))
        .collect();
    all.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));

    let mut twice_wins: u128 = 0;
    let mut neg_below: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let score = all[i].0;
        let (mut pos, mut neg) = (0u128, 0u128);
        while i < all.len() && all[i].0 == score {
            if all[i].1 {
                pos += 1;
            } else {
                neg += 1;
            }
            i += 1;
        }
        twice_wins += 2 * pos * neg_below + pos * neg;
        neg_below += neg;
    }
    let pairs = 2 * positives.len() as u128 * negatives.len() as u128;
    Some(twice_wins as f64 / pairs as f64)
}

/// AUC of labelled scores; `category` names the input in errors.
pub fn auc_for(category: &str, scored: &[ScoredSample]) -> Result<f64> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for s in scored {
        if !s.score.is_finite() {
            return Err(Error::NonFiniteScore {
                key: s.sample.key(),
                score: s.score,
            });
        }
        match s.sample.label {
            Label::Positive => pos.push(s.score),
            Label::Negative => neg.push(s.score),
        }
    }
    auc_from_scores(&pos, &neg).ok_or_else(|| Error::UndefinedMetric {
        category: category.to_owned(),
        n_pos: pos.len(),
        n_neg: neg.len(),
    })
}

pub fn auc(scored: &[ScoredSample]) -> Result<f64> {
    auc_for("unnamed", scored)
}
