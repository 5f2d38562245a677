//! Descriptive statistics of a dynamic graph.

use chrono::DateTime;
use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::graph::DynamicGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub n: usize,
    pub m: usize,
    /// Distinct directed `(src, dst)` pairs, loop pairs included.
    pub unique_directed_pairs: usize,
    /// Distinct directed pairs with `src != dst`.
    pub distinct_non_loop_pairs: usize,
    pub loop_count: usize,
    pub loop_fraction: f64,
    pub unique_pair_fraction: f64,
    /// UTC calendar date of the earliest raw timestamp (`YYYY-MM-DD`).
    pub start_date: Option<String>,
    pub end_date: Option<String>,
}

fn utc_date(raw: i64) -> Option<String> {
    DateTime::from_timestamp(raw, 0).map(|d| d.format("%Y-%m-%d").to_string())
}

pub fn stats(graph: &DynamicGraph) -> GraphStats {
    let edges = graph.edges();
    let m = edges.len();
    let mut pairs = FxHashSet::default();
    let mut loop_count = 0;
    let mut loop_pairs = 0;
    for e in edges {
        let fresh = pairs.insert(((e.src.0 as u64) << 32) | e.dst.0 as u64);
        if e.is_loop() {
            loop_count += 1;
            loop_pairs += fresh as usize;
        }
    }
    let frac = |x: usize| if m == 0 { 0.0 } else { x as f64 / m as f64 };
    let raw = graph.raw_times();
    GraphStats {
        n: graph.node_count(),
        m,
        unique_directed_pairs: pairs.len(),
        distinct_non_loop_pairs: pairs.len() - loop_pairs,
        loop_count,
        loop_fraction: frac(loop_count),
        unique_pair_fraction: frac(pairs.len()),
        start_date: raw.iter().min().and_then(|&t| utc_date(t)),
        end_date: raw.iter().max().and_then(|&t| utc_date(t)),
    }
}
