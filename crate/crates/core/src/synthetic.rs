//! Synthetic interaction data for tests, benchmarks and demos.

use rand::Rng;

use crate::graph::{DynamicGraph, RawEdge};
use crate::rng::{substream, Domain, StreamRng};

/// 2021-01-01T00:00:00Z.
pub const JAN_2021: i64 = 1_609_459_200;

/// Random binned graph over `n` nodes with `m` edges in bins `0..=max_bin`.
/// About half the edges repeat an earlier pair and one in ten is a loop, so
/// every sampling strategy has something to work with.
pub fn random_graph(rng: &mut StreamRng, n: usize, m: usize, max_bin: u64) -> DynamicGraph {
    assert!(n >= 1);
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let t = rng.gen_range(0..=max_bin);
        let (s, d) = if !pairs.is_empty() && rng.gen_bool(0.5) {
            pairs[rng.gen_range(0..pairs.len())]
        } else if rng.gen_bool(0.1) {
            let u = rng.gen_range(0..n as u32);
            (u, u)
        } else {
            (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32))
        };
        pairs.push((s, d));
        edges.push((s, d, t));
    }
    DynamicGraph::from_binned(n, edges)
}

/// Parameters of [`recurring_pairs`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecurrenceSpec {
    pub nodes: usize,
    pub pairs: usize,
    /// Interactions per pair per month.
    pub per_pair_per_month: usize,
    pub months: usize,
    /// Fraction of pairs that always interact again `offset_seconds` later.
    pub recurring_fraction: f64,
    pub offset_seconds: i64,
    /// Fraction of nodes that post (self-loop) once a month.
    pub posting_fraction: f64,
    pub seed: u64,
}

impl Default for RecurrenceSpec {
    fn default() -> Self {
        RecurrenceSpec {
            nodes: 400,
            pairs: 600,
            per_pair_per_month: 3,
            months: 2,
            recurring_fraction: 0.3,
            offset_seconds: 72 * 300,
            posting_fraction: 0.2,
            seed: 0,
        }
    }
}

const MONTH_SECONDS: i64 = 28 * 86_400;

/// Interaction records starting January 2021 in which a fixed set of pairs
/// interacts every month and a `recurring_fraction` of them deterministically
/// repeats each interaction after `offset_seconds`. Months are taken as
/// 28-day spans aligned to calendar months.
pub fn recurring_pairs(spec: &RecurrenceSpec) -> Vec<RawEdge> {
    let mut rng = substream(spec.seed, Domain::Synthetic, 0);
    let name = |i: u32| format!("user{i}");
    let mut pairs = Vec::with_capacity(spec.pairs);
    while pairs.len() < spec.pairs {
        let u = rng.gen_range(0..spec.nodes as u32);
        let v = rng.gen_range(0..spec.nodes as u32);
        if u != v && !pairs.contains(&(u, v)) {
            pairs.push((u, v));
        }
    }
    let recurring = (spec.pairs as f64 * spec.recurring_fraction).round() as usize;
    let posters = (spec.nodes as f64 * spec.posting_fraction).round() as u32;

    let mut out = Vec::new();
    let mut month_start = JAN_2021;
    for _ in 0..spec.months {
        let span = MONTH_SECONDS - spec.offset_seconds;
        for (i, &(u, v)) in pairs.iter().enumerate() {
            for _ in 0..spec.per_pair_per_month {
                let t = month_start + rng.gen_range(0..span);
                out.push(RawEdge::new(name(u), name(v), t));
                if i < recurring {
                    out.push(RawEdge::new(name(u), name(v), t + spec.offset_seconds));
                }
            }
        }
        for p in 0..posters {
            let t = month_start + rng.gen_range(0..MONTH_SECONDS);
            out.push(RawEdge::new(name(p), name(p), t));
        }
        month_start = next_month(month_start);
    }
    out
}

fn next_month(start: i64) -> i64 {
    use chrono::{DateTime, Datelike, NaiveDate};
    let d = DateTime::from_timestamp(start, 0).expect("valid epoch").date_naive();
    let (y, m) = if d.month() == 12 {
        (d.year() + 1, 1)
    } else {
        (d.year(), d.month() + 1)
    };
    NaiveDate::from_ymd_opt(y, m, 1)
        .expect("valid date")
        .and_hms_opt(0, 0, 0)
        .expect("valid time")
        .and_utc()
        .timestamp()
}

/// Records spread uniformly over `months` calendar months from January 2021,
/// drawing pairs from a heavy-tailed pool so pairs repeat across months.
pub fn monthly_dataset(seed: u64, nodes: usize, edges: usize, months: usize) -> Vec<RawEdge> {
    let mut rng = substream(seed, Domain::Synthetic, 1);
    let end = (0..months).fold(JAN_2021, |s, _| next_month(s));
    let mut times: Vec<i64> = (0..edges).map(|_| rng.gen_range(JAN_2021..end)).collect();
    times.sort_unstable();
    let mut recent: Vec<(u32, u32)> = Vec::new();
    let mut out = Vec::with_capacity(edges);
    for t in times {
        let (u, v) = if !recent.is_empty() && rng.gen_bool(0.3) {
            recent[rng.gen_range(0..recent.len())]
        } else {
            // squaring skews activity towards low ids
            let pick = |rng: &mut StreamRng| {
                let x: f64 = rng.gen();
                ((x * x) * nodes as f64) as u32
            };
            let u = pick(&mut rng);
            if rng.gen_bool(0.05) {
                (u, u)
            } else {
                (u, pick(&mut rng))
            }
        };
        if recent.len() < 50_000 {
            recent.push((u, v));
        } else {
            let i = rng.gen_range(0..recent.len());
            recent[i] = (u, v);
        }
        out.push(RawEdge::new(format!("user{u}"), format!("user{v}"), t));
    }
    out
}
