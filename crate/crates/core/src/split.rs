//! Chronological train/evaluation windows.
//!
//! Each window of a schedule trains a model and the following window is
//! used for validation and test. Evaluation edges touching a node that never
//! appears in the training window are dropped (transductive setting). Every
//! split re-bins its edges from the training window's earliest raw time.

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DynamicGraph, Edge, NodeRegistry, RawEdge, Timestamp};

/// Half-open raw-time window `[start, end)` in epoch seconds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub label: String,
    pub start: i64,
    pub end: i64,
}

impl WindowSpec {
    pub fn new(label: impl Into<String>, start: i64, end: i64) -> Self {
        WindowSpec {
            label: label.into(),
            start,
            end,
        }
    }

    #[inline]
    pub fn contains(&self, raw: i64) -> bool {
        self.start <= raw && raw < self.end
    }

    fn overlaps(&self, other: &WindowSpec) -> bool {
        self.start < other.end && other.start < self.end
    }
}

fn month_start(year: i32, month: u32) -> i64 {
    NaiveDate::from_ymd_opt(year, month, 1)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("valid calendar month")
        .and_utc()
        .timestamp()
}

fn utc(raw: i64) -> Result<DateTime<chrono::Utc>> {
    DateTime::from_timestamp(raw, 0).ok_or_else(|| Error::InvalidArgument(format!("timestamp {raw} out of range")))
}

/// UTC calendar months covering `[first, last]`. Labels are month
/// abbreviations when the span fits in a year, `YYYY-MM` otherwise.
pub fn calendar_months(first: i64, last: i64) -> Result<Vec<WindowSpec>> {
    let (a, b) = (utc(first)?, utc(last)?);
    let mut months = Vec::new();
    let (mut y, mut m) = (a.year(), a.month());
    loop {
        let (ny, nm) = if m == 12 { (y + 1, 1) } else { (y, m + 1) };
        months.push((y, m, month_start(y, m), month_start(ny, nm)));
        if (y, m) == (b.year(), b.month()) {
            break;
        }
        (y, m) = (ny, nm);
    }
    let short = months.len() <= 12;
    Ok(months
        .into_iter()
        .map(|(y, m, start, end)| {
            let label = if short {
                utc(start).map(|d| d.format("%b").to_string()).unwrap_or_default()
            } else {
                format!("{y:04}-{m:02}")
            };
            WindowSpec::new(label, start, end)
        })
        .collect())
}

/// Calendar months spanning the graph's raw times. Custom windows replace
/// every month they overlap, which is how sub-month periods are expressed.
pub fn monthly_schedule(graph: &DynamicGraph, custom: Option<&[WindowSpec]>) -> Result<Vec<WindowSpec>> {
    let raw = graph.raw_times();
    let (Some(&first), Some(&last)) = (raw.iter().min(), raw.iter().max()) else {
        return Err(Error::InvalidArgument(
            "cannot build a schedule for an empty graph".into(),
        ));
    };
    let months = calendar_months(first, last)?;
    let Some(custom) = custom else {
        return Ok(months);
    };

    let mut custom = custom.to_vec();
    custom.sort_by_key(|w| w.start);
    for w in &custom {
        if w.start >= w.end {
            return Err(Error::InvalidArgument(format!("window {:?} is empty", w.label)));
        }
    }
    for pair in custom.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Err(Error::InvalidArgument(format!(
                "windows {:?} and {:?} overlap",
                pair[0].label, pair[1].label
            )));
        }
    }
    let mut schedule: Vec<WindowSpec> = months
        .into_iter()
        .filter(|m| !custom.iter().any(|c| c.overlaps(m)))
        .collect();
    schedule.extend(custom);
    schedule.sort_by_key(|w| w.start);
    Ok(schedule)
}

/// Consecutive `(train, eval)` window pairs.
pub fn window_pairs(schedule: &[WindowSpec]) -> Vec<(WindowSpec, WindowSpec)> {
    schedule.windows(2).map(|w| (w[0].clone(), w[1].clone())).collect()
}

/// One train/eval split. `graph` holds the training edges followed by the
/// surviving evaluation edges (validation first, then test), all binned
/// from the training window's earliest raw time over the training node set.
#[derive(Debug, Clone)]
pub struct MonthlySplit {
    pub label: String,
    pub train_window: WindowSpec,
    pub eval_window: WindowSpec,
    pub graph: DynamicGraph,
    pub train: DynamicGraph,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub dropped_count: usize,
}

impl MonthlySplit {
    pub fn train_edges(&self) -> &[Edge] {
        &self.graph.edges()[..self.n_train]
    }

    pub fn validation(&self) -> &[Edge] {
        &self.graph.edges()[self.n_train..self.n_train + self.n_validation]
    }

    pub fn test(&self) -> &[Edge] {
        &self.graph.edges()[self.n_train + self.n_validation..]
    }

    /// Last bin of the evaluation window.
    pub fn eval_last_bin(&self) -> Timestamp {
        self.graph
            .bin_of(self.eval_window.end - 1)
            .expect("eval window ends after the training origin")
    }

    pub fn meta(&self) -> SplitMeta {
        let total = self.n_train + self.n_validation + self.n_test;
        SplitMeta {
            label: self.label.clone(),
            train_window: self.train_window.clone(),
            eval_window: self.eval_window.clone(),
            n_train: self.n_train,
            n_validation: self.n_validation,
            n_test: self.n_test,
            dropped_count: self.dropped_count,
            train_fraction: if total == 0 {
                0.0
            } else {
                self.n_train as f64 / total as f64
            },
            origin: self.graph.origin(),
            bin_width_seconds: self.graph.bin_width(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitMeta {
    pub label: String,
    pub train_window: WindowSpec,
    pub eval_window: WindowSpec,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    pub dropped_count: usize,
    /// `n_train / (n_train + n_validation + n_test)`.
    pub train_fraction: f64,
    pub origin: i64,
    pub bin_width_seconds: u64,
}

/// Builds the split for one `(train, eval)` window pair.
pub fn make_split(
    graph: &DynamicGraph,
    train_window: &WindowSpec,
    eval_window: &WindowSpec,
    val_fraction: f64,
) -> Result<MonthlySplit> {
    if train_window.end > eval_window.start {
        return Err(Error::InvalidArgument(format!(
            "train window {:?} must precede eval window {:?}",
            train_window.label, eval_window.label
        )));
    }
    if !(0.0..=1.0).contains(&val_fraction) {
        return Err(Error::InvalidArgument(format!(
            "val_fraction {val_fraction} outside [0, 1]"
        )));
    }
    let names = graph.nodes();
    let raw = graph.raw_times();
    let record = |i: usize| {
        let e = graph.edges()[i];
        RawEdge {
            src: names.name(e.src).to_owned(),
            dst: names.name(e.dst).to_owned(),
            time: raw[i],
        }
    };

    let train: Vec<RawEdge> = (0..raw.len())
        .filter(|&i| train_window.contains(raw[i]))
        .map(record)
        .collect();
    if train.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "train window {:?} has no edges",
            train_window.label
        )));
    }
    let origin = train.iter().map(|r| r.time).min().unwrap_or_default();
    let mut registry = NodeRegistry::new();
    for r in &train {
        registry.intern(&r.src);
        registry.intern(&r.dst);
    }

    let mut dropped_count = 0;
    let mut records = train;
    let n_train = records.len();
    for i in (0..raw.len()).filter(|&i| eval_window.contains(raw[i])) {
        let r = record(i);
        if registry.get(&r.src).is_some() && registry.get(&r.dst).is_some() {
            records.push(r);
        } else {
            dropped_count += 1;
        }
    }
    let survivors = records.len() - n_train;
    let n_validation = (survivors as f64 * val_fraction).floor() as usize;

    let full = DynamicGraph::from_records(registry, &records, graph.bin_width(), origin)?;
    let train_graph = full.truncated(n_train);
    Ok(MonthlySplit {
        label: train_window.label.clone(),
        train_window: train_window.clone(),
        eval_window: eval_window.clone(),
        graph: full,
        train: train_graph,
        n_train,
        n_validation,
        n_test: survivors - n_validation,
        dropped_count,
    })
}
