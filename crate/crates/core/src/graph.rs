//! Continuous-time dynamic graph store.
//!
//! A [`DynamicGraph`] is an immutable, directed edge multiset sorted by
//! coarsened timestamp. Raw epoch seconds are binned into fixed-width
//! intervals measured from the dataset's earliest raw time, so bin `b`
//! covers `[origin + b*w, origin + (b+1)*w)`. Ties inside a bin keep
//! ingestion order.

use std::fmt;
use std::ops::Range;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Five minutes, the default time resolution.
pub const DEFAULT_BIN_WIDTH_SECONDS: u64 = 300;

/// Dense node identifier in `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Bin index of a coarsened timestamp. The bin width is a property of the
/// owning graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(pub u64);

impl Timestamp {
    #[inline]
    pub fn bin(self) -> u64 {
        self.0
    }

    #[inline]
    pub fn offset(self, bins: u64) -> Timestamp {
        Timestamp(self.0 + bins)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub t: Timestamp,
}

impl Edge {
    pub fn new(src: u32, dst: u32, t: u64) -> Self {
        Edge {
            src: NodeId(src),
            dst: NodeId(dst),
            t: Timestamp(t),
        }
    }

    #[inline]
    pub fn is_loop(&self) -> bool {
        self.src == self.dst
    }
}

/// An interaction as read from an input file, before interning and binning.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawEdge {
    pub src: String,
    pub dst: String,
    /// Epoch seconds (UTC).
    pub time: i64,
}

impl RawEdge {
    pub fn new(src: impl Into<String>, dst: impl Into<String>, time: i64) -> Self {
        RawEdge {
            src: src.into(),
            dst: dst.into(),
            time,
        }
    }
}

/// Bijection between dense ids and external node names.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeRegistry {
    names: Vec<String>,
    ids: FxHashMap<String, NodeId>,
}

impl NodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, name: &str) -> NodeId {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = NodeId(self.names.len() as u32);
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.ids.get(name).copied()
    }

    pub fn name(&self, id: NodeId) -> &str {
        &self.names[id.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicGraph {
    nodes: NodeRegistry,
    edges: Vec<Edge>,
    raw_times: Vec<i64>,
    bin_width: u64,
    origin: i64,
    t_max: Timestamp,
}

/// Interns names in first-appearance order, bins raw times against the
/// minimum raw time and stably sorts by bin.
pub fn build_graph(records: &[RawEdge], bin_width_seconds: u64) -> Result<DynamicGraph> {
    let origin = records.iter().map(|r| r.time).min().unwrap_or(0);
    build_graph_with_origin(records, bin_width_seconds, origin)
}

/// Like [`build_graph`] but bins against an explicit origin, which must not
/// exceed any record's time.
pub fn build_graph_with_origin(records: &[RawEdge], bin_width_seconds: u64, origin: i64) -> Result<DynamicGraph> {
    let mut nodes = NodeRegistry::new();
    for r in records {
        nodes.intern(&r.src);
        nodes.intern(&r.dst);
    }
    DynamicGraph::from_records(nodes, records, bin_width_seconds, origin)
}

impl DynamicGraph {
    /// Builds a graph over a pre-populated registry. Every record endpoint
    /// must already be registered.
    pub fn from_records(nodes: NodeRegistry, records: &[RawEdge], bin_width_seconds: u64, origin: i64) -> Result<Self> {
        if bin_width_seconds == 0 {
            return Err(Error::InvalidArgument("bin width must be positive".into()));
        }
        let width = bin_width_seconds as i64;
        let mut rows = Vec::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            if r.time < 0 {
                return Err(Error::Ingest {
                    line: i + 1,
                    message: format!("negative timestamp {}", r.time),
                });
            }
            if r.time < origin {
                return Err(Error::InvalidArgument(format!(
                    "record {} at {} precedes the binning origin {origin}",
                    i + 1,
                    r.time
                )));
            }
            let lookup = |name: &str| {
                nodes
                    .get(name)
                    .ok_or_else(|| Error::InvalidArgument(format!("record {}: unregistered node {name:?}", i + 1)))
            };
            let src = lookup(&r.src)?;
            let dst = lookup(&r.dst)?;
            let bin = ((r.time - origin) / width) as u64;
            rows.push((
                Edge {
                    src,
                    dst,
                    t: Timestamp(bin),
                },
                r.time,
            ));
        }
        // `sort_by_key` is stable, so ties stay in ingestion order.
        rows.sort_by_key(|(e, _)| e.t);
        let (edges, raw_times): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        Ok(Self::assemble(nodes, edges, raw_times, bin_width_seconds, origin))
    }

    /// Graph over nodes `0..n` (named by their decimal id) from already
    /// binned `(src, dst, bin)` triples. Raw times are `bin * 300`.
    pub fn from_binned(n: usize, edges: impl IntoIterator<Item = (u32, u32, u64)>) -> Self {
        let mut nodes = NodeRegistry::new();
        for i in 0..n {
            nodes.intern(&i.to_string());
        }
        let mut edges: Vec<Edge> = edges
            .into_iter()
            .map(|(s, d, t)| {
                assert!((s as usize) < n && (d as usize) < n, "node id out of range");
                Edge::new(s, d, t)
            })
            .collect();
        edges.sort_by_key(|e| e.t);
        let width = DEFAULT_BIN_WIDTH_SECONDS;
        let raw_times = edges.iter().map(|e| (e.t.0 * width) as i64).collect();
        Self::assemble(nodes, edges, raw_times, width, 0)
    }

    pub(crate) fn assemble(
        nodes: NodeRegistry,
        edges: Vec<Edge>,
        raw_times: Vec<i64>,
        bin_width: u64,
        origin: i64,
    ) -> Self {
        debug_assert_eq!(edges.len(), raw_times.len());
        let t_max = edges.last().map(|e| e.t).unwrap_or_default();
        DynamicGraph {
            nodes,
            edges,
            raw_times,
            bin_width,
            origin,
            t_max,
        }
    }

    pub fn nodes(&self) -> &NodeRegistry {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Raw epoch seconds of each edge, parallel to [`edges`](Self::edges).
    pub fn raw_times(&self) -> &[i64] {
        &self.raw_times
    }

    pub fn bin_width(&self) -> u64 {
        self.bin_width
    }

    /// Raw time that bin 0 starts at.
    pub fn origin(&self) -> i64 {
        self.origin
    }

    /// Latest bin (0 for an empty graph).
    pub fn t_max(&self) -> Timestamp {
        self.t_max
    }

    /// Start of bin `t` in raw epoch seconds.
    pub fn coarsened_raw(&self, t: Timestamp) -> i64 {
        self.origin + (t.0 * self.bin_width) as i64
    }

    /// Bin containing raw time `raw`, or `None` before the origin.
    pub fn bin_of(&self, raw: i64) -> Option<Timestamp> {
        (raw >= self.origin).then(|| Timestamp(((raw - self.origin) / self.bin_width as i64) as u64))
    }

    /// Index of the first edge with `t > after`.
    pub fn first_edge_after(&self, after: Timestamp) -> usize {
        self.edges.partition_point(|e| e.t <= after)
    }

    /// Prefix of the edge list, keeping registry and binning.
    pub fn truncated(&self, m: usize) -> DynamicGraph {
        let m = m.min(self.edges.len());
        Self::assemble(
            self.nodes.clone(),
            self.edges[..m].to_vec(),
            self.raw_times[..m].to_vec(),
            self.bin_width,
            self.origin,
        )
    }

    /// Records with external names and raw times, in edge-list order.
    pub fn to_records(&self) -> Vec<RawEdge> {
        self.records_in(0..self.edges.len())
    }

    pub fn records_in(&self, range: Range<usize>) -> Vec<RawEdge> {
        range
            .map(|i| {
                let e = self.edges[i];
                RawEdge {
                    src: self.nodes.name(e.src).to_owned(),
                    dst: self.nodes.name(e.dst).to_owned(),
                    time: self.raw_times[i],
                }
            })
            .collect()
    }

    /// Splits the edge list into consecutive batches of `k` edges; the last
    /// batch may be shorter.
    pub fn batches(&self, k: usize) -> Result<Vec<Batch<'_>>> {
        if k == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        Ok(self
            .edges
            .chunks(k)
            .enumerate()
            .map(|(index, edges)| Batch::new(index, index * k, edges))
            .collect())
    }
}

/// A contiguous block of edges and its distinct timestamps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch<'g> {
    pub index: usize,
    /// Position of the first edge in the graph's edge list.
    pub offset: usize,
    pub edges: &'g [Edge],
    /// Distinct edge times, ascending.
    pub timestamps: Vec<Timestamp>,
}

impl<'g> Batch<'g> {
    pub fn new(index: usize, offset: usize, edges: &'g [Edge]) -> Self {
        let mut timestamps: Vec<Timestamp> = edges.iter().map(|e| e.t).collect();
        timestamps.sort_unstable();
        timestamps.dedup();
        Batch {
            index,
            offset,
            edges,
            timestamps,
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn first_timestamp(&self) -> Option<Timestamp> {
        self.timestamps.first().copied()
    }

    pub fn max_timestamp(&self) -> Option<Timestamp> {
        self.timestamps.last().copied()
    }
}
