//! History queries over a [`DynamicGraph`].
//!
//! Occurrences of each directed pair are stored contiguously (CSR style) as
//! edge-list positions plus their timestamps, both ascending. Pairs are
//! numbered in order of first occurrence, so the pairs seen strictly before
//! any time form a prefix of that numbering.

use rustc_hash::FxHashMap;

use crate::graph::{DynamicGraph, NodeId, Timestamp};

#[inline]
fn pair_key(u: NodeId, v: NodeId) -> u64 {
    ((u.0 as u64) << 32) | v.0 as u64
}

#[derive(Debug, Clone)]
pub struct HistoryIndex {
    node_count: usize,
    pair_ids: FxHashMap<u64, u32>,
    /// `(src, dst, first occurrence)` by pair id.
    pairs: Vec<(NodeId, NodeId, Timestamp)>,
    offsets: Vec<usize>,
    positions: Vec<u32>,
    times: Vec<Timestamp>,
    node_first_loop: Vec<Option<Timestamp>>,
}

impl HistoryIndex {
    pub fn build(graph: &DynamicGraph) -> Self {
        let edges = graph.edges();
        let mut pair_ids: FxHashMap<u64, u32> = FxHashMap::default();
        let mut pairs = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut edge_pair = Vec::with_capacity(edges.len());
        let mut node_first_loop = vec![None; graph.node_count()];

        for e in edges {
            let id = *pair_ids.entry(pair_key(e.src, e.dst)).or_insert_with(|| {
                pairs.push((e.src, e.dst, e.t));
                counts.push(0);
                (pairs.len() - 1) as u32
            });
            counts[id as usize] += 1;
            edge_pair.push(id);
            if e.is_loop() && node_first_loop[e.src.index()].is_none() {
                node_first_loop[e.src.index()] = Some(e.t);
            }
        }

        let mut offsets = Vec::with_capacity(pairs.len() + 1);
        offsets.push(0);
        for c in &counts {
            offsets.push(offsets.last().unwrap() + c);
        }
        let mut cursor = offsets[..pairs.len()].to_vec();
        let mut positions = vec![0u32; edges.len()];
        let mut times = vec![Timestamp(0); edges.len()];
        for (pos, (e, &id)) in edges.iter().zip(&edge_pair).enumerate() {
            let slot = &mut cursor[id as usize];
            positions[*slot] = pos as u32;
            times[*slot] = e.t;
            *slot += 1;
        }

        HistoryIndex {
            node_count: graph.node_count(),
            pair_ids,
            pairs,
            offsets,
            positions,
            times,
            node_first_loop,
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn distinct_pair_count(&self) -> usize {
        self.pairs.len()
    }

    fn range(&self, u: NodeId, v: NodeId) -> std::ops::Range<usize> {
        match self.pair_ids.get(&pair_key(u, v)) {
            Some(&id) => self.offsets[id as usize]..self.offsets[id as usize + 1],
            None => 0..0,
        }
    }

    /// Ascending times at which `(u, v)` occurs, with multiplicity.
    pub fn pair_times(&self, u: NodeId, v: NodeId) -> &[Timestamp] {
        &self.times[self.range(u, v)]
    }

    /// Ascending edge-list positions of `(u, v)`.
    pub fn pair_positions(&self, u: NodeId, v: NodeId) -> &[u32] {
        &self.positions[self.range(u, v)]
    }

    pub fn contains_pair(&self, u: NodeId, v: NodeId) -> bool {
        self.pair_ids.contains_key(&pair_key(u, v))
    }

    /// True iff an edge `(u, v, t)` exists at exactly bin `t`.
    pub fn pair_occurred(&self, u: NodeId, v: NodeId, t: Timestamp) -> bool {
        self.pair_times(u, v).binary_search(&t).is_ok()
    }

    /// True iff some `(u, v, t')` exists with `t' < t`.
    pub fn pair_occurred_before(&self, u: NodeId, v: NodeId, t: Timestamp) -> bool {
        self.pair_times(u, v).first().is_some_and(|&first| first < t)
    }

    /// Latest occurrence of `(u, v)` at or before `t`.
    pub fn latest_at_or_before(&self, u: NodeId, v: NodeId, t: Timestamp) -> Option<Timestamp> {
        let times = self.pair_times(u, v);
        let i = times.partition_point(|&x| x <= t);
        (i > 0).then(|| times[i - 1])
    }

    pub fn first_loop(&self, u: NodeId) -> Option<Timestamp> {
        self.node_first_loop[u.index()]
    }

    /// True iff `u` formed a loop at some time strictly before `t`.
    pub fn has_loop_before(&self, u: NodeId, t: Timestamp) -> bool {
        self.first_loop(u).is_some_and(|first| first < t)
    }

    /// Nodes without a loop strictly before `before_t`, ascending by id.
    pub fn loopless_nodes(&self, before_t: Timestamp) -> Vec<NodeId> {
        (0..self.node_count as u32)
            .map(NodeId)
            .filter(|&u| !self.has_loop_before(u, before_t))
            .collect()
    }

    /// Number of distinct directed pairs with an occurrence strictly before `t`.
    pub fn pairs_before_count(&self, t: Timestamp) -> usize {
        self.pairs.partition_point(|&(_, _, first)| first < t)
    }

    /// The `i`-th distinct pair in first-occurrence order. Indices below
    /// [`pairs_before_count(t)`](Self::pairs_before_count) are exactly the
    /// pairs seen before `t`.
    pub fn pair_at(&self, i: usize) -> (NodeId, NodeId) {
        let (u, v, _) = self.pairs[i];
        (u, v)
    }
}
