use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::index;
use rand::Rng;
use rustc_hash::FxHashSet;

use super::{Category, LoopPool, Sample, SampleSet, Sampler};
use crate::graph::{Batch, Edge, NodeId, Timestamp};
use crate::rng::StreamRng;

/// Uniform draw from `0..n` minus `{a, b}`.
pub(crate) fn draw_excluding(n: usize, a: NodeId, b: NodeId, rng: &mut StreamRng) -> Option<NodeId> {
    let (lo, hi) = if a <= b { (a.0, b.0) } else { (b.0, a.0) };
    let excluded = if lo == hi { 1 } else { 2 };
    if n <= excluded {
        return None;
    }
    let mut r = rng.gen_range(0..(n - excluded)) as u32;
    if r >= lo {
        r += 1;
    }
    if lo != hi && r >= hi {
        r += 1;
    }
    Some(NodeId(r))
}

/// Uniform choice among the candidates that pass `admissible`. Used once
/// rejection sampling has run out of attempts, so a miss means none exist.
pub(crate) fn draw_exhaustive<T: Copy>(
    candidates: impl Iterator<Item = T>,
    admissible: impl Fn(T) -> bool,
    rng: &mut StreamRng,
) -> Option<T> {
    let pool: Vec<T> = candidates.filter(|&c| admissible(c)).collect();
    (!pool.is_empty()).then(|| pool[rng.gen_range(0..pool.len())])
}

impl Sampler<'_> {
    /// A replacement node `r` for which the candidate built by `make(r)` is
    /// absent from the graph: `retry_cap` rejection draws, then an exact
    /// scan over all nodes. `None` only when no node qualifies.
    fn draw_absent(
        &self,
        exclude: (NodeId, NodeId),
        t: Timestamp,
        rng: &mut StreamRng,
        make: impl Fn(NodeId) -> (NodeId, NodeId),
    ) -> Option<(NodeId, NodeId)> {
        let n = self.graph.node_count();
        for _ in 0..self.config.retry_cap {
            let r = draw_excluding(n, exclude.0, exclude.1, rng)?;
            let (s, d) = make(r);
            if !self.index.pair_occurred(s, d, t) {
                return Some((s, d));
            }
        }
        let absent = |r: NodeId| {
            let (s, d) = make(r);
            r != exclude.0 && r != exclude.1 && !self.index.pair_occurred(s, d, t)
        };
        draw_exhaustive((0..n as u32).map(NodeId), absent, rng).map(make)
    }

    pub(crate) fn random_receiver_for(&self, e: &Edge, rng: &mut StreamRng, out: &mut SampleSet) {
        match self.draw_absent((e.src, e.dst), e.t, rng, |r| (e.src, r)) {
            Some((s, d)) => out.samples.push(Sample::negative(s, d, e.t, Category::RandomReceiver)),
            None => out.tally.random_receiver_skipped += 1,
        }
    }

    pub(crate) fn random_sender_for(&self, e: &Edge, rng: &mut StreamRng, out: &mut SampleSet) {
        match self.draw_absent((e.src, e.dst), e.t, rng, |r| (r, e.dst)) {
            Some((s, d)) => out.samples.push(Sample::negative(s, d, e.t, Category::RandomSender)),
            None => out.tally.random_sender_skipped += 1,
        }
    }

    /// Random negative sampling: `(u, r, t)` with `r` uniform over the other nodes.
    pub fn random_baseline(&self, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        for e in batch.edges {
            self.random_receiver_for(e, rng, &mut out);
        }
        out
    }

    /// Historical negative sampling: a distinct pair seen strictly before
    /// `t`, placed at `t`. Falls back to the random baseline when no
    /// admissible pair is found.
    pub fn historical_baseline(&self, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        for e in batch.edges {
            let pool = self.index.pairs_before_count(e.t);
            let mut found = None;
            if pool > 0 {
                for _ in 0..self.config.retry_cap {
                    let (s, d) = self.index.pair_at(rng.gen_range(0..pool));
                    if !self.index.pair_occurred(s, d, e.t) {
                        found = Some((s, d));
                        break;
                    }
                }
            }
            match found {
                Some((s, d)) => out.samples.push(Sample::negative(s, d, e.t, Category::Historical)),
                None => {
                    out.tally.historical_fallback += 1;
                    self.random_receiver_for(e, rng, &mut out);
                }
            }
        }
        out
    }

    /// Random sender and receiver: `(r_s, v, t)` and `(u, r_d, t)` per positive.
    pub fn sender_receiver(&self, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        for e in batch.edges {
            self.random_sender_for(e, rng, &mut out);
            self.random_receiver_for(e, rng, &mut out);
        }
        out
    }

    /// Up to `q` distinct bins `t_n` in `[t, min(t + t_f, horizon)]` where
    /// `(u, v, t_n)` does not occur, drawn without replacement from the
    /// exact admissible set.
    fn temporal_for(&self, e: &Edge, horizon: Timestamp, rng: &mut StreamRng, out: &mut SampleSet) {
        let q = self.config.q;
        let lo = e.t.0;
        let hi = lo.saturating_add(self.config.t_f).min(horizon.0);
        if hi < lo {
            out.tally.temporal_shortfall += q;
            return;
        }
        let times = self.index.pair_times(e.src, e.dst);
        let start = times.partition_point(|x| x.0 < lo);
        let end = times.partition_point(|x| x.0 <= hi);
        let mut occupied: Vec<u64> = times[start..end].iter().map(|x| x.0).collect();
        occupied.dedup();

        let free = (hi - lo + 1) as usize - occupied.len();
        let take = q.min(free);
        out.tally.temporal_shortfall += q - take;
        if take == 0 {
            return;
        }
        let mut picks = index::sample(rng, free, take).into_vec();
        picks.sort_unstable();

        // map the j-th free slot to its bin, skipping occupied bins
        let mut occ = occupied.iter().peekable();
        let mut skipped = 0u64;
        for p in picks {
            let mut bin = lo + p as u64 + skipped;
            while let Some(&&o) = occ.peek() {
                if o <= bin {
                    skipped += 1;
                    bin += 1;
                    occ.next();
                } else {
                    break;
                }
            }
            out.samples
                .push(Sample::negative(e.src, e.dst, Timestamp(bin), Category::Temporal));
        }
    }

    /// Temporal sampling: future negatives for each positive's own pair,
    /// never past the batch's latest timestamp.
    pub fn temporal(&self, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        let Some(horizon) = batch.max_timestamp() else {
            return out;
        };
        for e in batch.edges {
            self.temporal_for(e, horizon, rng, &mut out);
        }
        out
    }

    /// Negative loops: one `(r, r, t)` per distinct batch timestamp, `r`
    /// drawn from nodes without an earlier loop.
    pub fn negative_loops(&self, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        let Some(first) = batch.first_timestamp() else {
            return out;
        };
        // loop-free before the batch start is a superset of loop-free before
        // any later t, so per-t pools are handled by rejection from it
        let pool = self.index.loopless_nodes(first);
        for &t in &batch.timestamps {
            let per_t = self.config.loop_pool == LoopPool::PerT;
            let admissible =
                |r: NodeId| !(per_t && self.index.has_loop_before(r, t)) && !self.index.pair_occurred(r, r, t);
            let mut found = None;
            if !pool.is_empty() {
                found = (0..self.config.retry_cap)
                    .map(|_| pool[rng.gen_range(0..pool.len())])
                    .find(|&r| admissible(r))
                    .or_else(|| draw_exhaustive(pool.iter().copied(), admissible, rng));
            }
            match found {
                Some(r) => out.samples.push(Sample::negative(r, r, t, Category::NegativeLoop)),
                None => out.tally.loop_shortfall += 1,
            }
        }
        out
    }

    /// Positive enhancement: the earliest (in edge-list order) edges after
    /// the batch's latest timestamp whose pair occurs in the batch, at most
    /// `batch_size` of them.
    pub fn positive_enhancement(&self, batch: &Batch<'_>) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        let Some(last) = batch.max_timestamp() else {
            return out;
        };
        let after = self.graph.first_edge_after(last) as u32;
        let limit = self.config.batch_size;

        let mut seen = FxHashSet::default();
        let mut heap = BinaryHeap::new();
        for e in batch.edges {
            if !seen.insert((e.src, e.dst)) {
                continue;
            }
            let positions = self.index.pair_positions(e.src, e.dst);
            let i = positions.partition_point(|&p| p < after);
            if i < positions.len() {
                heap.push(Reverse((positions[i], i, positions)));
            }
        }
        let edges = self.graph.edges();
        while out.samples.len() < limit {
            let Some(Reverse((pos, i, positions))) = heap.pop() else {
                break;
            };
            out.samples
                .push(Sample::positive(&edges[pos as usize], Category::PositiveEnhancement));
            if i + 1 < positions.len() {
                heap.push(Reverse((positions[i + 1], i + 1, positions)));
            }
        }
        out
    }

    /// The combined domain-informed strategy, in the order of the original
    /// procedure: per positive a random sender, a random receiver and the
    /// temporal negatives; then one negative loop per batch timestamp; then
    /// positive enhancement.
    pub fn dins(&self, batch: &Batch<'_>, rng: &mut StreamRng) -> SampleSet {
        let mut out = SampleSet::new(batch.index);
        let Some(horizon) = batch.max_timestamp() else {
            return out;
        };
        for e in batch.edges {
            self.random_sender_for(e, rng, &mut out);
            self.random_receiver_for(e, rng, &mut out);
            self.temporal_for(e, horizon, rng, &mut out);
        }
        let loops = self.negative_loops(batch, rng);
        let enhanced = self.positive_enhancement(batch);
        merge_into(&mut out, loops);
        merge_into(&mut out, enhanced);
        out
    }
}

fn merge_into(out: &mut SampleSet, other: SampleSet) {
    out.samples.extend(other.samples);
    out.tally.merge(&other.tally);
}
