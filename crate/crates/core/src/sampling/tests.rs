use super::strategies::draw_excluding;
use super::*;
use crate::rng::{substream, Domain};

fn rng(i: u64) -> StreamRng {
    substream(42, Domain::Training, i)
}

fn cfg() -> SamplerConfig {
    SamplerConfig::default()
}

/// Linear scan membership.
fn in_edges(g: &DynamicGraph, s: &Sample) -> bool {
    g.edges().iter().any(|e| e.src == s.src && e.dst == s.dst && e.t == s.t)
}

fn n(i: u32) -> NodeId {
    NodeId(i)
}

#[test]
fn draw_excluding_skips_both_endpoints() {
    let mut r = rng(0);
    for _ in 0..2000 {
        let x = draw_excluding(5, n(3), n(1), &mut r).unwrap();
        assert!(x != n(3) && x != n(1) && x.0 < 5);
    }
    for _ in 0..200 {
        let x = draw_excluding(3, n(2), n(2), &mut r).unwrap();
        assert!(x.0 < 2);
    }
    assert_eq!(draw_excluding(2, n(0), n(1), &mut r), None);
    assert_eq!(draw_excluding(1, n(0), n(0), &mut r), None);
}

#[test]
fn random_baseline_one_negative_per_positive() {
    let g = DynamicGraph::from_binned(10, [(0, 1, 0), (2, 3, 1)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(2).unwrap()[0];
    let out = s.random_baseline(b, &mut rng(0));
    assert_eq!(out.len(), 2);
    for (sample, pos) in out.samples.iter().zip(b.edges) {
        assert_eq!(sample.src, pos.src);
        assert_eq!(sample.t, pos.t);
        assert!(sample.dst != pos.src && sample.dst != pos.dst);
        assert!(sample.is_negative());
    }
}

#[test]
fn random_baseline_with_empty_pool_is_skipped() {
    let g = DynamicGraph::from_binned(2, [(0, 1, 0)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1).unwrap()[0];
    let out = s.random_baseline(b, &mut rng(0));
    assert!(out.is_empty());
    assert_eq!(out.tally.random_receiver_skipped, 1);
}

#[test]
fn strategies_are_deterministic_for_a_seed() {
    let g = crate::synthetic::random_graph(&mut rng(9), 40, 400, 60);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(
        &g,
        &ix,
        SamplerConfig {
            batch_size: 50,
            ..cfg()
        },
    )
    .unwrap();
    for strategy in Strategy::ALL {
        assert_eq!(s.sample_all(strategy).unwrap(), s.sample_all(strategy).unwrap());
    }
    let other = Sampler::new(
        &g,
        &ix,
        SamplerConfig {
            batch_size: 50,
            seed: 1,
            ..cfg()
        },
    )
    .unwrap();
    assert_ne!(
        s.sample_all(Strategy::Dins).unwrap(),
        other.sample_all(Strategy::Dins).unwrap()
    );
}

#[test]
fn historical_uses_the_only_prior_pair() {
    // a=0 b=1 c=2 d=3; history {(a,b,0)}, positive (c,d,5)
    let g = DynamicGraph::from_binned(4, [(0, 1, 0), (2, 3, 5)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1).unwrap()[1];
    let out = s.historical_baseline(b, &mut rng(0));
    assert_eq!(
        out.samples,
        vec![Sample::negative(n(0), n(1), Timestamp(5), Category::Historical)]
    );
    assert_eq!(out.tally.historical_fallback, 0);
}

#[test]
fn historical_falls_back_without_history() {
    let g = DynamicGraph::from_binned(6, [(0, 1, 0), (2, 3, 0), (4, 5, 0)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(3).unwrap()[0];
    let out = s.historical_baseline(b, &mut rng(0));
    assert_eq!(out.tally.historical_fallback, 3);
    assert_eq!(out.count(Category::RandomReceiver), 3);
}

#[test]
fn sender_receiver_cardinality_and_pool() {
    // u=0, v=1, w=2
    let g = DynamicGraph::from_binned(3, [(0, 1, 4)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1).unwrap()[0];
    for i in 0..20 {
        let out = s.sender_receiver(b, &mut rng(i));
        assert_eq!(
            out.samples,
            vec![
                Sample::negative(n(2), n(1), Timestamp(4), Category::RandomSender),
                Sample::negative(n(0), n(2), Timestamp(4), Category::RandomReceiver),
            ]
        );
    }

    let g = crate::synthetic::random_graph(&mut rng(3), 30, 100, 20);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(100).unwrap()[0];
    let out = s.sender_receiver(b, &mut rng(1));
    assert_eq!(out.count(Category::RandomSender) + out.tally.random_sender_skipped, 100);
    assert_eq!(
        out.count(Category::RandomReceiver) + out.tally.random_receiver_skipped,
        100
    );
}

#[test]
fn sender_draw_finds_the_last_admissible_node_after_the_retry_cap() {
    // senders 2 and 3 already send to 1 at t=0; only 4 remains
    let g = DynamicGraph::from_binned(5, [(0, 1, 0), (2, 1, 0), (3, 1, 0)]);
    let ix = HistoryIndex::build(&g);
    let config = SamplerConfig { retry_cap: 1, ..cfg() };
    let s = Sampler::new(&g, &ix, config).unwrap();
    let b = &g.batches(1).unwrap()[0];
    for i in 0..50 {
        let out = s.sender_receiver(b, &mut rng(i));
        assert_eq!(out.tally.random_sender_skipped, 0);
        assert!(out
            .samples
            .contains(&Sample::negative(n(4), n(1), Timestamp(0), Category::RandomSender)));
    }

    let g = DynamicGraph::from_binned(5, [(0, 1, 0), (2, 1, 0), (3, 1, 0), (4, 1, 0)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, config).unwrap();
    let b = &g.batches(1).unwrap()[0];
    let out = s.sender_receiver(b, &mut rng(0));
    assert_eq!(out.count(Category::RandomSender), 0);
    assert_eq!(out.tally.random_sender_skipped, 1);
}

#[test]
fn receiver_draws_are_uniform_over_the_pool() {
    // positive (0,1,0) among 7 nodes: the admissible receivers are 2..=6
    let g = DynamicGraph::from_binned(7, [(0, 1, 0)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1).unwrap()[0];
    let mut counts = [0usize; 7];
    let draws = 20_000;
    let mut r = rng(77);
    for _ in 0..draws {
        let out = s.sender_receiver(b, &mut r);
        let recv = out
            .samples
            .iter()
            .find(|x| x.category == Category::RandomReceiver)
            .unwrap();
        counts[recv.dst.index()] += 1;
    }
    assert_eq!(counts[0] + counts[1], 0);
    let p = 1.0 / 5.0;
    let mean = draws as f64 * p;
    let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
    for c in &counts[2..] {
        assert!((*c as f64 - mean).abs() < 5.0 * sigma, "{counts:?}");
    }
}

#[test]
fn temporal_draws_exactly_the_admissible_bins() {
    // positive (u,v,10), t_f=5, batch max 20, no other (u,v) edges:
    // admissible = {10..15} minus the positive itself = {11..15}
    let g = DynamicGraph::from_binned(4, [(0, 1, 10), (2, 3, 20)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, SamplerConfig { t_f: 5, ..cfg() }).unwrap();
    let b = &g.batches(2).unwrap()[0];
    for i in 0..10 {
        let out = s.temporal(b, &mut rng(i));
        let mine: Vec<u64> = out.samples.iter().filter(|x| x.src == n(0)).map(|x| x.t.0).collect();
        assert_eq!(mine, vec![11, 12, 13, 14, 15]);
        // the positive at the batch maximum has only [20,20], which it occupies
        assert_eq!(out.tally.temporal_shortfall, 5);
    }
}

#[test]
fn temporal_subsets_are_distinct_and_admissible() {
    // (0,1) occurs at 0, 3 and 7 inside [0, 10]
    let g = DynamicGraph::from_binned(2, [(0, 1, 0), (0, 1, 3), (0, 1, 7), (1, 0, 30)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, SamplerConfig { t_f: 10, q: 4, ..cfg() }).unwrap();
    let b = &g.batches(4).unwrap()[0];
    let admissible: Vec<u64> = (0..=10).filter(|t| ![0, 3, 7].contains(t)).collect();
    let mut seen = std::collections::BTreeSet::new();
    for i in 0..200 {
        let out = s.temporal(b, &mut rng(i));
        let first: Vec<u64> = out.samples[..4].iter().map(|x| x.t.0).collect();
        assert!(first.windows(2).all(|w| w[0] < w[1]));
        assert!(first.iter().all(|t| admissible.contains(t)));
        seen.extend(first);
    }
    assert_eq!(seen.into_iter().collect::<Vec<_>>(), admissible);
}

#[test]
fn temporal_at_batch_maximum_is_fully_clamped() {
    let g = DynamicGraph::from_binned(2, [(0, 1, 9)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1).unwrap()[0];
    let out = s.temporal(b, &mut rng(0));
    assert!(out.is_empty());
    assert_eq!(out.tally.temporal_shortfall, 5);
}

#[test]
fn one_negative_loop_per_batch_timestamp() {
    let g = DynamicGraph::from_binned(10, [(0, 1, 3), (2, 0, 4)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(2).unwrap()[0];
    let out = s.negative_loops(b, &mut rng(0));
    let ts: Vec<u64> = out.samples.iter().map(|x| x.t.0).collect();
    assert_eq!(ts, vec![3, 4]);
    assert!(out.samples.iter().all(|x| x.src == x.dst));
}

#[test]
fn no_loop_negatives_when_every_node_has_looped() {
    let g = DynamicGraph::from_binned(3, [(0, 0, 0), (1, 1, 0), (2, 2, 1), (0, 1, 5), (1, 2, 6)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(3).unwrap()[1];
    let out = s.negative_loops(b, &mut rng(0));
    assert!(out.is_empty());
    assert_eq!(out.tally.loop_shortfall, 2);
}

#[test]
fn loop_nodes_have_no_loop_before_the_batch() {
    let g = crate::synthetic::random_graph(&mut rng(5), 25, 600, 80);
    let ix = HistoryIndex::build(&g);
    for pool in [LoopPool::Batch, LoopPool::PerT] {
        let s = Sampler::new(
            &g,
            &ix,
            SamplerConfig {
                batch_size: 40,
                loop_pool: pool,
                ..cfg()
            },
        )
        .unwrap();
        for b in g.batches(40).unwrap() {
            let out = s.negative_loops(&b, &mut rng(b.index as u64));
            let start = b.first_timestamp().unwrap();
            for x in &out.samples {
                assert!(!ix.has_loop_before(x.src, start));
                if pool == LoopPool::PerT {
                    assert!(!ix.has_loop_before(x.src, x.t));
                }
                assert!(!in_edges(&g, x));
            }
            assert_eq!(out.len() + out.tally.loop_shortfall, b.timestamps.len());
        }
    }
}

/// Eight interactions in batches of two. For
/// the batch {(u,v,t3), (w,u,t4)} the later (u,v,t6) is enhanced.
fn eight_edge_graph() -> DynamicGraph {
    // u=0 v=1 w=2 x=3 y=4
    DynamicGraph::from_binned(
        5,
        [
            (3, 4, 1),
            (4, 2, 2),
            (0, 1, 3),
            (2, 0, 4),
            (3, 3, 5),
            (0, 1, 6),
            (4, 3, 7),
            (1, 2, 8),
        ],
    )
}

#[test]
fn eight_edges_positive_enhancement() {
    let g = eight_edge_graph();
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, SamplerConfig { batch_size: 2, ..cfg() }).unwrap();
    let b = &g.batches(2).unwrap()[1];
    let out = s.positive_enhancement(b);
    assert_eq!(
        out.samples,
        vec![Sample::positive(&Edge::new(0, 1, 6), Category::PositiveEnhancement)]
    );
}

#[test]
fn eight_edges_dins_rows() {
    let g = eight_edge_graph();
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, SamplerConfig { batch_size: 2, ..cfg() }).unwrap();
    let b = &g.batches(2).unwrap()[1];
    let out = s.dins(b, &mut rng(3));
    let rows = &out.samples;
    // rows generated from the positive (u,v,t3)
    assert_eq!(rows[0].category, Category::RandomSender);
    assert_eq!((rows[0].dst, rows[0].t), (n(1), Timestamp(3)));
    assert!(rows[0].src != n(0) && rows[0].src != n(1));
    assert_eq!(rows[1].category, Category::RandomReceiver);
    assert_eq!((rows[1].src, rows[1].t), (n(0), Timestamp(3)));
    assert!(rows[1].dst != n(0) && rows[1].dst != n(1));
    // temporal: only bin 4 lies in [t3, t4] and is free for (u,v)
    assert_eq!(rows[2], Sample::negative(n(0), n(1), Timestamp(4), Category::Temporal));
    // the (w,u,t4) positive yields sender and receiver but no temporal room
    assert_eq!(rows[3].category, Category::RandomSender);
    assert_eq!(rows[4].category, Category::RandomReceiver);
    // loops at t3 and t4, then the enhanced positive
    assert_eq!(rows[5].category, Category::NegativeLoop);
    assert_eq!(rows[5].t, Timestamp(3));
    assert_eq!(rows[6].t, Timestamp(4));
    assert_eq!(
        rows[7],
        Sample::positive(&Edge::new(0, 1, 6), Category::PositiveEnhancement)
    );
    assert_eq!(rows.len(), 8);
    assert_eq!(out.tally.temporal_shortfall, 4 + 5);
}

#[test]
fn no_recurring_pair_means_no_enhancement() {
    let g = DynamicGraph::from_binned(4, [(0, 1, 0), (1, 2, 1), (2, 3, 2)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1).unwrap()[0];
    assert!(s.positive_enhancement(b).is_empty());
}

#[test]
fn enhancement_keeps_the_earliest_k_in_edge_order() {
    let k = 4;
    // batch: (0,1,0) (2,3,0) (4,5,0) (0,1,0); later: k+5 qualifying edges
    // interleaved with non-qualifying ones and a same-bin (0,1) edge that
    // sits after the batch but not after its max timestamp
    let mut edges = vec![(0, 1, 0), (2, 3, 0), (4, 5, 0), (0, 1, 0), (0, 1, 0)];
    for t in 1..=(k as u64 + 5) {
        edges.push((1, 0, t));
        edges.push(if t % 2 == 0 { (0, 1, t) } else { (4, 5, t) });
    }
    let g = DynamicGraph::from_binned(6, edges);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, SamplerConfig { batch_size: k, ..cfg() }).unwrap();
    let b = &g.batches(k).unwrap()[0];

    // ordered-scan oracle
    let pairs: Vec<(NodeId, NodeId)> = b.edges.iter().map(|e| (e.src, e.dst)).collect();
    let last = b.max_timestamp().unwrap();
    let expected: Vec<Sample> = g
        .edges()
        .iter()
        .filter(|e| e.t > last && pairs.contains(&(e.src, e.dst)))
        .take(k)
        .map(|e| Sample::positive(e, Category::PositiveEnhancement))
        .collect();
    assert_eq!(expected.len(), k);
    assert_eq!(s.positive_enhancement(b).samples, expected);
}

#[test]
fn dins_of_an_empty_batch_is_empty() {
    let g = DynamicGraph::from_binned(3, [(0, 1, 0)]);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let empty = Batch::new(0, 0, &[]);
    assert!(s.dins(&empty, &mut rng(0)).is_empty());
}

#[test]
fn dins_cardinality_arithmetic_on_a_thousand_edge_batch() {
    // 1000 positives with distinct pairs over 900 distinct bins spaced 10
    // apart; each pair recurs once after the batch; 2000 extra nodes
    let n_nodes = 4000u32;
    let mut edges = Vec::new();
    for i in 0..1000u32 {
        let t = 10 * u64::from(i.min(899));
        edges.push((2 * i, 2 * i + 1, t));
    }
    for i in 0..1000u32 {
        edges.push((2 * i, 2 * i + 1, 100_000 + u64::from(i)));
    }
    let g = DynamicGraph::from_binned(n_nodes as usize, edges);
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(&g, &ix, cfg()).unwrap();
    let b = &g.batches(1000).unwrap()[0];
    assert_eq!(b.timestamps.len(), 900);
    let out = s.dins(b, &mut rng(11));

    let t = out.tally;
    assert_eq!(out.count(Category::RandomSender), 1000);
    assert_eq!(out.count(Category::RandomReceiver), 1000);
    assert_eq!(out.count(Category::NegativeLoop), 900);
    assert_eq!(out.count(Category::PositiveEnhancement), 1000);
    // the 101 positives sharing the batch's last bin have no temporal room
    assert_eq!(t.temporal_shortfall, 5 * 101);
    assert_eq!(out.count(Category::Temporal) + t.temporal_shortfall, 5000);
    assert_eq!(out.len(), 2000 + 5000 + 900 + 1000 - t.temporal_shortfall);
}

#[test]
fn negatives_never_hit_the_edge_set() {
    for seed in 0..6 {
        let g = crate::synthetic::random_graph(&mut rng(100 + seed), 12, 300, 30);
        let ix = HistoryIndex::build(&g);
        let s = Sampler::new(
            &g,
            &ix,
            SamplerConfig {
                batch_size: 25,
                t_f: 8,
                ..cfg()
            },
        )
        .unwrap();
        for strategy in Strategy::ALL {
            for set in s.sample_all(strategy).unwrap() {
                for x in set.samples.iter().filter(|x| x.is_negative()) {
                    assert!(!in_edges(&g, x), "{strategy} emitted an edge {x:?}");
                }
            }
        }
    }
}

#[test]
fn full_batch_cardinality_with_the_unavoidable_temporal_shortfall() {
    // 1000 distinct pairs (i, 1000 + i) over 900 distinct bins, each pair
    // recurring once after the batch
    let edge_bin = |i: u64| i.min(899);
    let batch = (0..1000u32).map(|i| (i, 1000 + i, edge_bin(i as u64)));
    let future = (0..1000u32).map(|i| (i, 1000 + i, 900 + i as u64));
    let g = DynamicGraph::from_binned(2000, batch.chain(future));
    let ix = HistoryIndex::build(&g);
    let s = Sampler::new(
        &g,
        &ix,
        SamplerConfig {
            batch_size: 1000,
            ..cfg()
        },
    )
    .unwrap();
    let b = &g.batches(1000).unwrap()[0];
    assert_eq!(b.timestamps.len(), 900);
    let out = s.dins(b, &mut rng(0));

    // a positive at bin t has admissible bins t+1..=min(t + 288, 899)
    let temporal: usize = (0..1000).map(|i| 5.min(288.min(899 - edge_bin(i)) as usize)).sum();
    assert_eq!(out.count(Category::RandomSender), 1000);
    assert_eq!(out.count(Category::RandomReceiver), 1000);
    assert_eq!(out.count(Category::Temporal), temporal);
    assert_eq!(out.tally.temporal_shortfall, 5000 - temporal);
    assert_eq!(out.count(Category::NegativeLoop), 900);
    assert_eq!(out.count(Category::PositiveEnhancement), 1000);
    // 2000 + 5000 + 900 + 1000 less the 515 bins the window cannot hold
    assert_eq!(temporal, 4485);
    assert_eq!(out.len(), 8385);
}
