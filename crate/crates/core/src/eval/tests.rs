use std::collections::HashMap;

use proptest::prelude::*;

use super::*;
use crate::graph::build_graph;
use crate::rng::substream;
use crate::scorers::{ScorerKind, ScorerSpec};
use crate::split::{make_split, monthly_schedule};
use crate::synthetic::{random_graph, recurring_pairs, RecurrenceSpec};

fn builder<'g>(g: &'g DynamicGraph, ix: &'g HistoryIndex, last: u64) -> EvalBuilder<'g> {
    EvalBuilder::new(g, ix, Timestamp(last), EvalConfig::default())
}

#[test]
fn labels_and_offsets() {
    let labels: Vec<&str> = EvalCategory::ALL.iter().map(|c| c.as_str()).collect();
    assert_eq!(
        labels,
        [
            "random_sender",
            "random_receiver",
            "loop",
            "6h",
            "12h",
            "24h",
            "overall"
        ]
    );
    assert_eq!(EvalCategory::H6.offset(), Some(72));
    assert_eq!(EvalCategory::H12.offset(), Some(144));
    assert_eq!(EvalCategory::H24.offset(), Some(288));
    for c in EvalCategory::ALL {
        assert_eq!(c.as_str().parse::<EvalCategory>().unwrap(), c);
        assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
    }
}

#[test]
fn hour_probe_shifts_the_positive() {
    let g = DynamicGraph::from_binned(3, [(0, 1, 10)]);
    let ix = HistoryIndex::build(&g);
    let set = builder(&g, &ix, 1000).build(g.edges(), EvalCategory::H6).unwrap();
    assert_eq!(
        set.negatives,
        vec![Sample::negative(
            NodeId(0),
            NodeId(1),
            Timestamp(82),
            Category::Temporal
        )]
    );
    assert_eq!(set.shortfall, 0);
}

#[test]
fn hour_probe_on_an_existing_edge_is_a_shortfall() {
    let g = DynamicGraph::from_binned(3, [(0, 1, 10), (0, 1, 82)]);
    let ix = HistoryIndex::build(&g);
    let set = builder(&g, &ix, 1000).build(&g.edges()[..1], EvalCategory::H6).unwrap();
    assert!(set.negatives.is_empty());
    assert_eq!(set.shortfall, 1);
}

#[test]
fn hour_probe_past_the_window_is_a_shortfall() {
    let g = DynamicGraph::from_binned(3, [(0, 1, 10)]);
    let ix = HistoryIndex::build(&g);
    let b = builder(&g, &ix, 154);
    assert_eq!(b.build(g.edges(), EvalCategory::H12).unwrap().negatives.len(), 1);
    assert_eq!(b.build(g.edges(), EvalCategory::H24).unwrap().shortfall, 1);
}

#[test]
fn one_positive_gives_six_overall_negatives() {
    let g = DynamicGraph::from_binned(5, [(0, 1, 10)]);
    let ix = HistoryIndex::build(&g);
    let sets = builder(&g, &ix, 1000).build_all(g.edges()).unwrap();
    assert_eq!(sets.negatives(EvalCategory::Overall).count(), 6);
    assert_eq!(sets.shortfall(EvalCategory::Overall), 0);
    let overall = builder(&g, &ix, 1000).build(g.edges(), EvalCategory::Overall).unwrap();
    assert_eq!(overall.negatives.len(), 6);
}

#[test]
fn per_timestamp_loops_follow_distinct_times() {
    let g = DynamicGraph::from_binned(6, [(0, 1, 10), (1, 2, 10), (2, 3, 11)]);
    let ix = HistoryIndex::build(&g);
    let cfg = EvalConfig {
        loop_eval: LoopEval::PerTimestamp,
        ..Default::default()
    };
    let b = EvalBuilder::new(&g, &ix, Timestamp(100), cfg);
    assert_eq!(b.build(g.edges(), EvalCategory::Loop).unwrap().negatives.len(), 2);
    assert_eq!(
        builder(&g, &ix, 100)
            .build(g.edges(), EvalCategory::Loop)
            .unwrap()
            .negatives
            .len(),
        3
    );
}

#[test]
fn no_positives_is_an_error() {
    let g = DynamicGraph::from_binned(3, [(0, 1, 10)]);
    let ix = HistoryIndex::build(&g);
    assert!(builder(&g, &ix, 100).build_all(&[]).is_err());
}

/// Same-community indicator over communities {0,1} and {2,3}.
fn community_scores(sets: &EvalSets) -> HashMap<String, f64> {
    sets.iter_tagged()
        .map(|(_, s)| {
            let same = s.src.0 / 2 == s.dst.0 / 2;
            (s.key(), if same { 1.0 } else { 0.0 })
        })
        .collect()
}

#[test]
fn community_scorer_separates_random_endpoints() {
    let edges: Vec<(u32, u32, u64)> = (0..40)
        .map(|i| if i % 2 == 0 { (0, 1, i) } else { (3, 2, i) })
        .collect();
    let g = DynamicGraph::from_binned(4, edges);
    let ix = HistoryIndex::build(&g);
    let sets = builder(&g, &ix, 500).build_all(g.edges()).unwrap();
    let map = community_scores(&sets);
    let report = evaluate(&sets, ScoreSource::Imported(&map), "x", None, 0).unwrap();
    assert_eq!(report.auc(EvalCategory::RandomSender), Some(1.0));
    assert_eq!(report.auc(EvalCategory::RandomReceiver), Some(1.0));
}

#[test]
fn missing_imported_scores_are_listed() {
    let edges: Vec<(u32, u32, u64)> = (0..30).map(|i| (i % 5, (i + 1) % 5, i as u64)).collect();
    let g = DynamicGraph::from_binned(8, edges);
    let ix = HistoryIndex::build(&g);
    let sets = builder(&g, &ix, 500).build_all(g.edges()).unwrap();
    let mut map = community_scores(&sets);
    let dropped: Vec<String> = sets.positives.iter().take(12).map(|s| s.key()).collect();
    for k in &dropped {
        map.remove(k);
    }
    match evaluate(&sets, ScoreSource::Imported(&map), "x", None, 0) {
        Err(Error::MissingScores { missing, first }) => {
            assert_eq!(missing, 12);
            assert_eq!(first, dropped[..10]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn empty_category_reports_no_auc() {
    let g = DynamicGraph::from_binned(4, [(0, 1, 10), (2, 3, 11)]);
    let ix = HistoryIndex::build(&g);
    let sets = builder(&g, &ix, 100).build_all(g.edges()).unwrap();
    let scorer = ScorerSpec::new(ScorerKind::Constant).bind(&ix).unwrap();
    let report = evaluate(&sets, ScoreSource::Builtin(scorer), "x", None, 0).unwrap();
    let h24 = report.get(EvalCategory::H24).unwrap();
    assert_eq!((h24.auc, h24.n_neg, h24.shortfall), (None, 0, 2));
    assert!(h24.note.is_some());
    assert_eq!(report.auc(EvalCategory::Overall), Some(0.5));
}

fn two_month_split(spec: &RecurrenceSpec) -> MonthlySplit {
    let g = build_graph(&recurring_pairs(spec), 300).unwrap();
    let schedule = monthly_schedule(&g, None).unwrap();
    make_split(&g, &schedule[0], &schedule[1], 0.5).unwrap()
}

#[test]
fn memory_scorer_collapses_on_hour_probes() {
    let split = two_month_split(&RecurrenceSpec::default());
    let full = HistoryIndex::build(&split.graph);
    let train = HistoryIndex::build(&split.train);
    let sets = build_for_split(&split, &full, EvalConfig::default()).unwrap();
    let scorer = ScorerSpec::new(ScorerKind::Memory).bind(&train).unwrap();
    let report = evaluate(&sets, ScoreSource::Builtin(scorer), &split.label, None, 0).unwrap();
    let rr = report.auc(EvalCategory::RandomReceiver).unwrap();
    let h6 = report.auc(EvalCategory::H6).unwrap();
    assert!(rr - h6 >= 0.2, "rr {rr} h6 {h6}");
}

#[test]
fn reports_are_deterministic_and_conserve_negatives() {
    let split = two_month_split(&RecurrenceSpec {
        seed: 4,
        ..Default::default()
    });
    let full = HistoryIndex::build(&split.graph);
    let train = HistoryIndex::build(&split.train);
    let run = || {
        let sets = build_for_split(
            &split,
            &full,
            EvalConfig {
                seed: 9,
                ..Default::default()
            },
        )
        .unwrap();
        let scorer = ScorerSpec::new(ScorerKind::Recency).bind(&train).unwrap();
        evaluate(&sets, ScoreSource::Builtin(scorer), &split.label, Some("dins"), 9).unwrap()
    };
    let a = run();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&run()).unwrap()
    );
    let others: usize = a
        .categories
        .iter()
        .filter(|c| c.category != EvalCategory::Overall)
        .map(|c| c.n_neg)
        .sum();
    assert_eq!(a.get(EvalCategory::Overall).unwrap().n_neg, others);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn category_predicates_hold_under_a_scan(seed in any::<u64>(), n in 3usize..25, m in 20usize..300) {
        let mut rng = substream(seed, Domain::Synthetic, 1);
        let g = random_graph(&mut rng, n, m, 600);
        let ix = HistoryIndex::build(&g);
        let split_at = g.edge_count() / 2;
        let test = &g.edges()[split_at..];
        let last = g.t_max();
        let sets = EvalBuilder::new(&g, &ix, last, EvalConfig { seed, ..Default::default() })
            .build_all(test)
            .unwrap();
        let first = test.iter().map(|e| e.t).min().unwrap();
        let occurs = |s: &Sample| g.edges().iter().any(|e| e.src == s.src && e.dst == s.dst && e.t == s.t);
        for c in &sets.categories {
            prop_assert_eq!(c.negatives.len() + c.shortfall, test.len());
            for s in &c.negatives {
                prop_assert!(!occurs(s));
                match c.category {
                    EvalCategory::RandomSender => prop_assert!(test.iter().any(|e| e.dst == s.dst && e.t == s.t && e.src != s.src && e.dst != s.src)),
                    EvalCategory::RandomReceiver => prop_assert!(test.iter().any(|e| e.src == s.src && e.t == s.t && e.dst != s.dst && e.src != s.dst)),
                    EvalCategory::Loop => {
                        prop_assert_eq!(s.src, s.dst);
                        prop_assert!(!g.edges().iter().any(|e| e.is_loop() && e.src == s.src && e.t < first));
                    }
                    cat => {
                        let d = cat.offset().unwrap();
                        prop_assert!(s.t <= last);
                        prop_assert!(test.iter().any(|e| e.src == s.src && e.dst == s.dst && e.t.offset(d) == s.t));
                    }
                }
            }
        }
    }
}
