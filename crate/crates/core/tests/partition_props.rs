mod common;

use std::collections::{BTreeMap, HashSet};

use common::{history_params, random_history, ts};
use dlp_eval_core::{
    canonical_edge, categorize, compute_cutoff, ingest_csv, lifetimes, partition_report, surprise_sweep,
    write_minimal_csv, GraphKind, History, IngestOptions, Key, KeyKind, Lifetime, NodeId, Schema,
    TemporalCategory, Timestamp,
};
use proptest::prelude::*;

fn brute_node_lifetimes(h: &History) -> BTreeMap<u32, (f64, f64)> {
    let mut out = BTreeMap::new();
    let ids: HashSet<u32> = h
        .events()
        .iter()
        .flat_map(|e| [e.source.0, e.destination.0])
        .collect();
    for id in ids {
        let times: Vec<f64> = h
            .events()
            .iter()
            .filter(|e| e.source.0 == id || e.destination.0 == id)
            .map(|e| e.t.get())
            .collect();
        let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        out.insert(id, (lo, hi));
    }
    out
}

#[test]
fn node_lifetimes_match_brute_force_on_ten_thousand_events() {
    for kind in [GraphKind::Directed, GraphKind::Undirected, GraphKind::Bipartite] {
        let h = random_history(11, 10_000, 300, 5_000, kind);
        let table = lifetimes(&h, KeyKind::Node).unwrap();
        let oracle = brute_node_lifetimes(&h);
        assert_eq!(table.len(), oracle.len());
        for (key, l) in &table.entries {
            let Key::Node(n) = key else {
                panic!("node table holds {key}")
            };
            let (b, d) = oracle[&n.0];
            assert_eq!((l.birth.get(), l.death.get()), (b, d), "node {n:?}");
        }
    }
}

#[test]
fn edge_lifetimes_match_brute_force() {
    let h = random_history(12, 10_000, 60, 5_000, GraphKind::Undirected);
    let table = lifetimes(&h, KeyKind::Edge).unwrap();
    let mut oracle: BTreeMap<(u32, u32), (f64, f64)> = BTreeMap::new();
    for e in h.events() {
        let k = (e.source.0.min(e.destination.0), e.source.0.max(e.destination.0));
        let t = e.t.get();
        let s = oracle.entry(k).or_insert((t, t));
        s.0 = s.0.min(t);
        s.1 = s.1.max(t);
    }
    assert_eq!(table.len(), oracle.len());
    for (key, l) in &table.entries {
        let Key::Edge(k) = key else { panic!() };
        assert_eq!(oracle[&(k.a.0, k.b.0)], (l.birth.get(), l.death.get()));
    }
}

#[test]
fn the_edge_count_can_fall_below_the_inductive_node_count() {
    // Two new nodes sharing one new edge: 2 inductive nodes, 1 inductive edge.
    let h = History::from_events(
        GraphKind::Directed,
        false,
        [(0, 1, 1.0), (1, 2, 2.0), (0, 1, 5.0), (1, 2, 6.0), (3, 4, 7.0)],
    )
    .unwrap();
    let r = partition_report(&h, ts(5.0), &[KeyKind::Node, KeyKind::Edge]).unwrap();
    assert_eq!(r.row(KeyKind::Node).unwrap().inductive, 2);
    assert_eq!(r.row(KeyKind::Edge).unwrap().inductive, 1);
}

/// The three A-F scenarios with A..D = 0..3 fully connected (directed, one
/// event per pair in train and in test), split at t = 10.
fn scenario(extra: &[(u32, u32)]) -> History {
    let mut ev = Vec::new();
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    for (i, &(u, v)) in pairs.iter().enumerate() {
        ev.push((u, v, 1.0 + i as f64));
        ev.push((u, v, 11.0 + i as f64));
    }
    for (i, &(u, v)) in extra.iter().enumerate() {
        ev.push((u, v, 20.0 + i as f64));
    }
    History::from_events(GraphKind::Directed, false, ev).unwrap()
}

#[test]
fn worked_surprise_examples() {
    type Case<'a> = (&'a [(u32, u32)], f64, f64);
    let cases: [Case; 3] = [
        (&[(4, 0)], 1.0 / 5.0, 1.0 / 7.0),
        (&[(4, 0), (4, 1), (4, 2), (4, 3)], 1.0 / 5.0, 4.0 / 10.0),
        (&[(4, 5), (5, 4)], 2.0 / 6.0, 2.0 / 8.0),
    ];
    for (extra, node, edge) in cases {
        let h = scenario(extra);
        let r = partition_report(&h, ts(10.0), &[KeyKind::Node, KeyKind::Edge]).unwrap();
        assert_eq!(r.row(KeyKind::Node).unwrap().surprise, Some(node));
        assert_eq!(r.row(KeyKind::Edge).unwrap().surprise, Some(edge));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_key_gets_exactly_one_category((seed, n, nodes, horizon, kind) in history_params(), ratio in 0.01f64..0.99) {
        let h = random_history(seed, n, nodes, horizon, kind);
        let Ok(t) = compute_cutoff(&h, ratio) else { return Ok(()); };
        let mut kinds = vec![KeyKind::Node, KeyKind::Edge];
        if kind.is_directed() {
            kinds.extend([KeyKind::SourceNode, KeyKind::DestinationNode]);
        }
        let report = partition_report(&h, t, &kinds).unwrap();
        for row in &report.rows {
            prop_assert_eq!(row.historical + row.overlap + row.inductive, row.total);
            let table = lifetimes(&h, row.kind).unwrap();
            prop_assert_eq!(table.len(), row.total);
            let mut seen = [0usize; 3];
            for (_, l) in &table.entries {
                seen[categorize(l, t).index()] += 1;
            }
            prop_assert_eq!(seen, [row.historical, row.overlap, row.inductive]);
            match row.surprise {
                Some(s) => prop_assert!((0.0..=1.0).contains(&s)),
                None => prop_assert_eq!(row.inductive + row.overlap, 0),
            }
        }
        let nodes = report.row(KeyKind::Node).unwrap();
        prop_assert_eq!(nodes.total, h.events().iter().flat_map(|e| [e.source, e.destination]).collect::<HashSet<_>>().len());
    }

    #[test]
    fn inductive_nodes_only_touch_inductive_edges((seed, n, nodes, horizon, kind) in history_params(), ratio in 0.01f64..0.99) {
        let h = random_history(seed, n, nodes, horizon, kind);
        let Ok(t) = compute_cutoff(&h, ratio) else { return Ok(()); };
        let node_table = lifetimes(&h, KeyKind::Node).unwrap();
        let edge_table = lifetimes(&h, KeyKind::Edge).unwrap();
        let inductive: HashSet<NodeId> = node_table.entries.iter()
            .filter(|(_, l)| categorize(l, t) == TemporalCategory::Inductive)
            .map(|(k, _)| match k { Key::Node(n) => *n, _ => unreachable!() })
            .collect();
        let mut inductive_edges = 0;
        for (k, l) in &edge_table.entries {
            let Key::Edge(e) = k else { unreachable!() };
            let cat = categorize(l, t);
            if inductive.contains(&e.a) || inductive.contains(&e.b) {
                prop_assert_eq!(cat, TemporalCategory::Inductive);
            }
            if cat == TemporalCategory::Inductive {
                inductive_edges += 1;
            }
        }
        // each inductive edge covers at most two inductive nodes
        prop_assert!(2 * inductive_edges >= inductive.len());
    }

    #[test]
    fn categories_are_invariant_under_positive_affine_time_maps(
        (seed, n, nodes, horizon, kind) in history_params(),
        ratio in 0.01f64..0.99,
        a in 1u32..50,
        b in 0u32..1000,
    ) {
        let h = random_history(seed, n, nodes, horizon, kind);
        let Ok(t) = compute_cutoff(&h, ratio) else { return Ok(()); };
        let (a, b) = (f64::from(a), f64::from(b));
        let mapped = History::from_events(
            kind,
            false,
            h.events().iter().map(|e| (e.source.0, e.destination.0, a * e.t.get() + b)),
        ).unwrap();
        let t2 = compute_cutoff(&mapped, ratio).unwrap();
        prop_assert_eq!(t2.get(), a * t.get() + b);
        let r1 = partition_report(&h, t, &[KeyKind::Node, KeyKind::Edge]).unwrap();
        let r2 = partition_report(&mapped, t2, &[KeyKind::Node, KeyKind::Edge]).unwrap();
        for (x, y) in r1.rows.iter().zip(&r2.rows) {
            prop_assert_eq!((x.historical, x.overlap, x.inductive), (y.historical, y.overlap, y.inductive));
        }
    }

    #[test]
    fn slices_and_indexes_agree_with_scans((seed, n, nodes, horizon, kind) in history_params(), cut in 0u32..60) {
        let h = random_history(seed, n, nodes, horizon, kind);
        let t = ts(f64::from(cut));
        let before = h.events().iter().filter(|e| e.t < t).count();
        prop_assert_eq!(h.count_before(t), before);
        prop_assert_eq!(h.slice_until(t).len(), before);
        let (train, test) = h.split_at(t);
        prop_assert_eq!(train.len() + test.len(), h.len());
        prop_assert!(test.events().iter().all(|e| e.t >= t));
        prop_assert!(h.events().windows(2).all(|w| w[0].t <= w[1].t));
        for u in 0..h.node_count() as u32 {
            let expected: Vec<u32> = h.events().iter().enumerate()
                .filter(|(_, e)| e.source.0 == u || e.destination.0 == u)
                .map(|(i, _)| i as u32)
                .collect();
            prop_assert_eq!(h.node_events(NodeId(u)), &expected[..]);
        }
        if let Some(e) = h.events().first() {
            let key = canonical_edge(e.source, e.destination, kind);
            let expected: Vec<u32> = h.events().iter().enumerate()
                .filter(|(_, x)| canonical_edge(x.source, x.destination, kind) == key)
                .map(|(i, _)| i as u32)
                .collect();
            prop_assert_eq!(h.edge_events(e.source, e.destination), &expected[..]);
        }
    }

    #[test]
    fn minimal_csv_round_trips((seed, n, nodes, horizon, kind) in history_params()) {
        let h = random_history(seed, n, nodes, horizon, kind);
        let mut buf = Vec::new();
        write_minimal_csv(&h, &mut buf).unwrap();
        let back = ingest_csv(&buf[..], &IngestOptions::new(Schema::Minimal, kind)).unwrap();
        prop_assert_eq!(back.len(), h.len());
        for (x, y) in h.events().iter().zip(back.events()) {
            prop_assert_eq!(h.label(x.source), back.label(y.source));
            prop_assert_eq!(h.label(x.destination), back.label(y.destination));
            prop_assert_eq!(x.t, y.t);
        }
    }
}

#[test]
fn cutoff_puts_the_requested_share_in_test() {
    let h = History::from_events(GraphKind::Directed, false, (0..100).map(|i| (0, 1, f64::from(i)))).unwrap();
    let t = compute_cutoff(&h, 0.15).unwrap();
    assert_eq!(t, ts(85.0));
    assert_eq!(h.len() - h.count_before(t), 15);
}

#[test]
fn sweep_is_monotone_in_ratio_for_the_test_share() {
    let h = random_history(5, 2000, 80, 1000, GraphKind::Directed);
    let ratios = [0.1, 0.2, 0.3, 0.4, 0.5];
    let pts = surprise_sweep(&h, &ratios).unwrap();
    assert_eq!(pts.len(), 5);
    assert!(pts.windows(2).all(|w| w[0].t_split >= w[1].t_split));
}

#[test]
fn lifetime_categories_at_boundaries() {
    let l = Lifetime {
        birth: ts(1.0),
        death: ts(5.0),
    };
    assert_eq!(categorize(&l, ts(5.0)), TemporalCategory::Overlap);
    assert_eq!(
        categorize(&l, Timestamp::new(5.5).unwrap()),
        TemporalCategory::Historical
    );
    assert_eq!(categorize(&l, ts(1.0)), TemporalCategory::Inductive);
}
