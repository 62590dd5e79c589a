#![allow(dead_code)]

use dlp_eval_core::{GraphKind, History, Timestamp};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn ts(t: f64) -> Timestamp {
    Timestamp::new(t).unwrap()
}

/// Random stream over `nodes` ids with integer timestamps in `0..horizon`
/// (so ties are common). Bipartite streams use ids `0..nodes/2` as sources.
pub fn random_history(seed: u64, events: usize, nodes: u32, horizon: u32, kind: GraphKind) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = (nodes / 2).max(1);
    let raw: Vec<(u32, u32, f64)> = (0..events)
        .map(|_| {
            let t = f64::from(rng.gen_range(0..horizon));
            if kind.is_bipartite() {
                (rng.gen_range(0..half), half + rng.gen_range(0..half), t)
            } else {
                let u = rng.gen_range(0..nodes);
                let mut v = rng.gen_range(0..nodes - 1);
                if v >= u {
                    v += 1;
                }
                (u, v, t)
            }
        })
        .collect();
    History::from_events(kind, false, raw).unwrap()
}

pub fn graph_kind() -> impl Strategy<Value = GraphKind> {
    prop_oneof![
        Just(GraphKind::Directed),
        Just(GraphKind::Undirected),
        Just(GraphKind::Bipartite)
    ]
}

/// (seed, events, nodes, horizon, kind)
pub fn history_params() -> impl Strategy<Value = (u64, usize, u32, u32, GraphKind)> {
    (any::<u64>(), 2usize..300, 4u32..40, 2u32..60, graph_kind())
}

/// Stream whose active node window slides from low to high ids, so early
/// nodes retire (Historical), middle ones span the cutoff (Overlap) and late
/// ones are new (Inductive). Timestamps are `0..events` with occasional ties.
pub fn sliding_history(seed: u64, events: usize, nodes: u32, kind: GraphKind) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = (nodes / 4).max(3);
    let raw: Vec<(u32, u32, f64)> = (0..events)
        .map(|i| {
            let lo = (i as u64 * u64::from(nodes - window) / events as u64) as u32;
            let t = (i / 2) as f64;
            if kind.is_bipartite() {
                // sources even ids, destinations odd ids
                let u = (lo + rng.gen_range(0..window)) & !1;
                let v = (lo + rng.gen_range(0..window)) | 1;
                (u, v, t)
            } else {
                let u = lo + rng.gen_range(0..window);
                let mut v = lo + rng.gen_range(0..window - 1);
                if v >= u {
                    v += 1;
                }
                (u, v, t)
            }
        })
        .collect();
    History::from_events(kind, false, raw).unwrap()
}
