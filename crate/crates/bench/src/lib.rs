//! Synthetic workloads for the benchmarks.

use dlp_eval_core::{GraphKind, History};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Directed stream of `events` interactions drawn from a fixed pool of
/// `routes` node pairs over `nodes` nodes, four events per time step.
pub fn route_stream(seed: u64, events: usize, nodes: u32, routes: usize) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<(u32, u32)> = (0..routes)
        .map(|_| {
            let u = rng.gen_range(0..nodes);
            (u, (u + rng.gen_range(1..nodes)) % nodes)
        })
        .collect();
    let raw = (0..events).map(|i| {
        let (u, v) = pool[rng.gen_range(0..pool.len())];
        (u, v, (i / 4) as f64)
    });
    History::from_events(GraphKind::Directed, false, raw).expect("valid synthetic stream")
}

/// Stream whose active node window slides upwards over time, so Historical,
/// Overlap and Inductive keys all occur.
pub fn sliding_stream(seed: u64, events: usize, nodes: u32) -> History {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let window = (nodes / 4).max(3);
    let raw = (0..events).map(|i| {
        let lo = (i as u64 * u64::from(nodes - window) / events as u64) as u32;
        let u = lo + rng.gen_range(0..window);
        let mut v = lo + rng.gen_range(0..window - 1);
        if v >= u {
            v += 1;
        }
        (u, v, (i / 2) as f64)
    });
    History::from_events(GraphKind::Directed, false, raw).expect("valid synthetic stream")
}

/// `n` scores on a coarse grid, so ties are common.
pub fn tied_scores(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| f64::from(rng.gen_range(0..16u32)) / 16.0)
        .collect()
}
