use dlp_eval_core::{
    batch_auc, mar_time_series, mean_auc_over_batches, mean_std, rank_within_group, NegativeStrategy, NodeId,
    Period, Role, ScoreRecord, ScoredEventLog, Timestamp,
};
use proptest::prelude::*;

fn pair_count_auc(p: &[f64], n: &[f64]) -> f64 {
    let (mut gt, mut eq) = (0u64, 0u64);
    for &a in p {
        for &b in n {
            if a > b {
                gt += 1;
            } else if a == b {
                eq += 1;
            }
        }
    }
    (gt as f64 + 0.5 * eq as f64) / (p.len() as f64 * n.len() as f64)
}

/// Scores on a coarse grid so ties are frequent.
fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..12).prop_map(|x| f64::from(x) / 4.0), 1..=100)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn auc_equals_pair_counting(p in scores(), n in scores()) {
        prop_assert_eq!(batch_auc(&p, &n).unwrap(), pair_count_auc(&p, &n));
    }

    #[test]
    fn auc_is_antisymmetric(p in scores(), n in scores()) {
        let a = batch_auc(&p, &n).unwrap();
        let b = batch_auc(&n, &p).unwrap();
        prop_assert!((a + b - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn auc_ignores_strictly_increasing_maps(p in scores(), n in scores()) {
        let f = |x: &f64| x.powi(3) + 2.0 * x - 7.0;
        let g = |x: &f64| x.exp();
        let a = batch_auc(&p, &n).unwrap();
        prop_assert_eq!(a, batch_auc(&p.iter().map(f).collect::<Vec<_>>(), &n.iter().map(f).collect::<Vec<_>>()).unwrap());
        prop_assert_eq!(a, batch_auc(&p.iter().map(g).collect::<Vec<_>>(), &n.iter().map(g).collect::<Vec<_>>()).unwrap());
    }

    #[test]
    fn fractional_ranks_sum_and_bounds(s in scores()) {
        let r = rank_within_group(&s);
        let n = s.len() as f64;
        prop_assert_eq!(r.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
        prop_assert!(r.iter().all(|&x| (1.0..=n).contains(&x)));
        // higher score never gets a worse rank
        for i in 0..s.len() {
            for j in 0..s.len() {
                if s[i] > s[j] {
                    prop_assert!(r[i] < r[j]);
                }
            }
        }
    }
}

fn rec(ordinal: u64, batch: u64, role: Role, t: f64, score: f64) -> ScoreRecord {
    ScoreRecord {
        event_ordinal: ordinal,
        batch,
        role,
        source: NodeId(0),
        destination: NodeId(1),
        timestamp: Timestamp::new(t).unwrap(),
        score,
    }
}

#[test]
fn mar_on_the_worked_ranks() {
    let he = Role::Negative(NegativeStrategy::HE);
    let oe = Role::Negative(NegativeStrategy::OE);
    // (positive, NS1, NS2) ranks per event: (1,2,3) (3,1,2) (2,3,1) (1,2,3)
    let ranks = [[1, 2, 3], [3, 1, 2], [2, 3, 1], [1, 2, 3]];
    let mut records = Vec::new();
    for (i, r) in ranks.iter().enumerate() {
        for (role, rank) in [Role::Positive, he, oe].into_iter().zip(r) {
            records.push(rec(i as u64, 0, role, i as f64, 1.0 / f64::from(*rank)));
        }
    }
    let log = ScoredEventLog { records };
    let mar = mar_time_series(&log, 1).unwrap();
    assert_eq!(
        mar.mar[mar.role_index(Role::Positive).unwrap()][0],
        Some(7.0 / 4.0)
    );
    assert_eq!(mar.mar[mar.role_index(he).unwrap()][0], Some(2.0));
    assert_eq!(mar.mar[mar.role_index(oe).unwrap()][0], Some(9.0 / 4.0));
}

#[test]
fn mean_auc_is_the_unweighted_batch_mean() {
    let he = Role::Negative(NegativeStrategy::HE);
    let mut records = Vec::new();
    // batch 0: 1 event, positive wins (1.0); batch 1: 3 events, all ties (0.5)
    records.push(rec(0, 0, Role::Positive, 1.0, 1.0));
    records.push(rec(0, 0, he, 1.0, 0.0));
    for i in 1..4 {
        records.push(rec(i, 1, Role::Positive, 2.0, 1.0));
        records.push(rec(i, 1, he, 2.0, 1.0));
    }
    let log = ScoredEventLog { records };
    let rep = mean_auc_over_batches(&log, NegativeStrategy::HE, Period::All, Timestamp::ZERO).unwrap();
    assert_eq!(rep.batches.len(), 2);
    assert_eq!(rep.mean, 0.75);
    let test = mean_auc_over_batches(
        &log,
        NegativeStrategy::HE,
        Period::Test,
        Timestamp::new(2.0).unwrap(),
    )
    .unwrap();
    assert_eq!(test.mean, 0.5);
}

#[test]
fn mean_std_is_population_based() {
    let (m, s) = mean_std(&[0.5, 0.7, 0.6, 0.8, 0.4]).unwrap();
    assert!((m - 0.6).abs() < 1e-15);
    assert!((s - 0.02f64.sqrt()).abs() < 1e-15);
    assert_eq!(mean_std(&[]), None);
}
