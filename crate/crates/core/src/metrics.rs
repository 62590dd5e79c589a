//! Threshold confusion matrices, per-batch ROC AUC, fractional ranks and the
//! mean-average-rank (MAR) time series.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::io::Write;

use crate::ctdg::Timestamp;
use crate::error::{Error, Result};
use crate::partition::fmt_opt;
use crate::sampling::NegativeStrategy;
use crate::scorers::{Role, ScoredEventLog};

/// Default number of equal-width time bins for MAR.
pub const DEFAULT_BINS: usize = 50;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

/// Positives and `strategy` negatives with score `>= threshold` are predicted positive.
pub fn confusion_at_threshold(
    log: &ScoredEventLog,
    strategy: NegativeStrategy,
    threshold: f64,
) -> Result<ConfusionMatrix> {
    let negative = Role::Negative(strategy);
    if !log.records.iter().any(|r| r.role == negative) {
        return Err(Error::StrategyNotInLog(strategy));
    }
    let mut m = ConfusionMatrix::default();
    for r in &log.records {
        let predicted = r.score >= threshold;
        match (r.role, predicted) {
            (Role::Positive, true) => m.tp += 1,
            (Role::Positive, false) => m.fn_ += 1,
            (role, true) if role == negative => m.fp += 1,
            (role, false) if role == negative => m.tn += 1,
            _ => {}
        }
    }
    Ok(m)
}

/// Rank-statistic AUC with half credit for ties:
/// `(#{p > n} + 0.5 #{p = n}) / (|P| |N|)`.
pub fn batch_auc(positive_scores: &[f64], negative_scores: &[f64]) -> Result<f64> {
    if positive_scores.is_empty() {
        return Err(Error::UndefinedAuc("positive"));
    }
    if negative_scores.is_empty() {
        return Err(Error::UndefinedAuc("negative"));
    }
    if let Some(&bad) = positive_scores
        .iter()
        .chain(negative_scores)
        .find(|s| !s.is_finite())
    {
        return Err(Error::NonFiniteScore(bad));
    }
    let mut neg = negative_scores.to_vec();
    neg.sort_unstable_by(f64::total_cmp);
    let (mut greater, mut ties) = (0u64, 0u64);
    for &p in positive_scores {
        let below = neg.partition_point(|&n| n < p);
        let upto = neg.partition_point(|&n| n <= p);
        greater += below as u64;
        ties += (upto - below) as u64;
    }
    let pairs = positive_scores.len() as f64 * negative_scores.len() as f64;
    Ok((greater as f64 + 0.5 * ties as f64) / pairs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Period {
    Train,
    Test,
    All,
}

impl Period {
    fn contains(self, t: Timestamp, t_split: Timestamp) -> bool {
        match self {
            Period::Train => t < t_split,
            Period::Test => t >= t_split,
            Period::All => true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchAuc {
    pub batch: u64,
    pub t_start: Timestamp,
    pub t_end: Timestamp,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchAucReport {
    pub strategy: NegativeStrategy,
    pub batches: Vec<BatchAuc>,
    /// Unweighted mean over usable batches.
    pub mean: f64,
    /// Batches in the period lacking positives or negatives.
    pub excluded: usize,
}

/// Averages per-batch AUCs for one strategy. Each batch AUC only sees that
/// batch's records.
pub fn mean_auc_over_batches(
    log: &ScoredEventLog,
    strategy: NegativeStrategy,
    period: Period,
    t_split: Timestamp,
) -> Result<BatchAucReport> {
    let negative = Role::Negative(strategy);
    if !log.records.iter().any(|r| r.role == negative) {
        return Err(Error::StrategyNotInLog(strategy));
    }
    let in_period = log
        .records
        .iter()
        .filter(|r| period.contains(r.timestamp, t_split))
        .collect::<Vec<_>>();

    let mut batches = Vec::new();
    let mut excluded = 0;
    for chunk in in_period.chunk_by(|a, b| a.batch == b.batch) {
        let (mut pos, mut neg) = (Vec::new(), Vec::new());
        for r in chunk {
            match r.role {
                Role::Positive => pos.push(r.score),
                role if role == negative => neg.push(r.score),
                _ => {}
            }
        }
        if pos.is_empty() || neg.is_empty() {
            excluded += 1;
            continue;
        }
        batches.push(BatchAuc {
            batch: chunk[0].batch,
            t_start: chunk[0].timestamp,
            t_end: chunk[chunk.len() - 1].timestamp,
            auc: batch_auc(&pos, &neg)?,
        });
    }
    if batches.is_empty() {
        return Err(Error::NoUsableBatches);
    }
    let mean = batches.iter().map(|b| b.auc).sum::<f64>() / batches.len() as f64;
    Ok(BatchAucReport {
        strategy,
        batches,
        mean,
        excluded,
    })
}

/// Mean and population standard deviation of a set of values (e.g. mean AUCs
/// from several model seeds).
pub fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Some((mean, var.sqrt()))
}

/// Fractional ranks within one comparison group: rank 1 is the highest score,
/// tied members share the average of their positions.
pub fn rank_within_group(scores: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0.0; scores.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j share their mean
        let rank = (i + 1 + j) as f64 / 2.0;
        for &m in &order[i..j] {
            ranks[m] = rank;
        }
        i = j;
    }
    ranks
}

/// Mean fractional rank per role over equal-width time bins.
#[derive(Clone, Debug, PartialEq)]
pub struct MarSeries {
    /// `bins + 1` bin edges spanning the log's time range.
    pub edges: Vec<f64>,
    pub roles: Vec<Role>,
    /// `mar[role][bin]`; `None` for bins with no record of that role.
    pub mar: Vec<Vec<Option<f64>>>,
    pub counts: Vec<Vec<usize>>,
}

impl MarSeries {
    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn role_index(&self, role: Role) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }

    pub fn is_all_missing(&self) -> bool {
        self.mar.iter().flatten().all(Option::is_none)
    }
}

/// Bins are closed on the left; the last bin is closed on both ends.
pub fn mar_time_series(log: &ScoredEventLog, bins: usize) -> Result<MarSeries> {
    if bins < 1 {
        return Err(Error::InvalidArgument("need at least one bin".into()));
    }
    let (first, last) = log
        .time_span()
        .ok_or_else(|| Error::InvalidArgument("score log is empty".into()))?;
    let (lo, hi) = (first.get(), last.get());
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();

    let mut roles = vec![Role::Positive];
    roles.extend(log.strategies().into_iter().map(Role::Negative));
    let role_pos: BTreeMap<Role, usize> = roles.iter().enumerate().map(|(i, &r)| (r, i)).collect();

    let mut sums = vec![vec![0.0; bins]; roles.len()];
    let mut counts = vec![vec![0usize; bins]; roles.len()];
    for group in log.groups() {
        let t = group[0].timestamp.get();
        let bin = if width > 0.0 {
            (((t - lo) / width).floor() as usize).min(bins - 1)
        } else {
            0
        };
        let scores: Vec<f64> = group.iter().map(|r| r.score).collect();
        for (r, rank) in group.iter().zip(rank_within_group(&scores)) {
            let i = role_pos[&r.role];
            sums[i][bin] += rank;
            counts[i][bin] += 1;
        }
    }
    let mar = sums
        .iter()
        .zip(&counts)
        .map(|(s, c)| {
            s.iter()
                .zip(c)
                .map(|(&s, &c)| (c > 0).then(|| s / c as f64))
                .collect()
        })
        .collect();
    Ok(MarSeries {
        edges,
        roles,
        mar,
        counts,
    })
}

/// `strategy,batch,t_start,t_end,auc`
pub fn write_auc_csv<W: Write>(reports: &[BatchAucReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["strategy", "batch", "t_start", "t_end", "auc"])?;
    for rep in reports {
        for b in &rep.batches {
            w.write_record([
                rep.strategy.to_string(),
                b.batch.to_string(),
                b.t_start.to_string(),
                b.t_end.to_string(),
                b.auc.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `bin,t_start,t_end,role,mar,count`; empty bins carry `NA`.
pub fn write_mar_csv<W: Write>(series: &MarSeries, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["bin", "t_start", "t_end", "role", "mar", "count"])?;
    for bin in 0..series.bins() {
        for (i, role) in series.roles.iter().enumerate() {
            w.write_record([
                bin.to_string(),
                series.edges[bin].to_string(),
                series.edges[bin + 1].to_string(),
                role.to_string(),
                fmt_opt(series.mar[i][bin]),
                series.counts[i][bin].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
