//! Memory-based heuristic scorers and the batched score-then-ingest harness.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::ctdg::{canonical_edge, EdgeKey, Event, GraphKind, History, NodeId, Timestamp};
use crate::error::{Error, Result};
use crate::sampling::{event_seed, sample_negatives, CandidateIndex, NegativeStrategy};

/// Batch size used by the reference experiments.
pub const DEFAULT_BATCH_SIZE: usize = 200;

/// Nodes and edges seen so far. Only ever grows.
#[derive(Clone, Debug)]
pub struct ScorerMemory {
    kind: GraphKind,
    seen_nodes: Vec<bool>,
    seen_edges: HashSet<EdgeKey>,
}

impl ScorerMemory {
    pub fn new(kind: GraphKind, node_count: usize) -> Self {
        ScorerMemory {
            kind,
            seen_nodes: vec![false; node_count],
            seen_edges: HashSet::new(),
        }
    }

    pub fn ingest(&mut self, e: &Event) {
        for n in [e.source, e.destination] {
            if n.index() >= self.seen_nodes.len() {
                self.seen_nodes.resize(n.index() + 1, false);
            }
            self.seen_nodes[n.index()] = true;
        }
        self.seen_edges
            .insert(canonical_edge(e.source, e.destination, self.kind));
    }

    pub fn has_node(&self, n: NodeId) -> bool {
        self.seen_nodes.get(n.index()).copied().unwrap_or(false)
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.seen_edges.contains(&canonical_edge(u, v, self.kind))
    }
}

/// 1 when both endpoints have been observed.
pub fn pa_score(e: &Event, m: &ScorerMemory) -> f64 {
    if m.has_node(e.source) && m.has_node(e.destination) {
        1.0
    } else {
        0.0
    }
}

/// 1 when the edge itself has been observed.
pub fn edgebank_score(e: &Event, m: &ScorerMemory) -> f64 {
    if m.has_edge(e.source, e.destination) {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScorerKind {
    PreferentialAttachment,
    EdgeBank,
    /// Scores produced outside this crate and imported via the score-log format.
    External,
}

impl ScorerKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::PreferentialAttachment => "pa",
            ScorerKind::EdgeBank => "edgebank",
            ScorerKind::External => "external",
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pa" | "preferential-attachment" => Ok(ScorerKind::PreferentialAttachment),
            "edgebank" => Ok(ScorerKind::EdgeBank),
            "external" => Ok(ScorerKind::External),
            other => Err(Error::InvalidArgument(format!("unknown scorer `{other}`"))),
        }
    }
}

/// Whether a record scores the positive event or one of its negatives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Positive,
    Negative(NegativeStrategy),
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Positive => "positive",
            Role::Negative(s) => s.as_str(),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("positive") {
            Ok(Role::Positive)
        } else {
            s.parse().map(Role::Negative)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoreRecord {
    pub event_ordinal: u64,
    pub batch: u64,
    pub role: Role,
    pub source: NodeId,
    pub destination: NodeId,
    pub timestamp: Timestamp,
    pub score: f64,
}

/// Per-event scores of each positive and its negatives.
///
/// Records of one event are contiguous, start with the positive and share its
/// timestamp; event ordinals increase through the log.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoredEventLog {
    pub records: Vec<ScoreRecord>,
}

impl ScoredEventLog {
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records grouped by event ordinal, in log order.
    pub fn groups(&self) -> impl Iterator<Item = &[ScoreRecord]> {
        self.records.chunk_by(|a, b| a.event_ordinal == b.event_ordinal)
    }

    /// Strategies present, in order of first appearance.
    pub fn strategies(&self) -> Vec<NegativeStrategy> {
        let mut out = Vec::new();
        for r in &self.records {
            if let Role::Negative(s) = r.role {
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn time_span(&self) -> Option<(Timestamp, Timestamp)> {
        let first = self.records.first()?.timestamp;
        let last = self.records.last()?.timestamp;
        Some((first, last))
    }

    /// Checks structural invariants: one positive per event, shared timestamps,
    /// increasing ordinals, non-decreasing batches and times, and (when given)
    /// that every strategy is declared.
    pub fn validate(&self, declared: Option<&[NegativeStrategy]>) -> Result<()> {
        let mut prev: Option<&ScoreRecord> = None;
        for group in self.groups() {
            let head = &group[0];
            if let Some(p) = prev {
                if head.event_ordinal <= p.event_ordinal {
                    return Err(Error::invalid_log(
                        None,
                        format!("event {} appears out of order or split", head.event_ordinal),
                    ));
                }
                if head.batch < p.batch {
                    return Err(Error::invalid_log(
                        None,
                        format!("batch ordinal decreases at event {}", head.event_ordinal),
                    ));
                }
                if head.timestamp < p.timestamp {
                    return Err(Error::invalid_log(
                        None,
                        format!("timestamp decreases at event {}", head.event_ordinal),
                    ));
                }
            }
            validate_group(group, declared)?;
            prev = Some(head);
        }
        Ok(())
    }
}

pub(crate) fn validate_group(group: &[ScoreRecord], declared: Option<&[NegativeStrategy]>) -> Result<()> {
    let head = &group[0];
    let ordinal = head.event_ordinal;
    let positives = group.iter().filter(|r| r.role == Role::Positive).count();
    if positives != 1 || head.role != Role::Positive {
        return Err(Error::invalid_log(
            None,
            format!("event {ordinal} must start with exactly one positive record, found {positives}"),
        ));
    }
    for r in group {
        if r.timestamp != head.timestamp {
            return Err(Error::invalid_log(
                None,
                format!(
                    "event {ordinal}: {} record at t={} differs from positive t={}",
                    r.role, r.timestamp, head.timestamp
                ),
            ));
        }
        if r.batch != head.batch {
            return Err(Error::invalid_log(
                None,
                format!("event {ordinal} spans several batches"),
            ));
        }
        if !r.score.is_finite() {
            return Err(Error::NonFiniteScore(r.score));
        }
        if let (Role::Negative(s), Some(decl)) = (r.role, declared) {
            if !decl.contains(&s) {
                return Err(Error::invalid_log(
                    None,
                    format!("strategy {s} is not declared in the header"),
                ));
            }
        }
    }
    Ok(())
}

/// What to do when a strategy has no legal candidate for some event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EmptyPolicy {
    /// Drop the whole event from the log and log a warning.
    #[default]
    Skip,
    Abort,
}

#[derive(Clone, Debug)]
pub struct EvalConfig {
    pub scorer: ScorerKind,
    pub strategies: Vec<NegativeStrategy>,
    pub k_per_strategy: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub on_empty: EmptyPolicy,
}

impl EvalConfig {
    pub fn new(scorer: ScorerKind, strategies: Vec<NegativeStrategy>) -> Self {
        EvalConfig {
            scorer,
            strategies,
            k_per_strategy: 1,
            batch_size: DEFAULT_BATCH_SIZE,
            seed: 0,
            on_empty: EmptyPolicy::Skip,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct EvalOutcome {
    pub log: ScoredEventLog,
    /// Ordinals of events dropped under [`EmptyPolicy::Skip`].
    pub skipped: Vec<u64>,
    pub batches: u64,
}

/// Batch boundaries over the full history. Batches never straddle the cutoff:
/// the train prefix and the test suffix are chunked separately.
pub fn batch_ranges(h: &History, t_split: Timestamp, batch_size: usize) -> Vec<std::ops::Range<usize>> {
    let boundary = h.count_before(t_split);
    let mut out = Vec::new();
    for (lo, hi) in [(0, boundary), (boundary, h.len())] {
        let mut start = lo;
        while start < hi {
            let end = (start + batch_size).min(hi);
            out.push(start..end);
            start = end;
        }
    }
    out
}

/// Streams the whole history through a memory-based scorer.
///
/// Each batch is first scored (positives and their negatives) against the
/// current memory, then its positives are ingested. Negatives never enter the
/// memory.
pub fn run_streaming_eval(h: &History, idx: &CandidateIndex, cfg: &EvalConfig) -> Result<EvalOutcome> {
    if cfg.strategies.is_empty() {
        return Err(Error::InvalidArgument("at least one strategy is required".into()));
    }
    if cfg.batch_size == 0 || cfg.k_per_strategy == 0 {
        return Err(Error::InvalidArgument("batch size and k must be positive".into()));
    }
    let score: fn(&Event, &ScorerMemory) -> f64 = match cfg.scorer {
        ScorerKind::PreferentialAttachment => pa_score,
        ScorerKind::EdgeBank => edgebank_score,
        ScorerKind::External => {
            return Err(Error::InvalidArgument(
                "external scores are imported from a score log, not computed".into(),
            ))
        }
    };

    let mut memory = ScorerMemory::new(h.kind(), h.node_count());
    let mut outcome = EvalOutcome::default();
    let events = h.events();
    for (batch, range) in batch_ranges(h, idx.t_split(), cfg.batch_size)
        .into_iter()
        .enumerate()
    {
        let batch = batch as u64;
        let memory_ref = &memory;
        let per_event: Vec<Result<Option<Vec<ScoreRecord>>>> = range
            .clone()
            .into_par_iter()
            .map(|i| score_event(i as u64, &events[i], batch, idx, cfg, memory_ref, score))
            .collect();
        for (i, res) in range.clone().zip(per_event) {
            match res? {
                Some(records) => outcome.log.records.extend(records),
                None => outcome.skipped.push(i as u64),
            }
        }
        for e in &events[range] {
            memory.ingest(e);
        }
        outcome.batches = batch + 1;
        if batch.is_multiple_of(500) {
            log::debug!("scored batch {batch}");
        }
    }
    if !outcome.skipped.is_empty() {
        log::warn!(
            "{} events skipped for lack of legal negative candidates",
            outcome.skipped.len()
        );
    }
    Ok(outcome)
}

fn score_event(
    ordinal: u64,
    pos: &Event,
    batch: u64,
    idx: &CandidateIndex,
    cfg: &EvalConfig,
    memory: &ScorerMemory,
    score: fn(&Event, &ScorerMemory) -> f64,
) -> Result<Option<Vec<ScoreRecord>>> {
    let record = |role, e: &Event| ScoreRecord {
        event_ordinal: ordinal,
        batch,
        role,
        source: e.source,
        destination: e.destination,
        timestamp: e.t,
        score: score(e, memory),
    };
    let mut out = Vec::with_capacity(1 + cfg.strategies.len() * cfg.k_per_strategy);
    out.push(record(Role::Positive, pos));
    for &strategy in &cfg.strategies {
        let seed = event_seed(cfg.seed, ordinal, strategy);
        match sample_negatives(pos, strategy, cfg.k_per_strategy, idx, seed) {
            Ok(batch) => out.extend(
                batch
                    .negatives
                    .iter()
                    .map(|n| record(Role::Negative(strategy), n)),
            ),
            Err(e @ Error::EmptyCandidateSet { .. }) => match cfg.on_empty {
                EmptyPolicy::Skip => {
                    log::warn!("event {ordinal}: {e}");
                    return Ok(None);
                }
                EmptyPolicy::Abort => return Err(e),
            },
            Err(e) => return Err(e),
        }
    }
    Ok(Some(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::build_candidate_index;

    fn ts(t: f64) -> Timestamp {
        Timestamp::new(t).unwrap()
    }

    #[test]
    fn pa_and_edgebank_basics() {
        let mut m = ScorerMemory::new(GraphKind::Directed, 4);
        let e01 = Event::new(0, 1, ts(1.0));
        assert_eq!(pa_score(&e01, &m), 0.0);
        assert_eq!(edgebank_score(&e01, &m), 0.0);
        m.ingest(&e01);
        m.ingest(&Event::new(2, 3, ts(2.0)));
        assert_eq!(edgebank_score(&e01, &m), 1.0);
        // both nodes seen, edge new: PA says yes, EdgeBank says no
        let e02 = Event::new(0, 2, ts(3.0));
        assert_eq!(pa_score(&e02, &m), 1.0);
        assert_eq!(edgebank_score(&e02, &m), 0.0);
        // directed: reverse edge unseen
        assert_eq!(edgebank_score(&Event::new(1, 0, ts(3.0)), &m), 0.0);
        let mut u = ScorerMemory::new(GraphKind::Undirected, 4);
        u.ingest(&e01);
        assert_eq!(edgebank_score(&Event::new(1, 0, ts(3.0)), &u), 1.0);
        // one endpoint unseen
        let mut p = ScorerMemory::new(GraphKind::Directed, 4);
        p.ingest(&e01);
        assert_eq!(pa_score(&Event::new(0, 3, ts(3.0)), &p), 0.0);
    }

    #[test]
    fn batches_split_at_cutoff() {
        let h =
            History::from_events(GraphKind::Directed, false, (0..10).map(|i| (0, 1, f64::from(i)))).unwrap();
        let r = batch_ranges(&h, ts(5.0), 3);
        assert_eq!(r, vec![0..3, 3..5, 5..8, 8..10]);
    }

    #[test]
    fn first_batch_scores_zero() {
        let h = History::from_events(
            GraphKind::Directed,
            false,
            [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0), (0, 1, 4.0), (3, 4, 5.0)],
        )
        .unwrap();
        let idx = build_candidate_index(&h, ts(4.0)).unwrap();
        let mut cfg = EvalConfig::new(ScorerKind::PreferentialAttachment, vec![NegativeStrategy::HE]);
        cfg.batch_size = 200;
        let out = run_streaming_eval(&h, &idx, &cfg).unwrap();
        let first_batch: Vec<_> = out.log.records.iter().filter(|r| r.batch == 0).collect();
        assert!(!first_batch.is_empty());
        assert!(first_batch.iter().all(|r| r.score == 0.0));
    }

    #[test]
    fn an_edge_first_seen_in_its_batch_scores_zero() {
        let h = History::from_events(
            GraphKind::Directed,
            false,
            [(0, 1, 1.0), (0, 1, 2.0), (2, 3, 3.0), (2, 3, 4.0)],
        )
        .unwrap();
        let idx = build_candidate_index(&h, ts(3.0)).unwrap();
        let mut cfg = EvalConfig::new(ScorerKind::EdgeBank, vec![NegativeStrategy::RND]);
        cfg.batch_size = 2;
        let out = run_streaming_eval(&h, &idx, &cfg).unwrap();
        let pos: Vec<f64> = out
            .log
            .records
            .iter()
            .filter(|r| r.role == Role::Positive)
            .map(|r| r.score)
            .collect();
        // (0,1) repeats inside batch 0, (2,3) inside batch 1: never scored 1
        assert_eq!(pos, vec![0.0, 0.0, 0.0, 0.0]);
        out.log.validate(Some(&[NegativeStrategy::RND])).unwrap();
    }

    #[test]
    fn external_scorer_is_rejected() {
        let h = History::from_events(GraphKind::Directed, false, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let idx = build_candidate_index(&h, ts(2.0)).unwrap();
        let cfg = EvalConfig::new(ScorerKind::External, vec![NegativeStrategy::HE]);
        assert!(run_streaming_eval(&h, &idx, &cfg).is_err());
    }

    #[test]
    fn abort_policy_propagates_empty_candidates() {
        let h = History::from_events(GraphKind::Directed, false, [(0, 1, 1.0), (1, 2, 2.0)]).unwrap();
        let idx = build_candidate_index(&h, ts(2.0)).unwrap();
        let mut cfg = EvalConfig::new(ScorerKind::EdgeBank, vec![NegativeStrategy::OE]);
        cfg.on_empty = EmptyPolicy::Abort;
        assert!(matches!(
            run_streaming_eval(&h, &idx, &cfg),
            Err(Error::EmptyCandidateSet { .. })
        ));
        cfg.on_empty = EmptyPolicy::Skip;
        let out = run_streaming_eval(&h, &idx, &cfg).unwrap();
        assert_eq!(out.skipped, vec![0, 1]);
        assert!(out.log.is_empty());
    }

    #[test]
    fn validate_rejects_broken_groups() {
        let rec = |ord, role, t: f64| ScoreRecord {
            event_ordinal: ord,
            batch: 0,
            role,
            source: NodeId(0),
            destination: NodeId(1),
            timestamp: ts(t),
            score: 0.5,
        };
        let he = Role::Negative(NegativeStrategy::HE);
        let ok = ScoredEventLog {
            records: vec![rec(0, Role::Positive, 1.0), rec(0, he, 1.0)],
        };
        ok.validate(Some(&[NegativeStrategy::HE])).unwrap();
        assert!(ok.validate(Some(&[NegativeStrategy::OE])).is_err());
        let mismatch = ScoredEventLog {
            records: vec![rec(0, Role::Positive, 1.0), rec(0, he, 2.0)],
        };
        assert!(mismatch.validate(None).is_err());
        let no_pos = ScoredEventLog {
            records: vec![rec(0, he, 1.0)],
        };
        assert!(no_pos.validate(None).is_err());
        let disorder = ScoredEventLog {
            records: vec![rec(1, Role::Positive, 2.0), rec(2, Role::Positive, 1.0)],
        };
        assert!(disorder.validate(None).is_err());
    }
}
