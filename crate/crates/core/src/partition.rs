//! Time-based splitting, birth/death lifetimes, Historical/Overlap/Inductive
//! categories and Surprise indices.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::ctdg::{EdgeKey, History, NodeId, Timestamp};
use crate::error::{Error, Result};

/// First and last time a node or edge takes part in an event. `birth <= death`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lifetime {
    pub birth: Timestamp,
    pub death: Timestamp,
}

impl Lifetime {
    fn point(t: Timestamp) -> Self {
        Lifetime { birth: t, death: t }
    }

    fn extend(&mut self, t: Timestamp) {
        if t < self.birth {
            self.birth = t;
        }
        if t > self.death {
            self.death = t;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TemporalCategory {
    Historical,
    Overlap,
    Inductive,
}

impl TemporalCategory {
    pub const ALL: [TemporalCategory; 3] = [
        TemporalCategory::Historical,
        TemporalCategory::Overlap,
        TemporalCategory::Inductive,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TemporalCategory::Historical => "historical",
            TemporalCategory::Overlap => "overlap",
            TemporalCategory::Inductive => "inductive",
        }
    }
}

impl fmt::Display for TemporalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which objects lifetimes are computed for. The role-split kinds only count
/// events where the node appears in that role.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KeyKind {
    Node,
    Edge,
    SourceNode,
    DestinationNode,
}

impl KeyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KeyKind::Node => "node",
            KeyKind::Edge => "edge",
            KeyKind::SourceNode => "source",
            KeyKind::DestinationNode => "destination",
        }
    }

    pub fn is_role_split(self) -> bool {
        matches!(self, KeyKind::SourceNode | KeyKind::DestinationNode)
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "node" => Ok(KeyKind::Node),
            "edge" => Ok(KeyKind::Edge),
            "source" => Ok(KeyKind::SourceNode),
            "destination" => Ok(KeyKind::DestinationNode),
            other => Err(Error::InvalidArgument(format!("unknown key kind `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Node(NodeId),
    Edge(EdgeKey),
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Node(n) => write!(f, "{n}"),
            Key::Edge(e) => write!(f, "{e}"),
        }
    }
}

/// Lifetimes of every key of one [`KeyKind`], sorted by key.
#[derive(Clone, Debug)]
pub struct LifetimeTable {
    pub kind: KeyKind,
    pub entries: Vec<(Key, Lifetime)>,
}

impl LifetimeTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &Key) -> Option<Lifetime> {
        self.entries
            .binary_search_by(|(k, _)| k.cmp(key))
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn counts(&self, t_split: Timestamp) -> PartitionRow {
        let mut by_cat = [0usize; 3];
        for (_, l) in &self.entries {
            by_cat[categorize(l, t_split).index()] += 1;
        }
        PartitionRow::new(self.kind, by_cat)
    }
}

/// Category of a key whose lifetime is `l`, for cutoff `t_split`.
pub fn categorize(l: &Lifetime, t_split: Timestamp) -> TemporalCategory {
    if l.death < t_split {
        TemporalCategory::Historical
    } else if l.birth >= t_split {
        TemporalCategory::Inductive
    } else {
        TemporalCategory::Overlap
    }
}

/// Cutoff such that roughly `test_ratio` of the events land in the test set.
///
/// The cutoff is the timestamp of the `floor((1 - test_ratio) * N) + 1`-th event
/// in time order. Events at exactly the cutoff are test events, so ties never
/// straddle the split.
pub fn compute_cutoff(h: &History, test_ratio: f64) -> Result<Timestamp> {
    if !(test_ratio > 0.0 && test_ratio < 1.0) {
        return Err(Error::InvalidRatio(test_ratio));
    }
    let events = h.events();
    if events.is_empty() {
        return Err(Error::EmptyStream);
    }
    let n = events.len();
    let idx = (((1.0 - test_ratio) * n as f64).floor() as usize).min(n - 1);
    let t_split = events[idx].t;
    if t_split <= events[0].t {
        return Err(Error::DegenerateSplit {
            t_split: t_split.get(),
        });
    }
    Ok(t_split)
}

/// `(train, test)` around `t_split`: train holds events strictly before it.
pub fn split(h: &History, t_split: Timestamp) -> (History, History) {
    h.split_at(t_split)
}

/// Birth and death of every key of the requested kind over the full history.
pub fn lifetimes(h: &History, kind: KeyKind) -> Result<LifetimeTable> {
    if kind.is_role_split() && !h.kind().is_directed() {
        return Err(Error::RoleKindOnUndirected(kind));
    }
    if h.is_empty() {
        return Err(Error::EmptyStream);
    }
    let entries = match kind {
        KeyKind::Edge => {
            let mut map: HashMap<EdgeKey, Lifetime> = HashMap::new();
            for e in h.events() {
                map.entry(h.edge_key(e))
                    .and_modify(|l| l.extend(e.t))
                    .or_insert_with(|| Lifetime::point(e.t));
            }
            let mut entries: Vec<(Key, Lifetime)> = map.into_iter().map(|(k, l)| (Key::Edge(k), l)).collect();
            entries.sort_unstable_by_key(|e| e.0);
            entries
        }
        _ => {
            let mut slots: Vec<Option<Lifetime>> = vec![None; h.node_count()];
            let mut touch = |n: NodeId, t: Timestamp| match &mut slots[n.index()] {
                Some(l) => l.extend(t),
                slot @ None => *slot = Some(Lifetime::point(t)),
            };
            for e in h.events() {
                match kind {
                    KeyKind::SourceNode => touch(e.source, e.t),
                    KeyKind::DestinationNode => touch(e.destination, e.t),
                    _ => {
                        touch(e.source, e.t);
                        touch(e.destination, e.t);
                    }
                }
            }
            slots
                .into_iter()
                .enumerate()
                .filter_map(|(i, l)| l.map(|l| (Key::Node(NodeId(i as u32)), l)))
                .collect()
        }
    };
    Ok(LifetimeTable { kind, entries })
}

/// Category counts for one key kind.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionRow {
    pub kind: KeyKind,
    pub total: usize,
    pub historical: usize,
    pub overlap: usize,
    pub inductive: usize,
    /// `inductive / (inductive + overlap)`; `None` when no key reaches the test set.
    pub surprise: Option<f64>,
}

impl PartitionRow {
    fn new(kind: KeyKind, by_cat: [usize; 3]) -> Self {
        let [historical, overlap, inductive] = by_cat;
        let active = inductive + overlap;
        PartitionRow {
            kind,
            total: historical + overlap + inductive,
            historical,
            overlap,
            inductive,
            surprise: (active > 0).then(|| inductive as f64 / active as f64),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartitionReport {
    pub t_split: Timestamp,
    pub rows: Vec<PartitionRow>,
}

impl PartitionReport {
    pub fn row(&self, kind: KeyKind) -> Option<&PartitionRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }
}

pub fn partition_report(h: &History, t_split: Timestamp, kinds: &[KeyKind]) -> Result<PartitionReport> {
    let rows = kinds
        .iter()
        .map(|&k| lifetimes(h, k).map(|table| table.counts(t_split)))
        .collect::<Result<Vec<_>>>()?;
    Ok(PartitionReport { t_split, rows })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub ratio: f64,
    pub t_split: Timestamp,
    pub node_surprise: Option<f64>,
    pub edge_surprise: Option<f64>,
}

/// Node and edge Surprise index for each test ratio, in the given order.
pub fn surprise_sweep(h: &History, ratios: &[f64]) -> Result<Vec<SweepPoint>> {
    let nodes = lifetimes(h, KeyKind::Node)?;
    let edges = lifetimes(h, KeyKind::Edge)?;
    ratios
        .iter()
        .map(|&ratio| {
            let t_split = compute_cutoff(h, ratio)?;
            Ok(SweepPoint {
                ratio,
                t_split,
                node_surprise: nodes.counts(t_split).surprise,
                edge_surprise: edges.counts(t_split).surprise,
            })
        })
        .collect()
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `kind,total,historical,overlap,inductive,surprise`; undefined surprise is `NA`.
pub fn write_partition_csv<W: Write>(report: &PartitionReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["kind", "total", "historical", "overlap", "inductive", "surprise"])?;
    for r in &report.rows {
        w.write_record([
            r.kind.as_str().to_string(),
            r.total.to_string(),
            r.historical.to_string(),
            r.overlap.to_string(),
            r.inductive.to_string(),
            fmt_opt(r.surprise),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `ratio,node_surprise,edge_surprise`.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ratio", "node_surprise", "edge_surprise"])?;
    for p in points {
        w.write_record([
            p.ratio.to_string(),
            fmt_opt(p.node_surprise),
            fmt_opt(p.edge_surprise),
        ])?;
    }
    w.flush()?;
    Ok(())
}
