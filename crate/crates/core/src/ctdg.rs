//! Event-stream data model for continuous-time dynamic graphs.
//!
//! A [`History`] is the chronologically ordered stream of `(source, destination, t)`
//! interactions. Original node labels are remapped once, at ingestion, to dense
//! ids `0..node_count`; everything downstream works on [`NodeId`]s.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite, non-negative point in time, in dataset units.
///
/// Because NaN and infinities are excluded at construction, timestamps are
/// totally ordered and hashable.
#[derive(Clone, Copy, Debug, Default)]
pub struct Timestamp(f64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);

    pub fn new(t: f64) -> Result<Self> {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidTimestamp(t));
        }
        // fold -0.0 into 0.0 so equality and hashing agree
        Ok(Timestamp(t + 0.0))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl PartialEq for Timestamp {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl Eq for Timestamp {}

impl PartialOrd for Timestamp {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Timestamp {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl Hash for Timestamp {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // shortest representation that parses back to the same f64
        write!(f, "{}", self.0)
    }
}

impl TryFrom<f64> for Timestamp {
    type Error = Error;

    fn try_from(t: f64) -> Result<Self> {
        Timestamp::new(t)
    }
}

/// One interaction of `source` with `destination` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub source: NodeId,
    pub destination: NodeId,
    pub t: Timestamp,
}

impl Event {
    pub fn new(source: u32, destination: u32, t: Timestamp) -> Self {
        Event {
            source: NodeId(source),
            destination: NodeId(destination),
            t,
        }
    }
}

/// Graph semantics, declared by the user and never inferred.
///
/// `Bipartite` graphs have directed semantics: sources and destinations are
/// disjoint node universes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GraphKind {
    Directed,
    Undirected,
    Bipartite,
}

impl GraphKind {
    pub fn is_directed(self) -> bool {
        !matches!(self, GraphKind::Undirected)
    }

    pub fn is_bipartite(self) -> bool {
        matches!(self, GraphKind::Bipartite)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GraphKind::Directed => "directed",
            GraphKind::Undirected => "undirected",
            GraphKind::Bipartite => "bipartite",
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "directed" => Ok(GraphKind::Directed),
            "undirected" => Ok(GraphKind::Undirected),
            "bipartite" => Ok(GraphKind::Bipartite),
            other => Err(Error::InvalidArgument(format!("unknown graph kind `{other}`"))),
        }
    }
}

/// A node pair independent of time. Undirected keys always satisfy `a <= b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeKey {
    pub a: NodeId,
    pub b: NodeId,
}

impl fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.a, self.b)
    }
}

pub fn canonical_edge(u: NodeId, v: NodeId, kind: GraphKind) -> EdgeKey {
    if kind.is_directed() || u <= v {
        EdgeKey { a: u, b: v }
    } else {
        EdgeKey { a: v, b: u }
    }
}

/// Column layout of an input CSV.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Schema {
    /// `source,destination,timestamp`
    Minimal,
    /// `user_id,item_id,timestamp,state_label,features...`; columns past the third are ignored.
    Jodie,
}

impl FromStr for Schema {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "minimal" => Ok(Schema::Minimal),
            "jodie" => Ok(Schema::Jodie),
            other => Err(Error::InvalidArgument(format!("unknown schema `{other}`"))),
        }
    }
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Schema::Minimal => "minimal",
            Schema::Jodie => "jodie",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IngestOptions {
    pub schema: Schema,
    pub kind: GraphKind,
    pub allow_self_loops: bool,
}

impl IngestOptions {
    pub fn new(schema: Schema, kind: GraphKind) -> Self {
        IngestOptions {
            schema,
            kind,
            allow_self_loops: false,
        }
    }
}

/// The chronologically ordered stream of all interactions.
///
/// Immutable once built. The per-node and per-edge indexes are computed lazily
/// on first use and are safe to share across threads.
#[derive(Debug)]
pub struct History {
    events: Vec<Event>,
    kind: GraphKind,
    allow_self_loops: bool,
    labels: Arc<Vec<String>>,
    node_index: OnceLock<Vec<Vec<u32>>>,
    edge_index: OnceLock<HashMap<EdgeKey, Vec<u32>>>,
}

impl Clone for History {
    fn clone(&self) -> Self {
        History::from_parts(
            self.events.clone(),
            self.kind,
            self.allow_self_loops,
            self.labels.clone(),
        )
    }
}

impl History {
    fn from_parts(
        events: Vec<Event>,
        kind: GraphKind,
        allow_self_loops: bool,
        labels: Arc<Vec<String>>,
    ) -> Self {
        History {
            events,
            kind,
            allow_self_loops,
            labels,
            node_index: OnceLock::new(),
            edge_index: OnceLock::new(),
        }
    }

    /// Builds a history directly from dense-id triples. Events are stably sorted
    /// by time; node labels are the decimal ids.
    pub fn from_events<I>(kind: GraphKind, allow_self_loops: bool, events: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u32, u32, f64)>,
    {
        let mut out = Vec::new();
        let mut max_id = None::<u32>;
        for (u, v, t) in events {
            if u == v && !allow_self_loops && !kind.is_bipartite() {
                return Err(Error::InvalidArgument(format!("self-loop on node {u}")));
            }
            out.push(Event::new(u, v, Timestamp::new(t)?));
            max_id = Some(max_id.map_or(u.max(v), |m| m.max(u).max(v)));
        }
        let Some(max_id) = max_id else {
            return Err(Error::EmptyStream);
        };
        if kind.is_bipartite() {
            let mut role = vec![0u8; max_id as usize + 1];
            for e in &out {
                role[e.source.index()] |= 1;
                role[e.destination.index()] |= 2;
            }
            if let Some(n) = role.iter().position(|&r| r == 3) {
                return Err(Error::InvalidArgument(format!(
                    "node {n} is both a source and a destination in a bipartite graph"
                )));
            }
        }
        out.sort_by_key(|e| e.t);
        let labels = (0..=max_id).map(|i| i.to_string()).collect();
        Ok(History::from_parts(out, kind, allow_self_loops, Arc::new(labels)))
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn allows_self_loops(&self) -> bool {
        self.allow_self_loops
    }

    /// Size of the node universe; slices keep the universe of their parent.
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.index()]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn first_time(&self) -> Option<Timestamp> {
        self.events.first().map(|e| e.t)
    }

    /// Maximal observed timestamp `T`.
    pub fn last_time(&self) -> Option<Timestamp> {
        self.events.last().map(|e| e.t)
    }

    pub fn edge_key(&self, e: &Event) -> EdgeKey {
        canonical_edge(e.source, e.destination, self.kind)
    }

    /// Number of events strictly before `t`.
    pub fn count_before(&self, t: Timestamp) -> usize {
        self.events.partition_point(|e| e.t < t)
    }

    /// Events strictly before `t`, i.e. `H_t`.
    pub fn slice_until(&self, t: Timestamp) -> History {
        let n = self.count_before(t);
        History::from_parts(
            self.events[..n].to_vec(),
            self.kind,
            self.allow_self_loops,
            self.labels.clone(),
        )
    }

    /// Splits into the events before `t` and the events at or after `t`.
    pub fn split_at(&self, t: Timestamp) -> (History, History) {
        let n = self.count_before(t);
        let part = |evs: &[Event]| {
            History::from_parts(
                evs.to_vec(),
                self.kind,
                self.allow_self_loops,
                self.labels.clone(),
            )
        };
        (part(&self.events[..n]), part(&self.events[n..]))
    }

    /// Positions (into [`History::events`]) of the events involving `u`, in time order.
    pub fn node_events(&self, u: NodeId) -> &[u32] {
        let index = self.node_index.get_or_init(|| {
            let mut index = vec![Vec::new(); self.node_count()];
            for (i, e) in self.events.iter().enumerate() {
                index[e.source.index()].push(i as u32);
                if e.destination != e.source {
                    index[e.destination.index()].push(i as u32);
                }
            }
            index
        });
        index.get(u.index()).map_or(&[], Vec::as_slice)
    }

    /// Positions of the events on edge `(u, v)`, canonicalized per the graph kind.
    pub fn edge_events(&self, u: NodeId, v: NodeId) -> &[u32] {
        let index = self.edge_index.get_or_init(|| {
            let mut index: HashMap<EdgeKey, Vec<u32>> = HashMap::new();
            for (i, e) in self.events.iter().enumerate() {
                index.entry(self.edge_key(e)).or_default().push(i as u32);
            }
            index
        });
        index
            .get(&canonical_edge(u, v, self.kind))
            .map_or(&[], Vec::as_slice)
    }
}

/// Reads an event CSV into a [`History`].
///
/// Node ids are assigned in order of first appearance in the time-sorted
/// stream, so exporting with [`write_minimal_csv`] and re-ingesting reproduces
/// the same ids. Bipartite graphs get sources in `0..S` and destinations in
/// `S..S+D`.
pub fn ingest_csv<R: Read>(source: R, opts: &IngestOptions) -> Result<History> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);

    let bipartite = opts.kind.is_bipartite();
    let mut src_labels = Interner::default();
    let mut dst_labels = Interner::default();
    let mut raw: Vec<(u32, u32, Timestamp)> = Vec::new();

    let mut record = csv::StringRecord::new();
    loop {
        let more = reader.read_record(&mut record).map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Malformed {
                line,
                msg: e.to_string(),
            }
        })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        let ok_width = match opts.schema {
            Schema::Minimal => record.len() == 3,
            Schema::Jodie => record.len() >= 3,
        };
        if !ok_width {
            return Err(Error::Malformed {
                line,
                msg: format!(
                    "expected {} columns, found {}",
                    expected_width(opts.schema),
                    record.len()
                ),
            });
        }
        let (u, v, ts) = (&record[0], &record[1], &record[2]);
        if u.is_empty() || v.is_empty() {
            return Err(Error::Malformed {
                line,
                msg: "empty node label".into(),
            });
        }
        let t: f64 = ts.parse().map_err(|_| Error::Malformed {
            line,
            msg: format!("timestamp `{ts}` is not a number"),
        })?;
        if !t.is_finite() {
            return Err(Error::Malformed {
                line,
                msg: format!("timestamp `{ts}` is not finite"),
            });
        }
        if t < 0.0 {
            return Err(Error::NegativeTimestamp { line, value: t });
        }
        if !bipartite && u == v && !opts.allow_self_loops {
            return Err(Error::SelfLoop {
                line,
                label: u.to_string(),
            });
        }
        let su = src_labels.intern(u);
        let sv = if bipartite {
            dst_labels.intern(v)
        } else {
            src_labels.intern(v)
        };
        raw.push((su, sv, Timestamp::new(t)?));
    }
    if raw.is_empty() {
        return Err(Error::EmptyStream);
    }
    raw.sort_by_key(|r| r.2);

    // Renumber by first appearance in time order.
    const UNSET: u32 = u32::MAX;
    let mut src_map = vec![UNSET; src_labels.len()];
    let mut dst_map = vec![UNSET; dst_labels.len()];
    let mut labels: Vec<String> = Vec::with_capacity(src_labels.len() + dst_labels.len());
    let assign = |map: &mut Vec<u32>, table: &Interner, id: u32, labels: &mut Vec<String>| {
        let slot = &mut map[id as usize];
        if *slot == UNSET {
            *slot = labels.len() as u32;
            labels.push(table.names[id as usize].clone());
        }
        *slot
    };
    let events: Vec<Event> = if bipartite {
        for r in &raw {
            assign(&mut src_map, &src_labels, r.0, &mut labels);
        }
        for r in &raw {
            assign(&mut dst_map, &dst_labels, r.1, &mut labels);
        }
        raw.iter()
            .map(|&(u, v, t)| Event::new(src_map[u as usize], dst_map[v as usize], t))
            .collect()
    } else {
        raw.iter()
            .map(|&(u, v, t)| {
                let a = assign(&mut src_map, &src_labels, u, &mut labels);
                let b = assign(&mut src_map, &src_labels, v, &mut labels);
                Event::new(a, b, t)
            })
            .collect()
    };

    Ok(History::from_parts(
        events,
        opts.kind,
        opts.allow_self_loops,
        Arc::new(labels),
    ))
}

fn expected_width(schema: Schema) -> &'static str {
    match schema {
        Schema::Minimal => "3",
        Schema::Jodie => "at least 3",
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, label: &str) -> u32 {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(label.to_owned(), id);
        self.names.push(label.to_owned());
        id
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// Writes the history as `source,destination,timestamp` using original labels.
pub fn write_minimal_csv<W: Write>(h: &History, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "destination", "timestamp"])?;
    for e in h.events() {
        w.write_record([h.label(e.source), h.label(e.destination), &e.t.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the dense-id to original-label map as `id,label`.
pub fn write_label_map<W: Write>(h: &History, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["id", "label"])?;
    for (i, label) in h.labels().iter().enumerate() {
        w.write_record([i.to_string().as_str(), label])?;
    }
    w.flush()?;
    Ok(())
}
