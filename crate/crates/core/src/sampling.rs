//! Evaluation-time negative sampling.
//!
//! Nine strategies replace the source, the destination or the whole edge of a
//! positive event by a node or edge drawn from one temporal category; `RND`
//! replaces the destination uniformly. Every negative keeps the positive's
//! timestamp and never coincides with a positive event at that same time.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ctdg::{canonical_edge, EdgeKey, Event, GraphKind, History, NodeId, Timestamp};
use crate::error::{Error, Result};
use crate::partition::{categorize, lifetimes, Key, KeyKind, TemporalCategory};

/// Rejection attempts per draw before falling back to an exact scan.
pub const DEFAULT_MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NegativeStrategy {
    HS,
    OS,
    IS,
    HD,
    OD,
    ID,
    HE,
    OE,
    IE,
    RND,
}

/// What part of the positive event a strategy replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    Source(TemporalCategory),
    Destination(TemporalCategory),
    Edge(TemporalCategory),
    UniformDestination,
}

impl NegativeStrategy {
    pub const ALL: [NegativeStrategy; 10] = [
        NegativeStrategy::HS,
        NegativeStrategy::OS,
        NegativeStrategy::IS,
        NegativeStrategy::HD,
        NegativeStrategy::OD,
        NegativeStrategy::ID,
        NegativeStrategy::HE,
        NegativeStrategy::OE,
        NegativeStrategy::IE,
        NegativeStrategy::RND,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            NegativeStrategy::HS => "HS",
            NegativeStrategy::OS => "OS",
            NegativeStrategy::IS => "IS",
            NegativeStrategy::HD => "HD",
            NegativeStrategy::OD => "OD",
            NegativeStrategy::ID => "ID",
            NegativeStrategy::HE => "HE",
            NegativeStrategy::OE => "OE",
            NegativeStrategy::IE => "IE",
            NegativeStrategy::RND => "RND",
        }
    }

    pub fn replacement(self) -> Replacement {
        use TemporalCategory::*;
        match self {
            NegativeStrategy::HS => Replacement::Source(Historical),
            NegativeStrategy::OS => Replacement::Source(Overlap),
            NegativeStrategy::IS => Replacement::Source(Inductive),
            NegativeStrategy::HD => Replacement::Destination(Historical),
            NegativeStrategy::OD => Replacement::Destination(Overlap),
            NegativeStrategy::ID => Replacement::Destination(Inductive),
            NegativeStrategy::HE => Replacement::Edge(Historical),
            NegativeStrategy::OE => Replacement::Edge(Overlap),
            NegativeStrategy::IE => Replacement::Edge(Inductive),
            NegativeStrategy::RND => Replacement::UniformDestination,
        }
    }

    /// Category of the replaced key, if the strategy targets one.
    pub fn category(self) -> Option<TemporalCategory> {
        match self.replacement() {
            Replacement::Source(c) | Replacement::Destination(c) | Replacement::Edge(c) => Some(c),
            Replacement::UniformDestination => None,
        }
    }

    pub fn replaces_source(self) -> bool {
        matches!(self.replacement(), Replacement::Source(_))
    }
}

impl fmt::Display for NegativeStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NegativeStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        NegativeStrategy::ALL
            .into_iter()
            .find(|st| st.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

/// Parses a comma-separated strategy list such as `HE,OE,IE`.
pub fn parse_strategies(s: &str) -> Result<Vec<NegativeStrategy>> {
    let list = s
        .split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<_>>>()?;
    if list.is_empty() {
        return Err(Error::InvalidArgument("empty strategy list".into()));
    }
    Ok(list)
}

type CategorySets<T> = [Vec<T>; 3];

/// Precomputed candidate sets for one cutoff.
///
/// Node sets are kept for all nodes and per role. For bipartite graphs the role
/// sets are disjoint universes and endpoint strategies draw from the matching
/// role; otherwise endpoint strategies draw from the all-node sets.
#[derive(Debug)]
pub struct CandidateIndex {
    t_split: Timestamp,
    kind: GraphKind,
    allow_self_loops: bool,
    nodes: CategorySets<NodeId>,
    source_role: CategorySets<NodeId>,
    destination_role: CategorySets<NodeId>,
    edges: CategorySets<EdgeKey>,
    all_destinations: Vec<NodeId>,
    positives_at: HashMap<Timestamp, HashSet<EdgeKey>>,
}

fn node_sets(h: &History, kind: KeyKind, t_split: Timestamp) -> Result<CategorySets<NodeId>> {
    let mut sets: CategorySets<NodeId> = Default::default();
    for (key, l) in lifetimes(h, kind)?.entries {
        if let Key::Node(n) = key {
            sets[categorize(&l, t_split).index()].push(n);
        }
    }
    Ok(sets)
}

pub fn build_candidate_index(h: &History, t_split: Timestamp) -> Result<CandidateIndex> {
    let nodes = node_sets(h, KeyKind::Node, t_split)?;
    let (source_role, destination_role) = if h.kind().is_directed() {
        (
            node_sets(h, KeyKind::SourceNode, t_split)?,
            node_sets(h, KeyKind::DestinationNode, t_split)?,
        )
    } else {
        (nodes.clone(), nodes.clone())
    };
    let mut edges: CategorySets<EdgeKey> = Default::default();
    for (key, l) in lifetimes(h, KeyKind::Edge)?.entries {
        if let Key::Edge(e) = key {
            edges[categorize(&l, t_split).index()].push(e);
        }
    }
    let all_destinations = if h.kind().is_bipartite() {
        destination_role.iter().flatten().copied().collect::<Vec<_>>()
    } else {
        nodes.iter().flatten().copied().collect::<Vec<_>>()
    };
    let mut all_destinations = all_destinations;
    all_destinations.sort_unstable();

    let mut positives_at: HashMap<Timestamp, HashSet<EdgeKey>> = HashMap::new();
    for e in h.events() {
        positives_at.entry(e.t).or_default().insert(h.edge_key(e));
    }

    Ok(CandidateIndex {
        t_split,
        kind: h.kind(),
        allow_self_loops: h.allows_self_loops(),
        nodes,
        source_role,
        destination_role,
        edges,
        all_destinations,
        positives_at,
    })
}

impl CandidateIndex {
    pub fn t_split(&self) -> Timestamp {
        self.t_split
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn nodes(&self, cat: TemporalCategory) -> &[NodeId] {
        &self.nodes[cat.index()]
    }

    pub fn source_role_nodes(&self, cat: TemporalCategory) -> &[NodeId] {
        &self.source_role[cat.index()]
    }

    pub fn destination_role_nodes(&self, cat: TemporalCategory) -> &[NodeId] {
        &self.destination_role[cat.index()]
    }

    pub fn edges(&self, cat: TemporalCategory) -> &[EdgeKey] {
        &self.edges[cat.index()]
    }

    /// Whether `key` is the edge of some positive event at exactly `t`.
    pub fn is_positive_at(&self, key: &EdgeKey, t: Timestamp) -> bool {
        self.positives_at.get(&t).is_some_and(|s| s.contains(key))
    }

    fn endpoint_pool(&self, replace_source: bool, cat: TemporalCategory) -> &[NodeId] {
        match (self.kind.is_bipartite(), replace_source) {
            (true, true) => &self.source_role[cat.index()],
            (true, false) => &self.destination_role[cat.index()],
            (false, _) => &self.nodes[cat.index()],
        }
    }

    fn is_legal(&self, pos: &Event, pos_key: &EdgeKey, u: NodeId, v: NodeId) -> bool {
        if u == v && !self.allow_self_loops {
            return false;
        }
        let key = canonical_edge(u, v, self.kind);
        key != *pos_key && !self.is_positive_at(&key, pos.t)
    }
}

/// The `k` negatives generated for one positive event.
#[derive(Clone, Debug, PartialEq)]
pub struct NegativeBatch {
    pub positive: Event,
    pub strategy: NegativeStrategy,
    pub negatives: Vec<Event>,
}

/// Seed for one `(event, strategy)` stream, so that events can be sampled in
/// any order or in parallel with identical output.
pub fn event_seed(seed: u64, event_ordinal: u64, strategy: NegativeStrategy) -> u64 {
    let mut x = seed;
    for part in [event_ordinal, strategy as u64 + 1] {
        x = splitmix64(x ^ splitmix64(part));
    }
    x
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draws `k` negatives for `pos`, uniformly (with replacement across draws)
/// from the strategy's legal candidates.
pub fn sample_negatives(
    pos: &Event,
    strategy: NegativeStrategy,
    k: usize,
    idx: &CandidateIndex,
    rng_seed: u64,
) -> Result<NegativeBatch> {
    sample_negatives_with(pos, strategy, k, idx, rng_seed, DEFAULT_MAX_ATTEMPTS)
}

type Candidate<'a> = Box<dyn Fn(usize) -> (NodeId, NodeId) + 'a>;

pub fn sample_negatives_with(
    pos: &Event,
    strategy: NegativeStrategy,
    k: usize,
    idx: &CandidateIndex,
    rng_seed: u64,
    max_attempts: usize,
) -> Result<NegativeBatch> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let pos_key = canonical_edge(pos.source, pos.destination, idx.kind);
    let empty = || Error::EmptyCandidateSet {
        strategy,
        src: pos.source.0,
        dst: pos.destination.0,
        t: pos.t.get(),
    };

    // Maps a candidate position to the (source, destination) it would produce.
    let (len, make): (usize, Candidate<'_>) = match strategy.replacement() {
        Replacement::Source(cat) => {
            let pool = idx.endpoint_pool(true, cat);
            (pool.len(), Box::new(move |i| (pool[i], pos.destination)))
        }
        Replacement::Destination(cat) => {
            let pool = idx.endpoint_pool(false, cat);
            (pool.len(), Box::new(move |i| (pos.source, pool[i])))
        }
        Replacement::UniformDestination => {
            let pool = &idx.all_destinations;
            (pool.len(), Box::new(move |i| (pos.source, pool[i])))
        }
        Replacement::Edge(cat) => {
            let pool = &idx.edges[cat.index()];
            (pool.len(), Box::new(move |i| (pool[i].a, pool[i].b)))
        }
    };
    if len == 0 {
        return Err(empty());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut legal: Option<Vec<usize>> = None;
    let mut negatives = Vec::with_capacity(k);
    for _ in 0..k {
        let mut pick = None;
        if legal.is_none() {
            for _ in 0..max_attempts {
                let (u, v) = make(rng.gen_range(0..len));
                if idx.is_legal(pos, &pos_key, u, v) {
                    pick = Some((u, v));
                    break;
                }
            }
        }
        let (u, v) = match pick {
            Some(p) => p,
            None => {
                // Rejection kept failing: sample exactly from the legal subset.
                let legal = legal.get_or_insert_with(|| {
                    (0..len)
                        .filter(|&i| {
                            let (u, v) = make(i);
                            idx.is_legal(pos, &pos_key, u, v)
                        })
                        .collect()
                });
                if legal.is_empty() {
                    return Err(empty());
                }
                make(legal[rng.gen_range(0..legal.len())])
            }
        };
        negatives.push(Event {
            source: u,
            destination: v,
            t: pos.t,
        });
    }
    Ok(NegativeBatch {
        positive: *pos,
        strategy,
        negatives,
    })
}

/// Writes `event_ordinal,strategy,source,destination,timestamp` rows.
pub fn write_negatives_csv<'a, W, I>(batches: I, out: W) -> Result<()>
where
    W: Write,
    I: IntoIterator<Item = (u64, &'a NegativeBatch)>,
{
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["event_ordinal", "strategy", "source", "destination", "timestamp"])?;
    for (ordinal, batch) in batches {
        for n in &batch.negatives {
            w.write_record([
                ordinal.to_string(),
                batch.strategy.to_string(),
                n.source.to_string(),
                n.destination.to_string(),
                n.t.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
