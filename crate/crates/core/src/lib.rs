//! Evaluation toolkit for dynamic link prediction on continuous-time dynamic
//! graphs: temporal partitioning of nodes and edges, category-aware negative
//! sampling, streaming baseline scorers, batch metrics, a score-log format for
//! external models, and diagram rendering.

pub mod ctdg;
pub mod diagrams;
pub mod error;
pub mod exchange;
pub mod metrics;
pub mod partition;
pub mod sampling;
pub mod scorers;

pub use ctdg::{
    canonical_edge, ingest_csv, write_label_map, write_minimal_csv, EdgeKey, Event, GraphKind, History,
    IngestOptions, NodeId, Schema, Timestamp,
};
pub use diagrams::{
    bd_diagram, bd_diagram_facets, mar_plot, surprise_curve, BdOptions, BdOutput, BdPanel, CurveOptions,
    MarPlotOptions, SurpriseCurve,
};
pub use error::{Error, Result};
pub use exchange::{read_score_log, write_score_log, ScoreLogMeta};
pub use metrics::{
    batch_auc, confusion_at_threshold, mar_time_series, mean_auc_over_batches, mean_std, rank_within_group,
    BatchAuc, BatchAucReport, ConfusionMatrix, MarSeries, Period,
};
pub use partition::{
    categorize, compute_cutoff, lifetimes, partition_report, split, surprise_sweep, Key, KeyKind, Lifetime,
    LifetimeTable, PartitionReport, PartitionRow, SweepPoint, TemporalCategory,
};
pub use sampling::{
    build_candidate_index, event_seed, parse_strategies, sample_negatives, CandidateIndex, NegativeBatch,
    NegativeStrategy,
};
pub use scorers::{
    run_streaming_eval, EmptyPolicy, EvalConfig, EvalOutcome, Role, ScoreRecord, ScoredEventLog, ScorerKind,
    ScorerMemory,
};
