use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dlp_eval_core::diagrams::{bd_diagram, bd_diagram_facets, mar_plot, surprise_curve};
use dlp_eval_core::metrics::{confusion_at_threshold, write_auc_csv, write_mar_csv};
use dlp_eval_core::partition::{write_partition_csv, write_sweep_csv};
use dlp_eval_core::sampling::write_negatives_csv;
use dlp_eval_core::{
    build_candidate_index, compute_cutoff, event_seed, ingest_csv, lifetimes, mar_time_series,
    mean_auc_over_batches, mean_std, partition_report, read_score_log, run_streaming_eval, sample_negatives,
    surprise_sweep, write_label_map, write_minimal_csv, write_score_log, BatchAucReport, BdOptions, BdPanel,
    CurveOptions, EmptyPolicy, Error, EvalConfig, GraphKind, History, IngestOptions, KeyKind, MarPlotOptions,
    NegativeStrategy, PartitionRow, Period, ScoreLogMeta, ScoredEventLog, ScorerKind, SurpriseCurve,
    Timestamp,
};
use serde_json::json;

use crate::args::{
    BdArgs, EvalArgs, InputOpts, MetricsArgs, PlotArgs, SampleArgs, SamplingOpts, ScorerChoice, StatsArgs,
    SweepArgs,
};
use crate::output::OutDir;

fn load(path: &Path, opts: &InputOpts) -> Result<History> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let ingest = IngestOptions {
        schema: opts.schema,
        kind: opts.kind,
        allow_self_loops: opts.allow_self_loops,
    };
    let h =
        ingest_csv(BufReader::new(file), &ingest).with_context(|| format!("reading {}", path.display()))?;
    log::info!("{}: {} events, {} nodes", path.display(), h.len(), h.node_count());
    Ok(h)
}

fn file_stem(path: &Path) -> String {
    path.file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned())
}

fn dataset_name(path: &Path, opts: &InputOpts) -> String {
    opts.dataset.clone().unwrap_or_else(|| file_stem(path))
}

fn warn_source_strategies(kind: GraphKind, strategies: &[NegativeStrategy]) {
    if kind.is_bipartite() {
        for s in strategies.iter().filter(|s| s.replaces_source()) {
            log::warn!(
                "{s} replaces the source node; on a bipartite graph it draws from the source role only"
            );
        }
    }
}

fn fmt_surprise(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.3}"))
}

fn stats_table(dataset: &str, events: usize, nodes: &PartitionRow, edges: &PartitionRow) -> String {
    let header = [
        "dataset", "events", "nodes", "hist", "overlap", "induct", "surprise", "edges", "hist", "overlap",
        "induct", "surprise",
    ];
    let row = [
        dataset.to_string(),
        events.to_string(),
        nodes.total.to_string(),
        nodes.historical.to_string(),
        nodes.overlap.to_string(),
        nodes.inductive.to_string(),
        fmt_surprise(nodes.surprise),
        edges.total.to_string(),
        edges.historical.to_string(),
        edges.overlap.to_string(),
        edges.inductive.to_string(),
        fmt_surprise(edges.surprise),
    ];
    let widths: Vec<usize> = header
        .iter()
        .zip(&row)
        .map(|(h, r)| h.len().max(r.len()))
        .collect();
    let mut out = String::new();
    for line in [header.map(String::from).to_vec(), row.to_vec()] {
        let cells: Vec<String> = line
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  "));
    }
    out
}

pub fn stats(a: &StatsArgs) -> Result<()> {
    let h = load(&a.input, &a.opts)?;
    let dataset = dataset_name(&a.input, &a.opts);
    let t_split = compute_cutoff(&h, a.split.test_ratio)?;
    let mut kinds = vec![KeyKind::Node, KeyKind::Edge];
    if h.kind().is_directed() {
        kinds.extend([KeyKind::SourceNode, KeyKind::DestinationNode]);
    }
    let report = partition_report(&h, t_split, &kinds)?;
    let nodes = report.row(KeyKind::Node).expect("node row");
    let edges = report.row(KeyKind::Edge).expect("edge row");
    print!("{}", stats_table(&dataset, h.len(), nodes, edges));
    println!("t_split = {t_split}");

    let mut out = OutDir::create(&a.out.out_dir)?;
    out.write("partition.csv", |w| write_partition_csv(&report, w))?;
    out.finish(
        "stats",
        a,
        json!({
            "dataset": dataset,
            "events": h.len(),
            "t_split": t_split.get(),
            "train_events": h.count_before(t_split),
        }),
    )
}

pub fn split(a: &StatsArgs) -> Result<()> {
    let h = load(&a.input, &a.opts)?;
    let t_split = compute_cutoff(&h, a.split.test_ratio)?;
    let (train, test) = h.split_at(t_split);
    println!(
        "t_split = {t_split}: {} train, {} test events",
        train.len(),
        test.len()
    );
    let mut out = OutDir::create(&a.out.out_dir)?;
    out.write("train.csv", |w| write_minimal_csv(&train, w))?;
    out.write("test.csv", |w| write_minimal_csv(&test, w))?;
    out.write("labels.csv", |w| write_label_map(&h, w))?;
    out.finish(
        "split",
        a,
        json!({ "t_split": t_split.get(), "train_events": train.len(), "test_events": test.len() }),
    )
}

pub fn bd(a: &BdArgs) -> Result<()> {
    let h = load(&a.input, &a.opts)?;
    let dataset = dataset_name(&a.input, &a.opts);
    let t_split = compute_cutoff(&h, a.split.test_ratio)?;
    let mut out = OutDir::create(&a.out.out_dir)?;
    let opts = |what: &str| BdOptions {
        max_points: a.max_points,
        seed: a.seed,
        title: Some(format!("{dataset}: {what}")),
        ..BdOptions::default()
    };
    for (kind, stem) in [(KeyKind::Node, "bd_nodes"), (KeyKind::Edge, "bd_edges")] {
        let table = lifetimes(&h, kind)?;
        let d = bd_diagram(&table, t_split, &opts(&format!("{kind}s")))?;
        out.write_str(&format!("{stem}.svg"), &d.svg)?;
        out.write_str(&format!("{stem}.csv"), &d.csv)?;
    }
    if h.kind().is_bipartite() {
        let src = lifetimes(&h, KeyKind::SourceNode)?;
        let dst = lifetimes(&h, KeyKind::DestinationNode)?;
        let panels = [
            BdPanel {
                title: "source",
                table: &src,
            },
            BdPanel {
                title: "destination",
                table: &dst,
            },
        ];
        let d = bd_diagram_facets(&panels, t_split, &opts("node roles"))?;
        out.write_str("bd_roles.svg", &d.svg)?;
        out.write_str("bd_roles.csv", &d.csv)?;
    }
    out.write("labels.csv", |w| write_label_map(&h, w))?;
    out.finish("bd", a, json!({ "dataset": dataset, "t_split": t_split.get() }))
}

pub fn sweep(a: &SweepArgs) -> Result<()> {
    if a.ratios.is_empty() {
        bail!("no ratios given");
    }
    let mut out = OutDir::create(&a.out.out_dir)?;
    let mut curves = Vec::new();
    for path in &a.input {
        let h = load(path, &a.opts)?;
        // --dataset only names a single curve
        let label = if a.input.len() == 1 {
            dataset_name(path, &a.opts)
        } else {
            file_stem(path)
        };
        let points = surprise_sweep(&h, &a.ratios)?;
        for p in &points {
            println!(
                "{label}  ratio {}  node {}  edge {}",
                p.ratio,
                fmt_surprise(p.node_surprise),
                fmt_surprise(p.edge_surprise)
            );
        }
        out.write(&format!("sweep_{label}.csv"), |w| write_sweep_csv(&points, w))?;
        curves.push(SurpriseCurve { label, points });
    }
    let svg = surprise_curve(&curves, &CurveOptions::default())?;
    out.write_str("surprise_curve.svg", &svg)?;
    out.finish("sweep", a, json!({}))
}

pub fn sample(a: &SampleArgs) -> Result<()> {
    let h = load(&a.input, &a.opts)?;
    let s = &a.sampling;
    check_sampling(s)?;
    warn_source_strategies(h.kind(), &s.strategies);
    let t_split = compute_cutoff(&h, a.split.test_ratio)?;
    let idx = build_candidate_index(&h, t_split)?;
    let start = if a.include_train {
        0
    } else {
        h.count_before(t_split)
    };
    let mut batches = Vec::new();
    let mut skipped = 0usize;
    for (i, e) in h.events().iter().enumerate().skip(start) {
        for &strategy in &s.strategies {
            let seed = event_seed(s.seed, i as u64, strategy);
            match sample_negatives(e, strategy, s.k, &idx, seed) {
                Ok(b) => batches.push((i as u64, b)),
                Err(err @ Error::EmptyCandidateSet { .. }) => match EmptyPolicy::from(s.on_empty) {
                    EmptyPolicy::Skip => {
                        log::warn!("event {i}: {err}");
                        skipped += 1;
                    }
                    EmptyPolicy::Abort => return Err(err.into()),
                },
                Err(err) => return Err(err.into()),
            }
        }
    }
    let mut out = OutDir::create(&a.out.out_dir)?;
    out.write("negatives.csv", |w| {
        write_negatives_csv(batches.iter().map(|(i, b)| (*i, b)), w)
    })?;
    out.finish(
        "sample",
        a,
        json!({ "t_split": t_split.get(), "skipped_draws": skipped }),
    )
}

fn check_sampling(s: &SamplingOpts) -> Result<()> {
    if s.strategies.is_empty() {
        bail!("at least one strategy is required");
    }
    if s.k == 0 {
        bail!("--k must be at least 1");
    }
    Ok(())
}

/// Per-strategy AUC reports for one log. Strategies with no usable batch in
/// the period are reported and left out.
fn auc_reports(
    log: &ScoredEventLog,
    strategies: &[NegativeStrategy],
    period: Period,
    t_split: Timestamp,
) -> Result<Vec<BatchAucReport>> {
    let mut reports = Vec::new();
    for &s in strategies {
        match mean_auc_over_batches(log, s, period, t_split) {
            Ok(r) => reports.push(r),
            Err(Error::StrategyNotInLog(_)) => log::warn!("strategy {s} has no records in the log"),
            Err(e) => return Err(e.into()),
        }
    }
    if reports.is_empty() {
        return Err(Error::NoUsableBatches.into());
    }
    Ok(reports)
}

struct RunSummary {
    label: String,
    reports: Vec<BatchAucReport>,
}

/// Writes per-batch AUCs, the per-run means and the across-run mean and
/// population std, and prints the summary.
fn write_auc_outputs(out: &mut OutDir, runs: &[RunSummary], period: Period) -> Result<()> {
    let single = runs.len() == 1;
    for run in runs {
        let name = if single {
            "auc_batches.csv".to_string()
        } else {
            format!("auc_batches_{}.csv", run.label)
        };
        out.write(&name, |w| write_auc_csv(&run.reports, w))?;
    }

    let mut per_strategy: BTreeMap<NegativeStrategy, Vec<f64>> = BTreeMap::new();
    let mut runs_csv = String::from("run,strategy,mean_auc,batches,excluded\n");
    for run in runs {
        for r in &run.reports {
            per_strategy.entry(r.strategy).or_default().push(r.mean);
            let _ = writeln!(
                runs_csv,
                "{},{},{},{},{}",
                run.label,
                r.strategy,
                r.mean,
                r.batches.len(),
                r.excluded
            );
        }
    }
    out.write_str("auc_runs.csv", &runs_csv)?;

    let period_name = match period {
        Period::Train => "train",
        Period::Test => "test",
        Period::All => "all",
    };
    let mut summary = String::from("strategy,period,runs,mean_auc,std_auc\n");
    println!("strategy  runs  mean AUC ({period_name})");
    for (s, means) in &per_strategy {
        let (m, sd) = mean_std(means).expect("at least one run");
        let _ = writeln!(summary, "{s},{period_name},{},{m},{sd}", means.len());
        if single {
            println!("{s:>8}  {:>4}  {m:.4}", means.len());
        } else {
            println!("{s:>8}  {:>4}  {m:.4} ± {sd:.4}", means.len());
        }
    }
    out.write_str("auc_summary.csv", &summary)?;
    Ok(())
}

fn write_mar_outputs(
    out: &mut OutDir,
    log: &ScoredEventLog,
    t_split: Timestamp,
    bins: usize,
    stem: &str,
    title: Option<String>,
) -> Result<()> {
    let series = mar_time_series(log, bins)?;
    out.write(&format!("{stem}.csv"), |w| write_mar_csv(&series, w))?;
    match mar_plot(
        &series,
        t_split,
        &MarPlotOptions {
            title,
            ..MarPlotOptions::default()
        },
    ) {
        Ok(svg) => {
            out.write_str(&format!("{stem}.svg"), &svg)?;
        }
        Err(e) => log::warn!("no MAR plot: {e}"),
    }
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    if !a.score_log.is_empty() {
        let logs = read_logs(&a.score_log)?;
        let mut out = OutDir::create(&a.out.out_dir)?;
        summarize_logs(&mut out, &logs, a.period.into(), a.bins, true, None)?;
        return out.finish(
            "eval",
            a,
            json!({ "mode": "external", "t_split": logs[0].1.t_split.get() }),
        );
    }
    let input = a.input.as_deref().context("--input is required")?;
    let h = load(input, &a.opts)?;
    let dataset = dataset_name(input, &a.opts);
    let s = &a.sampling;
    check_sampling(s)?;
    warn_source_strategies(h.kind(), &s.strategies);
    let t_split = compute_cutoff(&h, a.split.test_ratio)?;
    let idx = build_candidate_index(&h, t_split)?;
    let scorer = match a.scorer {
        ScorerChoice::Pa => ScorerKind::PreferentialAttachment,
        ScorerChoice::Edgebank => ScorerKind::EdgeBank,
    };
    let cfg = EvalConfig {
        scorer,
        strategies: s.strategies.clone(),
        k_per_strategy: s.k,
        batch_size: a.batch_size,
        seed: s.seed,
        on_empty: s.on_empty.into(),
    };
    let outcome = run_streaming_eval(&h, &idx, &cfg)?;
    let meta = ScoreLogMeta {
        dataset: dataset.clone(),
        t_split,
        batch_size: a.batch_size,
        strategies: s.strategies.clone(),
        k: s.k,
        seed: s.seed,
        scorer: scorer.to_string(),
        extra: BTreeMap::new(),
    };
    let mut out = OutDir::create(&a.out.out_dir)?;
    out.write("scores.csv", |w| write_score_log(&outcome.log, &meta, w))?;
    let logs = vec![(scorer.to_string(), meta, outcome.log)];
    summarize_logs(&mut out, &logs, a.period.into(), a.bins, true, Some(&dataset))?;
    out.finish(
        "eval",
        a,
        json!({
            "mode": scorer.as_str(),
            "dataset": dataset,
            "t_split": t_split.get(),
            "batches": outcome.batches,
            "skipped_events": outcome.skipped.len(),
        }),
    )
}

type LoadedLog = (String, ScoreLogMeta, ScoredEventLog);

fn read_logs(paths: &[std::path::PathBuf]) -> Result<Vec<LoadedLog>> {
    let mut logs = Vec::new();
    for (i, path) in paths.iter().enumerate() {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        let (log, meta) = read_score_log(BufReader::new(file))
            .with_context(|| format!("reading score log {}", path.display()))?;
        let stem = file_stem(path);
        let clash = paths.iter().filter(|p| file_stem(p) == stem).count() > 1;
        let label = if clash { format!("{stem}_{i}") } else { stem };
        logs.push((label, meta, log));
    }
    let first = &logs[0].1;
    for (label, meta, _) in &logs[1..] {
        if meta.t_split != first.t_split || meta.strategies != first.strategies {
            bail!(
                "score log `{label}` disagrees with `{}` on t_split or strategies",
                logs[0].0
            );
        }
    }
    Ok(logs)
}

fn summarize_logs(
    out: &mut OutDir,
    logs: &[LoadedLog],
    period: Period,
    bins: usize,
    plots: bool,
    title: Option<&str>,
) -> Result<()> {
    let mut runs = Vec::new();
    for (label, meta, log) in logs {
        runs.push(RunSummary {
            label: label.clone(),
            reports: auc_reports(log, &meta.strategies, period, meta.t_split)?,
        });
    }
    write_auc_outputs(out, &runs, period)?;
    let single = logs.len() == 1;
    for (label, meta, log) in logs {
        let stem = if single {
            "mar".to_string()
        } else {
            format!("mar_{label}")
        };
        if plots {
            let title = title.map(str::to_string).or_else(|| Some(meta.dataset.clone()));
            write_mar_outputs(out, log, meta.t_split, bins, &stem, title)?;
        } else {
            let series = mar_time_series(log, bins)?;
            out.write(&format!("{stem}.csv"), |w| write_mar_csv(&series, w))?;
        }
    }
    Ok(())
}

pub fn metrics(a: &MetricsArgs) -> Result<()> {
    let logs = read_logs(&a.score_log)?;
    let mut out = OutDir::create(&a.out.out_dir)?;
    summarize_logs(&mut out, &logs, a.period.into(), a.bins, false, None)?;
    if let Some(threshold) = a.threshold {
        let mut csv = String::from("run,strategy,threshold,tp,fp,fn,tn\n");
        for (label, meta, log) in &logs {
            for &s in &meta.strategies {
                let m = confusion_at_threshold(log, s, threshold)?;
                let _ = writeln!(
                    csv,
                    "{label},{s},{threshold},{},{},{},{}",
                    m.tp, m.fp, m.fn_, m.tn
                );
            }
        }
        out.write_str("confusion.csv", &csv)?;
    }
    out.finish("metrics", a, json!({ "t_split": logs[0].1.t_split.get() }))
}

pub fn plot(a: &PlotArgs) -> Result<()> {
    let logs = read_logs(std::slice::from_ref(&a.score_log))?;
    let (_, meta, log) = &logs[0];
    let mut out = OutDir::create(&a.out.out_dir)?;
    let series = mar_time_series(log, a.bins)?;
    out.write("mar.csv", |w| write_mar_csv(&series, w))?;
    let title = a.title.clone().or_else(|| Some(meta.dataset.clone()));
    let svg = mar_plot(
        &series,
        meta.t_split,
        &MarPlotOptions {
            title,
            ..MarPlotOptions::default()
        },
    )?;
    out.write_str("mar.svg", &svg)?;
    out.finish("plot", a, json!({ "t_split": meta.t_split.get() }))
}
