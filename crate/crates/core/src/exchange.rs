//! Plain-text score log format, so that any model can feed the metrics and
//! plotting pipeline.
//!
//! ```text
//! # format=dlp-score-log
//! # dataset=uci
//! # t_split=...
//! # batch_size=200
//! # strategies=HE,OE,IE
//! # k=1
//! # seed=0
//! # scorer=edgebank
//! event_ordinal,batch,role,source,destination,timestamp,score
//! 0,0,positive,0,1,0,0.0000000000000000e0
//! ```
//!
//! Scores are written with 17 significant digits, which round-trips every f64.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use crate::ctdg::{NodeId, Timestamp};
use crate::error::{Error, Result};
use crate::sampling::{parse_strategies, NegativeStrategy};
use crate::scorers::{validate_group, Role, ScoreRecord, ScoredEventLog};

pub const FORMAT_TAG: &str = "dlp-score-log";
pub const COLUMNS: &str = "event_ordinal,batch,role,source,destination,timestamp,score";

#[derive(Clone, Debug, PartialEq)]
pub struct ScoreLogMeta {
    pub dataset: String,
    pub t_split: Timestamp,
    pub batch_size: usize,
    pub strategies: Vec<NegativeStrategy>,
    pub k: usize,
    pub seed: u64,
    pub scorer: String,
    /// Unrecognized header keys, preserved verbatim.
    pub extra: BTreeMap<String, String>,
}

const KNOWN_KEYS: [&str; 8] = [
    "format",
    "dataset",
    "t_split",
    "batch_size",
    "strategies",
    "k",
    "seed",
    "scorer",
];

pub fn write_score_log<W: Write>(log: &ScoredEventLog, meta: &ScoreLogMeta, out: W) -> Result<()> {
    log.validate(Some(&meta.strategies))?;
    let strategies = meta
        .strategies
        .iter()
        .map(|s| s.as_str())
        .collect::<Vec<_>>()
        .join(",");
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "# format={FORMAT_TAG}")?;
    writeln!(out, "# dataset={}", meta.dataset)?;
    writeln!(out, "# t_split={}", meta.t_split)?;
    writeln!(out, "# batch_size={}", meta.batch_size)?;
    writeln!(out, "# strategies={strategies}")?;
    writeln!(out, "# k={}", meta.k)?;
    writeln!(out, "# seed={}", meta.seed)?;
    writeln!(out, "# scorer={}", meta.scorer)?;
    for (key, value) in &meta.extra {
        writeln!(out, "# {key}={value}")?;
    }
    writeln!(out, "{COLUMNS}")?;
    for r in &log.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.16e}",
            r.event_ordinal, r.batch, r.role, r.source, r.destination, r.timestamp, r.score
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_score_log<R: Read>(input: R) -> Result<(ScoredEventLog, ScoreLogMeta)> {
    let reader = BufReader::new(input);
    let mut header: BTreeMap<String, (String, u64)> = BTreeMap::new();
    let mut meta: Option<ScoreLogMeta> = None;
    let mut records: Vec<ScoreRecord> = Vec::new();
    let mut group_start = 0usize;
    let mut group_line = 0u64;

    for (i, line) in reader.lines().enumerate() {
        let line_no = i as u64 + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if meta.is_none() {
            if let Some(rest) = line.strip_prefix('#') {
                let (key, value) = rest
                    .trim()
                    .split_once('=')
                    .ok_or_else(|| Error::invalid_log(line_no, "header line must be `# key=value`"))?;
                header.insert(key.trim().to_string(), (value.trim().to_string(), line_no));
                continue;
            }
            if line != COLUMNS {
                return Err(Error::invalid_log(
                    line_no,
                    format!("expected column header `{COLUMNS}`"),
                ));
            }
            meta = Some(parse_meta(&header, line_no)?);
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let declared = &meta.as_ref().expect("header parsed").strategies;
        let record = parse_record(line, line_no, declared)?;

        // close the previous event group when the ordinal changes
        if let Some(prev) = records.last() {
            if prev.event_ordinal != record.event_ordinal {
                check_group(&records[group_start..], group_line, declared)?;
                if record.event_ordinal < prev.event_ordinal {
                    return Err(Error::invalid_log(line_no, "event ordinals must increase"));
                }
                if record.batch < prev.batch {
                    return Err(Error::invalid_log(line_no, "batch ordinals must not decrease"));
                }
                if record.timestamp < prev.timestamp {
                    return Err(Error::invalid_log(
                        line_no,
                        "timestamps must not decrease across events",
                    ));
                }
                group_start = records.len();
                group_line = line_no;
            }
        } else {
            group_line = line_no;
        }
        records.push(record);
    }
    let meta = meta.ok_or_else(|| Error::invalid_log(None, "missing column header"))?;
    if group_start < records.len() {
        check_group(&records[group_start..], group_line, &meta.strategies)?;
    }
    let log = ScoredEventLog { records };
    // catches an ordinal that reappears after other events
    log.validate(Some(&meta.strategies))?;
    Ok((log, meta))
}

fn check_group(group: &[ScoreRecord], line: u64, declared: &[NegativeStrategy]) -> Result<()> {
    validate_group(group, Some(declared)).map_err(|e| match e {
        Error::InvalidLog { line: None, msg } => Error::InvalidLog {
            line: Some(line),
            msg,
        },
        other => other,
    })
}

fn parse_meta(header: &BTreeMap<String, (String, u64)>, line_no: u64) -> Result<ScoreLogMeta> {
    let get = |key: &str| {
        header
            .get(key)
            .map(|(v, l)| (v.as_str(), *l))
            .ok_or_else(|| Error::invalid_log(line_no, format!("missing header key `{key}`")))
    };
    let number = |key: &str| -> Result<u64> {
        let (v, l) = get(key)?;
        v.parse()
            .map_err(|_| Error::invalid_log(l, format!("`{key}` must be a non-negative integer")))
    };
    let (format, l) = get("format")?;
    if format != FORMAT_TAG {
        return Err(Error::invalid_log(l, format!("unsupported format `{format}`")));
    }
    let (t_split, l) = get("t_split")?;
    let t_split = t_split
        .parse::<f64>()
        .map_err(|_| Error::invalid_log(l, "`t_split` must be a number"))
        .and_then(|t| Timestamp::new(t).map_err(|e| Error::invalid_log(l, e.to_string())))?;
    let (strategies, l) = get("strategies")?;
    let strategies = parse_strategies(strategies).map_err(|e| Error::invalid_log(l, e.to_string()))?;
    let extra = header
        .iter()
        .filter(|(k, _)| !KNOWN_KEYS.contains(&k.as_str()))
        .map(|(k, (v, _))| (k.clone(), v.clone()))
        .collect();
    Ok(ScoreLogMeta {
        dataset: get("dataset")?.0.to_string(),
        t_split,
        batch_size: number("batch_size")? as usize,
        strategies,
        k: number("k")? as usize,
        seed: number("seed")?,
        scorer: get("scorer")?.0.to_string(),
        extra,
    })
}

fn parse_record(line: &str, line_no: u64, declared: &[NegativeStrategy]) -> Result<ScoreRecord> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 7 {
        return Err(Error::invalid_log(
            line_no,
            format!("expected 7 fields, found {}", fields.len()),
        ));
    }
    let int = |i: usize, name: &str| -> Result<u64> {
        fields[i]
            .parse()
            .map_err(|_| Error::invalid_log(line_no, format!("{name} `{}` is not an integer", fields[i])))
    };
    let node = |i: usize, name: &str| -> Result<NodeId> {
        fields[i]
            .parse()
            .map(NodeId)
            .map_err(|_| Error::invalid_log(line_no, format!("{name} `{}` is not a node id", fields[i])))
    };
    let role: Role = fields[2]
        .parse()
        .map_err(|_| Error::invalid_log(line_no, format!("unknown strategy `{}`", fields[2])))?;
    if let Role::Negative(s) = role {
        if !declared.contains(&s) {
            return Err(Error::invalid_log(
                line_no,
                format!("strategy {s} is not declared in the header"),
            ));
        }
    }
    let timestamp = fields[5]
        .parse::<f64>()
        .ok()
        .and_then(|t| Timestamp::new(t).ok())
        .ok_or_else(|| Error::invalid_log(line_no, format!("bad timestamp `{}`", fields[5])))?;
    let score = fields[6]
        .parse::<f64>()
        .ok()
        .filter(|s| s.is_finite())
        .ok_or_else(|| {
            Error::invalid_log(line_no, format!("score `{}` is not a finite number", fields[6]))
        })?;
    Ok(ScoreRecord {
        event_ordinal: int(0, "event ordinal")?,
        batch: int(1, "batch")?,
        role,
        source: node(3, "source")?,
        destination: node(4, "destination")?,
        timestamp,
        score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> ScoreLogMeta {
        ScoreLogMeta {
            dataset: "toy".into(),
            t_split: Timestamp::new(2.0).unwrap(),
            batch_size: 200,
            strategies: vec![NegativeStrategy::HE, NegativeStrategy::OE],
            k: 1,
            seed: 3,
            scorer: "edgebank".into(),
            extra: BTreeMap::new(),
        }
    }

    fn rec(ord: u64, role: Role, t: f64, score: f64) -> ScoreRecord {
        ScoreRecord {
            event_ordinal: ord,
            batch: ord / 2,
            role,
            source: NodeId(ord as u32),
            destination: NodeId(9),
            timestamp: Timestamp::new(t).unwrap(),
            score,
        }
    }

    fn sample_log() -> ScoredEventLog {
        let he = Role::Negative(NegativeStrategy::HE);
        let oe = Role::Negative(NegativeStrategy::OE);
        ScoredEventLog {
            records: vec![
                rec(0, Role::Positive, 0.5, 0.1),
                rec(0, he, 0.5, 1.0 / 3.0),
                rec(0, oe, 0.5, -2.5e-300),
                rec(1, Role::Positive, 1.25, 0.7),
                rec(1, he, 1.25, 0.0),
                rec(1, oe, 1.25, 1e17),
            ],
        }
    }

    fn write(log: &ScoredEventLog, meta: &ScoreLogMeta) -> String {
        let mut buf = Vec::new();
        write_score_log(log, meta, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip() {
        let mut m = meta();
        m.extra.insert("model".into(), "tgn".into());
        let text = write(&sample_log(), &m);
        let (log, back) = read_score_log(text.as_bytes()).unwrap();
        assert_eq!(log, sample_log());
        assert_eq!(back, m);
        // writing again is byte-identical
        assert_eq!(write(&log, &back), text);
    }

    #[test]
    fn empty_log_is_header_only() {
        let text = write(&ScoredEventLog::default(), &meta());
        assert!(text.ends_with(&format!("{COLUMNS}\n")));
        let (log, _) = read_score_log(text.as_bytes()).unwrap();
        assert!(log.is_empty());
    }

    #[test]
    fn undeclared_strategy_rejected_at_write() {
        let mut m = meta();
        m.strategies = vec![NegativeStrategy::HE];
        let mut buf = Vec::new();
        assert!(write_score_log(&sample_log(), &m, &mut buf).is_err());
    }

    fn line_of(err: Error) -> Option<u64> {
        match err {
            Error::InvalidLog { line, .. } => line,
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Replaces field `field` of 1-based line `line_no`.
    fn edit(text: &str, line_no: usize, field: usize, value: &str) -> String {
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        let mut fields: Vec<&str> = lines[line_no - 1].split(',').collect();
        fields[field] = value;
        lines[line_no - 1] = fields.join(",");
        lines.join("\n") + "\n"
    }

    #[test]
    fn non_numeric_score_reports_line() {
        let text = edit(&write(&sample_log(), &meta()), 10, 6, "abc");
        assert_eq!(line_of(read_score_log(text.as_bytes()).unwrap_err()), Some(10));
    }

    #[test]
    fn timestamp_mismatch_is_rejected() {
        let text = edit(&write(&sample_log(), &meta()), 11, 5, "0.75");
        assert_eq!(line_of(read_score_log(text.as_bytes()).unwrap_err()), Some(10));
    }

    #[test]
    fn unknown_and_undeclared_strategies() {
        let base = write(&sample_log(), &meta());
        let unknown = edit(&base, 11, 2, "XX");
        assert_eq!(line_of(read_score_log(unknown.as_bytes()).unwrap_err()), Some(11));
        let undeclared = edit(&base, 11, 2, "IE");
        assert_eq!(
            line_of(read_score_log(undeclared.as_bytes()).unwrap_err()),
            Some(11)
        );
    }

    #[test]
    fn missing_header_keys_and_disorder() {
        let base = write(&sample_log(), &meta());
        let no_seed = base.replace("# seed=3\n", "");
        assert!(read_score_log(no_seed.as_bytes()).is_err());
        let mut swapped = base.clone();
        for line in 13..=15 {
            swapped = edit(&swapped, line, 5, "0.25");
        }
        assert!(read_score_log(swapped.as_bytes()).is_err());
    }
}
