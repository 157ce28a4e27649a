//! Keyed detection: one reader, a pool of workers each owning the detectors
//! for the keys hashed to it, and one writer.
//!
//! A key always lands on the same worker and the channels are FIFO, so the
//! events of one key come out in stream order whatever the worker count.
//! Events of different keys may interleave differently between runs when
//! more than one worker is used.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, File};
use std::hash::{DefaultHasher, Hash, Hasher};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use streamcpd::{
    decode_snapshot, encode_snapshot, mae_with_penalty, CusumState, EwmaState, MvDetector, PenaltyMode,
    StepDiagnostics, UnivariateDetector,
};

use crate::config::{Algorithm, RunConfig};
use crate::input::{self, Item, Row, Selection};
use crate::{CliError, Result};

const CHANNEL_DEPTH: usize = 1024;
const MAX_WARNINGS: u64 = 10;

/// One NDJSON line of the event output. Baseline alarms have no run-length
/// read-out, so those two fields are null and `location == t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub t: u64,
    pub location: u64,
    pub map_run_length: Option<u64>,
    pub map_posterior: Option<f64>,
    pub key: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeySummary {
    pub key: String,
    pub points: u64,
    pub events: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub loss: u64,
    pub penalty: PenaltyMode,
    pub actual: usize,
    pub predicted: usize,
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub points: u64,
    pub malformed: u64,
    pub events: u64,
    pub elapsed_s: f64,
    pub points_per_s: f64,
    /// Sorted by key.
    pub keys: Vec<KeySummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<Score>,
}

enum KeyState {
    Uni(UnivariateDetector),
    Mv(MvDetector),
    Cusum(CusumState),
    Ewma(EwmaState),
}

struct Stepped {
    event: Option<EventRecord>,
    diagnostics: Option<StepDiagnostics>,
}

impl KeyState {
    fn new(cfg: &RunConfig, dim: usize) -> Result<Self> {
        Ok(match (cfg.algorithm, dim) {
            (Algorithm::Bocpd, 1) => Self::Uni(UnivariateDetector::new(cfg.univariate(), 1)?),
            (Algorithm::Bocpd, d) => Self::Mv(MvDetector::new(cfg.multivariate(d)?, d)?),
            (Algorithm::Cusum, 1) => Self::Cusum(CusumState::new(cfg.cusum())?),
            (Algorithm::Ewma, 1) => Self::Ewma(EwmaState::new(cfg.ewma())?),
            (_, d) => {
                return Err(CliError::config(format!(
                    "cusum and ewma take one value column; input has {d}"
                )))
            }
        })
    }

    fn load(cfg: &RunConfig, dim: usize, text: &str) -> Result<Self> {
        let state = match (cfg.algorithm, dim) {
            (Algorithm::Bocpd, 1) => Self::Uni(UnivariateDetector::from_snapshot(text)?),
            (Algorithm::Bocpd, _) => Self::Mv(MvDetector::from_snapshot(text)?),
            (Algorithm::Cusum, _) => Self::Cusum(decode_snapshot(text)?),
            (Algorithm::Ewma, _) => Self::Ewma(decode_snapshot(text)?),
        };
        let got = match &state {
            Self::Uni(d) => d.dim(),
            Self::Mv(d) => d.dim(),
            _ => 1,
        };
        if got != dim {
            return Err(CliError::config(format!(
                "snapshot is for {got} value columns; input has {dim}"
            )));
        }
        Ok(state)
    }

    fn snapshot(&self) -> Result<String> {
        Ok(match self {
            Self::Uni(d) => d.to_snapshot()?,
            Self::Mv(d) => d.to_snapshot()?,
            Self::Cusum(s) => encode_snapshot(s)?,
            Self::Ewma(s) => encode_snapshot(s)?,
        })
    }

    fn step(&mut self, key: &str, x: &[f64]) -> Result<Stepped> {
        let (bocpd, alarm) = match self {
            Self::Uni(d) => (Some(d.step(x)?), None),
            Self::Mv(d) => (Some(d.step(x)?), None),
            Self::Cusum(s) => (None, s.step(x[0])?),
            Self::Ewma(s) => (None, s.step(x[0])?),
        };
        Ok(match bocpd {
            Some(out) => Stepped {
                event: out.event.map(|e| EventRecord {
                    t: e.detected_at,
                    location: e.location,
                    map_run_length: Some(e.map_run_length),
                    map_posterior: Some(e.map_posterior),
                    key: key.to_string(),
                }),
                diagnostics: out.diagnostics,
            },
            None => Stepped {
                event: alarm.map(|t| EventRecord {
                    t,
                    location: t,
                    map_run_length: None,
                    map_posterior: None,
                    key: key.to_string(),
                }),
                diagnostics: None,
            },
        })
    }
}

/// File holding the snapshot of `key` inside a snapshot directory. Keys are
/// hex-encoded so any key string maps to a safe file name.
pub fn snapshot_path(dir: &Path, key: &str) -> PathBuf {
    let hex: String = key.bytes().map(|b| format!("{b:02x}")).collect();
    dir.join(format!("key-{hex}.json"))
}

enum Out {
    Event(EventRecord),
    Plot { key: String, d: StepDiagnostics },
}

#[derive(Default)]
struct KeyCounts {
    points: u64,
    events: u64,
}

fn worker(cfg: &RunConfig, rx: Receiver<Row>, out: SyncSender<Out>) -> Result<HashMap<String, KeyCounts>> {
    let mut states: HashMap<String, (KeyState, KeyCounts)> = HashMap::new();
    for row in rx {
        let dim = row.values.len();
        if !states.contains_key(&row.key) {
            let saved = cfg
                .snapshot_in
                .as_deref()
                .map(|d| snapshot_path(d, &row.key))
                .filter(|p| p.exists());
            let state = match saved {
                Some(p) => KeyState::load(cfg, dim, &fs::read_to_string(&p)?)?,
                None => KeyState::new(cfg, dim)?,
            };
            states.insert(row.key.clone(), (state, KeyCounts::default()));
        }
        let (state, counts) = states.get_mut(&row.key).expect("inserted above");
        let stepped = state.step(&row.key, &row.values)?;
        counts.points += 1;
        let send = |o| out.send(o).map_err(|_| CliError::runtime("output writer stopped"));
        if let (true, Some(d)) = (cfg.plot_data.is_some(), stepped.diagnostics) {
            send(Out::Plot {
                key: row.key.clone(),
                d,
            })?;
        }
        if let Some(e) = stepped.event {
            counts.events += 1;
            send(Out::Event(e))?;
        }
    }
    if let Some(dir) = &cfg.snapshot_out {
        fs::create_dir_all(dir)?;
        for (key, (state, _)) in &states {
            fs::write(snapshot_path(dir, key), state.snapshot()?)?;
        }
    }
    Ok(states.into_iter().map(|(k, (_, c))| (k, c)).collect())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::runtime(format!("cannot create {}: {e}", path.display())))
}

/// Writes events and plot rows as they arrive; returns event locations per
/// key when `keep` is set.
fn writer(cfg: &RunConfig, rx: Receiver<Out>, keep: bool) -> Result<HashMap<String, Vec<u64>>> {
    let mut events: Box<dyn Write> = match &cfg.events {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut plot = match &cfg.plot_data {
        Some(p) => {
            let mut w = create(p)?;
            writeln!(w, "key,t,map_run_length,map_posterior,marginal_predictive")?;
            Some(csv::WriterBuilder::new().has_headers(false).from_writer(w))
        }
        None => None,
    };
    let mut kept: HashMap<String, Vec<u64>> = HashMap::new();
    for msg in rx {
        match msg {
            Out::Event(e) => {
                serde_json::to_writer(&mut events, &e).map_err(|e| CliError::runtime(e.to_string()))?;
                events.write_all(b"\n")?;
                if keep {
                    kept.entry(e.key).or_default().push(e.location);
                }
            }
            Out::Plot { key, d } => {
                if let Some(w) = plot.as_mut() {
                    w.write_record([
                        key,
                        d.t.to_string(),
                        d.map_run_length.to_string(),
                        d.map_posterior.to_string(),
                        d.marginal_predictive.to_string(),
                    ])
                    .map_err(|e| CliError::runtime(e.to_string()))?;
                }
            }
        }
    }
    events.flush()?;
    if let Some(mut w) = plot {
        w.flush()?;
    }
    Ok(kept)
}

fn shard(key: &str, workers: usize) -> usize {
    let mut h = DefaultHasher::new();
    key.hash(&mut h);
    (h.finish() % workers as u64) as usize
}

fn read_truth(path: &Path) -> Result<Vec<u64>> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse()
                .map_err(|_| CliError::config(format!("truth file: {l:?} is not an index")))
        })
        .collect()
}

/// Runs detection as configured and writes events, plot data, snapshots and
/// the summary.
pub fn detect(cfg: &RunConfig) -> Result<Summary> {
    let truth = cfg.truth.as_deref().map(read_truth).transpose()?;
    let reader = input::open(cfg.input.as_deref())?;
    let sel = Selection {
        key_column: cfg.key_column.as_deref(),
        columns: cfg.columns.as_deref(),
        transform: cfg.transform,
    };
    let started = Instant::now();
    let mut malformed = 0u64;
    let keep = truth.is_some();

    let (read_result, worker_results, kept) = thread::scope(|s| {
        let (out_tx, out_rx) = sync_channel::<Out>(CHANNEL_DEPTH);
        let writer = s.spawn(move || writer(cfg, out_rx, keep));
        let mut senders = Vec::with_capacity(cfg.workers);
        let mut handles = Vec::with_capacity(cfg.workers);
        for _ in 0..cfg.workers {
            let (tx, rx) = sync_channel::<Row>(CHANNEL_DEPTH);
            let out = out_tx.clone();
            senders.push(tx);
            handles.push(s.spawn(move || worker(cfg, rx, out)));
        }
        drop(out_tx);

        let mut dim: Option<usize> = None;
        let read_result = input::read(reader, cfg.format, &sel, |item| match item {
            Item::Row(row) => {
                let d = *dim.get_or_insert(row.values.len());
                if row.values.len() != d {
                    return Err(CliError::runtime("row width changed mid-stream"));
                }
                senders[shard(&row.key, cfg.workers)]
                    .send(row)
                    .map_err(|_| CliError::runtime("worker stopped"))
            }
            Item::Malformed { line, reason } => {
                malformed += 1;
                if malformed <= MAX_WARNINGS {
                    eprintln!("streamcpd: skipping line {line}: {reason}");
                }
                Ok(())
            }
        });
        drop(senders);
        let worker_results: Vec<_> = handles
            .into_iter()
            .map(|h| h.join().expect("worker panicked"))
            .collect();
        let kept = writer.join().expect("writer panicked");
        (read_result, worker_results, kept)
    });
    if malformed > MAX_WARNINGS {
        eprintln!("streamcpd: {malformed} malformed lines skipped in total");
    }

    // A worker failure is the root cause of any send error seen by the reader.
    let mut counts: BTreeMap<String, KeyCounts> = BTreeMap::new();
    for r in worker_results {
        counts.extend(r?);
    }
    read_result?;
    let kept = kept?;

    let elapsed_s = started.elapsed().as_secs_f64();
    let points: u64 = counts.values().map(|c| c.points).sum();
    let score = match truth {
        None => None,
        Some(actual) => {
            if counts.len() > 1 {
                return Err(CliError::config("--truth needs single-key input"));
            }
            let n = counts.values().map(|c| c.points).sum();
            let mut predicted: Vec<u64> = kept.into_values().flatten().collect();
            predicted.sort_unstable();
            let mode = if cfg.penalty_literal {
                PenaltyMode::Literal
            } else {
                PenaltyMode::Unmatched
            };
            let report = mae_with_penalty(&actual, &predicted, n, mode)?;
            Some(Score {
                loss: report.loss,
                penalty: mode,
                actual: report.j,
                predicted: report.k,
                n,
            })
        }
    };
    let summary = Summary {
        points,
        malformed,
        events: counts.values().map(|c| c.events).sum(),
        elapsed_s,
        points_per_s: if elapsed_s > 0.0 {
            points as f64 / elapsed_s
        } else {
            0.0
        },
        keys: counts
            .into_iter()
            .map(|(key, c)| KeySummary {
                key,
                points: c.points,
                events: c.events,
            })
            .collect(),
        score,
    };
    let text = serde_json::to_string_pretty(&summary).map_err(|e| CliError::runtime(e.to_string()))?;
    match &cfg.summary {
        Some(p) => fs::write(p, text + "\n")?,
        None => eprintln!("{text}"),
    }
    Ok(summary)
}
