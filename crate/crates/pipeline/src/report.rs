//! Run reports: per-trial records, aggregates derived from them, and their
//! CSV / JSON files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use specx_core::mwc::RateLine;

use crate::config::{Feasibility, ScenarioConfig};
use crate::error::{PipelineError, Result};
use crate::trials::{SenseTrial, TrialData};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Comm detection rates of one algorithm at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionRow {
    pub algorithm: String,
    /// Empty for noiseless points.
    pub snr_db: Option<f64>,
    pub channels: usize,
    /// Detected fraction of all occupied slices.
    pub p_d: f64,
    pub ci95: f64,
    /// Detected fraction of the comm slices outside the radar support.
    pub p_d_comm: f64,
    pub exact_rate: f64,
    pub trials: usize,
}

/// Radar hit rate of one band layout at one SNR.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutRow {
    pub band_layout: String,
    pub snr_db: f64,
    pub hit_rate: f64,
    pub ci95: f64,
    /// Over all hit targets; empty when nothing was hit.
    pub range_rmse_m: Option<f64>,
    /// Fraction of trials where the layout could not be placed.
    pub blocked_rate: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub mean: f64,
    pub ci95: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "table", content = "rows", rename_all = "kebab-case")]
pub enum Aggregates {
    Detection(Vec<DetectionRow>),
    Layout(Vec<LayoutRow>),
    Metrics(Vec<MetricRow>),
}

/// Which aggregate table a trial kind produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    Sense,
    Bands,
    Radar,
    Specx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    /// Sweep point index.
    pub point: usize,
    pub data: TrialData,
}

/// Rate accounting carried by every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accounting {
    /// `f_tot = M f_s` and `M / N` at slice-rate (virtual) channels.
    pub rate: RateLine,
    /// Physical branches and their rate when channels are collapsed.
    pub physical_channels: usize,
    pub physical_f_s: f64,
    /// Nominal radar occupancy `N_b B_band / B_h`.
    pub radar_occupancy: f64,
}

/// Everything but the per-trial table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub run_id: String,
    pub command: String,
    pub kind: ReportKind,
    pub config: ScenarioConfig,
    pub feasibility: Feasibility,
    pub accounting: Accounting,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub header: ReportHeader,
    pub aggregates: Aggregates,
    pub trials: Vec<TrialRecord>,
}

#[derive(Serialize, Deserialize)]
struct AggregateDoc {
    header: ReportHeader,
    aggregates: Aggregates,
}

/// Mean and 95% half-width `1.96 s / sqrt(n)`.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, 1.96 * (var / n as f64).sqrt())
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Trials grouped by sweep point, points in first-seen order.
fn by_point(trials: &[TrialRecord]) -> Vec<Vec<&TrialData>> {
    let mut points: Vec<usize> = Vec::new();
    let mut groups: Vec<Vec<&TrialData>> = Vec::new();
    for t in trials {
        match points.iter().position(|&p| p == t.point) {
            Some(i) => groups[i].push(&t.data),
            None => {
                points.push(t.point);
                groups.push(vec![&t.data]);
            }
        }
    }
    groups
}

fn metric(name: &str, xs: &[f64]) -> MetricRow {
    let (mean, ci95) = mean_ci(xs);
    MetricRow {
        metric: name.into(),
        mean,
        ci95,
        trials: xs.len(),
    }
}

/// Aggregate table of a set of trial records.
pub fn aggregate(kind: ReportKind, trials: &[TrialRecord]) -> Aggregates {
    match kind {
        ReportKind::Sense => {
            let mut rows = Vec::new();
            for group in by_point(trials) {
                let s: Vec<_> = group
                    .iter()
                    .filter_map(|d| match d {
                        TrialData::Sense(s) => Some(s),
                        _ => None,
                    })
                    .collect();
                let Some(first) = s.first() else { continue };
                type Pick = fn(&SenseTrial) -> (f64, f64, bool);
                let omp: Pick = |t| (t.p_d_omp, t.p_d_comm_omp, t.exact_omp);
                let pks: Pick = |t| (t.p_d_pks, t.p_d_comm_pks, t.exact_pks);
                for (name, get) in [("omp", omp), ("omp-pks", pks)] {
                    let pd: Vec<f64> = s.iter().map(|&t| get(t).0).collect();
                    let comm: Vec<f64> = s.iter().map(|&t| get(t).1).collect();
                    let exact: Vec<f64> = s.iter().map(|&t| flag(get(t).2)).collect();
                    let (p_d, ci95) = mean_ci(&pd);
                    rows.push(DetectionRow {
                        algorithm: name.into(),
                        snr_db: first.snr_db,
                        channels: first.channels,
                        p_d,
                        ci95,
                        p_d_comm: mean_ci(&comm).0,
                        exact_rate: mean_ci(&exact).0,
                        trials: s.len(),
                    });
                }
            }
            Aggregates::Detection(rows)
        }
        ReportKind::Radar => {
            let mut rows = Vec::new();
            for group in by_point(trials) {
                let r: Vec<_> = group
                    .iter()
                    .filter_map(|d| match d {
                        TrialData::Radar(r) => Some(r),
                        _ => None,
                    })
                    .collect();
                let Some(first) = r.first() else { continue };
                let (hit_rate, ci95) = mean_ci(&r.iter().map(|t| t.hit_rate).collect::<Vec<_>>());
                let errs: Vec<f64> = r
                    .iter()
                    .flat_map(|t| t.range_errors_m.iter().copied())
                    .collect();
                rows.push(LayoutRow {
                    band_layout: first.layout.label().into(),
                    snr_db: first.snr_db,
                    hit_rate,
                    ci95,
                    range_rmse_m: (!errs.is_empty()).then(|| {
                        (errs.iter().map(|e| e * e).sum::<f64>() / errs.len() as f64).sqrt()
                    }),
                    blocked_rate: mean_ci(&r.iter().map(|t| flag(t.blocked)).collect::<Vec<_>>()).0,
                    trials: r.len(),
                });
            }
            Aggregates::Layout(rows)
        }
        ReportKind::Bands => {
            let b: Vec<_> = trials
                .iter()
                .filter_map(|t| match &t.data {
                    TrialData::Bands(b) => Some(b),
                    _ => None,
                })
                .collect();
            Aggregates::Metrics(vec![
                metric(
                    "disjoint",
                    &b.iter().map(|t| flag(t.disjoint)).collect::<Vec<_>>(),
                ),
                metric(
                    "blocks",
                    &b.iter().map(|t| t.blocks as f64).collect::<Vec<_>>(),
                ),
                metric(
                    "residual",
                    &b.iter().map(|t| t.residual).collect::<Vec<_>>(),
                ),
            ])
        }
        ReportKind::Specx => {
            let s: Vec<_> = trials
                .iter()
                .filter_map(|t| match &t.data {
                    TrialData::Specx(s) => Some(s),
                    _ => None,
                })
                .collect();
            let last = |f: &dyn Fn(&crate::trials::SpecxIteration) -> f64| -> Vec<f64> {
                s.iter()
                    .filter_map(|t| t.iterations.last().map(f))
                    .collect()
            };
            let all = |f: &dyn Fn(&crate::trials::SpecxIteration) -> bool| -> Vec<f64> {
                s.iter().map(|t| flag(t.iterations.iter().all(f))).collect()
            };
            Aggregates::Metrics(vec![
                metric(
                    "initial_p_d",
                    &s.iter().map(|t| t.initial_p_d).collect::<Vec<_>>(),
                ),
                metric("resense_p_d", &last(&|i| i.resense_p_d)),
                metric("hit_rate", &last(&|i| i.radar.hit_rate)),
                metric(
                    "converged",
                    &s.iter().map(|t| flag(t.converged)).collect::<Vec<_>>(),
                ),
                metric(
                    "blocked",
                    &s.iter().map(|t| flag(t.blocked)).collect::<Vec<_>>(),
                ),
                metric(
                    "iterations",
                    &s.iter()
                        .map(|t| t.iterations.len() as f64)
                        .collect::<Vec<_>>(),
                ),
                metric("disjoint_detected", &all(&|i| i.disjoint)),
                metric("disjoint_true", &all(&|i| i.disjoint_true)),
            ])
        }
    }
}

const DETECTION_HEADER: [&str; 8] = [
    "algorithm",
    "snr_db",
    "channels",
    "p_d",
    "ci95",
    "p_d_comm",
    "exact_rate",
    "trials",
];
const LAYOUT_HEADER: [&str; 7] = [
    "band_layout",
    "snr_db",
    "hit_rate",
    "ci95",
    "range_rmse_m",
    "blocked_rate",
    "trials",
];
const METRIC_HEADER: [&str; 4] = ["metric", "mean", "ci95", "trials"];
const TRIAL_HEADER: [&str; 3] = ["trial", "point", "record"];

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub aggregate: PathBuf,
    pub trials: PathBuf,
    /// Header (config, accounting) of CSV reports.
    pub header: Option<PathBuf>,
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)?)
}

fn write_rows<T: Serialize>(path: &Path, header: &[&str], rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Writes `<run-id>-aggregate.<ext>` and `<run-id>-trials.<ext>` into `dir`
/// (CSV reports add `<run-id>-header.json`).
pub fn emit_report(r: &RunReport, dir: &Path, format: Format) -> Result<ReportFiles> {
    std::fs::create_dir_all(dir)?;
    let id = &r.header.run_id;
    let ext = format.ext();
    let files = ReportFiles {
        aggregate: dir.join(format!("{id}-aggregate.{ext}")),
        trials: dir.join(format!("{id}-trials.{ext}")),
        header: (format == Format::Csv).then(|| dir.join(format!("{id}-header.json"))),
    };
    match format {
        Format::Json => {
            write_json(
                &files.aggregate,
                &AggregateDoc {
                    header: r.header.clone(),
                    aggregates: r.aggregates.clone(),
                },
            )?;
            write_json(&files.trials, &r.trials)?;
        }
        Format::Csv => {
            match &r.aggregates {
                Aggregates::Detection(rows) => {
                    write_rows(&files.aggregate, &DETECTION_HEADER, rows)?
                }
                Aggregates::Layout(rows) => write_rows(&files.aggregate, &LAYOUT_HEADER, rows)?,
                Aggregates::Metrics(rows) => write_rows(&files.aggregate, &METRIC_HEADER, rows)?,
            }
            let mut w = csv_writer(&files.trials)?;
            w.write_record(TRIAL_HEADER)?;
            for t in &r.trials {
                w.write_record([
                    t.trial.to_string(),
                    t.point.to_string(),
                    serde_json::to_string(&t.data)?,
                ])?;
            }
            w.flush()?;
            write_json(files.header.as_ref().expect("csv header path"), &r.header)?;
        }
    }
    Ok(files)
}

fn read_rows<T: for<'de> Deserialize<'de>>(rdr: &mut csv::Reader<File>) -> Result<Vec<T>> {
    rdr.deserialize()
        .map(|r| r.map_err(PipelineError::from))
        .collect()
}

/// Loads a report written by [`emit_report`].
pub fn load_report(dir: &Path, run_id: &str, format: Format) -> Result<RunReport> {
    let ext = format.ext();
    let agg_path = dir.join(format!("{run_id}-aggregate.{ext}"));
    let trials_path = dir.join(format!("{run_id}-trials.{ext}"));
    match format {
        Format::Json => {
            let doc: AggregateDoc = serde_json::from_reader(File::open(&agg_path)?)?;
            let trials: Vec<TrialRecord> = serde_json::from_reader(File::open(&trials_path)?)?;
            Ok(RunReport {
                header: doc.header,
                aggregates: doc.aggregates,
                trials,
            })
        }
        Format::Csv => {
            let header: ReportHeader =
                serde_json::from_reader(File::open(dir.join(format!("{run_id}-header.json")))?)?;
            let mut rdr = csv::Reader::from_path(&agg_path)?;
            let first = rdr.headers()?.get(0).unwrap_or("").to_string();
            let aggregates = match first.as_str() {
                "algorithm" => Aggregates::Detection(read_rows(&mut rdr)?),
                "band_layout" => Aggregates::Layout(read_rows(&mut rdr)?),
                "metric" => Aggregates::Metrics(read_rows(&mut rdr)?),
                other => {
                    return Err(PipelineError::Config(format!(
                        "unknown aggregate table starting with {other:?}"
                    )))
                }
            };
            let mut rdr = csv::Reader::from_path(&trials_path)?;
            let mut trials = Vec::new();
            for rec in rdr.records() {
                let rec = rec?;
                let field = |i: usize| rec.get(i).unwrap_or("");
                let parse = |s: &str| {
                    s.parse::<u64>()
                        .map_err(|e| PipelineError::Config(format!("bad trial row: {e}")))
                };
                trials.push(TrialRecord {
                    trial: parse(field(0))?,
                    point: parse(field(1))? as usize,
                    data: serde_json::from_str(field(2))?,
                });
            }
            Ok(RunReport {
                header,
                aggregates,
                trials,
            })
        }
    }
}
