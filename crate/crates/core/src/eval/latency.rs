//! Latency aggregation over per-query timing logs.
//!
//! Timing CSVs use the schema written by the search commands:
//! `qid,match_us,gather_us,aggregate_us,sparse_us,total_us`. The report
//! gives mean/p50/p95 per phase and a relative multiple against a named
//! baseline run, mirroring the `N×` convention of latency tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::online::SearchTiming;

pub const TIMING_HEADER: &str = "qid,match_us,gather_us,aggregate_us,sparse_us,total_us";

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub qid: String,
    pub timing: SearchTiming,
}

pub fn write_timing_csv(path: &Path, rows: &[TimingRow]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{TIMING_HEADER}").map_err(|e| Error::io(path, e))?;
    for row in rows {
        let t = &row.timing;
        writeln!(
            w,
            "{},{},{},{},{},{}",
            row.qid, t.match_us, t.gather_us, t.aggregate_us, t.sparse_us, t.total_us
        )
        .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_timing_csv(path: &Path) -> Result<Vec<TimingRow>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line_no == 1 {
            if line.trim() != TIMING_HEADER {
                return Err(Error::parse(path, 1, "unexpected timing CSV header"));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(path, line_no, "expected 6 columns"));
        }
        let parse = |s: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad integer {s:?}")))
        };
        rows.push(TimingRow {
            qid: fields[0].to_string(),
            timing: SearchTiming {
                match_us: parse(fields[1])?,
                gather_us: parse(fields[2])?,
                aggregate_us: parse(fields[3])?,
                sparse_us: parse(fields[4])?,
                total_us: parse(fields[5])?,
            },
        });
    }
    Ok(rows)
}

pub const PHASES: [&str; 5] = ["match", "gather", "aggregate", "sparse", "total"];

#[derive(Debug, Clone, Copy)]
pub struct PhaseStats {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

#[derive(Debug, Clone)]
pub struct LatencySummary {
    pub name: String,
    /// One entry per phase, in [`PHASES`] order.
    pub phases: Vec<PhaseStats>,
    /// mean total / baseline mean total.
    pub multiple: f64,
}

fn phase_value(t: &SearchTiming, phase: usize) -> u64 {
    match phase {
        0 => t.match_us,
        1 => t.gather_us,
        2 => t.aggregate_us,
        3 => t.sparse_us,
        _ => t.total_us,
    }
}

/// Nearest-rank percentile over a sorted sample.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn mean_total(rows: &[TimingRow]) -> f64 {
    rows.iter().map(|r| r.timing.total_us as f64).sum::<f64>() / rows.len() as f64
}

/// Summarize one or more timing logs. `baseline` names the run whose mean
/// total latency defines the 1× point; it must appear in `runs`.
pub fn latency_report(runs: &[(String, Vec<TimingRow>)], baseline: &str) -> Result<Vec<LatencySummary>> {
    for (name, rows) in runs {
        if rows.is_empty() {
            return Err(Error::invalid(format!("timing log {name:?} is empty")));
        }
    }
    let base = runs
        .iter()
        .find(|(name, _)| name == baseline)
        .ok_or_else(|| Error::invalid(format!("baseline run {baseline:?} not found")))?;
    let base_mean = mean_total(&base.1);

    let mut out = Vec::with_capacity(runs.len());
    for (name, rows) in runs {
        let mut phases = Vec::with_capacity(PHASES.len());
        for phase in 0..PHASES.len() {
            let mut values: Vec<f64> =
                rows.iter().map(|r| phase_value(&r.timing, phase) as f64).collect();
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            phases.push(PhaseStats {
                mean,
                p50: percentile(&values, 0.50),
                p95: percentile(&values, 0.95),
            });
        }
        out.push(LatencySummary {
            name: name.clone(),
            phases,
            multiple: mean_total(rows) / base_mean,
        });
    }
    Ok(out)
}
