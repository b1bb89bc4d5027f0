//! CSV and text artifacts: per-run series, the summary table and the
//! ranking report.
//!
//! Coverage values are written with six decimals. Lifetime integrals are
//! computed from those printed values in integer micro-units so they can be
//! recomputed exactly from the series files.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::construction::TcProtocol;
use crate::coverage::MetricsSample;
use crate::engine::{RunResult, TmChoice};
use crate::error::{Result, SimError};
use crate::maintenance::TmProtocol;

pub const SERIES_HEADER: &str = "step,alive,sink_reachable,comm_coverage,sensing_coverage";
pub const SUMMARY_HEADER: &str = "tc,tm,seed,time_to_first_death,time_to_10pct_reachability,\
integrated_comm_coverage,integrated_sensing_coverage,steps,terminated_early";

/// Fixed-point value in millionths, printed with six decimals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Serialize)]
pub struct Micros(pub i64);

impl Micros {
    /// Micro-units of `value` exactly as `{:.6}` prints it.
    pub fn of(value: f64) -> Micros {
        let text = format!("{value:.6}");
        Micros(text.replace('.', "").parse().expect("formatted float parses"))
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl std::fmt::Display for Micros {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let v = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:06}", v / 1_000_000, v % 1_000_000)
    }
}

pub fn series_csv(series: &[MetricsSample]) -> String {
    let mut out = String::with_capacity(32 * (series.len() + 1));
    out.push_str(SERIES_HEADER);
    out.push('\n');
    for s in series {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            s.time, s.alive, s.sink_reachable, s.comm_coverage, s.sensing_coverage
        );
    }
    out
}

/// Writes the metric series of `result` as CSV.
pub fn emit_series(result: &RunResult, path: &Path) -> Result<()> {
    write_file(path, &series_csv(&result.series))
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| SimError::io(path, e))
}

pub fn series_file_name(tc: TcProtocol, tm: TmChoice, seed: u64) -> String {
    format!("series_{tc}_{tm}_seed{seed}.csv")
}

/// Left Riemann sum `Σ v_i·(t_{i+1} - t_i)` over the printed values.
pub fn left_sum(series: &[MetricsSample], value: impl Fn(&MetricsSample) -> f64) -> Micros {
    Micros(
        series
            .windows(2)
            .map(|w| Micros::of(value(&w[0])).0 * (w[1].time - w[0].time) as i64)
            .sum(),
    )
}

/// Lifetime metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub tc: TcProtocol,
    pub tm: TmChoice,
    pub seed: u64,
    /// First step with a dead node; the last sampled step if none died.
    pub time_to_first_death: u64,
    /// First sampled step with fewer than 10% of the deployed nodes
    /// reachable from the sink; the last sampled step if never reached.
    pub time_to_10pct_reachability: u64,
    pub integrated_comm_coverage: Micros,
    pub integrated_sensing_coverage: Micros,
    pub steps: u64,
    pub terminated_early: bool,
}

impl SummaryRow {
    pub fn from_run(tc: TcProtocol, tm: TmChoice, seed: u64, node_count: usize, result: &RunResult) -> Self {
        let horizon = result.series.last().map_or(0, |s| s.time);
        let first_death = result.death_times.values().copied().min().unwrap_or(horizon);
        let below = result
            .series
            .iter()
            .find(|s| 10 * s.sink_reachable < node_count)
            .map_or(horizon, |s| s.time);
        SummaryRow {
            tc,
            tm,
            seed,
            time_to_first_death: first_death,
            time_to_10pct_reachability: below,
            integrated_comm_coverage: left_sum(&result.series, |s| s.comm_coverage),
            integrated_sensing_coverage: left_sum(&result.series, |s| s.sensing_coverage),
            steps: result.totals.steps,
            terminated_early: result.totals.terminated_early,
        }
    }

    pub fn label(&self) -> String {
        format!("{}+{}", self.tc, self.tm)
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::new();
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.tc,
            r.tm,
            r.seed,
            r.time_to_first_death,
            r.time_to_10pct_reachability,
            r.integrated_comm_coverage,
            r.integrated_sensing_coverage,
            r.steps,
            r.terminated_early
        );
    }
    out
}

/// One protocol combination aggregated over seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub rank: usize,
    pub tc: TcProtocol,
    pub tm: TmChoice,
    pub runs: usize,
    pub mean_integrated_comm: f64,
    pub mean_integrated_sensing: f64,
    pub mean_time_to_10pct: f64,
}

/// Orders combinations by mean integrated communication coverage,
/// descending; ties keep grid order.
pub fn rank(rows: &[SummaryRow]) -> Vec<RankEntry> {
    let mut groups: BTreeMap<(TcProtocol, TmChoice), Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((r.tc, r.tm)).or_default().push(r);
    }
    let mut entries: Vec<RankEntry> = groups
        .into_iter()
        .map(|((tc, tm), rs)| {
            let n = rs.len() as f64;
            RankEntry {
                rank: 0,
                tc,
                tm,
                runs: rs.len(),
                mean_integrated_comm: rs.iter().map(|r| r.integrated_comm_coverage.0 as f64).sum::<f64>() / n / 1e6,
                mean_integrated_sensing: rs.iter().map(|r| r.integrated_sensing_coverage.0 as f64).sum::<f64>()
                    / n
                    / 1e6,
                mean_time_to_10pct: rs.iter().map(|r| r.time_to_10pct_reachability as f64).sum::<f64>() / n,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.mean_integrated_comm.total_cmp(&a.mean_integrated_comm));
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    entries
}

pub fn ranking_report(entries: &[RankEntry]) -> String {
    let mut out = String::new();
    out.push_str("# Protocol combinations ranked by mean time-integrated communication coverage\n");
    out.push_str("rank,tc,tm,runs,mean_integrated_comm_coverage,mean_integrated_sensing_coverage,mean_time_to_10pct_reachability\n");
    for e in entries {
        let _ = writeln!(
            out,
            "{},{},{},{},{:.6},{:.6},{:.3}",
            e.rank, e.tc, e.tm, e.runs, e.mean_integrated_comm, e.mean_integrated_sensing, e.mean_time_to_10pct
        );
    }
    let reference = entries
        .iter()
        .find(|e| e.tc == TcProtocol::A3 && e.tm == TmChoice::Protocol(TmProtocol::DGETRec));
    match reference {
        Some(e) => {
            let _ = writeln!(out, "A3+DGETRec rank: {} of {}", e.rank, entries.len());
        }
        None => out.push_str("A3+DGETRec rank: not in grid\n"),
    }
    out
}
