//! Experiment harness: config ingestion, single runs, protocol-grid sweeps
//! and their CSV/text artifacts.

mod config;
mod output;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};

pub use config::{parse_config, parse_config_str, ExperimentSpec, KEYS};
pub use output::{
    emit_series, left_sum, rank, ranking_report, series_csv, series_file_name, summary_csv, Micros, RankEntry,
    SummaryRow, SERIES_HEADER, SUMMARY_HEADER,
};

use crate::construction::TcProtocol;
use crate::engine::{run, RunResult, TmChoice};
use crate::error::{Result, SimError};
use crate::parallel::{map_ordered, Execution};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RANKING_FILE: &str = "ranking.txt";

/// Files and tables produced by a sweep.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub series_files: Vec<PathBuf>,
    pub summary_file: PathBuf,
    pub ranking_file: PathBuf,
    pub rows: Vec<SummaryRow>,
    pub ranking: Vec<RankEntry>,
}

/// Runs one grid cell, turning panics into errors that name the cell.
pub fn run_one(spec: &ExperimentSpec, tc: TcProtocol, tm: TmChoice, seed: u64) -> Result<RunResult> {
    let label = format!("{tc}+{tm} seed {seed}");
    let config = spec.run_config(tc, tm, seed);
    match catch_unwind(AssertUnwindSafe(|| run(&config))) {
        Ok(Ok(result)) => Ok(result),
        Ok(Err(e)) => Err(SimError::RunFailed {
            label,
            reason: e.to_string(),
        }),
        Err(panic) => {
            let reason = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            Err(SimError::RunFailed { label, reason })
        }
    }
}

/// Executes every (tc, tm, seed) combination of `spec` and writes one series
/// CSV per run, `summary.csv` and `ranking.txt` into `spec.output_dir`.
/// Runs are distributed over `exec`; every file is written by exactly one
/// worker and the summary is assembled afterwards in grid order.
pub fn run_experiment(spec: &ExperimentSpec, exec: Execution) -> Result<ExperimentOutput> {
    spec.validate()?;
    let dir = &spec.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| SimError::io(dir, e))?;

    let combos = spec.combinations();
    let node_count = spec.base.deployment.node_count;
    let outcomes = map_ordered(exec, &combos, |&(tc, tm, seed)| -> Result<(SummaryRow, PathBuf)> {
        let result = run_one(spec, tc, tm, seed)?;
        let path = dir.join(series_file_name(tc, tm, seed));
        emit_series(&result, &path)?;
        Ok((SummaryRow::from_run(tc, tm, seed, node_count, &result), path))
    });

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut series_files = Vec::with_capacity(outcomes.len());
    for outcome in outcomes {
        let (row, path) = outcome?;
        rows.push(row);
        series_files.push(path);
    }

    let summary_file = dir.join(SUMMARY_FILE);
    output::write_file(&summary_file, &summary_csv(&rows))?;
    let ranking = rank(&rows);
    let ranking_file = dir.join(RANKING_FILE);
    output::write_file(&ranking_file, &ranking_report(&ranking))?;

    Ok(ExperimentOutput {
        series_files,
        summary_file,
        ranking_file,
        rows,
        ranking,
    })
}

/// Runs the base configuration once and writes its series CSV into `out`.
pub fn simulate(spec: &ExperimentSpec, seed: Option<u64>, out: &Path) -> Result<(SummaryRow, PathBuf)> {
    spec.validate()?;
    let base = &spec.base;
    let seed = seed.unwrap_or(base.deployment.seed);
    std::fs::create_dir_all(out).map_err(|e| SimError::io(out, e))?;
    let result = run_one(spec, base.tc, base.tm, seed)?;
    let path = out.join(series_file_name(base.tc, base.tm, seed));
    emit_series(&result, &path)?;
    let row = SummaryRow::from_run(base.tc, base.tm, seed, base.deployment.node_count, &result);
    Ok((row, path))
}
