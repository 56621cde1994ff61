//! Training, evaluation, α sweeps, and result files.

mod eval;
pub mod stats;
mod sweep;
mod train;

use std::fs::File;
use std::path::Path;

use serde::Serialize;

pub use eval::{evaluate, relative_regret, EvalReport, InstanceRecord};
pub use stats::{paired_t_test, Alternative};
pub use sweep::{alpha_sweep, AggregateRow, FrontierRow, RunKind, SweepResult, SweepRun};
pub use train::{
    default_learning_rate, mean_loss, mse_loss, train, EpochRecord, LossKind, ModelSelection,
    TrainConfig, TrainOutcome,
};

use crate::error::{Error, Result};

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Columns: model, alpha, seed, infeasibility, regret, n_test, wall_time_s, error.
pub fn write_frontier_csv(path: &Path, rows: &[FrontierRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    write_csv(path, rows)
}

pub fn write_history_csv(path: &Path, history: &[EpochRecord]) -> Result<()> {
    write_csv(path, history)
}

pub fn write_instance_csv(path: &Path, report: &EvalReport) -> Result<()> {
    write_csv(path, &report.records)
}

pub fn write_report_json(path: &Path, report: &EvalReport) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Read frontier rows back, e.g. for plotting.
pub fn read_frontier_csv(path: &Path) -> Result<Vec<FrontierRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .enumerate()
        .map(|(k, row)| {
            row.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                row: k + 1,
                detail: e.to_string(),
            })
        })
        .collect()
}
