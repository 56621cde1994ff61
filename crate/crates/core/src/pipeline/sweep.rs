//! α sweeps over several seeds, with an optional MSE baseline.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::eval::{evaluate, EvalReport};
use super::stats::{mean, sample_sd};
use super::train::{train, EpochRecord, LossKind, TrainConfig};
use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::model::Model;
use crate::parallel::{map_indexed, with_workers};
use crate::solve::CopSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunKind {
    Odece,
    Mse,
}

/// One (model kind, α, seed) run evaluated on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub model: RunKind,
    /// Empty for the MSE baseline.
    pub alpha: Option<f64>,
    pub seed: u64,
    pub infeasibility: Option<f64>,
    pub regret: Option<f64>,
    pub n_test: usize,
    pub wall_time_s: f64,
    /// Set when the run failed; metrics are then empty.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: RunKind,
    pub alpha: Option<f64>,
    pub runs: usize,
    pub infeasibility_mean: Option<f64>,
    pub infeasibility_sd: Option<f64>,
    pub regret_mean: Option<f64>,
    pub regret_sd: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepRun {
    pub row: FrontierRow,
    pub history: Vec<EpochRecord>,
    pub report: Option<EvalReport>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub runs: Vec<SweepRun>,
    pub aggregates: Vec<AggregateRow>,
}

impl SweepResult {
    pub fn rows(&self) -> Vec<FrontierRow> {
        self.runs.iter().map(|r| r.row.clone()).collect()
    }

    /// Per-seed rows of one kind/α, in seed order.
    pub fn rows_for(&self, model: RunKind, alpha: Option<f64>) -> Vec<&FrontierRow> {
        self.runs
            .iter()
            .map(|r| &r.row)
            .filter(|r| r.model == model && r.alpha == alpha)
            .collect()
    }
}

/// Train and test one model per (α, seed), plus one MSE model per seed when
/// `include_mse` is set. `model_factory` receives the run seed.
///
/// Failed runs are kept as rows carrying the error message.
pub fn alpha_sweep(
    dataset: &Dataset,
    model_factory: &(dyn Fn(u64) -> Model + Sync),
    base: &TrainConfig,
    alphas: &[f64],
    seeds: &[u64],
    include_mse: bool,
    solver: &dyn CopSolver,
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::config("sweep needs at least one seed"));
    }
    if let Some(a) = alphas.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::config(format!("alpha {a} outside [0, 1]")));
    }
    let mut plan: Vec<(RunKind, Option<f64>)> =
        alphas.iter().map(|&a| (RunKind::Odece, Some(a))).collect();
    if include_mse {
        plan.push((RunKind::Mse, None));
    }
    let jobs: Vec<(RunKind, Option<f64>, u64)> = plan
        .iter()
        .flat_map(|&(k, a)| seeds.iter().map(move |&s| (k, a, s)))
        .collect();

    let test = dataset.test();
    let runs = with_workers(base.workers, || {
        map_indexed(jobs.len(), |j| {
            let (kind, alpha, seed) = jobs[j];
            let mut cfg = base.clone();
            cfg.seed = seed;
            cfg.workers = 1;
            match kind {
                RunKind::Odece => {
                    cfg.loss_kind = LossKind::Odece;
                    cfg.loss.alpha = alpha.unwrap_or(cfg.loss.alpha);
                }
                RunKind::Mse => cfg.loss_kind = LossKind::Mse,
            }
            let start = Instant::now();
            let outcome = train(dataset, model_factory(seed), &cfg, solver)
                .and_then(|t| evaluate(&test, &t.model, solver).map(|r| (t, r)));
            let wall_time_s = start.elapsed().as_secs_f64();
            let mut row = FrontierRow {
                model: kind,
                alpha,
                seed,
                infeasibility: None,
                regret: None,
                n_test: test.len(),
                wall_time_s,
                error: None,
            };
            match outcome {
                Ok((t, report)) => {
                    row.infeasibility = Some(report.infeasibility_ratio);
                    row.regret = report.normalized_regret;
                    SweepRun {
                        row,
                        history: t.history,
                        report: Some(report),
                    }
                }
                Err(e) => {
                    log::warn!("sweep run {kind:?} alpha {alpha:?} seed {seed} failed: {e}");
                    row.error = Some(e.to_string());
                    SweepRun {
                        row,
                        history: Vec::new(),
                        report: None,
                    }
                }
            }
        })
    });

    let aggregates = plan
        .iter()
        .map(|&(kind, alpha)| {
            let rows: Vec<&FrontierRow> = runs
                .iter()
                .map(|r| &r.row)
                .filter(|r| r.model == kind && r.alpha == alpha)
                .collect();
            aggregate(kind, alpha, &rows)
        })
        .collect();
    Ok(SweepResult { runs, aggregates })
}

fn aggregate(model: RunKind, alpha: Option<f64>, rows: &[&FrontierRow]) -> AggregateRow {
    let inf: Vec<f64> = rows.iter().filter_map(|r| r.infeasibility).collect();
    let reg: Vec<f64> = rows.iter().filter_map(|r| r.regret).collect();
    let summary = |v: &[f64]| match v.len() {
        0 => (None, None),
        1 => (Some(v[0]), None),
        _ => (Some(mean(v)), Some(sample_sd(v))),
    };
    let (im, isd) = summary(&inf);
    let (rm, rsd) = summary(&reg);
    AggregateRow {
        model,
        alpha,
        runs: rows.len(),
        infeasibility_mean: im,
        infeasibility_sd: isd,
        regret_mean: rm,
        regret_sd: rsd,
    }
}
