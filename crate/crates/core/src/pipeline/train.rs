//! Mini-batch training with the decision-aware loss or the MSE baseline.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::eval::evaluate;
use crate::cop::{CopInstance, ParameterVector};
use crate::datagen::{Dataset, Problem};
use crate::error::{Error, Result};
use crate::loss::{combined_loss, LossConfig};
use crate::model::{Model, Optimizer, OptimizerKind, Predictor};
use crate::parallel::{map_indexed, with_workers};
use crate::solve::CopSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Odece,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSelection {
    FinalEpoch,
    /// Lowest validation loss of the kind being trained.
    BestValidationCombinedLoss,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss_kind: LossKind,
    pub loss: LossConfig,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub model_selection: ModelSelection,
    /// Evaluate validation infeasibility/regret after every epoch.
    pub track_validation_metrics: bool,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss_kind: LossKind::Odece,
            loss: LossConfig::default(),
            epochs: 30,
            batch_size: 32,
            learning_rate: default_learning_rate(Problem::MdkpWeights),
            optimizer: OptimizerKind::Adam,
            seed: 0,
            model_selection: ModelSelection::BestValidationCombinedLoss,
            track_validation_metrics: true,
            workers: 1,
        }
    }
}

/// Per-problem learning rates used by default.
pub fn default_learning_rate(problem: Problem) -> f64 {
    match problem {
        Problem::MdkpWeights => 0.05,
        Problem::MdkpCapacities => 0.005,
        Problem::Alloy => 0.001,
    }
}

impl TrainConfig {
    pub fn for_problem(problem: Problem) -> Self {
        TrainConfig {
            learning_rate: default_learning_rate(problem),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config("epochs and batch_size must be at least 1"));
        }
        if self.loss_kind == LossKind::Odece {
            self.loss.validate(false)?;
        }
        Optimizer::new(self.optimizer, self.learning_rate).map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub validation_loss: f64,
    pub validation_infeasibility: Option<f64>,
    pub validation_regret: Option<f64>,
    /// Training instances whose predicted problem had no solution.
    pub no_predicted_solution: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub history: Vec<EpochRecord>,
    /// Epoch (1-based) whose parameters were returned.
    pub selected_epoch: usize,
}

/// Mean squared error between prediction and truth, with its gradient.
pub fn mse_loss(rho_hat: &ParameterVector, rho_true: &ParameterVector) -> Result<(f64, Vec<f64>)> {
    if rho_hat.len() != rho_true.len() || rho_hat.is_empty() {
        return Err(Error::shape("prediction and truth differ in length"));
    }
    let p = rho_hat.len() as f64;
    let diff: Vec<f64> = rho_hat
        .as_slice()
        .iter()
        .zip(rho_true.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let value = diff.iter().map(|d| d * d).sum::<f64>() / p;
    Ok((value, diff.into_iter().map(|d| 2.0 * d / p).collect()))
}

struct InstanceLoss {
    value: f64,
    grad_rho: Vec<f64>,
    no_solution: bool,
}

fn instance_loss(
    inst: &CopInstance,
    rho_hat: &ParameterVector,
    cfg: &TrainConfig,
    solver: &dyn CopSolver,
) -> Result<InstanceLoss> {
    match cfg.loss_kind {
        LossKind::Mse => {
            let (value, grad_rho) = mse_loss(rho_hat, &inst.rho_true)?;
            Ok(InstanceLoss {
                value,
                grad_rho,
                no_solution: false,
            })
        }
        LossKind::Odece => {
            let x_star = inst
                .x_star
                .as_ref()
                .ok_or_else(|| Error::config("training instance lacks its true optimum"))?;
            let lv = combined_loss(
                &inst.system,
                &inst.objective,
                &inst.rho_true,
                rho_hat,
                x_star,
                &cfg.loss,
                solver,
            )?;
            Ok(InstanceLoss {
                value: lv.value,
                grad_rho: lv.grad_rho_hat,
                no_solution: lv.no_predicted_solution,
            })
        }
    }
}

/// Mean loss of `model` over `instances` (no parameter update).
pub fn mean_loss(
    instances: &[&CopInstance],
    model: &Model,
    cfg: &TrainConfig,
    solver: &dyn CopSolver,
) -> Result<f64> {
    if instances.is_empty() {
        return Ok(0.0);
    }
    let values = map_indexed(instances.len(), |k| {
        let rho_hat = model.predict(&instances[k].features)?;
        instance_loss(instances[k], &rho_hat, cfg, solver).map(|l| l.value)
    })
    .into_iter()
    .collect::<Result<Vec<f64>>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Train `model` on the dataset's training split.
///
/// Each Odece step solves every batch instance under the current prediction
/// (unless `alpha == 0`). Per-instance gradients are reduced in index order,
/// so the trajectory does not depend on the worker count.
pub fn train(
    dataset: &Dataset,
    model: Model,
    cfg: &TrainConfig,
    solver: &dyn CopSolver,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if model.out_dim() != dataset.num_predicted() || model.in_dim() != dataset.num_features() {
        return Err(Error::shape(format!(
            "model maps {} -> {}, dataset needs {} -> {}",
            model.in_dim(),
            model.out_dim(),
            dataset.num_features(),
            dataset.num_predicted()
        )));
    }
    with_workers(cfg.workers, || train_inner(dataset, model, cfg, solver))
}

fn train_inner(
    dataset: &Dataset,
    mut model: Model,
    cfg: &TrainConfig,
    solver: &dyn CopSolver,
) -> Result<TrainOutcome> {
    let train_idx = &dataset.splits.train;
    let validation = dataset.validation();
    let mut optimizer = Optimizer::new(cfg.optimizer, cfg.learning_rate)?;
    let mut order = train_idx.clone();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(f64, Model, usize)> = None;

    for epoch in 1..=cfg.epochs {
        let mut rng = crate::datagen::rng::stream(cfg.seed, epoch as u64);
        order.shuffle(&mut rng);
        let mut epoch_total = 0.0;
        let mut no_solution = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            let weight = cfg.loss.instance_weight(batch.len());
            let snapshot = &model;
            let per_instance = map_indexed(batch.len(), |b| {
                let idx = batch[b];
                let inst = &dataset.instances[idx];
                let rho_hat = snapshot.predict(&inst.features)?;
                let loss = instance_loss(inst, &rho_hat, cfg, solver)?;
                if !loss.value.is_finite() || !loss.grad_rho.iter().all(|g| g.is_finite()) {
                    return Err(Error::Divergence {
                        epoch,
                        instance: idx,
                        detail: format!("non-finite loss {}", loss.value),
                    });
                }
                let scaled: Vec<f64> = loss.grad_rho.iter().map(|g| g * weight).collect();
                let grad = snapshot.backward(&inst.features, &scaled)?;
                Ok((loss.value, loss.no_solution, grad))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

            let mut grad = vec![0.0; model.num_params()];
            for (value, no_sol, g) in &per_instance {
                epoch_total += value;
                no_solution += usize::from(*no_sol);
                for (acc, v) in grad.iter_mut().zip(g) {
                    *acc += v;
                }
            }
            optimizer
                .step(model.params_mut(), &grad)
                .map_err(|e| match e {
                    Error::NonFiniteGradient => Error::Divergence {
                        epoch,
                        instance: batch[0],
                        detail: "non-finite batch gradient".into(),
                    },
                    other => other,
                })?;
        }

        let validation_loss = mean_loss(&validation, &model, cfg, solver)?;
        let (vi, vr) = if cfg.track_validation_metrics && !validation.is_empty() {
            let report = evaluate(&validation, &model, solver)?;
            (Some(report.infeasibility_ratio), report.normalized_regret)
        } else {
            (None, None)
        };
        let record = EpochRecord {
            epoch,
            train_loss: epoch_total / train_idx.len().max(1) as f64,
            validation_loss,
            validation_infeasibility: vi,
            validation_regret: vr,
            no_predicted_solution: no_solution,
        };
        log::info!(
            "epoch {epoch}: train {:.5} val {:.5} val-infeas {:?} val-regret {:?}",
            record.train_loss,
            record.validation_loss,
            record.validation_infeasibility,
            record.validation_regret
        );
        history.push(record);

        if cfg.model_selection == ModelSelection::BestValidationCombinedLoss
            && best.as_ref().is_none_or(|(b, _, _)| validation_loss < *b)
        {
            best = Some((validation_loss, model.clone(), epoch));
        }
    }

    let (model, selected_epoch) = match (cfg.model_selection, best) {
        (ModelSelection::BestValidationCombinedLoss, Some((_, m, e))) if !validation.is_empty() => {
            (m, e)
        }
        _ => (model, cfg.epochs),
    };
    Ok(TrainOutcome {
        model,
        history,
        selected_epoch,
    })
}
