//! Feature-to-parameter predictors with hand-written backpropagation.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cop::ParameterVector;
use crate::error::{Error, Result};

/// Hidden width of the one-hidden-layer network.
pub const MLP_HIDDEN: usize = 512;

pub const CHECKPOINT_FORMAT: &str = "odece-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Common interface of the trainable predictors.
///
/// Parameters live in one flat vector so a single optimizer can update any
/// architecture.
pub trait Predictor {
    fn in_dim(&self) -> usize;
    fn out_dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn predict(&self, features: &[f64]) -> Result<ParameterVector>;
    /// Gradient of the loss with respect to every parameter, given the
    /// gradient with respect to the prediction.
    fn backward(&self, features: &[f64], grad_output: &[f64]) -> Result<Vec<f64>>;

    fn num_params(&self) -> usize {
        self.params().len()
    }
}

fn check_dims(features: &[f64], in_dim: usize, grad: Option<(&[f64], usize)>) -> Result<()> {
    if features.len() != in_dim {
        return Err(Error::shape(format!(
            "feature vector has {} entries, model expects {in_dim}",
            features.len()
        )));
    }
    if let Some((g, out)) = grad {
        if g.len() != out {
            return Err(Error::shape(format!(
                "output gradient has {} entries, model produces {out}",
                g.len()
            )));
        }
    }
    Ok(())
}

fn fan_in_uniform(rng: &mut ChaCha8Rng, fan_in: usize, out: &mut [f64]) {
    let bound = 1.0 / (fan_in as f64).sqrt();
    for w in out {
        *w = rng.random_range(-bound..bound);
    }
}

/// `rho_hat = scale * (W phi + b)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPredictor {
    in_dim: usize,
    out_dim: usize,
    output_scale: f64,
    /// `W` row-major (`out x in`) followed by `b`.
    params: Vec<f64>,
}

impl LinearPredictor {
    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        LinearPredictor {
            in_dim,
            out_dim,
            output_scale: 1.0,
            params: vec![0.0; out_dim * in_dim + out_dim],
        }
    }

    /// Fan-in uniform weights, zero bias.
    pub fn init(in_dim: usize, out_dim: usize, seed: u64) -> Self {
        let mut model = Self::zeros(in_dim, out_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        fan_in_uniform(&mut rng, in_dim, &mut model.params[..out_dim * in_dim]);
        model
    }

    pub fn from_parts(weights: Vec<f64>, bias: Vec<f64>, output_scale: f64) -> Result<Self> {
        let out_dim = bias.len();
        if out_dim == 0 || !weights.len().is_multiple_of(out_dim) {
            return Err(Error::shape("weight matrix does not match bias length"));
        }
        let in_dim = weights.len() / out_dim;
        let mut params = weights;
        params.extend(bias);
        Ok(LinearPredictor {
            in_dim,
            out_dim,
            output_scale,
            params,
        })
    }

    pub fn with_output_scale(mut self, scale: f64) -> Self {
        self.output_scale = scale;
        self
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    fn split(&self) -> (&[f64], &[f64]) {
        self.params.split_at(self.out_dim * self.in_dim)
    }
}

impl Predictor for LinearPredictor {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn predict(&self, features: &[f64]) -> Result<ParameterVector> {
        check_dims(features, self.in_dim, None)?;
        let (w, b) = self.split();
        let out = w
            .chunks_exact(self.in_dim)
            .zip(b)
            .map(|(row, bias)| {
                let z: f64 = row.iter().zip(features).map(|(w, f)| w * f).sum();
                self.output_scale * (z + bias)
            })
            .collect();
        Ok(ParameterVector::new(out))
    }

    fn backward(&self, features: &[f64], grad_output: &[f64]) -> Result<Vec<f64>> {
        check_dims(features, self.in_dim, Some((grad_output, self.out_dim)))?;
        let mut grad = vec![0.0; self.params.len()];
        let (gw, gb) = grad.split_at_mut(self.out_dim * self.in_dim);
        for ((row, b), &g) in gw.chunks_exact_mut(self.in_dim).zip(gb).zip(grad_output) {
            let g = self.output_scale * g;
            *b = g;
            for (w, f) in row.iter_mut().zip(features) {
                *w = g * f;
            }
        }
        Ok(grad)
    }
}

/// One hidden layer with rectifier activation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpPredictor {
    in_dim: usize,
    hidden: usize,
    out_dim: usize,
    /// `W1 (hidden x in)`, `b1`, `W2 (out x hidden)`, `b2`.
    params: Vec<f64>,
}

struct MlpView<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
}

impl MlpPredictor {
    pub fn zeros(in_dim: usize, hidden: usize, out_dim: usize) -> Self {
        let len = hidden * in_dim + hidden + out_dim * hidden + out_dim;
        MlpPredictor {
            in_dim,
            hidden,
            out_dim,
            params: vec![0.0; len],
        }
    }

    pub fn init(in_dim: usize, hidden: usize, out_dim: usize, seed: u64) -> Self {
        let mut model = Self::zeros(in_dim, hidden, out_dim);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1_len = hidden * in_dim;
        fan_in_uniform(&mut rng, in_dim, &mut model.params[..w1_len]);
        let w2_start = w1_len + hidden;
        fan_in_uniform(
            &mut rng,
            hidden,
            &mut model.params[w2_start..w2_start + out_dim * hidden],
        );
        model
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn view(&self) -> MlpView<'_> {
        let (w1, rest) = self.params.split_at(self.hidden * self.in_dim);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.out_dim * self.hidden);
        MlpView { w1, b1, w2, b2 }
    }

    fn hidden_pre(&self, features: &[f64]) -> Vec<f64> {
        let v = self.view();
        v.w1
            .chunks_exact(self.in_dim)
            .zip(v.b1)
            .map(|(row, b)| row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + b)
            .collect()
    }
}

impl Predictor for MlpPredictor {
    fn in_dim(&self) -> usize {
        self.in_dim
    }

    fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn predict(&self, features: &[f64]) -> Result<ParameterVector> {
        check_dims(features, self.in_dim, None)?;
        let act: Vec<f64> = self.hidden_pre(features).into_iter().map(|z| z.max(0.0)).collect();
        let v = self.view();
        let out = v
            .w2
            .chunks_exact(self.hidden)
            .zip(v.b2)
            .map(|(row, b)| row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>() + b)
            .collect();
        Ok(ParameterVector::new(out))
    }

    fn backward(&self, features: &[f64], grad_output: &[f64]) -> Result<Vec<f64>> {
        check_dims(features, self.in_dim, Some((grad_output, self.out_dim)))?;
        let pre = self.hidden_pre(features);
        let act: Vec<f64> = pre.iter().map(|z| z.max(0.0)).collect();
        let v = self.view();

        let mut grad = vec![0.0; self.params.len()];
        let (gw1, rest) = grad.split_at_mut(self.hidden * self.in_dim);
        let (gb1, rest) = rest.split_at_mut(self.hidden);
        let (gw2, gb2) = rest.split_at_mut(self.out_dim * self.hidden);

        let mut grad_act = vec![0.0; self.hidden];
        for (k, &g) in grad_output.iter().enumerate() {
            gb2[k] = g;
            let w2_row = &v.w2[k * self.hidden..(k + 1) * self.hidden];
            let gw2_row = &mut gw2[k * self.hidden..(k + 1) * self.hidden];
            for h in 0..self.hidden {
                gw2_row[h] = g * act[h];
                grad_act[h] += g * w2_row[h];
            }
        }
        for h in 0..self.hidden {
            // Subgradient of the rectifier at zero is zero.
            let dz = if pre[h] > 0.0 { grad_act[h] } else { 0.0 };
            gb1[h] = dz;
            if dz != 0.0 {
                for (w, f) in gw1[h * self.in_dim..(h + 1) * self.in_dim]
                    .iter_mut()
                    .zip(features)
                {
                    *w = dz * f;
                }
            }
        }
        Ok(grad)
    }
}

/// Either predictor, for dispatch and checkpointing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Linear(LinearPredictor),
    Mlp(MlpPredictor),
}

impl Model {
    fn inner(&self) -> &dyn Predictor {
        match self {
            Model::Linear(m) => m,
            Model::Mlp(m) => m,
        }
    }

    fn inner_mut(&mut self) -> &mut dyn Predictor {
        match self {
            Model::Linear(m) => m,
            Model::Mlp(m) => m,
        }
    }
}

impl Predictor for Model {
    fn in_dim(&self) -> usize {
        self.inner().in_dim()
    }

    fn out_dim(&self) -> usize {
        self.inner().out_dim()
    }

    fn params(&self) -> &[f64] {
        self.inner().params()
    }

    fn params_mut(&mut self) -> &mut [f64] {
        self.inner_mut().params_mut()
    }

    fn predict(&self, features: &[f64]) -> Result<ParameterVector> {
        self.inner().predict(features)
    }

    fn backward(&self, features: &[f64], grad_output: &[f64]) -> Result<Vec<f64>> {
        self.inner().backward(features, grad_output)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

/// First-order optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    steps: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        Ok(Optimizer {
            kind,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first_moment: Vec::new(),
            second_moment: Vec::new(),
            steps: 0,
        })
    }

    pub fn sgd(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate)
    }

    pub fn adam(learning_rate: f64) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate)
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Apply one update in place. Non-finite gradients abort without touching
    /// the parameters.
    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) -> Result<()> {
        if params.len() != grad.len() {
            return Err(Error::shape(format!(
                "gradient has {} entries, model has {} parameters",
                grad.len(),
                params.len()
            )));
        }
        if !grad.iter().all(|g| g.is_finite()) {
            return Err(Error::NonFiniteGradient);
        }
        self.steps += 1;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.learning_rate * g;
                }
            }
            OptimizerKind::Adam => {
                if self.first_moment.len() != params.len() {
                    self.first_moment = vec![0.0; params.len()];
                    self.second_moment = vec![0.0; params.len()];
                }
                let t = self.steps as i32;
                let c1 = 1.0 - self.beta1.powi(t);
                let c2 = 1.0 - self.beta2.powi(t);
                for ((p, g), (m, v)) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(self.first_moment.iter_mut().zip(self.second_moment.iter_mut()))
                {
                    *m = self.beta1 * *m + (1.0 - self.beta1) * g;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
                    let m_hat = *m / c1;
                    let v_hat = *v / c2;
                    *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
                }
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    model: Model,
}

/// Write a JSON checkpoint: `{"format", "version", "model": {"kind", dims..., "params"}}`.
pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    let ck = Checkpoint {
        format: CHECKPOINT_FORMAT.to_string(),
        version: CHECKPOINT_VERSION,
        model: model.clone(),
    };
    let text = serde_json::to_string_pretty(&ck).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
        return Err(Error::config(format!(
            "{}: unsupported checkpoint {} v{}",
            path.display(),
            ck.format,
            ck.version
        )));
    }
    let expected = match &ck.model {
        Model::Linear(m) => m.out_dim * m.in_dim + m.out_dim,
        Model::Mlp(m) => m.hidden * m.in_dim + m.hidden + m.out_dim * m.hidden + m.out_dim,
    };
    if ck.model.num_params() != expected {
        return Err(Error::shape(format!(
            "{}: checkpoint has {} parameters, shapes imply {expected}",
            path.display(),
            ck.model.num_params()
        )));
    }
    Ok(ck.model)
}
