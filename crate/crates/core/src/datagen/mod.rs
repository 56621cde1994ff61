//! Seeded generators for the benchmark families and dataset I/O.

mod io;
pub mod rng;

pub use io::{
    dataset_files, load_alloy_csv, read_dataset, read_manifest, write_alloy_csv, write_dataset,
    AlloyCsvLoad, Manifest,
    DATASET_FORMAT, DATASET_VERSION,
};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cop::{ConstraintSystem, CopInstance, Family, ParameterVector};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::solve::{solve_binary_bnb, CopSolver, ExactSolver, SolveStatus};

/// Brass requirements (Cu, Zn).
pub const ALLOY_REQUIREMENTS: [f64; 2] = [627.54, 369.72];
const GUMBEL_LOCATION: f64 = 100.0;
const GUMBEL_SCALE: f64 = 20.0;
/// Seed increment used when a capacity dataset fails the non-triviality check.
const RESEED_STEP: u64 = 0x9E37_79B9_7F4A_7C15;
const MAX_RESEEDS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Problem {
    MdkpWeights,
    MdkpCapacities,
    Alloy,
}

impl Problem {
    pub fn family(self) -> Family {
        match self {
            Problem::MdkpWeights => Family::KnapsackWeights,
            Problem::MdkpCapacities => Family::KnapsackCapacities,
            Problem::Alloy => Family::CoveringLhs,
        }
    }
}

impl std::str::FromStr for Problem {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "mdkp_weights" | "weights" => Ok(Problem::MdkpWeights),
            "mdkp_capacities" | "capacities" => Ok(Problem::MdkpCapacities),
            "alloy" => Ok(Problem::Alloy),
            other => Err(Error::config(format!("unknown problem {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }

    /// Contiguous index ranges: train first, then validation, then test.
    pub fn indices(&self) -> Splits {
        let v0 = self.train;
        let t0 = v0 + self.validation;
        Splits {
            train: (0..v0).collect(),
            validation: (v0..t0).collect(),
            test: (t0..t0 + self.test).collect(),
        }
    }

    /// 60/10/30 split of `k` instances, the knapsack proportions.
    pub fn proportional(k: usize) -> Self {
        let train = k * 6 / 10;
        let validation = k / 10;
        SplitSizes {
            train,
            validation,
            test: k - train - validation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MdkpGenConfig {
    pub num_items: usize,
    pub num_dims: usize,
    pub num_features: usize,
    /// Misspecification degree; must be even.
    pub deg: u32,
    /// Half width `w` of the multiplicative noise `U[1-w, 1+w]`.
    pub noise_half_width: f64,
    /// Capacity tightness `r` for the weight-prediction family.
    pub tightness: f64,
    /// Capacity and feature scale for the capacity family; `0.5 * N` when absent.
    pub capacity_scale: Option<f64>,
    pub num_instances: usize,
    pub split: SplitSizes,
    pub seed: u64,
}

impl Default for MdkpGenConfig {
    fn default() -> Self {
        MdkpGenConfig {
            num_items: 50,
            num_dims: 3,
            num_features: 10,
            deg: 6,
            noise_half_width: 0.25,
            tightness: 0.2,
            capacity_scale: None,
            num_instances: 1500,
            split: SplitSizes {
                train: 900,
                validation: 100,
                test: 500,
            },
            seed: 0,
        }
    }
}

impl MdkpGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_items == 0 || self.num_dims == 0 || self.num_features == 0 {
            return Err(Error::config("items, dimensions and features must be positive"));
        }
        if self.deg == 0 || !self.deg.is_multiple_of(2) {
            return Err(Error::config(format!(
                "deg must be a positive even integer, got {}",
                self.deg
            )));
        }
        if !(0.0..1.0).contains(&self.noise_half_width) {
            return Err(Error::config("noise half width must lie in [0, 1)"));
        }
        if !(self.tightness > 0.0) {
            return Err(Error::config("tightness must be positive"));
        }
        if let Some(s) = self.capacity_scale {
            if !(s > 0.0) {
                return Err(Error::config("capacity scale must be positive"));
            }
        }
        if self.split.total() != self.num_instances {
            return Err(Error::config(format!(
                "split sizes sum to {}, expected {}",
                self.split.total(),
                self.num_instances
            )));
        }
        Ok(())
    }

    pub fn effective_capacity_scale(&self) -> f64 {
        self.capacity_scale
            .unwrap_or(0.5 * self.num_items as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlloyGenConfig {
    pub num_suppliers: usize,
    pub num_metals: usize,
    pub requirements: Vec<f64>,
    /// Features per metal-supplier pair.
    pub feature_dim: usize,
    pub deg: u32,
    pub noise_half_width: f64,
    /// Supplier prices are drawn from `U[lo, hi]`.
    pub price_range: (f64, f64),
    pub num_instances: usize,
    pub split: SplitSizes,
    pub seed: u64,
}

impl Default for AlloyGenConfig {
    fn default() -> Self {
        AlloyGenConfig {
            num_suppliers: 10,
            num_metals: 2,
            requirements: ALLOY_REQUIREMENTS.to_vec(),
            feature_dim: 4096,
            deg: 6,
            noise_half_width: 0.25,
            price_range: (1.0, 10.0),
            num_instances: 500,
            split: SplitSizes {
                train: 350,
                validation: 50,
                test: 100,
            },
            seed: 0,
        }
    }
}

impl AlloyGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_suppliers == 0 || self.num_metals == 0 || self.feature_dim == 0 {
            return Err(Error::config("suppliers, metals and feature_dim must be positive"));
        }
        if self.requirements.len() != self.num_metals
            || !self.requirements.iter().all(|&r| r > 0.0 && r.is_finite())
        {
            return Err(Error::config("need one positive requirement per metal"));
        }
        if self.deg == 0 || !self.deg.is_multiple_of(2) {
            return Err(Error::config("deg must be a positive even integer"));
        }
        if !(0.0..1.0).contains(&self.noise_half_width) {
            return Err(Error::config("noise half width must lie in [0, 1)"));
        }
        let (lo, hi) = self.price_range;
        if !(lo > 0.0 && hi > lo) {
            return Err(Error::config("price range must satisfy 0 < lo < hi"));
        }
        if self.split.total() != self.num_instances {
            return Err(Error::config("split sizes must sum to num_instances"));
        }
        Ok(())
    }
}

/// How a dataset was produced; stored in its manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
pub enum Provenance {
    MdkpWeights(MdkpGenConfig),
    MdkpCapacities(MdkpGenConfig),
    AlloySynthetic(AlloyGenConfig),
    AlloyCsv { source: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub problem: Problem,
    pub provenance: Provenance,
    /// Seed actually used (differs from the configured one after a reseed).
    pub effective_seed: u64,
    pub instances: Vec<CopInstance>,
    pub splits: Splits,
}

impl Dataset {
    pub fn train(&self) -> Vec<&CopInstance> {
        self.splits.train.iter().map(|&i| &self.instances[i]).collect()
    }

    pub fn validation(&self) -> Vec<&CopInstance> {
        self.splits.validation.iter().map(|&i| &self.instances[i]).collect()
    }

    pub fn test(&self) -> Vec<&CopInstance> {
        self.splits.test.iter().map(|&i| &self.instances[i]).collect()
    }

    pub fn num_features(&self) -> usize {
        self.instances.first().map_or(0, |i| i.features.len())
    }

    pub fn num_predicted(&self) -> usize {
        self.instances
            .first()
            .map_or(0, |i| i.system.predicted_slot_count())
    }

    /// Fraction of true optima selecting no item or every item.
    pub fn trivial_fraction(&self) -> f64 {
        let trivial = self
            .instances
            .iter()
            .filter(|inst| is_trivial(inst))
            .count();
        trivial as f64 / self.instances.len().max(1) as f64
    }

    /// Rebuild a generated dataset from its provenance record.
    pub fn regenerate(provenance: &Provenance) -> Result<Dataset> {
        match provenance {
            Provenance::MdkpWeights(cfg) => gen_mdkp_weights(cfg),
            Provenance::MdkpCapacities(cfg) => gen_mdkp_capacities(cfg),
            Provenance::AlloySynthetic(cfg) => gen_alloy_synthetic(cfg),
            Provenance::AlloyCsv { source } => {
                load_alloy_csv(std::path::Path::new(source)).map(|l| l.dataset)
            }
        }
    }
}

fn is_trivial(inst: &CopInstance) -> bool {
    match &inst.x_star {
        Some(x) => {
            let ones = x.count_ones();
            ones == 0 || ones == x.len()
        }
        None => true,
    }
}

/// `[(phi . b / sqrt(p) + 3)^deg / 3.5^deg + 1]`; at least 1 for even `deg`.
pub fn misspecified_bracket(projection: f64, num_features: usize, deg: u32) -> f64 {
    let base = projection / (num_features as f64).sqrt() + 3.0;
    (base / 3.5).powi(deg as i32) + 1.0
}

fn bernoulli_matrix(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng::bernoulli_half(rng)).collect()
}

fn normal_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng::standard_normal(rng)).collect()
}

fn noise(rng: &mut ChaCha8Rng, w: f64) -> f64 {
    rng::uniform(rng, 1.0 - w, 1.0 + w)
}

fn project(features: &[f64], b: &[f64]) -> f64 {
    features.iter().zip(b).map(|(f, b)| f * b).sum()
}

/// Enforce `capacity_i < sum_n weight_ni / 2` and `weight_ni < capacity_i`,
/// repeating until both hold (weight clipping can lower the totals).
pub fn clip_knapsack(weights: &mut [f64], capacities: &mut [f64], num_items: usize) {
    for _ in 0..64 {
        let mut changed = false;
        for (i, cap) in capacities.iter_mut().enumerate() {
            let total: f64 = weights[i * num_items..(i + 1) * num_items].iter().sum();
            let limit = (0.5 * total).next_down();
            if *cap > limit {
                *cap = limit;
                changed = true;
            }
        }
        for (i, &cap) in capacities.iter().enumerate() {
            let limit = cap.next_down();
            for w in &mut weights[i * num_items..(i + 1) * num_items] {
                if *w > limit {
                    *w = limit;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
    log::warn!("knapsack clipping did not settle after 64 rounds");
}

/// Both clipping conditions hold strictly.
pub fn satisfies_clipping(weights: &[f64], capacities: &[f64], num_items: usize) -> bool {
    capacities.iter().enumerate().all(|(i, &cap)| {
        let row = &weights[i * num_items..(i + 1) * num_items];
        let total: f64 = row.iter().sum();
        cap < 0.5 * total && row.iter().all(|&w| w < cap)
    })
}

fn knapsack_values(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| -rng::gumbel(rng, GUMBEL_LOCATION, GUMBEL_SCALE))
        .collect()
}

fn attach_optimum(mut inst: CopInstance) -> Result<CopInstance> {
    let out = ExactSolver.solve(&inst.system, &inst.objective, &inst.rho_true)?;
    match (out.status, out.assignment) {
        (SolveStatus::Optimal, Some(x)) => {
            inst.set_x_star(x)?;
            Ok(inst)
        }
        (status, _) => Err(Error::NumericalFailure(format!(
            "true instance solve returned {status:?}"
        ))),
    }
}

/// Knapsack instances whose item weights are the prediction target.
pub fn gen_mdkp_weights(cfg: &MdkpGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (n, m, p) = (cfg.num_items, cfg.num_dims, cfg.num_features);
    let truth = bernoulli_matrix(&mut rng::stream(cfg.seed, rng::STREAM_TRUE_MODEL), m * n * p);
    let capacity_mass: Vec<f64> = (0..m)
        .map(|i| truth[i * n * p..(i + 1) * n * p].iter().sum())
        .collect();

    let instances = map_indexed(cfg.num_instances, |k| {
        let mut rng = rng::stream(cfg.seed, k as u64);
        let features = normal_vector(&mut rng, p);
        let mut weights = Vec::with_capacity(m * n);
        for i in 0..m {
            for item in 0..n {
                let b = &truth[(i * n + item) * p..(i * n + item + 1) * p];
                let bracket = misspecified_bracket(project(&features, b), p, cfg.deg);
                weights.push(bracket * noise(&mut rng, cfg.noise_half_width));
            }
        }
        let mut capacities: Vec<f64> = capacity_mass
            .iter()
            .map(|mass| cfg.tightness * noise(&mut rng, cfg.noise_half_width) * mass)
            .collect();
        let objective = knapsack_values(&mut rng, n);
        clip_knapsack(&mut weights, &mut capacities, n);
        let system = ConstraintSystem::new(Family::KnapsackWeights, n, m, capacities)?;
        let inst = CopInstance::new(system, features, ParameterVector::new(weights), objective)?;
        attach_optimum(inst)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(Dataset {
        problem: Problem::MdkpWeights,
        provenance: Provenance::MdkpWeights(cfg.clone()),
        effective_seed: cfg.seed,
        instances,
        splits: cfg.split.indices(),
    })
}

/// Knapsack instances whose capacities are the prediction target.
///
/// Item weights are shared by the whole dataset and drawn from an
/// independent stream. Capacities and the stored features are both scaled by
/// `r = 0.5 N` unless overridden. If some block of 100 instances contains no
/// non-trivial optimum the dataset is regenerated with a derived seed.
pub fn gen_mdkp_capacities(cfg: &MdkpGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut seed = cfg.seed;
    for attempt in 0..=MAX_RESEEDS {
        let instances = capacity_instances(cfg, seed)?;
        let ok = instances
            .chunks(100)
            .all(|block| block.iter().any(|inst| !is_trivial(inst)));
        if ok {
            return Ok(Dataset {
                problem: Problem::MdkpCapacities,
                provenance: Provenance::MdkpCapacities(cfg.clone()),
                effective_seed: seed,
                instances,
                splits: cfg.split.indices(),
            });
        }
        let next = seed.wrapping_add(RESEED_STEP);
        log::warn!(
            "capacity dataset with seed {seed} has a block of 100 trivial instances; \
             regenerating with seed {next} (attempt {})",
            attempt + 1
        );
        seed = next;
    }
    Err(Error::config(
        "could not generate non-trivial capacity instances; adjust capacity_scale",
    ))
}

fn capacity_instances(cfg: &MdkpGenConfig, seed: u64) -> Result<Vec<CopInstance>> {
    let (n, m, p) = (cfg.num_items, cfg.num_dims, cfg.num_features);
    let scale = cfg.effective_capacity_scale();
    let truth = bernoulli_matrix(&mut rng::stream(seed, rng::STREAM_TRUE_MODEL), m * p);

    let mut fixed_rng = rng::stream(seed, rng::STREAM_FIXED);
    let weight_truth = bernoulli_matrix(&mut fixed_rng, m * n * p);
    let weight_features = normal_vector(&mut fixed_rng, p);
    let mut weights = Vec::with_capacity(m * n);
    for idx in 0..m * n {
        let b = &weight_truth[idx * p..(idx + 1) * p];
        let bracket = misspecified_bracket(project(&weight_features, b), p, cfg.deg);
        weights.push(bracket * noise(&mut fixed_rng, cfg.noise_half_width));
    }
    let system = ConstraintSystem::new(Family::KnapsackCapacities, n, m, weights)?;

    map_indexed(cfg.num_instances, |k| {
        let mut rng = rng::stream(seed, k as u64);
        let raw = normal_vector(&mut rng, p);
        let capacities: Vec<f64> = (0..m)
            .map(|i| {
                let b = &truth[i * p..(i + 1) * p];
                let bracket = misspecified_bracket(project(&raw, b), p, cfg.deg);
                scale * bracket * noise(&mut rng, cfg.noise_half_width)
            })
            .collect();
        let objective = knapsack_values(&mut rng, n);
        let features = raw.iter().map(|f| scale * f).collect();
        let inst = CopInstance::new(
            system.clone(),
            features,
            ParameterVector::new(capacities),
            objective,
        )?;
        attach_optimum(inst)
    })
    .into_iter()
    .collect()
}

/// Synthetic covering-LP instances shaped like the brass alloy problem.
///
/// Each metal `i` has a hidden Bernoulli vector `b_i`; the content of metal
/// `i` in supplier `n`'s ore is the misspecified bracket of
/// `phi_ni . b_i` times multiplicative noise. Features are stored
/// metal-major, then supplier, then feature index.
pub fn gen_alloy_synthetic(cfg: &AlloyGenConfig) -> Result<Dataset> {
    cfg.validate()?;
    let (n, m, d) = (cfg.num_suppliers, cfg.num_metals, cfg.feature_dim);
    let truth = bernoulli_matrix(&mut rng::stream(cfg.seed, rng::STREAM_TRUE_MODEL), m * d);
    let system = ConstraintSystem::new(Family::CoveringLhs, n, m, cfg.requirements.clone())?;

    let instances = map_indexed(cfg.num_instances, |k| {
        let mut rng = rng::stream(cfg.seed, k as u64);
        loop {
            let features = normal_vector(&mut rng, m * n * d);
            let mut contents = Vec::with_capacity(m * n);
            for i in 0..m {
                let b = &truth[i * d..(i + 1) * d];
                for s in 0..n {
                    let phi = &features[(i * n + s) * d..(i * n + s + 1) * d];
                    let bracket = misspecified_bracket(project(phi, b), d, cfg.deg);
                    contents.push(bracket * noise(&mut rng, cfg.noise_half_width));
                }
            }
            let (lo, hi) = cfg.price_range;
            let prices = (0..n).map(|_| rng::uniform(&mut rng, lo, hi)).collect();
            let inst = CopInstance::new(
                system.clone(),
                features,
                ParameterVector::new(contents),
                prices,
            )?;
            match attach_optimum(inst) {
                Ok(inst) => return Ok(inst),
                Err(Error::NumericalFailure(msg)) => {
                    log::warn!("alloy instance {k} rejected ({msg}); redrawing");
                }
                Err(e) => return Err(e),
            }
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(Dataset {
        problem: Problem::Alloy,
        provenance: Provenance::AlloySynthetic(cfg.clone()),
        effective_seed: cfg.seed,
        instances,
        splits: cfg.split.indices(),
    })
}

/// Solve a binary instance under its true parameters (used by tests and tools).
pub fn true_optimum_binary(inst: &CopInstance) -> Result<Option<f64>> {
    let out = solve_binary_bnb(&inst.system, &inst.objective, &inst.rho_true)?;
    Ok(out.objective)
}
