use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use odece::datagen::{
    gen_alloy_synthetic, gen_mdkp_capacities, gen_mdkp_weights, load_alloy_csv, read_dataset,
    write_dataset, AlloyGenConfig, Dataset, MdkpGenConfig, Problem,
};
use odece::model::{load_checkpoint, save_checkpoint, LinearPredictor, MlpPredictor, Model, MLP_HIDDEN};
use odece::pipeline::{
    alpha_sweep, evaluate, train, write_aggregate_csv, write_frontier_csv,
    write_history_csv, write_instance_csv, write_report_json, LossKind, RunKind, TrainConfig,
};
use odece::plot::plot_frontier;
use odece::solve::ExactSolver;

#[derive(Parser, Debug)]
#[command(name = "odece", version, about = "Constraint-parameter prediction with decision-aware losses")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Infeasibility-aversion coefficient in [0, 1].
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// mdkp_weights, mdkp_capacities or alloy.
    #[arg(long, global = true)]
    problem: Option<Problem>,

    /// Output directory (or file for `plot`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a dataset directory.
    Gen {
        /// Build the alloy dataset from this CSV instead of generating it.
        #[arg(long)]
        alloy_csv: Option<PathBuf>,
    },
    /// Train a model and write its checkpoint and history.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        loss: Option<LossArg>,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Train and test over several α values and seeds.
    Sweep {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Skip the MSE baseline runs.
        #[arg(long)]
        no_mse: bool,
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Draw a frontier CSV as an SVG scatter plot.
    Plot {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LossArg {
    Odece,
    Mse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelArch {
    #[default]
    Linear,
    Mlp,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct RunConfig {
    problem: Problem,
    seed: u64,
    workers: usize,
    model: ModelArch,
    mdkp: MdkpGenConfig,
    alloy: AlloyGenConfig,
    /// Learning rate falls back to the per-problem default when absent.
    train: Option<TrainConfig>,
    alphas: Vec<f64>,
    seeds: Vec<u64>,
    include_mse: bool,
    #[serde(skip)]
    alpha: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: Problem::MdkpWeights,
            seed: 0,
            workers: 1,
            model: ModelArch::Linear,
            mdkp: MdkpGenConfig::default(),
            alloy: AlloyGenConfig::default(),
            train: None,
            alphas: vec![0.2, 0.35, 0.5, 0.65, 0.8],
            seeds: vec![0, 1, 2, 3, 4],
            include_mse: true,
            alpha: None,
        }
    }
}

impl RunConfig {
    fn load(common: &CommonArgs) -> Result<Self> {
        let mut cfg: RunConfig = match &common.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading config {}", path.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config {}", path.display()))?
            }
            None => RunConfig::default(),
        };
        if let Some(p) = common.problem {
            cfg.problem = p;
        }
        if let Some(w) = common.workers {
            cfg.workers = w;
        }
        if let Some(s) = common.seed {
            cfg.seed = s;
        }
        cfg.mdkp.seed = cfg.seed;
        cfg.alloy.seed = cfg.seed;
        if common.alpha.is_some() {
            cfg.alpha = common.alpha;
        }
        Ok(cfg)
    }

    /// Training settings for `problem`, with the run seed, workers and α applied.
    fn train_config(&self, problem: Problem) -> TrainConfig {
        let mut tc = self
            .train
            .clone()
            .unwrap_or_else(|| TrainConfig::for_problem(problem));
        tc.seed = self.seed;
        tc.workers = self.workers;
        if let Some(a) = self.alpha {
            tc.loss.alpha = a;
        }
        tc
    }

    fn new_model(&self, dataset: &Dataset, seed: u64) -> Model {
        let (i, o) = (dataset.num_features(), dataset.num_predicted());
        match self.model {
            ModelArch::Linear => Model::Linear(LinearPredictor::init(i, o, seed)),
            ModelArch::Mlp => Model::Mlp(MlpPredictor::init(i, MLP_HIDDEN, o, seed)),
        }
    }
}

fn out_dir(common: &CommonArgs, default: &str) -> Result<PathBuf> {
    let dir = common.out.clone().unwrap_or_else(|| PathBuf::from(default));
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn load_data(dir: &Path) -> Result<Dataset> {
    read_dataset(dir).with_context(|| format!("loading dataset {}", dir.display()))
}

fn run_gen(cfg: &RunConfig, common: &CommonArgs, alloy_csv: Option<&Path>) -> Result<()> {
    let dir = out_dir(common, "data")?;
    let dataset = match (cfg.problem, alloy_csv) {
        (Problem::Alloy, Some(path)) => {
            let load = load_alloy_csv(path)?;
            for w in &load.warnings {
                log::warn!("{w}");
            }
            load.dataset
        }
        (_, Some(_)) => bail!("--alloy-csv requires --problem alloy"),
        (Problem::MdkpWeights, None) => gen_mdkp_weights(&cfg.mdkp)?,
        (Problem::MdkpCapacities, None) => gen_mdkp_capacities(&cfg.mdkp)?,
        (Problem::Alloy, None) => gen_alloy_synthetic(&cfg.alloy)?,
    };
    write_dataset(&dataset, &dir)?;
    println!(
        "wrote {} instances to {} (train {}, validation {}, test {}, seed {}, trivial fraction {:.3})",
        dataset.instances.len(),
        dir.display(),
        dataset.splits.train.len(),
        dataset.splits.validation.len(),
        dataset.splits.test.len(),
        dataset.effective_seed,
        dataset.trivial_fraction()
    );
    Ok(())
}

fn run_train(
    cfg: &RunConfig,
    common: &CommonArgs,
    data: &Path,
    loss: Option<LossArg>,
    epochs: Option<usize>,
) -> Result<()> {
    let dataset = load_data(data)?;
    let mut tc = cfg.train_config(dataset.problem);
    if let Some(l) = loss {
        tc.loss_kind = match l {
            LossArg::Odece => LossKind::Odece,
            LossArg::Mse => LossKind::Mse,
        };
    }
    if let Some(e) = epochs {
        tc.epochs = e;
    }
    let model = cfg.new_model(&dataset, tc.seed);
    let outcome = train(&dataset, model, &tc, &ExactSolver)?;
    let dir = out_dir(common, "run")?;
    save_checkpoint(&outcome.model, &dir.join("model.json"))?;
    write_history_csv(&dir.join("history.csv"), &outcome.history)?;
    println!(
        "trained {} epochs, selected epoch {}; wrote {}",
        tc.epochs,
        outcome.selected_epoch,
        dir.display()
    );
    Ok(())
}

fn run_eval(cfg: &RunConfig, common: &CommonArgs, data: &Path, model: &Path) -> Result<()> {
    let dataset = load_data(data)?;
    let model = load_checkpoint(model)?;
    let test = dataset.test();
    let report = odece::parallel::with_workers(cfg.workers, || {
        evaluate(&test, &model, &ExactSolver)
    })?;
    let dir = out_dir(common, "eval")?;
    write_report_json(&dir.join("report.json"), &report)?;
    write_instance_csv(&dir.join("instances.csv"), &report)?;
    println!(
        "infeasibility {:.4}, regret {}",
        report.infeasibility_ratio,
        report
            .normalized_regret
            .map(|r| format!("{r:.4}"))
            .unwrap_or_else(|| "n/a".into())
    );
    Ok(())
}

fn run_sweep(
    cfg: &RunConfig,
    common: &CommonArgs,
    data: &Path,
    alphas: Option<Vec<f64>>,
    seeds: Option<Vec<u64>>,
    no_mse: bool,
    epochs: Option<usize>,
) -> Result<()> {
    let dataset = load_data(data)?;
    let mut tc = cfg.train_config(dataset.problem);
    if let Some(e) = epochs {
        tc.epochs = e;
    }
    let alphas = alphas.unwrap_or_else(|| cfg.alphas.clone());
    let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
    let factory = |seed: u64| cfg.new_model(&dataset, seed);
    let result = alpha_sweep(
        &dataset,
        &factory,
        &tc,
        &alphas,
        &seeds,
        cfg.include_mse && !no_mse,
        &ExactSolver,
    )?;
    let dir = out_dir(common, "sweep")?;
    write_frontier_csv(&dir.join("frontier.csv"), &result.rows())?;
    write_aggregate_csv(&dir.join("aggregate.csv"), &result.aggregates)?;
    let hist_dir = dir.join("history");
    std::fs::create_dir_all(&hist_dir).with_context(|| format!("creating {}", hist_dir.display()))?;
    for run in &result.runs {
        let name = match (run.row.model, run.row.alpha) {
            (RunKind::Odece, Some(a)) => format!("odece_alpha{a}_seed{}.csv", run.row.seed),
            _ => format!("mse_seed{}.csv", run.row.seed),
        };
        write_history_csv(&hist_dir.join(name), &run.history)?;
    }
    let failed = result.runs.iter().filter(|r| r.row.error.is_some()).count();
    println!(
        "{} runs ({failed} failed); wrote {}",
        result.runs.len(),
        dir.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = RunConfig::load(&cli.common)?;
    match &cli.command {
        Command::Gen { alloy_csv } => run_gen(&cfg, &cli.common, alloy_csv.as_deref()),
        Command::Train { data, loss, epochs } => run_train(&cfg, &cli.common, data, *loss, *epochs),
        Command::Eval { data, model } => run_eval(&cfg, &cli.common, data, model),
        Command::Sweep {
            data,
            alphas,
            seeds,
            no_mse,
            epochs,
        } => run_sweep(&cfg, &cli.common, data, alphas.clone(), seeds.clone(), *no_mse, *epochs),
        Command::Plot { input } => {
            let out = cli
                .common
                .out
                .clone()
                .unwrap_or_else(|| input.with_extension("svg"));
            let n = plot_frontier(input, &out)?;
            println!("wrote {} markers to {}", n, out.display());
            Ok(())
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<odece::Error>() {
        Some(e) if !e.is_input_error() => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("ODECE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
