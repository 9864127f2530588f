use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qrbf::datasets::{self, Dataset, Sampling, SpiralIndex};
use qrbf::evaluation::{
    accuracy_vs_training_size, decision_boundary_grid, write_grid_csv, write_predictions_csv,
    write_sweep_csv,
};
use qrbf::experiment::{default_sweep_ratios, fit_model, prepare_data};
use qrbf::rbf_network::argmax_rows;
use qrbf::{run_experiment, run_suite, Error, ExperimentConfig, Preset, RbfModel, Result};

#[derive(Parser)]
#[command(name = "qrbf", version, about = "Quantum-kernel RBF network experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a dataset as CSV.
    Gen(GenArgs),
    /// Fit a model and save it with its train/test data.
    Fit {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Predict with a saved model on a dataset CSV.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit, evaluate on held-out data and write all artifacts.
    Eval {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run a named group of experiments and write a comparison table.
    Suite {
        /// table1, table2, table3 or fig8
        #[arg(long)]
        preset: String,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Accuracy against training-set fraction.
    Sweep {
        /// Comma-separated train ratios; default 0.1..0.9.
        #[arg(long, value_delimiter = ',')]
        ratios: Vec<f64>,
        /// Comma-separated seed sets; default 0..9.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Classify a lattice over a 2-D feature space.
    Grid {
        #[arg(long)]
        model: PathBuf,
        /// x_lo,x_hi,y_lo,y_hi
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        bounds: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GenDataset {
    Sine,
    Polynomial,
    Logistic,
    Spiral,
    Iris,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    dataset: GenDataset,
    /// Points (sine, polynomial), steps (logistic) or points per class (spiral).
    #[arg(long, default_value_t = 15)]
    count: usize,
    #[arg(long, default_value = "grid")]
    sampling: String,
    #[arg(long, default_value_t = 0, env = "QRBF_DATA_SEED")]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value = "normalized")]
    spiral_index: String,
    #[arg(long)]
    iris_path: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config file plus overrides. Precedence: file, then flags and
/// environment, then `--set`.
#[derive(Args)]
struct ConfigArgs {
    /// JSON experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set seeds.data=4 --set rcond=1e-10`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    n_centres: Option<usize>,
    #[arg(long)]
    centres: Option<String>,
    #[arg(long)]
    iris_path: Option<PathBuf>,
    #[arg(long)]
    noise_sigma: Option<f64>,
    #[arg(long)]
    alpha_rule: Option<String>,
    #[arg(long)]
    split_ratio: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, env = "QRBF_DATA_SEED")]
    data_seed: Option<u64>,
    #[arg(long, env = "QRBF_CENTRE_SEED")]
    centre_seed: Option<u64>,
    #[arg(long, env = "QRBF_ENTANGLER_SEED")]
    entangler_seed: Option<u64>,
    #[arg(long, env = "QRBF_SPLIT_SEED")]
    split_seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let text = match &self.config {
            Some(path) => Some(fs::read_to_string(path).map_err(|e| io_error(path, e))?),
            None => None,
        };
        let mut overrides: Vec<(String, String)> = Vec::new();
        let mut string = |key: &str, v: &Option<String>| {
            if let Some(v) = v {
                overrides.push((key.into(), serde_json::Value::String(v.clone()).to_string()));
            }
        };
        string("dataset", &self.dataset);
        string("model", &self.model);
        string("centres", &self.centres);
        string("alpha_rule", &self.alpha_rule);
        string(
            "iris_path",
            &self.iris_path.as_ref().map(|p| p.display().to_string()),
        );
        string(
            "output_dir",
            &self.out_dir.as_ref().map(|p| p.display().to_string()),
        );
        let numbers = [
            ("n_centres", self.n_centres.map(|v| v.to_string())),
            ("noise_sigma", self.noise_sigma.map(|v| v.to_string())),
            ("split_ratio", self.split_ratio.map(|v| v.to_string())),
            ("seeds.data", self.data_seed.map(|v| v.to_string())),
            ("seeds.centres", self.centre_seed.map(|v| v.to_string())),
            ("seeds.entangler", self.entangler_seed.map(|v| v.to_string())),
            ("seeds.split", self.split_seed.map(|v| v.to_string())),
        ];
        for (key, value) in numbers {
            if let Some(v) = value {
                overrides.push((key.into(), v));
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            overrides.push((k.trim().into(), v.trim().into()));
        }
        ExperimentConfig::from_json_with_overrides(text.as_deref(), &overrides)
    }
}

fn io_error(path: &Path, e: io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Write to `path`, or stdout when absent.
fn emit(path: Option<&Path>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    match path {
        Some(p) => fs::write(p, buf).map_err(|e| io_error(p, e)),
        None => io::stdout()
            .write_all(&buf)
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

fn gen(args: &GenArgs) -> Result<Dataset> {
    let sampling = match args.sampling.as_str() {
        "grid" => Sampling::Grid,
        "uniform" => Sampling::Uniform,
        other => return Err(Error::Usage(format!("unknown sampling {other:?}"))),
    };
    let index = match args.spiral_index.as_str() {
        "normalized" => SpiralIndex::Normalized,
        "raw" => SpiralIndex::Raw,
        other => return Err(Error::Usage(format!("unknown spiral index {other:?}"))),
    };
    match args.dataset {
        GenDataset::Sine => datasets::gen_sine(args.count, args.seed, args.noise, sampling),
        GenDataset::Polynomial => {
            datasets::gen_polynomial(args.count, args.seed, args.noise, sampling)
        }
        GenDataset::Logistic => datasets::gen_logistic_map(args.count, args.seed, args.noise),
        GenDataset::Spiral => datasets::gen_spiral(args.count, args.seed, index, true),
        GenDataset::Iris => {
            let path = args
                .iris_path
                .as_ref()
                .ok_or_else(|| Error::Usage("--iris-path is required for iris".into()))?;
            datasets::load_iris(path)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(args) => {
            let data = gen(&args)?;
            emit(args.out.as_deref(), |buf| data.write_csv(buf))
        }
        Command::Fit { config } => {
            let cfg = config.load()?;
            let dir = cfg
                .output_dir
                .clone()
                .ok_or_else(|| Error::Usage("fit needs --out-dir".into()))?;
            let data = prepare_data(&cfg)?;
            let model = fit_model(&cfg, &data)?;
            fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
            model.save(dir.join("model.json"))?;
            data.train.save_csv(dir.join("train.csv"))?;
            data.test.save_csv(dir.join("test.csv"))?;
            println!("{}", dir.join("model.json").display());
            Ok(())
        }
        Command::Predict { model, input, out } => {
            let model = RbfModel::load(&model)?;
            let data = Dataset::load_csv(&input)?;
            let outputs = model.predict(&data.inputs)?;
            let classes = (outputs.ncols() >= 2).then(|| argmax_rows(&outputs));
            emit(out.as_deref(), |buf| {
                write_predictions_csv(&data.inputs, &outputs, classes.as_deref(), buf)
            })
        }
        Command::Eval { config } => {
            let cfg = config.load()?;
            let outcome = run_experiment(&cfg)?;
            print!("{}", outcome.metrics.to_json());
            Ok(())
        }
        Command::Suite { preset, config } => {
            let preset: Preset = preset.parse()?;
            let cfg = config.load()?;
            let report = run_suite(preset, &cfg, cfg.output_dir.as_deref())?;
            emit(None, |buf| report.write_csv(buf))
        }
        Command::Sweep {
            ratios,
            seeds,
            out,
            config,
        } => {
            let cfg = config.load()?;
            let ratios = if ratios.is_empty() {
                default_sweep_ratios()
            } else {
                ratios
            };
            let seeds = if seeds.is_empty() {
                (0..10).collect()
            } else {
                seeds
            };
            let rows = accuracy_vs_training_size(&cfg, &ratios, &seeds)?;
            emit(out.as_deref(), |buf| write_sweep_csv(&rows, buf))
        }
        Command::Grid {
            model,
            bounds,
            resolution,
            out,
        } => {
            if bounds.len() != 4 {
                return Err(Error::Usage(format!(
                    "--bounds expects x_lo,x_hi,y_lo,y_hi, got {} values",
                    bounds.len()
                )));
            }
            let model = RbfModel::load(&model)?;
            let grid = decision_boundary_grid(
                &model,
                [(bounds[0], bounds[1]), (bounds[2], bounds[3])],
                resolution,
            )?;
            emit(out.as_deref(), |buf| write_grid_csv(&grid, buf))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            match e {
                Error::Usage(_) | Error::Configuration(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
