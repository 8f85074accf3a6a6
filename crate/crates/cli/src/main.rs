//! `mbid`: expand a student register with a survey-trained classifier and
//! report how the survey respondents differ from the population.

mod error;
mod manifest;
mod stages;
mod tables;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mbid_ingest::DATA_DIR_ENV;
use mbid_pipeline::{ModelSelection, PipelineConfig};

use crate::error::CliError;
use crate::stages::Rows;

#[derive(Parser, Debug)]
#[command(name = "mbid", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModelArg {
    Logistic,
    Forest,
    Both,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML run configuration, or `default`.
    #[arg(long)]
    config: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory with admin.csv, survey_eligible.csv, survey_screened_out.csv and names.csv.
    #[arg(long, env = DATA_DIR_ENV)]
    data_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// A record is predicted PA = 0 iff its score exceeds this.
    #[arg(long)]
    threshold: Option<f64>,
    /// Cross-validation folds.
    #[arg(long)]
    k: Option<usize>,
    /// Share of the training set used for fitting.
    #[arg(long)]
    ratio: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ModelInput {
    /// A `model_<name>.json` written by `train`.
    #[arg(long)]
    model_file: PathBuf,
    /// Feature schema sidecar; defaults to schema.json next to the model.
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic register, survey extracts and name table.
    Synth(Common),
    /// Parse, link and encode the inputs.
    Ingest(Common),
    /// Fit, validate, cross-validate and rank features.
    Train(Common),
    /// Score a saved model on the linked rows.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: ModelInput,
        #[arg(long, value_enum, default_value = "validation")]
        rows: Rows,
    },
    /// Impute PA over the register and tabulate the expanded population.
    Impute {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        input: ModelInput,
    },
    /// Compare eligible respondents with the expanded population.
    Report {
        #[command(flatten)]
        common: Common,
        /// expanded.csv written by `impute`.
        #[arg(long)]
        expanded: PathBuf,
    },
    /// Every stage in order; generates data when no data directory is given.
    Pipeline(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Synth(c) | Command::Ingest(c) | Command::Train(c) | Command::Pipeline(c) => c,
            Command::Evaluate { common, .. }
            | Command::Impute { common, .. }
            | Command::Report { common, .. } => common,
        }
    }
}

fn load_config(common: &Common) -> Result<PipelineConfig, CliError> {
    let mut cfg = match common.config.as_deref() {
        None | Some("default") => PipelineConfig::default(),
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(Path::new(path), e))?;
            toml::from_str(&text).map_err(|e| CliError::new(error::Class::Usage, "ConfigParse", format!("{path}: {e}")))?
        }
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(m) = common.model {
        cfg.models = match m {
            ModelArg::Logistic => ModelSelection::Logistic,
            ModelArg::Forest => ModelSelection::Forest,
            ModelArg::Both => ModelSelection::Both,
        };
    }
    if let [only] = cfg.models.names() {
        cfg.impute_with = only.to_string();
    }
    if let Some(t) = common.threshold {
        cfg.threshold = t;
    }
    if let Some(k) = common.k {
        cfg.cv_folds = k;
    }
    if let Some(r) = common.ratio {
        cfg.train_ratio = r;
    }
    if !(cfg.threshold.is_finite() && (0.0..=1.0).contains(&cfg.threshold)) {
        return Err(CliError::usage(format!("threshold {} is outside [0, 1]", cfg.threshold)));
    }
    if !(cfg.train_ratio > 0.0 && cfg.train_ratio < 1.0) {
        return Err(CliError::usage(format!("ratio {} is outside (0, 1)", cfg.train_ratio)));
    }
    if cfg.cv_folds < 2 {
        return Err(CliError::usage(format!("k = {} needs to be at least 2", cfg.cv_folds)));
    }
    if !cfg.models.names().contains(&cfg.impute_with.as_str()) {
        return Err(CliError::usage(format!(
            "impute_with `{}` is not among the trained models",
            cfg.impute_with
        )));
    }
    cfg.synth.validate()?;
    Ok(cfg)
}

fn data_dir(common: &Common) -> Result<&Path, CliError> {
    common
        .data_dir
        .as_deref()
        .ok_or_else(|| CliError::usage(format!("--data-dir or {DATA_DIR_ENV} is required")))
}

fn run(command: &Command) -> Result<(), CliError> {
    let common = command.common();
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(CliError::usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::new(error::Class::Internal, "ThreadPool", e))?;
    }
    let cfg = load_config(common)?;
    let out = &common.out;
    match command {
        Command::Synth(_) => stages::synth(&cfg, out),
        Command::Ingest(_) => stages::ingest(&cfg, data_dir(common)?, out),
        Command::Train(_) => stages::train(&cfg, data_dir(common)?, out),
        Command::Evaluate { input, rows, .. } => {
            stages::evaluate_model(&cfg, data_dir(common)?, &input.model_file, input.schema.as_deref(), *rows, out)
        }
        Command::Impute { input, .. } => {
            stages::impute(&cfg, data_dir(common)?, &input.model_file, input.schema.as_deref(), out)
        }
        Command::Report { expanded, .. } => stages::report(&cfg, data_dir(common)?, expanded, out),
        Command::Pipeline(_) => stages::pipeline(&cfg, common.data_dir.as_deref(), out),
    }?;
    log::info!("wrote {}", out.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.class.exit_code() as u8)
        }
    }
}
