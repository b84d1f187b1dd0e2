//! `retrofit` command-line front end.
//!
//! Exit codes: 0 success, 1 runtime error, 2 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retrofit::latent::{ClickPoint, LatentShape};
use retrofit::tasks::{SeqLoss, TaskName};
use retrofit::OptimizerName;

mod commands;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "retrofit", version, about = "Black-box retrofitting of trained models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multi-run retrofitting of one task; writes runs.jsonl, summary.json and runs.csv.
    Run(RunArgs),
    /// Compare (runs, budget) splits of one total budget on fresh task replicas.
    Generalize(GeneralizeArgs),
    /// Risk bound k * lambda^(N / (lambda k)) * delta.
    Risk(RiskArgs),
    /// Latent-space tools.
    #[command(subcommand)]
    Latent(LatentCommand),
    /// Serve interactive sessions over HTTP.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
struct TaskArgs {
    #[arg(long)]
    task: TaskName,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Normalization failure threshold level i (ratio 1.25^i).
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=3))]
    threshold_level: u8,
    /// Policy rescaling divisor: 1, 10 or 100.
    #[arg(long, default_value_t = 1, value_parser = parse_suffix)]
    scale_suffix: u32,
    /// Sequence loss: bleu or exact-match.
    #[arg(long, default_value = "bleu")]
    seq_loss: SeqLoss,
    /// Disable validation noise on the two-constant task.
    #[arg(long)]
    no_noise: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// Optimizer names (comma separated or repeated); one is drawn per run.
    #[arg(long = "optimizer", value_delimiter = ',', required = true)]
    optimizers: Vec<OptimizerName>,
    /// Budgets (comma separated or repeated); one is drawn per run.
    #[arg(long = "budget", value_delimiter = ',', required = true, value_parser = positive)]
    budgets: Vec<usize>,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    runs: usize,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    workers: usize,
    /// Output directory.
    #[arg(long, default_value = "retrofit-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GeneralizeArgs {
    #[command(flatten)]
    task: TaskArgs,
    /// `k x b` pairs sharing one total budget, e.g. `1x16,8x2`.
    #[arg(long, value_delimiter = ',', default_value = "1x16,8x2", value_parser = parse_pair)]
    configs: Vec<(usize, usize)>,
    #[arg(long, default_value_t = 100, value_parser = positive)]
    replicas: usize,
    #[arg(long = "optimizer", value_delimiter = ',', default_value = "NGOptLite")]
    optimizers: Vec<OptimizerName>,
    #[arg(long, default_value_t = 1, value_parser = positive)]
    workers: usize,
    /// CSV output (stdout when absent); a JSON summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RiskArgs {
    #[arg(long)]
    k: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long = "N", alias = "n")]
    n: f64,
    #[arg(long)]
    delta: f64,
}

#[derive(Subcommand, Debug)]
enum LatentCommand {
    /// Draw a standard-normal latent.
    Sample {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "16x16x4", value_parser = parse_shape)]
        shape: LatentShape,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a surrogate tree on labeled latents.
    Fit {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Move a latent into the tree's good region.
    Evolve {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        z0: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        #[arg(long, default_value_t = 10_000, value_parser = positive)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two-parent Voronoi crossover at two click points.
    Crossover {
        #[arg(long)]
        z1: PathBuf,
        #[arg(long)]
        z2: PathBuf,
        #[arg(long, value_parser = parse_click)]
        p1: ClickPoint,
        #[arg(long, value_parser = parse_click)]
        p2: ClickPoint,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a latent to PNG.
    Render {
        #[arg(long)]
        z: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args, Debug)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// 0 picks a free port.
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "RETROFIT_DATA_DIR", default_value = "retrofit-sessions")]
    data_dir: PathBuf,
    #[arg(long, default_value_t = 15, value_parser = positive)]
    lambda: usize,
    #[arg(long, default_value_t = 5, value_parser = positive)]
    mu: usize,
    #[arg(long, default_value = "16x16x4", value_parser = parse_shape)]
    shape: LatentShape,
    /// Surrogate evaluations per offspring.
    #[arg(long, default_value_t = 200, value_parser = positive)]
    evolve_budget: usize,
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_suffix(s: &str) -> Result<u32, String> {
    match s.parse::<u32>() {
        Ok(v @ (1 | 10 | 100)) => Ok(v),
        Ok(v) => Err(format!("{v} is not one of 1, 10, 100")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (k, b) = s.split_once(['x', 'X']).ok_or_else(|| format!("expected KxB, got {s:?}"))?;
    Ok((positive(k.trim())?, positive(b.trim())?))
}

fn parse_shape(s: &str) -> Result<LatentShape, String> {
    let parts: Vec<&str> = s.split(['x', 'X']).collect();
    let [h, w, c] = parts.as_slice() else {
        return Err(format!("expected HxWxC, got {s:?}"));
    };
    LatentShape::new(positive(h)?, positive(w)?, positive(c)?).validate().map_err(|e| e.to_string())
}

fn parse_click(s: &str) -> Result<ClickPoint, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected PX,PY, got {s:?}"))?;
    let p = |v: &str| v.trim().parse::<u32>().map_err(|e| e.to_string());
    Ok(ClickPoint::new(p(x)?, p(y)?))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => commands::run(args),
        Command::Generalize(args) => commands::generalize(args),
        Command::Risk(args) => commands::risk(args),
        Command::Latent(cmd) => commands::latent(cmd),
        Command::Serve(args) => commands::serve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
