use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use retrofit::harness::{afterlearner, generalization_experiment, risk_bound, AfterlearnerConfig, GeneralizationConfig};
use retrofit::latent::{
    encode_png, latent_evolve, toy_generate, tree_fit, voronoi_crossover, LabeledSample, LatentTensor, SurrogateModel,
};
use retrofit::tasks::{make_task, RetrofitTask, TaskOptions};
use retrofit::SCHEMA_VERSION;
use retrofit_session::{AppState, ServiceConfig, SessionStore};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{CliError, GeneralizeArgs, LatentCommand, RiskArgs, RunArgs, ServeArgs, TaskArgs};

fn build_task(args: &TaskArgs) -> Result<Box<dyn RetrofitTask>, CliError> {
    make_task(args.task, args.seed, &task_options(args)).map_err(CliError::Usage)
}

fn task_options(args: &TaskArgs) -> TaskOptions {
    TaskOptions {
        threshold_level: args.threshold_level,
        scale_suffix: args.scale_suffix,
        seq_loss: args.seq_loss,
        noise: !args.no_noise,
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_slice(&bytes).map_err(|e| CliError::Runtime(format!("{}: malformed JSON: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = BufWriter::new(File::create(path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?);
    serde_json::to_writer_pretty(&mut out, value).map_err(CliError::runtime)?;
    out.write_all(b"\n").and_then(|_| out.flush()).map_err(CliError::runtime)
}

#[derive(Serialize)]
struct CsvRow {
    schema_version: u32,
    run: usize,
    optimizer: String,
    algorithm: String,
    budget: usize,
    seed: u64,
    val_loss: Option<f64>,
    test_loss: Option<f64>,
    error: String,
}

pub fn run(args: RunArgs) -> Result<(), CliError> {
    let task = build_task(&args.task)?;
    let config = AfterlearnerConfig::new(args.optimizers, args.budgets, args.runs, args.task.seed)
        .with_workers(args.workers)
        .with_noise(task.noisy());
    let result = afterlearner(&config, task.domain(), task.validation()).map_err(|e| CliError::Usage(e.to_string()))?;
    for run in result.all_runs.iter().filter(|r| r.error.is_some()) {
        log::warn!("run {} failed: {}", run.run_index, run.error.as_deref().unwrap_or_default());
    }

    fs::create_dir_all(&args.out).map_err(|e| CliError::Runtime(format!("{}: {e}", args.out.display())))?;
    let create = |name: &str| {
        let path = args.out.join(name);
        File::create(&path).map(BufWriter::new).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    };
    let mut jsonl = create("runs.jsonl")?;
    result.write_jsonl(&mut jsonl).and_then(|_| jsonl.flush()).map_err(CliError::runtime)?;
    let mut summary = create("summary.json")?;
    result.write_summary(&mut summary).and_then(|_| summary.write_all(b"\n")).and_then(|_| summary.flush()).map_err(CliError::runtime)?;

    let mut csv = csv::Writer::from_writer(create("runs.csv")?);
    for r in &result.all_runs {
        let finite = |v: f64| v.is_finite().then_some(v);
        csv.serialize(CsvRow {
            schema_version: SCHEMA_VERSION,
            run: r.run_index,
            optimizer: r.optimizer.as_str().to_string(),
            algorithm: r.algorithm.map(|a| a.as_str().to_string()).unwrap_or_default(),
            budget: r.budget,
            seed: r.seed,
            val_loss: finite(r.validation_loss),
            test_loss: r.recommendation.as_ref().map(|c| task.test_loss(&c.genome)),
            error: r.error.clone().unwrap_or_default(),
        })
        .map_err(CliError::runtime)?;
    }
    csv.flush().map_err(CliError::runtime)?;

    let baseline = task.test_loss(&task.domain().neutral());
    println!(
        "task {} | runs {} | evaluations {} | best run {} | validation {:.6} | test {:.6} (baseline {:.6})",
        task.name(),
        result.all_runs.len(),
        result.total_evaluations,
        result.best_run_index,
        result.best_validation_loss,
        task.test_loss(&result.best_parameters),
        baseline,
    );
    Ok(())
}

pub fn generalize(args: GeneralizeArgs) -> Result<(), CliError> {
    build_task(&args.task)?;
    let options = task_options(&args.task);
    let name = args.task.task;
    let config = GeneralizationConfig {
        configs: args.configs,
        replicas: args.replicas,
        optimizers: args.optimizers,
        workers: args.workers,
        seed: args.task.seed,
    };
    let report = generalization_experiment(|s| make_task(name, s, &options).expect("options validated"), &config)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let csv = report.to_csv().map_err(CliError::runtime)?;
    match &args.out {
        Some(path) => {
            fs::write(path, csv).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
            write_json(&path.with_extension("json"), &report)?;
            for s in &report.summaries {
                println!(
                    "k={:<3} b={:<5} mean val {:.6} | mean test {:.6} +- {:.6}",
                    s.k, s.b, s.mean_val_loss, s.mean_test_loss, s.std_test_loss
                );
            }
            println!("baseline test {:.6}", report.baseline_test_loss);
        }
        None => print!("{csv}"),
    }
    Ok(())
}

pub fn risk(args: RiskArgs) -> Result<(), CliError> {
    let b = risk_bound(args.k, args.lambda, args.n, args.delta).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{}", b.bound);
    if b.bound > 1.0 {
        eprintln!("note: bound exceeds 1 (vacuous); clipped value {}", b.clipped);
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    schema_version: u32,
    training_accuracy: f64,
    model: SurrogateModel,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelInput {
    Wrapped(ModelFile),
    Bare(SurrogateModel),
}

#[derive(Serialize)]
struct EvolveReport {
    schema_version: u32,
    loss: f64,
    evaluations: usize,
    distance: f64,
}

pub fn latent(cmd: LatentCommand) -> Result<(), CliError> {
    match cmd {
        LatentCommand::Sample { seed, shape, out } => {
            let z = LatentTensor::standard_normal(shape, &mut ChaCha8Rng::seed_from_u64(seed)).map_err(CliError::runtime)?;
            write_json(&out, &z)
        }
        LatentCommand::Fit { data, out } => {
            let samples: Vec<LabeledSample> = read_json(&data)?;
            let (x, y): (Vec<Vec<f64>>, Vec<_>) = samples.into_iter().map(|s| (s.values, s.label)).unzip();
            let model = tree_fit(&x, &y).map_err(CliError::runtime)?;
            let training_accuracy = model.accuracy(&x, &y).map_err(CliError::runtime)?;
            println!(
                "training accuracy {training_accuracy:.4} | leaves {} | depth {}",
                model.leaf_count(),
                model.depth()
            );
            let file = ModelFile { schema_version: SCHEMA_VERSION, training_accuracy, model };
            match out {
                Some(path) => write_json(&path, &file),
                None => {
                    println!("{}", serde_json::to_string_pretty(&file).map_err(CliError::runtime)?);
                    Ok(())
                }
            }
        }
        LatentCommand::Evolve { model, z0, epsilon, budget, seed, out } => {
            let model = match read_json::<ModelInput>(&model)? {
                ModelInput::Wrapped(f) => f.model,
                ModelInput::Bare(m) => m,
            };
            let z0: LatentTensor = read_json(&z0)?;
            let outcome = latent_evolve(&model, &z0, epsilon, budget, seed).map_err(|e| CliError::Usage(e.to_string()))?;
            write_json(&out, &outcome.latent)?;
            let report = EvolveReport {
                schema_version: SCHEMA_VERSION,
                loss: outcome.loss,
                evaluations: outcome.evaluations,
                distance: outcome.latent.distance(&z0),
            };
            println!("{}", serde_json::to_string(&report).map_err(CliError::runtime)?);
            Ok(())
        }
        LatentCommand::Crossover { z1, z2, p1, p2, out } => {
            let (z1, z2): (LatentTensor, LatentTensor) = (read_json(&z1)?, read_json(&z2)?);
            let child = voronoi_crossover(&z1, &z2, p1, p2).map_err(|e| CliError::Usage(e.to_string()))?;
            write_json(&out, &child)
        }
        LatentCommand::Render { z, out } => {
            let z: LatentTensor = read_json(&z)?;
            fs::write(&out, encode_png(&toy_generate(&z))).map_err(|e| CliError::Runtime(format!("{}: {e}", out.display())))
        }
    }
}

pub fn serve(args: ServeArgs) -> Result<(), CliError> {
    if args.mu >= args.lambda {
        return Err(CliError::Usage(format!("need mu < lambda, got mu={} lambda={}", args.mu, args.lambda)));
    }
    let store = SessionStore::open(&args.data_dir).map_err(CliError::runtime)?;
    let defaults = ServiceConfig { lambda: args.lambda, mu: args.mu, shape: args.shape, evolve_budget: args.evolve_budget };
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::runtime)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((args.host.as_str(), args.port))
            .await
            .map_err(|e| CliError::Runtime(format!("cannot bind {}:{}: {e}", args.host, args.port)))?;
        let addr = listener.local_addr().map_err(CliError::runtime)?;
        println!("listening on http://{addr}");
        std::io::stdout().flush().map_err(CliError::runtime)?;
        log::info!("session data in {}", args.data_dir.display());
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        retrofit_session::serve(listener, AppState::new(store, defaults), shutdown).await.map_err(CliError::runtime)
    })
}
