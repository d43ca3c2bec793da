use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use charmer::attack::{AttackConfig, PjcConstraints};
use charmer::harness::{
    extract_alphabet, load_dataset, open_oracle, run_attack_suite, AttackKind, Format, LoadOptions,
    SuiteConfig,
};
use charmer::oracle::{train_builtin, RemoteConfig, TrainConfig};
use charmer::verify::{run_suite, VerifySuite};
use charmer::Result;

#[derive(Parser)]
#[command(
    name = "charmer",
    version,
    about = "Character-level adversarial attacks on text classifiers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Attack a labelled dataset.
    Attack {
        #[command(subcommand)]
        action: AttackAction,
    },
    /// Train the builtin n-gram classifier and save it.
    TrainBuiltin(TrainArgs),
    /// Run a self-checking property suite.
    Verify {
        #[arg(long, value_parser = parse_suite)]
        suite: VerifySuite,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Subcommand)]
enum AttackAction {
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "jsonl", value_parser = parse_format)]
    format: Format,
    /// builtin:<model-file> or http:<url>
    #[arg(long)]
    oracle: String,
    #[arg(long, default_value = "charmer", value_parser = parse_attack)]
    attack: AttackKind,
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Comma list of repeat, first, last, length, loweng (or all/none).
    #[arg(long, default_value = "none", value_parser = parse_constraints)]
    constraints: PjcConstraints,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    budget: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: PathBuf,
    /// Keep only the first N records.
    #[arg(long)]
    limit: Option<usize>,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Remote oracle: extra attempts after transport failures.
    #[arg(long, default_value_t = 0)]
    retries: u32,
    /// Remote oracle: request timeout in seconds.
    #[arg(long, default_value_t = 60)]
    timeout: u64,
    /// Remote oracle: sentences per request.
    #[arg(long, default_value_t = 256)]
    batch_limit: usize,
    /// Remote oracle: expected class count.
    #[arg(long)]
    num_classes: Option<usize>,
    #[arg(long, default_value_t = 0.1)]
    pga_step_size: f64,
    #[arg(long, default_value_t = 200)]
    pga_iterations: usize,
    #[arg(long, default_value_t = 4096)]
    pga_candidate_cap: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "jsonl", value_parser = parse_format)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = charmer::oracle::DEFAULT_FEATURE_DIM)]
    feature_dim: usize,
}

fn parse_suite(s: &str) -> Result<VerifySuite, String> {
    s.parse().map_err(|e: charmer::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse().map_err(|e: charmer::Error| e.to_string())
}

fn parse_attack(s: &str) -> Result<AttackKind, String> {
    s.parse().map_err(|e: charmer::Error| e.to_string())
}

fn parse_constraints(s: &str) -> Result<PjcConstraints, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("CHARMER_LOG", "warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Attack {
            action: AttackAction::Run(args),
        } => attack_run(args),
        Command::TrainBuiltin(args) => train(args),
        Command::Verify { suite, seed } => verify(suite, seed),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn attack_run(args: RunArgs) -> Result<bool> {
    let dataset = load_dataset(
        &args.dataset,
        args.format,
        &LoadOptions { limit: args.limit },
    )?;
    let remote = RemoteConfig {
        num_classes: args.num_classes,
        retries: args.retries,
        timeout: Duration::from_secs(args.timeout),
        concurrency: args.workers.max(1),
        batch_limit: args.batch_limit,
    };
    let oracle = open_oracle(&args.oracle, remote)?;
    let alphabet = extract_alphabet(&dataset.records)?;
    let mut attack = AttackConfig::new(alphabet);
    attack.n = args.n;
    attack.k = args.k;
    attack.constraints = args.constraints;
    attack.segment_preselect = args.segments;
    attack.budget = args.budget;
    attack.seed = args.seed;
    let mut config = SuiteConfig::new(args.attack, attack);
    config.workers = args.workers;
    config.pga_step_size = args.pga_step_size;
    config.pga_iterations = args.pga_iterations;
    config.pga_candidate_cap = args.pga_candidate_cap;

    let transcript = BufWriter::new(File::create(&args.out)?);
    let (report, _) = run_attack_suite(&dataset, &oracle, &config, transcript)?;
    let mut w = BufWriter::new(File::create(&args.report)?);
    serde_json::to_writer_pretty(&mut w, &report)?;
    w.write_all(b"\n")?;
    w.flush()?;

    let b = &report.body;
    match b.asr {
        Some(asr) => println!(
            "{}: ASR {:.2}% ({}/{} attackable, {} skipped, {} errors)",
            b.attack, asr, b.successes, b.attackable, b.skipped, b.errors
        ),
        None => println!(
            "{}: no attackable samples ({} skipped, {} errors)",
            b.attack, b.skipped, b.errors
        ),
    }
    Ok(true)
}

fn train(args: TrainArgs) -> Result<bool> {
    let dataset = load_dataset(&args.dataset, args.format, &LoadOptions::default())?;
    let pairs = dataset.training_pairs();
    let config = TrainConfig {
        feature_dim: args.feature_dim,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let model = train_builtin(&pairs, &config)?;
    model.save_to_path(&args.out)?;
    let correct = pairs.iter().filter(|(s, y)| model.predict(s) == *y).count();
    println!(
        "trained on {} records, training accuracy {:.2}%",
        pairs.len(),
        100.0 * correct as f64 / pairs.len() as f64
    );
    Ok(true)
}

fn verify(suite: VerifySuite, seed: u64) -> Result<bool> {
    let result = run_suite(suite, seed)?;
    println!("{result}");
    for failure in result.failures.iter().take(20) {
        println!("  {failure}");
    }
    Ok(result.passed())
}
