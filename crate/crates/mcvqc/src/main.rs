use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mcvqc::checkpoint::Checkpoint;
use mcvqc::config::Config;
use mcvqc::core::models::{Model, Trainable};
use mcvqc::error::{Error, Result};
use mcvqc::experiment::{self, ExperimentKind};
use mcvqc::output::{write_metric_csv, MetricRow, METRIC_COLUMNS};
use mcvqc::train::{self, TrainOptions};
use serde_json::json;

#[derive(Parser)]
#[command(name = "mcvqc", version, about = "Multi-chip ensemble VQC training and experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricKind {
    Ent,
    Gradvar,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured model; writes a run log, CSV and checkpoint.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Continue from a checkpoint written by an earlier run.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Run an experiment family: performance, generalization,
    /// barren_plateau or noise_resilience.
    Experiment {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        config: PathBuf,
    },
    /// Entangling capability or gradient variance of k chips of n/k qubits.
    Metrics {
        #[arg(long, value_enum)]
        metric: MetricKind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        chips: usize,
        #[arg(long)]
        samples: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-noise extrapolation study over random circuits.
    Zne {
        #[arg(long)]
        config: PathBuf,
    },
    /// Summarize a checkpoint.
    Inspect {
        #[arg(long)]
        checkpoint: PathBuf,
    },
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string(v).expect("json value serializes"));
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train { config, resume } => {
            let cfg = Config::load(&config)?;
            let ds = train::load_dataset(&cfg)?;
            let resume = resume.map(|p| Checkpoint::load(&p)).transpose()?;
            let opts = TrainOptions { out_dir: Some(cfg.output.dir.clone()), resume, ..Default::default() };
            let rec = train::train(&cfg, &ds, &opts)?;
            print_json(&json!({
                "model": rec.model,
                "epochs": rec.history.len(),
                "summary": rec.summary,
                "config_hash": rec.config_hash,
                "wall_clock_secs": rec.wall_clock_secs,
                "artifacts": rec.artifacts,
            }));
        }
        Command::Experiment { kind, config } => {
            let kind: ExperimentKind = kind.parse()?;
            let cfg = Config::load(&config)?;
            let ds = match kind {
                ExperimentKind::BarrenPlateau => None,
                _ => Some(train::load_dataset(&cfg)?),
            };
            let rec = experiment::run_experiment(kind, &cfg, ds.as_ref(), true)?;
            let runs: Vec<_> = rec.runs.iter().map(|r| json!({"model": r.model, "summary": r.summary})).collect();
            print_json(&json!({
                "kind": kind.name(),
                "csv": rec.csv,
                "rows": rec.metrics.len() + rec.curves.len(),
                "runs": runs,
                "wall_clock_secs": rec.wall_clock_secs,
            }));
        }
        Command::Metrics { metric, n, chips, samples, seed, depth, out } => {
            let (ent, gradvar) = match metric {
                MetricKind::Ent => (true, false),
                MetricKind::Gradvar => (false, true),
            };
            let rows = experiment::sweep_point(n, chips, depth, samples, seed, ent, gradvar)?;
            match out {
                Some(path) => write_metric_csv(&path, &rows)?,
                None => print_csv(&rows)?,
            }
        }
        Command::Zne { config } => {
            let cfg = Config::load(&config)?;
            let (outcomes, rows) = experiment::zne_study(&cfg)?;
            let path = cfg.output.dir.join("zne.csv");
            write_metric_csv(&path, &rows)?;
            let n = outcomes.len() as f64;
            let wins = outcomes.iter().filter(|o| o.bias_mitigated() < o.bias_noisy()).count();
            let mean = |f: &dyn Fn(&experiment::ZneOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
            print_json(&json!({
                "circuits": outcomes.len(),
                "bias_reduced": wins,
                "mean_bias_unmitigated": mean(&|o| o.bias_noisy()),
                "mean_bias_zne": mean(&|o| o.bias_mitigated()),
                "mean_variance_unmitigated": mean(&|o| o.var_noisy),
                "mean_variance_zne": mean(&|o| o.var_mitigated),
                "csv": path,
            }));
        }
        Command::Inspect { checkpoint } => {
            let ck = Checkpoint::load(&checkpoint)?;
            let mut v = json!({
                "format": ck.format,
                "version": ck.version,
                "config_hash": ck.config_hash,
                "kind": ck.kind,
                "epoch": ck.epoch,
                "seeds": ck.seeds,
                "param_count": ck.model.param_count(),
                "optimizer_step": ck.optimizer.step,
                "last": ck.history.last(),
            });
            if let Model::Ensemble(m) = &ck.model {
                v["chips"] = json!(m.num_chips());
                v["qubits_per_chip"] = json!(m.chip.num_qubits);
                v["permutation"] = json!(m.partition.permutation());
            }
            print_json(&v);
        }
    }
    Ok(())
}

fn print_csv(rows: &[MetricRow]) -> Result<()> {
    mcvqc::output::validate_metric_rows(rows)?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(std::io::stdout());
    w.write_record(METRIC_COLUMNS)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<stdout>", e))
}

fn fail(kind: &str, message: &str) -> ExitCode {
    let message = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("{}", json!({"error": kind, "message": message}));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            fail("usage", first);
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
