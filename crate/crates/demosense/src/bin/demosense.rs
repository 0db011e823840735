//! Thin command-line front end. All behavior lives in the library; see the
//! examples directory for programmatic use.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use demosense::corpus::load_dataset;
use demosense::modelio::{serve_mock, served_vocabulary, SyntheticTopicModel};
use demosense::runner::report::emit_report;
use demosense::runner::synthetic::{write_dataset, SyntheticSpec};
use demosense::runner::{aggregate, load_records, ExperimentConfig, Runner};

#[derive(Parser)]
#[command(
    name = "demosense",
    version,
    about = "Measure in-context classifier sensitivity to demonstration label corruption"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the sweep described by an experiment config.
    Run {
        /// Experiment TOML.
        #[arg(long)]
        config: PathBuf,
        /// Output directory; defaults to the config's out_dir.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to the config's concurrency.
        #[arg(long)]
        concurrency: Option<usize>,
    },
    /// Analyze a records file: fits, loss ratios, summary tables.
    Report {
        /// records.jsonl from a finished (or partial) sweep.
        #[arg(long)]
        records: PathBuf,
        /// Directory for report.json, summary.csv, scatter.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the synthetic backend over the wire protocol.
    MockServe {
        /// Dataset config with a [mock] topics lexicon.
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 8700)]
        port: u16,
    },
    /// Generate a synthetic dataset directory.
    GenSynthetic {
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, default_value_t = 4)]
        topics: usize,
        #[arg(long, default_value_t = 2)]
        classes: usize,
        #[arg(long, default_value_t = 16)]
        train: usize,
        #[arg(long, default_value_t = 64)]
        eval: usize,
        /// Directory to create (train.jsonl, eval.jsonl, config.toml).
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            concurrency,
        } => {
            let mut experiment = ExperimentConfig::load(&config)
                .with_context(|| format!("loading {}", config.display()))?;
            if let Some(n) = concurrency {
                experiment.concurrency = n;
            }
            let out_dir = out.unwrap_or_else(|| experiment.out_dir.clone());
            let runner = Runner::new(experiment)?;
            let outcome = runner.sweep(&out_dir)?;

            println!(
                "sweep: {} new, {} already done, {} failed -> {}",
                outcome.new_records.len(),
                outcome.skipped,
                outcome.failures.len(),
                outcome.records_path.display()
            );
            let records = load_records(&outcome.records_path)?;
            for row in aggregate(&records) {
                let alpha = row
                    .alpha
                    .map_or_else(|| "  -".to_string(), |a| format!("{a:3}"));
                println!(
                    "  {:<24} {:<8} {:<24} a={} acc {:.4} +/- {:.4}  f1 {:.4}  ({} seeds)",
                    row.dataset,
                    row.method.to_string(),
                    row.condition.label(),
                    alpha,
                    row.accuracy_mean,
                    row.accuracy_std,
                    row.macro_f1_mean,
                    row.n_seeds
                );
            }
            if outcome.is_partial() {
                for (run_id, error) in &outcome.failures {
                    eprintln!("failed: {run_id}: {error}");
                }
                eprintln!(
                    "{} coordinate(s) failed; rerun to retry just those",
                    outcome.failures.len()
                );
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report { records, out } => {
            let records = load_records(&records)?;
            let report = emit_report(&records, &out)?;
            println!(
                "report: {} group(s) -> {}",
                report.groups.len(),
                out.join("report.json").display()
            );
            for group in &report.groups {
                for gap in &group.gaps {
                    println!("  gap: {gap}");
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::MockServe { config, port } => {
            let dataset = load_dataset(&config)?;
            let vocabulary = served_vocabulary(&dataset);
            let model = SyntheticTopicModel::for_dataset(&dataset, vocabulary)?;
            let server = serve_mock(model, port)?;
            println!("serving synthetic backend for {:?} at {}", dataset.name, server.base_url());
            server.serve_forever();
            Ok(ExitCode::SUCCESS)
        }
        Command::GenSynthetic {
            name,
            topics,
            classes,
            train,
            eval,
            out,
        } => {
            let spec = SyntheticSpec {
                name,
                topics,
                classes,
                train,
                eval,
            };
            let config_path = write_dataset(&spec, &out)?;
            println!("wrote {}", config_path.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}
