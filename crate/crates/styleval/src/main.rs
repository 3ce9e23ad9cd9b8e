use std::path::PathBuf;

use clap::{Parser, Subcommand};

use styleval::commands::{self, CliError};
use styleval::config::{parse_directions, parse_metrics, RunConfig};
use styleval::mockfarm::{MockServer, Script};

#[derive(Parser)]
#[command(
    name = "styleval",
    version,
    about = "Batch evaluation of style-conditioned chat responses"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read the configured corpora and build the sample store.
    Ingest {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate style-conditioned responses for every sample/model/direction.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Override run.eval_samples.
        #[arg(long)]
        samples: Option<usize>,
        /// Override run.directions (comma-separated).
        #[arg(long, value_delimiter = ',')]
        directions: Vec<String>,
        /// Bypass the response cache for this run.
        #[arg(long)]
        no_cache: bool,
    },
    /// Score responses with the selected metrics.
    Score {
        #[arg(long)]
        config: PathBuf,
        /// Override run.metrics (comma-separated).
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
        /// Bypass the response cache for this run.
        #[arg(long)]
        no_cache: bool,
    },
    /// Correlate metric scores against human annotations.
    Correlate {
        #[arg(long)]
        config: PathBuf,
        /// Human annotation CSV.
        #[arg(long)]
        human: PathBuf,
    },
    /// Aggregate the metric store into a leaderboard.
    Report {
        #[arg(long)]
        config: PathBuf,
        /// Column grouping: task or direction.
        #[arg(long, default_value = "task")]
        group: String,
        /// Row order: model, or cell:<group>:<metric>.
        #[arg(long, default_value = "model")]
        sort: String,
        /// Output format: csv, markdown, json, or all.
        #[arg(long, default_value = "all")]
        format: String,
    },
    /// Serve scripted stand-ins for every backend endpoint.
    MockServe {
        /// Script JSON; use `{}` for all-derive defaults.
        #[arg(long)]
        script: PathBuf,
        /// Port on 127.0.0.1; 0 picks an ephemeral port.
        #[arg(long, default_value_t = 0)]
        port: u16,
    },
}

async fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Ingest { config } => {
            let cfg = RunConfig::load(&config)?;
            let summary = commands::ingest::run(&cfg)?;
            for ds in &summary.per_dataset {
                println!(
                    "dataset {}: {} samples ({} dialogues skipped)",
                    ds.id, ds.samples, ds.skipped_dialogues
                );
            }
            println!(
                "wrote {} samples to {}",
                summary.total_samples,
                summary.store_path.display()
            );
            Ok(())
        }
        Command::Generate { config, samples, directions, no_cache } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(n) = samples {
                if n == 0 {
                    return Err(CliError::Usage("--samples must be >= 1".to_string()));
                }
                cfg.eval_samples = n;
            }
            if !directions.is_empty() {
                cfg.directions = parse_directions(&directions)?;
            }
            let summary = commands::generate::run(&cfg, no_cache).await?;
            println!(
                "generated {} cells ({} reused), store at {}",
                summary.generated,
                summary.reused,
                summary.store_path.display()
            );
            Ok(())
        }
        Command::Score { config, metrics, no_cache } => {
            let mut cfg = RunConfig::load(&config)?;
            if !metrics.is_empty() {
                cfg.metrics = parse_metrics(&metrics)?;
            }
            let summary = commands::score::run(&cfg, no_cache).await?;
            for (metric, scored, total) in &summary.coverage {
                println!("{}: scored {scored}/{total}", metric.as_str());
            }
            println!(
                "computed {} new records ({} reused), store at {}",
                summary.computed,
                summary.reused,
                summary.store_path.display()
            );
            Ok(())
        }
        Command::Correlate { config, human } => {
            let cfg = RunConfig::load(&config)?;
            let summary = commands::correlate::run(&cfg, &human)?;
            println!(
                "wrote {} correlation rows to {} and {}",
                summary.rows.len(),
                summary.csv_path.display(),
                summary.md_path.display()
            );
            Ok(())
        }
        Command::Report { config, group, sort, format } => {
            let cfg = RunConfig::load(&config)?;
            let grouping = commands::report::parse_grouping(&group)?;
            let order = commands::report::parse_sort(&sort, grouping)?;
            let formats = commands::report::parse_formats(&format)?;
            let summary = commands::report::run(&cfg, grouping, order, &formats)?;
            for path in &summary.written {
                println!("wrote {}", path.display());
            }
            println!("{} models ranked", summary.models);
            Ok(())
        }
        Command::MockServe { script, port } => {
            let text = std::fs::read_to_string(&script).map_err(|e| {
                CliError::Usage(format!("cannot read script {}: {e}", script.display()))
            })?;
            let script: Script = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("script is not valid JSON: {e}")))?;
            let server = MockServer::serve(script, port)
                .await
                .map_err(|e| CliError::Usage(e.to_string()))?;
            println!("listening on {}", server.base_url());
            tokio::signal::ctrl_c()
                .await
                .map_err(|e| CliError::Failed(format!("cannot wait for ctrl-c: {e}")))?;
            server.shutdown().await;
            Ok(())
        }
    }
}

#[tokio::main]
async fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli.command).await {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
