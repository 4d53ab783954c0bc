use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use coseg::commands;
use coseg::report;
use coseg::{CliError, RunConfig};

#[derive(Parser)]
#[command(name = "coseg", version, about = "Self-supervised event boundary detection on frame features")]
struct Cli {
    /// TOML run configuration; built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with ground-truth boundaries
    Synth {
        #[arg(long)]
        seed: Option<u64>,
        /// Corpus directory (default: paths.corpus)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the embedding and reconstruction models
    Train {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        steps: Option<usize>,
        /// Corpus directory (default: paths.corpus)
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Run directory (default: paths.run)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Detect boundaries with a trained checkpoint
    Detect {
        /// Checkpoint file (default: <paths.run>/checkpoint.csgc)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write per-frame error, smoothed error and gradient CSVs
        #[arg(long)]
        dump_trajectory: bool,
    },
    /// Score detections against annotations
    Eval {
        /// Detections JSON (default: <paths.run>/detections.json)
        #[arg(long)]
        detections: Option<PathBuf>,
        /// Annotations JSON (default: <paths.corpus>/annotations.json)
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Comma-separated relative-distance thresholds
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::Synth { seed, out } => {
            if let Some(s) = seed {
                cfg.synth.seed = s;
            }
            let out = out.unwrap_or_else(|| cfg.paths.corpus.clone());
            let s = commands::cmd_synth(&cfg, &out)?;
            println!("wrote {} videos with {} boundaries to {}", s.videos, s.boundaries, out.display());
        }
        Command::Train { seed, steps, corpus, out } => {
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(n) = steps {
                cfg.steps = n;
            }
            let corpus = corpus.unwrap_or_else(|| cfg.paths.corpus.clone());
            let out = out.unwrap_or_else(|| cfg.paths.run.clone());
            let s = commands::cmd_train(&cfg, &corpus, &out)?;
            if let (Some(first), Some(last)) = (s.losses.first(), s.losses.last()) {
                println!(
                    "{} steps, joint loss {:.4} -> {:.4}; checkpoint {}",
                    s.losses.len(),
                    first.joint,
                    last.joint,
                    s.checkpoint.display()
                );
            }
        }
        Command::Detect { checkpoint, corpus, out, dump_trajectory } => {
            let out = out.unwrap_or_else(|| cfg.paths.run.clone());
            let checkpoint = checkpoint.unwrap_or_else(|| cfg.paths.run.join(commands::CHECKPOINT_FILE));
            let corpus = corpus.unwrap_or_else(|| cfg.paths.corpus.clone());
            let records = commands::cmd_detect(&cfg, &checkpoint, &corpus, &out, dump_trajectory)?;
            let n: usize = records.iter().map(|r| r.boundaries.len()).sum();
            println!("{n} boundaries in {} videos -> {}", records.len(), out.join(commands::DETECTIONS_FILE).display());
        }
        Command::Eval { detections, annotations, thresholds, out } => {
            let out = out.unwrap_or_else(|| cfg.paths.run.clone());
            let detections = detections.unwrap_or_else(|| cfg.paths.run.join(commands::DETECTIONS_FILE));
            let annotations = annotations.unwrap_or_else(|| cfg.paths.corpus.join(commands::ANNOTATIONS_FILE));
            let thresholds = thresholds.unwrap_or_else(|| cfg.eval.thresholds.clone());
            let r = commands::cmd_eval(&detections, &annotations, &thresholds, &out)?;
            print!("{}", report::to_table(&r));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.category());
            ExitCode::FAILURE
        }
    }
}
