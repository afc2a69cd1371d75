use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

use super::commands::{cmd_evaluate, cmd_predict, cmd_prepare, cmd_report, cmd_synth, cmd_train, cmd_tune};
use super::config::PipelineConfig;
use crate::error::{Error, Result};

/// Environment variable holding the log filter (`error`..`trace`).
pub const LOG_ENV: &str = "DRGRADE_LOG";

#[derive(Debug, Parser)]
#[command(name = "drgrade", version, about = "Diabetic retinopathy grading pipeline")]
pub struct Cli {
    /// JSON pipeline config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split, merge and augment the base manifest.
    Prepare,
    /// Train on the prepared split with QWK checkpointing.
    Train,
    /// Score a checkpoint on the test split or a given manifest.
    Evaluate {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Classify images, one JSON line per image.
    Predict {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Bayesian search over learning rate and momentum.
    Tune {
        /// Use the quadratic stub objective instead of training.
        #[arg(long)]
        stub: bool,
    },
    /// Summarise existing artifacts into markdown and plots.
    Report,
    /// Write a synthetic blob dataset and manifest into --out.
    Synth {
        /// Images per grade 0..=4.
        #[arg(long, value_delimiter = ',', default_values_t = [100usize, 100, 100, 100, 100])]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 32)]
        size: usize,
    },
}

fn config(cli: &Cli) -> Result<PipelineConfig> {
    let base = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    Ok(base.with_overrides(cli.seed, cli.out.clone()))
}

/// Runs one parsed command, writing results to `stdout`.
pub fn run(cli: &Cli, stdout: &mut impl Write) -> Result<()> {
    let cfg = config(cli)?;
    let art = match &cli.command {
        Command::Prepare => cmd_prepare(&cfg)?,
        Command::Train => cmd_train(&cfg)?,
        Command::Evaluate { checkpoint, manifest } => cmd_evaluate(&cfg, checkpoint.as_deref(), manifest.as_deref())?,
        Command::Tune { stub } => cmd_tune(&cfg, *stub)?,
        Command::Report => cmd_report(&cfg)?,
        Command::Synth { counts, size } => cmd_synth(&cfg.out_dir, counts, *size, cfg.seed)?,
        Command::Predict { checkpoint, images } => {
            for r in cmd_predict(&cfg, checkpoint.as_deref(), images)? {
                match r {
                    Ok(p) => writeln!(stdout, "{}", serde_json::to_string(&p).expect("json")),
                    Err(e) => {
                        eprintln!("{}", error_line(&e));
                        Ok(())
                    }
                }
                .map_err(|e| Error::io("<stdout>", e))?;
            }
            return Ok(());
        }
    };
    writeln!(stdout, "{}", art.summary).map_err(|e| Error::io("<stdout>", e))
}

/// `error[<kind>]: <message>` on one line.
pub fn error_line(e: &Error) -> String {
    format!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "))
}

/// Parses `args`, runs, and returns the process exit code.
pub fn main_with(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli, &mut std::io::stdout().lock()) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", error_line(&e));
            e.exit_code()
        }
    }
}
