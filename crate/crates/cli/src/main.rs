//! `vderain`: train, apply and evaluate video rain removal models.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use vderain::video::demo::DeskSpec;

#[derive(Parser)]
#[command(name = "vderain", version, about = "Semi-supervised video rain removal")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Options shared by the commands that read a layered config.
#[derive(clap::Args)]
struct ConfigArgs {
    /// JSON config file; every key is optional except the data paths.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted-key override such as `train.prior.rho=0.25`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Seed for training and generator fitting.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; same as `--set data.output=...`.
    #[arg(long)]
    output: Option<PathBuf>,
}

impl ConfigArgs {
    fn overrides(&self) -> Vec<String> {
        let mut o = self.set.clone();
        if let Some(s) = self.seed {
            o.push(format!("train.seed={s}"));
            o.push(format!("fit.seed={s}"));
        }
        if let Some(p) = &self.output {
            o.push(format!("data.output={}", serde_json::to_string(p).expect("paths serialize")));
        }
        o
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a derainer with Monte Carlo EM.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Resume from this checkpoint archive.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Remove rain from a frame directory or `.tnsr` clip.
    Derain {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Score result/clean pairs with luminance PSNR and SSIM.
    Evaluate {
        /// A result clip followed by its clean reference; repeatable.
        #[arg(long = "pair", num_args = 2, value_names = ["RESULT", "CLEAN"], required = true)]
        pairs: Vec<PathBuf>,
        /// CSV file to write.
        #[arg(long)]
        output: PathBuf,
    },
    /// Synthesise a rain layer, optionally composited over a clean clip.
    SimulateRain {
        /// JSON rain recipe; defaults are used for missing keys.
        #[arg(long)]
        recipe: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        /// Clean clip to composite the rain over; sets the clip size.
        #[arg(long)]
        clean: Option<PathBuf>,
        #[arg(long)]
        output: PathBuf,
    },
    /// Fit one rain generator to a single rain-layer clip.
    FitGenerator {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Write a small synthetic dataset and a config that trains on it.
    DemoData {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        labeled: usize,
        #[arg(long, default_value_t = 2)]
        unlabeled: usize,
        #[arg(long, default_value_t = 2)]
        validation: usize,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Train { cfg, checkpoint } => {
            commands::cmd_train(cfg.config.as_deref(), &cfg.overrides(), checkpoint.as_deref())
        }
        Command::Derain { checkpoint, input, output } => commands::cmd_derain(&checkpoint, &input, &output),
        Command::Evaluate { pairs, output } => {
            let pairs: Vec<_> = pairs.chunks_exact(2).map(|p| (p[0].clone(), p[1].clone())).collect();
            commands::cmd_evaluate(&pairs, &output)
        }
        Command::SimulateRain { recipe, seed, frames, height, width, clean, output } => {
            commands::cmd_simulate_rain(&commands::SimulateArgs {
                recipe: recipe.as_deref(),
                seed,
                frames,
                height,
                width,
                clean: clean.as_deref(),
                output: &output,
            })
        }
        Command::FitGenerator { input, cfg } => {
            commands::cmd_fit_generator(&input, cfg.config.as_deref(), &cfg.overrides())
        }
        Command::DemoData { output, seed, labeled, unlabeled, validation, frames, size } => {
            let spec = DeskSpec { labeled, unlabeled, validation, frames, size, seed };
            commands::cmd_demo_data(&spec, &output).map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
