use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use bta_cli::commands::{cmd_run, cmd_simulate, cmd_summarize, cmd_validate, RunArgs};
use bta_cli::spec_file::RunDefaults;

/// Latent theory-index inference over multi-outcome panels.
#[derive(Parser)]
#[command(name = "bta", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the sampler on a panel and export summaries.
    Run {
        /// Panel CSV.
        #[arg(long)]
        data: PathBuf,
        /// Model spec JSON.
        #[arg(long)]
        spec: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        burn: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rebuild summaries from stored chain files.
    Summarize {
        /// Directory holding chain_*.jsonl files.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic panel from a ground-truth file.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Output panel path; the realized truth lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a panel/spec pair and report shape and missingness.
    Validate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        spec: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap renders help/version on stdout with success; everything
            // else is a usage error on stderr
            if err.use_stderr() {
                eprint!("{err}");
                return ExitCode::from(1);
            }
            print!("{err}");
            return ExitCode::SUCCESS;
        }
    };
    let result = match &cli.command {
        Command::Run {
            data,
            spec,
            out,
            iters,
            burn,
            thin,
            chains,
            seed,
        } => cmd_run(&RunArgs {
            data,
            spec,
            out,
            overrides: RunDefaults {
                iterations: *iters,
                burn_in: *burn,
                thin: *thin,
                chains: *chains,
                seed: *seed,
            },
        }),
        Command::Summarize { samples, out } => cmd_summarize(samples, out),
        Command::Simulate {
            spec,
            truth,
            n,
            seed,
            out,
        } => cmd_simulate(spec, truth, *n, *seed, out),
        Command::Validate { data, spec } => cmd_validate(data, spec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code())
        }
    }
}
