use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::Ctx;

#[derive(Parser, Debug)]
#[command(name = "onlineid", version, about = "Online identification of a reaction coefficient from partial observations")]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`, default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Noise seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overwrite existing output files.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground truth snapshots, optionally with a time-step refinement table.
    Forward {
        #[arg(long)]
        refine: bool,
        /// Number of halvings of `h_t` in the refinement table.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Runs the estimator and audits the result.
    Run,
    /// Exhaustive grid search of `c1` or `(mu_bar, nu_bar)`.
    Tune {
        /// Points scored in parallel between flushes of `scores.csv`.
        #[arg(long, default_value_t = 8)]
        chunk: usize,
        /// Stop after this many points, leaving the search incomplete.
        #[arg(long, hide = true)]
        max_points: Option<usize>,
    },
    /// Persistence-of-excitation probe over a run.
    ProbePe {
        /// `states.csv` of an earlier run; the run is repeated when omitted.
        #[arg(long)]
        states: Option<PathBuf>,
    },
    /// Audits a stored `trace.csv`.
    Audit {
        /// Defaults to `trace.csv` in the output directory.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Ctx::new(cli.config.as_deref(), cli.out, cli.seed, cli.force).and_then(|ctx| match cli.command {
        Command::Forward { refine, levels } => commands::forward(&ctx, refine, levels),
        Command::Run => commands::run(&ctx),
        Command::Tune { chunk, max_points } => commands::tune(&ctx, chunk, max_points),
        Command::ProbePe { states } => commands::probe_pe(&ctx, states),
        Command::Audit { trace } => commands::audit(&ctx, trace),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
