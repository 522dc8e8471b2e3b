use std::path::PathBuf;
use std::process::ExitCode;

use bectomo_cli::{CliError, Overrides, Source};
use clap::{Parser, Subcommand};

/// Simulate atom-counting measurements and reconstruct the state.
#[derive(Debug, Parser)]
#[command(name = "bectomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Configuration file (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Bundled scenario: fig1, fig2, fig3 or fig4.
    #[arg(long, global = true, value_name = "NAME")]
    scenario: Option<String>,

    /// Use exact probabilities instead of simulated counts.
    #[arg(long, global = true)]
    exact: bool,

    /// Master seed.
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true, value_name = "INT")]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the full pipeline and write a run directory.
    Run,
    /// Check a configuration without computing.
    Validate,
    /// Summarize a finished run directory.
    Report {
        /// Run directory (defaults to --out).
        dir: Option<PathBuf>,
    },
    /// Condition numbers of the displaced-number design matrices.
    DesignReport,
    /// Standard errors of the estimate as a function of |beta|.
    BetaTradeoff,
}

fn execute(cli: Cli) -> Result<String, CliError> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(vec![format!("--threads {n}: {e}")]))?;
    }
    let source = Source { config: cli.config, scenario: cli.scenario };
    let overrides = Overrides { exact: cli.exact, seed: cli.seed, out: cli.out.clone() };
    match cli.command {
        Command::Run => {
            let cfg = source.load(&overrides)?;
            let report = bectomo_cli::run(&cfg)?;
            Ok(format!("{}\nrun directory {}\n", bectomo_cli::report::render(&report), cfg.output_dir().display()))
        }
        Command::Validate => bectomo_cli::validate(&source.load(&overrides)?),
        Command::Report { dir } => {
            let dir = dir.or(cli.out).ok_or_else(|| CliError::Config(vec!["report needs a run directory".into()]))?;
            bectomo_cli::report(&dir)
        }
        Command::DesignReport => bectomo_cli::design_report(&source.load(&overrides)?),
        Command::BetaTradeoff => bectomo_cli::beta_tradeoff(&source.load(&overrides)?),
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
