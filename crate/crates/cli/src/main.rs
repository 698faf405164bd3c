use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use phgcalc::heisenberg::HeisenbergModel;
use phgcalc_cli::config::RunConfig;
use phgcalc_cli::model_checks::ModelCheck;
use phgcalc_cli::{accept, commands, model_checks, CliError, Outcome, Result};

#[derive(Debug, Parser)]
#[command(name = "phgcalc", version, about = "Graded symbol classes, extensions and the model Heisenberg calculus")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for every random sample.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify the declared class of a corpus entry.
    Check {
        #[arg(long)]
        entry: String,
    },
    /// Extract the expansion of an extension.
    Extract {
        #[arg(long)]
        entry: String,
    },
    /// Build the extension of an expansion.
    Extend {
        #[arg(long)]
        entry: String,
    },
    /// Extract and rebuild, or build and extract.
    Roundtrip {
        #[arg(long)]
        entry: String,
    },
    /// Residual checks on a model group.
    Heisenberg {
        #[arg(value_enum)]
        check: ModelCheck,
        /// Model file `{"d": .., "B": [[..]]}`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Run the acceptance suite.
    Accept {
        /// Criterion number or name.
        #[arg(long)]
        criterion: Option<String>,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.out = out.clone();
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("GSL_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("GSL_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<Outcome> {
    configure_threads()?;
    let mut config = load_config(&cli)?;
    match cli.command {
        Command::Check { entry } => commands::check(&config, &entry),
        Command::Extract { entry } => commands::extract(&config, &entry),
        Command::Extend { entry } => commands::extend(&config, &entry),
        Command::Roundtrip { entry } => commands::roundtrip(&config, &entry),
        Command::Heisenberg { check, model } => {
            if let Some(path) = model {
                let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io { path: path.clone(), source })?;
                let m = HeisenbergModel::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                config.heisenberg.model = Some(m);
            }
            model_checks::heisenberg(&config, check)
        }
        Command::Accept { criterion } => accept::accept(&config, criterion.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            println!("{}", if outcome.pass { "pass" } else { "fail" });
            ExitCode::from(outcome.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
