use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sparsesrc_cli::{describe_examples, run_batch, run_file, Method, Overrides, RunError};

/// Sparse source reconstruction experiments.
#[derive(Parser)]
#[command(name = "sparsesrc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: OverrideArgs,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Run { config: PathBuf },
    /// Run every *.toml config in a directory in parallel.
    Batch { dir: PathBuf },
    /// List the builtin examples.
    ShowExamples,
}

#[derive(Args)]
struct OverrideArgs {
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    method: Option<Method>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    noise: Option<f64>,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Self {
            output_dir: a.output_dir,
            seed: a.seed,
            method: a.method,
            alpha: a.alpha,
            noise: a.noise,
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides::from(cli.overrides);
    match cli.command {
        Command::ShowExamples => {
            print!("{}", describe_examples());
            ExitCode::SUCCESS
        }
        Command::Run { config } => match run_file(&config, &overrides, None) {
            Ok((dir, _)) => {
                println!("{}: ok, results in {}", config.display(), dir.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code())
            }
        },
        Command::Batch { dir } => {
            let results = match run_batch(&dir, &overrides) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(e.exit_code());
                }
            };
            if results.is_empty() {
                eprintln!("error: no *.toml configs in {}", dir.display());
                return ExitCode::from(2);
            }
            let mut code = 0;
            for (file, r) in results {
                match r {
                    Ok((out, _)) => println!("{}: ok, results in {}", file.display(), out.display()),
                    Err(e) => {
                        match e {
                            RunError::Config { .. } | RunError::Read { .. } => eprintln!("error: {e}"),
                            _ => eprintln!("{}: error: {e}", file.display()),
                        }
                        code = code.max(e.exit_code());
                    }
                }
            }
            ExitCode::from(code)
        }
    }
}
