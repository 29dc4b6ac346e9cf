use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use decomp_lab::error::{CliError, EXIT_OK};
use decomp_lab::{check_config, run_config, EXAMPLES};

#[derive(Parser)]
#[command(name = "decomp-lab", version, about = "Decompose a mean difference between two populations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a config and write its reports.
    Run {
        config: PathBuf,
        /// Write reports here instead of the config's output_dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a config without running it.
    Check { config: PathBuf },
    /// List the bundled example configs.
    Examples {
        /// Copy the bundled configs into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<(), CliError> = match cli.command {
        Command::Run { config, out } => run_config(&config, out.as_deref()).map(|(report, written)| {
            let imp = &report.importance;
            println!("total {:.12}  telescoping residual {:.3e}", imp.total, imp.telescoping_residual);
            for p in written {
                println!("wrote {}", p.display());
            }
        }),
        Command::Check { config } => check_config(&config).map(|p| {
            println!(
                "ok: {} covariates, {} grid points, backend {}",
                p.k.dims(),
                p.k.grid().len(),
                p.backend
            );
        }),
        Command::Examples { export } => {
            let mut result = Ok(());
            for ex in EXAMPLES {
                println!("{:<18} {}", ex.file_name, ex.summary);
                if let Some(dir) = &export {
                    let path = dir.join(ex.file_name);
                    if let Err(source) = std::fs::create_dir_all(dir).and_then(|_| std::fs::write(&path, ex.contents)) {
                        result = Err(CliError::Io { path, source });
                        break;
                    }
                }
            }
            result
        }
    };
    match outcome {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
