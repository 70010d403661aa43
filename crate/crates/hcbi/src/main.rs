use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hcbi::{load_config, output_dir, run_experiment, ExperimentKind, EXIT_REPORT_FAILED};

#[derive(Parser)]
#[command(
    name = "hcbi",
    version,
    about = "Run Hawkes / CBI / CMJ scaling-limit experiments"
)]
#[command(after_help = concat!(
    "Monte Carlo runs use all cores; set HCBI_THREADS to limit the thread count.\n",
    "Exit codes: 0 pass, 1 a report check failed, 2 configuration error, 3 runtime error."
))]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Output directory (default: the config's output.dir, else results/<name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the Monte Carlo path count.
        #[arg(long)]
        paths: Option<usize>,
        /// Print only the final verdict.
        #[arg(long)]
        quiet: bool,
    },
    /// Check a configuration file and print it with defaults filled in.
    Validate { config: PathBuf },
    /// List the experiment kinds.
    ListExperiments,
}

fn code(c: i32) -> ExitCode {
    ExitCode::from(c as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExperiments => {
            for k in ExperimentKind::ALL {
                println!("{:<16} {}", k.name(), k.describe());
            }
            ExitCode::SUCCESS
        }
        Command::Validate { config } => match load_config(&config) {
            Ok(cfg) => {
                println!("{}", cfg.echo());
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}: {e}", config.display());
                code(e.exit_code())
            }
        },
        Command::Run {
            config,
            out,
            seed,
            paths,
            quiet,
        } => {
            let cfg = match load_config(&config).and_then(|c| Ok(c.with_overrides(seed, paths)?)) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("{}: {e}", config.display());
                    return code(e.exit_code());
                }
            };
            let dir = output_dir(&cfg, out.as_deref());
            match run_experiment(&cfg, &dir) {
                Ok(report) => {
                    if quiet {
                        println!(
                            "{}: {}",
                            cfg.display_name(),
                            if report.pass() { "PASS" } else { "FAIL" }
                        );
                    } else {
                        print!("{}", report.summary(&cfg));
                        println!("artifacts written to {}", dir.display());
                    }
                    if report.pass() {
                        ExitCode::SUCCESS
                    } else {
                        code(EXIT_REPORT_FAILED)
                    }
                }
                Err(e) => {
                    eprintln!("{}: {e}", cfg.display_name());
                    code(e.exit_code())
                }
            }
        }
    }
}
