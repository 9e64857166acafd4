use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lindyn_cli::{run_config, run_suite, write_report, Report, EXAMPLES};

#[derive(Parser)]
#[command(name = "lindyn", version, about = "Diagnostics for linear dynamics: hyperbolicity, shadowing, stability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario config (a path, or `example:<name>` for a bundled one).
    Run {
        config: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the randomized equivalence suites.
    Suite {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled example scenarios.
    ListExamples {
        /// Print the JSON of this example.
        #[arg(long)]
        show: Option<String>,
    },
}

fn emit(report: &Report, out: Option<PathBuf>) -> ExitCode {
    match out {
        Some(path) => {
            if let Err(e) = write_report(report, &path) {
                eprintln!("{}: {e}", e.code());
                return ExitCode::from(e.exit_code() as u8);
            }
        }
        None => println!("{}", report.to_json_pretty()),
    }
    for t in report.tasks.iter().filter(|t| t.error.is_some()) {
        let e = t.error.as_ref().unwrap();
        eprintln!("task {}: {} {}", t.task.name(), e.code, e.message);
    }
    if report.has_errors() {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run { config, out } => match run_config(&config, out.as_deref()) {
            Ok(report) => emit(&report, out),
            Err(e) => {
                eprintln!("{}: {e}", e.code());
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Suite { seed, size, out } => emit(&run_suite(seed, size), out),
        Command::ListExamples { show: Some(name) } => match lindyn_cli::example(&name) {
            Some(ex) => {
                print!("{}", ex.json);
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("CONFIG_INVALID: no bundled example named {name:?}");
                ExitCode::from(2)
            }
        },
        Command::ListExamples { show: None } => {
            for ex in EXAMPLES {
                println!("{:<10} {}", ex.name, ex.description);
            }
            ExitCode::SUCCESS
        }
    }
}
