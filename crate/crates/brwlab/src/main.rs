use std::path::PathBuf;
use std::process::ExitCode;

use brwlab::{plotdata_file, run_file, CliError, RunOptions};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brwlab", version, about = "Branching random walk experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment file and write CSV and JSON results.
    Run {
        spec: PathBuf,
        /// Worker threads (default: BRWLAB_WORKERS, then all cores).
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Also write per-replica NDJSON traces.
        #[arg(long)]
        trace: bool,
    },
    /// Turn a result CSV into long-format plot data.
    Plotdata {
        result: PathBuf,
        /// Destination (default: `<result>.plot.csv` beside the input).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.record());
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { spec, workers, out, trace } => {
            match run_file(&spec, &RunOptions { workers, out: Some(out), trace }) {
                Ok(w) => {
                    println!("{}", w.csv.display());
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Plotdata { result, out } => match plotdata_file(&result, out.as_deref()) {
            Ok(p) => {
                println!("{}", p.display());
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
