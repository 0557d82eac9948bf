use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use spectro::harness::config::KEYS;
use spectro::harness::{run, Experiment, ExperimentConfig, RunOptions};

#[derive(Parser)]
#[command(name = "spectro", version, about = "Noise spectrum reconstruction experiments", after_long_help = keys_help())]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the BOD design table.
    Design(RunArgs),
    /// Fidelity and MSE versus the center of a single Gaussian.
    Scan(RunArgs),
    /// Reconstruct a two-Gaussian spectrum per protocol and method.
    Reconstruct(RunArgs),
    /// Mean fidelity over repeated Monte Carlo trials.
    Table(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Use exact overlaps instead of Monte Carlo sampling.
    #[arg(long)]
    exact_chi: bool,
    /// Also write a matplotlib script for the outputs.
    #[arg(long)]
    plot_script: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

fn keys_help() -> String {
    let mut s = String::from("Config keys:\n");
    for (k, d) in KEYS {
        s.push_str(&format!("  {k:<20} {d}\n"));
    }
    s.push_str("\nExit codes: 0 success, 1 config error, 2 numerical failure.");
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, args) = match cli.command {
        Command::Design(a) => (Experiment::Design, a),
        Command::Scan(a) => (Experiment::Scan, a),
        Command::Reconstruct(a) => (Experiment::Reconstruct, a),
        Command::Table(a) => (Experiment::Table, a),
    };
    if let Some(jobs) = args.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = ExperimentConfig::from_file(experiment, &args.config).and_then(|cfg| {
        let opts = RunOptions {
            out_dir: args.out.clone(),
            seed: args.seed,
            exact_chi: args.exact_chi,
            plot_script: args.plot_script,
        };
        run(cfg, &opts)
    });
    match result {
        Ok(report) => {
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            if report.failures > 0 {
                eprintln!("warning: {} cell evaluations failed; see report.json", report.failures);
            }
            eprintln!("wrote {} to {}", report.outputs.join(", "), args.out.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 1 } else { 2 })
        }
    }
}
