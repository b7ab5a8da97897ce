mod compare;
mod config;
mod error;
mod experiments;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::Overrides;
use crate::error::CliError;

/// Floquet XXZ circuit experiments.
#[derive(Parser)]
#[command(name = "fxxz", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; defaults to all cores.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Compare a band or dispersion table against a theory dispersion.
    Compare {
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        theory: PathBuf,
        /// Maximum per-momentum deviation in radians.
        #[arg(long)]
        tolerance: Option<f64>,
    },
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
) -> Result<(), CliError> {
    let src = std::fs::read_to_string(&config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", config.display())))?;
    let cfg = config::parse(
        &config.display().to_string(),
        &src,
        &Overrides { seed, output: out },
    )?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let start = Instant::now();
    let result = pool.install(|| experiments::run(&cfg))?;
    let manifest = output::write_run(
        &cfg.output,
        &cfg,
        &result.tables,
        &result.notes,
        start.elapsed().as_secs_f64(),
    )?;
    for n in &result.notes {
        eprintln!("note: {n}");
    }
    println!(
        "wrote {} tables; manifest {}",
        result.tables.len(),
        manifest.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run {
            config,
            seed,
            out,
            jobs,
        } => run(config, seed, out, jobs).map(|_| true),
        Command::Compare {
            run,
            theory,
            tolerance,
        } => compare::compare(&run, &theory, tolerance).map(|r| {
            print!("{}", r.table.text);
            println!(
                "{}: {} pass, {} fail, {} skipped (tolerance {})",
                if r.ok() { "PASS" } else { "FAIL" },
                r.passed,
                r.failed,
                r.skipped,
                r.tolerance
            );
            r.ok()
        }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
