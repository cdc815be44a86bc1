use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use etlab_cli::{exit, run_with, CliError, JobConfig, RunOptions};
use etlab_core::{sieve_table, write_table, ArithFnId};

#[derive(Parser)]
#[command(name = "etlab", version, about = "Error terms of arithmetic summatory functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every job of a config.
    Run {
        config: PathBuf,
        /// Cap on worker threads.
        #[arg(long)]
        threads: Option<usize>,
        /// Override the config's cache directory.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Override the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run only the certificate jobs (perron, residue-check) of a config.
    Verify {
        config: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Sieve one table and write it in the cache format.
    Sieve {
        #[arg(long = "fn")]
        function: String,
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long)]
        nmax: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn set_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Run { config, threads, cache, out } => {
            set_threads(threads)?;
            let mut cfg = JobConfig::load(&config)?;
            if let Some(c) = cache {
                cfg.cache_dir = c;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let m = run_with(&cfg, RunOptions::default())?;
            report(&m);
            Ok(m.exit_code)
        }
        Command::Verify { config, threads } => {
            set_threads(threads)?;
            let cfg = JobConfig::load(&config)?;
            let m = run_with(&cfg, RunOptions { certificates_only: true })?;
            report(&m);
            Ok(m.exit_code)
        }
        Command::Sieve { function, theta, nmax, out } => {
            let id = ArithFnId::parse(&function, theta).map_err(|e| CliError::Config(e.to_string()))?;
            let table = sieve_table(id, nmax)?;
            write_table(&table, &out)?;
            Ok(exit::OK)
        }
    }
}

fn report(m: &etlab_cli::RunManifest) {
    for j in &m.jobs {
        match &j.error {
            Some(e) => eprintln!("job {} ({}): {:?}: {e}", j.index, j.kind, j.status),
            None => eprintln!("job {} ({}): {:?} in {:.2}s", j.index, j.kind, j.status, j.wall_seconds),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG as u8 } else { 0 });
        }
    };
    let code = match execute(cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("etlab: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
