//! `specmc` — spectrum estimation experiments from the command line.
//!
//! Subcommands mirror the experiment ids in the config file; the binary
//! verifies they agree, applies flag overrides, runs the experiment, and
//! reports the artifact paths. Exit status 0 means every artifact was written;
//! any failure prints a machine-readable error record to stderr and exits
//! nonzero.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use specmc::config::{parse_config_file, ExperimentKind};
use specmc::runner;

#[derive(Parser)]
#[command(name = "specmc", version, about = "MCMC estimation of kernel operator spectra")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Path to the TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the config's master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker pool size for replicate parallelism (output bytes do not depend
    /// on it).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Override the config's output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Spectral convergence curves (delta2 to the reference spectrum).
    Lln,
    /// Exceedance tail decay for bounded positive Mercer kernels.
    Tail,
    /// The diverging diagonal-kernel configuration.
    Counterexample,
    /// One-shot empirical spectrum of a single simulated path.
    Spectrum,
    /// U-statistic checkpoints along one path.
    Ustat,
    /// Drift-condition tau bound calculator.
    Tau,
}

impl Command {
    fn experiment(self) -> ExperimentKind {
        match self {
            Command::Lln => ExperimentKind::Lln,
            Command::Tail => ExperimentKind::Tail,
            Command::Counterexample => ExperimentKind::Counterexample,
            Command::Spectrum => ExperimentKind::Spectrum,
            Command::Ustat => ExperimentKind::Ustat,
            Command::Tau => ExperimentKind::Tau,
        }
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    let record = serde_json::json!({ "error": { "kind": kind, "message": message } });
    eprintln!("{record}");
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(config_path) = cli.config else {
        return fail("usage", "--config <path> is required".to_string());
    };
    let mut config = match parse_config_file(&config_path) {
        Ok(c) => c,
        Err(e) => return fail("config", e.to_string()),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }
    if let Some(out) = cli.out {
        config.output_dir = out.display().to_string();
    }
    let sub = cli.command.experiment();
    if config.experiment != sub {
        return fail(
            "config",
            format!("subcommand `{sub}` does not match config experiment `{}`", config.experiment),
        );
    }
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return fail("usage", "--jobs must be at least 1".to_string());
        }
        // harmless if a pool already exists (e.g. in-process reuse)
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let base_dir = config_path.parent().unwrap_or(std::path::Path::new(".")).to_path_buf();
    match runner::run(&config, &base_dir) {
        Ok(artifacts) => {
            for line in &artifacts.summary_lines {
                println!("{line}");
            }
            println!("run directory: {}", artifacts.run_dir.display());
            for f in &artifacts.files {
                println!("  wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail("run", e.to_string()),
    }
}
