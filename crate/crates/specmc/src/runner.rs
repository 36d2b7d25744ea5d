//! Run orchestration: a validated [`RunConfig`] in, artifacts on disk out.
//!
//! Every run gets a fresh directory `<output_dir>/<experiment>-seed<seed>`
//! (suffixed `-2`, `-3`, ... when taken) holding `config.snapshot` plus the
//! experiment's CSV files. Files are staged as `.partial` and renamed on
//! success, so an interrupted run is visibly incomplete. All numeric output is
//! a pure function of the config (including the master seed); the worker pool
//! size never changes bytes.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::chain::{simulate_marginal, ChainError};
use crate::config::{ConfigError, ExperimentKind, RunConfig};
use crate::experiments::{self, ExperimentError};
use crate::kernel::KernelError;
use crate::quad;
use crate::report::{fmt_f64, write_staged, CsvTable, ReportError};
use crate::rng::replicate_seed;
use crate::spectral::{self, GramVariant, SpectralError};
use crate::ustat::{self, UStatError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    UStat(#[from] UStatError),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot create run directory {path}: {source}")]
    CreateDir {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// What a run left on disk, plus printable summary lines.
#[derive(Debug)]
pub struct RunArtifacts {
    pub run_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary_lines: Vec<String>,
}

fn fresh_run_dir(config: &RunConfig) -> Result<PathBuf, RunError> {
    let base = Path::new(&config.output_dir);
    std::fs::create_dir_all(base)
        .map_err(|source| RunError::CreateDir { path: base.to_path_buf(), source })?;
    let stem = format!("{}-seed{}", config.experiment, config.master_seed);
    let mut dir = base.join(&stem);
    let mut k = 1usize;
    while dir.exists() {
        k += 1;
        dir = base.join(format!("{stem}-{k}"));
    }
    std::fs::create_dir(&dir).map_err(|source| RunError::CreateDir { path: dir.clone(), source })?;
    Ok(dir)
}

fn emit(dir: &Path, name: &str, table: &CsvTable, files: &mut Vec<PathBuf>) -> Result<(), RunError> {
    let path = dir.join(name);
    write_staged(&path, &table.to_bytes())?;
    files.push(path);
    Ok(())
}

/// Executes a validated config; `base_dir` anchors relative paths inside it.
pub fn run(config: &RunConfig, base_dir: &Path) -> Result<RunArtifacts, RunError> {
    config.validate(base_dir)?;
    let dir = fresh_run_dir(config)?;
    let mut files = Vec::new();
    let mut lines = Vec::new();
    let snapshot_path = dir.join("config.snapshot");
    write_staged(&snapshot_path, config.snapshot().as_bytes())?;
    files.push(snapshot_path);

    match config.experiment {
        ExperimentKind::Lln => {
            let kernel = config.kernel.as_ref().expect("validated").build(base_dir)?;
            let chain = config.chain.as_ref().expect("validated").build()?;
            let start = config.start.to_start()?;
            let rep = experiments::run_lln(
                &kernel,
                &chain,
                start,
                &config.n_grid,
                config.replicates,
                config.master_seed,
            )?;
            emit(&dir, "replicates.csv", &rep.replicates_csv(), &mut files)?;
            emit(&dir, "summary.csv", &rep.summary_csv(), &mut files)?;
            for s in &rep.summary {
                lines.push(format!(
                    "n={:>6}  median d2={:.5}  q10={:.5}  q90={:.5}",
                    s.n, s.median, s.q10, s.q90
                ));
            }
            lines.push(format!(
                "medians nonincreasing: {}  ({} replicates, {:?})",
                rep.medians_nonincreasing, config.replicates, rep.wall_time
            ));
        }
        ExperimentKind::Tail => {
            let kernel = config.kernel.as_ref().expect("validated").build(base_dir)?;
            let chain = config.chain.as_ref().expect("validated").build()?;
            let start = config.start.to_start()?;
            let rep = experiments::run_tail(
                &kernel,
                &chain,
                start,
                &config.t_grid,
                &config.n_grid,
                config.replicates,
                config.master_seed,
                config.permutations,
            )?;
            emit(&dir, "replicates.csv", &rep.replicates_csv(), &mut files)?;
            emit(&dir, "summary.csv", &rep.summary_csv(), &mut files)?;
            for p in &rep.points {
                lines.push(format!(
                    "n={:>6} t={:.3}  exceed={:.4}  wilson=[{:.4},{:.4}]",
                    p.n, p.t, p.exceed_freq, p.wilson_lo, p.wilson_hi
                ));
            }
            for f in &rep.fits {
                lines.push(format!(
                    "t={:.3}  slope={}  L_hat={}  points={}  perm_p={}",
                    f.t,
                    f.slope.map_or("n/a".into(), |s| format!("{s:.6}")),
                    f.l_hat.map_or("n/a".into(), |l| format!("{l:.4}")),
                    f.points_used,
                    f.perm_p_value.map_or("n/a".into(), |p| format!("{p:.4}")),
                ));
            }
        }
        ExperimentKind::Counterexample => {
            let rep = experiments::run_counterexample(&config.n_grid, config.replicates, config.master_seed)?;
            emit(&dir, "replicates.csv", &rep.replicates_csv(), &mut files)?;
            emit(&dir, "summary.csv", &rep.summary_csv(), &mut files)?;
            for s in &rep.summary {
                lines.push(format!("n={:>8}  median lower bound={:.4e}", s.n, s.median));
            }
            lines.push(format!("medians increasing: {}", rep.medians_increasing));
        }
        ExperimentKind::Spectrum => {
            let kernel = config.kernel.as_ref().expect("validated").build(base_dir)?;
            let chain = config.chain.as_ref().expect("validated").build()?;
            let start = config.start.to_start()?;
            let n = config.n_grid[0];
            let seed = replicate_seed(config.master_seed, 0);
            let states = simulate_marginal(&chain, n, start, seed)?;
            for (name, variant) in
                [("spectrum_tilde.csv", GramVariant::WithDiagonal), ("spectrum_zero.csv", GramVariant::ZeroDiagonal)]
            {
                let gram = spectral::gram_from_states(&states, &kernel, variant)?;
                let est = spectral::spectrum_of_gram(&gram)?;
                if let Some(bound) = est.divergent {
                    lines.push(format!(
                        "{variant}: divergent, |top eigenvalue| >= {}",
                        fmt_f64(bound)
                    ));
                } else if let Ok(truth) = kernel.true_spectrum(&chain.stationary(), config.quadrature_order) {
                    let d = spectral::delta2(&est.eigenvalues, &truth)?;
                    lines.push(format!("{variant}: delta2 to reference spectrum = {d:.6}"));
                }
                emit(&dir, name, &est.to_csv(), &mut files)?;
            }
        }
        ExperimentKind::Ustat => {
            let kernel = config.kernel.as_ref().expect("validated").build(base_dir)?;
            let chain = config.chain.as_ref().expect("validated").build()?;
            let start = config.start.to_start()?;
            let max_n = *config.n_grid.last().expect("validated");
            let seed = replicate_seed(config.master_seed, 0);
            let states = simulate_marginal(&chain, max_n, start, seed)?;
            let target = quad::pi2_integral(|x, y| kernel.eval(x, y), &chain.stationary(), config.quadrature_order);
            let mut table = CsvTable::new("n,u_stat,target,abs_error");
            for &n in &config.n_grid {
                let u = ustat::u_stat_states(&states[..n], &kernel)?;
                table.push_row([
                    n.to_string(),
                    fmt_f64(u.value),
                    fmt_f64(target),
                    fmt_f64((u.value - target).abs()),
                ]);
                lines.push(format!("n={n:>8}  U_n={:.6}  target={target:.6}", u.value));
            }
            emit(&dir, "ustat.csv", &table, &mut files)?;
        }
        ExperimentKind::Tau => {
            let params = config.drift.as_ref().expect("validated").build()?;
            let tb = experiments::tau_bound(&params)?;
            let mut table = CsvTable::new("coin_factor,drift_factor,rate_factor,bound");
            table.push_row([
                fmt_f64(tb.coin_factor),
                fmt_f64(tb.drift_factor),
                fmt_f64(tb.rate_factor),
                fmt_f64(tb.bound),
            ]);
            emit(&dir, "tau.csv", &table, &mut files)?;
            lines.push(format!(
                "factors: coin={} drift={} rate={}  bound={}",
                tb.coin_factor, tb.drift_factor, tb.rate_factor, tb.bound
            ));
            lines.push("note: the printed first factor is identically 0 (degenerate quotient)".to_string());
        }
    }
    Ok(RunArtifacts { run_dir: dir, files, summary_lines: lines })
}
