//! Seeded, replicated experiment drivers.
//!
//! Three stories:
//!
//! * [`run_lln`] — spectral convergence: for a kernel with a known reference
//!   spectrum, the δ₂ distance between the empirical spectra (both matrix
//!   variants) and the reference, across a grid of sample sizes.
//! * [`run_tail`] — exceedance decay: for bounded positive Mercer kernels on
//!   geometrically ergodic chains, the empirical frequency of
//!   `δ₂ >= t` as `n` grows, with slope fits of `-log p̂` versus `n` and a
//!   replicate-level permutation test for a positive slope.
//! * [`run_counterexample`] — the diverging configuration: the diagonal power
//!   kernel on the refresh chain, where exact state repeats plant entries
//!   `h(X_i, X_{i+1}) = X_i^{-3}` whose running maximum over `n` dwarfs the
//!   `1/n` normalization. The reported statistic is the max-|entry| lower
//!   bound on the top eigenvalue of either matrix variant; no eigensolve is
//!   needed.
//!
//! Replicates are embarrassingly parallel (one derived seed per replicate) and
//! merged in replicate order, so reports are byte-identical across reruns and
//! thread counts. The finite-rank reduction `λ(H̃_n) = λ(K AᵀA) ∪ {0}` is used
//! whenever the kernel carries an exact finite Mercer expansion, which keeps
//! the with-diagonal statistic at rank cost; the zero-diagonal variant always
//! pays the dense eigensolve.
//!
//! [`tau_bound`] evaluates the drift-condition bound on the regeneration-time
//! ψ₁ parameter, exactly as printed in its source — see the function docs for
//! the degenerate first factor.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use thiserror::Error;

use crate::chain::{simulate_marginal, ChainError, ChainSpec, ErgodicityClass, Start};
use crate::kernel::{Kernel, KernelError};
use crate::report::{fmt_f64, median, quantile, wilson_interval, CsvTable};
use crate::rng::{replicate_seed, RngStream, PERMUTATION_STREAM};
use crate::spectral::{self, GramVariant, SpectralError};

/// Quadrature order used when a reference spectrum has to go through the
/// Nyström oracle.
pub const DEFAULT_QUAD_ORDER: usize = 64;

/// Largest Mercer rank routed through the finite-rank reduction; beyond this
/// the dense path is cheaper to reason about.
const MAX_FAST_RANK: usize = 64;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("n_grid must be nonempty and strictly increasing")]
    BadGrid,
    #[error("t_grid must be nonempty with nonnegative thresholds")]
    BadThresholds,
    #[error("replicates must be at least 1")]
    NoReplicates,
    #[error("tail experiment needs a positive Mercer kernel, `{0}` is not")]
    NotPositiveMercer(String),
    #[error("tail experiment needs a bounded kernel diagonal, `{0}` is unbounded")]
    UnboundedKernel(String),
    #[error("tail experiment needs a geometrically ergodic chain, `{0}` is not certified")]
    NotGeometric(String),
    #[error("drift parameter out of range: {0}")]
    BadDriftParameter(String),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn check_grid(n_grid: &[usize]) -> Result<(), ExperimentError> {
    if n_grid.is_empty() || n_grid.windows(2).any(|w| w[1] <= w[0]) || n_grid[0] == 0 {
        return Err(ExperimentError::BadGrid);
    }
    Ok(())
}

/// δ₂ between the with-diagonal empirical spectrum on `states` and `truth`,
/// via the rank-space reduction when available. Divergent matrices report
/// +inf.
fn d2_tilde(
    states: &[f64],
    kernel: &Kernel,
    truth: &[f64],
    fast: bool,
) -> Result<f64, ExperimentError> {
    if fast {
        let mercer = kernel.mercer().expect("fast path requires mercer data");
        let vals = spectral::finite_rank_tilde_spectrum(states, &mercer)?;
        return Ok(spectral::delta2(&vals, truth)?);
    }
    let gram = spectral::gram_from_states(states, kernel, GramVariant::WithDiagonal)?;
    let est = spectral::spectrum_of_gram(&gram)?;
    if est.is_divergent() {
        return Ok(f64::INFINITY);
    }
    Ok(spectral::delta2(&est.eigenvalues, truth)?)
}

fn d2_zero(states: &[f64], kernel: &Kernel, truth: &[f64]) -> Result<f64, ExperimentError> {
    let gram = spectral::gram_from_states(states, kernel, GramVariant::ZeroDiagonal)?;
    let est = spectral::spectrum_of_gram(&gram)?;
    if est.is_divergent() {
        return Ok(f64::INFINITY);
    }
    Ok(spectral::delta2(&est.eigenvalues, truth)?)
}

// ---------------------------------------------------------------------------
// Convergence experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlnRow {
    pub seed: u64,
    pub n: usize,
    pub d2_tilde: f64,
    pub d2_zero: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryRow {
    pub n: usize,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
}

#[derive(Debug, Clone)]
pub struct LlnReport {
    pub true_spectrum: Vec<f64>,
    pub rows: Vec<LlnRow>,
    /// Per grid size, over the with-diagonal statistic.
    pub summary: Vec<SummaryRow>,
    /// Medians nonincreasing along the grid — the passing-run signature.
    pub medians_nonincreasing: bool,
    pub wall_time: Duration,
}

impl LlnReport {
    pub fn replicates_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("seed,n,delta2_tilde,delta2_zero");
        for r in &self.rows {
            t.push_row([
                r.seed.to_string(),
                r.n.to_string(),
                fmt_f64(r.d2_tilde),
                fmt_f64(r.d2_zero),
            ]);
        }
        t
    }

    pub fn summary_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("n,median,q10,q90");
        for s in &self.summary {
            t.push_row([s.n.to_string(), fmt_f64(s.median), fmt_f64(s.q10), fmt_f64(s.q90)]);
        }
        t
    }
}

/// Convergence of `δ₂(λ(H̃_n), λ(H))` and `δ₂(λ(H_n), λ(H))` along `n_grid`.
///
/// Each replicate simulates one path of length `max(n_grid)` and evaluates the
/// statistics on its prefixes.
pub fn run_lln(
    kernel: &Kernel,
    chain: &ChainSpec,
    start: Start,
    n_grid: &[usize],
    replicates: usize,
    master_seed: u64,
) -> Result<LlnReport, ExperimentError> {
    let t0 = Instant::now();
    check_grid(n_grid)?;
    if replicates == 0 {
        return Err(ExperimentError::NoReplicates);
    }
    kernel.validate()?;
    let truth = kernel.true_spectrum(&chain.stationary(), DEFAULT_QUAD_ORDER)?;
    let fast = kernel.mercer().is_some_and(|m| m.rank() <= MAX_FAST_RANK);
    let max_n = *n_grid.last().expect("nonempty grid");
    let rows: Vec<Vec<LlnRow>> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<LlnRow>, ExperimentError> {
            let seed = replicate_seed(master_seed, r as u64);
            let states = simulate_marginal(chain, max_n, start, seed)?;
            let mut out = Vec::with_capacity(n_grid.len());
            for &n in n_grid {
                let prefix = &states[..n];
                out.push(LlnRow {
                    seed,
                    n,
                    d2_tilde: d2_tilde(prefix, kernel, &truth, fast)?,
                    d2_zero: d2_zero(prefix, kernel, &truth)?,
                });
            }
            Ok(out)
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<LlnRow> = rows.into_iter().flatten().collect();
    let summary: Vec<SummaryRow> = n_grid
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.d2_tilde).collect();
            SummaryRow {
                n,
                median: median(&vals),
                q10: quantile(&vals, 0.1),
                q90: quantile(&vals, 0.9),
            }
        })
        .collect();
    let medians_nonincreasing = summary.windows(2).all(|w| w[1].median <= w[0].median);
    Ok(LlnReport { true_spectrum: truth, rows, summary, medians_nonincreasing, wall_time: t0.elapsed() })
}

// ---------------------------------------------------------------------------
// Tail experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailRow {
    pub seed: u64,
    pub n: usize,
    pub d2: f64,
}

/// One `(n, t)` cell of the tail summary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailPoint {
    pub n: usize,
    pub t: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub exceed_freq: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

/// Decay-shape fit at a fixed threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailFit {
    pub t: f64,
    /// Least-squares slope of `-log p̂` against `n` over grid points with
    /// `p̂ ∈ (0,1)`; `None` with fewer than two usable points.
    pub slope: Option<f64>,
    /// Implied constant `L̂ = min(t²/D², t/D) / slope` with `D = sup h(x,x)`.
    pub l_hat: Option<f64>,
    pub points_used: usize,
    /// Permutation p-value for a positive slope (replicate-level label
    /// shuffle); `None` when no permutations were requested or the observed
    /// slope is undefined.
    pub perm_p_value: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TailReport {
    pub true_spectrum: Vec<f64>,
    pub sup_diag: f64,
    pub rows: Vec<TailRow>,
    pub points: Vec<TailPoint>,
    pub fits: Vec<TailFit>,
    pub wall_time: Duration,
}

impl TailReport {
    pub fn replicates_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("seed,n,delta2");
        for r in &self.rows {
            t.push_row([r.seed.to_string(), r.n.to_string(), fmt_f64(r.d2)]);
        }
        t
    }

    pub fn summary_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("n,t,median,q10,q90,exceed_freq");
        for p in &self.points {
            t.push_row([
                p.n.to_string(),
                fmt_f64(p.t),
                fmt_f64(p.median),
                fmt_f64(p.q10),
                fmt_f64(p.q90),
                fmt_f64(p.exceed_freq),
            ]);
        }
        t
    }
}

/// Least-squares slope of `-log p̂` versus `n` over cells with `p̂ ∈ (0,1)`;
/// cells at 0 or 1 are excluded (no log of zero).
fn exceedance_slope(counts: &[(usize, usize)], reps: usize) -> (Option<f64>, usize) {
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .filter(|&&(_, c)| c > 0 && c < reps)
        .map(|&(n, c)| (n as f64, -((c as f64 / reps as f64).ln())))
        .collect();
    if pts.len() < 2 {
        return (None, pts.len());
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    (Some(sxy / sxx), pts.len())
}

/// Exceedance tail study for `δ₂(λ(H̃_n), λ(H))`.
#[allow(clippy::too_many_arguments)]
pub fn run_tail(
    kernel: &Kernel,
    chain: &ChainSpec,
    start: Start,
    t_grid: &[f64],
    n_grid: &[usize],
    replicates: usize,
    master_seed: u64,
    permutations: usize,
) -> Result<TailReport, ExperimentError> {
    let t0 = Instant::now();
    check_grid(n_grid)?;
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t >= 0.0)) {
        return Err(ExperimentError::BadThresholds);
    }
    if replicates == 0 {
        return Err(ExperimentError::NoReplicates);
    }
    kernel.validate()?;
    let mercer = kernel.mercer().ok_or_else(|| ExperimentError::NotPositiveMercer(kernel.to_string()))?;
    if !mercer.all_nonnegative() {
        return Err(ExperimentError::NotPositiveMercer(kernel.to_string()));
    }
    let sup_diag = kernel.sup_diag().ok_or_else(|| ExperimentError::UnboundedKernel(kernel.to_string()))?;
    if !matches!(chain.ergodicity_class(), ErgodicityClass::Uniform | ErgodicityClass::Geometric) {
        return Err(ExperimentError::NotGeometric(chain.name().into()));
    }
    let truth = kernel.true_spectrum(&chain.stationary(), DEFAULT_QUAD_ORDER)?;
    let fast = mercer.rank() <= MAX_FAST_RANK;
    let max_n = *n_grid.last().expect("nonempty grid");
    let rows: Vec<Vec<TailRow>> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<TailRow>, ExperimentError> {
            let seed = replicate_seed(master_seed, r as u64);
            let states = simulate_marginal(chain, max_n, start, seed)?;
            n_grid
                .iter()
                .map(|&n| {
                    Ok(TailRow { seed, n, d2: d2_tilde(&states[..n], kernel, &truth, fast)? })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<TailRow> = rows.into_iter().flatten().collect();

    let mut points = Vec::new();
    let mut fits = Vec::new();
    for &t in t_grid {
        let mut counts = Vec::new();
        for &n in n_grid {
            let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.d2).collect();
            let c = vals.iter().filter(|&&d| d >= t).count();
            let (lo, hi) = wilson_interval(c, replicates);
            points.push(TailPoint {
                n,
                t,
                median: median(&vals),
                q10: quantile(&vals, 0.1),
                q90: quantile(&vals, 0.9),
                exceed_freq: c as f64 / replicates as f64,
                wilson_lo: lo,
                wilson_hi: hi,
            });
            counts.push((n, c));
        }
        let (slope, points_used) = exceedance_slope(&counts, replicates);
        let l_hat = slope.and_then(|s| {
            if s > 0.0 {
                Some((t * t / (sup_diag * sup_diag)).min(t / sup_diag) / s)
            } else {
                None
            }
        });
        let perm_p_value = if permutations > 0 && slope.is_some() {
            Some(permutation_slope_p_value(&rows, n_grid, t, replicates, permutations, master_seed))
        } else {
            None
        };
        fits.push(TailFit { t, slope, l_hat, points_used, perm_p_value });
    }
    Ok(TailReport { true_spectrum: truth, sup_diag, rows, points, fits, wall_time: t0.elapsed() })
}

/// Permutation test for a positive `-log p̂` vs `n` slope at threshold `t`.
///
/// Under the null that exceedance does not depend on `n`, the replicate-level
/// indicators are exchangeable across grid cells; the n-labels are reshuffled
/// and the slope statistic recomputed (permutations with fewer than two usable
/// grid cells score -inf). Reported as `(1 + #{slope* >= slope}) / (M + 1)`.
fn permutation_slope_p_value(
    rows: &[TailRow],
    n_grid: &[usize],
    t: f64,
    replicates: usize,
    permutations: usize,
    master_seed: u64,
) -> f64 {
    let labels: Vec<usize> = rows.iter().map(|r| r.n).collect();
    let mut indicators: Vec<bool> = rows.iter().map(|r| r.d2 >= t).collect();
    let count_for = |ind: &[bool]| -> Vec<(usize, usize)> {
        n_grid
            .iter()
            .map(|&n| {
                let c = ind
                    .iter()
                    .zip(&labels)
                    .filter(|&(&b, &lab)| b && lab == n)
                    .count();
                (n, c)
            })
            .collect()
    };
    let (obs_slope, _) = exceedance_slope(&count_for(&indicators), replicates);
    let obs = obs_slope.unwrap_or(f64::NEG_INFINITY);
    let mut rng = RngStream::new(master_seed, PERMUTATION_STREAM);
    let mut at_least = 0usize;
    for _ in 0..permutations {
        rng.shuffle(&mut indicators);
        let (s, _) = exceedance_slope(&count_for(&indicators), replicates);
        if s.unwrap_or(f64::NEG_INFINITY) >= obs {
            at_least += 1;
        }
    }
    (1 + at_least) as f64 / (permutations + 1) as f64
}

// ---------------------------------------------------------------------------
// Counterexample experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CounterRow {
    pub seed: u64,
    pub n: usize,
    /// `max_{i <= n-2} h(X_i, X_{i+1}) / n`, a lower bound on the top
    /// eigenvalue magnitude of both matrix variants.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct CounterReport {
    pub rows: Vec<CounterRow>,
    pub summary: Vec<SummaryRow>,
    pub medians_increasing: bool,
    pub wall_time: Duration,
}

impl CounterReport {
    pub fn replicates_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("seed,n,lower_bound");
        for r in &self.rows {
            t.push_row([r.seed.to_string(), r.n.to_string(), fmt_f64(r.bound)]);
        }
        t
    }

    pub fn summary_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("n,median,q10,q90");
        for s in &self.summary {
            t.push_row([s.n.to_string(), fmt_f64(s.median), fmt_f64(s.q10), fmt_f64(s.q90)]);
        }
        t
    }
}

/// Running `max h(X_i, X_{i+1}) / n` along the checkpoints of `n_grid`.
///
/// The largest absolute matrix entry bounds the top eigenvalue magnitude from
/// below, and adjacent repeats make the numerator grow without bound for the
/// diagonal power kernel; the zero kernel stays at exactly 0 on the same
/// pipeline.
pub fn max_entry_bound_curve(states: &[f64], kernel: &Kernel, n_grid: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_grid.len());
    let mut running = 0.0f64;
    let mut i = 0usize;
    for &n in n_grid {
        while i + 1 < n.min(states.len()) {
            let v = kernel.eval(states[i], states[i + 1]).abs();
            if v > running {
                running = v;
            }
            i += 1;
        }
        out.push(running / n as f64);
    }
    out
}

/// The diverging configuration: diagonal power kernel on the refresh chain
/// started at 0.5. Any non-finite statistic is reported as an `inf` row.
pub fn run_counterexample(
    n_grid: &[usize],
    replicates: usize,
    master_seed: u64,
) -> Result<CounterReport, ExperimentError> {
    let t0 = Instant::now();
    check_grid(n_grid)?;
    if replicates == 0 {
        return Err(ExperimentError::NoReplicates);
    }
    let chain = ChainSpec::Refresh;
    let kernel = Kernel::DiagonalPower;
    let max_n = *n_grid.last().expect("nonempty grid");
    let rows: Vec<Vec<CounterRow>> = (0..replicates)
        .into_par_iter()
        .map(|r| -> Result<Vec<CounterRow>, ExperimentError> {
            let seed = replicate_seed(master_seed, r as u64);
            let states = simulate_marginal(&chain, max_n, Start::Point(0.5), seed)?;
            let curve = max_entry_bound_curve(&states, &kernel, n_grid);
            Ok(n_grid
                .iter()
                .zip(curve)
                .map(|(&n, bound)| CounterRow { seed, n, bound })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    let rows: Vec<CounterRow> = rows.into_iter().flatten().collect();
    let summary: Vec<SummaryRow> = n_grid
        .iter()
        .map(|&n| {
            let vals: Vec<f64> = rows.iter().filter(|r| r.n == n).map(|r| r.bound).collect();
            SummaryRow { n, median: median(&vals), q10: quantile(&vals, 0.1), q90: quantile(&vals, 0.9) }
        })
        .collect();
    let medians_increasing = summary.windows(2).all(|w| w[1].median > w[0].median);
    Ok(CounterReport { rows, summary, medians_increasing, wall_time: t0.elapsed() })
}

// ---------------------------------------------------------------------------
// Drift-condition tau bound
// ---------------------------------------------------------------------------

/// Parameters of the geometric drift condition `P^m V - V <= -λV + b·1_C`
/// with `V >= 1` and `K = sup_C V`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftParams {
    pub lambda: f64,
    pub b: f64,
    pub k_sup: f64,
    pub delta: f64,
    pub v_start: f64,
    pub start_in_c: bool,
}

/// The three factors of the printed bound and their product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauBound {
    pub coin_factor: f64,
    pub drift_factor: f64,
    pub rate_factor: f64,
    pub bound: f64,
}

/// Evaluates the drift-parameter bound on the regeneration ψ₁ constant,
/// reproducing its printed form literally.
///
/// The first factor is `2·log( log(6/(2-δ)) / log(6/(2-δ)) )`: the printed
/// quotient has identical numerator and denominator (an apparent typesetting
/// error in the source), so it is 1 and the factor — hence the whole bound —
/// evaluates to exactly 0. No corrected form is guessed; the factors are
/// exposed separately so the non-degenerate parts stay inspectable.
pub fn tau_bound(p: &DriftParams) -> Result<TauBound, ExperimentError> {
    if !(p.lambda > 0.0 && p.lambda < 1.0) {
        return Err(ExperimentError::BadDriftParameter(format!("lambda must lie in (0,1), got {}", p.lambda)));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(ExperimentError::BadDriftParameter(format!("delta must lie in (0,1), got {}", p.delta)));
    }
    if !(p.b >= 0.0) {
        return Err(ExperimentError::BadDriftParameter(format!("b must be nonnegative, got {}", p.b)));
    }
    if !(p.k_sup >= 1.0) {
        return Err(ExperimentError::BadDriftParameter(format!("K must be >= 1, got {}", p.k_sup)));
    }
    if !(p.v_start >= 1.0) {
        return Err(ExperimentError::BadDriftParameter(format!("V at the start must be >= 1, got {}", p.v_start)));
    }
    let q = (6.0 / (2.0 - p.delta)).ln();
    let coin_factor = 2.0 * (q / q).ln();
    let drift_mass = p.b / (1.0 - p.lambda) + p.k_sup;
    let start_arg = if p.start_in_c { drift_mass } else { p.v_start };
    let ln2 = std::f64::consts::LN_2;
    let drift_factor = (start_arg.ln() / ln2).max(drift_mass.ln() / ln2).max(1.0);
    let rate_factor = 1.0 / (1.0 / (1.0 - p.lambda)).ln();
    Ok(TauBound { coin_factor, drift_factor, rate_factor, bound: coin_factor * drift_factor * rate_factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine3() -> Kernel {
        Kernel::CosineRank { lambdas: vec![1.0, 0.5, 0.25] }
    }

    #[test]
    fn lln_smoke_and_determinism() {
        let rep = run_lln(&cosine3(), &ChainSpec::Refresh, Start::Point(0.5), &[64, 256], 8, 11).unwrap();
        assert_eq!(rep.rows.len(), 16);
        assert_eq!(rep.true_spectrum, vec![1.0, 0.5, 0.25]);
        assert!(rep.rows.iter().all(|r| r.d2_tilde.is_finite() && r.d2_zero.is_finite()));
        let rep2 = run_lln(&cosine3(), &ChainSpec::Refresh, Start::Point(0.5), &[64, 256], 8, 11).unwrap();
        assert_eq!(rep.rows, rep2.rows);
        assert_eq!(
            rep.replicates_csv().to_bytes(),
            rep2.replicates_csv().to_bytes()
        );
        // zero kernel: every distance is exactly 0 at every n
        let z = run_lln(&Kernel::zero(), &ChainSpec::Refresh, Start::Point(0.5), &[16, 32], 4, 1).unwrap();
        assert!(z.rows.iter().all(|r| r.d2_tilde == 0.0 && r.d2_zero == 0.0));
        assert!(z.medians_nonincreasing);
    }

    #[test]
    fn lln_grid_validation() {
        assert!(matches!(
            run_lln(&cosine3(), &ChainSpec::Refresh, Start::Point(0.5), &[], 2, 0),
            Err(ExperimentError::BadGrid)
        ));
        assert!(matches!(
            run_lln(&cosine3(), &ChainSpec::Refresh, Start::Point(0.5), &[64, 64], 2, 0),
            Err(ExperimentError::BadGrid)
        ));
        assert!(matches!(
            run_lln(&cosine3(), &ChainSpec::Refresh, Start::Point(0.5), &[64], 0, 0),
            Err(ExperimentError::NoReplicates)
        ));
    }

    #[test]
    fn tail_rejects_wrong_kernels() {
        assert!(matches!(
            run_tail(&Kernel::Gaussian { width: 0.1 }, &ChainSpec::Refresh, Start::Point(0.5), &[0.3], &[64], 4, 0, 0),
            Err(ExperimentError::NotPositiveMercer(_))
        ));
        let signed = Kernel::CosineRank { lambdas: vec![1.0, -0.5] };
        assert!(matches!(
            run_tail(&signed, &ChainSpec::Refresh, Start::Point(0.5), &[0.3], &[64], 4, 0, 0),
            Err(ExperimentError::NotPositiveMercer(_))
        ));
    }

    #[test]
    fn tail_degenerate_thresholds() {
        // t = 0: everything exceeds (the empirical spectrum never equals the
        // truth exactly); t huge: nothing does
        let rep = run_tail(
            &cosine3(),
            &ChainSpec::Refresh,
            Start::Point(0.5),
            &[0.0, 1e6],
            &[32, 64],
            16,
            3,
            0,
        )
        .unwrap();
        for p in &rep.points {
            if p.t == 0.0 {
                assert_eq!(p.exceed_freq, 1.0);
            } else {
                assert_eq!(p.exceed_freq, 0.0);
            }
        }
        // degenerate cells leave no slope
        assert!(rep.fits.iter().all(|f| f.slope.is_none()));
    }

    #[test]
    fn counterexample_statistic_properties() {
        let rep = run_counterexample(&[256, 1024], 8, 5).unwrap();
        assert_eq!(rep.rows.len(), 16);
        // every bound is >= 0 and the curve is a running max over a growing
        // window divided by n
        for r in &rep.rows {
            assert!(r.bound >= 0.0);
        }
        // zero kernel on the same pipeline: identically zero
        let states = simulate_marginal(&ChainSpec::Refresh, 1024, Start::Point(0.5), 1).unwrap();
        let curve = max_entry_bound_curve(&states, &Kernel::zero(), &[256, 1024]);
        assert!(curve.iter().all(|&v| v == 0.0));
        // a trace with an adjacent repeat of value x has bound >= x^{-3}/n
        let t = [0.25, 0.25, 0.7];
        let c = max_entry_bound_curve(&t, &Kernel::DiagonalPower, &[3]);
        let f = 0.25f64.powf(-1.5);
        assert!((c[0] - f * f / 3.0).abs() < 1e-12);
    }

    #[test]
    fn tau_bound_examples() {
        // second factor equals 1 when V(x)=1 off C ... with b(1-λ)^{-1}+K = 2
        let p = DriftParams { lambda: 0.5, b: 1.0, k_sup: 0.0_f64.max(1.0), delta: 0.5, v_start: 1.0, start_in_c: true };
        // b/(1-λ) + K = 2 + ... adjust: b=0.5 gives 1/0.5... pick b=0.5, K=1 -> 1 + 1 = 2
        let p = DriftParams { b: 0.5, k_sup: 1.0, ..p };
        let f = tau_bound(&p).unwrap();
        assert_eq!(f.drift_factor, 1.0);
        // printed first factor is identically 0, so the bound is 0
        assert_eq!(f.coin_factor, 0.0);
        assert_eq!(f.bound, 0.0);
        // independent re-evaluation of the printed expression
        let q: f64 = (6.0_f64 / (2.0 - 0.5)).ln();
        let expect_coin = 2.0 * (q / q).ln();
        let expect_drift = ((0.5_f64 / 0.5 + 1.0).ln() / 2.0_f64.ln()).max(1.0);
        let expect_rate = 1.0 / (1.0_f64 / 0.5).ln();
        assert_eq!(f.coin_factor, expect_coin);
        assert_eq!(f.drift_factor, expect_drift);
        assert!((f.rate_factor - expect_rate).abs() < 1e-15);
        assert_eq!(f.bound, expect_coin * expect_drift * expect_rate);
        // λ -> 1⁻: the rate factor decays to 0⁺ and the bound stays at its
        // limit from above
        let mut last_rate = f64::INFINITY;
        for lambda in [0.9, 0.99, 0.999, 0.9999] {
            let f = tau_bound(&DriftParams { lambda, ..p }).unwrap();
            assert!(f.rate_factor < last_rate && f.rate_factor > 0.0);
            assert!(f.bound >= 0.0);
            last_rate = f.rate_factor;
        }
        // range checks
        assert!(tau_bound(&DriftParams { lambda: 1.0, ..p }).is_err());
        assert!(tau_bound(&DriftParams { delta: 1.0, ..p }).is_err());
        assert!(tau_bound(&DriftParams { v_start: 0.5, ..p }).is_err());
    }
}
