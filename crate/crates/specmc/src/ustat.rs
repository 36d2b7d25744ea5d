//! Degree-2 U-statistics of a trajectory and block-level kernels.
//!
//! `U_n(h) = (1/(n(n-1))) Σ_{i≠j} h(X_i, X_j)` is computed as an exact double
//! sum with cascade (pairwise) accumulation to bound round-off; above Gram
//! scale the sum streams without materializing the matrix. A second route
//! reuses an already-built empirical Gram matrix; the two agree to 1e-12
//! relative and tests pin that.

use thiserror::Error;

use crate::chain::RegenerationTrace;
use crate::kernel::Kernel;
use crate::spectral::EmpiricalGram;

#[derive(Debug, Error)]
pub enum UStatError {
    #[error("U-statistic needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("block-level kernel needs nonempty blocks")]
    EmptyBlock,
    #[error("Marcinkiewicz exponent must lie in (0,1), got {0}")]
    InvalidExponent(f64),
}

/// Cascade (pairwise) summation; error grows like log(n) instead of n.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Pairwise-structured sum of `f(xi, y)` over `y` in `tail`, counting
/// non-finite terms.
fn pair_sum<F: Fn(f64, f64) -> f64 + Copy>(xi: f64, tail: &[f64], f: F) -> (f64, usize) {
    if tail.len() <= 64 {
        let mut s = 0.0;
        let mut bad = 0usize;
        for &y in tail {
            let v = f(xi, y);
            if !v.is_finite() {
                bad += 1;
            }
            s += v;
        }
        return (s, bad);
    }
    let mid = tail.len() / 2;
    let (s1, b1) = pair_sum(xi, &tail[..mid], f);
    let (s2, b2) = pair_sum(xi, &tail[mid..], f);
    (s1 + s2, b1 + b2)
}

/// Σ over unordered distinct pairs, streamed row by row.
fn offdiag_half_sum<F: Fn(f64, f64) -> f64 + Copy>(states: &[f64], f: F) -> (f64, usize) {
    let n = states.len();
    let mut rows = Vec::with_capacity(n.saturating_sub(1));
    let mut bad = 0usize;
    for i in 0..n - 1 {
        let (s, b) = pair_sum(states[i], &states[i + 1..], f);
        rows.push(s);
        bad += b;
    }
    (pairwise_sum(&rows), bad)
}

/// A computed U-statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct UStatResult {
    pub value: f64,
    pub n: usize,
    pub kernel_id: String,
    /// `π⊗²h` when the caller knows it.
    pub target: Option<f64>,
    pub nonfinite_terms: usize,
}

/// The degree-2 U-statistic of a path, exact double sum.
pub fn u_stat_states(states: &[f64], kernel: &Kernel) -> Result<UStatResult, UStatError> {
    let n = states.len();
    if n < 2 {
        return Err(UStatError::TooFewSamples(n));
    }
    // Dispatch once so the pair loop monomorphizes and vectorizes per kernel.
    let (half, bad) = match kernel {
        Kernel::Polynomial { offset, degree: 1 } => {
            let c = *offset;
            offdiag_half_sum(states, move |x, y| x * y + c)
        }
        Kernel::Polynomial { offset, degree: 2 } => {
            let c = *offset;
            offdiag_half_sum(states, move |x, y| {
                let b = x * y + c;
                b * b
            })
        }
        Kernel::Gaussian { width } => {
            let w = *width;
            offdiag_half_sum(states, move |x, y| (-(x - y) * (x - y) / w).exp())
        }
        Kernel::Constant { value } => {
            let c = *value;
            offdiag_half_sum(states, move |x, y| {
                let _ = (x, y);
                c
            })
        }
        k => offdiag_half_sum(states, |x, y| k.eval(x, y)),
    };
    let value = 2.0 * half / (n as f64 * (n - 1) as f64);
    Ok(UStatResult {
        value,
        n,
        kernel_id: kernel.to_string(),
        target: None,
        nonfinite_terms: 2 * bad,
    })
}

/// The degree-2 U-statistic of a trace.
pub fn u_stat(trace: &RegenerationTrace, kernel: &Kernel) -> Result<UStatResult, UStatError> {
    u_stat_states(&trace.states, kernel)
}

/// U-statistic from an already-built empirical Gram matrix:
/// `U_n = (off-diagonal sum) / (n - 1)`, the off-diagonal entries being
/// `h(X_i,X_j)/n` for either variant.
pub fn u_stat_via_gram(gram: &EmpiricalGram, kernel_id: &str) -> Result<UStatResult, UStatError> {
    let n = gram.n();
    if n < 2 {
        return Err(UStatError::TooFewSamples(n));
    }
    let mut rows = Vec::with_capacity(n);
    let mut bad = 0usize;
    for i in 0..n {
        let row = gram.matrix.row(i);
        let (a, b) = (&row[..i], &row[i + 1..]);
        bad += a.iter().chain(b).filter(|v| !v.is_finite()).count();
        rows.push(pairwise_sum(a) + pairwise_sum(b));
    }
    // the diagonal is excluded from every row, so both variants reduce the same way
    let value = pairwise_sum(&rows) / (n - 1) as f64;
    Ok(UStatResult { value, n, kernel_id: kernel_id.to_string(), target: None, nonfinite_terms: bad })
}

/// The block-level kernel `H(Z_a, Z_b) = Σ_i Σ_j h(x_i, y_j)`.
pub fn block_u_kernel(za: &[f64], zb: &[f64], kernel: &Kernel) -> Result<f64, UStatError> {
    if za.is_empty() || zb.is_empty() {
        return Err(UStatError::EmptyBlock);
    }
    let mut acc = 0.0;
    for &x in za {
        for &y in zb {
            acc += kernel.eval(x, y);
        }
    }
    Ok(acc)
}

/// A flagged scalar: the value may be non-finite, and the count says how many
/// non-finite terms entered it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedValue {
    pub value: f64,
    pub nonfinite_terms: usize,
}

/// The Marcinkiewicz–Zygmund partial sum `n^{-1/p} Σ f(X_i)` for `p` in (0,1);
/// tends to 0 when `π|f|^p` is finite.
pub fn mz_partial_sum(
    states: &[f64],
    f: impl Fn(f64) -> f64,
    p: f64,
) -> Result<FlaggedValue, UStatError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(UStatError::InvalidExponent(p));
    }
    if states.is_empty() {
        return Err(UStatError::TooFewSamples(0));
    }
    let vals: Vec<f64> = states.iter().map(|&x| f(x)).collect();
    let bad = vals.iter().filter(|v| !v.is_finite()).count();
    let n = states.len() as f64;
    Ok(FlaggedValue { value: n.powf(-1.0 / p) * pairwise_sum(&vals), nonfinite_terms: bad })
}

/// The three remainder terms of the block decomposition of `U_n`, evaluated
/// on a trace prefix: the head-to-tail cross term, the within-block term, and
/// the last-block cross term. All three trend to 0 along `n`; exposed as a
/// diagnostic report.
#[derive(Debug, Clone, Copy)]
pub struct UDecomposition {
    pub n: usize,
    pub head_cross: f64,
    pub within_blocks: f64,
    pub last_block_cross: f64,
}

/// Evaluates the decomposition diagnostics at each checkpoint (checkpoints
/// beyond the trace length are skipped). The final block is truncated at the
/// trace end when its closing regeneration has not occurred yet.
pub fn u_decomposition(
    trace: &RegenerationTrace,
    kernel: &Kernel,
    checkpoints: &[usize],
) -> Vec<UDecomposition> {
    let m = trace.m as usize;
    let abs_kernel = |x: f64, y: f64| kernel.eval(x, y).abs();
    let mut out = Vec::new();
    for &n in checkpoints {
        if n < 2 || n > trace.len() {
            continue;
        }
        let denom = n as f64 * (n - 1) as f64;
        let times: Vec<usize> = trace.regen_times.iter().copied().filter(|&t| t < n).collect();
        let (mut head, mut within, mut last_cross) = (0.0, 0.0, 0.0);
        if !times.is_empty() {
            let t0 = times[0];
            let head_end = (m * t0 + m - 1).min(n - 1);
            let tail_start = m * (t0 + 1);
            if tail_start < n {
                for i in 0..=head_end {
                    for j in tail_start..n {
                        head += abs_kernel(trace.states[i], trace.states[j]);
                    }
                }
            }
            // blocks delimited by the regeneration times inside the prefix;
            // the last one is truncated at n-1 when still open
            let mut spans: Vec<(usize, usize)> = Vec::new();
            for (k, &tk) in times.iter().enumerate() {
                let start = m * (tk + 1);
                if start > n - 1 {
                    break;
                }
                let end = match times.get(k + 1) {
                    Some(&tn) => (m * tn + m - 1).min(n - 1),
                    None => n - 1,
                };
                spans.push((start, end));
            }
            for &(s, e) in &spans {
                for &x in &trace.states[s..=e] {
                    for &y in &trace.states[s..=e] {
                        within += abs_kernel(x, y);
                    }
                }
            }
            if let Some(&(ls, le)) = spans.last() {
                for &(s, e) in &spans[..spans.len() - 1] {
                    for &x in &trace.states[ls..=le] {
                        for &y in &trace.states[s..=e] {
                            last_cross += abs_kernel(x, y);
                        }
                    }
                }
            }
        }
        out.push(UDecomposition {
            n,
            head_cross: head / denom,
            within_blocks: within / denom,
            last_block_cross: last_cross / denom,
        });
    }
    out
}
