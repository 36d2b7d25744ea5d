//! Markov chains on (0,1) with known stationary measure and exact split-chain
//! simulation.
//!
//! The built-in chains:
//!
//! * [`ChainSpec::IidUniform`] — fresh draws from Uniform(0,1) every step; the
//!   degenerate baseline. Splits with `C = (0,1)`, `m = 1`, `δ = 1`,
//!   `ν = Uniform(0,1)`.
//! * [`ChainSpec::Refresh`] — stay put with probability 1/2, otherwise draw a
//!   fresh Uniform(0,1). Splits exactly with `C = (0,1)`, `m = 1`, `δ = 1/2`,
//!   `ν = Uniform(0,1)` and residual kernel `Q(x,·) = δ_x`, so the split
//!   simulation *is* the chain: the regeneration coin is the refresh coin.
//! * [`ChainSpec::Rwmh`] — random-walk Metropolis–Hastings with reflecting
//!   uniform proposals targeting a user-supplied unnormalized density, with a
//!   user-declared minorization triple validated by Monte Carlo. Its residual
//!   kernel has no closed form, so split simulation is unavailable; the
//!   marginal simulator still works.
//!
//! Split simulation attaches the auxiliary bits `Y_n`: at steps whose index is
//! divisible by `m` and whose state lies in the small set `C`, a coin with
//! heads probability `δ` decides whether the next state regenerates from `ν`
//! (bit 1) or follows the residual kernel `Q = (P - δν)/(1-δ)` (bit 0).
//!
//! Regeneration times are stored with the convention `T_0 = inf{k ≥ 0: Y_k=1}`,
//! `T_{i+1} = inf{k > T_i: Y_k = 0}`, and block `i` spans the index range
//! `m(T_i+1) ..= m·T_{i+1}+m-1`. The more common convention in which every
//! epoch is a bell ring (`Y = 1`) is exposed by
//! [`RegenerationTrace::conventional_regen_times`].

use thiserror::Error;

use crate::report::{fmt_f64, CsvTable};
use crate::rng::{RngStream, CHAIN_STREAM, VALIDATION_STREAM};

pub type State = f64;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("trace length must be at least 1")]
    ZeroLength,
    #[error("start point {0} lies outside the state space (0,1)")]
    StartOutsideStateSpace(f64),
    #[error("splitting unavailable: residual kernel of `{0}` has no closed form")]
    SplittingUnavailable(String),
    #[error("stationary sampler unavailable for `{0}` (density known only up to constants)")]
    StationaryUnavailable(String),
    #[error("block index {index} out of range ({blocks} complete blocks)")]
    BlockIndexOutOfRange { index: usize, blocks: usize },
    #[error("invalid chain parameter: {0}")]
    InvalidParameter(String),
}

/// An open interval of the real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    /// Length of the overlap with `other`.
    pub fn overlap(&self, other: &Interval) -> f64 {
        (self.hi.min(other.hi) - self.lo.max(other.lo)).max(0.0)
    }
}

/// The unit interval state space shared by all built-in chains.
pub const STATE_SPACE: Interval = Interval { lo: 0.0, hi: 1.0 };

/// Where a simulation starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Start {
    Point(State),
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErgodicityClass {
    Uniform,
    Geometric,
    HarrisOnly,
}

/// Unnormalized target density on (0,1) for the Metropolis–Hastings chain.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetDensity {
    Uniform,
    /// `x^(a-1) (1-x)^(b-1)` with `a, b >= 1`.
    Beta { a: f64, b: f64 },
}

impl TargetDensity {
    pub fn density(&self, x: f64) -> f64 {
        match self {
            TargetDensity::Uniform => 1.0,
            TargetDensity::Beta { a, b } => x.powf(a - 1.0) * (1.0 - x).powf(b - 1.0),
        }
    }
}

/// The stationary law of a chain: either exactly Uniform(0,1) or a density
/// known up to a constant.
#[derive(Debug, Clone, PartialEq)]
pub enum Stationary {
    Uniform01,
    Unnormalized(TargetDensity),
}

impl Stationary {
    /// Unnormalized density value at `x`.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Stationary::Uniform01 => 1.0,
            Stationary::Unnormalized(t) => t.density(x),
        }
    }
}

/// Minorization data: `P^m(x, A) >= delta * nu(A)` for all `x` in `small_set`.
#[derive(Debug, Clone, PartialEq)]
pub struct Minorization {
    pub small_set: Interval,
    pub m: u32,
    pub delta: f64,
    /// `ν = Uniform(nu.lo, nu.hi)`.
    pub nu: Interval,
}

impl Minorization {
    pub fn validate(&self) -> Result<(), ChainError> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(ChainError::InvalidParameter(format!(
                "minorization.delta must lie in (0,1], got {}",
                self.delta
            )));
        }
        if self.m < 1 {
            return Err(ChainError::InvalidParameter("minorization.m must be >= 1".into()));
        }
        if self.small_set.length() <= 0.0 || self.nu.length() <= 0.0 {
            return Err(ChainError::InvalidParameter(
                "minorization intervals must have positive length".into(),
            ));
        }
        Ok(())
    }

    /// `ν(A)` for an interval test set `A`.
    pub fn nu_mass(&self, a: &Interval) -> f64 {
        self.nu.overlap(a) / self.nu.length()
    }
}

/// A Markov transition rule on (0,1) with known stationary measure.
#[derive(Debug, Clone, PartialEq)]
pub enum ChainSpec {
    IidUniform,
    Refresh,
    Rwmh {
        target: TargetDensity,
        proposal_width: f64,
        minorization: Minorization,
    },
}

impl ChainSpec {
    /// Metropolis–Hastings chain with the default declared minorization: the
    /// proposal covers `nu = (0.45, 0.55)` from every point of
    /// `C = [0.4, 0.6]`, and for the default `Beta(2,2)`-style targets the
    /// acceptance ratio on that window stays above 0.95, which keeps
    /// `delta = 0.19` safely below the true minorization constant.
    pub fn rwmh_default(target: TargetDensity) -> Self {
        ChainSpec::Rwmh {
            target,
            proposal_width: 0.25,
            minorization: Minorization {
                small_set: Interval { lo: 0.4, hi: 0.6 },
                m: 1,
                delta: 0.19,
                nu: Interval { lo: 0.45, hi: 0.55 },
            },
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChainSpec::IidUniform => "iid_uniform",
            ChainSpec::Refresh => "refresh",
            ChainSpec::Rwmh { .. } => "rwmh",
        }
    }

    pub fn state_space(&self) -> Interval {
        STATE_SPACE
    }

    pub fn ergodicity_class(&self) -> ErgodicityClass {
        match self {
            ChainSpec::IidUniform | ChainSpec::Refresh => ErgodicityClass::Uniform,
            ChainSpec::Rwmh { .. } => ErgodicityClass::Geometric,
        }
    }

    pub fn stationary(&self) -> Stationary {
        match self {
            ChainSpec::IidUniform | ChainSpec::Refresh => Stationary::Uniform01,
            ChainSpec::Rwmh { target, .. } => Stationary::Unnormalized(target.clone()),
        }
    }

    pub fn minorization(&self) -> Minorization {
        match self {
            ChainSpec::IidUniform => Minorization {
                small_set: STATE_SPACE,
                m: 1,
                delta: 1.0,
                nu: STATE_SPACE,
            },
            ChainSpec::Refresh => Minorization {
                small_set: STATE_SPACE,
                m: 1,
                delta: 0.5,
                nu: STATE_SPACE,
            },
            ChainSpec::Rwmh { minorization, .. } => minorization.clone(),
        }
    }

    pub fn supports_splitting(&self) -> bool {
        !matches!(self, ChainSpec::Rwmh { .. })
    }

    pub fn validate(&self) -> Result<(), ChainError> {
        if let ChainSpec::Rwmh { target, proposal_width, minorization } = self {
            if !(*proposal_width > 0.0 && *proposal_width <= 1.0) {
                return Err(ChainError::InvalidParameter(format!(
                    "proposal_width must lie in (0,1], got {proposal_width}"
                )));
            }
            if let TargetDensity::Beta { a, b } = target {
                if !(*a >= 1.0 && *b >= 1.0) {
                    return Err(ChainError::InvalidParameter(
                        "beta target parameters must be >= 1 to keep the density bounded".into(),
                    ));
                }
            }
            minorization.validate()?;
            if minorization.m != 1 {
                return Err(ChainError::InvalidParameter(
                    "declared minorizations with m > 1 are not supported".into(),
                ));
            }
        }
        Ok(())
    }

    /// One step of the plain (unsplit) transition kernel `P(x, ·)`.
    pub fn step(&self, x: State, rng: &mut RngStream) -> State {
        match self {
            ChainSpec::IidUniform => rng.uniform(),
            ChainSpec::Refresh => {
                if rng.coin(0.5) {
                    rng.uniform()
                } else {
                    x
                }
            }
            ChainSpec::Rwmh { target, proposal_width, .. } => {
                let mut y = x + proposal_width * (2.0 * rng.uniform() - 1.0);
                if y <= 0.0 {
                    y = -y;
                }
                if y >= 1.0 {
                    y = 2.0 - y;
                }
                if !STATE_SPACE.contains(y) {
                    // proposal reflected onto the boundary (measure zero): reject
                    let _ = rng.uniform();
                    return x;
                }
                let ratio = target.density(y) / target.density(x);
                if rng.uniform() < ratio {
                    y
                } else {
                    x
                }
            }
        }
    }

    /// One step of the split kernel: the regeneration bit plus the next state.
    fn split_step(&self, x: State, rng: &mut RngStream) -> Result<(u8, State), ChainError> {
        let minor = self.minorization();
        match self {
            ChainSpec::IidUniform => {
                if rng.coin(minor.delta) {
                    Ok((1, rng.uniform()))
                } else {
                    // unreachable for delta = 1, kept for uniform structure
                    Ok((0, rng.uniform()))
                }
            }
            ChainSpec::Refresh => {
                if rng.coin(minor.delta) {
                    // regenerate from nu = Uniform(0,1)
                    Ok((1, rng.uniform()))
                } else {
                    // residual kernel Q(x,·) = δ_x
                    Ok((0, x))
                }
            }
            ChainSpec::Rwmh { .. } => Err(ChainError::SplittingUnavailable(self.name().into())),
        }
    }

    fn resolve_start(&self, start: Start, rng: &mut RngStream) -> Result<State, ChainError> {
        match start {
            Start::Point(x) => {
                if STATE_SPACE.contains(x) {
                    Ok(x)
                } else {
                    Err(ChainError::StartOutsideStateSpace(x))
                }
            }
            Start::Stationary => match self.stationary() {
                Stationary::Uniform01 => Ok(rng.uniform()),
                Stationary::Unnormalized(_) => {
                    Err(ChainError::StationaryUnavailable(self.name().into()))
                }
            },
        }
    }
}

/// A simulated split-chain path with its regeneration structure.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerationTrace {
    pub states: Vec<State>,
    /// Regeneration bits `Y_0 .. Y_{n-1}`.
    pub bits: Vec<u8>,
    /// `T_0 < T_1 < ...` under the stored convention (see module docs).
    pub regen_times: Vec<usize>,
    /// Inclusive index ranges of the complete blocks `Z_i`.
    pub blocks: Vec<(usize, usize)>,
    pub seed: u64,
    pub m: u32,
}

/// Mean of `f` over a path with non-finite values flagged, never dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlaggedMean {
    pub value: f64,
    pub nonfinite_terms: usize,
}

impl RegenerationTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States of complete block `k`.
    pub fn block_states(&self, k: usize) -> Result<&[State], ChainError> {
        let (start, end) = *self
            .blocks
            .get(k)
            .ok_or(ChainError::BlockIndexOutOfRange { index: k, blocks: self.blocks.len() })?;
        Ok(&self.states[start..=end])
    }

    /// `Σ f(X_i)` over block `k`.
    pub fn block_sum(&self, f: impl Fn(State) -> f64, k: usize) -> Result<f64, ChainError> {
        Ok(self.block_states(k)?.iter().map(|&x| f(x)).sum())
    }

    /// Path average `(1/n) Σ f(X_i)`; non-finite terms are counted and
    /// propagate into the value.
    pub fn lln_additive(&self, f: impl Fn(State) -> f64) -> FlaggedMean {
        let mut sum = 0.0;
        let mut nonfinite = 0usize;
        for &x in &self.states {
            let v = f(x);
            if !v.is_finite() {
                nonfinite += 1;
            }
            sum += v;
        }
        FlaggedMean { value: sum / self.states.len() as f64, nonfinite_terms: nonfinite }
    }

    /// Gaps `T_{i+1} - T_i` of the stored regeneration times.
    pub fn gaps(&self) -> Vec<usize> {
        self.regen_times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Regeneration epochs under the common convention: every index with
    /// `Y = 1`, starting from the first.
    pub fn conventional_regen_times(&self) -> Vec<usize> {
        self.bits.iter().enumerate().filter(|(_, &b)| b == 1).map(|(i, _)| i).collect()
    }

    /// Number of complete blocks whose last index fits inside the first `n`
    /// states; `sup ∅ = 0`.
    pub fn complete_blocks_within(&self, n: usize) -> usize {
        self.blocks.iter().take_while(|(_, end)| *end <= n - 1).count()
    }

    /// `index,state,y_bit` rows.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("index,state,y_bit");
        for (i, (&x, &b)) in self.states.iter().zip(&self.bits).enumerate() {
            t.push_row([i.to_string(), fmt_f64(x), b.to_string()]);
        }
        t
    }

    /// Single-column regeneration times.
    pub fn regen_to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("regen_time");
        for &ti in &self.regen_times {
            t.push_row([ti.to_string()]);
        }
        t
    }
}

fn regen_times_from_bits(bits: &[u8]) -> Vec<usize> {
    let mut times = Vec::new();
    let Some(t0) = bits.iter().position(|&b| b == 1) else {
        return times;
    };
    times.push(t0);
    let mut last = t0;
    while let Some(next) = bits[last + 1..].iter().position(|&b| b == 0) {
        last += 1 + next;
        times.push(last);
    }
    times
}

fn blocks_from_times(times: &[usize], m: usize, n: usize) -> Vec<(usize, usize)> {
    let mut blocks = Vec::new();
    for w in times.windows(2) {
        let start = m * (w[0] + 1);
        let end = m * w[1] + m - 1;
        if end <= n - 1 {
            blocks.push((start, end));
        } else {
            break;
        }
    }
    blocks
}

/// Simulates `n` steps of the split chain.
///
/// Identical `(chain, n, start, seed)` input produces a bit-identical trace.
/// The final bit `Y_{n-1}` is assigned by the same coin rule even though no
/// further state is materialized.
pub fn simulate(
    chain: &ChainSpec,
    n: usize,
    start: Start,
    seed: u64,
) -> Result<RegenerationTrace, ChainError> {
    if n == 0 {
        return Err(ChainError::ZeroLength);
    }
    chain.validate()?;
    if !chain.supports_splitting() {
        return Err(ChainError::SplittingUnavailable(chain.name().into()));
    }
    let minor = chain.minorization();
    let m = minor.m as usize;
    let mut rng = RngStream::new(seed, CHAIN_STREAM);
    let mut states = Vec::with_capacity(n);
    let mut bits = Vec::with_capacity(n);
    states.push(chain.resolve_start(start, &mut rng)?);
    for i in 0..n {
        let x = states[i.min(states.len() - 1)];
        let (bit, next) = if i % m == 0 && minor.small_set.contains(x) {
            chain.split_step(x, &mut rng)?
        } else {
            (0, chain.step(x, &mut rng))
        };
        bits.push(bit);
        if i + 1 < n {
            states.push(next);
        }
    }
    let regen_times = regen_times_from_bits(&bits);
    let blocks = blocks_from_times(&regen_times, m, n);
    Ok(RegenerationTrace { states, bits, regen_times, blocks, seed, m: minor.m })
}

/// Simulates `n` steps of the plain (unsplit) chain; works for every chain,
/// including those without a closed-form residual kernel.
pub fn simulate_marginal(
    chain: &ChainSpec,
    n: usize,
    start: Start,
    seed: u64,
) -> Result<Vec<State>, ChainError> {
    if n == 0 {
        return Err(ChainError::ZeroLength);
    }
    chain.validate()?;
    let mut rng = RngStream::new(seed, CHAIN_STREAM);
    let mut states = Vec::with_capacity(n);
    states.push(chain.resolve_start(start, &mut rng)?);
    for i in 1..n {
        let next = chain.step(states[i - 1], &mut rng);
        states.push(next);
    }
    Ok(states)
}

/// Monte Carlo check of the declared minorization `P^m(x,A) >= δ ν(A)`.
#[derive(Debug, Clone)]
pub struct MinorizationReport {
    pub points_tested: usize,
    pub test_sets: usize,
    pub trials_per_point: usize,
    /// Smallest observed `P̂(x,A) - δν(A)` over all points and test sets.
    pub min_slack: f64,
    /// True when every slack clears `-3σ` Monte Carlo tolerance.
    pub pass: bool,
}

/// Samples points in the small set, runs `m`-step transitions, and compares
/// empirical hit frequencies on dyadic interval test sets against `δ ν(A)`.
pub fn validate_minorization(
    chain: &ChainSpec,
    points: usize,
    trials_per_point: usize,
    bins: usize,
    seed: u64,
) -> Result<MinorizationReport, ChainError> {
    chain.validate()?;
    let minor = chain.minorization();
    let mut rng = RngStream::new(seed, VALIDATION_STREAM);
    let mut min_slack = f64::INFINITY;
    let mut pass = true;
    for _ in 0..points {
        let x0 = rng.uniform_in(minor.small_set.lo.max(0.0), minor.small_set.hi.min(1.0));
        let mut counts = vec![0usize; bins];
        for _ in 0..trials_per_point {
            let mut x = x0;
            for _ in 0..minor.m {
                x = chain.step(x, &mut rng);
            }
            let b = ((x * bins as f64) as usize).min(bins - 1);
            counts[b] += 1;
        }
        for (b, &c) in counts.iter().enumerate() {
            let cell = Interval { lo: b as f64 / bins as f64, hi: (b + 1) as f64 / bins as f64 };
            let target = minor.delta * minor.nu_mass(&cell);
            if target == 0.0 {
                continue;
            }
            let p_hat = c as f64 / trials_per_point as f64;
            let sigma = (p_hat.max(target) * (1.0 - p_hat.min(1.0)) / trials_per_point as f64)
                .sqrt()
                .max(1.0 / trials_per_point as f64);
            let slack = p_hat - target;
            min_slack = min_slack.min(slack);
            if slack < -3.0 * sigma {
                pass = false;
            }
        }
    }
    Ok(MinorizationReport {
        points_tested: points,
        test_sets: bins,
        trials_per_point,
        min_slack,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_one_trace_takes_no_transition() {
        let t = simulate(&ChainSpec::Refresh, 1, Start::Point(0.3), 9).unwrap();
        assert_eq!(t.states, vec![0.3]);
        assert_eq!(t.bits.len(), 1);
    }

    #[test]
    fn rejects_invalid_input() {
        assert!(matches!(
            simulate(&ChainSpec::Refresh, 0, Start::Point(0.5), 1),
            Err(ChainError::ZeroLength)
        ));
        assert!(matches!(
            simulate(&ChainSpec::Refresh, 10, Start::Point(1.5), 1),
            Err(ChainError::StartOutsideStateSpace(_))
        ));
        let rwmh = ChainSpec::rwmh_default(TargetDensity::Beta { a: 2.0, b: 2.0 });
        assert!(matches!(
            simulate(&rwmh, 10, Start::Point(0.5), 1),
            Err(ChainError::SplittingUnavailable(_))
        ));
        assert!(matches!(
            simulate_marginal(&rwmh, 10, Start::Stationary, 1),
            Err(ChainError::StationaryUnavailable(_))
        ));
    }

    #[test]
    fn determinism_bit_identical() {
        let a = simulate(&ChainSpec::Refresh, 5000, Start::Point(0.5), 77).unwrap();
        let b = simulate(&ChainSpec::Refresh, 5000, Start::Point(0.5), 77).unwrap();
        assert_eq!(a, b);
        let c = simulate(&ChainSpec::Refresh, 5000, Start::Point(0.5), 78).unwrap();
        assert_ne!(a.states, c.states);
    }

    #[test]
    fn refresh_gap_mean_and_bit_frequency() {
        let n = 100_000;
        let t = simulate(&ChainSpec::Refresh, n, Start::Point(0.5), 12345).unwrap();
        let gaps = t.gaps();
        let mean = gaps.iter().sum::<usize>() as f64 / gaps.len() as f64;
        assert!((mean - 2.0).abs() < 0.04, "gap mean {mean}");
        let ones = t.bits.iter().filter(|&&b| b == 1).count() as f64 / n as f64;
        assert!((ones - 0.5).abs() < 0.01, "bit frequency {ones}");
    }

    #[test]
    fn blocks_tile_the_path_after_t0() {
        let t = simulate(&ChainSpec::Refresh, 2000, Start::Point(0.5), 4).unwrap();
        assert!(!t.blocks.is_empty());
        let mut expected_start = t.regen_times[0] + 1;
        for &(start, end) in &t.blocks {
            assert_eq!(start, expected_start);
            assert!(end >= start.saturating_sub(1));
            expected_start = end + 1;
        }
        assert!(expected_start > 2000 - 50, "blocks should reach near the end of the trace");
    }

    #[test]
    fn block_sum_examples() {
        let t = simulate(&ChainSpec::Refresh, 200_000, Start::Point(0.5), 21).unwrap();
        let k = t.blocks.len().min(10_000);
        // f = 1: block sum is the block length; mean ~ m E(T1-T0) = 2
        let mean_len: f64 =
            (0..k).map(|i| t.block_sum(|_| 1.0, i).unwrap()).sum::<f64>() / k as f64;
        assert!((mean_len - 2.0).abs() < 0.04, "mean block length {mean_len}");
        // f = 0: every block sums to zero
        assert_eq!(t.block_sum(|_| 0.0, 0).unwrap(), 0.0);
        // f = x: mean ~ m E(T1-T0) pi f = 2 * 1/2 = 1
        let mean_x: f64 = (0..k).map(|i| t.block_sum(|x| x, i).unwrap()).sum::<f64>() / k as f64;
        assert!((mean_x - 1.0).abs() < 0.03, "mean block x-sum {mean_x}");
        // out of range
        let e = t.block_sum(|x| x, t.blocks.len());
        assert!(matches!(e, Err(ChainError::BlockIndexOutOfRange { .. })));
    }

    #[test]
    fn lln_additive_examples() {
        let t = simulate(&ChainSpec::Refresh, 1_000_000, Start::Point(0.5), 31).unwrap();
        let m = t.lln_additive(|x| x);
        assert!((m.value - 0.5).abs() < 0.005, "mean {m:?}");
        assert_eq!(m.nonfinite_terms, 0);
        let ind = t.lln_additive(|x| if x < 0.25 { 1.0 } else { 0.0 });
        assert!((ind.value - 0.25).abs() < 0.005, "indicator mean {ind:?}");
        // constant function is averaged exactly (dyadic constant)
        let c = t.lln_additive(|_| 0.5);
        assert_eq!(c.value, 0.5);
    }

    #[test]
    fn lln_additive_flags_nonfinite() {
        let t = simulate(&ChainSpec::Refresh, 100, Start::Point(0.5), 3).unwrap();
        let m = t.lln_additive(|x| if x < 0.9 { f64::INFINITY } else { 1.0 });
        assert!(m.nonfinite_terms > 0);
        assert!(!m.value.is_finite());
    }

    #[test]
    fn iid_chain_every_bit_rings() {
        let t = simulate(&ChainSpec::IidUniform, 1000, Start::Stationary, 8).unwrap();
        assert!(t.bits.iter().all(|&b| b == 1));
        // literal convention: no Y = 0 ever occurs, so only T_0 exists
        assert_eq!(t.regen_times, vec![0]);
        assert!(t.blocks.is_empty());
        assert_eq!(t.conventional_regen_times().len(), 1000);
    }

    #[test]
    fn gap_autocorrelation_small() {
        let t = simulate(&ChainSpec::Refresh, 200_000, Start::Point(0.5), 99).unwrap();
        let gaps: Vec<f64> = t.gaps().iter().skip(1).map(|&g| g as f64).collect();
        let n = gaps.len();
        let mean = gaps.iter().sum::<f64>() / n as f64;
        let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n as f64;
        let cov = gaps
            .windows(2)
            .map(|w| (w[0] - mean) * (w[1] - mean))
            .sum::<f64>()
            / (n - 1) as f64;
        let r1 = cov / var;
        assert!(r1.abs() < 3.0 / (n as f64).sqrt(), "lag-1 autocorrelation {r1}");
    }

    #[test]
    fn split_marginal_consistency_ks() {
        // Two-sample KS on X_100: split simulation vs plain simulation.
        let draws = 20_000;
        let mut split_x = Vec::with_capacity(draws);
        let mut plain_x = Vec::with_capacity(draws);
        for r in 0..draws {
            let ts = simulate(&ChainSpec::Refresh, 101, Start::Point(0.5), 1_000_000 + r as u64)
                .unwrap();
            split_x.push(ts.states[100]);
            let tm =
                simulate_marginal(&ChainSpec::IidUniform, 101, Start::Point(0.5), 5_000_000 + r as u64)
                    .unwrap();
            plain_x.push(tm[100]);
        }
        split_x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        plain_x.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // KS statistic over the pooled grid
        let mut ks = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < draws && j < draws {
            if split_x[i] <= plain_x[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 / draws as f64 - j as f64 / draws as f64).abs());
        }
        // 1% critical value for two equal samples
        let crit = 1.628 * (2.0 / draws as f64).sqrt();
        assert!(ks < crit, "KS statistic {ks} vs critical {crit}");
    }

    #[test]
    fn rwmh_runs_and_minorization_validates() {
        let chain = ChainSpec::rwmh_default(TargetDensity::Beta { a: 2.0, b: 2.0 });
        let states = simulate_marginal(&chain, 50_000, Start::Point(0.5), 6).unwrap();
        assert!(states.iter().all(|&x| x > 0.0 && x < 1.0));
        let mean = states.iter().sum::<f64>() / states.len() as f64;
        assert!((mean - 0.5).abs() < 0.02, "beta(2,2) mean {mean}");
        let rep = validate_minorization(&chain, 10, 20_000, 16, 42).unwrap();
        assert!(rep.pass, "min slack {}", rep.min_slack);
        for chain in [ChainSpec::Refresh, ChainSpec::IidUniform] {
            let rep = validate_minorization(&chain, 5, 20_000, 16, 43).unwrap();
            assert!(rep.pass, "{}: min slack {}", chain.name(), rep.min_slack);
        }
    }

    #[test]
    fn trace_csv_shape() {
        let t = simulate(&ChainSpec::Refresh, 3, Start::Point(0.5), 1).unwrap();
        let csv = String::from_utf8(t.to_csv().to_bytes()).unwrap();
        assert!(csv.starts_with("index,state,y_bit\n0,5.0000000000000000e-1,"));
        assert_eq!(csv.lines().count(), 4);
        let regen = String::from_utf8(t.regen_to_csv().to_bytes()).unwrap();
        assert!(regen.starts_with("regen_time\n"));
    }
}
