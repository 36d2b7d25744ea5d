//! Empirical Gram matrices, spectrum estimates, and the δ₂ matching metric.
//!
//! From a trajectory `X_0..X_{n-1}` and a kernel `h`, the empirical matrix is
//! `(1/n) h(X_i, X_j)`, either as-is ([`GramVariant::WithDiagonal`]) or with
//! the diagonal zeroed ([`GramVariant::ZeroDiagonal`]). Spectra are compared
//! in the δ₂ metric: both sequences are padded with zeros to a common length,
//! sorted nonincreasing, and the ℓ₂ distance taken — by the rearrangement
//! inequality this equals the infimum over all matchings, which the oracle
//! tests confirm against brute-force permutation search.

use std::fmt;

use thiserror::Error;

use crate::chain::RegenerationTrace;
use crate::eigen::{self, EigenError};
use crate::kernel::{Kernel, Mercer};
use crate::matrix::{MatrixError, SymMatrix};
use crate::report::{fmt_f64, CsvTable};

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("empty trace: the Gram matrix needs at least one state")]
    EmptyTrace,
    #[error("spectrum contains non-finite values")]
    NonFiniteSpectrum,
    #[error("gram matrix is flagged divergent; no finite spectrum is available")]
    Divergent,
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramVariant {
    /// `(1/n) h(X_i, X_j)`.
    WithDiagonal,
    /// Same with the diagonal replaced by exact zeros.
    ZeroDiagonal,
}

impl fmt::Display for GramVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GramVariant::WithDiagonal => write!(f, "with_diagonal"),
            GramVariant::ZeroDiagonal => write!(f, "zero_diagonal"),
        }
    }
}

/// An empirical kernel matrix built from a trajectory.
#[derive(Debug, Clone)]
pub struct EmpiricalGram {
    pub variant: GramVariant,
    pub matrix: SymMatrix,
    /// Count of non-finite entries; positive means the spectrum is divergent
    /// rather than computable.
    pub nonfinite_entries: usize,
}

impl EmpiricalGram {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    /// Largest absolute entry, treating any infinity as +inf.
    pub fn max_abs_entry(&self) -> f64 {
        self.matrix.data().iter().filter(|v| !v.is_nan()).fold(0.0f64, |m, &v| m.max(v.abs()))
    }
}

/// Builds the empirical matrix from raw states.
pub fn gram_from_states(
    states: &[f64],
    kernel: &Kernel,
    variant: GramVariant,
) -> Result<EmpiricalGram, SpectralError> {
    let n = states.len();
    if n == 0 {
        return Err(SpectralError::EmptyTrace);
    }
    let scale = 1.0 / n as f64;
    let mut nonfinite = 0usize;
    let matrix = SymMatrix::from_fn_symmetric(n, |i, j| {
        if variant == GramVariant::ZeroDiagonal && i == j {
            return 0.0;
        }
        let v = kernel.eval(states[i], states[j]) * scale;
        if !v.is_finite() {
            nonfinite += 1;
        }
        v
    });
    Ok(EmpiricalGram { variant, matrix, nonfinite_entries: nonfinite })
}

/// Builds the empirical matrix of a simulated trace.
pub fn build_gram(
    trace: &RegenerationTrace,
    kernel: &Kernel,
    variant: GramVariant,
) -> Result<EmpiricalGram, SpectralError> {
    gram_from_states(&trace.states, kernel, variant)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpectrumSource {
    Empirical { variant: GramVariant, n: usize },
    True,
    Matrix,
}

/// A computed spectrum, or a divergence flag with the max-|entry| lower bound
/// on the top eigenvalue when the underlying matrix had non-finite entries.
#[derive(Debug, Clone)]
pub struct SpectrumEstimate {
    /// Sorted nonincreasing; empty when divergent.
    pub eigenvalues: Vec<f64>,
    pub source: SpectrumSource,
    /// `Some(bound)` when the spectrum could not be computed; the absolute
    /// value of the top eigenvalue is at least `bound` (possibly +inf).
    pub divergent: Option<f64>,
}

impl SpectrumEstimate {
    pub fn is_divergent(&self) -> bool {
        self.divergent.is_some()
    }

    pub fn from_true(mut eigenvalues: Vec<f64>) -> Self {
        eigenvalues.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        Self { eigenvalues, source: SpectrumSource::True, divergent: None }
    }

    /// `rank,eigenvalue` rows.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new("rank,eigenvalue");
        for (i, &v) in self.eigenvalues.iter().enumerate() {
            t.push_row([i.to_string(), fmt_f64(v)]);
        }
        t
    }
}

/// Reads back a `rank,eigenvalue` table written by [`SpectrumEstimate::to_csv`].
pub fn spectrum_from_csv(text: &str) -> Option<Vec<f64>> {
    let mut lines = text.lines();
    if lines.next()? != "rank,eigenvalue" {
        return None;
    }
    lines.map(|l| crate::report::parse_f64(l.split(',').nth(1)?)).collect()
}

/// Spectrum of an empirical Gram matrix. A matrix with non-finite entries
/// yields a divergent estimate instead of an eigendecomposition.
pub fn spectrum_of_gram(gram: &EmpiricalGram) -> Result<SpectrumEstimate, SpectralError> {
    let source = SpectrumSource::Empirical { variant: gram.variant, n: gram.n() };
    if gram.nonfinite_entries > 0 {
        return Ok(SpectrumEstimate {
            eigenvalues: Vec::new(),
            source,
            divergent: Some(gram.max_abs_entry()),
        });
    }
    let eigenvalues = eigen::eig_sym(&gram.matrix)?;
    Ok(SpectrumEstimate { eigenvalues, source, divergent: None })
}

/// Full spectrum of a dense symmetric matrix, sorted nonincreasing.
pub fn eig_sym(matrix: &SymMatrix) -> Result<Vec<f64>, SpectralError> {
    Ok(eigen::eig_sym(matrix)?)
}

/// The δ₂ matching distance between two finite-support spectra.
///
/// Both inputs are padded with zeros to the combined length and sorted
/// nonincreasing; the ℓ₂ distance of the sorted sequences realizes the
/// infimum over matchings. Appending extra zeros to either argument leaves
/// the value unchanged exactly (zero additions are exact in floating point
/// and the summation is sequential).
pub fn delta2(a: &[f64], b: &[f64]) -> Result<f64, SpectralError> {
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(SpectralError::NonFiniteSpectrum);
    }
    let len = a.len() + b.len();
    let mut pa = vec![0.0; len];
    let mut pb = vec![0.0; len];
    pa[..a.len()].copy_from_slice(a);
    pb[..b.len()].copy_from_slice(b);
    pa.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
    pb.sort_by(|x, y| y.partial_cmp(x).expect("finite"));
    let mut acc = 0.0;
    for (x, y) in pa.iter().zip(&pb) {
        let d = x - y;
        acc += d * d;
    }
    Ok(acc.sqrt())
}

/// δ₂ between two spectrum estimates; divergent estimates have no finite
/// distance.
pub fn delta2_estimates(a: &SpectrumEstimate, b: &SpectrumEstimate) -> Result<f64, SpectralError> {
    if a.is_divergent() || b.is_divergent() {
        return Err(SpectralError::Divergent);
    }
    delta2(&a.eigenvalues, &b.eigenvalues)
}

/// Hilbert–Schmidt (Frobenius) distance between equal-shape matrices; the
/// Hoffman–Wielandt inequality `δ₂(λ(A), λ(B)) <= ‖A-B‖_HS` links it to δ₂.
pub fn hs_distance(a: &SymMatrix, b: &SymMatrix) -> Result<f64, SpectralError> {
    Ok(a.frobenius_distance(b)?)
}

/// Nonzero spectrum of the with-diagonal empirical matrix of a finite-rank
/// Mercer kernel, computed in the rank dimension.
///
/// With `A` the n×R matrix of columns `φ_k(X_i)/√n` and `K = diag(λ)`, the
/// empirical matrix factors as `A K Aᵀ`, whose nonzero spectrum equals that of
/// `K AᵀA` — computed here as the symmetric `G^{1/2} K G^{1/2}` with
/// `G = AᵀA`, valid for signed `λ` as well. The returned `R` values plus
/// `n - R` zeros match the dense spectrum; an oracle test pins the agreement.
pub fn finite_rank_tilde_spectrum(states: &[f64], mercer: &Mercer) -> Result<Vec<f64>, SpectralError> {
    let n = states.len();
    if n == 0 {
        return Err(SpectralError::EmptyTrace);
    }
    let r = mercer.rank();
    let scale = 1.0 / n as f64;
    // G = A^T A, the R x R Gram of the empirical feature columns
    let mut g = SymMatrix::zeros(r);
    for k in 0..r {
        for l in 0..=k {
            let mut acc = 0.0;
            for &x in states {
                acc += mercer.phi(k, x) * mercer.phi(l, x);
            }
            g.set_sym(k, l, acc * scale);
        }
    }
    // G^{1/2} via the spectral decomposition, clamping round-off negatives
    let (vals, vecs) = eigen::eig_sym_with_vectors(&g)?;
    let sq: Vec<f64> = vals.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut half = SymMatrix::zeros(r);
    for i in 0..r {
        for j in 0..=i {
            let mut acc = 0.0;
            for (k, s) in sq.iter().enumerate() {
                acc += s * vecs[k][i] * vecs[k][j];
            }
            half.set_sym(i, j, acc);
        }
    }
    // M = G^{1/2} K G^{1/2}
    let lambdas = mercer.lambdas();
    let mut m = SymMatrix::zeros(r);
    for i in 0..r {
        for j in 0..=i {
            let mut acc = 0.0;
            for (k, &lam) in lambdas.iter().enumerate() {
                acc += half.get(i, k) * lam * half.get(k, j);
            }
            m.set_sym(i, j, acc);
        }
    }
    Ok(eigen::eig_sym(&m)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{simulate, ChainSpec, Start};
    use crate::rng::RngStream;
    use proptest::prelude::*;

    fn states_trace(states: Vec<f64>) -> RegenerationTrace {
        let n = states.len();
        RegenerationTrace {
            states,
            bits: vec![0; n],
            regen_times: vec![],
            blocks: vec![],
            seed: 0,
            m: 1,
        }
    }

    #[test]
    fn gram_examples() {
        let t = states_trace(vec![1.0, 2.0]);
        let g = build_gram(&t, &Kernel::product_xy(), GramVariant::WithDiagonal).unwrap();
        assert_eq!(g.matrix.get(0, 0), 0.5);
        assert_eq!(g.matrix.get(0, 1), 1.0);
        assert_eq!(g.matrix.get(1, 1), 2.0);
        let s = spectrum_of_gram(&g).unwrap();
        assert!((s.eigenvalues[0] - 2.5).abs() < 1e-14);
        assert!(s.eigenvalues[1].abs() < 1e-14);

        let g0 = build_gram(&t, &Kernel::product_xy(), GramVariant::ZeroDiagonal).unwrap();
        assert_eq!(g0.matrix.get(0, 0), 0.0);
        assert_eq!(g0.matrix.get(1, 1), 0.0);
        let s0 = spectrum_of_gram(&g0).unwrap();
        assert!((s0.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s0.eigenvalues[1] + 1.0).abs() < 1e-14);

        let gz = build_gram(&t, &Kernel::zero(), GramVariant::WithDiagonal).unwrap();
        let sz = spectrum_of_gram(&gz).unwrap();
        assert!(sz.eigenvalues.iter().all(|&v| v == 0.0));

        assert!(matches!(
            gram_from_states(&[], &Kernel::zero(), GramVariant::WithDiagonal),
            Err(SpectralError::EmptyTrace)
        ));
    }

    #[test]
    fn with_minus_zero_diagonal_is_the_diagonal() {
        let t = states_trace(vec![0.2, 0.4, 0.9]);
        let k = Kernel::Gaussian { width: 0.1 };
        let a = build_gram(&t, &k, GramVariant::WithDiagonal).unwrap();
        let b = build_gram(&t, &k, GramVariant::ZeroDiagonal).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { k.eval(t.states[i], t.states[i]) / 3.0 } else { 0.0 };
                assert_eq!(a.matrix.get(i, j) - b.matrix.get(i, j), want);
            }
        }
    }

    #[test]
    fn delta2_examples() {
        assert_eq!(delta2(&[3.0, 1.0], &[3.0, 1.0]).unwrap(), 0.0);
        assert!((delta2(&[1.0, 0.5], &[1.0]).unwrap() - 0.5).abs() < 1e-15);
        // optimal matching pairs 2<->1, -1<->0, 0<->0
        assert!((delta2(&[2.0, -1.0], &[1.0]).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        assert!(matches!(delta2(&[f64::INFINITY], &[1.0]), Err(SpectralError::NonFiniteSpectrum)));
    }

    #[test]
    fn delta2_padding_invariance_is_exact() {
        let a = [2.0, -1.0, 0.25];
        let b = [1.5, 0.1];
        let base = delta2(&a, &b).unwrap();
        let mut aa = a.to_vec();
        aa.extend([0.0; 7]);
        let mut bb = b.to_vec();
        bb.extend([0.0; 3]);
        assert_eq!(delta2(&aa, &b).unwrap().to_bits(), base.to_bits());
        assert_eq!(delta2(&a, &bb).unwrap().to_bits(), base.to_bits());
        assert_eq!(delta2(&aa, &bb).unwrap().to_bits(), base.to_bits());
    }

    /// Exhaustive minimum over permutations of the zero-padded sequences.
    fn delta2_brute(a: &[f64], b: &[f64]) -> f64 {
        let len = a.len() + b.len();
        let mut pa = vec![0.0; len];
        let mut pb = vec![0.0; len];
        pa[..a.len()].copy_from_slice(a);
        pb[..b.len()].copy_from_slice(b);
        let mut idx: Vec<usize> = (0..len).collect();
        let mut best = f64::INFINITY;
        permute(&mut idx, 0, &mut |perm| {
            let cost: f64 = perm.iter().enumerate().map(|(i, &j)| (pa[i] - pb[j]).powi(2)).sum();
            best = best.min(cost);
        });
        best.sqrt()
    }

    fn permute(idx: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
        if k == idx.len() {
            visit(idx);
            return;
        }
        for i in k..idx.len() {
            idx.swap(k, i);
            permute(idx, k + 1, visit);
            idx.swap(k, i);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn delta2_matches_brute_force(
            a in proptest::collection::vec(-3.0f64..3.0, 1..4),
            b in proptest::collection::vec(-3.0f64..3.0, 1..4),
        ) {
            let fast = delta2(&a, &b).unwrap();
            let brute = delta2_brute(&a, &b);
            prop_assert!((fast - brute).abs() < 1e-12, "{fast} vs {brute}");
        }

        #[test]
        fn delta2_is_symmetric_and_triangular(
            a in proptest::collection::vec(-2.0f64..2.0, 1..5),
            b in proptest::collection::vec(-2.0f64..2.0, 1..5),
            c in proptest::collection::vec(-2.0f64..2.0, 1..5),
        ) {
            let ab = delta2(&a, &b).unwrap();
            let ba = delta2(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-13);
            let ac = delta2(&a, &c).unwrap();
            let cb = delta2(&c, &b).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }
    }

    #[test]
    fn eigensum_matches_trace() {
        let trace = simulate(&ChainSpec::Refresh, 200, Start::Point(0.5), 51).unwrap();
        let k = Kernel::CosineRank { lambdas: vec![1.0, 0.5, 0.25] };
        let g = build_gram(&trace, &k, GramVariant::WithDiagonal).unwrap();
        let s = spectrum_of_gram(&g).unwrap();
        let sum: f64 = s.eigenvalues.iter().sum();
        let tol = 1e-10 * g.n() as f64 * g.max_abs_entry();
        assert!((sum - g.matrix.trace()).abs() <= tol);
    }

    #[test]
    fn similarity_trick_matches_dense_spectrum() {
        let trace = simulate(&ChainSpec::Refresh, 300, Start::Point(0.5), 8).unwrap();
        let k = Kernel::CosineRank { lambdas: vec![1.0, 0.5, 0.25] };
        let dense = spectrum_of_gram(&build_gram(&trace, &k, GramVariant::WithDiagonal).unwrap()).unwrap();
        let fast = finite_rank_tilde_spectrum(&trace.states, &k.mercer().unwrap()).unwrap();
        let d = delta2(&dense.eigenvalues, &fast).unwrap();
        assert!(d < 1e-8, "similarity trick mismatch {d:.3e}");
    }

    #[test]
    fn diagonal_removal_bound() {
        let trace = simulate(&ChainSpec::Refresh, 200, Start::Point(0.5), 3).unwrap();
        let k = Kernel::Gaussian { width: 0.1 };
        let with = build_gram(&trace, &k, GramVariant::WithDiagonal).unwrap();
        let zero = build_gram(&trace, &k, GramVariant::ZeroDiagonal).unwrap();
        let d = delta2_estimates(&spectrum_of_gram(&with).unwrap(), &spectrum_of_gram(&zero).unwrap()).unwrap();
        let n = trace.len() as f64;
        let diag_mass: f64 = trace.states.iter().map(|&x| k.eval(x, x).powi(2)).sum::<f64>() / (n * n);
        assert!(d * d <= diag_mass + 1e-12, "{} vs {}", d * d, diag_mass);
    }

    #[test]
    fn divergent_gram_is_flagged_not_solved() {
        // a state small enough that (x^{-3/2})^2 overflows
        let t = states_trace(vec![1e-150, 0.5]);
        let g = build_gram(&t, &Kernel::DiagonalPower, GramVariant::WithDiagonal).unwrap();
        assert!(g.nonfinite_entries > 0);
        let s = spectrum_of_gram(&g).unwrap();
        assert!(s.is_divergent());
        assert_eq!(s.divergent, Some(f64::INFINITY));
        assert!(s.eigenvalues.is_empty());
        assert!(matches!(
            delta2_estimates(&s, &SpectrumEstimate::from_true(vec![0.0])),
            Err(SpectralError::Divergent)
        ));
        // zeroing the diagonal removes the blow-up entirely
        let g0 = build_gram(&t, &Kernel::DiagonalPower, GramVariant::ZeroDiagonal).unwrap();
        assert_eq!(g0.nonfinite_entries, 0);
    }

    #[test]
    fn spectrum_csv_round_trip() {
        let mut rng = RngStream::new(42, 0);
        let vals: Vec<f64> = (0..20).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let est = SpectrumEstimate::from_true(vals.clone());
        let bytes = est.to_csv().to_bytes();
        let back = spectrum_from_csv(std::str::from_utf8(&bytes).unwrap()).unwrap();
        let mut sorted = vals;
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        assert_eq!(back.len(), sorted.len());
        for (x, y) in back.iter().zip(&sorted) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
