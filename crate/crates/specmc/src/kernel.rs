//! Symmetric kernels on (0,1): evaluation, tensor-product majorants, Mercer
//! expansions, feature maps, and reference spectra of the associated integral
//! operator.
//!
//! Built-in families:
//!
//! * [`Kernel::CosineRank`] — the finite-rank Mercer kernel
//!   `h(x,y) = Σ_k λ_k · 2 cos(kπx) cos(kπy)`; the functions `√2·cos(kπx)`
//!   are orthonormal in `L₂(Uniform(0,1))`, so the operator spectrum is the
//!   `λ` sequence itself.
//! * [`Kernel::Gaussian`] — `exp(-(x-y)²/width)`; spectrum via the quadrature
//!   (Nyström) oracle.
//! * [`Kernel::Polynomial`] — `(xy + c)^d` with `c ≥ 0`.
//! * [`Kernel::DiagonalPower`] — `h(x,x) = x^{-3}` on the exact floating-point
//!   diagonal and `0` elsewhere. As an operator on `L₂(π)` with absolutely
//!   continuous `π` this is the zero operator; its empirical matrices still
//!   blow up on chains that repeat states exactly. The diagonal is computed as
//!   `(x^{-3/2})²` so the tensor majorant `F(x) = x^{-3/2}` bounds it exactly
//!   in floating point. Note `∫ F² dπ = ∫ x^{-3} dx` diverges: no
//!   square-integrable tensor majorant exists for this kernel.
//! * [`Kernel::Constant`] — `h ≡ c`, a rank-one operator with eigenvalue `c`.

use thiserror::Error;

use crate::chain::Stationary;
use crate::quad::{self, QuadError};
use crate::rng::{RngStream, VALIDATION_STREAM};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel `{0}` has no Mercer expansion")]
    NoMercer(String),
    #[error("feature map undefined: eigenvalue {0} is negative")]
    NegativeEigenvalue(f64),
    #[error("kernel `{0}` declares no majorant")]
    NoMajorant(String),
    #[error("kernel `{0}` has neither an analytic spectrum nor a quadrature path")]
    NoSpectrumPath(String),
    #[error(transparent)]
    Quadrature(#[from] QuadError),
    #[error("invalid kernel parameter: {0}")]
    InvalidParameter(String),
}

/// A symmetric measurable kernel on (0,1) × (0,1).
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    /// `Σ_k λ_k · 2 cos(kπx) cos(kπy)`, `k = 1..=R`.
    CosineRank { lambdas: Vec<f64> },
    /// `exp(-(x-y)² / width)`.
    Gaussian { width: f64 },
    /// `(xy + offset)^degree`.
    Polynomial { offset: f64, degree: u32 },
    /// Zero off the diagonal, `x^{-3}` on it.
    DiagonalPower,
    /// `h ≡ value`.
    Constant { value: f64 },
}

/// Eigenfunction family of a Mercer expansion; functions are tabulated by
/// family name, orthonormal in `L₂(Uniform(0,1))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MercerFamily {
    /// `φ_i(x) = √2 cos((i+1)πx)`.
    Cosine,
    /// The single constant function `φ_0 ≡ 1`.
    ConstantOne,
}

/// A (truncated) Mercer expansion `h(x,y) = Σ λ_i φ_i(x) φ_i(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mercer {
    lambdas: Vec<f64>,
    family: MercerFamily,
}

impl Mercer {
    pub fn rank(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn phi(&self, i: usize, x: f64) -> f64 {
        match self.family {
            MercerFamily::Cosine => std::f64::consts::SQRT_2 * ((i + 1) as f64 * std::f64::consts::PI * x).cos(),
            MercerFamily::ConstantOne => 1.0,
        }
    }

    pub fn all_nonnegative(&self) -> bool {
        self.lambdas.iter().all(|&l| l >= 0.0)
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::CosineRank { lambdas } => write!(f, "cosine_rank{}", lambdas.len()),
            Kernel::Gaussian { width } => write!(f, "gaussian_w{width}"),
            Kernel::Polynomial { offset, degree } => write!(f, "poly_c{offset}_d{degree}"),
            Kernel::DiagonalPower => write!(f, "diagonal_power"),
            Kernel::Constant { value } => write!(f, "constant_{value}"),
        }
    }
}

impl Kernel {
    /// The kernel `h(x,y) = xy`.
    pub fn product_xy() -> Self {
        Kernel::Polynomial { offset: 0.0, degree: 1 }
    }

    pub fn zero() -> Self {
        Kernel::Constant { value: 0.0 }
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        match self {
            Kernel::CosineRank { lambdas } => {
                if lambdas.is_empty() {
                    return Err(KernelError::InvalidParameter("cosine kernel needs at least one eigenvalue".into()));
                }
                if lambdas.windows(2).any(|w| w[1].abs() > w[0].abs()) {
                    return Err(KernelError::InvalidParameter(
                        "cosine eigenvalues must be nonincreasing in absolute value".into(),
                    ));
                }
            }
            Kernel::Gaussian { width } => {
                if !(*width > 0.0) {
                    return Err(KernelError::InvalidParameter(format!("gaussian width must be positive, got {width}")));
                }
            }
            Kernel::Polynomial { offset, degree } => {
                if !(*offset >= 0.0) {
                    return Err(KernelError::InvalidParameter(format!("polynomial offset must be >= 0, got {offset}")));
                }
                if *degree == 0 {
                    return Err(KernelError::InvalidParameter("polynomial degree must be >= 1".into()));
                }
            }
            Kernel::DiagonalPower | Kernel::Constant { .. } => {}
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Kernel::CosineRank { lambdas } => {
                let mut s = 0.0;
                for (k, &lam) in lambdas.iter().enumerate() {
                    let kk = (k + 1) as f64 * std::f64::consts::PI;
                    s += lam * (2.0 * (kk * x).cos() * (kk * y).cos());
                }
                s
            }
            Kernel::Gaussian { width } => (-(x - y) * (x - y) / width).exp(),
            Kernel::Polynomial { offset, degree } => (x * y + offset).powi(*degree as i32),
            Kernel::DiagonalPower => {
                if x == y {
                    let f = x.powf(-1.5);
                    f * f
                } else {
                    0.0
                }
            }
            Kernel::Constant { value } => *value,
        }
    }

    /// Tensor-product majorant `F` with `|h(x,y)| <= F(x) F(y)` pointwise.
    ///
    /// The inequality must survive floating point with no tolerance, so each
    /// family picks an `F` whose product is computed on the same route as `h`
    /// (the `xy` and diagonal kernels, where equality is exact) or keeps a
    /// strict margin on the open square (constant sup bounds elsewhere).
    pub fn majorant(&self, x: f64) -> Option<f64> {
        match self {
            Kernel::CosineRank { lambdas } => {
                Some((2.0 * lambdas.iter().map(|l| l.abs()).sum::<f64>()).sqrt())
            }
            Kernel::Gaussian { .. } => Some(1.0),
            Kernel::Polynomial { offset, degree } => {
                if *offset == 0.0 && *degree == 1 {
                    Some(x)
                } else {
                    Some((1.0 + offset).powf(*degree as f64 / 2.0))
                }
            }
            Kernel::DiagonalPower => Some(x.powf(-1.5)),
            Kernel::Constant { value } => {
                // nudge up so F*F clears |value| after both rounding steps
                Some(if *value == 0.0 { 0.0 } else { value.abs().sqrt().next_up() })
            }
        }
    }

    pub fn mercer(&self) -> Option<Mercer> {
        match self {
            Kernel::CosineRank { lambdas } => {
                Some(Mercer { lambdas: lambdas.clone(), family: MercerFamily::Cosine })
            }
            Kernel::Constant { value } if *value != 0.0 => {
                Some(Mercer { lambdas: vec![*value], family: MercerFamily::ConstantOne })
            }
            _ => None,
        }
    }

    /// `sup_x h(x,x)` over (0,1) when finite and the kernel is positive.
    pub fn sup_diag(&self) -> Option<f64> {
        match self {
            Kernel::CosineRank { lambdas } => {
                if lambdas.iter().all(|&l| l >= 0.0) {
                    Some(2.0 * lambdas.iter().sum::<f64>())
                } else {
                    None
                }
            }
            Kernel::Gaussian { .. } => Some(1.0),
            Kernel::Polynomial { offset, degree } => Some((1.0 + offset).powi(*degree as i32)),
            Kernel::DiagonalPower => None,
            Kernel::Constant { value } => {
                if *value >= 0.0 {
                    Some(*value)
                } else {
                    None
                }
            }
        }
    }

    /// Whether every finite sample Gram matrix of this kernel is positive
    /// semidefinite.
    pub fn positive(&self) -> bool {
        match self {
            Kernel::CosineRank { lambdas } => lambdas.iter().all(|&l| l >= 0.0),
            Kernel::Gaussian { .. } => true,
            Kernel::Polynomial { .. } => true,
            Kernel::DiagonalPower => true,
            Kernel::Constant { value } => *value >= 0.0,
        }
    }

    /// Reference spectrum of the integral operator on `L₂(π)`, sorted
    /// nonincreasing, zero-padded conceptually.
    ///
    /// Kernels with a Mercer expansion under Uniform(0,1) use the analytic
    /// path; the diagonal kernel is the zero operator for any absolutely
    /// continuous `π`; everything else goes through the Gauss–Legendre Nyström
    /// oracle with a doubled-order convergence check.
    pub fn true_spectrum(&self, pi: &Stationary, quadrature_order: usize) -> Result<Vec<f64>, KernelError> {
        self.validate()?;
        if matches!(self, Kernel::DiagonalPower) {
            return Ok(Vec::new());
        }
        if *pi == Stationary::Uniform01 {
            if let Some(m) = self.mercer() {
                let mut lam = m.lambdas().to_vec();
                lam.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
                return Ok(lam);
            }
        }
        Ok(quad::nystrom_spectrum(self, pi, quadrature_order)?)
    }
}

/// The feature map `x ↦ (√λ_i φ_i(x))_i` of a positive Mercer kernel;
/// `⟨eval(x), eval(y)⟩ = h(x,y)` and `‖eval(x)‖² = h(x,x)` up to truncation.
#[derive(Debug, Clone)]
pub struct FeatureMap {
    mercer: Mercer,
    sqrt_lambdas: Vec<f64>,
}

impl FeatureMap {
    pub fn new(kernel: &Kernel) -> Result<Self, KernelError> {
        let mercer = kernel.mercer().ok_or_else(|| KernelError::NoMercer(kernel.to_string()))?;
        if let Some(&neg) = mercer.lambdas().iter().find(|&&l| l < 0.0) {
            return Err(KernelError::NegativeEigenvalue(neg));
        }
        let sqrt_lambdas = mercer.lambdas().iter().map(|l| l.sqrt()).collect();
        Ok(Self { mercer, sqrt_lambdas })
    }

    pub fn rank(&self) -> usize {
        self.mercer.rank()
    }

    pub fn embed(&self, x: f64) -> Vec<f64> {
        self.sqrt_lambdas.iter().enumerate().map(|(i, s)| s * self.mercer.phi(i, x)).collect()
    }
}

/// Outcome of sampling the pointwise majorant inequality.
#[derive(Debug, Clone, Copy)]
pub struct MajorantReport {
    pub pairs: usize,
    /// `max |h(x,y)| - F(x)F(y)` over sampled pairs; a pass is `<= 0` exactly.
    pub max_violation: f64,
    pub pass: bool,
}

/// Samples random pairs (plus their diagonal partners, so kernels supported on
/// the diagonal are exercised) and reports the worst violation of
/// `|h(x,y)| <= F(x)F(y)`.
pub fn validate_majorant(kernel: &Kernel, sample_pairs: usize, seed: u64) -> Result<MajorantReport, KernelError> {
    if kernel.majorant(0.5).is_none() {
        return Err(KernelError::NoMajorant(kernel.to_string()));
    }
    let mut rng = RngStream::new(seed, VALIDATION_STREAM);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..sample_pairs {
        let x = rng.uniform();
        let y = rng.uniform();
        let fx = kernel.majorant(x).expect("checked above");
        let fy = kernel.majorant(y).expect("checked above");
        worst = worst.max(kernel.eval(x, y).abs() - fx * fy);
        worst = worst.max(kernel.eval(x, x).abs() - fx * fx);
    }
    Ok(MajorantReport { pairs: sample_pairs, max_violation: worst, pass: worst <= 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;

    fn cosine3() -> Kernel {
        Kernel::CosineRank { lambdas: vec![1.0, 0.5, 0.25] }
    }

    #[test]
    fn symmetry_is_exact_on_random_pairs() {
        let kernels = [
            cosine3(),
            Kernel::Gaussian { width: 0.1 },
            Kernel::Polynomial { offset: 0.5, degree: 3 },
            Kernel::DiagonalPower,
            Kernel::product_xy(),
        ];
        let mut rng = RngStream::new(2024, 0);
        for _ in 0..10_000 {
            let (x, y) = (rng.uniform(), rng.uniform());
            for k in &kernels {
                assert_eq!(k.eval(x, y).to_bits(), k.eval(y, x).to_bits(), "{k}");
            }
        }
    }

    #[test]
    fn mercer_orthonormality_under_uniform_pi() {
        let m = cosine3().mercer().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let val = quad::pi_integral(|x| m.phi(i, x) * m.phi(j, x), &Stationary::Uniform01, 64);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((val - expect).abs() < 1e-8, "({i},{j}) -> {val}");
            }
        }
    }

    #[test]
    fn mercer_reconstruction_is_pointwise() {
        let k = cosine3();
        let m = k.mercer().unwrap();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..1000 {
            let (x, y) = (rng.uniform(), rng.uniform());
            let rebuilt: f64 = (0..m.rank()).map(|i| m.lambdas()[i] * m.phi(i, x) * m.phi(i, y)).sum();
            assert!((rebuilt - k.eval(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn majorant_examples() {
        // h = xy with F(x) = x: equality case, slack exactly 0
        let r = validate_majorant(&Kernel::product_xy(), 1000, 7).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_violation, 0.0);
        // gaussian with F = 1
        let r = validate_majorant(&Kernel::Gaussian { width: 0.1 }, 1000, 7).unwrap();
        assert!(r.pass);
        // diagonal kernel with F(x) = x^{-3/2}: passes on and off the diagonal
        let r = validate_majorant(&Kernel::DiagonalPower, 1000, 7).unwrap();
        assert!(r.pass, "violation {}", r.max_violation);
        // ... but F is not square-integrable: pi F^2 = ∫ x^{-3} dx diverges,
        // visible as quadrature blow-up with order
        let a = quad::pi_integral(|x| x.powf(-3.0), &Stationary::Uniform01, 32);
        let b = quad::pi_integral(|x| x.powf(-3.0), &Stationary::Uniform01, 64);
        assert!(b > 2.0 * a && b > 1e4);
        // cosine and polynomial majorants hold on samples
        for k in [cosine3(), Kernel::Polynomial { offset: 0.5, degree: 3 }] {
            let r = validate_majorant(&k, 10_000, 11).unwrap();
            assert!(r.pass, "{k}: violation {}", r.max_violation);
        }
    }

    #[test]
    fn feature_map_examples() {
        // rank one: h(x,y) = 2 cos(pi x) cos(pi y)
        let k = Kernel::CosineRank { lambdas: vec![1.0] };
        let fm = FeatureMap::new(&k).unwrap();
        let e0 = fm.embed(0.0);
        assert!((e0[0] - std::f64::consts::SQRT_2).abs() < 1e-15);
        let dot: f64 = e0.iter().map(|v| v * v).sum();
        assert!((dot - k.eval(0.0, 0.0)).abs() < 1e-15);
        // phi vanishes at x = 1/2 for k = 1
        assert!(fm.embed(0.5)[0].abs() < 1e-15);
        // inner products reproduce h to truncation accuracy
        let k3 = cosine3();
        let fm3 = FeatureMap::new(&k3).unwrap();
        let mut rng = RngStream::new(9, 0);
        for _ in 0..200 {
            let (x, y) = (rng.uniform(), rng.uniform());
            let dot: f64 = fm3.embed(x).iter().zip(fm3.embed(y)).map(|(a, b)| a * b).sum();
            assert!((dot - k3.eval(x, y)).abs() < 1e-12);
        }
        // negative eigenvalues are rejected
        let bad = Kernel::CosineRank { lambdas: vec![1.0, -0.5] };
        assert!(matches!(FeatureMap::new(&bad), Err(KernelError::NegativeEigenvalue(_))));
        // kernels without mercer data are rejected
        assert!(matches!(FeatureMap::new(&Kernel::Gaussian { width: 0.1 }), Err(KernelError::NoMercer(_))));
    }

    #[test]
    fn true_spectrum_examples() {
        let lam = cosine3().true_spectrum(&Stationary::Uniform01, 64).unwrap();
        assert_eq!(lam, vec![1.0, 0.5, 0.25]);
        let z = Kernel::zero().true_spectrum(&Stationary::Uniform01, 64).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        assert!(Kernel::DiagonalPower.true_spectrum(&Stationary::Uniform01, 64).unwrap().is_empty());
        // gaussian via the quadrature oracle; leading eigenvalue pinned by an
        // independent quadrature implementation
        let g = Kernel::Gaussian { width: 0.1 }.true_spectrum(&Stationary::Uniform01, 64).unwrap();
        assert!((g[0] - 0.480111430216).abs() < 1e-9, "leading {}", g[0]);
    }

    #[test]
    fn gram_positivity_on_random_points() {
        use crate::matrix::SymMatrix;
        let mut rng = RngStream::new(77, 0);
        for k in [cosine3(), Kernel::Gaussian { width: 0.1 }, Kernel::Polynomial { offset: 0.5, degree: 2 }] {
            let pts: Vec<f64> = (0..10).map(|_| rng.uniform()).collect();
            let gram = SymMatrix::from_fn_symmetric(10, |i, j| k.eval(pts[i], pts[j]));
            let w = crate::eigen::eig_sym(&gram).unwrap();
            assert!(w[9] >= -1e-10, "{k}: min eigenvalue {}", w[9]);
        }
    }

    #[test]
    fn squared_kernel_mass_bounded_by_majorant_mass() {
        // pi^{x2} h^2 <= (pi F^2)^2 for kernels with integrable F^2
        for k in [cosine3(), Kernel::Gaussian { width: 0.1 }, Kernel::product_xy()] {
            let h2 = quad::pi2_integral(|x, y| k.eval(x, y).powi(2), &Stationary::Uniform01, 64);
            let f2 = quad::pi_integral(|x| k.majorant(x).unwrap().powi(2), &Stationary::Uniform01, 64);
            assert!(h2 <= f2 * f2 + 1e-10, "{k}: {h2} vs {}", f2 * f2);
        }
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        assert!(Kernel::Gaussian { width: 0.0 }.validate().is_err());
        assert!(Kernel::Polynomial { offset: -1.0, degree: 2 }.validate().is_err());
        assert!(Kernel::CosineRank { lambdas: vec![0.5, 1.0] }.validate().is_err());
        assert!(Kernel::CosineRank { lambdas: vec![] }.validate().is_err());
    }
}
