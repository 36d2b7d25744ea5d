//! Gauss–Legendre quadrature on (0,1) and the Nyström spectrum oracle.
//!
//! The Nyström route discretizes the integral operator as the symmetrically
//! weighted matrix `[√w_i h(t_i,t_j) √w_j]` over quadrature nodes, with node
//! weights tilted by the stationary density and renormalized. Convergence is
//! certified by recomputing at twice the order and requiring the δ₂ change to
//! fall below [`NYSTROM_TOL`].

use thiserror::Error;

use crate::chain::Stationary;
use crate::eigen::{self, EigenError};
use crate::kernel::Kernel;
use crate::matrix::SymMatrix;
use crate::spectral;

/// δ₂ agreement required between successive quadrature orders.
pub const NYSTROM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature order must be at least 1")]
    ZeroOrder,
    #[error("nystrom spectrum not converged at order {order}: delta2 change {delta:.3e} vs doubled order")]
    NonConvergence { order: usize, delta: f64 },
    #[error(transparent)]
    Eigen(#[from] EigenError),
}

/// Gauss–Legendre nodes and weights on (0,1); weights sum to 1.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1);
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Newton iteration on P_n, starting from the Chebyshev-like guess.
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut pp;
        loop {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j as f64 + 1.0) * z * p2 - j as f64 * p3) / (j as f64 + 1.0);
            }
            pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        // map (-1,1) -> (0,1); halve the weights accordingly
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        let w = 1.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫ f dπ` by Gauss–Legendre with density tilting.
pub fn pi_integral(f: impl Fn(f64) -> f64, pi: &Stationary, order: usize) -> f64 {
    let (t, w) = weighted_nodes(pi, order);
    t.iter().zip(&w).map(|(&x, &wx)| wx * f(x)).sum()
}

/// `∫∫ f dπ⊗dπ`.
pub fn pi2_integral(f: impl Fn(f64, f64) -> f64, pi: &Stationary, order: usize) -> f64 {
    let (t, w) = weighted_nodes(pi, order);
    let mut acc = 0.0;
    for (&x, &wx) in t.iter().zip(&w) {
        for (&y, &wy) in t.iter().zip(&w) {
            acc += wx * wy * f(x, y);
        }
    }
    acc
}

/// Nodes with weights tilted by the (possibly unnormalized) stationary density
/// and renormalized to sum to 1.
fn weighted_nodes(pi: &Stationary, order: usize) -> (Vec<f64>, Vec<f64>) {
    let (t, mut w) = gauss_legendre(order);
    for (wi, &ti) in w.iter_mut().zip(&t) {
        *wi *= pi.density(ti);
    }
    let z: f64 = w.iter().sum();
    for wi in w.iter_mut() {
        *wi /= z;
    }
    (t, w)
}

fn nystrom_matrix(kernel: &Kernel, pi: &Stationary, order: usize) -> SymMatrix {
    let (t, w) = weighted_nodes(pi, order);
    let sw: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    SymMatrix::from_fn_symmetric(order, |i, j| sw[i] * kernel.eval(t[i], t[j]) * sw[j])
}

/// Spectrum of the integral operator by the Nyström oracle.
///
/// Computes eigenvalues at `order` and `2·order`; errors if the two disagree
/// by more than [`NYSTROM_TOL`] in δ₂, otherwise returns the doubled-order
/// spectrum (sorted nonincreasing).
pub fn nystrom_spectrum(kernel: &Kernel, pi: &Stationary, order: usize) -> Result<Vec<f64>, QuadError> {
    if order == 0 {
        return Err(QuadError::ZeroOrder);
    }
    let coarse = eigen::eig_sym(&nystrom_matrix(kernel, pi, order))?;
    let fine = eigen::eig_sym(&nystrom_matrix(kernel, pi, 2 * order))?;
    let delta = spectral::delta2(&coarse, &fine).expect("finite quadrature spectra");
    if delta >= NYSTROM_TOL {
        return Err(QuadError::NonConvergence { order, delta });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::TargetDensity;

    #[test]
    fn nodes_and_weights_basics() {
        for order in [1usize, 2, 5, 16, 65] {
            let (t, w) = gauss_legendre(order);
            assert_eq!(t.len(), order);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "order {order}: weight sum {s}");
            assert!(t.iter().all(|&x| x > 0.0 && x < 1.0));
            // symmetry about 1/2
            for i in 0..order {
                assert!((t[i] + t[order - 1 - i] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn polynomials_integrate_exactly() {
        // order n is exact through degree 2n-1
        let (t, w) = gauss_legendre(8);
        for k in 0..16u32 {
            let got: f64 = t.iter().zip(&w).map(|(&x, &wx)| wx * x.powi(k as i32)).sum();
            let want = 1.0 / (k as f64 + 1.0);
            assert!((got - want).abs() < 1e-14, "x^{k}: {got} vs {want}");
        }
    }

    #[test]
    fn beta_density_normalizes() {
        let pi = Stationary::Unnormalized(TargetDensity::Beta { a: 2.0, b: 2.0 });
        let mean = pi_integral(|x| x, &pi, 32);
        assert!((mean - 0.5).abs() < 1e-12);
        let var = pi_integral(|x| (x - 0.5) * (x - 0.5), &pi, 32);
        assert!((var - 0.05).abs() < 1e-12, "beta(2,2) variance {var}");
    }

    #[test]
    fn nystrom_converges_for_smooth_kernels() {
        let lam = nystrom_spectrum(&Kernel::Gaussian { width: 0.1 }, &Stationary::Uniform01, 64).unwrap();
        assert!((lam[0] - 0.480111430216).abs() < 1e-9);
        // rank-3 cosine kernel: quadrature route reproduces the analytic one
        let k = Kernel::CosineRank { lambdas: vec![1.0, 0.5, 0.25] };
        let lam = nystrom_spectrum(&k, &Stationary::Uniform01, 64).unwrap();
        assert!((lam[0] - 1.0).abs() < 1e-10);
        assert!((lam[1] - 0.5).abs() < 1e-10);
        assert!((lam[2] - 0.25).abs() < 1e-10);
        assert!(lam[3].abs() < 1e-10);
    }

    #[test]
    fn nystrom_flags_nonconvergence() {
        // the diagonal power kernel is quadrature-hostile: the weighted matrix
        // is diag(w_i t_i^{-3}) and keeps changing with the order
        let err = nystrom_spectrum(&Kernel::DiagonalPower, &Stationary::Uniform01, 16);
        assert!(matches!(err, Err(QuadError::NonConvergence { .. })));
    }
}
