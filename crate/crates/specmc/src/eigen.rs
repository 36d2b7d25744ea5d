//! Dense symmetric eigensolvers.
//!
//! The production path wraps LAPACK (`dsyevd` / `dsyevd_2stage`, values only,
//! and `dsyevd` with vectors on request) linked from the system OpenBLAS. A
//! hand-rolled cyclic Jacobi solver is kept alongside as an independent
//! cross-check route for small matrices; oracle tests compare the two and also
//! check LAPACK against a characteristic-polynomial root finder.
//!
//! Eigenvalues are always returned sorted nonincreasing. Identical input
//! produces identical output: the backend is single-threaded and the input is
//! validated, copied, and handed to a fixed routine.

use std::sync::Once;

use openblas_src as _;
use thiserror::Error;

use crate::matrix::SymMatrix;

/// Relative asymmetry accepted before an input is rejected as non-symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Threshold above which the two-stage reduction is used (it only pays off
/// once the matrix stops fitting in cache).
const TWO_STAGE_MIN_N: usize = 128;

#[derive(Debug, Error)]
pub enum EigenError {
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is not symmetric (relative asymmetry {0:.3e} > {SYMMETRY_TOL:.0e})")]
    NotSymmetric(f64),
    #[error("matrix must have positive dimension")]
    Empty,
    #[error("eigensolver failed to converge (backend info = {0})")]
    NoConvergence(i32),
    #[error("jacobi sweep cap reached with off-diagonal mass {0:.3e}")]
    JacobiCap(f64),
}

extern "C" {
    // Two-stage symmetric eigenvalue reduction; values-only. Not declared by
    // lapack-sys, present in LAPACK >= 3.7 (the system OpenBLAS embeds 3.9+).
    fn dsyevd_2stage_(
        jobz: *const std::ffi::c_char,
        uplo: *const std::ffi::c_char,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        w: *mut f64,
        work: *mut f64,
        lwork: *const i32,
        iwork: *mut i32,
        liwork: *const i32,
        info: *mut i32,
    );
}

static BLAS_TARGET: Once = Once::new();

/// Pins the OpenBLAS kernel target before the first call.
///
/// The runtime-dispatched Cooperlake kernels in the system OpenBLAS return
/// wrong results from the two-stage reduction; SkylakeX/Haswell kernels are
/// correct on the same hardware. An explicit `OPENBLAS_CORETYPE` in the
/// environment is respected.
fn ensure_blas_target() {
    BLAS_TARGET.call_once(|| {
        if std::env::var_os("OPENBLAS_CORETYPE").is_some() {
            return;
        }
        #[cfg(target_arch = "x86_64")]
        {
            if is_x86_feature_detected!("avx512f") {
                std::env::set_var("OPENBLAS_CORETYPE", "SKYLAKEX");
            } else if is_x86_feature_detected!("avx2") {
                std::env::set_var("OPENBLAS_CORETYPE", "HASWELL");
            }
        }
    });
}

fn validate(a: &SymMatrix) -> Result<(), EigenError> {
    if a.n() == 0 {
        return Err(EigenError::Empty);
    }
    if a.has_nonfinite() {
        return Err(EigenError::NonFinite);
    }
    let asym = a.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(EigenError::NotSymmetric(asym));
    }
    Ok(())
}

fn sort_desc(w: &mut [f64]) {
    w.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
}

/// Full spectrum of a symmetric matrix, sorted nonincreasing.
pub fn eig_sym(a: &SymMatrix) -> Result<Vec<f64>, EigenError> {
    validate(a)?;
    ensure_blas_target();
    let n = a.n();
    let ni = n as i32;
    let mut buf = a.data().to_vec();
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;
    let jobz = b'N' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    unsafe {
        if n >= TWO_STAGE_MIN_N {
            let (mut wq, mut iq) = ([0.0f64], [0i32]);
            let (lq, liq) = (-1i32, -1i32);
            dsyevd_2stage_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), wq.as_mut_ptr(), &lq, iq.as_mut_ptr(), &liq, &mut info);
            let lwork = wq[0] as i32;
            let liwork = iq[0];
            let mut work = vec![0.0f64; lwork as usize];
            let mut iwork = vec![0i32; liwork as usize];
            dsyevd_2stage_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info);
        } else {
            let (mut wq, mut iq) = ([0.0f64], [0i32]);
            let (lq, liq) = (-1i32, -1i32);
            lapack_sys::dsyevd_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), wq.as_mut_ptr(), &lq, iq.as_mut_ptr(), &liq, &mut info);
            let lwork = wq[0] as i32;
            let liwork = iq[0];
            let mut work = vec![0.0f64; lwork as usize];
            let mut iwork = vec![0i32; liwork as usize];
            lapack_sys::dsyevd_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info);
        }
    }
    if info != 0 {
        return Err(EigenError::NoConvergence(info));
    }
    sort_desc(&mut w);
    Ok(w)
}

/// Spectrum plus orthonormal eigenvectors (columns of the returned matrix,
/// ordered to match the nonincreasing eigenvalues).
pub fn eig_sym_with_vectors(a: &SymMatrix) -> Result<(Vec<f64>, Vec<Vec<f64>>), EigenError> {
    validate(a)?;
    ensure_blas_target();
    let n = a.n();
    let ni = n as i32;
    let mut buf = a.data().to_vec();
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;
    unsafe {
        let (mut wq, mut iq) = ([0.0f64], [0i32]);
        let (lq, liq) = (-1i32, -1i32);
        lapack_sys::dsyevd_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), wq.as_mut_ptr(), &lq, iq.as_mut_ptr(), &liq, &mut info);
        let lwork = wq[0] as i32;
        let liwork = iq[0];
        let mut work = vec![0.0f64; lwork as usize];
        let mut iwork = vec![0i32; liwork as usize];
        lapack_sys::dsyevd_(&jobz, &uplo, &ni, buf.as_mut_ptr(), &ni, w.as_mut_ptr(), work.as_mut_ptr(), &lwork, iwork.as_mut_ptr(), &liwork, &mut info);
    }
    if info != 0 {
        return Err(EigenError::NoConvergence(info));
    }
    // LAPACK returns ascending eigenvalues with eigenvectors in the columns of
    // the (column-major) overwritten input; reverse both together.
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| (w[k], (0..n).map(|i| buf[k * n + i]).collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite eigenvalues"));
    let vals = pairs.iter().map(|p| p.0).collect();
    let vecs = pairs.into_iter().map(|p| p.1).collect();
    Ok((vals, vecs))
}

/// Cyclic Jacobi eigenvalues, the independent small-matrix route.
///
/// Rotations sweep the strict upper triangle until the off-diagonal mass falls
/// below `1e-12` relative to the Frobenius norm. The sweep cap is `64·n`.
pub fn jacobi_eigvals(a: &SymMatrix) -> Result<Vec<f64>, EigenError> {
    validate(a)?;
    let n = a.n();
    let mut m = a.clone();
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let tol = 1e-12 * norm;
    let off = |m: &SymMatrix| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += 2.0 * m.get(i, j) * m.get(i, j);
            }
        }
        s.sqrt()
    };
    let max_sweeps = 64 * n;
    for _ in 0..max_sweeps {
        if off(&m) <= tol {
            let mut w: Vec<f64> = (0..n).map(|i| m.get(i, i)).collect();
            sort_desc(&mut w);
            return Ok(w);
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = m.get(p, p);
                let aqq = m.get(q, q);
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.get(k, p);
                    let akq = m.get(k, q);
                    m.set_sym(k, p, c * akp - s * akq);
                    m.set_sym(k, q, s * akp + c * akq);
                }
                let new_pp = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                let new_qq = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                m.set_sym(p, p, new_pp);
                m.set_sym(q, q, new_qq);
                m.set_sym(p, q, 0.0);
            }
        }
    }
    Err(EigenError::JacobiCap(off(&m)))
}
