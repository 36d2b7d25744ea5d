//! Dense symmetric matrices.
//!
//! Storage is a full row-major `Vec<f64>`; target sizes are desk scale
//! (n ≤ ~8000), so nothing sparse or packed is attempted.

use std::io::Write;

use thiserror::Error;

use crate::report::fmt_f64;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("dimension mismatch: {0}x{0} vs {1}x{1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix must have positive dimension")]
    Empty,
}

/// A dense real matrix stored row-major, used here for symmetric data.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    /// Builds a symmetric matrix by evaluating `f` on the lower triangle and
    /// mirroring, so symmetry is exact by construction.
    pub fn from_fn_symmetric(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets entry (i,j) and its mirror (j,i).
    pub fn set_sym(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    pub fn zero_diagonal(&mut self) {
        for i in 0..self.n {
            self.data[i * self.n + i] = 0.0;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn has_nonfinite(&self) -> bool {
        self.data.iter().any(|v| !v.is_finite())
    }

    /// Largest absolute asymmetry |a_ij - a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &SymMatrix) -> Result<f64, MatrixError> {
        if self.n != other.n {
            return Err(MatrixError::DimensionMismatch(self.n, other.n));
        }
        let mut acc = 0.0;
        for (a, b) in self.data.iter().zip(&other.data) {
            let d = a - b;
            acc += d * d;
        }
        Ok(acc.sqrt())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// y = A x
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.row(i).iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    /// Writes `i,j,value` triplets, one row per entry, floats at 17 significant
    /// digits.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        writeln!(w, "i,j,value")?;
        for i in 0..self.n {
            for j in 0..self.n {
                writeln!(w, "{},{},{}", i, j, fmt_f64(self.get(i, j)))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_construction_and_access() {
        let m = SymMatrix::from_fn_symmetric(3, |i, j| (i + 2 * j) as f64);
        assert_eq!(m.get(2, 1), m.get(1, 2));
        assert_eq!(m.asymmetry(), 0.0);
        assert_eq!(m.trace(), 0.0 + 3.0 + 6.0);
    }

    #[test]
    fn frobenius_examples() {
        let a = SymMatrix::from_fn_symmetric(2, |i, j| if i == j { (i + 1) as f64 } else { 0.0 });
        let b = SymMatrix::from_fn_symmetric(2, |i, j| if i == j { (2 - i) as f64 } else { 0.0 });
        assert_eq!(a.frobenius_distance(&a).unwrap(), 0.0);
        assert!((a.frobenius_distance(&b).unwrap() - 2.0f64.sqrt()).abs() < 1e-15);
        let c = SymMatrix::zeros(3);
        assert!(matches!(a.frobenius_distance(&c), Err(MatrixError::DimensionMismatch(2, 3))));
    }

    #[test]
    fn zero_diagonal_only_touches_diagonal() {
        let mut m = SymMatrix::from_fn_symmetric(3, |i, j| (i * 3 + j + 1) as f64);
        let off = m.get(2, 0);
        m.zero_diagonal();
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.get(2, 0), off);
    }
}
