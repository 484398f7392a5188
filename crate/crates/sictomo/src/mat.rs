//! Dense complex matrices at the fixed dimensions 2, 4 and 8.
//!
//! Everything the estimation pipeline touches is a square complex matrix of
//! one of these sizes, so no general-N linear algebra is needed. Values are
//! immutable after construction and all operations are pure functions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance for the unitarity check in [`ComplexMat::checked_unitary`].
pub const UNITARY_TOL: f64 = 1e-12;
/// Tolerance for the Hermiticity check in [`ComplexMat::checked_hermitian`].
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Two eigenvalues closer than this are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

const SUPPORTED_DIMS: [usize; 3] = [2, 4, 8];

/// Dense square complex matrix of dimension 2, 4 or 8, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMat {
    dim: usize,
    data: Vec<Complex64>,
}

fn check_dim(dim: usize) -> Result<()> {
    if SUPPORTED_DIMS.contains(&dim) {
        Ok(())
    } else {
        Err(Error::UnsupportedDim(dim))
    }
}

impl ComplexMat {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Result<Self> {
        check_dim(dim)?;
        Ok(Self { dim, data: vec![Complex64::new(0.0, 0.0); dim * dim] })
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Result<Self> {
        let mut m = Self::zeros(dim)?;
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Ok(m)
    }

    /// Build a matrix entry by entry; rejects non-finite values.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        check_dim(dim)?;
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let v = f(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Err(Error::NonFinite);
                }
                data.push(v);
            }
        }
        Ok(Self { dim, data })
    }

    /// Build a 2x2 matrix from its four entries in row-major order.
    pub fn from_2x2(entries: [Complex64; 4]) -> Result<Self> {
        Self::from_fn(2, |i, j| entries[2 * i + j])
    }

    /// Build a matrix from a row-major slice of `dim * dim` entries.
    pub fn from_slice(dim: usize, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::UnsupportedDim(dim));
        }
        Self::from_fn(dim, |i, j| entries[i * dim + j])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Matrix product `self * rhs`. Panics on dimension mismatch, which is a
    /// programming error at these fixed sizes.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix product dimension mismatch");
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        Self { dim: n, data }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix sum dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Self { dim: self.dim, data }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matrix difference dimension mismatch");
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Self { dim: self.dim, data }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|a| a * c).collect() }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        Self { dim: n, data }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Kronecker product with the first factor as the most significant
    /// subsystem: `(a (x) b)[i*db + k][j*db + l] = a[i][j] * b[k][l]`.
    pub fn tensor(&self, rhs: &Self) -> Result<Self> {
        let n = self.dim * rhs.dim;
        if n > 8 {
            return Err(Error::DimensionOverflow(n));
        }
        check_dim(n)?;
        let db = rhs.dim;
        Self::from_fn(n, |i, j| self.get(i / db, j / db) * rhs.get(i % db, j % db))
    }

    /// Largest entrywise absolute difference between two matrices.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(self.dim, rhs.dim, "matrix comparison dimension mismatch");
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise absolute value.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `max |(U^dag U - I)_{ij}|`.
    pub fn unitary_deviation(&self) -> f64 {
        let id = Self::identity(self.dim).expect("dim already validated");
        self.adjoint().mul(self).max_abs_diff(&id)
    }

    /// `max |(A - A^dag)_{ij}|`.
    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Verify unitarity to [`UNITARY_TOL`] and pass the matrix through.
    pub fn checked_unitary(self) -> Result<Self> {
        let dev = self.unitary_deviation();
        if dev < UNITARY_TOL {
            Ok(self)
        } else {
            Err(Error::NotUnitary(dev))
        }
    }

    /// Verify Hermiticity to [`HERMITIAN_TOL`] and pass the matrix through.
    pub fn checked_hermitian(self) -> Result<Self> {
        let dev = self.hermitian_deviation();
        if dev < HERMITIAN_TOL {
            Ok(self)
        } else {
            Err(Error::NotHermitian(dev))
        }
    }

    /// Closed-form eigendecomposition of a 2x2 Hermitian matrix.
    ///
    /// Returns eigenvalues in descending order together with their normalized
    /// eigenvectors as columns. Solved from the trace and determinant rather
    /// than iteratively, so the result is exact and deterministic.
    pub fn eigh2(&self) -> Result<([f64; 2], [[Complex64; 2]; 2])> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDim(self.dim));
        }
        let dev = self.hermitian_deviation();
        if dev >= 1e-9 {
            return Err(Error::NotHermitian(dev));
        }
        let a = self.get(0, 0).re;
        let b = self.get(1, 1).re;
        let c = 0.5 * (self.get(0, 1) + self.get(1, 0).conj());
        let half_tr = 0.5 * (a + b);
        let disc = (0.25 * (a - b) * (a - b) + c.norm_sqr()).sqrt();
        let hi = half_tr + disc;
        let lo = half_tr - disc;

        // (rho - lambda I) v = 0 gives v = (c, lambda - a) when c != 0.
        let vec_for = |lambda: f64| -> [Complex64; 2] {
            if c.norm() > 1e-300 {
                let v0 = c;
                let v1 = Complex64::new(lambda - a, 0.0);
                let norm = (v0.norm_sqr() + v1.norm_sqr()).sqrt();
                [v0 / norm, v1 / norm]
            } else if (lambda - a).abs() <= (lambda - b).abs() {
                [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)]
            } else {
                [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]
            }
        };
        let v_hi = vec_for(hi);
        let v_lo = vec_for(lo);
        Ok(([hi, lo], [[v_hi[0], v_lo[0]], [v_hi[1], v_lo[1]]]))
    }
}

impl std::ops::Mul for &ComplexMat {
    type Output = ComplexMat;
    fn mul(self, rhs: &ComplexMat) -> ComplexMat {
        ComplexMat::mul(self, rhs)
    }
}

impl std::ops::Add for &ComplexMat {
    type Output = ComplexMat;
    fn add(self, rhs: &ComplexMat) -> ComplexMat {
        ComplexMat::add(self, rhs)
    }
}

impl std::ops::Sub for &ComplexMat {
    type Output = ComplexMat;
    fn sub(self, rhs: &ComplexMat) -> ComplexMat {
        ComplexMat::sub(self, rhs)
    }
}
