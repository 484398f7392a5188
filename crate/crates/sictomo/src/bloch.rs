//! Bloch-vector parametrization of qubit states and the metrics computed on
//! them (purity, fidelity, dominant eigenstate).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat::ComplexMat;

/// Squared Bloch-vector norm may exceed 1 by this much and still count as a
/// physical state.
pub const PHYSICAL_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Pauli matrix `sigma_0` (identity).
pub fn pauli_i() -> ComplexMat {
    ComplexMat::identity(2).expect("2 is supported")
}

/// Pauli matrix `sigma_x`.
pub fn pauli_x() -> ComplexMat {
    ComplexMat::from_2x2([c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).expect("finite")
}

/// Pauli matrix `sigma_y`.
pub fn pauli_y() -> ComplexMat {
    ComplexMat::from_2x2([c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]).expect("finite")
}

/// Pauli matrix `sigma_z`.
pub fn pauli_z() -> ComplexMat {
    ComplexMat::from_2x2([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]).expect("finite")
}

/// `sigma_mu` for `mu` in `0..=3`.
pub fn pauli(mu: usize) -> ComplexMat {
    match mu {
        0 => pauli_i(),
        1 => pauli_x(),
        2 => pauli_y(),
        3 => pauli_z(),
        _ => panic!("pauli index {mu} out of range"),
    }
}

/// `(c0 I + cx sigma_x + cy sigma_y + cz sigma_z)` as an explicit 2x2 matrix.
pub fn pauli_combination(c0: f64, cx: f64, cy: f64, cz: f64) -> ComplexMat {
    ComplexMat::from_2x2([
        c(c0 + cz, 0.0),
        c(cx, -cy),
        c(cx, cy),
        c(c0 - cz, 0.0),
    ])
    .expect("finite")
}

/// The estimand: `s = (s0, sx, sy, sz)` with `s0 = 1`.
///
/// Linear inversion can produce vectors with `|s_vec| > 1`; these are kept
/// as-is and flagged through [`BlochVec::is_physical`] rather than rejected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BlochVec {
    s: [f64; 4],
}

impl BlochVec {
    pub fn new(sx: f64, sy: f64, sz: f64) -> Self {
        Self { s: [1.0, sx, sy, sz] }
    }

    /// Maximally mixed state.
    pub fn center() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn components(&self) -> [f64; 4] {
        self.s
    }

    #[inline]
    pub fn get(&self, mu: usize) -> f64 {
        self.s[mu]
    }

    /// Squared Euclidean norm of the spatial part `(sx, sy, sz)`.
    pub fn norm_sq(&self) -> f64 {
        self.s[1] * self.s[1] + self.s[2] * self.s[2] + self.s[3] * self.s[3]
    }

    pub fn is_physical(&self) -> bool {
        self.norm_sq() <= 1.0 + PHYSICAL_TOL
    }

    /// Euclidean distance between the spatial parts of two vectors.
    pub fn distance(&self, other: &Self) -> f64 {
        (1..4)
            .map(|mu| (self.s[mu] - other.s[mu]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Angles `(alpha1, alpha2)` parametrizing a pure state
/// `|psi> = e^{i alpha2} cos(alpha1) |0> + e^{-i alpha2} sin(alpha1) |1>`
/// with `alpha1` in `[0, pi/2]` and `alpha2` in `[0, pi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateAngles {
    pub alpha1: f64,
    pub alpha2: f64,
}

impl StateAngles {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self> {
        if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&alpha1) {
            return Err(Error::AngleRange(format!("alpha1 = {alpha1} outside [0, pi/2]")));
        }
        if !(0.0..=std::f64::consts::PI).contains(&alpha2) {
            return Err(Error::AngleRange(format!("alpha2 = {alpha2} outside [0, pi]")));
        }
        Ok(Self { alpha1, alpha2 })
    }

    /// Bloch vector of the pure state:
    /// `(sin 2a1 cos 2a2, -sin 2a1 sin 2a2, cos 2a1)`.
    pub fn bloch(&self) -> BlochVec {
        let (s2a1, c2a1) = (2.0 * self.alpha1).sin_cos();
        let (s2a2, c2a2) = (2.0 * self.alpha2).sin_cos();
        BlochVec::new(s2a1 * c2a2, -s2a1 * s2a2, c2a1)
    }
}

/// `rho = (1/2) sum_mu s_mu sigma_mu`; Hermitian with trace 1.
pub fn bloch_to_density(s: &BlochVec) -> ComplexMat {
    let v = s.components();
    pauli_combination(0.5 * v[0], 0.5 * v[1], 0.5 * v[2], 0.5 * v[3])
}

fn check_density_shape(rho: &ComplexMat) -> Result<()> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDim(rho.dim()));
    }
    let dev = rho.hermitian_deviation();
    if dev >= 1e-9 {
        return Err(Error::NotHermitian(dev));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::NotDensity(format!("trace = {tr} instead of 1")));
    }
    Ok(())
}

/// Inverse of [`bloch_to_density`]: `s_mu = Tr(rho sigma_mu)`.
pub fn density_to_bloch(rho: &ComplexMat) -> Result<BlochVec> {
    check_density_shape(rho)?;
    let comp = |mu: usize| rho.mul(&pauli(mu)).trace().re;
    Ok(BlochVec::new(comp(1), comp(2), comp(3)))
}

/// Projector onto the pure state described by `xi`.
pub fn pure_state_from_angles(xi: &StateAngles) -> ComplexMat {
    let c0 = Complex64::from_polar(xi.alpha1.cos(), xi.alpha2);
    let c1 = Complex64::from_polar(xi.alpha1.sin(), -xi.alpha2);
    ComplexMat::from_2x2([
        c0 * c0.conj(),
        c0 * c1.conj(),
        c1 * c0.conj(),
        c1 * c1.conj(),
    ])
    .expect("finite amplitudes")
}

/// `Tr(rho^2)`; equals `(1 + |s_vec|^2) / 2` in Bloch form.
pub fn purity(rho: &ComplexMat) -> Result<f64> {
    check_density_shape(rho)?;
    Ok(rho.mul(rho).trace().re)
}

/// Purity computed directly from a Bloch vector.
pub fn bloch_purity(s: &BlochVec) -> f64 {
    0.5 * (1.0 + s.norm_sq())
}

/// Uhlmann fidelity between two qubit density operators.
///
/// Uses the qubit closed form `F = Tr(rho sigma) + 2 sqrt(det rho det sigma)`,
/// which avoids general matrix square roots; the tests validate it against
/// the square-root definition. Inputs with eigenvalues below `-1e-9` are
/// rejected as non-positive.
pub fn fidelity(rho: &ComplexMat, sigma: &ComplexMat) -> Result<f64> {
    for m in [rho, sigma] {
        check_density_shape(m)?;
        let (vals, _) = m.eigh2()?;
        if vals[1] < -1e-9 {
            return Err(Error::NotDensity(format!(
                "negative eigenvalue {:.3e} beyond tolerance",
                vals[1]
            )));
        }
    }
    let det = |m: &ComplexMat| (m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)).re;
    let det_prod = (det(rho) * det(sigma)).max(0.0);
    Ok(rho.mul(sigma).trace().re + 2.0 * det_prod.sqrt())
}

/// Projector onto the eigenvector of the largest eigenvalue of `rho`.
///
/// Fails when the spectrum is degenerate within 1e-12; the caller decides the
/// fallback. The input must be Hermitian with trace 1 but need not be
/// positive, so linear-inversion estimates can be projected as well.
pub fn dominant_eigenstate(rho: &ComplexMat) -> Result<ComplexMat> {
    if rho.dim() != 2 {
        return Err(Error::UnsupportedDim(rho.dim()));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
        return Err(Error::NotDensity(format!("trace = {tr} instead of 1")));
    }
    let (vals, vecs) = rho.eigh2()?;
    let gap = vals[0] - vals[1];
    if gap < crate::mat::DEGENERACY_TOL {
        return Err(Error::DegenerateSpectrum(gap));
    }
    let v = [vecs[0][0], vecs[1][0]];
    ComplexMat::from_2x2([
        v[0] * v[0].conj(),
        v[0] * v[1].conj(),
        v[1] * v[0].conj(),
        v[1] * v[1].conj(),
    ])
}
