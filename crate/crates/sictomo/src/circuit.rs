//! Parametrized estimation circuits and their POVMs.
//!
//! The full circuit couples the system qubit `S` to two meters `A` and `B`
//! through CNOTs sandwiched by general single-qubit rotations; the simplified
//! circuit uses a single meter `A` and measures `S` directly. Qubit tensor
//! order is most-significant-first, `(A, S, B)` respectively `(A, S)`, and
//! `S` is always the CNOT control.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bloch::{pauli_combination, pauli_i};
use crate::error::{Error, Result};
use crate::mat::ComplexMat;

/// Hermiticity / positivity / completeness tolerance for POVM validation.
pub const POVM_TOL: f64 = 1e-10;

/// Angle triple `(theta, phi, lambda)` of one general rotation gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateAngles {
    pub theta: f64,
    pub phi: f64,
    pub lambda: f64,
}

impl GateAngles {
    pub fn new(theta: f64, phi: f64, lambda: f64) -> Self {
        Self { theta, phi, lambda }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }
}

/// The twelve angles of the full circuit. The simplified circuit uses
/// `a1` and `a2` only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitParams {
    pub a1: GateAngles,
    pub a2: GateAngles,
    pub b1: GateAngles,
    pub b2: GateAngles,
}

/// Which circuit a flat parameter vector or angle list refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitLayout {
    Full,
    Simplified,
}

impl CircuitLayout {
    /// Number of gates (angle triples).
    pub fn gate_count(&self) -> usize {
        match self {
            CircuitLayout::Full => 4,
            CircuitLayout::Simplified => 2,
        }
    }

    /// Number of scalar parameters.
    pub fn param_count(&self) -> usize {
        3 * self.gate_count()
    }
}

/// Flatten angle triples into a parameter vector `(theta, phi, lambda)*`.
pub fn flatten_angles(angles: &[GateAngles]) -> Vec<f64> {
    angles
        .iter()
        .flat_map(|g| [g.theta, g.phi, g.lambda])
        .collect()
}

/// Inverse of [`flatten_angles`]; the length must be a multiple of three.
pub fn unflatten_angles(x: &[f64]) -> Result<Vec<GateAngles>> {
    if !x.len().is_multiple_of(3) {
        return Err(Error::InvalidConfig(format!(
            "parameter vector length {} is not a multiple of 3",
            x.len()
        )));
    }
    Ok(x.chunks(3).map(|c| GateAngles::new(c[0], c[1], c[2])).collect())
}

/// General rotation gate
/// `[[cos(t/2), -e^{il} sin(t/2)], [e^{ip} sin(t/2), e^{i(p+l)} cos(t/2)]]`.
pub fn u_gate(g: &GateAngles) -> ComplexMat {
    let (s, c) = (0.5 * g.theta).sin_cos();
    ComplexMat::from_2x2([
        Complex64::new(c, 0.0),
        -Complex64::from_polar(s, g.lambda),
        Complex64::from_polar(s, g.phi),
        Complex64::from_polar(c, g.phi + g.lambda),
    ])
    .expect("finite entries")
}

/// Hadamard gate.
pub fn hadamard() -> ComplexMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMat::from_2x2([
        Complex64::new(h, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
    ])
    .expect("finite entries")
}

/// CNOT on a register of `dim` basis states: flips `target_bit` of the basis
/// index when `control_bit` is set.
fn cnot(dim: usize, control_bit: u32, target_bit: u32) -> ComplexMat {
    ComplexMat::from_fn(dim, |i, j| {
        let image = if (j >> control_bit) & 1 == 1 { j ^ (1 << target_bit) } else { j };
        if i == image {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
    .expect("dim validated by caller")
}

// Basis index bits of the full register (A, S, B): bit 2 = A, bit 1 = S,
// bit 0 = B. For the simplified register (A, S): bit 1 = A, bit 0 = S.

fn embed_a_full(g: &ComplexMat) -> ComplexMat {
    g.tensor(&pauli_i()).expect("4 <= 8").tensor(&pauli_i()).expect("8 <= 8")
}

fn embed_s_full(g: &ComplexMat) -> ComplexMat {
    pauli_i().tensor(g).expect("4 <= 8").tensor(&pauli_i()).expect("8 <= 8")
}

fn embed_b_full(g: &ComplexMat) -> ComplexMat {
    pauli_i().tensor(&pauli_i()).expect("4 <= 8").tensor(g).expect("8 <= 8")
}

/// 8x8 unitary of the full circuit, gates applied in temporal order:
/// `U_A1` on A, CNOT(S -> A), `U_A2` on A, H on S, `U_B1` on B,
/// CNOT(S -> B), `U_B2` on B.
pub fn full_circuit_unitary(p: &CircuitParams) -> ComplexMat {
    let stages = [
        embed_a_full(&u_gate(&p.a1)),
        cnot(8, 1, 2),
        embed_a_full(&u_gate(&p.a2)),
        embed_s_full(&hadamard()),
        embed_b_full(&u_gate(&p.b1)),
        cnot(8, 1, 0),
        embed_b_full(&u_gate(&p.b2)),
    ];
    stages
        .into_iter()
        .reduce(|acc, stage| stage.mul(&acc))
        .expect("non-empty stage list")
}

/// 4x4 unitary of the simplified circuit: `U_A1` on A, CNOT(S -> A),
/// `U_A2` on A, H on S.
pub fn simplified_circuit_unitary(a1: &GateAngles, a2: &GateAngles) -> ComplexMat {
    let i2 = pauli_i();
    let stages = [
        u_gate(a1).tensor(&i2).expect("4 <= 8"),
        cnot(4, 0, 1),
        u_gate(a2).tensor(&i2).expect("4 <= 8"),
        i2.tensor(&hadamard()).expect("4 <= 8"),
    ];
    stages
        .into_iter()
        .reduce(|acc, stage| stage.mul(&acc))
        .expect("non-empty stage list")
}

/// Kraus operators of the four outcomes `(k, l)` in bit order
/// `(0,0), (0,1), (1,0), (1,1)`.
///
/// For an 8x8 unitary the meters A and B both start in `|0>` and
/// `M_kl[s', s] = U[(k, s', l), (0, s, 0)]`. For a 4x4 unitary only A starts
/// in `|0>` and `S` itself is measured after the circuit, so
/// `M_kl = |l><l| <k_A| U |0_A>`. Either way the set satisfies
/// `sum M^dag M = I`.
pub fn kraus_from_unitary(u: &ComplexMat) -> Result<[ComplexMat; 4]> {
    let dev = u.unitary_deviation();
    if dev >= POVM_TOL {
        return Err(Error::NotUnitary(dev));
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut out: Vec<ComplexMat> = Vec::with_capacity(4);
    for k in 0..2usize {
        for l in 0..2usize {
            let m = match u.dim() {
                8 => ComplexMat::from_fn(2, |sp, s| u.get(4 * k + 2 * sp + l, 2 * s))?,
                4 => ComplexMat::from_fn(2, |sp, s| if sp == l { u.get(2 * k + l, s) } else { zero })?,
                d => return Err(Error::UnsupportedDim(d)),
            };
            out.push(m);
        }
    }
    let sum = out
        .iter()
        .map(|m| m.adjoint().mul(m))
        .reduce(|a, b| a.add(&b))
        .expect("four Kraus operators");
    let dev = sum.max_abs_diff(&ComplexMat::identity(2)?);
    if dev >= POVM_TOL {
        return Err(Error::IncompleteKraus(dev));
    }
    Ok([out.remove(0), out.remove(0), out.remove(0), out.remove(0)])
}

/// Four 2x2 POVM elements indexed by outcome bits `(k, l)` in the order
/// `(0,0), (0,1), (1,0), (1,1)`. Validated to be Hermitian, positive
/// semi-definite and complete at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmSet {
    elements: [ComplexMat; 4],
}

impl PovmSet {
    pub fn new(elements: [ComplexMat; 4]) -> Result<Self> {
        for (idx, e) in elements.iter().enumerate() {
            if e.dim() != 2 {
                return Err(Error::InvalidPovmElement {
                    index: idx,
                    reason: format!("dimension {} instead of 2", e.dim()),
                });
            }
            let dev = e.hermitian_deviation();
            if dev >= POVM_TOL {
                return Err(Error::InvalidPovmElement {
                    index: idx,
                    reason: format!("not Hermitian (deviation {dev:.3e})"),
                });
            }
            let (vals, _) = e.eigh2()?;
            if vals[1] < -POVM_TOL {
                return Err(Error::InvalidPovmElement {
                    index: idx,
                    reason: format!("negative eigenvalue {:.3e}", vals[1]),
                });
            }
        }
        let sum = elements.iter().cloned().reduce(|a, b| a.add(&b)).expect("four elements");
        let dev = sum.max_abs_diff(&ComplexMat::identity(2)?);
        if dev >= POVM_TOL {
            return Err(Error::IncompletePovm(dev));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[ComplexMat; 4] {
        &self.elements
    }

    /// Element for the flat outcome index `nu = 2k + l`.
    pub fn element(&self, nu: usize) -> &ComplexMat {
        &self.elements[nu]
    }
}

/// `E_kl = M_kl^dag M_kl`.
pub fn povm_from_kraus(kraus: &[ComplexMat; 4]) -> Result<PovmSet> {
    let mut elements = Vec::with_capacity(4);
    for m in kraus {
        elements.push(m.adjoint().mul(m));
    }
    PovmSet::new([
        elements.remove(0),
        elements.remove(0),
        elements.remove(0),
        elements.remove(0),
    ])
}

/// Measured bit mapped to a signed outcome label: bit 0 -> +1, bit 1 -> -1.
#[inline]
pub fn outcome_sign(bit: usize) -> f64 {
    1.0 - 2.0 * bit as f64
}

/// Closed-form POVM of the simplified circuit.
///
/// With signed labels `k, l` derived from the measured bits,
/// `E_kl = (1/4) [(1 - k b) I + (l x1 - k l x2) sigma_x + k l y sigma_y
/// + k z sigma_z]` where the coefficients are trigonometric polynomials of
/// the six gate angles; `lambda_1` and `phi_2` drop out entirely. Matches the
/// circuit-derived POVM of [`simplified_circuit_unitary`] entrywise.
pub fn analytic_simplified_povm(a1: &GateAngles, a2: &GateAngles) -> PovmSet {
    let (s1, c1) = a1.theta.sin_cos();
    let (s2, c2) = a2.theta.sin_cos();
    let (sp1, cp1) = a1.phi.sin_cos();
    let (sl2, cl2) = a2.lambda.sin_cos();

    let x1 = s1 * cp1;
    let x2 = s2 * cl2;
    let b = x1 * x2;
    let y = c1 * s2 * sl2 - s1 * sp1 * c2;
    let z = c1 * c2 + s1 * sp1 * s2 * sl2;

    let mut elements = Vec::with_capacity(4);
    for bk in 0..2usize {
        for bl in 0..2usize {
            let k = outcome_sign(bk);
            let l = outcome_sign(bl);
            elements.push(pauli_combination(
                0.25 * (1.0 - k * b),
                0.25 * (l * x1 - k * l * x2),
                0.25 * (k * l * y),
                0.25 * (k * z),
            ));
        }
    }
    PovmSet::new([
        elements.remove(0),
        elements.remove(0),
        elements.remove(0),
        elements.remove(0),
    ])
    .expect("closed form is a valid POVM")
}

/// Gate angles that make the estimation circuit a tetrahedral measurement:
/// `a1 = (-arccos(1/sqrt 3), -pi/4, 0)` and all other gates at zero.
pub fn optimal_gate_angles() -> GateAngles {
    GateAngles::new(-(1.0 / 3f64.sqrt()).acos(), -std::f64::consts::FRAC_PI_4, 0.0)
}

/// Optimal parameters of the full circuit (all gates except `a1` at zero).
pub fn theta_star() -> CircuitParams {
    CircuitParams {
        a1: optimal_gate_angles(),
        a2: GateAngles::zero(),
        b1: GateAngles::zero(),
        b2: GateAngles::zero(),
    }
}

/// The tetrahedral POVM `E = (1/4)[I + a . sigma]` with Bloch directions
/// `a = (1/sqrt 3) (-l, -kl, k)` over signed outcome labels.
pub fn canonical_sic_povm() -> PovmSet {
    let r = 1.0 / 3f64.sqrt();
    let mut elements = Vec::with_capacity(4);
    for bk in 0..2usize {
        for bl in 0..2usize {
            let k = outcome_sign(bk);
            let l = outcome_sign(bl);
            elements.push(pauli_combination(0.25, 0.25 * (-l * r), 0.25 * (-k * l * r), 0.25 * (k * r)));
        }
    }
    PovmSet::new([
        elements.remove(0),
        elements.remove(0),
        elements.remove(0),
        elements.remove(0),
    ])
    .expect("tetrahedron is a valid POVM")
}

/// POVM of the circuit described by a list of angle triples: four triples
/// select the full circuit, two the simplified one.
pub fn povm_from_gate_angles(angles: &[GateAngles]) -> Result<PovmSet> {
    let u = match angles.len() {
        4 => full_circuit_unitary(&CircuitParams {
            a1: angles[0],
            a2: angles[1],
            b1: angles[2],
            b2: angles[3],
        }),
        2 => simplified_circuit_unitary(&angles[0], &angles[1]),
        n => {
            return Err(Error::InvalidConfig(format!(
                "expected 4 (full) or 2 (simplified) gate angle triples, got {n}"
            )))
        }
    };
    povm_from_kraus(&kraus_from_unitary(&u)?)
}
