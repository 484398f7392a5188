//! Per-shot Fisher information of a measurement setting, the scalar error
//! parameter `Tr(F^{-1})`, and its Haar average over pure states computed by
//! quadrature. The average is the objective the circuit optimizer minimizes.

use serde::{Deserialize, Serialize};

use crate::bloch::{BlochVec, StateAngles};
use crate::error::{Error, Result};
use crate::smallmat::{det3, invert3};
use crate::tomo::{probabilities, MeasurementMatrix};

/// Outcome probabilities at or below this floor make the Fisher matrix
/// undefined for that state (unless the outcome carries no information).
pub const P_FLOOR: f64 = 1e-10;

/// Condition-number estimates beyond this are treated as singular.
pub const COND_LIMIT: f64 = 1e12;

/// A Bloch-direction row smaller than this everywhere belongs to a zero POVM
/// element and contributes no information.
const ZERO_ROW_TOL: f64 = 1e-14;

/// Symmetric positive semi-definite 3x3 per-shot information matrix over the
/// Bloch components `(sx, sy, sz)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    f: [[f64; 3]; 3],
}

impl FisherMatrix {
    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.f
    }

    #[inline]
    pub fn get(&self, mu: usize, nu: usize) -> f64 {
        self.f[mu][nu]
    }

    /// Inverse, guarded by a condition estimate: for a PSD matrix the
    /// 2-norm condition number is bounded by `lmax^3 / det`, with the
    /// Frobenius norm standing in for `lmax`.
    pub fn inverse(&self) -> Result<[[f64; 3]; 3]> {
        let norm = {
            let mut acc = 0.0;
            for row in &self.f {
                for v in row {
                    acc += v * v;
                }
            }
            acc.sqrt()
        };
        let det = det3(&self.f);
        if norm == 0.0 || det.abs() * COND_LIMIT <= norm.powi(3) {
            let cond = if det.abs() > 0.0 { norm.powi(3) / det.abs() } else { f64::INFINITY };
            return Err(Error::SingularFisher(cond));
        }
        invert3(&self.f).ok_or(Error::SingularFisher(f64::INFINITY))
    }
}

/// Sum four contributions in a labeling-independent order, so relabeling the
/// outcomes changes nothing, not even the rounding.
#[inline]
fn sorted_sum4(mut terms: [f64; 4]) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms[0] + terms[1] + terms[2] + terms[3]
}

/// Per-shot Fisher matrix `F = [T^t P^{-1} T]` restricted to the Bloch
/// components, with `P = diag(p(s))`.
///
/// Outcomes whose measurement-matrix row vanishes (zero POVM elements) carry
/// no information and are skipped; a vanishing probability on an informative
/// outcome means the state sits in a null direction of the POVM and is an
/// error.
pub fn fisher_matrix(t: &MeasurementMatrix, s: &BlochVec) -> Result<FisherMatrix> {
    let p = probabilities(t, s);
    let mut weights = [0.0; 4];
    for nu in 0..4 {
        let row_scale = (0..4).map(|mu| t.get(nu, mu).abs()).fold(0.0, f64::max);
        if row_scale < ZERO_ROW_TOL {
            continue;
        }
        if p[nu] <= P_FLOOR {
            return Err(Error::ProbabilityFloor { nu, p: p[nu], floor: P_FLOOR });
        }
        weights[nu] = 1.0 / p[nu];
    }
    let mut f = [[0.0; 3]; 3];
    for mu in 0..3 {
        for nu in mu..3 {
            let mut terms = [0.0; 4];
            for (i, term) in terms.iter_mut().enumerate() {
                *term = weights[i] * t.get(i, mu + 1) * t.get(i, nu + 1);
            }
            let v = sorted_sum4(terms);
            f[mu][nu] = v;
            f[nu][mu] = v;
        }
    }
    Ok(FisherMatrix { f })
}

/// Scalar error parameter `Tr(F^{-1})`. Small is good; 8 is the floor for
/// pure-state estimation with any single-qubit POVM.
pub fn fisher_error(t: &MeasurementMatrix, s: &BlochVec) -> Result<f64> {
    let inv = fisher_matrix(t, s)?.inverse()?;
    Ok(inv[0][0] + inv[1][1] + inv[2][2])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadRule {
    Midpoint,
    GaussLegendre,
}

/// What to do when the error parameter is undefined at a quadrature node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SingularPolicy {
    /// Fail the whole integral.
    Abort,
    /// Drop the node, log a warning with the tally at the end.
    Skip,
}

/// Node counts and rule for the two-angle quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_alpha1: usize,
    pub n_alpha2: usize,
    pub rule: QuadRule,
    #[serde(default = "default_policy")]
    pub on_singular: SingularPolicy,
}

fn default_policy() -> SingularPolicy {
    SingularPolicy::Abort
}

impl QuadratureSpec {
    pub fn gauss_legendre(n_alpha1: usize, n_alpha2: usize) -> Self {
        Self { n_alpha1, n_alpha2, rule: QuadRule::GaussLegendre, on_singular: SingularPolicy::Abort }
    }

    pub fn midpoint(n_alpha1: usize, n_alpha2: usize) -> Self {
        Self { n_alpha1, n_alpha2, rule: QuadRule::Midpoint, on_singular: SingularPolicy::Abort }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_alpha1 < 4 || self.n_alpha2 < 4 {
            return Err(Error::InvalidConfig(format!(
                "quadrature node counts {}x{} below the minimum of 4",
                self.n_alpha1, self.n_alpha2
            )));
        }
        Ok(())
    }

    /// Nodes and weights on `[a, b]`; both rules keep every node interior.
    fn nodes(&self, n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
        match self.rule {
            QuadRule::Midpoint => {
                let h = (b - a) / n as f64;
                (0..n).map(|i| (a + (i as f64 + 0.5) * h, h)).collect()
            }
            QuadRule::GaussLegendre => gauss_legendre_nodes(n)
                .into_iter()
                .map(|(x, w)| (a + 0.5 * (b - a) * (x + 1.0), 0.5 * (b - a) * w))
                .collect(),
        }
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, found by Newton iteration
/// on the Legendre recurrence from the Chebyshev initial guess.
pub fn gauss_legendre_nodes(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "at least one node required");
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let mut x = (std::f64::consts::PI * (k as f64 - 0.25) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_n and P_n' at x via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Deterministic pairwise summation for bit-stable reductions.
fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Haar average of the error parameter over pure states:
/// `(1/pi) integral Delta(s(a1, a2)) sin(2 a1) da1 da2` over
/// `[0, pi/2] x [0, pi]`. The `sin(2 a1)` weight makes the average uniform
/// over the Bloch sphere and normalizes the volume to exactly `pi`.
///
/// Interior quadrature nodes sidestep the isolated states where an outcome
/// probability vanishes; should a node still fail, `q.on_singular` decides
/// between aborting and skipping it.
pub fn qttf(t: &MeasurementMatrix, q: &QuadratureSpec) -> Result<f64> {
    q.validate()?;
    let nodes1 = q.nodes(q.n_alpha1, 0.0, std::f64::consts::FRAC_PI_2);
    let nodes2 = q.nodes(q.n_alpha2, 0.0, std::f64::consts::PI);
    let mut contributions = Vec::with_capacity(nodes1.len() * nodes2.len());
    let mut skipped = 0usize;
    for &(a1, w1) in &nodes1 {
        let haar = (2.0 * a1).sin();
        for &(a2, w2) in &nodes2 {
            let s = StateAngles { alpha1: a1, alpha2: a2 }.bloch();
            match fisher_error(t, &s) {
                Ok(delta) => contributions.push(w1 * w2 * haar * delta),
                Err(e) => match q.on_singular {
                    SingularPolicy::Abort => return Err(e),
                    SingularPolicy::Skip => skipped += 1,
                },
            }
        }
    }
    if skipped > 0 {
        log::warn!("qttf: skipped {skipped} singular quadrature node(s)");
    }
    if contributions.is_empty() {
        return Err(Error::SingularFisher(f64::INFINITY));
    }
    Ok(pairwise_sum(&contributions) / std::f64::consts::PI)
}
