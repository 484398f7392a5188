//! Outcome statistics and state estimators: the measurement matrix mapping
//! Bloch vectors to outcome probabilities, its linear inversion, and the
//! iterative RrhoR maximum-likelihood reconstruction.

use serde::{Deserialize, Serialize};

use crate::bloch::BlochVec;
use crate::circuit::PovmSet;
use crate::error::{Error, Result};
use crate::smallmat::invert4;

/// `|det T|` below this signals an informationally incomplete POVM.
pub const DET_TOL: f64 = 1e-12;

/// Real 4x4 matrix `T[nu][mu] = (1/2) Tr(E_nu sigma_mu)` relating outcome
/// probabilities to Bloch components via `p = T s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    t: [[f64; 4]; 4],
}

impl MeasurementMatrix {
    pub fn entries(&self) -> &[[f64; 4]; 4] {
        &self.t
    }

    #[inline]
    pub fn get(&self, nu: usize, mu: usize) -> f64 {
        self.t[nu][mu]
    }

    pub fn det(&self) -> f64 {
        match invert4(&self.t) {
            Some((_, det)) => det,
            None => 0.0,
        }
    }
}

/// `T[nu][mu] = (1/2) Tr(E_nu sigma_mu)` with outcomes ordered by measured
/// bits `(0,0), (0,1), (1,0), (1,1)`.
pub fn measurement_matrix(povm: &PovmSet) -> MeasurementMatrix {
    let mut t = [[0.0; 4]; 4];
    for (nu, row) in t.iter_mut().enumerate() {
        for (mu, entry) in row.iter_mut().enumerate() {
            *entry = 0.5 * povm.element(nu).mul(&crate::bloch::pauli(mu)).trace().re;
        }
    }
    MeasurementMatrix { t }
}

/// Outcome probabilities `p = T s`. Tiny negative values from roundoff are
/// clamped to zero.
pub fn probabilities(t: &MeasurementMatrix, s: &BlochVec) -> [f64; 4] {
    let sv = s.components();
    let mut p = [0.0; 4];
    for nu in 0..4 {
        let v: f64 = (0..4).map(|mu| t.get(nu, mu) * sv[mu]).sum();
        p[nu] = if v < 0.0 && v > -1e-12 { 0.0 } else { v };
    }
    p
}

fn check_distribution(p: &[f64; 4]) -> Result<()> {
    for (nu, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < -1e-12 {
            return Err(Error::InvalidDistribution(format!("p[{nu}] = {v}")));
        }
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("sum = {sum} instead of 1")));
    }
    Ok(())
}

/// Linear-inversion estimate together with its physicality flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiEstimate {
    pub bloch: BlochVec,
    /// False when the estimate lies outside the Bloch ball. The vector is
    /// returned as-is either way.
    pub physical: bool,
}

/// Linear inversion `s_hat = T^{-1} p_hat`.
///
/// Requires `|det T| > 1e-12` (informational completeness) and a `p_hat`
/// summing to one. The zeroth component of the solution always comes out as
/// 1 up to roundoff; it is snapped to 1 exactly.
pub fn li_estimate(t: &MeasurementMatrix, p_hat: &[f64; 4]) -> Result<LiEstimate> {
    check_distribution(p_hat)?;
    let (inv, det) = invert4(&t.t).ok_or(Error::SingularMeasurement(0.0))?;
    if det.abs() <= DET_TOL {
        return Err(Error::SingularMeasurement(det.abs()));
    }
    let mut s = [0.0; 4];
    for (mu, out) in s.iter_mut().enumerate() {
        *out = (0..4).map(|nu| inv[mu][nu] * p_hat[nu]).sum();
    }
    if (s[0] - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "inverted s0 = {} deviates from 1",
            s[0]
        )));
    }
    let bloch = BlochVec::new(s[1], s[2], s[3]);
    let physical = bloch.is_physical();
    Ok(LiEstimate { bloch, physical })
}

/// Iteration controls for [`rpr_estimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RprOptions {
    pub max_iter: usize,
    /// Target distance to the fixed point, monitored through the Euclidean
    /// norm of the Bloch update: with successive step ratio `r`, iteration
    /// stops once the extrapolated remaining distance `step * r / (1 - r)`
    /// falls below this.
    pub tol: f64,
    /// Model probabilities are clamped to at least this before dividing.
    pub p_floor: f64,
}

impl Default for RprOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, tol: 1e-10, p_floor: 1e-12 }
    }
}

/// Result of the RrhoR iteration. The estimate is always physical.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RprEstimate {
    pub bloch: BlochVec,
    pub iterations: usize,
    /// False when `max_iter` was exhausted before the update norm dropped
    /// below `tol`; the last iterate is returned regardless.
    pub converged: bool,
}

/// One RrhoR step in Bloch form.
///
/// With `r_mu = sum_nu (p_hat_nu / p_model_nu) T[nu][mu]` evaluated at the
/// current iterate, the update is
/// `s_mu <- (2 r_mu - s_mu gamma) / (2 r_0 + gamma)` where
/// `gamma = |r_vec|^2 - r_0^2`. This keeps `s_0 = 1` at every step and maps
/// physical states to physical states.
pub fn rpr_step(t: &MeasurementMatrix, p_hat: &[f64; 4], s: &BlochVec, p_floor: f64) -> BlochVec {
    let p_model = probabilities(t, s);
    let mut r = [0.0; 4];
    for (mu, out) in r.iter_mut().enumerate() {
        *out = (0..4)
            .map(|nu| p_hat[nu] / p_model[nu].max(p_floor) * t.get(nu, mu))
            .sum();
    }
    let gamma = r[1] * r[1] + r[2] * r[2] + r[3] * r[3] - r[0] * r[0];
    let denom = 2.0 * r[0] + gamma;
    let sv = s.components();
    BlochVec::new(
        (2.0 * r[1] - sv[1] * gamma) / denom,
        (2.0 * r[2] - sv[2] * gamma) / denom,
        (2.0 * r[3] - sv[3] * gamma) / denom,
    )
}

/// RrhoR maximum-likelihood reconstruction, started from the maximally mixed
/// state.
///
/// The iteration contracts linearly, so a bare step-size threshold can stop
/// orders of magnitude away from the fixed point. Instead the successive
/// step ratio `r` extrapolates the remaining distance as
/// `step * r / (1 - r)`, and the loop stops when that estimate drops below
/// `opts.tol` (or after `opts.max_iter` steps, flagged as not converged).
/// A final norm excess of at most 1e-9 from roundoff is rescaled back onto
/// the Bloch sphere so the output is always physical.
pub fn rpr_estimate(t: &MeasurementMatrix, p_hat: &[f64; 4], opts: &RprOptions) -> Result<RprEstimate> {
    check_distribution(p_hat)?;
    if opts.max_iter == 0 || opts.tol <= 0.0 || opts.p_floor < 0.0 {
        return Err(Error::InvalidConfig(
            "RprOptions requires max_iter >= 1, tol > 0, p_floor >= 0".into(),
        ));
    }
    let mut s = BlochVec::center();
    let mut iterations = 0;
    let mut converged = false;
    let mut prev_step = f64::INFINITY;
    while iterations < opts.max_iter {
        let next = rpr_step(t, p_hat, &s, opts.p_floor);
        iterations += 1;
        let step = s.distance(&next);
        s = next;
        if step == 0.0 {
            converged = true;
            break;
        }
        if prev_step.is_finite() && step < prev_step {
            let ratio = step / prev_step;
            if step * ratio / (1.0 - ratio) < opts.tol {
                converged = true;
                break;
            }
        }
        prev_step = step;
    }
    let norm_sq = s.norm_sq();
    if norm_sq > 1.0 && norm_sq <= 1.0 + crate::bloch::PHYSICAL_TOL {
        let mut scale = 1.0 / norm_sq.sqrt();
        loop {
            let candidate = BlochVec::new(s.get(1) * scale, s.get(2) * scale, s.get(3) * scale);
            if candidate.norm_sq() <= 1.0 {
                s = candidate;
                break;
            }
            // Rescaling can land one ulp outside; shave and retry.
            scale *= 1.0 - f64::EPSILON;
        }
    }
    Ok(RprEstimate { bloch: s, iterations, converged })
}

/// Multinomial log-likelihood `sum_nu n_nu ln p_nu` up to the constant
/// combinatorial term. Outcomes with zero counts contribute nothing even at
/// zero probability.
pub fn log_likelihood(counts: &CountVector, p: &[f64; 4]) -> f64 {
    counts
        .counts()
        .iter()
        .zip(p)
        .map(|(&n, &pv)| if n == 0 { 0.0 } else { n as f64 * pv.max(f64::MIN_POSITIVE).ln() })
        .sum()
}

/// Shot counts for the four outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CountVector {
    n: [u64; 4],
}

impl CountVector {
    pub fn new(n: [u64; 4]) -> Result<Self> {
        if n.iter().sum::<u64>() == 0 {
            return Err(Error::InvalidDistribution("zero total shots".into()));
        }
        Ok(Self { n })
    }

    pub fn counts(&self) -> &[u64; 4] {
        &self.n
    }

    pub fn total(&self) -> u64 {
        self.n.iter().sum()
    }

    /// Empirical probabilities `p_hat = n / N`.
    pub fn frequencies(&self) -> [f64; 4] {
        let total = self.total() as f64;
        [
            self.n[0] as f64 / total,
            self.n[1] as f64 / total,
            self.n[2] as f64 / total,
            self.n[3] as f64 / total,
        ]
    }
}
