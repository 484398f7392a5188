//! Derivative-free search for measurement settings that minimize the
//! tomographic transfer function, plus the verifier for the symmetric
//! informationally complete structure of a POVM.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{povm_from_gate_angles, unflatten_angles, CircuitLayout, GateAngles, PovmSet};
use crate::error::{Error, Result};
use crate::fisher::{qttf, QuadratureSpec};
use crate::seeding::derive_seed;
use crate::tomo::measurement_matrix;

/// Nelder-Mead controls. The four coefficients are reflection, expansion,
/// contraction and shrink; the defaults are the standard 1, 2, 1/2, 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Converged when the simplex diameter (max-norm) drops below this...
    pub x_tol: f64,
    /// ...and the spread of function values drops below this.
    pub f_tol: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub init_simplex_scale: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_evals: 20_000,
            x_tol: 1e-9,
            f_tol: 1e-12,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            init_simplex_scale: 0.5,
        }
    }
}

impl NmOptions {
    fn assert_valid(&self) {
        assert!(self.max_evals >= 1, "max_evals must be at least 1");
        assert!(self.x_tol > 0.0 && self.f_tol > 0.0, "tolerances must be positive");
        assert!(self.reflection > 0.0, "reflection coefficient must be positive");
        assert!(self.expansion > 1.0, "expansion coefficient must exceed 1");
        assert!((0.0..1.0).contains(&self.contraction) && self.contraction > 0.0);
        assert!((0.0..1.0).contains(&self.shrink) && self.shrink > 0.0);
        assert!(self.init_simplex_scale > 0.0);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NmStatus {
    Converged,
    MaxEvals,
}

/// Best point found, its value, and the evaluation count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub status: NmStatus,
}

// Iterations without improvement before the simplex is re-seeded around the
// incumbent at half the previous scale.
const STAGNATION_WINDOW: usize = 50;

/// Nelder-Mead minimization of `objective` from `x0`.
///
/// Deterministic given `x0` and `opts`; the returned value never exceeds
/// `objective(x0)`. Flat stretches trigger a deterministic simplex re-seed
/// around the incumbent. Runs until both tolerance criteria hold or the
/// evaluation budget is exhausted.
pub fn nelder_mead(
    mut objective: impl FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NmOptions,
) -> NmResult {
    opts.assert_valid();
    let n = x0.len();
    assert!(n >= 1, "objective must have at least one parameter");

    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let build_simplex = |center: &[f64], scale: f64, evals: &mut usize, eval: &mut dyn FnMut(&[f64], &mut usize) -> f64| {
        let mut pts: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let f0 = eval(center, evals);
        pts.push((center.to_vec(), f0));
        for i in 0..n {
            let mut p = center.to_vec();
            p[i] += scale;
            let f = eval(&p, evals);
            pts.push((p, f));
        }
        pts
    };

    let mut simplex = build_simplex(x0, opts.init_simplex_scale, &mut evals, &mut eval);
    let mut best_seen = simplex
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, f)| (x.clone(), *f))
        .expect("non-empty simplex");
    let mut since_improvement = 0usize;
    let mut rebuild_scale = opts.init_simplex_scale * 0.5;

    let status = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[n].1;

        if f_best < best_seen.1 - opts.f_tol {
            best_seen = (simplex[0].0.clone(), f_best);
            since_improvement = 0;
        } else {
            if f_best < best_seen.1 {
                best_seen = (simplex[0].0.clone(), f_best);
            }
            since_improvement += 1;
        }

        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if (f_worst - f_best) < opts.f_tol && diameter < opts.x_tol {
            break NmStatus::Converged;
        }
        if evals >= opts.max_evals {
            break NmStatus::MaxEvals;
        }

        if since_improvement >= STAGNATION_WINDOW {
            if rebuild_scale < 10.0 * opts.x_tol {
                break NmStatus::Converged;
            }
            simplex = build_simplex(&best_seen.0.clone(), rebuild_scale, &mut evals, &mut eval);
            rebuild_scale *= 0.5;
            since_improvement = 0;
            continue;
        }

        // Centroid of all points but the worst.
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / n as f64;
            }
        }
        let worst = simplex[n].0.clone();
        let combine = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = combine(opts.reflection);
        let fr = eval(&xr, &mut evals);
        if fr < f_best {
            let xe = combine(opts.reflection * opts.expansion);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        let f_second_worst = simplex[n - 1].1;
        if fr < f_second_worst {
            simplex[n] = (xr, fr);
            continue;
        }
        let accepted = if fr < f_worst {
            let xc = combine(opts.reflection * opts.contraction);
            let fc = eval(&xc, &mut evals);
            if fc <= fr {
                simplex[n] = (xc, fc);
                true
            } else {
                false
            }
        } else {
            let xc = combine(-opts.contraction);
            let fc = eval(&xc, &mut evals);
            if fc < f_worst {
                simplex[n] = (xc, fc);
                true
            } else {
                false
            }
        };
        if !accepted {
            let best = simplex[0].0.clone();
            for (x, f) in simplex.iter_mut().skip(1) {
                for (xi, bi) in x.iter_mut().zip(&best) {
                    *xi = bi + opts.shrink * (*xi - bi);
                }
                *f = eval(x, &mut evals);
            }
        }
    };

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = if simplex[0].1 <= best_seen.1 {
        (simplex[0].0.clone(), simplex[0].1)
    } else {
        best_seen
    };
    NmResult { x, f, evals, status }
}

/// Transfer-function value of the circuit parametrized by the flat angle
/// vector `x` (12 angles for the full circuit, 6 for the simplified one).
pub fn circuit_qttf(layout: CircuitLayout, x: &[f64], q: &QuadratureSpec) -> Result<f64> {
    if x.len() != layout.param_count() {
        return Err(Error::InvalidConfig(format!(
            "expected {} parameters, got {}",
            layout.param_count(),
            x.len()
        )));
    }
    let povm = povm_from_gate_angles(&unflatten_angles(x)?)?;
    qttf(&measurement_matrix(&povm), q)
}

/// One restart of the search: where it started, where it ended, the value
/// found and the cost of getting there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestartRecord {
    pub restart: usize,
    pub start: Vec<f64>,
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub status: NmStatus,
}

/// Outcome of [`optimize_circuit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub layout: CircuitLayout,
    /// Best gate angles found (4 triples for the full circuit, 2 for the
    /// simplified one).
    pub theta: Vec<GateAngles>,
    /// Transfer-function value of `theta` on the fine reporting quadrature.
    pub qttf: f64,
    /// Best value seen on the coarser search quadrature.
    pub search_value: f64,
    pub history: Vec<RestartRecord>,
}

/// Quadrature used to report the final value, regardless of the (typically
/// coarser) search quadrature.
pub fn report_quadrature() -> QuadratureSpec {
    QuadratureSpec::gauss_legendre(64, 64)
}

fn search_objective(layout: CircuitLayout, q: &QuadratureSpec) -> impl Fn(&[f64]) -> f64 + '_ {
    move |x: &[f64]| circuit_qttf(layout, x, q).unwrap_or(f64::INFINITY)
}

/// Single deterministic search from a given starting point, followed by a
/// polish run with a tight simplex around the result.
pub fn optimize_from(
    layout: CircuitLayout,
    x0: &[f64],
    q: &QuadratureSpec,
    opts: &NmOptions,
) -> Result<NmResult> {
    q.validate()?;
    if x0.len() != layout.param_count() {
        return Err(Error::InvalidConfig(format!(
            "expected {} parameters, got {}",
            layout.param_count(),
            x0.len()
        )));
    }
    let objective = search_objective(layout, q);
    let first = nelder_mead(&objective, x0, opts);
    let polish_opts = NmOptions { init_simplex_scale: 0.02, ..*opts };
    let polished = nelder_mead(&objective, &first.x, &polish_opts);
    let evals = first.evals + polished.evals;
    Ok(if polished.f <= first.f {
        NmResult { evals, ..polished }
    } else {
        NmResult { evals, ..first }
    })
}

/// Seeded multi-restart minimization of the transfer function.
///
/// Starting angles are drawn uniformly from `[0, 2 pi)` per parameter, one
/// independent stream per restart, so the result is reproducible for a fixed
/// `(seed, restarts, quadrature, opts)` whether or not restarts run in
/// parallel. Restarts that fail to find a finite objective are logged and
/// skipped. The best end point is re-scored on [`report_quadrature`].
pub fn optimize_circuit(
    layout: CircuitLayout,
    restarts: usize,
    seed: u64,
    q: &QuadratureSpec,
    opts: &NmOptions,
) -> Result<OptimizeOutcome> {
    if restarts == 0 {
        return Err(Error::InvalidConfig("restarts must be at least 1".into()));
    }
    q.validate()?;
    let n = layout.param_count();

    let records: Vec<Option<RestartRecord>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let objective = search_objective(layout, q);
            let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, r as u64, 0));
            let mut start = None;
            for _ in 0..100 {
                let x0: Vec<f64> =
                    (0..n).map(|_| rng.gen_range(0.0..std::f64::consts::TAU)).collect();
                if objective(&x0).is_finite() {
                    start = Some(x0);
                    break;
                }
            }
            let Some(x0) = start else {
                log::warn!("restart {r}: no finite starting point found, skipping");
                return None;
            };
            match optimize_from(layout, &x0, q, opts) {
                Ok(result) => Some(RestartRecord {
                    restart: r,
                    start: x0,
                    x: result.x,
                    value: result.f,
                    evals: result.evals,
                    status: result.status,
                }),
                Err(e) => {
                    log::warn!("restart {r} failed: {e}");
                    None
                }
            }
        })
        .collect();

    let history: Vec<RestartRecord> = records.into_iter().flatten().collect();
    let best = history
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .ok_or_else(|| Error::InvalidConfig("every restart failed".into()))?;
    let theta = unflatten_angles(&best.x)?;
    let fine = circuit_qttf(layout, &best.x, &report_quadrature())?;
    Ok(OptimizeOutcome {
        layout,
        theta,
        qttf: fine,
        search_value: best.value,
        history,
    })
}

/// Structural report of [`sic_check`]: element traces, pairwise overlaps of
/// the rescaled projectors `Pi = 2E`, and the worst deviations from the
/// tetrahedral values 1/2 and 1/3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SicReport {
    pub traces: [f64; 4],
    pub overlaps: [[f64; 4]; 4],
    pub max_trace_dev: f64,
    pub max_overlap_dev: f64,
    pub tol: f64,
    pub is_sic: bool,
}

/// Check whether a POVM is symmetric informationally complete: all traces
/// within `tol` of 1/2 and all distinct-pair overlaps `Tr(Pi_i Pi_j)` within
/// `tol` of 1/3.
pub fn sic_check(povm: &PovmSet, tol: f64) -> SicReport {
    let mut traces = [0.0; 4];
    for (i, tr) in traces.iter_mut().enumerate() {
        *tr = povm.element(i).trace().re;
    }
    let mut overlaps = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            overlaps[i][j] = 4.0 * povm.element(i).mul(povm.element(j)).trace().re;
        }
    }
    let max_trace_dev = traces.iter().map(|t| (t - 0.5).abs()).fold(0.0, f64::max);
    let mut max_overlap_dev = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i != j {
                max_overlap_dev = max_overlap_dev.max((overlaps[i][j] - 1.0 / 3.0).abs());
            }
        }
    }
    SicReport {
        traces,
        overlaps,
        max_trace_dev,
        max_overlap_dev,
        tol,
        is_sic: max_trace_dev <= tol && max_overlap_dev <= tol,
    }
}
