//! Shot-noise experiment runner: sample multinomial outcomes for a set of
//! input states, estimate each sample with linear inversion and/or the RrhoR
//! iteration, and aggregate the results into machine-readable records.
//!
//! Sampling uses inverse-CDF multinomial draws from seeded ChaCha12 streams.
//! Each `(state, repetition)` cell derives its own stream from the base seed,
//! so results are bit-identical whether cells run sequentially or in
//! parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bloch::{
    bloch_purity, bloch_to_density, density_to_bloch, dominant_eigenstate, BlochVec, StateAngles,
};
use crate::circuit::{canonical_sic_povm, povm_from_gate_angles, GateAngles, PovmSet};
use crate::error::{Error, Result};
use crate::seeding::derive_seed;
use crate::tomo::{
    li_estimate, measurement_matrix, probabilities, rpr_estimate, CountVector, MeasurementMatrix,
    RprOptions,
};

/// Name of the PRNG recorded in output metadata.
pub const RNG_ALGORITHM: &str = "chacha12";

/// Which measurement the experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitChoice {
    /// Three-qubit circuit; requires four gate-angle triples.
    Full,
    /// Two-qubit circuit; requires two gate-angle triples.
    Simplified,
    /// The closed-form tetrahedral POVM; no angles needed.
    CanonicalSic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorChoice {
    Li,
    Rpr,
    Both,
}

impl EstimatorChoice {
    pub fn runs_li(&self) -> bool {
        matches!(self, EstimatorChoice::Li | EstimatorChoice::Both)
    }

    pub fn runs_rpr(&self) -> bool {
        matches!(self, EstimatorChoice::Rpr | EstimatorChoice::Both)
    }
}

/// An input state: either a named Pauli eigenstate (`z0`, `z1`, `x0`, `x1`,
/// `y0`, `y1`) or explicit angles in radians.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Angles(StateAngles),
}

fn default_shots() -> u64 {
    1024
}

fn default_repetitions() -> usize {
    5
}

fn default_estimator() -> EstimatorChoice {
    EstimatorChoice::Both
}

/// Everything a reproducible experiment run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub circuit: CircuitChoice,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<GateAngles>>,
    pub states: Vec<StateSpec>,
    #[serde(default = "default_shots")]
    pub shots: u64,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_estimator")]
    pub estimator: EstimatorChoice,
    #[serde(default)]
    pub project_pure: bool,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Config for the six-eigenstate study against the tetrahedral POVM.
    pub fn pauli_suite(seed: u64) -> Self {
        Self {
            circuit: CircuitChoice::CanonicalSic,
            theta: None,
            states: pauli_eigenstate_suite()
                .iter()
                .map(|(label, _)| StateSpec::Named((*label).to_string()))
                .collect(),
            shots: default_shots(),
            repetitions: default_repetitions(),
            estimator: default_estimator(),
            project_pure: false,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.shots == 0 {
            return Err(Error::InvalidConfig("shots must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidConfig("repetitions must be at least 1".into()));
        }
        if self.states.is_empty() {
            return Err(Error::InvalidConfig("no input states given".into()));
        }
        let required = match self.circuit {
            CircuitChoice::Full => Some(4),
            CircuitChoice::Simplified => Some(2),
            CircuitChoice::CanonicalSic => None,
        };
        match (required, &self.theta) {
            (Some(n), Some(theta)) if theta.len() != n => Err(Error::InvalidConfig(format!(
                "circuit needs {n} gate angle triples, got {}",
                theta.len()
            ))),
            (Some(_), None) => Err(Error::InvalidConfig("circuit requires gate angles".into())),
            _ => Ok(()),
        }
    }

    pub fn resolve_povm(&self) -> Result<PovmSet> {
        self.validate()?;
        match self.circuit {
            CircuitChoice::CanonicalSic => Ok(canonical_sic_povm()),
            CircuitChoice::Full | CircuitChoice::Simplified => {
                povm_from_gate_angles(self.theta.as_ref().expect("validated above"))
            }
        }
    }

    fn resolve_states(&self) -> Result<Vec<(String, StateAngles)>> {
        self.states
            .iter()
            .map(|spec| match spec {
                StateSpec::Named(name) => named_state(name)
                    .map(|angles| (name.clone(), angles))
                    .ok_or_else(|| Error::InvalidConfig(format!("unknown state label '{name}'"))),
                StateSpec::Angles(angles) => {
                    let checked = StateAngles::new(angles.alpha1, angles.alpha2)?;
                    Ok((format!("alpha1={:.6};alpha2={:.6}", angles.alpha1, angles.alpha2), checked))
                }
            })
            .collect()
    }
}

/// The six Pauli eigenstates with their conventional labels.
pub fn pauli_eigenstate_suite() -> [(&'static str, StateAngles); 6] {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
    [
        ("z0", StateAngles { alpha1: 0.0, alpha2: 0.0 }),
        ("z1", StateAngles { alpha1: FRAC_PI_2, alpha2: 0.0 }),
        ("x0", StateAngles { alpha1: FRAC_PI_4, alpha2: 0.0 }),
        ("x1", StateAngles { alpha1: FRAC_PI_4, alpha2: FRAC_PI_2 }),
        ("y0", StateAngles { alpha1: FRAC_PI_4, alpha2: 0.75 * PI }),
        ("y1", StateAngles { alpha1: FRAC_PI_4, alpha2: FRAC_PI_4 }),
    ]
}

fn named_state(label: &str) -> Option<StateAngles> {
    pauli_eigenstate_suite()
        .iter()
        .find(|(name, _)| *name == label)
        .map(|(_, angles)| *angles)
}

/// Draw multinomial shot counts by inverse-CDF sampling from a ChaCha12
/// stream seeded with `seed`. Deterministic for a fixed seed.
pub fn sample_counts(p: &[f64; 4], shots: u64, seed: u64) -> Result<CountVector> {
    if shots == 0 {
        return Err(Error::InvalidDistribution("zero shots requested".into()));
    }
    let mut cleaned = [0.0; 4];
    for (nu, &v) in p.iter().enumerate() {
        if !v.is_finite() || v < -1e-12 {
            return Err(Error::InvalidDistribution(format!("p[{nu}] = {v}")));
        }
        cleaned[nu] = v.max(0.0);
    }
    let total: f64 = cleaned.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!("sum = {total} instead of 1")));
    }
    let cumulative = [
        cleaned[0] / total,
        (cleaned[0] + cleaned[1]) / total,
        (cleaned[0] + cleaned[1] + cleaned[2]) / total,
    ];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    for _ in 0..shots {
        let u: f64 = rng.gen();
        let nu = cumulative.iter().position(|&c| u < c).unwrap_or(3);
        counts[nu] += 1;
    }
    CountVector::new(counts)
}

/// One estimator's output for one repetition, with the metrics the reports
/// need.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub bloch: BlochVec,
    pub purity: f64,
    pub fidelity: f64,
    pub physical: bool,
    pub projected: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Either a finished estimate or the error that stopped it; failures are
/// recorded per cell and the run continues.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateOutcome {
    Ok(EstimateRecord),
    Error(String),
}

impl EstimateOutcome {
    pub fn as_ok(&self) -> Option<&EstimateRecord> {
        match self {
            EstimateOutcome::Ok(rec) => Some(rec),
            EstimateOutcome::Error(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub rep: usize,
    pub counts: CountVector,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub li: Option<EstimateOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpr: Option<EstimateOutcome>,
}

/// Mean and spread of one estimator's Bloch components over the repetitions
/// of one state. Both the sample standard deviation (n-1 denominator) and
/// the standard deviation of the mean are reported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorAggregate {
    pub n: usize,
    pub mean: [f64; 3],
    pub sample_std: [f64; 3],
    pub std_of_mean: [f64; 3],
    pub mean_purity: f64,
    pub mean_fidelity: f64,
}

/// Everything recorded for one input state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub state: String,
    pub true_bloch: BlochVec,
    pub repetitions: Vec<RepetitionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub li: Option<EstimatorAggregate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rpr: Option<EstimatorAggregate>,
}

/// Full experiment output: config echo, library version, RNG name, records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResults {
    pub version: String,
    pub rng: String,
    pub config: ExperimentConfig,
    pub records: Vec<ExperimentRecord>,
}

/// Fidelity on Bloch vectors with negative determinants clamped to zero, so
/// non-physical linear-inversion estimates still get a defined score. Equals
/// the exact fidelity whenever both states are physical.
fn bloch_fidelity(a: &BlochVec, b: &BlochVec) -> f64 {
    let dot: f64 = (1..4).map(|mu| a.get(mu) * b.get(mu)).sum();
    let da = (1.0 - a.norm_sq()).max(0.0);
    let db = (1.0 - b.norm_sq()).max(0.0);
    0.5 * ((1.0 + dot) + (da * db).sqrt())
}

fn project_to_dominant(bloch: &BlochVec) -> Result<BlochVec> {
    density_to_bloch(&dominant_eigenstate(&bloch_to_density(bloch))?)
}

fn finish_estimate(
    raw: BlochVec,
    physical: bool,
    note: Option<String>,
    truth: &BlochVec,
    project: bool,
) -> EstimateRecord {
    let (bloch, projected, note) = if project {
        match project_to_dominant(&raw) {
            Ok(p) => (p, true, note),
            Err(e) => {
                let merged = match note {
                    Some(n) => Some(format!("{n}; projection skipped: {e}")),
                    None => Some(format!("projection skipped: {e}")),
                };
                (raw, false, merged)
            }
        }
    } else {
        (raw, false, note)
    };
    EstimateRecord {
        bloch,
        purity: bloch_purity(&bloch),
        fidelity: bloch_fidelity(truth, &bloch),
        physical,
        projected,
        note,
    }
}

fn run_cell(
    t: &MeasurementMatrix,
    p_exact: &[f64; 4],
    truth: &BlochVec,
    cfg: &ExperimentConfig,
    rpr_opts: &RprOptions,
    state_idx: usize,
    rep: usize,
) -> Result<RepetitionRecord> {
    let seed = derive_seed(cfg.seed, state_idx as u64, rep as u64);
    let counts = sample_counts(p_exact, cfg.shots, seed)?;
    let p_hat = counts.frequencies();

    let li = cfg.estimator.runs_li().then(|| match li_estimate(t, &p_hat) {
        Ok(est) => EstimateOutcome::Ok(finish_estimate(
            est.bloch,
            est.physical,
            None,
            truth,
            cfg.project_pure,
        )),
        Err(e) => EstimateOutcome::Error(e.to_string()),
    });
    let rpr = cfg.estimator.runs_rpr().then(|| match rpr_estimate(t, &p_hat, rpr_opts) {
        Ok(est) => EstimateOutcome::Ok(finish_estimate(
            est.bloch,
            true,
            (!est.converged).then(|| format!("stopped at max_iter = {}", est.iterations)),
            truth,
            cfg.project_pure,
        )),
        Err(e) => EstimateOutcome::Error(e.to_string()),
    });
    Ok(RepetitionRecord { rep, counts, li, rpr })
}

fn aggregate<'a>(cells: impl Iterator<Item = &'a EstimateRecord>) -> Option<EstimatorAggregate> {
    let records: Vec<&EstimateRecord> = cells.collect();
    if records.is_empty() {
        return None;
    }
    let n = records.len();
    let nf = n as f64;
    let mut mean = [0.0; 3];
    for rec in &records {
        for (m, mu) in mean.iter_mut().zip(1..4) {
            *m += rec.bloch.get(mu) / nf;
        }
    }
    let mut sample_std = [0.0; 3];
    if n > 1 {
        for rec in &records {
            for (sd, (m, mu)) in sample_std.iter_mut().zip(mean.iter().zip(1..4)) {
                *sd += (rec.bloch.get(mu) - m).powi(2);
            }
        }
        for sd in &mut sample_std {
            *sd = (*sd / (nf - 1.0)).sqrt();
        }
    }
    let std_of_mean = [
        sample_std[0] / nf.sqrt(),
        sample_std[1] / nf.sqrt(),
        sample_std[2] / nf.sqrt(),
    ];
    Some(EstimatorAggregate {
        n,
        mean,
        sample_std,
        std_of_mean,
        mean_purity: records.iter().map(|r| r.purity).sum::<f64>() / nf,
        mean_fidelity: records.iter().map(|r| r.fidelity).sum::<f64>() / nf,
    })
}

/// Run the configured experiment. `(state, repetition)` cells execute in
/// parallel with per-cell RNG streams; the output ordering and every value
/// are independent of the parallel schedule.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResults> {
    cfg.validate()?;
    let povm = cfg.resolve_povm()?;
    let t = measurement_matrix(&povm);
    let states = cfg.resolve_states()?;
    let rpr_opts = RprOptions::default();

    let per_state: Vec<(usize, BlochVec, [f64; 4])> = states
        .iter()
        .enumerate()
        .map(|(idx, (_, angles))| {
            let truth = angles.bloch();
            let p = probabilities(&t, &truth);
            (idx, truth, p)
        })
        .collect();

    let jobs: Vec<(usize, usize)> = (0..states.len())
        .flat_map(|si| (0..cfg.repetitions).map(move |rep| (si, rep)))
        .collect();
    let mut cells: Vec<((usize, usize), RepetitionRecord)> = jobs
        .into_par_iter()
        .map(|(si, rep)| {
            let (_, truth, p) = &per_state[si];
            run_cell(&t, p, truth, cfg, &rpr_opts, si, rep).map(|rec| ((si, rep), rec))
        })
        .collect::<Result<_>>()?;
    cells.sort_by_key(|((si, rep), _)| (*si, *rep));

    let mut records = Vec::with_capacity(states.len());
    for (si, (label, _)) in states.iter().enumerate() {
        let repetitions: Vec<RepetitionRecord> = cells
            .iter()
            .filter(|((s, _), _)| *s == si)
            .map(|(_, rec)| rec.clone())
            .collect();
        let li = aggregate(
            repetitions
                .iter()
                .filter_map(|r| r.li.as_ref())
                .filter_map(EstimateOutcome::as_ok),
        );
        let rpr = aggregate(
            repetitions
                .iter()
                .filter_map(|r| r.rpr.as_ref())
                .filter_map(EstimateOutcome::as_ok),
        );
        records.push(ExperimentRecord {
            state: label.clone(),
            true_bloch: per_state[si].1,
            repetitions,
            li,
            rpr,
        });
    }

    Ok(ExperimentResults {
        version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_ALGORITHM.to_string(),
        config: cfg.clone(),
        records,
    })
}

/// Write the flat CSV view: one row per `(state, repetition, estimator)`
/// with columns `state,rep,estimator,sx,sy,sz,purity,fidelity`. Failed cells
/// produce no row.
pub fn write_csv<W: std::io::Write>(results: &ExperimentResults, mut w: W) -> std::io::Result<()> {
    writeln!(w, "state,rep,estimator,sx,sy,sz,purity,fidelity")?;
    for record in &results.records {
        for rep in &record.repetitions {
            for (name, cell) in [("li", &rep.li), ("rpr", &rep.rpr)] {
                if let Some(EstimateOutcome::Ok(est)) = cell {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{},{}",
                        record.state,
                        rep.rep,
                        name,
                        est.bloch.get(1),
                        est.bloch.get(2),
                        est.bloch.get(3),
                        est.purity,
                        est.fidelity
                    )?;
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bloch::fidelity as exact_fidelity;
    use crate::circuit::theta_star;

    #[test]
    fn sample_counts_degenerate_distribution() {
        let c = sample_counts(&[1.0, 0.0, 0.0, 0.0], 1000, 1).unwrap();
        assert_eq!(*c.counts(), [1000, 0, 0, 0]);
    }

    #[test]
    fn sample_counts_uniform_within_binomial_band() {
        let n = 1_000_000u64;
        let c = sample_counts(&[0.25; 4], n, 2).unwrap();
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        for &count in c.counts() {
            let p_hat = count as f64 / n as f64;
            assert!((p_hat - 0.25).abs() < 5.0 * sigma, "p_hat = {p_hat}");
        }
    }

    #[test]
    fn sample_counts_deterministic() {
        let p = [0.4, 0.3, 0.2, 0.1];
        assert_eq!(sample_counts(&p, 4096, 99).unwrap(), sample_counts(&p, 4096, 99).unwrap());
        assert_ne!(sample_counts(&p, 4096, 99).unwrap(), sample_counts(&p, 4096, 100).unwrap());
    }

    #[test]
    fn sample_counts_rejects_bad_input() {
        assert!(sample_counts(&[0.5, 0.5, 0.5, 0.5], 10, 0).is_err());
        assert!(sample_counts(&[0.5, -0.2, 0.4, 0.3], 10, 0).is_err());
        assert!(sample_counts(&[0.25; 4], 0, 0).is_err());
    }

    #[test]
    fn pauli_suite_bloch_vectors() {
        let want: [(&str, [f64; 3]); 6] = [
            ("z0", [0.0, 0.0, 1.0]),
            ("z1", [0.0, 0.0, -1.0]),
            ("x0", [1.0, 0.0, 0.0]),
            ("x1", [-1.0, 0.0, 0.0]),
            ("y0", [0.0, 1.0, 0.0]),
            ("y1", [0.0, -1.0, 0.0]),
        ];
        for ((label, angles), (want_label, want_s)) in pauli_eigenstate_suite().iter().zip(&want) {
            assert_eq!(label, want_label);
            let s = angles.bloch();
            for mu in 0..3 {
                assert!((s.get(mu + 1) - want_s[mu]).abs() < 1e-12, "{label}");
            }
        }
    }

    #[test]
    fn bloch_fidelity_matches_exact_on_physical_pairs() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(83);
        for _ in 0..200 {
            let a = loop {
                let v = [
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                ];
                if v.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                    break BlochVec::new(v[0], v[1], v[2]);
                }
            };
            let b = BlochVec::new(-a.get(2) * 0.5, a.get(1) * 0.5, a.get(3) * 0.3);
            let lenient = bloch_fidelity(&a, &b);
            let exact = exact_fidelity(&bloch_to_density(&a), &bloch_to_density(&b)).unwrap();
            assert!((lenient - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::pauli_suite(1);
        cfg.shots = 0;
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig {
            circuit: CircuitChoice::Full,
            theta: Some(vec![GateAngles::zero(); 2]),
            states: vec![StateSpec::Named("z0".into())],
            shots: 16,
            repetitions: 1,
            estimator: EstimatorChoice::Both,
            project_pure: false,
            seed: 0,
        };
        assert!(cfg.validate().is_err());

        let cfg = ExperimentConfig {
            states: vec![StateSpec::Named("nope".into())],
            ..ExperimentConfig::pauli_suite(1)
        };
        assert!(run_experiment(&cfg).is_err());
    }

    #[test]
    fn z0_estimates_near_truth_at_default_scale() {
        let cfg = ExperimentConfig {
            states: vec![StateSpec::Named("z0".into())],
            seed: 42,
            ..ExperimentConfig::pauli_suite(42)
        };
        let results = run_experiment(&cfg).unwrap();
        let rpr = results.records[0].rpr.as_ref().unwrap();
        assert!(rpr.mean[2] > 0.90 && rpr.mean[2] <= 1.0, "mean s_z = {}", rpr.mean[2]);
        let li = results.records[0].li.as_ref().unwrap();
        assert!((li.mean[2] - 1.0).abs() < 0.15);
    }

    #[test]
    fn full_and_simplified_configs_match_canonical() {
        let p = theta_star();
        let full = ExperimentConfig {
            circuit: CircuitChoice::Full,
            theta: Some(vec![p.a1, p.a2, p.b1, p.b2]),
            ..ExperimentConfig::pauli_suite(7)
        };
        let simplified = ExperimentConfig {
            circuit: CircuitChoice::Simplified,
            theta: Some(vec![p.a1, p.a2]),
            ..ExperimentConfig::pauli_suite(7)
        };
        let canonical = ExperimentConfig::pauli_suite(7);
        let reference = run_experiment(&canonical).unwrap();
        for cfg in [full, simplified] {
            let out = run_experiment(&cfg).unwrap();
            // Same POVM up to roundoff, same seeds: identical counts.
            for (ra, rb) in out.records.iter().zip(&reference.records) {
                for (ca, cb) in ra.repetitions.iter().zip(&rb.repetitions) {
                    assert_eq!(ca.counts, cb.counts);
                }
            }
        }
    }

    #[test]
    fn high_shot_estimates_converge() {
        let cfg = ExperimentConfig {
            shots: 1_000_000,
            repetitions: 3,
            seed: 5,
            ..ExperimentConfig::pauli_suite(5)
        };
        let results = run_experiment(&cfg).unwrap();
        for record in &results.records {
            for agg in [record.li.as_ref().unwrap(), record.rpr.as_ref().unwrap()] {
                for mu in 0..3 {
                    let err = (agg.mean[mu] - record.true_bloch.get(mu + 1)).abs();
                    assert!(err < 5e-3, "{}: component {mu} error {err}", record.state);
                }
            }
        }
    }

    #[test]
    fn asymptotic_consistency_ten_million_shots() {
        let cfg = ExperimentConfig {
            shots: 10_000_000,
            repetitions: 1,
            seed: 13,
            ..ExperimentConfig::pauli_suite(13)
        };
        let results = run_experiment(&cfg).unwrap();
        for record in &results.records {
            for agg in [record.li.as_ref().unwrap(), record.rpr.as_ref().unwrap()] {
                for mu in 0..3 {
                    let err = (agg.mean[mu] - record.true_bloch.get(mu + 1)).abs();
                    assert!(err < 1e-2, "{}: component {mu} error {err}", record.state);
                }
            }
        }
    }

    #[test]
    fn projection_improves_fidelity_on_pure_suite() {
        let plain = ExperimentConfig { seed: 21, ..ExperimentConfig::pauli_suite(21) };
        let projected = ExperimentConfig { project_pure: true, ..plain.clone() };
        let a = run_experiment(&plain).unwrap();
        let b = run_experiment(&projected).unwrap();
        let avg = |results: &ExperimentResults| {
            let vals: Vec<f64> = results
                .records
                .iter()
                .map(|r| r.rpr.as_ref().unwrap().mean_fidelity)
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let (f_plain, f_proj) = (avg(&a), avg(&b));
        assert!(f_proj >= f_plain, "projection should not hurt: {f_plain} -> {f_proj}");
        assert!(f_proj > 0.99, "noiseless projected fidelity {f_proj}");
    }

    #[test]
    fn purity_dichotomy_li_vs_rpr() {
        let mut li_nonphysical = 0usize;
        for seed in 0..100u64 {
            let cfg = ExperimentConfig {
                states: vec![StateSpec::Named("x0".into())],
                repetitions: 1,
                seed,
                ..ExperimentConfig::pauli_suite(seed)
            };
            let results = run_experiment(&cfg).unwrap();
            let rep = &results.records[0].repetitions[0];
            if let Some(EstimateOutcome::Ok(li)) = &rep.li {
                if li.purity > 1.0 {
                    li_nonphysical += 1;
                }
            }
            if let Some(EstimateOutcome::Ok(rpr)) = &rep.rpr {
                assert!(rpr.purity <= 1.0, "seed {seed}: rpr purity {}", rpr.purity);
            }
        }
        assert!(li_nonphysical >= 1, "expected non-physical linear-inversion estimates");
    }

    #[test]
    fn aggregates_match_independent_recomputation() {
        let cfg = ExperimentConfig { seed: 3, ..ExperimentConfig::pauli_suite(3) };
        let results = run_experiment(&cfg).unwrap();
        for record in &results.records {
            let agg = record.rpr.as_ref().unwrap();
            let cells: Vec<&EstimateRecord> = record
                .repetitions
                .iter()
                .filter_map(|r| r.rpr.as_ref())
                .filter_map(EstimateOutcome::as_ok)
                .collect();
            assert_eq!(agg.n, cells.len());
            let nf = cells.len() as f64;
            for mu in 0..3 {
                let mean: f64 = cells.iter().map(|c| c.bloch.get(mu + 1)).sum::<f64>() / nf;
                assert!((mean - agg.mean[mu]).abs() < 1e-12);
                let var: f64 = cells
                    .iter()
                    .map(|c| (c.bloch.get(mu + 1) - mean).powi(2))
                    .sum::<f64>()
                    / (nf - 1.0);
                assert!((var.sqrt() - agg.sample_std[mu]).abs() < 1e-12);
                assert!((var.sqrt() / nf.sqrt() - agg.std_of_mean[mu]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn outputs_are_deterministic() {
        let cfg = ExperimentConfig { seed: 42, ..ExperimentConfig::pauli_suite(42) };
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        let mut csv_a = Vec::new();
        let mut csv_b = Vec::new();
        write_csv(&a, &mut csv_a).unwrap();
        write_csv(&b, &mut csv_b).unwrap();
        assert_eq!(csv_a, csv_b);
        assert_eq!(serde_json::to_string_pretty(&a).unwrap(), serde_json::to_string_pretty(&b).unwrap());
    }

    #[test]
    fn csv_has_expected_shape() {
        let cfg = ExperimentConfig {
            states: vec![StateSpec::Named("z0".into()), StateSpec::Named("x0".into())],
            repetitions: 2,
            ..ExperimentConfig::pauli_suite(1)
        };
        let results = run_experiment(&cfg).unwrap();
        let mut buf = Vec::new();
        write_csv(&results, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "state,rep,estimator,sx,sy,sz,purity,fidelity");
        // 2 states x 2 reps x 2 estimators.
        assert_eq!(lines.len(), 1 + 8);
        assert!(lines[1].starts_with("z0,0,li,"));
    }
}
