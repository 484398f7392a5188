//! Command-line front end: optimize measurement circuits, evaluate the
//! transfer function, verify SIC structure, post-process externally produced
//! counts, and run seeded shot-noise experiments.
//!
//! Exit codes: 0 on success, 1 on usage or input errors, 2 on numerical
//! failures (singular measurement matrix, ill-conditioned information
//! matrix, non-convergence). Errors go to stderr as single-line JSON.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sictomo::circuit::{povm_from_gate_angles, CircuitLayout, GateAngles, PovmSet};
use sictomo::experiment::{
    run_experiment, write_csv, EstimatorChoice, ExperimentConfig, RNG_ALGORITHM,
};
use sictomo::fisher::{qttf, QuadratureSpec};
use sictomo::optim::{optimize_circuit, report_quadrature, sic_check, NmOptions};
use sictomo::tomo::{li_estimate, measurement_matrix, rpr_estimate, CountVector, RprOptions};

#[derive(Parser)]
#[command(name = "sictomo", version, about = "Single-qubit state estimation with SIC-POVM circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for circuit angles minimizing the tomographic transfer function
    Optimize(OptimizeArgs),
    /// Evaluate the transfer function of stored circuit angles
    Qttf(QttfArgs),
    /// Check whether the POVM of stored circuit angles is a SIC set
    SicCheck(SicCheckArgs),
    /// Estimate a state from an externally produced counts file
    Estimate(EstimateArgs),
    /// Run a seeded shot-noise experiment from a config file
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CircuitArg {
    Full,
    Simplified,
}

impl From<CircuitArg> for CircuitLayout {
    fn from(value: CircuitArg) -> Self {
        match value {
            CircuitArg::Full => CircuitLayout::Full,
            CircuitArg::Simplified => CircuitLayout::Simplified,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Li,
    Rpr,
    Both,
}

impl From<EstimatorArg> for EstimatorChoice {
    fn from(value: EstimatorArg) -> Self {
        match value {
            EstimatorArg::Li => EstimatorChoice::Li,
            EstimatorArg::Rpr => EstimatorChoice::Rpr,
            EstimatorArg::Both => EstimatorChoice::Both,
        }
    }
}

#[derive(Args)]
struct OptimizeArgs {
    /// Circuit to optimize (12 or 6 parameters)
    #[arg(long, value_enum, default_value = "full")]
    circuit: CircuitArg,
    /// Number of random restarts
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    /// Base seed for the restart draws
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search quadrature as NxM Gauss-Legendre nodes
    #[arg(long, default_value = "16x16", value_parser = parse_quadrature)]
    quadrature: QuadratureSpec,
    /// Evaluation budget per restart
    #[arg(long, default_value_t = 20_000)]
    max_evals: usize,
    /// Write the summary JSON here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the best angles as a plain theta file
    #[arg(long)]
    theta_out: Option<PathBuf>,
}

#[derive(Args)]
struct QttfArgs {
    /// Theta file: JSON array of 4 (full) or 2 (simplified) angle triples
    #[arg(long)]
    theta: PathBuf,
    /// Quadrature as NxM Gauss-Legendre nodes
    #[arg(long, default_value = "64x64", value_parser = parse_quadrature)]
    quadrature: QuadratureSpec,
}

#[derive(Args)]
struct SicCheckArgs {
    /// Theta file: JSON array of 4 (full) or 2 (simplified) angle triples
    #[arg(long)]
    theta: PathBuf,
    /// Deviation tolerance on traces and overlaps
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct EstimateArgs {
    /// Counts file: JSON {"counts": [n00, n01, n10, n11]}
    #[arg(long)]
    counts: PathBuf,
    /// Theta file describing the measurement; tetrahedral POVM when omitted
    #[arg(long)]
    theta: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    estimator: EstimatorArg,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Override the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the shots per repetition
    #[arg(long)]
    shots: Option<u64>,
    /// Override the repetition count
    #[arg(long)]
    reps: Option<usize>,
    /// Override the estimator selection
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
    /// Directory for results.csv and results.json
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn parse_quadrature(text: &str) -> Result<QuadratureSpec, String> {
    let (a, b) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("'{text}' is not of the form NxM"))?;
    let n1: usize = a.trim().parse().map_err(|_| format!("bad node count '{a}'"))?;
    let n2: usize = b.trim().parse().map_err(|_| format!("bad node count '{b}'"))?;
    let spec = QuadratureSpec::gauss_legendre(n1, n2);
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

struct Failure {
    kind: &'static str,
    message: String,
    code: u8,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { kind: "usage", message: message.into(), code: 1 }
    }

    fn numerical(message: impl Into<String>) -> Self {
        Self { kind: "numerical", message: message.into(), code: 2 }
    }
}

impl From<sictomo::Error> for Failure {
    fn from(e: sictomo::Error) -> Self {
        if e.is_numerical() {
            Failure::numerical(e.to_string())
        } else {
            Failure::usage(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::usage(e.to_string())
    }
}

fn read_theta(path: &Path) -> Result<Vec<GateAngles>, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    let theta: Vec<GateAngles> = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    if theta.len() != 4 && theta.len() != 2 {
        return Err(Failure::usage(format!(
            "{}: expected 4 or 2 angle triples, found {}",
            path.display(),
            theta.len()
        )));
    }
    Ok(theta)
}

fn povm_for_theta(theta: &[GateAngles]) -> Result<PovmSet, Failure> {
    Ok(povm_from_gate_angles(theta)?)
}

fn emit(out: Option<&Path>, value: &serde_json::Value) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), Failure> {
    let layout: CircuitLayout = args.circuit.into();
    let opts = NmOptions { max_evals: args.max_evals, ..NmOptions::default() };
    let outcome = optimize_circuit(layout, args.restarts, args.seed, &args.quadrature, &opts)?;
    let povm = povm_for_theta(&outcome.theta)?;
    let sic = sic_check(&povm, 1e-6);
    let report = json!({
        "circuit": layout,
        "theta": outcome.theta,
        "qttf": outcome.qttf,
        "search_value": outcome.search_value,
        "restarts": args.restarts,
        "seed": args.seed,
        "rng": RNG_ALGORITHM,
        "search_quadrature": args.quadrature,
        "report_quadrature": report_quadrature(),
        "sic": sic,
        "history": outcome.history,
    });
    if let Some(path) = &args.theta_out {
        fs::write(path, serde_json::to_string_pretty(&outcome.theta)? + "\n")?;
    }
    emit(args.out.as_deref(), &report)
}

fn cmd_qttf(args: QttfArgs) -> Result<(), Failure> {
    let theta = read_theta(&args.theta)?;
    let povm = povm_for_theta(&theta)?;
    let value = qttf(&measurement_matrix(&povm), &args.quadrature)?;
    let circuit = if theta.len() == 4 { CircuitLayout::Full } else { CircuitLayout::Simplified };
    emit(
        None,
        &json!({
            "circuit": circuit,
            "theta": theta,
            "quadrature": args.quadrature,
            "qttf": value,
        }),
    )
}

fn cmd_sic_check(args: SicCheckArgs) -> Result<(), Failure> {
    let theta = read_theta(&args.theta)?;
    let povm = povm_for_theta(&theta)?;
    let report = sic_check(&povm, args.tol);
    emit(None, &serde_json::to_value(&report)?)
}

#[derive(serde::Deserialize)]
struct CountsFile {
    counts: [u64; 4],
}

fn cmd_estimate(args: EstimateArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.counts)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.counts.display())))?;
    let file: CountsFile = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.counts.display())))?;
    let counts = CountVector::new(file.counts)?;

    let (povm, measurement) = match &args.theta {
        Some(path) => (povm_for_theta(&read_theta(path)?)?, path.display().to_string()),
        None => (sictomo::circuit::canonical_sic_povm(), "canonical-sic".to_string()),
    };
    let t = measurement_matrix(&povm);
    let p_hat = counts.frequencies();
    let choice: EstimatorChoice = args.estimator.into();

    let mut report = json!({
        "measurement": measurement,
        "counts": counts,
        "total": counts.total(),
        "p_hat": p_hat,
    });
    if choice.runs_li() {
        let est = li_estimate(&t, &p_hat)?;
        report["li"] = json!({
            "bloch": est.bloch,
            "purity": sictomo::bloch::bloch_purity(&est.bloch),
            "physical": est.physical,
        });
    }
    if choice.runs_rpr() {
        let opts = RprOptions::default();
        let est = rpr_estimate(&t, &p_hat, &opts)?;
        if !est.converged {
            return Err(Failure::numerical(format!(
                "iteration did not converge within {} steps",
                opts.max_iter
            )));
        }
        report["rpr"] = json!({
            "bloch": est.bloch,
            "purity": sictomo::bloch::bloch_purity(&est.bloch),
            "iterations": est.iterations,
            "converged": est.converged,
        });
    }
    emit(None, &report)
}

fn cmd_experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text)
        .map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(shots) = args.shots {
        config.shots = shots;
    }
    if let Some(reps) = args.reps {
        config.repetitions = reps;
    }
    if let Some(estimator) = args.estimator {
        config.estimator = estimator.into();
    }

    let results = run_experiment(&config)?;

    fs::create_dir_all(&args.out_dir)?;
    let csv_path = args.out_dir.join("results.csv");
    let json_path = args.out_dir.join("results.json");
    let mut csv = Vec::new();
    write_csv(&results, &mut csv)?;
    fs::write(&csv_path, csv)?;
    fs::write(&json_path, serde_json::to_string_pretty(&results)? + "\n")?;

    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{}", csv_path.display())?;
    writeln!(stdout, "{}", json_path.display())?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Qttf(args) => cmd_qttf(args),
        Command::SicCheck(args) => cmd_sic_check(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Experiment(args) => cmd_experiment(args),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{}", json!({ "error": e.to_string(), "kind": "usage" }));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("{}", json!({ "error": failure.message, "kind": failure.kind }));
            ExitCode::from(failure.code)
        }
    }
}
