//! Scenario runner for the toolkit: validate / dilate / measure / channel /
//! unruh / fell subcommands over the JSON file formats, with CSV or JSON
//! output suitable for plotting.
//!
//! Exit codes: 0 success (valid / Feasible), 2 validation failure or
//! ToleranceNotMet, 1 malformed input.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use curved_qit::channel::compose;
use curved_qit::fell::{certify, solve_fell, FellStatus};
use curved_qit::io::{
    env_tol, read_json, write_json, ChannelJson, FellProblemJson, FellSolutionJson, MatrixJson,
    PovmJson, UnruhScenarioJson,
};
use curved_qit::povm::{neumark_dilate, simulate_frequencies};
use curved_qit::unruh::{agreement_csv, compare_representations, SqueezingParams};
use curved_qit::QitError;

#[derive(Parser)]
#[command(name = "curved-qit", version, about = "POVMs, CP maps, Neumark dilation, the Unruh detector and Fell expectation matching on truncated Fock spaces")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct IoArgs {
    /// Input JSON file.
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelAction {
    Apply,
    Compose,
    Choi,
    CpCheck,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check the POVM axioms of an effect collection.
    Validate {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Construct the square-root Neumark dilation and verify it.
    Dilate {
        #[command(flatten)]
        io: IoArgs,
        /// Random states used for the probability cross-check.
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Outcome probabilities of a POVM on a state, optionally with a
    /// finite-shot frequency simulation.
    Measure {
        #[command(flatten)]
        io: IoArgs,
        /// Density matrix JSON (dim/re/im) on the POVM's space.
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Apply, compose or certify channels.
    Channel {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, value_enum)]
        action: ChannelAction,
        /// Second channel for `compose` (applied first).
        #[arg(long)]
        input2: Option<PathBuf>,
        /// State for `apply`.
        #[arg(long)]
        state: Option<PathBuf>,
    },
    /// Representation-agreement sweep for the accelerated detector.
    Unruh {
        #[command(flatten)]
        io: IoArgs,
        /// Replace the scenario's cutoff list with a single cutoff.
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Solve an expectation-matching problem and certify the solution.
    Fell {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Override every constraint tolerance.
        #[arg(long)]
        eps: Option<f64>,
    },
}

fn emit(io: &IoArgs, text: &str) -> curved_qit::Result<()> {
    match &io.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn is_axiom_violation(e: &QitError) -> bool {
    matches!(
        e,
        QitError::NotPositive { .. }
            | QitError::Incomplete { .. }
            | QitError::NotHermitian { .. }
    )
}

fn run_validate(io: &IoArgs) -> curved_qit::Result<i32> {
    let json: PovmJson = read_json(&io.input)?;
    match json.to_povm(env_tol()) {
        Ok(_) => {
            let text = match io.format {
                Format::Json => "{\"valid\": true, \"violation\": null}\n".to_string(),
                Format::Csv => "valid,violation\ntrue,\n".to_string(),
            };
            emit(io, &text)?;
            Ok(0)
        }
        Err(e) if is_axiom_violation(&e) => {
            let text = match io.format {
                Format::Json => format!(
                    "{{\"valid\": false, \"violation\": {}}}\n",
                    serde_json::to_string(&e.to_string())?
                ),
                Format::Csv => format!("valid,violation\nfalse,\"{e}\"\n"),
            };
            emit(io, &text)?;
            Ok(2)
        }
        Err(e) => Err(e),
    }
}

fn run_dilate(io: &IoArgs, trials: usize, seed: u64) -> curved_qit::Result<i32> {
    let json: PovmJson = read_json(&io.input)?;
    let povm = json.to_povm(env_tol())?;
    let dil = neumark_dilate(&povm)?;
    let isometry_residual = dil.isometry_residual();
    let compression_residual = (0..povm.effects().len())
        .map(|k| dil.compression_residual(k))
        .fold(0f64, f64::max);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut prob_discrepancy = 0f64;
    for _ in 0..trials {
        let rho = curved_qit::random::density_matrix(povm.space(), &mut rng);
        let direct = povm.probabilities(&rho)?;
        let dilated = dil.dilated_probabilities(&rho)?;
        for (a, b) in direct.iter().zip(&dilated) {
            prob_discrepancy = prob_discrepancy.max((a - b).abs());
        }
    }
    let ok = isometry_residual < 1e-12 && compression_residual < 1e-10 && prob_discrepancy < 1e-10;
    let text = match io.format {
        Format::Json => format!(
            "{{\"dilation_dim\": {}, \"isometry_residual\": {:.16e}, \"compression_residual\": {:.16e}, \"probability_discrepancy\": {:.16e}, \"ok\": {}}}\n",
            dil.dilation_dim(), isometry_residual, compression_residual, prob_discrepancy, ok
        ),
        Format::Csv => format!(
            "dilation_dim,isometry_residual,compression_residual,probability_discrepancy,ok\n{},{:.16e},{:.16e},{:.16e},{}\n",
            dil.dilation_dim(), isometry_residual, compression_residual, prob_discrepancy, ok
        ),
    };
    emit(io, &text)?;
    Ok(if ok { 0 } else { 2 })
}

fn run_measure(
    io: &IoArgs,
    state: &Path,
    shots: Option<u64>,
    seed: u64,
) -> curved_qit::Result<i32> {
    let tol = env_tol();
    let povm = read_json::<PovmJson>(&io.input)?.to_povm(tol)?;
    let rho = read_json::<MatrixJson>(state)?.to_density(povm.space(), tol)?;
    match shots {
        None => {
            let p = povm.probabilities(&rho)?;
            let text = match io.format {
                Format::Json => {
                    let pairs: Vec<String> = povm
                        .outcomes()
                        .labels()
                        .iter()
                        .zip(&p)
                        .map(|(l, v)| format!("{}: {:.16e}", serde_json::to_string(l).unwrap(), v))
                        .collect();
                    format!("{{{}}}\n", pairs.join(", "))
                }
                Format::Csv => {
                    let mut out = String::from("label,p\n");
                    for (l, v) in povm.outcomes().labels().iter().zip(&p) {
                        out.push_str(&format!("{l},{v:.16e}\n"));
                    }
                    out
                }
            };
            emit(io, &text)?;
            Ok(0)
        }
        Some(n) => {
            let report = simulate_frequencies(&povm, &rho, n, seed)?;
            // frequency report is CSV-shaped regardless of the format flag
            emit(io, &report.to_csv())?;
            Ok(if report.any_violation() { 2 } else { 0 })
        }
    }
}

fn run_channel(
    io: &IoArgs,
    action: ChannelAction,
    input2: &Option<PathBuf>,
    state: &Option<PathBuf>,
) -> curved_qit::Result<i32> {
    let tol = env_tol().max(1e-8);
    let t = read_json::<ChannelJson>(&io.input)?.to_channel(tol)?;
    match action {
        ChannelAction::Apply => {
            let state_path = state.as_ref().ok_or_else(|| {
                QitError::InvalidInput("channel apply needs --state".into())
            })?;
            let rho = read_json::<MatrixJson>(state_path)?.to_density(t.space(), env_tol())?;
            let out = t.apply(&rho)?;
            let mut doc = serde_json::to_value(MatrixJson::from_matrix(out.rho.entries()))?;
            doc["weight"] = serde_json::json!(out.weight);
            emit(io, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
            Ok(0)
        }
        ChannelAction::Compose => {
            let second = input2.as_ref().ok_or_else(|| {
                QitError::InvalidInput("channel compose needs --input2".into())
            })?;
            let t1 = read_json::<ChannelJson>(second)?.to_channel(tol)?;
            let composed = compose(&t, &t1)?;
            let json = ChannelJson::from_channel(&composed);
            emit(io, &(serde_json::to_string_pretty(&json)? + "\n"))?;
            Ok(0)
        }
        ChannelAction::Choi => {
            let choi = t.choi();
            let json = MatrixJson::from_matrix(choi.entries());
            emit(io, &(serde_json::to_string_pretty(&json)? + "\n"))?;
            Ok(0)
        }
        ChannelAction::CpCheck => {
            let choi = t.choi();
            let min = choi.min_eigenvalue();
            let cp = choi.is_completely_positive(1e-10);
            let text = match io.format {
                Format::Json => format!("{{\"cp\": {cp}, \"min_eigenvalue\": {min:.16e}}}\n"),
                Format::Csv => format!("cp,min_eigenvalue\n{cp},{min:.16e}\n"),
            };
            emit(io, &text)?;
            Ok(if cp { 0 } else { 2 })
        }
    }
}

fn run_unruh(io: &IoArgs, cutoff: Option<usize>, alpha: Option<f64>) -> curved_qit::Result<i32> {
    let scenario: UnruhScenarioJson = read_json(&io.input)?;
    scenario.method()?; // validated even though the sweep reports both methods
    let params = SqueezingParams::new(scenario.a, scenario.omega)?;
    let alpha = alpha.unwrap_or(scenario.alpha);
    let cutoffs: Vec<usize> = match cutoff {
        Some(c) => vec![c],
        None => scenario.cutoffs.clone(),
    };
    let chi = scenario.chi_complex();
    if chi.iter().skip(1).any(|c| c.norm() > 0.0) {
        return Err(QitError::InvalidInput(
            "the agreement sweep requires the detector mode to live in the observed wedge (chi = [[1,0], [0,0], ...])".into(),
        ));
    }
    let rows = compare_representations(&params, alpha, &cutoffs)?;
    let text = match io.format {
        Format::Csv => agreement_csv(&rows),
        Format::Json => {
            let items: Vec<String> = rows.iter().map(|r| format!(
                "{{\"cutoff\": {}, \"p_thermal\": {:.16e}, \"p_series\": {:.16e}, \"p_generator\": {:.16e}, \"d12\": {:.16e}, \"d13\": {:.16e}, \"tail\": {:.16e}}}",
                r.cutoff, r.p_thermal, r.p_series, r.p_generator, r.d12, r.d13, r.tail
            )).collect();
            format!("[{}]\n", items.join(", "))
        }
    };
    emit(io, &text)?;
    Ok(0)
}

fn run_fell(
    io: &IoArgs,
    max_iters: Option<usize>,
    seed: Option<u64>,
    eps: Option<f64>,
) -> curved_qit::Result<i32> {
    let mut json: FellProblemJson = read_json(&io.input)?;
    if let Some(m) = max_iters {
        json.max_iters = m;
    }
    if let Some(s) = seed {
        json.seed = s;
    }
    if let Some(e) = eps {
        for c in &mut json.constraints {
            c.eps = e;
        }
    }
    let problem = json.to_problem(env_tol())?;
    let solution = solve_fell(&problem)?;
    let report = certify(&problem, &solution)?;
    let sol_json = FellSolutionJson::from_solution(&solution);
    match &io.output {
        Some(path) => write_json(path, &sol_json)?,
        None => println!("{}", serde_json::to_string_pretty(&sol_json)?),
    }
    for row in &report.rows {
        eprintln!(
            "constraint {}: target {:+.6e} value {:+.6e} residual {:.3e} eps {:.1e} {}",
            row.index,
            row.target,
            row.value,
            row.residual,
            row.epsilon,
            if row.pass { "pass" } else { "FAIL" }
        );
    }
    let ok = solution.status == FellStatus::Feasible && report.pass;
    Ok(if ok { 0 } else { 2 })
}

fn dispatch(cli: &Cli) -> curved_qit::Result<i32> {
    match &cli.cmd {
        Cmd::Validate { io } => run_validate(io),
        Cmd::Dilate { io, trials, seed } => run_dilate(io, *trials, *seed),
        Cmd::Measure {
            io,
            state,
            shots,
            seed,
        } => run_measure(io, state, *shots, *seed),
        Cmd::Channel {
            io,
            action,
            input2,
            state,
        } => run_channel(io, *action, input2, state),
        Cmd::Unruh { io, cutoff, alpha } => run_unruh(io, *cutoff, *alpha),
        Cmd::Fell {
            io,
            max_iters,
            seed,
            eps,
        } => run_fell(io, *max_iters, *seed, *eps),
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    };
    std::process::exit(code);
}
