mod report;
mod specs;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qubitbell::assemblage::{is_valid, Severity};
use qubitbell::criterion::{chsh_fast_with, evaluate_with};
use qubitbell::generate::generate_with_trusted_inputs;
use qubitbell::oracle::{local_bound_enumerate_with, max_violation_search, SearchConfig, DEFAULT_STRATEGY_CAP};
use qubitbell::steering::{optimal_steering_basis, steering_evaluation, PauliTriple};
use qubitbell::tol::Tolerances;
use qubitbell::wellbehaved::well_behaved_heuristic;
use serde_json::json;

use report::{emit, envelope, sha256_hex, RunManifest};

/// Certify Bell violations of assemblages with one trusted qubit.
#[derive(Parser)]
#[command(name = "qubitbell", version)]
struct Cli {
    /// Emit machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for every randomized step; recorded in the manifest.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Override a tolerance, e.g. `--tolerance tie=1e-8`. Keys: herm, recon,
    /// norm, psd, nrm, ns, deg, tie.
    #[arg(long = "tolerance", global = true, value_name = "KEY=VALUE")]
    tolerances: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check an assemblage's positivity, normalization and no-signaling.
    /// Exit 0 if valid, 1 if not.
    Validate {
        /// Assemblage file or built-in name.
        assemblage: String,
        /// Treat signaling as an error rather than a warning.
        #[arg(long)]
        strict: bool,
    },
    /// Decide whether an assemblage violates an inequality.
    /// Exit 0 if violated, 1 if not.
    Analyze {
        /// Assemblage file or built-in name.
        assemblage: String,
        /// Inequality file or built-in: chsh, chsh-sym<k>, svetlichny, chained:<m>.
        inequality: String,
        /// Cross-check with a direct search over trusted measurements.
        #[arg(long)]
        oracle: bool,
        /// Polar grid points of the search.
        #[arg(long, default_value_t = 180)]
        grid: usize,
        /// Random POVMs scored per trusted input by the search.
        #[arg(long, default_value_t = 200)]
        povm_samples: usize,
        /// Golden-section refinement rounds of the search.
        #[arg(long, default_value_t = 4)]
        refine: usize,
        /// Compare with the two- and three-Pauli steering expressions
        /// (one untrusted party, two inputs, two outputs).
        #[arg(long)]
        steering: bool,
        /// Search this many violating samples for a local mixing that
        /// increases the violation.
        #[arg(long, value_name = "SAMPLES")]
        well_behaved: Option<usize>,
        /// Treat signaling as an error.
        #[arg(long)]
        strict: bool,
    },
    /// Build an assemblage from a state and untrusted qubit measurements.
    Generate {
        /// singlet, werner:<v>, ghz<n>, or a density-matrix file.
        state: String,
        /// Measurement directions, e.g. `ZX`, `ZX/XZ`, `phi=0,phi=90/phi=-45,phi=45`.
        measurements: String,
        /// Write the assemblage here instead of standard output.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Trusted input count recorded in the shape.
        #[arg(long, default_value_t = 2)]
        trusted_inputs: usize,
    },
    /// Exact local bound by enumerating deterministic strategies.
    Bound {
        /// Inequality file or built-in name.
        inequality: String,
        /// Maximum number of enumerated strategy combinations.
        #[arg(long, default_value_t = DEFAULT_STRATEGY_CAP)]
        cap: f64,
        /// Party order, trusted party 0 first by default; the last party is
        /// optimized input by input rather than enumerated.
        #[arg(long, value_delimiter = ',')]
        order: Option<Vec<usize>>,
    },
}

fn tolerances(overrides: &[String]) -> Result<Tolerances> {
    let mut tol = Tolerances::default();
    for o in overrides {
        let (key, value) = o
            .split_once('=')
            .with_context(|| format!("tolerance override {o:?} is not KEY=VALUE"))?;
        let value: f64 = value.parse().with_context(|| format!("tolerance {key} needs a number"))?;
        if !(value.is_finite() && value >= 0.0) {
            bail!("tolerance {key} must be a non-negative number");
        }
        if !tol.set(key, value) {
            bail!("unknown tolerance {key:?}");
        }
    }
    Ok(tol)
}

fn validate(cli: &Cli, tol: Tolerances, spec: &str, strict: bool) -> Result<u8> {
    let a = specs::load_assemblage(spec)?;
    let findings = a.value.validate_with(strict, &tol);
    let valid = is_valid(&findings);
    let body = json!({
        "command": "validate",
        "status": if valid { "valid" } else { "invalid" },
        "shape": a.value.shape(),
        "findings": findings.iter().map(|f| json!({"message": f.to_string(), "detail": f})).collect::<Vec<_>>(),
    });
    let manifest = RunManifest::new("validate", vec![a.record.with_role("assemblage")], tol, cli.seed);
    emit(&envelope(body, &manifest), cli.json);
    Ok(if valid { 0 } else { 1 })
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    cli: &Cli,
    tol: Tolerances,
    a_spec: &str,
    i_spec: &str,
    search: Option<SearchConfig>,
    steering: bool,
    well_behaved: Option<usize>,
    strict: bool,
) -> Result<u8> {
    let a = specs::load_assemblage(a_spec)?;
    let ineq = specs::load_inequality(i_spec)?;
    let findings = a.value.validate_with(strict, &tol);
    if !is_valid(&findings) {
        let msgs: Vec<String> = findings
            .iter()
            .filter(|f| f.severity == Severity::Error)
            .map(ToString::to_string)
            .collect();
        bail!("invalid assemblage:\n  {}", msgs.join("\n  "));
    }
    let mut report = evaluate_with(&a.value, &ineq.value, &tol)?;
    let sa = a.value.shape();
    let two_by_two = sa.inputs_per_party() == [2] && sa.outputs_per_party() == [2];
    let mut fast_lhs = None;
    if two_by_two && ineq.value.name() == Some("chsh") {
        let fast = chsh_fast_with(&a.value, &tol)?;
        report.bell_local = fast.bell_local;
        fast_lhs = Some(fast.lhs_value);
    }
    let mut body = json!({
        "command": "analyze",
        "verdict": report.verdict(),
        "lhs_value": report.lhs_value,
        "local_bound": report.local_bound,
    });
    if let Some(l) = fast_lhs {
        body["chsh_fast_lhs"] = json!(l);
    }
    body["warnings"] = json!(findings.iter().map(ToString::to_string).collect::<Vec<_>>());
    body["report"] = serde_json::to_value(&report)?;

    if let Some(cfg) = search {
        let o = max_violation_search(&a.value, &ineq.value, &cfg)?;
        let gap = report.lhs_value - o.value;
        body["oracle"] = json!({
            "value": o.value,
            "gap": gap,
            "grid_error_bound": o.grid_error_bound,
            "within_grid_bound": gap.abs() <= o.grid_error_bound,
            "search": o,
        });
    }
    if steering {
        if !two_by_two {
            bail!("--steering needs one untrusted party with two inputs and two outputs");
        }
        body["steering"] = json!({
            "computational": steering_evaluation(&a.value, PauliTriple::computational())?,
            "optimal": steering_evaluation(&a.value, optimal_steering_basis(&a.value)?)?,
        });
    }
    if let Some(samples) = well_behaved {
        let r = well_behaved_heuristic(&ineq.value, samples, cli.seed)?;
        body["well_behaved"] = json!({"summary": r.summary(), "search": r});
    }

    let manifest = RunManifest::new(
        "analyze",
        vec![a.record.with_role("assemblage"), ineq.record.with_role("inequality")],
        tol,
        cli.seed,
    );
    emit(&envelope(body, &manifest), cli.json);
    Ok(if report.violated { 0 } else { 1 })
}

fn generate(cli: &Cli, tol: Tolerances, state: &str, measurements: &str, out: Option<&PathBuf>, m: usize) -> Result<u8> {
    let state = specs::load_state(state)?;
    let ms = specs::parse_measurements(measurements, &state.value.dims()[1..])?;
    let a = generate_with_trusted_inputs(&state.value, &ms, m)?;
    let text = a.to_json_string();
    let Some(path) = out else {
        let _ = std::io::stdout().lock().write_all(text.as_bytes());
        return Ok(0);
    };
    fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?;
    let body = json!({
        "command": "generate",
        "output": path.display().to_string(),
        "sha256": sha256_hex(text.as_bytes()),
        "shape": a.shape(),
        "measurements": measurements,
    });
    let manifest = RunManifest::new("generate", vec![state.record.with_role("state")], tol, cli.seed);
    emit(&envelope(body, &manifest), cli.json);
    Ok(0)
}

fn bound(cli: &Cli, tol: Tolerances, spec: &str, cap: f64, order: Option<&Vec<usize>>) -> Result<u8> {
    let ineq = specs::load_inequality(spec)?;
    let parties = ineq.value.shape().untrusted_parties() + 1;
    let order = order.cloned().unwrap_or_else(|| (0..parties).collect());
    let value = local_bound_enumerate_with(&ineq.value, &order, cap)?;
    let body = json!({
        "command": "bound",
        "inequality": ineq.value.name(),
        "local_bound": value,
        "stated_bound": ineq.value.local_bound(),
        "party_order": order,
        "cap": cap,
    });
    let manifest = RunManifest::new("bound", vec![ineq.record.with_role("inequality")], tol, cli.seed);
    emit(&envelope(body, &manifest), cli.json);
    Ok(0)
}

fn run(cli: &Cli) -> Result<u8> {
    let tol = tolerances(&cli.tolerances)?;
    match &cli.command {
        Command::Validate { assemblage, strict } => validate(cli, tol, assemblage, *strict),
        Command::Analyze {
            assemblage,
            inequality,
            oracle,
            grid,
            povm_samples,
            refine,
            steering,
            well_behaved,
            strict,
        } => {
            let search = oracle.then(|| SearchConfig {
                grid_resolution: *grid,
                povm_samples: *povm_samples,
                refine_iterations: *refine,
                seed: cli.seed,
            });
            analyze(cli, tol, assemblage, inequality, search, *steering, *well_behaved, *strict)
        }
        Command::Generate {
            state,
            measurements,
            out,
            trusted_inputs,
        } => generate(cli, tol, state, measurements, out.as_ref(), *trusted_inputs),
        Command::Bound { inequality, cap, order } => bound(cli, tol, inequality, *cap, order.as_ref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            if cli.json {
                println!("{}", json!({"schema": report::SCHEMA, "error": format!("{e:#}")}));
            }
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

