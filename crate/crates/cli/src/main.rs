//! `bellkit` command-line front end.
//!
//! Exit status: 0 success or all conditions hold, 1 a condition fails or the
//! behavior is not local, 2 input error, 3 resource or solver error.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use bellkit_core::conditions::{
    check_bell_local_conditional, check_bell_local_factorized, check_fr, check_no_conspiracy,
    check_no_extension, check_no_signaling, check_outcome_independence,
    check_parameter_independence, verify_bell_local_equivalence, verify_fr_equivalence,
    verify_jarrett, ConditionKind, EquivalenceReport,
};
use bellkit_core::format::{parse_model_with, write_transcript, LoadedModel, Metadata, ModelFile};
use bellkit_core::geometry::{
    chsh_max, local_membership_with, local_visibility_with, LocalityCertificate, MembershipOptions,
    DEFAULT_TOL_BIS, DEFAULT_TOL_LP,
};
use bellkit_core::quantum::{
    pure_state_behavior, singlet_behavior, MeasurementDirection, TwoQubitState,
};
use bellkit_core::simulator::{empirical_condition_check, simulate, summarize};
use bellkit_core::{averaged_behavior, build_joint, Behavior, GeometryError, EPS_NORM};

use report::{condition_rows, sig, strategy_label, table};

#[derive(Parser)]
#[command(
    name = "bellkit",
    version,
    about = "Check hidden-variable models and behaviors of two-party Bell experiments"
)]
struct Cli {
    /// Tolerance for condition verdicts and model validation.
    #[arg(long, global = true, env = "BELL_TOL", default_value_t = 1e-9)]
    tol: f64,
    /// Significant digits in printed numbers.
    #[arg(long, global = true, default_value_t = 6)]
    digits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every applicable condition checker on a model file.
    Check { file: PathBuf },
    /// Correlators and the largest CHSH expression.
    Chsh { file: PathBuf },
    /// Membership in the local polytope with a certificate.
    Local {
        file: PathBuf,
        /// Also report the critical visibility against uniform noise.
        #[arg(long)]
        visibility: bool,
        #[arg(long, default_value_t = DEFAULT_TOL_LP)]
        tol_lp: f64,
        #[arg(long, default_value_t = DEFAULT_TOL_BIS)]
        tol_bis: f64,
    },
    /// Write the behavior of a two-qubit state measured along given directions.
    Quantum(QuantumArgs),
    /// Sample runs of a model and summarize the frequencies.
    Simulate(SimulateArgs),
    /// Randomized checks of the equivalences between conditions.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct QuantumArgs {
    /// Named state; only `singlet` is available.
    #[arg(long, conflicts_with = "state")]
    preset: Option<String>,
    /// Eight comma-separated reals: re,im of the amplitudes of |00>,|01>,|10>,|11>.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    state: Option<Vec<f64>>,
    /// Measurement angles in degrees from the z axis in the x-z plane, Alice's
    /// followed by Bob's; an even count is split in half.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with_all = ["alice", "bob"])]
    angles: Option<Vec<f64>>,
    /// Alice's angles in degrees.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "bob"
    )]
    alice: Option<Vec<f64>>,
    /// Bob's angles in degrees.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        requires = "alice"
    )]
    bob: Option<Vec<f64>>,
    /// Output path; stdout when omitted.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    file: PathBuf,
    #[arg(long)]
    runs: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Reference model for the total-variation distance.
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    #[arg(long, default_value = "transcript.txt")]
    transcript: PathBuf,
    #[arg(long, default_value = "summary.json")]
    summary: PathBuf,
    /// z threshold of the empirical no-signaling check.
    #[arg(long, default_value_t = 5.0)]
    z: f64,
}

struct Failure {
    code: u8,
    message: String,
}

fn input(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 2,
        message: message.to_string(),
    }
}

fn resource(message: impl std::fmt::Display) -> Failure {
    Failure {
        code: 3,
        message: message.to_string(),
    }
}

fn geometry(e: GeometryError) -> Failure {
    match e {
        GeometryError::NotBinary(_) | GeometryError::NotChsh(_) | GeometryError::Model(_) => {
            input(e)
        }
        _ => resource(e),
    }
}

fn load(path: &Path, tol: f64) -> Result<LoadedModel, Failure> {
    let text = fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let file = parse_model_with(&text, tol.max(EPS_NORM))
        .map_err(|e| input(format!("{}: {e}", path.display())))?;
    file.load(tol.max(EPS_NORM))
        .map_err(|e| input(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| resource(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Check { file } => check(&cli, file),
        Command::Chsh { file } => chsh(&cli, file),
        Command::Local {
            file,
            visibility,
            tol_lp,
            tol_bis,
        } => local(&cli, file, *visibility, *tol_lp, *tol_bis),
        Command::Quantum(args) => quantum(args),
        Command::Simulate(args) => simulate_cmd(&cli, args),
        Command::Verify { trials, seed } => verify(&cli, *trials, *seed),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn check(cli: &Cli, file: &Path) -> Result<u8, Failure> {
    let loaded = load(file, cli.tol)?;
    let m = loaded.hv_model();
    let j = build_joint(&m, None).map_err(input)?;
    let mut reports = vec![
        check_no_conspiracy(&j, cli.tol),
        check_bell_local_factorized(&m, cli.tol),
        check_bell_local_conditional(&m, cli.tol),
        check_parameter_independence(&j, cli.tol),
        check_outcome_independence(&j, cli.tol),
        check_fr(&j, cli.tol),
        check_no_signaling(&averaged_behavior(&m), cli.tol),
    ];
    if m.labels().is_some() {
        reports.push(check_no_extension(&m, cli.tol).map_err(input)?);
    }
    if matches!(loaded, LoadedModel::Behavior(_) | LoadedModel::Quantum(_)) {
        println!("behavior checked as a single hidden-variable component with uniform settings");
    }
    println!(
        "scenario {}  components {}  tolerance {}",
        m.scenario(),
        m.len(),
        sig(cli.tol, cli.digits)
    );
    print!(
        "{}",
        table(
            &[
                "condition",
                "verdict",
                "max deviation",
                "vacuous",
                "worst cell"
            ],
            &condition_rows(&reports, cli.digits)
        )
    );
    Ok(if reports.iter().all(|r| r.holds) {
        0
    } else {
        1
    })
}

fn chsh(cli: &Cli, file: &Path) -> Result<u8, Failure> {
    let b = load(file, cli.tol)?.behavior();
    let r = chsh_max(&b).map_err(geometry)?;
    let rows: Vec<Vec<String>> = (0..2)
        .map(|a| {
            let mut row = vec![format!("a={a}")];
            row.extend((0..2).map(|bb| sig(r.correlators[a][bb], cli.digits)));
            row
        })
        .collect();
    print!("{}", table(&["E(a,b)", "b=0", "b=1"], &rows));
    println!("best variant: {}", r.variant.describe());
    println!("CHSH value: {:.4}", r.value);
    Ok(0)
}

fn local(
    cli: &Cli,
    file: &Path,
    visibility: bool,
    tol_lp: f64,
    tol_bis: f64,
) -> Result<u8, Failure> {
    let b = load(file, cli.tol)?.behavior();
    let opts = MembershipOptions {
        tol_lp,
        ..MembershipOptions::default()
    };
    let cert = local_membership_with(&b, &opts).map_err(geometry)?;
    let s = b.scenario();
    match &cert {
        LocalityCertificate::Member { weights, residual } => {
            println!(
                "verdict: local (convex mixture of {} deterministic strategies)",
                weights.len()
            );
            let rows: Vec<Vec<String>> = weights
                .iter()
                .map(|(d, w)| vec![strategy_label(d), sig(*w, cli.digits)])
                .collect();
            print!("{}", table(&["strategy", "weight"], &rows));
            println!("reconstruction residual: {}", sig(*residual, cli.digits));
        }
        LocalityCertificate::NonMember(f) => {
            println!("verdict: not local");
            println!("separating functional sum c[a][b][x][y] P(x,y|a,b):");
            let mut rows = Vec::new();
            for a in 0..s.settings_a {
                for bb in 0..s.settings_b {
                    for x in 0..s.outcomes_x {
                        for y in 0..s.outcomes_y {
                            let c = f.coefficients[s.index(a, bb, x, y)];
                            rows.push(vec![format!("({a},{bb},{x},{y})"), sig(c, cli.digits)]);
                        }
                    }
                }
            }
            print!("{}", table(&["(a,b,x,y)", "c"], &rows));
            println!("local bound: {}", sig(f.local_bound, cli.digits));
            println!("value on behavior: {}", sig(f.value, cli.digits));
        }
    }
    if visibility {
        let v = local_visibility_with(&b, tol_bis, &opts).map_err(geometry)?;
        println!("critical visibility: {}", sig(v, cli.digits));
    }
    Ok(if cert.is_member() { 0 } else { 1 })
}

fn quantum(args: &QuantumArgs) -> Result<u8, Failure> {
    let (alice, bob) = match (&args.angles, &args.alice, &args.bob) {
        (Some(all), _, _) => {
            if all.is_empty() || all.len() % 2 != 0 {
                return Err(input("--angles needs an even, nonzero number of values"));
            }
            let (a, b) = all.split_at(all.len() / 2);
            (a.to_vec(), b.to_vec())
        }
        (None, Some(a), Some(b)) => (a.clone(), b.clone()),
        _ => (vec![0.0, 90.0], vec![45.0, 135.0]),
    };
    let da: Vec<_> = alice
        .iter()
        .map(|d| MeasurementDirection::in_plane(*d))
        .collect();
    let db: Vec<_> = bob
        .iter()
        .map(|d| MeasurementDirection::in_plane(*d))
        .collect();
    let (behavior, name) = match (&args.preset, &args.state) {
        (_, Some(v)) => {
            if v.len() != 8 {
                return Err(input(format!("--state needs 8 values, found {}", v.len())));
            }
            let amps: [Complex64; 4] =
                std::array::from_fn(|i| Complex64::new(v[2 * i], v[2 * i + 1]));
            let psi = TwoQubitState::new(amps).map_err(input)?;
            (
                pure_state_behavior(&psi, &da, &db).map_err(input)?,
                "pure two-qubit state",
            )
        }
        (Some(p), None) if p == "singlet" => {
            (singlet_behavior(&da, &db).map_err(input)?, "singlet")
        }
        (Some(p), None) => return Err(input(format!("unknown preset {p:?}; available: singlet"))),
        (None, None) => return Err(input("give --preset singlet or --state")),
    };
    let fmt_angles = |v: &[f64]| {
        v.iter()
            .map(|d| format!("{d}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    let metadata = Metadata {
        name: Some(name.to_string()),
        description: Some(format!(
            "Alice at [{}] deg, Bob at [{}] deg in the x-z plane",
            fmt_angles(&alice),
            fmt_angles(&bob)
        )),
    };
    let json = ModelFile::from_behavior(&behavior, metadata).to_json();
    match &args.output {
        Some(path) => write_file(path, format!("{json}\n").as_bytes())?,
        None => {
            // a closed pipe (e.g. `| head`) is not an error for the writer
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{json}");
        }
    }
    Ok(0)
}

fn simulate_cmd(cli: &Cli, args: &SimulateArgs) -> Result<u8, Failure> {
    let m = load(&args.file, cli.tol)?.hv_model();
    let reference: Option<Behavior> = match &args.reference {
        Some(p) => Some(load(p, cli.tol)?.behavior()),
        None => None,
    };
    let t = simulate(&m, args.runs, args.seed).map_err(input)?;
    let summary = summarize(&t, reference.as_ref()).map_err(input)?;

    let mut buf = Vec::new();
    write_transcript(&t, &mut buf).map_err(resource)?;
    write_file(&args.transcript, &buf)?;

    let ns = empirical_condition_check(&t, ConditionKind::NoSignaling, args.z).map_err(input)?;
    let unsampled: Vec<[usize; 2]> = summary.unsampled.iter().map(|&(a, b)| [a, b]).collect();
    let json = serde_json::json!({
        "runs": summary.runs,
        "seed": t.seed,
        "model_digest": t.model_digest,
        "scenario": [t.scenario.settings_a, t.scenario.settings_b, t.scenario.outcomes_x, t.scenario.outcomes_y],
        "counts": summary.counts,
        "setting_counts": summary.setting_counts,
        "behavior": summary.behavior.as_slice(),
        "std_errors": summary.std_errors,
        "unsampled": unsampled,
        "chsh": summary.chsh.as_ref().map(|c| serde_json::json!({
            "value": c.value,
            "std_error": c.std_error,
            "variant": c.variant.describe(),
            "correlators": c.correlators,
        })),
        "tv_distance": summary.tv_distance,
        "no_signaling": {
            "holds": ns.holds,
            "max_z": ns.max_deviation,
            "z_threshold": ns.tolerance_used,
            "vacuous_cells": ns.vacuous_cells,
            "min_group_size": ns.sample_support,
        },
    });
    let text = serde_json::to_string_pretty(&json).map_err(resource)?;
    write_file(&args.summary, format!("{text}\n").as_bytes())?;

    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "runs {}  seed {}  model {}",
        summary.runs,
        t.seed,
        &t.model_digest[..16]
    );
    match &summary.chsh {
        Some(c) => {
            let _ = writeln!(
                out,
                "empirical CHSH: {} ± {}",
                sig(c.value, cli.digits),
                sig(c.std_error, cli.digits)
            );
        }
        None => {
            let _ = writeln!(
                out,
                "empirical CHSH: not available for this scenario or sample"
            );
        }
    }
    if let Some(tv) = summary.tv_distance {
        let _ = writeln!(out, "TV distance to reference: {}", sig(tv, cli.digits));
    }
    for (a, b) in &summary.unsampled {
        let _ = writeln!(out, "setting pair (a={a}, b={b}) never sampled");
    }
    let _ = writeln!(
        out,
        "empirical no-signaling at {}σ: {} (max z {})",
        sig(args.z, cli.digits),
        if ns.holds { "holds" } else { "FAILS" },
        sig(ns.max_deviation, cli.digits)
    );
    let _ = writeln!(out, "transcript: {}", args.transcript.display());
    let _ = writeln!(out, "summary: {}", args.summary.display());
    Ok(0)
}

fn verify(cli: &Cli, trials: usize, seed: u64) -> Result<u8, Failure> {
    let suites: Vec<EquivalenceReport> = vec![
        verify_bell_local_equivalence(trials, seed, cli.tol).map_err(input)?,
        verify_fr_equivalence(trials, seed, cli.tol).map_err(input)?,
        verify_jarrett(trials, seed, cli.tol).map_err(input)?,
    ];
    let rows: Vec<Vec<String>> = suites
        .iter()
        .map(|r| {
            vec![
                r.name.to_string(),
                r.trials.to_string(),
                r.agreements.to_string(),
                r.lhs_held.to_string(),
                r.rhs_held.to_string(),
                r.direction_failures.proof_steps.to_string(),
                if r.passed() { "pass" } else { "FAIL" }.to_string(),
            ]
        })
        .collect();
    print!(
        "{}",
        table(
            &[
                "equivalence",
                "trials",
                "agree",
                "lhs held",
                "rhs held",
                "step failures",
                "result"
            ],
            &rows
        )
    );
    for r in &suites {
        if let Some(cx) = &r.counterexample {
            println!("counterexample for {}:\n{cx}", r.name);
        }
    }
    Ok(if suites.iter().all(EquivalenceReport::passed) {
        0
    } else {
        1
    })
}
