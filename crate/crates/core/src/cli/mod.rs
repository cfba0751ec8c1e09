//! Command-line driver: configuration, dispatch and file output.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

pub use config::{
    BoundsConfig, CoefficientsConfig, ConstantsConfig, ConstantsName, DataKind, GravityConfig, GravityName,
    LawConfig, LipschitzConfig, MeshConfig, OutputConfig, PhysicsConfig, RunConfig, SolverSection, StudyConfig,
    TimeConfig,
};
pub use output::{csv_row, num, write_table, write_vtk, CSV_HEADER};

use crate::coefficients::CoefficientModel;
use crate::error::{Error, Result};
use crate::forms::FunctionSpaces;
use crate::mesh::{build_rectangle_mesh, refine_uniform, Mesh, Side};
use crate::oracles::{
    cauchy_study, check_forms, contraction_study, convergence_study, AuditOptions, ContractionOptions, MmsStudy,
    ERROR_NAMES, GRONWALL_SLACK,
};
use crate::solver::{estimate_constants, initialize_state, run_from, ReRaConstants};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "bgs", version, about = "Generalized Boussinesq finite-element solver and verification harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Seed of the randomized oracles.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Time-step the configured problem and write diagnostics and fields.
    Run(Common),
    /// Manufactured-solution convergence study.
    Mms(Common),
    /// Successive-refinement differences of the configured problem.
    Cauchy(Common),
    /// Distance between a baseline and a perturbed trajectory.
    Contract(Common),
    /// Audit of the discrete forms.
    CheckForms(Common),
    /// Discrete coercivity and embedding constants of the configured mesh.
    EstimateConstants(Common),
}

/// Outcome of a subcommand that completed without an error.
enum Outcome {
    Passed,
    Failed(String),
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let line = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("invalid arguments");
            eprintln!("ERROR: {}", line.trim_start_matches("error: "));
            return EXIT_CONFIG;
        }
    };
    match execute(cli.command) {
        Ok(Outcome::Passed) => EXIT_OK,
        Ok(Outcome::Failed(reason)) => {
            eprintln!("ERROR: verification failed: {reason}");
            EXIT_VERIFICATION
        }
        Err(e) => {
            let code = match e.root() {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_SOLVER,
            };
            eprintln!("ERROR: {}", e.to_string().replace('\n', " "));
            code
        }
    }
}

fn require(common: &Common) -> Result<RunConfig> {
    match &common.config {
        Some(p) => RunConfig::load(p),
        None => Err(Error::Config("--config <path> is required for this subcommand".into())),
    }
}

fn mesh_of(config: &RunConfig) -> Result<Mesh<f64>> {
    let m = &config.mesh;
    let mut mesh = build_rectangle_mesh(m.nx, m.ny, &m.gamma1_sides)?;
    for _ in 0..m.refinements {
        mesh = refine_uniform(&mesh)?;
    }
    Ok(mesh)
}

fn output_dir(config: &RunConfig) -> Result<&Path> {
    let dir = config.output.directory.as_path();
    std::fs::create_dir_all(dir)?;
    Ok(dir)
}

fn constants_for(config: &RunConfig, spaces: &FunctionSpaces<f64>) -> Result<Option<ReRaConstants<f64>>> {
    if config.wants_estimate() {
        Ok(Some(estimate_constants(spaces)?))
    } else {
        Ok(None)
    }
}

fn execute(command: Command) -> Result<Outcome> {
    match command {
        Command::Run(c) => run_command(&require(&c)?),
        Command::Mms(c) => mms_command(&require(&c)?),
        Command::Cauchy(c) => cauchy_command(&require(&c)?),
        Command::Contract(c) => contract_command(&require(&c)?, c.seed),
        Command::CheckForms(c) => check_forms_command(&c),
        Command::EstimateConstants(c) => estimate_command(&require(&c)?),
    }
}

fn run_command(config: &RunConfig) -> Result<Outcome> {
    let problem = config.problem()?;
    let mesh = mesh_of(config)?;
    let spaces = FunctionSpaces::new(&mesh)?;
    let solver = config.solver_config(constants_for(config, &spaces)?)?;
    let dir = output_dir(config)?.to_path_buf();
    let n_steps = solver.n_steps();
    let every = config.output.vtk_every;

    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let initial = initialize_state(&spaces, &problem)?;
    let last = run_from(&spaces, &problem, &solver, initial, |n, state, d| {
        csv.push_str(&csv_row(d));
        csv.push('\n');
        if every > 0 && (n % every == 0 || n == n_steps) {
            write_vtk(&dir.join(format!("fields_{n:06}.vtk")), &spaces, state)?;
        }
        Ok(())
    })?;
    let path = dir.join(&config.output.csv_name);
    std::fs::write(&path, csv)?;
    println!("run: {} steps to t = {}, diagnostics in {}", n_steps, last.t, path.display());
    Ok(Outcome::Passed)
}

fn mms_command(config: &RunConfig) -> Result<Outcome> {
    let model = config.model()?;
    if config.mesh.nx != config.mesh.ny {
        return Err(Error::Config("the manufactured-solution study needs a square coarse mesh (nx = ny)".into()));
    }
    let g = config.gravity();
    let study = MmsStudy {
        levels: config.study.levels,
        coarse: config.mesh.nx << config.mesh.refinements,
        dt: config.time.dt,
        t_end: config.time.t_end,
        beta: config.physics.beta,
        gravity: g,
        picard_enabled: config.solver.picard,
    };
    let report = convergence_study(&model, &study)?;
    let mut header = vec!["level", "cells", "h"];
    header.extend(ERROR_NAMES);
    let rate_names: Vec<String> = ERROR_NAMES.iter().map(|n| format!("rate_{n}")).collect();
    header.extend(rate_names.iter().map(String::as_str));
    header.push("seconds");
    let rows: Vec<Vec<String>> = report
        .levels
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let mut r = vec![l.level.to_string(), l.cells.to_string(), num(1.0 / l.cells as f64)];
            r.extend(l.as_array().iter().map(|v| num(*v)));
            match k.checked_sub(1).map(|i| report.rates[i]) {
                Some(rates) => r.extend(rates.iter().map(|v| num(*v))),
                None => r.extend(std::iter::repeat_n(String::new(), 4)),
            }
            r.push(format!("{:.3}", l.seconds));
            r
        })
        .collect();
    let dir = output_dir(config)?;
    write_table(&dir.join("report_mms.csv"), None, &header, &rows)?;
    let rates = report.finest_rates().unwrap_or([f64::NAN; 4]);
    println!("mms: finest rates {:?} (targets {:?})", rates, report.targets);
    if report.passed() {
        Ok(Outcome::Passed)
    } else {
        let mut why = Vec::new();
        if !report.errors_decreasing() {
            why.push("errors not strictly decreasing".to_string());
        }
        for (i, ok) in report.rates_met().iter().enumerate() {
            if !ok {
                why.push(format!("{} rate {:.3} below {}", ERROR_NAMES[i], rates[i], report.targets[i]));
            }
        }
        Ok(Outcome::Failed(why.join(", ")))
    }
}

fn cauchy_command(config: &RunConfig) -> Result<Outcome> {
    let problem = config.problem()?;
    let solver = config.solver_config(None)?;
    if config.mesh.nx != config.mesh.ny {
        return Err(Error::Config("the refinement study needs a square coarse mesh (nx = ny)".into()));
    }
    let report = cauchy_study(
        &problem,
        config.mesh.nx << config.mesh.refinements,
        &config.mesh.gamma1_sides,
        config.study.levels,
        &solver,
    )?;
    let (vr, tr) = (report.velocity_ratios(), report.temperature_ratios());
    let rows: Vec<Vec<String>> = (0..report.velocity.len())
        .map(|k| {
            let ratio = |r: &[f64]| k.checked_sub(1).map(|i| num(r[i])).unwrap_or_default();
            vec![
                k.to_string(),
                num(report.velocity[k]),
                num(report.temperature[k]),
                num(report.velocity_quadrature[k]),
                num(report.temperature_quadrature[k]),
                ratio(&vr),
                ratio(&tr),
            ]
        })
        .collect();
    let header = [
        "pair",
        "velocity",
        "temperature",
        "velocity_quadrature",
        "temperature_quadrature",
        "velocity_ratio",
        "temperature_ratio",
    ];
    write_table(&output_dir(config)?.join("report_cauchy.csv"), None, &header, &rows)?;
    println!("cauchy: velocity ratios {vr:?}, temperature ratios {tr:?}");
    if report.passed() {
        Ok(Outcome::Passed)
    } else {
        Ok(Outcome::Failed(format!(
            "ratios above {} or path disagreement {:.3e} above 5%",
            report.max_ratio,
            report.path_disagreement()
        )))
    }
}

fn contract_command(config: &RunConfig, seed: u64) -> Result<Outcome> {
    let problem = config.problem()?;
    let mesh = mesh_of(config)?;
    let spaces = FunctionSpaces::new(&mesh)?;
    let solver = config.solver_config(constants_for(config, &spaces)?)?;
    let options = ContractionOptions { delta: config.study.delta, seed, zero_forcing: config.data == DataKind::Zero };
    let report = contraction_study(&spaces, &problem, &solver, &options)?;
    let rows: Vec<Vec<String>> = (0..report.times.len())
        .map(|n| {
            vec![num(report.times[n]), num(report.distance[n]), num(report.bound[n]), num(report.re_plus_ra[n])]
        })
        .collect();
    let comment = format!(
        "D = L2 distance squared; bound = D(0) exp(sum (M + N) dt) (1 + {GRONWALL_SLACK:e}) with H1 seminorms of the baseline in M; c1 = {}, c1_prime = {}",
        solver.constants.c1, solver.constants.c1_prime
    );
    let header = ["t", "distance", "bound", "Re_plus_Ra"];
    write_table(&output_dir(config)?.join("report_contract.csv"), Some(&comment), &header, &rows)?;
    println!("contract: margin {:.6e}, monotone {}", report.margin(), report.monotone());
    if report.passed() {
        Ok(Outcome::Passed)
    } else if !report.bound_holds() {
        Ok(Outcome::Failed("distance exceeds the exponential bound".into()))
    } else {
        Ok(Outcome::Failed("distance grew although the uniqueness condition held without forcing".into()))
    }
}

fn check_forms_command(common: &Common) -> Result<Outcome> {
    let (spaces, model, trials, dir) = match &common.config {
        Some(p) => {
            let config = RunConfig::load(p)?;
            let spaces = FunctionSpaces::new(&mesh_of(&config)?)?;
            let dir = output_dir(&config)?.to_path_buf();
            (spaces, config.model()?, config.study.trials, Some(dir))
        }
        None => {
            let mesh = build_rectangle_mesh(4, 4, &[Side::Left])?;
            let model = CoefficientModel::tanh_blend((0.5, 2.0), (0.5, 2.0))?;
            (FunctionSpaces::new(&mesh)?, model, 100, None)
        }
    };
    let audit = check_forms(&spaces, &AuditOptions::new(trials, common.seed, model))?;
    let rows: Vec<Vec<String>> = audit
        .checks
        .iter()
        .map(|c| vec![c.name.to_string(), num(c.worst), num(c.tolerance), c.samples.to_string(), c.passed.to_string()])
        .collect();
    let header = ["check", "worst", "tolerance", "samples", "passed"];
    for r in &rows {
        println!("{}", r.join(","));
    }
    println!("max_skew_violation,{}", num(audit.max_skew_violation()));
    println!("c1,{}\nc1_prime,{}\ncontinuity,{}", num(audit.c1), num(audit.c1_prime), num(audit.continuity));
    if let Some(dir) = dir {
        write_table(&dir.join("report_check-forms.csv"), None, &header, &rows)?;
    }
    if audit.passed() {
        Ok(Outcome::Passed)
    } else {
        Ok(Outcome::Failed(format!("form checks failed: {}", audit.failures().join(", "))))
    }
}

fn estimate_command(config: &RunConfig) -> Result<Outcome> {
    let spaces = FunctionSpaces::new(&mesh_of(config)?)?;
    let k = estimate_constants(&spaces)?;
    let rows = vec![vec![num(k.c1), num(k.c1_prime), num(k.d)]];
    write_table(&output_dir(config)?.join("report_estimate-constants.csv"), None, &["c1", "c1_prime", "d"], &rows)?;
    println!("c1,{}\nc1_prime,{}\nd,{}", num(k.c1), num(k.c1_prime), num(k.d));
    Ok(Outcome::Passed)
}
