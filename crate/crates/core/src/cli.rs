//! Command-line front end. Every subcommand writes its files into `--out`
//! through a temporary file and a rename; diagnostics go to standard error as
//! one JSON object per line.
//!
//! Exit codes: 0 success, 2 invalid input or failed hypothesis check,
//! 3 solver failure, 4 no convergence.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::direct::{evaluate_u, flux_left};
use crate::error::{Error, Result};
use crate::grid::{TimeGrid, DEFAULT_GAMMA};
use crate::inverse::{apriori_band_on, h_limit, picard_solve, Coefficient, PicardOptions};
use crate::problem::{manufacture, ManufactureOptions, ProblemData, Scenario};
use crate::validate::{check_hypotheses, estimate_beta};

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "heatinv", version, about = "Recover a degenerate time-dependent heat conduction coefficient")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Temperature field and left-wall flux for a given coefficient.
    Direct(DirectArgs),
    /// Recover the coefficient from a problem file.
    Inverse(InverseArgs),
    /// Generate a problem file from a known power-law coefficient.
    Manufacture(ManufactureArgs),
    /// Check the hypotheses on a problem file.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct DirectArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// CSV with header `t,a`.
    #[arg(long)]
    pub coefficient: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Uniform x panels for `u.csv`; the problem's x-grid when omitted.
    #[arg(long)]
    pub nx: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InverseArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub relax: f64,
    #[arg(long = "max-iter", default_value_t = 200)]
    pub max_iter: usize,
    /// Panels of a graded inversion grid; the problem's t-grid when omitted.
    #[arg(long)]
    pub nt: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
    /// Skip the hypothesis gate.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct ManufactureArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// steady-linear, constant, heating or ramp.
    #[arg(long, default_value = "heating")]
    pub scenario: String,
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Scale `c` of the true coefficient `c t^beta`.
    #[arg(long, default_value_t = 1.0)]
    pub c: f64,
    /// Value of the constant scenario.
    #[arg(long, default_value_t = 1.0)]
    pub level: f64,
    #[arg(long = "length", default_value_t = 1.0)]
    pub h: f64,
    #[arg(long = "horizon", default_value_t = 1.0)]
    pub horizon: f64,
    /// Panels of the coefficient grid; the data grid is 4 times finer.
    #[arg(long, default_value_t = 100)]
    pub nt: usize,
    /// Panels of the stored x-grid.
    #[arg(long, default_value_t = 20)]
    pub nx: usize,
    #[arg(long, default_value_t = DEFAULT_GAMMA)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Also write `report.json` here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Margin required by the strict inequalities.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
}

/// Exit code for a library error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Malformed(_)
        | Error::NonMonotoneGrid(_)
        | Error::InvalidParameter(_)
        | Error::WeakDegeneration(_)
        | Error::InsufficientData(_)
        | Error::Hypothesis(_)
        | Error::LimitHypothesis { .. }
        | Error::NonPositiveDatum { .. }
        | Error::Io(_)
        | Error::Json(_) => EXIT_INPUT,
        Error::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        _ => EXIT_SOLVER,
    }
}

fn event(name: &str, fields: serde_json::Value) {
    let mut obj = json!({ "event": name });
    if let (Some(o), serde_json::Value::Object(extra)) = (obj.as_object_mut(), fields) {
        o.extend(extra);
    }
    eprintln!("{obj}");
}

fn fail(err: &Error) -> i32 {
    let code = exit_code(err);
    event("error", json!({ "code": code, "message": err.to_string() }));
    code
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            code
        }
    }
}

pub fn run(cli: Cli) -> i32 {
    let outcome = match cli.command {
        Command::Direct(args) => run_direct(&args),
        Command::Inverse(args) => run_inverse(&args),
        Command::Manufacture(args) => run_manufacture(&args),
        Command::Validate(args) => run_validate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

/// Writes `contents` next to `path` under a temporary name, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Writes all files or none: everything is staged before the first rename.
fn write_all(dir: &Path, files: &[(&str, String)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut staged = Vec::new();
    for (name, contents) in files {
        let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
        if let Err(e) = fs::write(&tmp, contents) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(e.into());
        }
        staged.push((tmp, dir.join(name)));
    }
    for (tmp, path) in staged {
        fs::rename(tmp, path)?;
    }
    Ok(())
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn csv(header: &str, rows: impl Iterator<Item = Vec<f64>>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(num).collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}

/// Reads a `t,a` CSV (header optional).
pub fn read_coefficient(path: &Path, beta: f64) -> Result<Coefficient> {
    let text = fs::read_to_string(path)?;
    let mut ts = Vec::new();
    let mut values = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.chars().next().is_some_and(|c| c.is_ascii_alphabetic())) {
            continue;
        }
        let mut cells = line.split(',').map(str::trim);
        let parse = |cell: Option<&str>| -> Result<f64> {
            cell.ok_or_else(|| Error::Malformed(format!("{}: line {} has fewer than 2 columns", path.display(), n + 1)))?
                .parse::<f64>()
                .map_err(|e| Error::Malformed(format!("{}: line {}: {e}", path.display(), n + 1)))
        };
        ts.push(parse(cells.next())?);
        values.push(parse(cells.next())?);
    }
    let grid = TimeGrid::from_nodes(ts)?;
    Coefficient::new(grid, values, beta)
}

fn run_direct(args: &DirectArgs) -> Result<i32> {
    let problem = ProblemData::load(&args.input)?;
    let a = read_coefficient(&args.coefficient, problem.beta())?;
    if (a.grid().horizon() - problem.horizon()).abs() > 1e-12 * problem.horizon() {
        return Err(Error::InvalidParameter("coefficient grid does not end at T".into()));
    }
    let xs: Vec<f64> = match args.nx {
        Some(n) if n >= 1 => (0..=n).map(|j| if j == n { problem.h() } else { problem.h() * j as f64 / n as f64 }).collect(),
        Some(_) => return Err(Error::InvalidParameter("--nx must be at least 1".into())),
        None => problem.x_grid().to_vec(),
    };
    event("direct_start", json!({ "nodes": a.grid().len(), "x_points": xs.len() }));
    let field = evaluate_u(&problem, &a, &xs)?;
    let flux = flux_left(&problem, &a)?;
    let nodes = a.grid().nodes();
    let u_csv = csv(
        "x,t,u",
        (0..nodes.len()).flat_map(|i| {
            let field = &field;
            xs.iter().enumerate().map(move |(j, &x)| vec![x, nodes[i], field.at(i, j)])
        }),
    );
    let flux_csv = csv("t,ux0", flux.iter().map(|(t, v)| vec![t, v]));
    write_all(&args.out, &[("u.csv", u_csv), ("flux.csv", flux_csv)])?;
    event("direct_done", json!({ "out": args.out.display().to_string() }));
    Ok(0)
}

fn run_inverse(args: &InverseArgs) -> Result<i32> {
    let problem = ProblemData::load(&args.input)?;
    let report = check_hypotheses(&problem);
    let limit = h_limit(&problem).ok();
    if !report.pass && !args.force {
        let failed: Vec<&str> = report.failures().map(|c| c.name.as_str()).collect();
        event("hypotheses_failed", json!({ "conditions": failed }));
        let body = json!({ "hypotheses": report, "converged": false, "h_limit": limit });
        write_atomic(&args.out.join("report.json"), &serde_json::to_string_pretty(&body)?)?;
        return Ok(EXIT_INPUT);
    }
    let grid = match args.nt {
        Some(n) => TimeGrid::graded(problem.horizon(), n, args.gamma)?,
        None => problem.time_grid(),
    };
    let opts = PicardOptions {
        relaxation: args.relax,
        tolerance: args.tol,
        max_iterations: args.max_iter,
        grid: Some(grid.clone()),
        initial: None,
        force: true,
    };
    event("inverse_start", json!({ "nodes": grid.len(), "relaxation": args.relax, "tolerance": args.tol }));
    let solution = match picard_solve(&problem, &opts) {
        Ok(s) => s,
        Err(Error::NoConvergence { iterations, last_change, log }) => {
            event("no_convergence", json!({ "iterations": iterations, "last_change": last_change }));
            let body = json!({
                "hypotheses": report,
                "converged": false,
                "iterations": iterations,
                "last_change": last_change,
                "convergence": log.records,
                "h_limit": limit,
            });
            write_atomic(&args.out.join("report.json"), &serde_json::to_string_pretty(&body)?)?;
            return Ok(EXIT_NO_CONVERGENCE);
        }
        Err(e) => return Err(e),
    };
    let a = &solution.coefficient;
    let band = match &solution.band {
        Some(b) => Some(b.clone()),
        None => apriori_band_on(&problem, &grid).ok(),
    };
    let beta = problem.beta();
    let nodes = grid.nodes();
    let a_csv = csv(
        "t,a,a_over_t_beta,band_upper,band_lower",
        (0..nodes.len()).map(|i| {
            let weighted = if i == 0 { f64::NAN } else { a.values()[i] / nodes[i].powf(beta) };
            let (up, low) = band.as_ref().map_or((f64::NAN, f64::NAN), |b| (b.upper[i], b.lower[i]));
            vec![nodes[i], a.values()[i], weighted, up, low]
        }),
    );
    let conv_csv = {
        let mut out = String::from("iter,weighted_change,relaxation\n");
        for r in &solution.log.records {
            let _ = writeln!(out, "{},{},{}", r.iteration, num(r.weighted_change), num(r.relaxation));
        }
        out
    };
    let fitted = estimate_beta(a).ok();
    let body = json!({
        "hypotheses": report,
        "converged": true,
        "iterations": solution.iterations(),
        "residual": solution.residual,
        "fitted_beta": fitted,
        "h_limit": limit,
        "within_band": solution.log.within_band(),
        "band_h1": band.as_ref().map(|b| b.h1),
    });
    write_all(
        &args.out,
        &[("a.csv", a_csv), ("convergence.csv", conv_csv), ("report.json", serde_json::to_string_pretty(&body)?)],
    )?;
    event(
        "inverse_done",
        json!({ "iterations": solution.iterations(), "residual": solution.residual, "fitted_beta": fitted }),
    );
    Ok(0)
}

fn run_manufacture(args: &ManufactureArgs) -> Result<i32> {
    let scenario = match args.scenario.parse::<Scenario>()? {
        Scenario::Constant(_) => Scenario::Constant(args.level),
        s => s,
    };
    if !(args.beta >= 1.0) {
        return Err(Error::WeakDegeneration(args.beta));
    }
    if !(args.c > 0.0) {
        return Err(Error::InvalidParameter(format!("--c must be positive, got {}", args.c)));
    }
    let grid = TimeGrid::graded(args.horizon, args.nt, args.gamma)?;
    let a_true = Coefficient::power_law(grid, args.c, args.beta)?;
    let opts = ManufactureOptions { h: args.h, x_panels: args.nx, ..Default::default() };
    event("manufacture_start", json!({ "scenario": scenario.to_string(), "beta": args.beta, "c": args.c }));
    let m = manufacture(&a_true, scenario, &opts)?;
    let truth = csv("t,a", a_true.grid().nodes().iter().zip(a_true.values()).map(|(&t, &a)| vec![t, a]));
    write_all(&args.out, &[("problem.json", m.problem.to_json()?), ("a_true.csv", truth)])?;
    event("manufacture_done", json!({ "out": args.out.display().to_string() }));
    Ok(0)
}

fn run_validate(args: &ValidateArgs) -> Result<i32> {
    let problem = ProblemData::load(&args.input)?;
    let report = crate::validate::check_hypotheses_with(&problem, args.epsilon);
    let text = serde_json::to_string_pretty(&report)?;
    if let Some(dir) = &args.out {
        write_atomic(&dir.join("report.json"), &text)?;
    }
    println!("{text}");
    Ok(if report.pass { 0 } else { EXIT_INPUT })
}
