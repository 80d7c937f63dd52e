//! Command-line front end: single solves, α-sweeps, the verification
//! suites, and reference values.
//!
//! Exit codes: `0` success, `1` solver failure, `2` invalid arguments.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use choquard::energy::{nehari_scale_psi, ChoquardParams};
use choquard::grid::{negative_part, positive_part};
use choquard::lab::{self, ReportFormat, SweepConfig, SweepMode};
use choquard::reference::{gamma_level, kappa_level, limit_groundstate_v, nls_groundstate};
use choquard::riesz::{hls_constant, hls_constant_unnormalized, normalization_ratio, riesz_constant};
use choquard::solvers::{
    fit_two_bumps, solve_groundstate, solve_nodal, symmetry_defect, two_bump_init, SolveResult,
    SolverConfig,
};
use choquard::{Error, Field, GridSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "choquard", version, about = "Spectral lab for the Choquard equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Positive groundstate at one order α.
    Groundstate(SolveArgs),
    /// Least-energy nodal solution at one order α.
    Nodal(NodalArgs),
    /// α-sweep toward 0 or N.
    Sweep(SweepArgs),
    /// Run one verification suite.
    Verify(VerifyArgs),
    /// Limit-problem levels and profiles.
    Reference(ReferenceArgs),
    /// Riesz and HLS constants.
    Constants(ConstantsArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Args)]
struct OutputArgs {
    /// Directory for reports and field files.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Args)]
struct GridArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Half length L of the box [-L, L)^N.
    #[arg(long = "box", default_value_t = 30.0)]
    half_length: f64,
    /// Points per axis (power of two).
    #[arg(long, default_value_t = 1024)]
    points: usize,
}

#[derive(Debug, Clone, Args)]
struct SolverArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long = "max-iters", default_value_t = 20_000)]
    max_iters: usize,
    /// Target H¹ norm of the residual.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            max_iterations: self.max_iters,
            residual_tolerance: self.tol,
            seed: self.seed,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
struct SolveArgs {
    #[arg(long)]
    alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Use the kernel |x|^{α−N} without the Riesz constant.
    #[arg(long)]
    unnormalized: bool,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct NodalArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Initial distance between the two bumps.
    #[arg(long, default_value_t = 8.0)]
    separation: f64,
}

#[derive(Debug, Clone, Args)]
struct SweepArgs {
    #[arg(long, default_value = "alpha0")]
    mode: String,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Defaults to 2 for alpha0 and 3 for alphaN.
    #[arg(long)]
    p: Option<f64>,
    /// Comma-separated orders; defaults depend on the mode.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[arg(long = "box", default_value_t = 40.0)]
    half_length: f64,
    #[arg(long, default_value_t = 2048)]
    points: usize,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Suite {
    FourierBound,
    RieszError,
    Oscillation,
    UpperBound,
    TranslatedLimit,
    HlsConstants,
    Nondegeneracy,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::FourierBound => "fourier-bound",
            Suite::RieszError => "riesz-error",
            Suite::Oscillation => "oscillation",
            Suite::UpperBound => "upper-bound",
            Suite::TranslatedLimit => "translated-limit",
            Suite::HlsConstants => "hls-constants",
            Suite::Nondegeneracy => "nondegeneracy",
        }
    }
}

#[derive(Debug, Clone, Args)]
struct VerifyArgs {
    #[arg(value_enum)]
    suite: Suite,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    /// Nonlinearity exponent; the NLS exponent of the limit is `2p`.
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long = "box", default_value_t = 30.0)]
    half_length: f64,
    /// Defaults to 2048 (4096 for the oscillation suite).
    #[arg(long)]
    points: Option<usize>,
    /// Orders for the hls-constants table.
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct ReferenceArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
struct ConstantsArgs {
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    alphas: Option<Vec<f64>>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Failure of a subcommand, already classified by exit code.
enum Failure {
    Usage(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidGrid(_)
            | Error::InvalidParams(_)
            | Error::AlphaOutOfRange { .. }
            | Error::GridMismatch => Failure::Usage(e.to_string()),
            other => Failure::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Solver(e.to_string())
    }
}

type Outcome = Result<i32, Failure>;

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let name = match &cli.command {
        Command::Groundstate(_) => "groundstate",
        Command::Nodal(_) => "nodal",
        Command::Sweep(_) => "sweep",
        Command::Verify(_) => "verify",
        Command::Reference(_) => "reference",
        Command::Constants(_) => "constants",
    };
    let result = match cli.command {
        Command::Groundstate(a) => run_groundstate(&a),
        Command::Nodal(a) => run_nodal(&a),
        Command::Sweep(a) => run_sweep(&a),
        Command::Verify(a) => run_verify(&a),
        Command::Reference(a) => run_reference(&a),
        Command::Constants(a) => run_constants(&a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n");
            let mut cmd = Cli::command();
            cmd.build();
            let usage = match cmd.find_subcommand_mut(name) {
                Some(sub) => sub.render_usage(),
                None => cmd.render_usage(),
            };
            eprintln!("{usage}");
            EXIT_USAGE
        }
        Err(Failure::Solver(msg)) => {
            eprintln!("solver failure: {msg}");
            EXIT_SOLVER
        }
    }
}

fn json_error(e: serde_json::Error) -> Failure {
    Failure::Solver(e.to_string())
}

/// Scalar entries of each row as CSV; columns are the sorted union of keys.
fn rows_to_csv(rows: &[Value]) -> String {
    let mut columns: Vec<String> = Vec::new();
    for row in rows {
        if let Value::Object(map) = row {
            for (k, v) in map {
                if !(v.is_object() || v.is_array()) && !columns.contains(k) {
                    columns.push(k.clone());
                }
            }
        }
    }
    columns.sort();
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = columns
            .iter()
            .map(|c| match row.get(c) {
                None | Some(Value::Null) => String::new(),
                Some(Value::Number(n)) if n.is_f64() => {
                    lab::format_float(n.as_f64().unwrap_or(f64::NAN))
                }
                Some(Value::String(s)) => format!("\"{}\"", s.replace('"', "\"\"")),
                Some(v) => v.to_string(),
            })
            .collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Prints `value` (or `rows` as CSV) and mirrors it into `out/name.{json,csv}`.
fn emit(value: &Value, rows: &[Value], name: &str, output: &OutputArgs) -> Result<(), Failure> {
    let json = lab::to_canonical_json(value).map_err(Failure::from)?;
    let text = match output.format {
        Format::Json => json.clone(),
        Format::Csv => rows_to_csv(rows),
    };
    print!("{text}");
    if let Some(dir) = &output.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{name}.json")), &json)?;
        if matches!(output.format, Format::Csv) {
            fs::write(dir.join(format!("{name}.csv")), &text)?;
        }
    }
    Ok(())
}

fn grid_of(g: &GridArgs) -> Result<GridSpec, Failure> {
    Ok(GridSpec::new(g.dim, g.half_length, g.points)?)
}

/// NLS profile used as the starting point; Gaussian when `2p` is
/// Sobolev-supercritical for the NLS.
fn nls_start(dim: usize, p: f64, grid: &GridSpec) -> Field {
    let q = 2.0 * p;
    let subcritical = dim <= 2 || q < 2.0 * dim as f64 / (dim as f64 - 2.0);
    if subcritical {
        if let Ok(u) = nls_groundstate(dim, q, grid) {
            return u;
        }
    }
    Field::from_fn(*grid, |x| (-x.iter().map(|v| v * v).sum::<f64>()).exp())
}

fn solve_summary(r: &SolveResult) -> Value {
    json!({
        "energy": r.energy,
        "residual_h1": r.residual_h1,
        "iterations": r.iterations,
        "termination": r.termination,
        "boundary_mass": r.boundary_mass,
        "nehari_defects": r.nehari_defects,
    })
}

fn grid_summary(g: &GridSpec) -> Value {
    json!({
        "dimension": g.dimension(),
        "half_length": g.half_length(),
        "points_per_axis": g.points_per_axis(),
    })
}

fn save_field(output: &OutputArgs, name: &str, field: &Field) -> Result<(), Failure> {
    if let Some(dir) = &output.out {
        fs::create_dir_all(dir)?;
        choquard::io::save(field, dir.join(format!("{name}.chqf")))?;
    }
    Ok(())
}

fn params_of(a: &SolveArgs) -> Result<ChoquardParams, Failure> {
    Ok(ChoquardParams::new(a.grid.dim, a.p, a.alpha, !a.unnormalized)?)
}

fn run_groundstate(a: &SolveArgs) -> Outcome {
    let params = params_of(a)?;
    let grid = grid_of(&a.grid)?;
    let config = a.solver.config();
    config.validate()?;
    let init = nls_start(a.grid.dim, a.p, &grid);
    let res = solve_groundstate(&params, &init, &config)?;
    let mut value = json!({
        "kind": "groundstate",
        "report_version": lab::REPORT_VERSION,
        "alpha": a.alpha,
        "p": a.p,
        "normalized_kernel": !a.unnormalized,
        "grid": grid_summary(&grid),
        "solve": solve_summary(&res),
    });
    if a.output.out.is_some() {
        value["field"] = json!("groundstate.chqf");
    }
    let row = json!({
        "alpha": a.alpha,
        "p": a.p,
        "energy": res.energy,
        "residual_h1": res.residual_h1,
        "iterations": res.iterations,
        "boundary_mass": res.boundary_mass,
    });
    save_field(&a.output, "groundstate", &res.field)?;
    emit(&value, &[row], "groundstate", &a.output)?;
    Ok(EXIT_OK)
}

fn run_nodal(n: &NodalArgs) -> Outcome {
    let a = &n.solve;
    let params = params_of(a)?;
    let grid = grid_of(&a.grid)?;
    let config = a.solver.config();
    config.validate()?;
    if !(n.separation > 0.0) {
        return Err(Failure::Usage("separation must be positive".into()));
    }
    let bump = if a.unnormalized && a.p >= 2.0 {
        limit_groundstate_v(a.grid.dim, a.p, 2.0, &grid)?
    } else {
        nls_start(a.grid.dim, a.p, &grid)
    };
    let init = two_bump_init(&bump, n.separation, 0.25, config.seed);
    let res = solve_nodal(&params, &init, &config)?;
    let fit = fit_two_bumps(&res.field, &bump)?;
    let sym = symmetry_defect(&res.field, &bump)?;
    let nn = a.grid.dim as f64;
    let mut value = json!({
        "kind": "nodal",
        "report_version": lab::REPORT_VERSION,
        "alpha": a.alpha,
        "p": a.p,
        "normalized_kernel": !a.unnormalized,
        "grid": grid_summary(&grid),
        "solve": solve_summary(&res),
        "fit": fit,
        "separation_pow_nmalpha": fit.separation.powf(nn - a.alpha),
        "symmetry": sym,
    });
    if a.unnormalized {
        value["t_scale"] = json!(nehari_scale_psi(&positive_part(&res.field), a.p, 2.0)?);
        value["s_scale"] = json!(nehari_scale_psi(&negative_part(&res.field), a.p, 2.0)?);
    }
    if a.output.out.is_some() {
        value["field"] = json!("nodal.chqf");
    }
    let row = json!({
        "alpha": a.alpha,
        "p": a.p,
        "energy": res.energy,
        "residual_h1": res.residual_h1,
        "separation": fit.separation,
        "fit_error": fit.fit_error_h1,
        "symmetry_defect": sym.minimum,
    });
    save_field(&a.output, "nodal", &res.field)?;
    emit(&value, &[row], "nodal", &a.output)?;
    Ok(EXIT_OK)
}

fn run_sweep(a: &SweepArgs) -> Outcome {
    let mode: SweepMode = a.mode.parse()?;
    let n = a.dim as f64;
    let p = a.p.unwrap_or(match mode {
        SweepMode::Alpha0 => 2.0,
        SweepMode::AlphaN => 3.0,
    });
    let alphas = a.alphas.clone().unwrap_or_else(|| match mode {
        SweepMode::Alpha0 => vec![0.4, 0.2, 0.1, 0.05],
        SweepMode::AlphaN => vec![0.7, 0.85, 0.95, 0.98],
    });
    let alphas = if a.alphas.is_some() {
        alphas
    } else {
        alphas.iter().map(|x| x * n).collect()
    };
    let grid = GridSpec::new(a.dim, a.half_length, a.points)?;
    let mut config = SweepConfig::new(mode, a.dim, p, alphas, grid);
    config.solver = a.solver.config();
    config.output_dir = a.output.out.clone();
    config.format = a.output.format.into();
    let outcome = lab::run_sweep(&config)?;
    let text = match a.output.format {
        Format::Json => lab::to_canonical_json(&outcome.report)?,
        Format::Csv => lab::report_csv(&outcome.report),
    };
    print!("{text}");
    let failed = outcome.report.records.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} sweep point(s) failed; see the error fields of the report");
        return Ok(EXIT_SOLVER);
    }
    Ok(EXIT_OK)
}

fn run_verify(a: &VerifyArgs) -> Outcome {
    let default_points = if matches!(a.suite, Suite::Oscillation) { 4096 } else { 2048 };
    let grid = GridSpec::new(a.dim, a.half_length, a.points.unwrap_or(default_points))?;
    let (records, rows, passed): (Value, Vec<Value>, Option<bool>) = match a.suite {
        Suite::FourierBound => {
            let recs = lab::suite_fourier_bound(&grid)?;
            let ok = recs.iter().all(|r| r.record.holds);
            let v = serde_json::to_value(&recs).map_err(json_error)?;
            (v.clone(), as_rows(&v), Some(ok))
        }
        Suite::RieszError => {
            let ladders = lab::suite_riesz_error(&grid, a.p)?;
            let ok = ladders.iter().all(|l| l.spread <= 4.0);
            let rows = ladders
                .iter()
                .flat_map(|l| {
                    l.records.iter().map(move |r| {
                        let mut v = serde_json::to_value(r).unwrap_or(Value::Null);
                        v["label"] = json!(l.label);
                        v
                    })
                })
                .collect();
            (serde_json::to_value(&ladders).map_err(json_error)?, rows, Some(ok))
        }
        Suite::Oscillation => {
            let recs = lab::suite_oscillation(&grid, lab::AlphaRule::InverseLog(0.25), 0.25)?;
            let ok = recs.iter().filter(|r| r.frequency > 0).all(|r| r.error < 0.0);
            let v = serde_json::to_value(&recs).map_err(json_error)?;
            (v.clone(), as_rows(&v), Some(ok))
        }
        Suite::UpperBound => {
            let recs = lab::suite_upper_bound(&grid, 2.0)?;
            let ok = recs.iter().all(|(_, r)| match r.fitted_exponent {
                Some(e) => (0.8..=1.2).contains(&e),
                None => r.entries.iter().all(|e| e.deficit <= 0.0),
            });
            let rows = recs
                .iter()
                .flat_map(|(name, r)| {
                    r.entries.iter().map(move |e| {
                        let mut v = serde_json::to_value(e).unwrap_or(Value::Null);
                        v["field"] = json!(name);
                        v
                    })
                })
                .collect();
            let v: Vec<Value> = recs
                .iter()
                .map(|(name, r)| {
                    let mut v = serde_json::to_value(r).unwrap_or(Value::Null);
                    v["field"] = json!(name);
                    v
                })
                .collect();
            (Value::Array(v), rows, Some(ok))
        }
        Suite::TranslatedLimit => {
            let recs = lab::suite_translated_limit(&grid)?;
            let ok = recs.iter().all(|r| r.final_gap <= 0.02);
            let rows = recs
                .iter()
                .flat_map(|r| {
                    r.entries.iter().map(move |e| {
                        let mut v = serde_json::to_value(e).unwrap_or(Value::Null);
                        v["rho"] = json!(r.rule.rho());
                        v
                    })
                })
                .collect();
            (serde_json::to_value(&recs).map_err(json_error)?, rows, Some(ok))
        }
        Suite::HlsConstants => {
            let alphas = a.alphas.clone().unwrap_or_else(|| lab::default_hls_alphas(a.dim));
            let table = lab::hls_table(a.dim, &alphas)?;
            let v = serde_json::to_value(&table).map_err(json_error)?;
            (v.clone(), as_rows(&v), None)
        }
        Suite::Nondegeneracy => {
            let rec = lab::check_nondegeneracy(&grid, 2.0 * a.p, 1e-4)?;
            let ok = rec.kernel_dimension == a.dim;
            let v = serde_json::to_value(&rec).map_err(json_error)?;
            let rows = rec
                .eigenvalues
                .iter()
                .enumerate()
                .map(|(i, l)| json!({"index": i, "eigenvalue": l}))
                .collect();
            (v, rows, Some(ok))
        }
    };
    let mut value = json!({
        "suite": a.suite.name(),
        "report_version": lab::REPORT_VERSION,
        "dimension": a.dim,
        "records": records,
    });
    if !matches!(a.suite, Suite::HlsConstants) {
        value["grid"] = grid_summary(&grid);
    }
    if let Some(ok) = passed {
        value["passed"] = json!(ok);
    }
    emit(&value, &rows, a.suite.name(), &a.output)?;
    Ok(EXIT_OK)
}

fn as_rows(v: &Value) -> Vec<Value> {
    match v {
        Value::Array(items) => items.clone(),
        other => vec![other.clone()],
    }
}

fn run_reference(a: &ReferenceArgs) -> Outcome {
    let q = 2.0 * a.p;
    let gamma = gamma_level(a.dim, q)?;
    let mut value = json!({
        "kind": "reference",
        "report_version": lab::REPORT_VERSION,
        "dimension": a.dim,
        "p": a.p,
        "q": q,
        "gamma_q": gamma,
    });
    let mut row = json!({"dimension": a.dim, "p": a.p, "gamma_q": gamma});
    if a.dim == 1 {
        value["groundstate_peak"] = json!(choquard::reference::nls_groundstate_1d(q, 0.0));
    } else {
        let profile = choquard::reference::shoot_radial_profile(a.dim, q)?;
        value["groundstate_peak"] = json!(profile.peak());
        value["decay_rate"] = json!(profile.decay_rate);
    }
    if a.p >= 2.0 {
        if let Ok(k1) = kappa_level(a.dim, a.p, 1.0) {
            let k2 = kappa_level(a.dim, a.p, 2.0)?;
            value["kappa_p_1"] = json!(k1);
            value["kappa_p_2"] = json!(k2);
            value["nodal_limit_alpha_n"] = json!(2.0 * k2);
            row["kappa_p_1"] = json!(k1);
            row["kappa_p_2"] = json!(k2);
        }
    }
    emit(&value, &[row], "reference", &a.output)?;
    Ok(EXIT_OK)
}

fn run_constants(a: &ConstantsArgs) -> Outcome {
    let alphas = match (&a.alpha, &a.alphas) {
        (Some(x), None) => vec![*x],
        (None, Some(list)) => list.clone(),
        (None, None) => lab::default_hls_alphas(a.dim),
        (Some(_), Some(_)) => {
            return Err(Failure::Usage("give either --alpha or --alphas".into()));
        }
    };
    let rows = alphas
        .iter()
        .map(|&alpha| -> Result<Value, Failure> {
            Ok(json!({
                "alpha": alpha,
                "riesz_constant": riesz_constant(a.dim, alpha)?,
                "normalization_ratio": normalization_ratio(a.dim, alpha)?,
                "hls_normalized": hls_constant(a.dim, alpha)?,
                "hls_unnormalized": hls_constant_unnormalized(a.dim, alpha)?,
            }))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let value = json!({
        "kind": "constants",
        "report_version": lab::REPORT_VERSION,
        "dimension": a.dim,
        "rows": rows,
    });
    emit(&value, &rows, "constants", &a.output)?;
    Ok(EXIT_OK)
}
