//! Command-line front end: `fit`, `select`, `lincom` and `simulate`.
//!
//! Input is a CSV file with a header row; results are written as JSON
//! (top-level `"schema": "lspart/1"`) and, for `fit` and `lincom`, as a
//! plot-data CSV with columns `x..., estimate, se, ci_lo, ci_hi, band_lo,
//! band_hi`. Exit codes: 0 success, 2 input error, 3 numerical failure.
//! `LSPART_THREADS` sets the size of the worker pool.

pub mod io;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::basis::BasisFamily;
use crate::error::Error;
use crate::grid::{Sample, Spacing};
use crate::inference::{Correction, HcKind};
use crate::lincom::{lincom_estimate, LincomResult, LincomSpec};
use crate::pipeline::{build_grid, estimate, Estimation, FitOptions, GridSpec, KappaChoice};
use crate::testkit::{run_coverage, CoverageConfig, CoverageReport, DgpSpec};
use crate::tuning::{select_dpi, TuningReport};
use io::{plot_csv, to_json_string, write_atomic, Table};

pub const SCHEMA: &str = "lspart/1";
pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Failure with its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Numerical(_) | Error::Underdetermined { .. } => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lspart", version, about = "Partitioning-based least squares regression and inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the regression function (or a derivative) with robust inference.
    Fit(FitArgs),
    /// Report the rule-of-thumb and direct plug-in choices of kappa.
    Select(SelectArgs),
    /// Estimate a weighted combination of group regression functions.
    Lincom(LincomArgs),
    /// Monte Carlo coverage study on a built-in data generating process.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Bs,
    Pp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KSelect {
    Rot,
    Dpi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KType {
    Uniform,
    Quantile,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Response column.
    #[arg(long)]
    pub y: String,
    /// Covariate column(s), comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub x: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Basis: B-splines or piecewise polynomials.
    #[arg(long, value_enum, default_value = "bs")]
    pub method: Method,
    /// Order (degree + 1) of the basis.
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    /// Order of the bias-correction fit [default: m + 1].
    #[arg(long = "m-bc")]
    pub m_bc: Option<usize>,
    /// Derivative multi-index, comma separated [default: 0 in every dimension].
    #[arg(long, value_delimiter = ',')]
    pub deriv: Option<Vec<usize>>,
    /// Number of subintervals, one value or one per dimension (disables selection).
    #[arg(long, value_delimiter = ',')]
    pub kappa: Option<Vec<usize>>,
    /// Selector used when --kappa is absent.
    #[arg(long, value_enum, default_value = "dpi")]
    pub kselect: KSelect,
    /// Knot placement.
    #[arg(long, value_enum, default_value = "uniform")]
    pub ktype: KType,
}

#[derive(Debug, Clone, Args)]
pub struct InferenceArgs {
    /// Bias correction: 0 none, 1 higher order, 2 least squares, 3 plug-in.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(0..=3))]
    pub bc: u8,
    /// Residual weighting 0..3 [default: 0 for bc 0, 3 otherwise].
    #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
    pub hc: Option<u8>,
    /// Level: intervals have coverage 1 - alpha.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also compute a uniform confidence band.
    #[arg(long)]
    pub band: bool,
    /// Simulation draws for the band critical value.
    #[arg(long, default_value_t = 2000)]
    pub nsim: usize,
    /// Seed of every random draw.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Evaluation grid: quantile:N, uniform:N or file:PATH.
    #[arg(long, default_value = "quantile:50")]
    pub grid: String,
    /// JSON result file [default: standard output].
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
    /// Plot-data CSV file.
    #[arg(long = "out-csv")]
    pub out_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// JSON result file [default: standard output].
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct LincomArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Column holding the group labels.
    #[arg(long = "group-col")]
    pub group_col: String,
    /// Group weights as label=weight pairs, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub weights: Vec<String>,
    /// Use one kappa (the largest per-group choice) for all groups.
    #[arg(long = "shared-kappa")]
    pub shared_kappa: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Built-in data generating process: zero, sinbump or smooth2d.
    #[arg(long)]
    pub dgp: String,
    /// Sample size of each replication.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Number of replications.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub inference: InferenceArgs,
    /// JSON result file [default: standard output].
    #[arg(long = "out-json")]
    pub out_json: Option<PathBuf>,
}

fn family(method: Method) -> BasisFamily {
    match method {
        Method::Bs => BasisFamily::BSpline,
        Method::Pp => BasisFamily::PiecewisePoly,
    }
}

fn spacing(ktype: KType) -> Spacing {
    match ktype {
        KType::Uniform => Spacing::Evenly,
        KType::Quantile => Spacing::Quantile,
    }
}

fn spacing_name(s: Spacing) -> &'static str {
    match s {
        Spacing::Evenly => "uniform",
        Spacing::Quantile => "quantile",
    }
}

/// Estimation options from the model and inference flags.
pub fn fit_options(model: &ModelArgs, inference: Option<&InferenceArgs>) -> Result<FitOptions, CliError> {
    let kappa = match &model.kappa {
        Some(k) => {
            if k.contains(&0) {
                return Err(CliError::input("--kappa values must be at least 1"));
            }
            KappaChoice::Fixed(k.clone())
        }
        None => match model.kselect {
            KSelect::Rot => KappaChoice::Rot,
            KSelect::Dpi => KappaChoice::Dpi,
        },
    };
    if model.m == 0 {
        return Err(CliError::input("--m must be at least 1"));
    }
    let mut opts = FitOptions {
        family: family(model.method),
        order: model.m,
        order_bc: model.m_bc,
        deriv: model.deriv.clone(),
        spacing: spacing(model.ktype),
        kappa,
        ..FitOptions::default()
    };
    if let Some(inf) = inference {
        opts.correction = Correction::from_id(inf.bc)?;
        opts.hc = inf.hc.map(HcKind::from_id).transpose()?;
        if !(inf.alpha > 0.0 && inf.alpha < 1.0) {
            return Err(Error::InvalidAlpha(inf.alpha).into());
        }
        opts.alpha = inf.alpha;
        opts.band = inf.band;
        opts.num_sim = inf.nsim;
        opts.seed = inf.seed;
        if inf.band && inf.nsim < 100 {
            return Err(CliError::input("--nsim must be at least 100"));
        }
    }
    if opts.correction.needs_aux() && opts.order_bc() <= opts.order {
        return Err(CliError::input(format!("--m-bc ({}) must exceed --m ({}) when --bc >= 1", opts.order_bc(), opts.order)));
    }
    Ok(opts)
}

fn load_sample(data: &DataArgs) -> Result<(Table, Sample), CliError> {
    let table = Table::read(&data.input)?;
    let y = table.numeric(&data.y)?;
    let columns = data.x.iter().map(|name| table.numeric(name)).collect::<Result<Vec<_>, _>>()?;
    let n = y.len();
    let x: Vec<f64> = (0..n).flat_map(|i| columns.iter().map(move |c| c[i])).collect();
    let sample = Sample::from_flat(y, x, data.x.len())?;
    Ok((table, sample))
}

fn parse_grid(spec: &str, x_names: &[String]) -> Result<GridSpec, CliError> {
    let (kind, arg) = spec
        .split_once(':')
        .ok_or_else(|| CliError::input(format!("--grid '{spec}': expected quantile:N, uniform:N or file:PATH")))?;
    let count = || {
        arg.parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| CliError::input(format!("--grid '{spec}': N must be a positive integer")))
    };
    match kind {
        "quantile" => Ok(GridSpec::Quantile(count()?)),
        "uniform" => Ok(GridSpec::Uniform(count()?)),
        "file" => {
            let table = Table::read(Path::new(arg))?;
            let names: Vec<String> = if x_names.iter().all(|n| table.headers.contains(n)) {
                x_names.to_vec()
            } else if table.headers.len() == x_names.len() {
                table.headers.clone()
            } else {
                return Err(CliError::input(format!(
                    "grid file {arg} must have columns {} or exactly {} column(s)",
                    x_names.join(", "),
                    x_names.len()
                )));
            };
            let cols = names.iter().map(|c| table.numeric(c)).collect::<Result<Vec<_>, _>>()?;
            let points = (0..table.rows.len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
            Ok(GridSpec::Points(points))
        }
        _ => Err(CliError::input(format!("--grid '{spec}': unknown grid kind '{kind}'"))),
    }
}

fn emit(value: &Value, path: Option<&Path>, stdout: &mut String) -> Result<(), CliError> {
    let text = to_json_string(value);
    match path {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            stdout.push_str(&text);
            Ok(())
        }
    }
}

fn tuning_json(report: Option<&TuningReport>, choice: &KappaChoice) -> Value {
    let method = match choice {
        KappaChoice::Fixed(_) => "fixed",
        KappaChoice::Rot => "rot",
        KappaChoice::Dpi => "dpi",
    };
    match report {
        None => json!({ "method": method }),
        Some(r) => json!({
            "method": method,
            "kappa_rot": r.kappa_rot,
            "kappa_dpi": r.kappa_dpi,
            "bias_constant": r.bias_constant,
            "variance_constant": r.variance_constant,
            "rot_constants": { "bias": r.rot.bias, "variance": r.rot.variance },
            "dpi_constants": r.dpi.map(|c| json!({ "bias": c.bias, "variance": c.variance })),
            "rate_exponent": r.rate_exponent,
            "kappa_cap": r.kappa_cap,
            "warnings": r.warnings,
        }),
    }
}

fn model_json(opts: &FitOptions) -> Value {
    json!({
        "method": match opts.family { BasisFamily::PiecewisePoly => "pp", _ => "bs" },
        "m": opts.order,
        "m_bc": opts.order_bc(),
        "ktype": spacing_name(opts.spacing),
        "bc": opts.correction.id(),
        "alpha": opts.alpha,
        "band": opts.band,
        "nsim": opts.num_sim,
        "seed": opts.seed,
    })
}

fn interval_pair(i: Option<crate::inference::Interval>) -> Value {
    match i {
        Some(i) => json!([i.lo, i.hi]),
        None => Value::Null,
    }
}

/// JSON document of a `fit` run.
pub fn estimation_json(est: &Estimation, x_names: &[String]) -> Value {
    let grid: Vec<Value> = est
        .rows
        .iter()
        .map(|r| {
            json!({
                "x": r.point,
                "estimate": r.estimate,
                "se": r.se,
                "ci": [r.ci.lo, r.ci.hi],
                "band": interval_pair(r.band),
                "corrections": r.all.iter().map(|c| json!({
                    "bc": c.correction.id(),
                    "hc": c.hc.id(),
                    "estimate": c.estimate,
                    "se": c.se,
                    "ci": [c.ci.lo, c.ci.hi],
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "schema": SCHEMA,
        "command": "fit",
        "n": est.n,
        "d": est.d,
        "x_names": x_names,
        "model": model_json(&est.options),
        "deriv": est.deriv,
        "hc": est.hc.id(),
        "kappa": est.kappa,
        "K": est.k_main,
        "K_bc": est.k_aux,
        "selector": tuning_json(est.tuning.as_ref(), &est.options.kappa),
        "band": est.band.as_ref().map(|b| json!({
            "critical_value": b.critical_value,
            "nsim": b.num_sim,
            "seed": b.seed,
            "excluded": b.excluded,
        })),
        "grid": grid,
        "warnings": est.warnings,
    })
}

fn plot_rows(rows: impl Iterator<Item = (Vec<f64>, f64, f64, crate::inference::Interval, Option<crate::inference::Interval>)>) -> Vec<(Vec<f64>, [f64; 6])> {
    rows.map(|(x, e, s, ci, band)| {
        let (blo, bhi) = band.map(|b| (b.lo, b.hi)).unwrap_or((f64::NAN, f64::NAN));
        (x, [e, s, ci.lo, ci.hi, blo, bhi])
    })
    .collect()
}

fn cmd_fit(args: &FitArgs, stdout: &mut String) -> Result<(), CliError> {
    let opts = fit_options(&args.model, Some(&args.inference))?;
    let (_, sample) = load_sample(&args.data)?;
    let grid = build_grid(&sample, &parse_grid(&args.output.grid, &args.data.x)?)?;
    let est = estimate(&sample, &opts, &grid)?;
    if let Some(path) = &args.output.out_csv {
        let rows = plot_rows(est.rows.iter().map(|r| (r.point.clone(), r.estimate, r.se, r.ci, r.band)));
        write_atomic(path, plot_csv(&args.data.x, &rows).as_bytes())?;
    }
    emit(&estimation_json(&est, &args.data.x), args.output.out_json.as_deref(), stdout)
}

/// JSON document of a `select` run.
pub fn selection_json(report: &TuningReport, opts: &FitOptions, sample: &Sample) -> Value {
    json!({
        "schema": SCHEMA,
        "command": "select",
        "n": sample.n(),
        "d": sample.d(),
        "method": match opts.family { BasisFamily::PiecewisePoly => "pp", _ => "bs" },
        "m": opts.order,
        "deriv": opts.deriv_for(sample.d()),
        "ktype": spacing_name(opts.spacing),
        "kappa_rot": report.kappa_rot,
        "kappa_dpi": report.kappa_dpi,
        "bias_constant": report.bias_constant,
        "variance_constant": report.variance_constant,
        "rot_constants": { "bias": report.rot.bias, "variance": report.rot.variance },
        "dpi_constants": report.dpi.map(|c| json!({ "bias": c.bias, "variance": c.variance })),
        "rate_exponent": report.rate_exponent,
        "kappa_cap": report.kappa_cap,
        "warnings": report.warnings,
    })
}

fn cmd_select(args: &SelectArgs, stdout: &mut String) -> Result<(), CliError> {
    let opts = fit_options(&args.model, None)?;
    let (_, sample) = load_sample(&args.data)?;
    let report = select_dpi(&sample, &opts.basis_spec(sample.d())?, opts.spacing)?;
    emit(&selection_json(&report, &opts, &sample), args.out_json.as_deref(), stdout)
}

fn parse_weights(pairs: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    for pair in pairs {
        let (label, w) = pair
            .rsplit_once('=')
            .ok_or_else(|| CliError::input(format!("--weights entry '{pair}': expected label=weight")))?;
        let w: f64 = w
            .trim()
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| CliError::input(format!("--weights entry '{pair}': weight is not a finite number")))?;
        if out.insert(label.trim().to_string(), w).is_some() {
            return Err(CliError::input(format!("--weights: label '{label}' given twice")));
        }
    }
    Ok(out)
}

/// JSON document of a `lincom` run.
pub fn lincom_json(res: &LincomResult, x_names: &[String], shared_kappa: bool) -> Value {
    json!({
        "schema": SCHEMA,
        "command": "lincom",
        "x_names": x_names,
        "model": model_json(&res.options),
        "hc": res.options.hc_for(res.options.correction).id(),
        "shared_kappa": shared_kappa,
        "groups": res.groups.iter().map(|g| json!({
            "label": g.label,
            "weight": g.weight,
            "n": g.n,
            "kappa": g.kappa,
            "K": g.k_main,
            "selector": tuning_json(g.tuning.as_ref(), &res.options.kappa),
        })).collect::<Vec<_>>(),
        "band": res.band.as_ref().map(|b| json!({
            "critical_value": b.critical_value,
            "nsim": b.num_sim,
            "seed": b.seed,
            "excluded": b.excluded,
        })),
        "grid": res.rows.iter().map(|r| json!({
            "x": r.point,
            "estimate": r.estimate,
            "se": r.se,
            "ci": [r.ci.lo, r.ci.hi],
            "band": interval_pair(r.band),
        })).collect::<Vec<_>>(),
        "warnings": res.warnings,
    })
}

fn cmd_lincom(args: &LincomArgs, stdout: &mut String) -> Result<(), CliError> {
    let opts = fit_options(&args.model, Some(&args.inference))?;
    let (table, sample) = load_sample(&args.data)?;
    let labels = table.text(&args.group_col)?;
    let weights = parse_weights(&args.weights)?;
    for label in weights.keys() {
        if !labels.contains(label) {
            return Err(CliError::input(format!("group '{label}' does not occur in column '{}'", args.group_col)));
        }
    }
    let mut spec = LincomSpec::from_labels(&sample, &labels, &weights)?;
    spec.shared_kappa = args.shared_kappa;
    let grid = spec.grid(&parse_grid(&args.output.grid, &args.data.x)?)?;
    let res = lincom_estimate(&spec, &grid, &opts)?;
    if let Some(path) = &args.output.out_csv {
        let rows = plot_rows(res.rows.iter().map(|r| (r.point.clone(), r.estimate, r.se, r.ci, r.band)));
        write_atomic(path, plot_csv(&args.data.x, &rows).as_bytes())?;
    }
    emit(&lincom_json(&res, &args.data.x, args.shared_kappa), args.output.out_json.as_deref(), stdout)
}

/// JSON document of a `simulate` run.
pub fn coverage_json(report: &CoverageReport, opts: &FitOptions) -> Value {
    json!({
        "schema": SCHEMA,
        "command": "simulate",
        "dgp": report.dgp,
        "n": report.n,
        "reps": report.reps,
        "completed": report.completed,
        "seed": report.seed,
        "alpha": report.alpha,
        "model": model_json(opts),
        "mean_kappa": report.mean_kappa,
        "grid": report.grid,
        "median_index": report.median_index,
        "table": report.rows.iter().map(|r| json!({
            "bc": r.correction.id(),
            "hc": r.hc.id(),
            "pointwise_coverage": r.pointwise,
            "median_point_coverage": r.pointwise[report.median_index],
            "band_coverage": r.band,
            "mean_ci_width": r.mean_ci_width,
            "mean_band_width": r.mean_band_width,
        })).collect::<Vec<_>>(),
    })
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut String) -> Result<(), CliError> {
    let mut opts = fit_options(&args.model, Some(&args.inference))?;
    opts.band = true;
    if args.inference.nsim < 100 {
        return Err(CliError::input("--nsim must be at least 100"));
    }
    let dgp = DgpSpec::builtin(&args.dgp)?;
    if args.reps == 0 {
        return Err(CliError::input("--reps must be positive"));
    }
    if args.reps < 100 {
        log::warn!("{} replications give coarse coverage estimates", args.reps);
    }
    if args.n < 2 {
        return Err(CliError::input("--n must be at least 2"));
    }
    let report = run_coverage(&CoverageConfig::new(dgp, args.n, args.reps, opts.seed, opts.clone()))?;
    emit(&coverage_json(&report, &opts), args.out_json.as_deref(), stdout)
}

/// Runs a parsed command; JSON destined for standard output is appended to `stdout`.
pub fn execute(cli: &Cli, stdout: &mut String) -> Result<(), CliError> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a, stdout),
        Command::Select(a) => cmd_select(a, stdout),
        Command::Lincom(a) => cmd_lincom(a, stdout),
        Command::Simulate(a) => cmd_simulate(a, stdout),
    }
}

/// Sizes the global worker pool from `LSPART_THREADS` when set.
pub fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("LSPART_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::input(format!("LSPART_THREADS must be a positive integer, got '{v}'")))?;
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Full program: parses `args`, runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let mut stdout = String::new();
    let result = configure_threads().and_then(|_| execute(&cli, &mut stdout));
    match result {
        Ok(()) => {
            print!("{stdout}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_specs_parse() {
        let names = vec!["x".to_string()];
        assert_eq!(parse_grid("quantile:7", &names).unwrap(), GridSpec::Quantile(7));
        assert_eq!(parse_grid("uniform:3", &names).unwrap(), GridSpec::Uniform(3));
        assert!(parse_grid("uniform:0", &names).is_err());
        assert!(parse_grid("grid", &names).is_err());
    }

    #[test]
    fn weights_parse() {
        let w = parse_weights(&["a=1".into(), "b=-0.5".into()]).unwrap();
        assert_eq!(w["b"], -0.5);
        assert!(parse_weights(&["a".into()]).is_err());
        assert!(parse_weights(&["a=1".into(), "a=2".into()]).is_err());
    }

    #[test]
    fn error_codes() {
        assert_eq!(CliError::from(Error::Numerical("x".into())).code, EXIT_NUMERICAL);
        assert_eq!(CliError::from(Error::InvalidAlpha(2.0)).code, EXIT_INPUT);
    }
}
