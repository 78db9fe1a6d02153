//! Command-line front end.
//!
//! One subcommand per artifact: `rate` (decay rate over a grid), `check`
//! (model assumption report), `saddle` (duality verification on a matrix),
//! `simulate` (one probability estimate), `sweep` (ratio-vs-threshold
//! experiment), `regvar` (regularly-varying scaling constant).
//!
//! Exit codes: 0 success, 1 a check failed, 2 invalid input, 3 numerical
//! failure. JSON summaries go to stdout and to files under `--out`; sweeps
//! and per-point tables are also written as CSV. `GPX_WORKERS` bounds the
//! worker threads used by the estimators.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gpextremes::assumptions::{check_a1, check_a2_heuristic, A1Report, A2Heuristic};
use gpextremes::config::KernelConfig;
use gpextremes::decay::{rate_over_domain, regvar_asymptotic, regvar_j, RateOptions};
use gpextremes::error::Error;
use gpextremes::linalg::SymMatrix;
use gpextremes::montecarlo::{estimate, sweep, EstimatorKind, McEstimate, SweepGrid, SweepRow};
use gpextremes::qp::verify_saddle;

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "gpextremes",
    version,
    about = "Decay rates and rare-event simulation for extremes of multidimensional Gaussian processes"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for result files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Crude,
    MeanShift,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Crude => EstimatorKind::Crude,
            EstimatorArg::MeanShift => EstimatorKind::MeanShift,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decay rate of the simultaneous exceedance probability over the grid.
    Rate {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Residual-correlation bound and threshold checks for the model.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Margin for the supremum bound (default from config, then 1e-3).
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Verify the saddle-point duality on a positive definite matrix.
    Saddle {
        /// JSON file with the matrix as an array of rows.
        #[arg(long)]
        matrix: PathBuf,
        /// Comma-separated thresholds, e.g. "1,1".
        #[arg(long)]
        q: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Estimate the exceedance probability at one threshold level.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        estimator: Option<EstimatorArg>,
    },
    /// Estimate at each threshold level and report the decay ratio.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        estimator: Option<EstimatorArg>,
        /// Stdout format; files are always written in both formats.
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
    },
    /// Scaling constant J and asymptotic exponents for regularly varying
    /// variance functions.
    Regvar {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn classify(err: &Error) -> u8 {
    match err {
        Error::Invalid { .. }
        | Error::OutsideTable { .. }
        | Error::DimensionCap { .. }
        | Error::ThresholdNotExceeded { .. }
        | Error::InvalidCorrelation { .. }
        | Error::DimensionTooLarge { .. }
        | Error::ZeroWeight => 2,
        Error::NotPositiveDefinite { .. }
        | Error::SingularMatrix
        | Error::DegenerateCovariance { .. }
        | Error::NoConvergence { .. } => 3,
    }
}

fn read_to_string(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))
}

fn write_output(dir: &Path, name: &str, contents: &str, input: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::invalid(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let same = match (std::path::absolute(&path), std::path::absolute(input)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(Error::invalid(format!(
            "output {} would overwrite the input file; choose another --out",
            path.display()
        )));
    }
    fs::write(&path, contents)
        .map_err(|e| Error::invalid(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn csv_field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Serialize, Deserialize)]
struct RateOutput {
    u: f64,
    u0: f64,
    m_of_u_t: f64,
    argmin: Vec<f64>,
    /// Optimal weights of the dual problem at the argmin.
    weights: Vec<f64>,
    active: Vec<usize>,
    /// Un-halved quadrant optimum at the argmin.
    point_value: f64,
    kkt_residual: f64,
    grid_points: usize,
    grid: String,
    notes: Vec<String>,
}

fn cmd_rate(common: &CommonArgs) -> Result<u8, Error> {
    let cfg = RunConfig::from_json(&read_to_string(&common.config)?)?;
    let v = cfg.validate()?;
    let levels = cfg.levels()?;
    if levels.len() != 1 {
        return Err(Error::invalid("field u: rate expects exactly one level"));
    }
    let u = levels[0];
    let opts = RateOptions { keep_per_point: true, refine: cfg.solver.refine };
    let rate = rate_over_domain(&v.model, &v.drift, &v.q, u, &v.grid, &opts)?;
    let output = RateOutput {
        u,
        u0: rate.u0,
        m_of_u_t: rate.m_of_u_t,
        argmin: rate.argmin.clone(),
        weights: rate.qp.w_star.clone(),
        active: rate.qp.active.clone(),
        point_value: rate.qp.value,
        kkt_residual: rate.qp.kkt_residual,
        grid_points: v.grid.len(),
        grid: v.grid.description().to_string(),
        notes: rate.notes.clone(),
    };
    let json = to_json(&output);
    let mut csv = String::new();
    let dim = v.grid.dim();
    for i in 1..=dim {
        csv.push_str(&format!("t{i},"));
    }
    csv.push_str("m_u_t\n");
    for (t, m) in rate.per_point.as_deref().unwrap_or_default() {
        for x in t {
            csv.push_str(&format!("{x},"));
        }
        csv.push_str(&format!("{m}\n"));
    }
    write_output(&common.out, "rate.json", &json, &common.config)?;
    write_output(&common.out, "rate_points.csv", &csv, &common.config)?;
    print!("{json}");
    Ok(0)
}

#[derive(Serialize)]
struct CheckOutput {
    a1: A1Report,
    /// Heuristic drift-domination screen; informational, does not affect
    /// the exit code.
    a2_heuristic: A2Heuristic,
    u0: Option<f64>,
}

fn cmd_check(common: &CommonArgs, delta: Option<f64>) -> Result<u8, Error> {
    let cfg = RunConfig::from_json(&read_to_string(&common.config)?)?;
    let (model, drift, grid) = cfg.model.build()?;
    let delta = delta.unwrap_or(cfg.solver.delta);
    let a1 = check_a1(&model, &grid, delta)?;
    let a2 = check_a2_heuristic(&model, &drift, &grid)?;
    let u0 = match cfg.q() {
        Ok(q) if q.len() == model.n() => {
            Some(gpextremes::models::threshold_u0(&drift, q, &grid)?)
        }
        _ => None,
    };
    let pass = a1.pass;
    let output = CheckOutput { a1, a2_heuristic: a2, u0 };
    let json = to_json(&output);
    write_output(&common.out, "check.json", &json, &common.config)?;
    print!("{json}");
    Ok(if pass { 0 } else { 1 })
}

fn cmd_saddle(
    matrix: &Path,
    q: &str,
    trials: usize,
    seed: u64,
    out: &Path,
) -> Result<u8, Error> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(&read_to_string(matrix)?)
        .map_err(|e| Error::invalid(format!("matrix file: {e}")))?;
    let a = SymMatrix::from_rows(&rows)?;
    let q: Vec<f64> = q
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::invalid(format!("flag q: {e}")))
        })
        .collect::<Result<_, _>>()?;
    let report = verify_saddle(&a, &q, trials, seed)?;
    let json = to_json(&report);
    write_output(out, "saddle.json", &json, matrix)?;
    print!("{json}");
    Ok(if report.pass() { 0 } else { 1 })
}

#[derive(Serialize, Deserialize)]
struct SimulateOutput {
    u: f64,
    u0: f64,
    estimator: EstimatorKind,
    estimate: McEstimate,
    grid_points: usize,
    grid: String,
}

fn cmd_simulate(
    common: &CommonArgs,
    samples: Option<u64>,
    seed: Option<u64>,
    estimator: Option<EstimatorArg>,
) -> Result<u8, Error> {
    let cfg = RunConfig::from_json(&read_to_string(&common.config)?)?;
    let v = cfg.validate()?;
    let levels = cfg.levels()?;
    if levels.len() != 1 {
        return Err(Error::invalid("field u: simulate expects exactly one level"));
    }
    let u = levels[0];
    let mut opts = cfg.mc.options();
    if let Some(s) = samples {
        opts.samples = s;
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let kind = estimator.map(EstimatorKind::from).unwrap_or(cfg.mc.estimator);
    let est = estimate(&v.model, &v.drift, &v.q, u, &v.grid, &opts, kind)?;
    let output = SimulateOutput {
        u,
        u0: v.u0,
        estimator: kind,
        estimate: est,
        grid_points: v.grid.len(),
        grid: v.grid.description().to_string(),
    };
    let json = to_json(&output);
    write_output(&common.out, "simulate.json", &json, &common.config)?;
    print!("{json}");
    Ok(0)
}

#[derive(Serialize, Deserialize)]
struct SweepOutput {
    estimator: EstimatorKind,
    seed: u64,
    samples: u64,
    grid_points: usize,
    grid: String,
    rows: Vec<SweepRow>,
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut csv = String::from("u,p_hat,neg_log_p,m_of_u_T,ratio,half_width,samples\n");
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.u,
            r.p_hat,
            csv_field(r.neg_log_p),
            r.m_of_u_t,
            csv_field(r.ratio),
            r.half_width,
            r.samples
        ));
    }
    csv
}

fn cmd_sweep(
    common: &CommonArgs,
    samples: Option<u64>,
    seed: Option<u64>,
    estimator: Option<EstimatorArg>,
    format: FormatArg,
) -> Result<u8, Error> {
    let cfg = RunConfig::from_json(&read_to_string(&common.config)?)?;
    let v = cfg.validate()?;
    let levels = cfg.levels()?;
    let mut opts = cfg.mc.options();
    if let Some(s) = samples {
        opts.samples = s;
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let kind = estimator.map(EstimatorKind::from).unwrap_or(cfg.mc.estimator);
    let grid = SweepGrid::Fixed(v.grid.clone());
    let rows = sweep(&v.model, &v.drift, &v.q, &levels, &grid, &opts, kind)?;
    let output = SweepOutput {
        estimator: kind,
        seed: opts.seed,
        samples: opts.samples,
        grid_points: v.grid.len(),
        grid: v.grid.description().to_string(),
        rows,
    };
    let json = to_json(&output);
    let csv = sweep_csv(&output.rows);
    write_output(&common.out, "sweep.json", &json, &common.config)?;
    write_output(&common.out, "sweep.csv", &csv, &common.config)?;
    match format {
        FormatArg::Json => print!("{json}"),
        FormatArg::Csv => print!("{csv}"),
    }
    Ok(0)
}

#[derive(Serialize, Deserialize)]
struct AsymptoticRow {
    u: f64,
    sigma1_sq: f64,
    decay_exponent: f64,
}

#[derive(Serialize, Deserialize)]
struct RegvarOutput {
    j: f64,
    t_star: f64,
    attained: bool,
    widened: bool,
    asymptotics: Vec<AsymptoticRow>,
}

fn cmd_regvar(common: &CommonArgs) -> Result<u8, Error> {
    let cfg = RunConfig::from_json(&read_to_string(&common.config)?)?;
    let rv = cfg
        .regvar
        .as_ref()
        .ok_or_else(|| Error::invalid("field regvar: required for the regvar command"))?;
    let spec = rv.spec()?;
    let res = regvar_j(&spec, &rv.search())?;
    // asymptotic exponents need the leading component's variance function
    let mut asymptotics = Vec::new();
    if let Some(u_list) = &cfg.u_list {
        let kernel = cfg
            .model
            .components
            .first()
            .map(KernelConfig::to_kernel)
            .ok_or_else(|| {
                Error::invalid("field components: needed to evaluate sigma_1^2 at u_list")
            })?;
        for &u in u_list {
            let s2 = kernel.variance(u);
            asymptotics.push(AsymptoticRow {
                u,
                sigma1_sq: s2,
                decay_exponent: regvar_asymptotic(u, |_| s2, res.j),
            });
        }
    }
    let output = RegvarOutput {
        j: res.j,
        t_star: res.t_star,
        attained: res.attained,
        widened: res.widened,
        asymptotics,
    };
    let json = to_json(&output);
    write_output(&common.out, "regvar.json", &json, &common.config)?;
    print!("{json}");
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Error> {
    match &cli.cmd {
        Cmd::Rate { common } => cmd_rate(common),
        Cmd::Check { common, delta } => cmd_check(common, *delta),
        Cmd::Saddle { matrix, q, trials, seed, out } => {
            cmd_saddle(matrix, q, *trials, *seed, out)
        }
        Cmd::Simulate { common, samples, seed, estimator } => {
            cmd_simulate(common, *samples, *seed, *estimator)
        }
        Cmd::Sweep { common, samples, seed, estimator, format } => {
            cmd_sweep(common, *samples, *seed, *estimator, *format)
        }
        Cmd::Regvar { common } => cmd_regvar(common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(classify(&err))
        }
    }
}
