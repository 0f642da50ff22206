//! Subcommand implementations.

use std::collections::HashSet;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use otkit_core::exact::{solve_exact, DEFAULT_CAP_CELLS};
use otkit_core::extensions::{barycenter_entropic_objective, barycenter_exact, BarycenterOptions};
use otkit_core::io::{barycenter_from_json, duals_to_json, fmt_f64, plan_to_json, problem_from_json, problem_to_json};
use otkit_core::otw::{otw_pairwise, read_series_csv, write_distance_csv, OtwConfig};
use otkit_core::{epsilon_suboptimality, generate, Algo, OtError, Problem, ProblemSpec, SolverConfig, SolverRun};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{BarycenterArgs, CompareArgs, CurveArgs, GenerateArgs, OtwArgs, RunArgs};
use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Per-run summary written to `summary.json`.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub algo: String,
    pub eta: Option<f64>,
    pub iterations: usize,
    pub wall_ns: u64,
    pub converged: bool,
    pub primal_cost: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_cost: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon_suboptimality: Option<f64>,
    pub row_violation_l1: f64,
    pub col_violation_l1: f64,
}

/// One entry of the `compare` report.
#[derive(Debug, Clone, Serialize)]
pub struct Ranked {
    pub rank: usize,
    pub algo: String,
    pub wall_ns: u64,
    pub iterations: usize,
    pub achieved_eps: f64,
    pub achieved: bool,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub schema: u32,
    pub target_eps: f64,
    pub oracle_cost: f64,
    pub entries: Vec<Ranked>,
}

/// One row of an accuracy curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub target_eps: f64,
    pub iterations: usize,
    pub wall_ns: u64,
    pub achieved_eps: f64,
}

pub const CURVE_HEADER: &str = "target_eps,iterations,wall_ns,achieved_eps";

#[derive(Debug, Clone, Serialize)]
struct BarycenterReport {
    schema: u32,
    method: &'static str,
    eta: Option<f64>,
    weights: Vec<f64>,
    objective: f64,
}

fn read_input(path: &Path) -> CliResult<String> {
    otkit_core::io::read_to_string(path).map_err(|source| parse_error(path, source))
}

fn parse_error(path: &Path, source: OtError) -> CliError {
    CliError::Parse { path: path.display().to_string(), source }
}

pub fn read_problem(path: &Path) -> CliResult<Problem> {
    problem_from_json(&read_input(path)?).map_err(|e| parse_error(path, e))
}

fn prepare_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_output(dir: &Path, name: &str, text: &str) -> CliResult<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn create_output(dir: &Path, name: &str) -> CliResult<(PathBuf, BufWriter<File>)> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((path, BufWriter::new(file)))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

/// `‖C‖∞`, or 1 for an all-zero cost so relative targets stay meaningful.
pub fn cost_scale(problem: &Problem) -> f64 {
    let scale = problem.cost.max_abs();
    if scale > 0.0 {
        scale
    } else {
        1.0
    }
}

fn elapsed_ns(start: Instant) -> u64 {
    u64::try_from(start.elapsed().as_nanos()).unwrap_or(u64::MAX)
}

fn oracle_cost(problem: &Problem) -> CliResult<f64> {
    Ok(solve_exact(problem.a.weights(), problem.b.weights(), &problem.cost)?.cost)
}

fn suboptimality(problem: &Problem, run: &SolverRun, oracle: f64) -> CliResult<f64> {
    let (a, b) = (problem.a.weights(), problem.b.weights());
    Ok(epsilon_suboptimality(&problem.cost, &run.plan, a, b, oracle)?)
}

pub fn generate_cmd(args: &GenerateArgs) -> CliResult<Vec<PathBuf>> {
    let spec = ProblemSpec { seed: args.seed, n: args.n, m: args.m.unwrap_or(args.n), family: args.family };
    let problem = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    prepare_dir(&args.output_dir)?;
    Ok(vec![write_output(&args.output_dir, "problem.json", &problem_to_json(&problem))?])
}

/// Merges the config file with the command-line overrides.
pub fn run_config(args: &RunArgs, problem: &Problem) -> CliResult<SolverConfig> {
    let mut config = match (&args.config, args.algo) {
        (Some(path), _) => SolverConfig::from_json(&read_input(path)?).map_err(|e| parse_error(path, e))?,
        (None, Some(algo)) => SolverConfig::new(algo),
        (None, None) => return Err(CliError::Usage("either --config or --algo is required".into())),
    };
    if let Some(algo) = args.algo {
        config.algo = algo;
    }
    if args.eta.is_some() {
        config.eta = args.eta;
    }
    if args.tol.is_some() {
        config.tol = args.tol;
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    if let Some(eps) = args.eps {
        config.eps = Some(eps * cost_scale(problem));
    }
    Ok(config)
}

/// Solves once and builds the summary, with oracle fields when asked for and
/// the instance is under the exact solver's cap.
pub fn solve(problem: &Problem, config: &SolverConfig, with_oracle: bool) -> CliResult<(SolverRun, Summary)> {
    let start = Instant::now();
    let run = otkit_core::run_solver(problem, config)?;
    let wall_ns = elapsed_ns(start);
    let (rv, cv) = run.plan.marginal_violation(problem.a.weights(), problem.b.weights());
    let mut summary = Summary {
        schema: SCHEMA_VERSION,
        algo: run.algo.name().to_string(),
        eta: run.eta,
        iterations: run.iterations,
        wall_ns,
        converged: run.converged,
        primal_cost: otkit_core::transport_cost(&problem.cost, &run.plan)?,
        oracle_cost: None,
        epsilon_suboptimality: None,
        row_violation_l1: rv,
        col_violation_l1: cv,
    };
    if with_oracle && problem.n() * problem.m() <= DEFAULT_CAP_CELLS {
        let oracle = oracle_cost(problem)?;
        summary.oracle_cost = Some(oracle);
        summary.epsilon_suboptimality = Some(suboptimality(problem, &run, oracle)?);
    }
    Ok((run, summary))
}

pub fn run_cmd(args: &RunArgs) -> CliResult<Vec<PathBuf>> {
    let problem = read_problem(&args.input)?;
    let config = run_config(args, &problem)?;
    let (run, summary) = solve(&problem, &config, args.with_oracle)?;
    if !run.converged {
        eprintln!("warning: {} stopped at its iteration limit", run.algo);
    }
    let dir = &args.output_dir;
    prepare_dir(dir)?;
    let mut written = vec![write_output(dir, "plan.json", &plan_to_json(&run.plan))?];
    let (trace_path, trace_file) = create_output(dir, "trace.csv")?;
    run.trace.write_csv(trace_file).map_err(|e| CliError::Io(format!("{}: {e}", trace_path.display())))?;
    written.push(trace_path);
    if let Some(duals) = &run.duals {
        written.push(write_output(dir, "duals.json", &duals_to_json(duals))?);
    }
    written.push(write_output(dir, "summary.json", &to_json(&summary))?);
    Ok(written)
}

/// Config that aims for suboptimality `target` (cost units) with `algo`.
fn targeted_config(algo: Algo, problem: &Problem, target: f64, tol: Option<f64>, seed: Option<u64>) -> SolverConfig {
    let mut config = SolverConfig::new(algo);
    // the auction guarantee is n·ε, so bid with ε/n
    config.eps = Some(if algo == Algo::Auction { target / problem.n() as f64 } else { target });
    config.tol = Some(tol.unwrap_or(target / (8.0 * cost_scale(problem))));
    config.seed = seed;
    config
}

fn entropy_log(problem: &Problem) -> f64 {
    (problem.n().max(problem.m()).max(2) as f64).ln()
}

/// Runs every grid point of one algorithm; rows come back in grid order.
pub fn epsilon_curve(problem: &Problem, algo: Algo, grid: &Grid, tol: Option<f64>, seed: Option<u64>) -> CliResult<Vec<CurvePoint>> {
    let oracle = oracle_cost(problem)?;
    let points = grid.points(problem);
    points
        .par_iter()
        .map(|&(target, eta)| {
            let mut config = targeted_config(algo, problem, target, tol, seed);
            config.eta = eta;
            let start = Instant::now();
            let run = otkit_core::run_solver(problem, &config)?;
            let wall_ns = elapsed_ns(start);
            Ok(CurvePoint { target_eps: target, iterations: run.iterations, wall_ns, achieved_eps: suboptimality(problem, &run, oracle)? })
        })
        .collect()
}

/// An accuracy grid, either as fractions of `‖C‖∞` or as entropic strengths.
#[derive(Debug, Clone, PartialEq)]
pub enum Grid {
    Eps(Vec<f64>),
    Eta(Vec<f64>),
}

impl Grid {
    /// `(target ε in cost units, fixed η)` per grid point.
    fn points(&self, problem: &Problem) -> Vec<(f64, Option<f64>)> {
        match self {
            Grid::Eps(eps) => eps.iter().map(|e| (e * cost_scale(problem), None)).collect(),
            Grid::Eta(etas) => etas.iter().map(|&eta| (4.0 * eta * entropy_log(problem), Some(eta))).collect(),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            Grid::Eps(v) | Grid::Eta(v) => v,
        }
    }
}

/// Whether iteration counts never drop as the target tightens.
pub fn iterations_monotone(points: &[CurvePoint]) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_by(|x, y| y.target_eps.total_cmp(&x.target_eps));
    sorted.windows(2).all(|w| w[1].iterations >= w[0].iterations)
}

fn curve_csv(points: &[CurvePoint]) -> String {
    let mut text = format!("{CURVE_HEADER}\n");
    for p in points {
        text.push_str(&format!("{},{},{},{}\n", fmt_f64(p.target_eps), p.iterations, p.wall_ns, fmt_f64(p.achieved_eps)));
    }
    text
}

fn positive_grid(values: &[f64], flag: &str) -> CliResult<()> {
    if values.is_empty() || values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
        return Err(CliError::Usage(format!("{flag} needs positive finite values")));
    }
    Ok(())
}

pub fn curve_cmd(args: &CurveArgs) -> CliResult<Vec<PathBuf>> {
    let grid = if args.eta.is_empty() { Grid::Eps(args.eps.clone()) } else { Grid::Eta(args.eta.clone()) };
    positive_grid(grid.values(), if args.eta.is_empty() { "--eps" } else { "--eta" })?;
    distinct(&args.algo)?;
    let problem = read_problem(&args.input)?;
    prepare_dir(&args.output_dir)?;
    let mut written = Vec::new();
    for &algo in &args.algo {
        let points = epsilon_curve(&problem, algo, &grid, args.tol, args.seed)?;
        if !iterations_monotone(&points) {
            eprintln!("note: {algo} iteration counts are not monotone in the target");
        }
        written.push(write_output(&args.output_dir, &format!("curve_{algo}.csv"), &curve_csv(&points))?);
    }
    Ok(written)
}

fn distinct(algos: &[Algo]) -> CliResult<()> {
    let mut seen = HashSet::new();
    match algos.iter().find(|a| !seen.insert(**a)) {
        Some(dup) => Err(CliError::Usage(format!("algorithm `{dup}` listed twice"))),
        None => Ok(()),
    }
}

/// Runs each algorithm in turn at the same target and ranks them. Runs are
/// sequential so that wall times are not skewed by one another.
pub fn compare(problem: &Problem, algos: &[Algo], eps: f64, tol: Option<f64>, seed: Option<u64>) -> CliResult<CompareReport> {
    distinct(algos)?;
    let target = eps * cost_scale(problem);
    let oracle = oracle_cost(problem)?;
    let mut entries = Vec::with_capacity(algos.len());
    for &algo in algos {
        let config = targeted_config(algo, problem, target, tol, seed);
        let start = Instant::now();
        let run = otkit_core::run_solver(problem, &config)?;
        let wall_ns = elapsed_ns(start);
        let achieved_eps = suboptimality(problem, &run, oracle)?;
        entries.push(Ranked {
            rank: 0,
            algo: algo.name().to_string(),
            wall_ns,
            iterations: run.iterations,
            achieved_eps,
            achieved: achieved_eps <= target,
            converged: run.converged,
        });
    }
    // achieved entries first, each group by wall time
    entries.sort_by_key(|e| (!e.achieved, e.wall_ns));
    for (k, e) in entries.iter_mut().enumerate() {
        e.rank = k + 1;
    }
    Ok(CompareReport { schema: SCHEMA_VERSION, target_eps: target, oracle_cost: oracle, entries })
}

pub fn compare_cmd(args: &CompareArgs) -> CliResult<Vec<PathBuf>> {
    positive_grid(&[args.eps], "--eps")?;
    distinct(&args.algo)?;
    let problem = read_problem(&args.input)?;
    let report = compare(&problem, &args.algo, args.eps, args.tol, args.seed)?;
    prepare_dir(&args.output_dir)?;
    Ok(vec![write_output(&args.output_dir, "report.json", &to_json(&report))?])
}

pub fn otw_cmd(args: &OtwArgs) -> CliResult<Vec<PathBuf>> {
    let file = File::open(&args.input).map_err(|e| parse_error(&args.input, e.into()))?;
    let batch = read_series_csv(file).map_err(|e| parse_error(&args.input, e))?;
    let cfg = OtwConfig {
        eta: args.eta,
        temporal_weight: args.temporal_weight,
        ground_power: args.ground_power,
        marginal_mode: args.marginal_mode,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let matrix = otw_pairwise(&batch, &cfg)?;
    prepare_dir(&args.output_dir)?;
    let (path, out) = create_output(&args.output_dir, "distances.csv")?;
    let ids: Vec<&str> = batch.iter().map(|s| s.id()).collect();
    write_distance_csv(out, &ids, &matrix).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(vec![path])
}

pub fn barycenter_cmd(args: &BarycenterArgs) -> CliResult<Vec<PathBuf>> {
    let problem = barycenter_from_json(&read_input(&args.input)?).map_err(|e| parse_error(&args.input, e))?;
    let report = match args.eta {
        Some(eta) => {
            let (b, objective) = barycenter_entropic_objective(&problem, &BarycenterOptions::new(eta).tol(args.tol))?;
            BarycenterReport { schema: SCHEMA_VERSION, method: "entropic", eta: Some(eta), weights: b.weights().to_vec(), objective }
        }
        None => {
            let exact = barycenter_exact(&problem)?;
            BarycenterReport {
                schema: SCHEMA_VERSION,
                method: "exact",
                eta: None,
                weights: exact.barycenter.weights().to_vec(),
                objective: exact.objective,
            }
        }
    };
    prepare_dir(&args.output_dir)?;
    Ok(vec![write_output(&args.output_dir, "barycenter.json", &to_json(&report))?])
}
