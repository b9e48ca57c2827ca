//! Command-line interface: optimize designs, probe reachability of one
//! design, solve single IK queries, evaluate forward kinematics, and
//! voxelize STL meshes.
//!
//! Exit codes: 0 on success (including "target unreachable" answers),
//! 1 on runtime failures such as unwritable outputs, 2 on configuration
//! and usage errors (bad flags, malformed problem files or meshes).

use crate::error::Error;
use crate::ik::{solve_min_torque_ik, solve_position_ik, IkSolution};
use crate::kinematics::{forward_kinematics, Configuration, JointState};
use crate::optimizer::{run as run_optimizer, Algorithm, DesignObjective, RunResult, Solution};
use crate::problems::{
    builtin_problem, DesignProblem, ObjectiveKind, ProblemSpec, Scale, BUILTIN_NAMES,
};
use crate::reachability::ReachabilityReport;
use crate::stl::parse_stl;
use crate::vec3::Vec3;
use crate::voxel::voxelize_mesh;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "arcopt",
    version,
    about = "Dimension design of multi-joint constant-curvature arms \
             under workspace-reachability constraints"
)]
struct Cli {
    /// Worker threads (default: all cores; the ARCOPT_WORKERS environment
    /// variable is used when the flag is absent).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the free dimensions of a robot template.
    Optimize(OptimizeArgs),
    /// Reachability analysis of one concrete design.
    Reach(ReachArgs),
    /// Solve inverse kinematics for one target point.
    Ik(IkArgs),
    /// Evaluate forward kinematics for one configuration.
    Fk(FkArgs),
    /// Voxelize an STL mesh and report its occupancy.
    Voxelize(VoxelizeArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AlgorithmArg {
    Eda,
    Ga,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Algorithm {
        match a {
            AlgorithmArg::Eda => Algorithm::Eda,
            AlgorithmArg::Ga => Algorithm::Ga,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    /// Laptop-sized budgets: sampling capped, torque runs shrunk.
    Desk,
    /// The problem's stored budgets, unchanged.
    Paper,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Scale {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Paper => Scale::Paper,
        }
    }
}

/// Problem selection shared by the design-level subcommands.
#[derive(Args)]
struct ProblemArgs {
    /// Built-in scenario name (mobile_platform, deep_sea, spot_welding) or
    /// a problem TOML path.
    #[arg(long)]
    problem: String,
    /// Budget preset applied to the problem's settings.
    #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
    scale: ScaleArg,
}

impl ProblemArgs {
    /// Loads the problem and the directory its relative paths resolve
    /// against.
    fn load(&self) -> Result<(ProblemSpec, PathBuf), CliError> {
        let (mut spec, base) = if BUILTIN_NAMES.contains(&self.problem.as_str()) {
            (builtin_problem(&self.problem)?, PathBuf::from("."))
        } else {
            let path = Path::new(&self.problem);
            let spec = ProblemSpec::load(path)?;
            let base = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            (spec, base)
        };
        spec.apply_scale(self.scale.into());
        Ok((spec, base))
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Eda)]
    algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of independent runs; run k uses seed + k.
    #[arg(long, default_value_t = 1)]
    repeats: u64,
    /// Override the problem's iteration count.
    #[arg(long)]
    iterations: Option<usize>,
    /// Override the problem's population size.
    #[arg(long)]
    population: Option<usize>,
    /// Override the problem's FK sample budget per evaluation.
    #[arg(long)]
    fk_samples: Option<usize>,
    /// Pre-screen model draws with the quick objective before spending
    /// full evaluations on them (EDA with a quick objective only).
    #[arg(long)]
    select_generation: bool,
    /// Directory for log and result files.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct ReachArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Design variable values, comma-separated, in template order.
    #[arg(long, allow_hyphen_values = true)]
    design: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the FK-fraction window [LO, HI) that triggers IK
    /// refinement.
    #[arg(long, num_args = 2, value_names = ["LO", "HI"])]
    window: Option<Vec<f64>>,
    /// Override the problem's FK sample budget.
    #[arg(long)]
    fk_samples: Option<usize>,
    /// Directory for the report and point lists.
    #[arg(long, default_value = "runs")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct IkArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Design variable values, comma-separated, in template order.
    #[arg(long, allow_hyphen_values = true)]
    design: String,
    /// Target point (cm).
    #[arg(long, num_args = 3, value_names = ["X", "Y", "Z"], allow_negative_numbers = true)]
    target: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Minimize static torque among configurations that reach the target
    /// (needs the problem's [load] section).
    #[arg(long)]
    min_torque: bool,
}

#[derive(Args)]
struct FkArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Design variable values, comma-separated, in template order.
    #[arg(long, allow_hyphen_values = true)]
    design: String,
    /// Joint configuration as curvature,rotation pairs, comma-separated
    /// (two values per joint).
    #[arg(long, allow_hyphen_values = true)]
    config: String,
}

#[derive(Args)]
struct VoxelizeArgs {
    /// STL mesh path (binary or ASCII).
    #[arg(long)]
    stl: PathBuf,
    /// Voxel edge length (cm).
    #[arg(long)]
    voxel_size: f64,
    /// Write the occupied cell centers to this CSV file.
    #[arg(long)]
    centers_out: Option<PathBuf>,
}

enum CliError {
    /// Configuration or usage problem (exit 2).
    Usage(String),
    /// Failure while doing the work, e.g. unwritable output (exit 1).
    Runtime(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

/// CLI entry point.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let workers = cli.workers.or_else(|| {
        std::env::var("ARCOPT_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool setup failed: {e}")))?;
    }
    match cli.command {
        Command::Optimize(args) => cmd_optimize(args),
        Command::Reach(args) => cmd_reach(args),
        Command::Ik(args) => cmd_ik(args),
        Command::Fk(args) => cmd_fk(args),
        Command::Voxelize(args) => cmd_voxelize(args),
    }
}

/// `Display`-formats a float (round-trip exact, `inf`/`NaN` spelled out).
fn num(v: f64) -> String {
    format!("{v}")
}

fn join_nums(values: &[f64]) -> String {
    values.iter().map(|v| num(*v)).collect::<Vec<_>>().join(",")
}

fn parse_f64_list(text: &str, what: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("{what}: '{s}' is not a number")))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn ensure_dir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))
}

/// Keeps file stems portable regardless of what the problem is named.
fn sanitize(name: &str) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
                c
            } else {
                '-'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "problem".into()
    } else {
        cleaned
    }
}

#[derive(Serialize)]
struct RunReport<'a> {
    algorithm: Algorithm,
    seed: u64,
    selective: bool,
    evaluations: usize,
    best_feasible: Option<&'a Solution>,
    best_by_fitness: &'a Solution,
    /// Fully resolved problem (after scale preset and flag overrides).
    problem: &'a ProblemSpec,
    wall_time_seconds: f64,
}

fn cmd_optimize(args: OptimizeArgs) -> Result<(), CliError> {
    let (mut spec, base) = args.problem.load()?;
    if let Some(n) = args.iterations {
        spec.optimizer.iterations = n;
    }
    if let Some(n) = args.population {
        spec.optimizer.population = n;
    }
    if let Some(n) = args.fk_samples {
        spec.sampling.fk_samples = n;
    }
    let algorithm: Algorithm = args.algorithm.into();
    if args.select_generation {
        if algorithm != Algorithm::Eda {
            return Err(CliError::Usage(
                "--select-generation requires --algorithm eda".into(),
            ));
        }
        if spec.objective == ObjectiveKind::TotalTorque {
            return Err(CliError::Usage(
                "--select-generation needs a quick objective; \
                 torque problems have none"
                    .into(),
            ));
        }
    }
    spec.validate()?;
    let problem = DesignProblem::new(spec, &base)?;
    let spec = problem.spec();
    ensure_dir(&args.out_dir)?;
    let stem_base = sanitize(&spec.name);

    for k in 0..args.repeats {
        let seed = args.seed.wrapping_add(k);
        let params = spec.optimizer.params(algorithm, seed, args.select_generation);
        params.validate()?;
        let start = Instant::now();
        let result = run_optimizer(&problem, &params)?;
        let wall_time_seconds = start.elapsed().as_secs_f64();

        let stem = format!("{stem_base}_{algorithm}_seed{seed}");
        let log_path = args.out_dir.join(format!("{stem}.log.csv"));
        write_file(
            &log_path,
            &render_log_csv(&result, problem.dim(), algorithm, args.select_generation),
        )?;
        let report = RunReport {
            algorithm,
            seed,
            selective: args.select_generation,
            evaluations: result.evaluations,
            best_feasible: result.best_feasible.as_ref(),
            best_by_fitness: &result.best_by_fitness,
            problem: spec,
            wall_time_seconds,
        };
        let json_path = args.out_dir.join(format!("{stem}.result.json"));
        let mut json = serde_json::to_string_pretty(&report)
            .map_err(|e| CliError::Runtime(format!("result serialization failed: {e}")))?;
        json.push('\n');
        write_file(&json_path, &json)?;

        match &result.best_feasible {
            Some(best) => println!(
                "run seed={seed} algorithm={algorithm} evaluations={} \
                 best_feasible={} theta={} x=[{}]",
                result.evaluations,
                num(best.objective),
                num(best.theta),
                join_nums(&best.x)
            ),
            None => println!(
                "run seed={seed} algorithm={algorithm} evaluations={} \
                 best_feasible=none best_fitness={} x=[{}]",
                result.evaluations,
                num(result.best_by_fitness.fitness),
                join_nums(&result.best_by_fitness.x)
            ),
        }
        println!("  log:    {}", log_path.display());
        println!("  result: {}", json_path.display());
    }
    Ok(())
}

/// Renders the per-iteration log.  Columns: the run state, then the model's
/// per-variable mean and spread for EDA runs, then the screening audit for
/// selective runs.  Contains no timing, so reruns with the same seed are
/// byte-identical regardless of worker count.
fn render_log_csv(
    result: &RunResult,
    dim: usize,
    algorithm: Algorithm,
    selective: bool,
) -> String {
    let mut header = vec![
        "iteration".to_string(),
        "best_feasible_objective".to_string(),
        "best_fitness".to_string(),
        "mean_theta".to_string(),
    ];
    if algorithm == Algorithm::Eda {
        header.extend((0..dim).map(|i| format!("mu_{i}")));
        header.extend((0..dim).map(|i| format!("sigma_{i}")));
    }
    if selective {
        header.extend(
            [
                "select_trials",
                "select_accepted",
                "select_threshold",
                "select_max_accepted_objective",
            ]
            .map(String::from),
        );
    }
    let mut out = header.join(",");
    out.push('\n');
    for rec in &result.history {
        let mut row = vec![
            rec.iteration.to_string(),
            num(rec.best_feasible_objective),
            num(rec.best_fitness),
            num(rec.mean_theta),
        ];
        if algorithm == Algorithm::Eda {
            match &rec.model {
                Some(model) => {
                    row.extend(model.mean.iter().map(|v| num(*v)));
                    row.extend(model.std_dev.iter().map(|v| num(*v)));
                }
                None => row.extend(std::iter::repeat(String::new()).take(2 * dim)),
            }
        }
        if selective {
            match &rec.selection {
                Some(audit) => {
                    row.push(audit.trials.to_string());
                    row.push(audit.accepted.to_string());
                    row.push(num(audit.threshold));
                    row.push(num(audit.max_accepted_objective));
                }
                None => row.extend(std::iter::repeat(String::new()).take(4)),
            }
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct ReachOutput<'a> {
    design: &'a [f64],
    seed: u64,
    total_points: usize,
    reached_points: usize,
    theta: f64,
    fk_theta: f64,
    ik_checked: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    total_torque: Option<f64>,
}

fn cmd_reach(args: ReachArgs) -> Result<(), CliError> {
    let (mut spec, base) = args.problem.load()?;
    if let Some(w) = &args.window {
        spec.sampling.refine_window = [w[0], w[1]];
    }
    if let Some(n) = args.fk_samples {
        spec.sampling.fk_samples = n;
    }
    spec.validate()?;
    let problem = DesignProblem::new(spec, &base)?;
    let spec = problem.spec();
    let x = parse_f64_list(&args.design, "--design")?;
    let report: ReachabilityReport = problem.analyze(&x, args.seed)?;

    ensure_dir(&args.out_dir)?;
    let stem = format!("{}_seed{}", sanitize(&spec.name), args.seed);
    let mut reached_csv = String::from("x,y,z\n");
    let mut unreached_csv = String::from("x,y,z\n");
    for (point, reached) in problem.targets().points.iter().zip(&report.reached) {
        let line = format!("{},{},{}\n", num(point.x), num(point.y), num(point.z));
        if *reached {
            reached_csv.push_str(&line);
        } else {
            unreached_csv.push_str(&line);
        }
    }
    let reached_path = args.out_dir.join(format!("{stem}_reached.csv"));
    let unreached_path = args.out_dir.join(format!("{stem}_unreached.csv"));
    write_file(&reached_path, &reached_csv)?;
    write_file(&unreached_path, &unreached_csv)?;

    let reached_points = report.reached.iter().filter(|&&r| r).count();
    let output = ReachOutput {
        design: &x,
        seed: args.seed,
        total_points: report.reached.len(),
        reached_points,
        theta: report.theta,
        fk_theta: report.fk_theta,
        ik_checked: report.ik_checked,
        total_torque: report.total_torque(),
    };
    let json_path = args.out_dir.join(format!("{stem}_reach.json"));
    let mut json = serde_json::to_string_pretty(&output)
        .map_err(|e| CliError::Runtime(format!("report serialization failed: {e}")))?;
    json.push('\n');
    write_file(&json_path, &json)?;

    println!(
        "reached {reached_points} of {} targets (theta={})",
        report.reached.len(),
        num(report.theta)
    );
    println!(
        "fk_theta={} ik_checked={}",
        num(report.fk_theta),
        report.ik_checked
    );
    if let Some(total) = output.total_torque {
        println!("total_torque={}", num(total));
    }
    println!("  report:    {}", json_path.display());
    println!("  reached:   {}", reached_path.display());
    println!("  unreached: {}", unreached_path.display());
    Ok(())
}

fn print_ik_solution(solution: &IkSolution, min_torque: bool) {
    println!(
        "converged={} residual={}",
        solution.converged,
        num(solution.residual)
    );
    for (i, state) in solution.config.states.iter().enumerate() {
        println!(
            "joint {i}: curvature={} rotation={}",
            num(state.curvature),
            num(state.rotation)
        );
    }
    if min_torque {
        println!(
            "torque_objective={} torque_total={}",
            num(solution.torque_objective),
            num(solution.torque_total)
        );
    }
}

fn cmd_ik(args: IkArgs) -> Result<(), CliError> {
    let (spec, _) = args.problem.load()?;
    let x = parse_f64_list(&args.design, "--design")?;
    let design = spec.robot.instantiate(&x)?;
    let target = Vec3::new(args.target[0], args.target[1], args.target[2]);
    let opts = spec.ik.options(spec.tolerance, args.seed);
    let solution = if args.min_torque {
        let load = spec.load.as_ref().ok_or_else(|| {
            CliError::Usage("--min-torque needs a [load] section in the problem".into())
        })?;
        solve_min_torque_ik(&design, target, load, &opts)?
    } else {
        solve_position_ik(&design, target, &opts)?
    };
    print_ik_solution(&solution, args.min_torque);
    Ok(())
}

fn cmd_fk(args: FkArgs) -> Result<(), CliError> {
    let (spec, _) = args.problem.load()?;
    let x = parse_f64_list(&args.design, "--design")?;
    let design = spec.robot.instantiate(&x)?;
    let values = parse_f64_list(&args.config, "--config")?;
    if values.len() != 2 * design.num_joints() {
        return Err(CliError::Usage(format!(
            "--config needs {} values (curvature,rotation per joint), got {}",
            2 * design.num_joints(),
            values.len()
        )));
    }
    let states = values
        .chunks_exact(2)
        .map(|pair| JointState::new(pair[0], pair[1]))
        .collect();
    let chain = forward_kinematics(&design, &Configuration::new(states))?;
    for (i, frame) in chain.joint_frames.iter().enumerate().skip(1) {
        println!(
            "joint {} tip: {},{},{}",
            i - 1,
            num(frame.origin.x),
            num(frame.origin.y),
            num(frame.origin.z)
        );
    }
    let end = chain.end_effector;
    println!(
        "end_effector: {},{},{}",
        num(end.origin.x),
        num(end.origin.y),
        num(end.origin.z)
    );
    println!(
        "tangent: {},{},{}",
        num(end.tangent.x),
        num(end.tangent.y),
        num(end.tangent.z)
    );
    Ok(())
}

fn cmd_voxelize(args: VoxelizeArgs) -> Result<(), CliError> {
    let bytes = std::fs::read(&args.stl)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", args.stl.display())))?;
    let mesh = parse_stl(&bytes)?;
    let grid = voxelize_mesh(&mesh, args.voxel_size)?;
    println!("triangles={}", mesh.triangles.len());
    println!(
        "dims={}x{}x{} origin=({},{},{}) voxel_size={}",
        grid.dims[0],
        grid.dims[1],
        grid.dims[2],
        num(grid.origin.x),
        num(grid.origin.y),
        num(grid.origin.z),
        num(grid.voxel_size)
    );
    println!(
        "occupied={} of {} cells",
        grid.occupied_count(),
        grid.total_cells()
    );
    if let Some(path) = &args.centers_out {
        if let Some(dir) = path.parent() {
            if !dir.as_os_str().is_empty() {
                ensure_dir(dir)?;
            }
        }
        let mut csv = String::from("x,y,z\n");
        for center in grid.occupied_centers() {
            csv.push_str(&format!(
                "{},{},{}\n",
                num(center.x),
                num(center.y),
                num(center.z)
            ));
        }
        write_file(path, &csv)?;
        println!("  centers: {}", path.display());
    }
    Ok(())
}
