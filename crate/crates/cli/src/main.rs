use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use transit_equity::fixtures::{random_instance, InstanceParams};
use transit_equity::ingest::{assemble_problem, load_od, load_tracts, OdSelection, ProblemConfig};
use transit_equity::milp::{
    build_model, min_budget_positive_floor, min_cost_full_service, solve, Solver, SolverConfig,
};
use transit_equity::objectives::{solve_leximax, RAWLSIAN_GAMMA};
use transit_equity::oracle::{evaluate_all, EnumerationBudget};
use transit_equity::sweep::{
    emit_arcs_csv, emit_csv, emit_design_csv, emit_gain_csv, emit_leximax_csv, fractions_from, run_comparison,
    run_sweep,
};
use transit_equity::utility::{welfare_tradeoff, welfare_utilitarian};
use transit_equity::{DemandProfile, DesignProblem, Error, WelfareSpec};

#[derive(Parser)]
#[command(name = "transit-equity", version, about = "Equitable transit network design")]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score tracts and OD pairs.
    Score(ScoreArgs),
    /// Solve at a single budget.
    Solve(SolveArgs),
    /// Solve over a grid of budget fractions.
    Sweep(SweepArgs),
    /// Run the leximax iteration at one budget.
    Leximax(LeximaxArgs),
    /// Compare MILP optima with brute-force enumeration on random instances.
    OracleCheck(OracleArgs),
    /// Print the budget endpoints B_min and B_max.
    BudgetRange(BudgetRangeArgs),
}

#[derive(Args, Clone)]
struct Inputs {
    #[arg(long)]
    tracts: PathBuf,
    /// OD counts; without it every pair has zero demand.
    #[arg(long)]
    od: Option<PathBuf>,
    /// TOML config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Clone, Default)]
struct Overrides {
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of priority groups.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    bins: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    budget_fractions: Option<Vec<f64>>,
    #[arg(long)]
    grid_step: Option<f64>,
    /// identity | scale:<factor>
    #[arg(long)]
    cost_rule: Option<String>,
    /// complete | knn:<k>
    #[arg(long)]
    topology: Option<String>,
    /// all | positive
    #[arg(long)]
    od_pairs: Option<String>,
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Objective {
    Utilitarian,
    /// Trade-off at gamma = 0.01.
    Rawlsian,
    /// Trade-off at the configured gamma.
    Tradeoff,
}

impl Objective {
    fn spec(self, config: &ProblemConfig) -> WelfareSpec {
        match self {
            Objective::Utilitarian => WelfareSpec::utilitarian(),
            Objective::Rawlsian => WelfareSpec::tradeoff(RAWLSIAN_GAMMA),
            Objective::Tradeoff => WelfareSpec::tradeoff(config.gamma),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Objective::Utilitarian => "utilitarian",
            Objective::Rawlsian => "rawlsian",
            Objective::Tradeoff => "tradeoff",
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum Range {
    /// Fractions as configured.
    Full,
    /// Evenly spaced from B_min to B_max, as many points as configured.
    Bmin,
}

#[derive(Args)]
struct ScoreArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value = "utilitarian")]
    objective: Objective,
    /// Budget as a fraction of B_max.
    #[arg(long, conflicts_with = "budget")]
    budget_fraction: Option<f64>,
    /// Absolute budget.
    #[arg(long)]
    budget: Option<f64>,
    /// Also write the model in LP format.
    #[arg(long)]
    write_lp: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value = "utilitarian")]
    objective: Objective,
    /// Budget range; defaults to bmin for trade-off objectives, full otherwise.
    #[arg(long, value_enum)]
    range: Option<Range>,
    /// Also run every pair at equal priority and write the per-group gain.
    #[arg(long)]
    compare_equal_priorities: bool,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct LeximaxArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, default_value_t = 0.8)]
    budget_fraction: f64,
    /// Defaults to one iteration per OD pair.
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, default_value_t = 50)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    gamma: f64,
    #[arg(long, default_value_t = 1e-4)]
    gap: f64,
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BudgetRangeArgs {
    #[command(flatten)]
    inputs: Inputs,
}

/// A failure and the process exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Solver(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::from(e).into()
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let outcome = match cli.command {
        Command::Score(a) => score(a),
        Command::Solve(a) => solve_cmd(a),
        Command::Sweep(a) => sweep_cmd(a),
        Command::Leximax(a) => leximax_cmd(a),
        Command::OracleCheck(a) => oracle_cmd(a),
        Command::BudgetRange(a) => budget_range(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn resolve_config(inputs: &Inputs) -> CliResult<ProblemConfig> {
    let mut c = match &inputs.config {
        Some(path) => ProblemConfig::load(path)?,
        None => ProblemConfig::default(),
    };
    let o = &inputs.overrides;
    macro_rules! take {
        ($($field:ident),*) => {
            $(if let Some(v) = o.$field.clone() { c.$field = v; })*
        };
    }
    take!(alpha, k, bins, epsilon, gamma, gap, time_limit, seed, budget_fractions, grid_step, cost_rule, topology);
    if let Some(s) = &o.od_pairs {
        c.od_pairs = s.parse::<OdSelection>()?;
    }
    c.validate()?;
    Ok(c)
}

struct Loaded {
    config: ProblemConfig,
    problem: DesignProblem,
    scores: Vec<transit_equity::priority::TractScore>,
}

fn load(inputs: &Inputs) -> CliResult<Loaded> {
    let config = resolve_config(inputs)?;
    let tracts = load_tracts(&inputs.tracts)?;
    let ids: Vec<String> = tracts.iter().map(|t| t.tract_id.clone()).collect();
    let demand = match &inputs.od {
        Some(path) => load_od(path, &ids)?,
        None => DemandProfile::default(),
    };
    let assembled = assemble_problem(&tracts, demand, &config)?;
    info!(
        "{} tracts, {} arcs, {} OD pairs",
        tracts.len(),
        assembled.problem.network().arc_count(),
        assembled.problem.pairs().len()
    );
    Ok(Loaded {
        config,
        problem: assembled.problem,
        scores: assembled.scores,
    })
}

fn solver_for(config: &ProblemConfig) -> Solver {
    Solver::highs(SolverConfig {
        gap: config.gap,
        time_limit: config.time_limit,
        seed: config.seed,
        verbose: false,
    })
}

/// Key-value run record written next to the CSV outputs.
struct Manifest {
    text: String,
    started: Instant,
}

impl Manifest {
    fn new(command: &str, config: Option<&ProblemConfig>, solver: Option<&Solver>) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "command = {command}");
        let _ = writeln!(text, "args = {}", std::env::args().collect::<Vec<_>>().join(" "));
        let _ = writeln!(text, "version = {}", env!("CARGO_PKG_VERSION"));
        if let Some(s) = solver {
            let _ = writeln!(text, "backend = {}", s.backend_name());
        }
        if let Some(c) = config {
            let _ = writeln!(text, "seed = {}", c.seed);
            let _ = writeln!(text, "\n[config]");
            text.push_str(&toml::to_string(c).unwrap_or_default());
            let _ = writeln!(text, "\n[run]");
        }
        Manifest {
            text,
            started: Instant::now(),
        }
    }

    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.text, "{key} = {value}");
    }

    fn write(mut self, dir: &Path) -> CliResult {
        let elapsed = self.started.elapsed().as_secs_f64();
        self.line("wall_seconds", format!("{elapsed:.3}"));
        fs::write(dir.join("run_manifest.txt"), self.text)?;
        Ok(())
    }
}

fn score(args: ScoreArgs) -> CliResult {
    let loaded = load(&args.inputs)?;
    fs::create_dir_all(&args.out_dir)?;
    let mut w = csv::Writer::from_path(args.out_dir.join("tract_priorities.csv")).map_err(Error::from)?;
    w.write_record(["tract_id", "income_score", "vehicle_score", "raw", "priority"])
        .map_err(Error::from)?;
    for s in &loaded.scores {
        w.write_record([
            s.tract_id.clone(),
            s.income_score.to_string(),
            s.vehicle_score.to_string(),
            s.raw.to_string(),
            s.priority.to_string(),
        ])
        .map_err(Error::from)?;
    }
    w.flush()?;
    let problem = &loaded.problem;
    let net = problem.network();
    let mut w = csv::Writer::from_path(args.out_dir.join("od_priorities.csv")).map_err(Error::from)?;
    w.write_record(["origin", "destination", "priority", "group", "demand"])
        .map_err(Error::from)?;
    for &pair in problem.pairs() {
        w.write_record([
            net.node(pair.origin).label.clone(),
            net.node(pair.destination).label.clone(),
            problem.priority().get(pair).unwrap_or(0.0).to_string(),
            problem.priority().group(pair).unwrap_or(0).to_string(),
            problem.demand().get(pair).to_string(),
        ])
        .map_err(Error::from)?;
    }
    w.flush()?;
    let mut manifest = Manifest::new("score", Some(&loaded.config), None);
    manifest.line("tracts", loaded.scores.len());
    manifest.line("od_pairs", problem.pairs().len());
    manifest.write(&args.out_dir)
}

fn solve_cmd(args: SolveArgs) -> CliResult {
    let loaded = load(&args.inputs)?;
    let solver = solver_for(&loaded.config);
    let mut manifest = Manifest::new("solve", Some(&loaded.config), Some(&solver));
    let budget = match (args.budget, args.budget_fraction) {
        (Some(b), _) => b,
        (None, fraction) => {
            let (b_max, _) = min_cost_full_service(&loaded.problem, &solver)?;
            manifest.line("b_max", b_max);
            fraction.unwrap_or(1.0) * b_max
        }
    };
    let problem = loaded.problem.with_budget(budget)?;
    let spec = args.objective.spec(&loaded.config);
    let model = build_model(&problem, &spec, &Default::default())?;
    fs::create_dir_all(&args.out_dir)?;
    if let Some(path) = &args.write_lp {
        model.milp.write_lp(fs::File::create(path)?)?;
    }
    let design = solve(&model, &solver, None)?;
    emit_design_csv(&design, &problem, &args.out_dir.join("design.csv"))?;
    emit_arcs_csv(&design, &problem, &args.out_dir.join("arcs.csv"))?;
    println!(
        "objective {} | gap {:.2e} | cost {} of {} | {} of {} pairs served",
        design.objective,
        design.gap,
        design.cost,
        budget,
        design.served_count(),
        problem.pairs().len()
    );
    manifest.line("objective_kind", args.objective.name());
    manifest.line("budget", budget);
    manifest.line("objective", design.objective);
    manifest.line("gap", design.gap);
    manifest.line("solve_seconds", format!("{:.3}", design.wall_time.as_secs_f64()));
    manifest.write(&args.out_dir)
}

fn sweep_cmd(args: SweepArgs) -> CliResult {
    let loaded = load(&args.inputs)?;
    let config = &loaded.config;
    let solver = solver_for(config);
    let mut manifest = Manifest::new("sweep", Some(config), Some(&solver));
    let problem = &loaded.problem;
    let spec = args.objective.spec(config);

    let (b_max, _) = min_cost_full_service(problem, &solver)?;
    manifest.line("b_max", b_max);
    let range = args.range.unwrap_or(if args.objective == Objective::Utilitarian {
        Range::Full
    } else {
        Range::Bmin
    });
    let fractions = match range {
        Range::Full => config.budget_fractions.clone(),
        Range::Bmin => {
            let floor = min_budget_positive_floor(problem, b_max, config.grid_step, &solver)?;
            manifest.line("b_min", floor.budget);
            let start = if b_max > 0.0 { floor.budget / b_max } else { 1.0 };
            fractions_from(start, config.budget_fractions.len())
        }
    };
    fs::create_dir_all(&args.out_dir)?;
    let name = args.objective.name();
    let sweep_failed = |e: transit_equity::sweep::SweepError, manifest: &mut Manifest| -> Failure {
        manifest.line("partial_rows", e.partial.rows.len());
        let path = args.out_dir.join(format!("sweep_{name}.partial.csv"));
        if let Err(w) = emit_csv(&e.partial, &path) {
            warn!("could not write partial results: {w}");
        }
        e.source.into()
    };
    let result = if args.compare_equal_priorities {
        match run_comparison(problem, &spec, &fractions, b_max, &solver) {
            Ok(cmp) => {
                emit_csv(&cmp.agnostic, &args.out_dir.join(format!("sweep_{name}_equal.csv")))?;
                emit_gain_csv(&cmp.gain, cmp.aware.groups, &args.out_dir.join(format!("gain_{name}.csv")))?;
                record_times(&mut manifest, "equal", &cmp.agnostic);
                cmp.aware
            }
            Err(e) => {
                let f = sweep_failed(e, &mut manifest);
                manifest.write(&args.out_dir)?;
                return Err(f);
            }
        }
    } else {
        match run_sweep(problem, &spec, &fractions, b_max, &solver) {
            Ok(r) => r,
            Err(e) => {
                let f = sweep_failed(e, &mut manifest);
                manifest.write(&args.out_dir)?;
                return Err(f);
            }
        }
    };
    emit_csv(&result, &args.out_dir.join(format!("sweep_{name}.csv")))?;
    record_times(&mut manifest, "aware", &result);
    manifest.write(&args.out_dir)
}

fn record_times(manifest: &mut Manifest, label: &str, result: &transit_equity::sweep::SweepResult) {
    for (row, t) in result.rows.iter().zip(&result.solve_times) {
        manifest.line(
            &format!("{label}_solve_seconds[{}]", row.budget_fraction),
            format!("{:.3} (gap {:.2e})", t.as_secs_f64(), row.gap),
        );
    }
}

fn leximax_cmd(args: LeximaxArgs) -> CliResult {
    let loaded = load(&args.inputs)?;
    let config = &loaded.config;
    let solver = solver_for(config);
    let mut manifest = Manifest::new("leximax", Some(config), Some(&solver));
    let (b_max, _) = min_cost_full_service(&loaded.problem, &solver)?;
    let budget = args.budget_fraction * b_max;
    manifest.line("b_max", b_max);
    manifest.line("budget", budget);
    let problem = loaded.problem.with_budget(budget)?;
    fs::create_dir_all(&args.out_dir)?;
    let path = args.out_dir.join("leximax.csv");
    match solve_leximax(&problem, config.gamma, args.max_iterations, &solver) {
        Ok(trace) => {
            emit_leximax_csv(&trace, &problem, &path)?;
            manifest.line("iterations", trace.len());
            manifest.write(&args.out_dir)
        }
        Err(e) => {
            emit_leximax_csv(&e.partial, &problem, &path)?;
            manifest.line("iterations", e.partial.len());
            manifest.line("aborted", &e.source);
            manifest.write(&args.out_dir)?;
            Err(e.source.into())
        }
    }
}

struct OracleRow {
    instance: usize,
    seed: u64,
    nodes: usize,
    arcs: usize,
    budget: f64,
    welfare: &'static str,
    milp: f64,
    oracle: f64,
    pass: bool,
}

fn check_instance(instance: usize, seed: u64, gamma: f64, solver: &Solver) -> Result<Vec<OracleRow>, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let problem = random_instance(&mut rng, &InstanceParams::default());
    let all = evaluate_all(&problem, &EnumerationBudget::default())?;
    let tol = |v: f64| 1e-6 + solver.config().gap * v.abs();
    let mut rows = Vec::new();
    let specs = [("utilitarian", WelfareSpec::utilitarian()), ("tradeoff", WelfareSpec::tradeoff(gamma))];
    for (name, spec) in specs {
        let model = build_model(&problem, &spec, &Default::default())?;
        let design = solve(&model, solver, None)?;
        let best = all.optimum(&Default::default(), |u| {
            if name == "utilitarian" {
                welfare_utilitarian(u, problem.demand(), problem.priority())
            } else {
                welfare_tradeoff(u, problem.demand(), problem.priority(), gamma, None)
            }
        })?;
        rows.push(OracleRow {
            instance,
            seed,
            nodes: problem.network().nodes().len(),
            arcs: problem.network().arc_count(),
            budget: problem.budget(),
            welfare: name,
            milp: design.objective,
            oracle: best.value,
            pass: (design.objective - best.value).abs() <= tol(best.value),
        });
    }
    Ok(rows)
}

fn oracle_cmd(args: OracleArgs) -> CliResult {
    let solver = Solver::highs(SolverConfig {
        gap: args.gap,
        seed: args.seed,
        ..SolverConfig::default()
    });
    let mut manifest = Manifest::new("oracle-check", None, Some(&solver));
    manifest.line("seed", args.seed);
    manifest.line("instances", args.instances);
    let outcomes: Vec<Result<Vec<OracleRow>, Error>> = (0..args.instances)
        .into_par_iter()
        .map(|i| check_instance(i, args.seed.wrapping_add(i as u64), args.gamma, &solver))
        .collect();
    fs::create_dir_all(&args.out_dir)?;
    let mut w = csv::Writer::from_path(args.out_dir.join("oracle_check.csv")).map_err(Error::from)?;
    w.write_record(["instance", "seed", "nodes", "arcs", "budget", "welfare", "milp", "oracle", "result"])
        .map_err(Error::from)?;
    let mut failures = 0;
    let mut first_error = None;
    for outcome in outcomes {
        match outcome {
            Ok(rows) => {
                for r in rows {
                    println!(
                        "instance {:>3} {:<11} milp {:>12.6} oracle {:>12.6} {}",
                        r.instance,
                        r.welfare,
                        r.milp,
                        r.oracle,
                        if r.pass { "PASS" } else { "FAIL" }
                    );
                    failures += usize::from(!r.pass);
                    w.write_record([
                        r.instance.to_string(),
                        r.seed.to_string(),
                        r.nodes.to_string(),
                        r.arcs.to_string(),
                        r.budget.to_string(),
                        r.welfare.to_string(),
                        r.milp.to_string(),
                        r.oracle.to_string(),
                        if r.pass { "PASS" } else { "FAIL" }.to_string(),
                    ])
                    .map_err(Error::from)?;
                }
            }
            Err(e) => {
                eprintln!("instance failed: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    w.flush()?;
    manifest.line("disagreements", failures);
    manifest.write(&args.out_dir)?;
    if let Some(e) = first_error {
        return Err(e.into());
    }
    if failures > 0 {
        return Err(Failure {
            code: 3,
            message: format!("{failures} MILP optima disagree with enumeration"),
        });
    }
    Ok(())
}

fn budget_range(args: BudgetRangeArgs) -> CliResult {
    let loaded = load(&args.inputs)?;
    let solver = solver_for(&loaded.config);
    let (b_max, _) = min_cost_full_service(&loaded.problem, &solver)?;
    let floor = min_budget_positive_floor(&loaded.problem, b_max, loaded.config.grid_step, &solver)?;
    println!("B_min = {}", floor.budget);
    println!("B_max = {}", b_max);
    Ok(())
}
