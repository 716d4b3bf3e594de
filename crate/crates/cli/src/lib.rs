//! Command-line front end: instance generation, static solves, day
//! simulation, strategy sweeps and MIP export/import.

pub mod report;
pub mod schema;
pub mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dwsrp::alns::{run_alns, AlnsParams};
use dwsrp::dynamics::{simulate_day, SolverKind};
use dwsrp::instgen::{d_for_delta, dynamism_metrics, generate_super, SuperInstance, DEFAULT_SKILLS};
use dwsrp::mip::{export_model, import_solution, MipFormat};
use dwsrp::schedule::evaluation_count;
use dwsrp::{check_feasibility, construct_initial};
use serde::Serialize;
use thiserror::Error;

use report::{to_json, DayFile, DayMeta, SolutionFile, SolutionMeta, TableRow, DAY_VERSION, SOLUTION_VERSION, TABLE_HEADER};
use sweep::{run_sweep, BetaTime, solver_label, FrozenSpec, StrategySpec, SweepInput};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input(_) => "input",
            CliError::Io { .. } => "io",
            CliError::Infeasible(_) => "infeasible",
            CliError::Internal(_) => "internal",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Io { .. } => 3,
            CliError::Infeasible(_) => 4,
            CliError::Internal(_) => 1,
        }
    }

    /// Single-line JSON for stderr.
    pub fn to_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}

#[derive(Debug, Parser)]
#[command(name = "dwsrp", version, about = "Dynamic workforce scheduling and routing with synchronized multi-skill crews")]
pub struct Cli {
    /// Include solver wall-clock seconds in JSON and CSV outputs.
    #[arg(long, global = true)]
    pub timing: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a day of tasks.
    Generate(GenerateArgs),
    /// Solve the tasks known at time zero.
    Solve(SolveArgs),
    /// Simulate a day with rolling reoptimization.
    Simulate(SimulateArgs),
    /// Simulate every instance under every strategy.
    Sweep(SweepArgs),
    /// Write the static model as LP or MPS.
    ExportMip(ExportArgs),
    /// Read an external solver's values back and verify them.
    ImportSolution(ImportArgs),
    /// Degree of dynamism and related statistics.
    Metrics(MetricsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelFormat {
    Lp,
    Mps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Ch,
    Alns,
}

impl From<SolverArg> for SolverKind {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Ch => SolverKind::Ch,
            SolverArg::Alns => SolverKind::Alns,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub tasks: usize,
    #[arg(long)]
    pub crews: usize,
    /// Arrival intervals; the first ⌊N/d⌋ tasks are known at time zero.
    #[arg(long, conflicts_with = "dynamism")]
    pub intervals: Option<usize>,
    /// Target degree of dynamism; picks the nearest achievable interval count.
    #[arg(long)]
    pub dynamism: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_SKILLS)]
    pub skills: usize,
    /// Move every deadline to the end of the day.
    #[arg(long)]
    pub loose: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AlnsOpts {
    /// JSON file with search parameters; missing fields keep their defaults.
    #[arg(long)]
    pub alns_config: Option<PathBuf>,
    /// Iteration cap.
    #[arg(long)]
    pub nu1: Option<usize>,
    /// Iterations without a new best before stopping.
    #[arg(long)]
    pub nu2: Option<usize>,
    /// Look-ahead depth of regret insertion.
    #[arg(long)]
    pub regret: Option<usize>,
    /// Cool after every iteration.
    #[arg(long)]
    pub cool_every_iteration: bool,
}

impl AlnsOpts {
    fn params(&self, seed: u64) -> Result<AlnsParams, CliError> {
        let mut p = match &self.alns_config {
            Some(path) => serde_json::from_str(&read(path)?)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            None => AlnsParams::default(),
        };
        p.seed = seed;
        if let Some(v) = self.nu1 {
            p.nu1 = v;
        }
        if let Some(v) = self.nu2 {
            p.nu2 = v;
        }
        if let Some(v) = self.regret {
            p.regret_n = v;
        }
        p.cool_every_iteration |= self.cool_every_iteration;
        p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(p)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = SolverArg::Alns)]
    pub solver: SolverArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub alns: AlnsOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub instance: PathBuf,
    /// Replan once this many tasks have arrived.
    #[arg(long, default_value_t = 5)]
    pub beta_task: usize,
    /// Replan this many minutes after the last replan, or `none`.
    #[arg(long, default_value = "60")]
    pub beta_time: BetaTime,
    /// Frozen length: minutes, `maxtp` or `sumtp`.
    #[arg(long, default_value = "30")]
    pub frozen: FrozenSpec,
    #[arg(long, value_enum, default_value_t = SolverArg::Alns)]
    pub solver: SolverArg,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub alns: AlnsOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    pub beta_task: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "60")]
    pub beta_time: Vec<BetaTime>,
    #[arg(long, value_delimiter = ',', default_value = "30")]
    pub frozen: Vec<FrozenSpec>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "alns")]
    pub solver: Vec<SolverArg>,
    /// First search seed; replicate `r` uses `seed + r`.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub replicates: u64,
    #[command(flatten)]
    pub alns: AlnsOpts,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    pub instance: PathBuf,
    #[arg(long, value_enum, default_value_t = ModelFormat::Lp)]
    pub format: ModelFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub instance: PathBuf,
    /// Solver output: `name value` lines, CBC-style columns or XML.
    pub values: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(required = true)]
    pub instances: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    pub format: OutputFormat,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

fn load_instance(path: &Path) -> Result<SuperInstance, CliError> {
    schema::parse_instance(&read(path)?).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Io {
            path: "stdout".into(),
            message: e.to_string(),
        }),
    }
}

/// The given seed, or a fresh one announced on stderr.
fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random::<u64>();
        eprintln!("seed={s}");
        s
    })
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let timing = cli.timing;
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a, timing),
        Command::Simulate(a) => simulate(a, timing),
        Command::Sweep(a) => sweep(a, timing),
        Command::ExportMip(a) => export(a),
        Command::ImportSolution(a) => import(a),
        Command::Metrics(a) => metrics(a),
    }
}

#[derive(Debug, Serialize)]
struct MetricsRecord {
    instance: String,
    n: usize,
    k: usize,
    intervals: Option<usize>,
    delta: f64,
    delta_e: f64,
    delta_e_tw: f64,
    n_sync: usize,
    t_max: f64,
    p_max: f64,
}

impl MetricsRecord {
    fn new(name: &str, inst: &SuperInstance) -> Self {
        let m = dynamism_metrics(inst);
        Self {
            instance: name.into(),
            n: inst.tasks.len(),
            k: inst.crews.len(),
            intervals: inst.intervals,
            delta: m.delta,
            delta_e: m.effective,
            delta_e_tw: m.effective_tw,
            n_sync: inst.sync_count(),
            t_max: inst.max_travel_time(),
            p_max: inst.max_process_time(),
        }
    }

    const HEADER: [&'static str; 10] = ["instance", "n", "k", "intervals", "delta", "delta_e", "delta_e_tw", "n_sync", "t_max", "p_max"];

    fn fields(&self) -> Vec<String> {
        vec![
            self.instance.clone(),
            self.n.to_string(),
            self.k.to_string(),
            self.intervals.map_or_else(String::new, |d| d.to_string()),
            self.delta.to_string(),
            self.delta_e.to_string(),
            self.delta_e_tw.to_string(),
            self.n_sync.to_string(),
            self.t_max.to_string(),
            self.p_max.to_string(),
        ]
    }
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    if a.tasks == 0 {
        return Err(CliError::Usage("--tasks must be at least 1".into()));
    }
    let d = match (a.intervals, a.dynamism) {
        (Some(d), _) => d,
        (None, Some(delta)) => d_for_delta(a.tasks, delta).map_err(|e| CliError::Usage(e.to_string()))?,
        (None, None) => return Err(CliError::Usage("one of --intervals or --dynamism is required".into())),
    };
    let seed = seed_or_fresh(a.seed);
    let mut inst = generate_super(a.tasks, a.crews, d, seed, a.skills).map_err(|e| CliError::Usage(e.to_string()))?;
    if a.loose {
        inst = inst.loosen();
    }
    emit(&a.out, &schema::render_instance(&inst))?;
    let m = MetricsRecord::new("", &inst);
    eprintln!(
        "delta={} delta_e={} delta_e_tw={} n_sync={}",
        m.delta, m.delta_e, m.delta_e_tw, m.n_sync
    );
    Ok(())
}

fn solve(a: SolveArgs, timing: bool) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let problem = inst.static_problem().map_err(|e| CliError::Input(e.to_string()))?;
    let dynamic = inst.tasks.len() - problem.task_count();
    if dynamic > 0 {
        eprintln!("note: solving the {} tasks known at time zero; {dynamic} later arrivals ignored", problem.task_count());
    }
    let seed = seed_or_fresh(a.seed);
    let solver: SolverKind = a.solver.into();
    let params = a.alns.params(seed)?;

    let before = evaluation_count();
    let clock = Instant::now();
    let initial = construct_initial(&problem);
    let ch_twtt = initial.twtt;
    let best = match solver {
        SolverKind::Ch => initial,
        SolverKind::Alns => run_alns(&problem, initial, &params).best,
    };
    let cpu = clock.elapsed().as_secs_f64();
    let evaluations = evaluation_count() - before;

    let violations = check_feasibility(&problem, &best);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("{v:?}")).collect();
        return Err(CliError::Infeasible(list.join("; ")));
    }
    let meta = SolutionMeta {
        version: SOLUTION_VERSION.into(),
        instance_seed: inst.seed,
        seed,
        solver: solver_label(solver).into(),
        params: (solver == SolverKind::Alns).then_some(params),
    };
    let mut file = SolutionFile::new(meta, &problem, &best);
    file.ch_twtt = Some(ch_twtt);
    file.evaluations = evaluations;
    file.cpu_s = timing.then_some(cpu);
    eprintln!("{}", file.summary(cpu));
    match a.format {
        OutputFormat::Json => emit(&a.out, &to_json(&file)),
        OutputFormat::Csv => {
            let header = ["schema", "instance", "seed", "solver", "twtt", "ch_twtt", "outsourced", "evaluations", "cpu_s"];
            let row = vec![
                SOLUTION_VERSION.to_string(),
                a.instance.display().to_string(),
                seed.to_string(),
                file.meta.solver.clone(),
                file.twtt.to_string(),
                ch_twtt.to_string(),
                file.outsourced.len().to_string(),
                evaluations.to_string(),
                file.cpu_s.map_or_else(String::new, |c| c.to_string()),
            ];
            emit(&a.out, &csv_text(&header, &[row]))
        }
    }
}

fn simulate(a: SimulateArgs, timing: bool) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let seed = seed_or_fresh(a.seed);
    let params = a.alns.params(seed)?;
    let spec = StrategySpec {
        beta_task: a.beta_task,
        beta_time: a.beta_time.0,
        frozen: a.frozen,
        solver: a.solver.into(),
    };
    let (strategy, record) = spec.resolve(&inst);
    let report = simulate_day(&inst, &strategy, &params).map_err(|e| CliError::Usage(e.to_string()))?;
    let name = a.instance.display().to_string();
    eprintln!(
        "twtt={} reopt={} outsourced={} cpu_s={:.3}",
        report.twtt, report.reopt_count, report.outsourced, report.solver_seconds
    );
    match a.format {
        OutputFormat::Json => {
            let meta = DayMeta {
                version: DAY_VERSION.into(),
                instance: name,
                instance_seed: inst.seed,
                seed,
                params: (strategy.solver == SolverKind::Alns).then_some(params),
                strategy: record,
            };
            emit(&a.out, &to_json(&DayFile::new(meta, &report, timing)))
        }
        OutputFormat::Csv => {
            let row = TableRow::from_day(&name, &strategy, &record, seed, &report, timing);
            emit(&a.out, &report::render_table(&[row]))
        }
    }
}

fn sweep(a: SweepArgs, timing: bool) -> Result<(), CliError> {
    let instances = a
        .instances
        .iter()
        .map(|p| Ok((p.display().to_string(), load_instance(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut strategies = Vec::new();
    for &solver in &a.solver {
        for &BetaTime(beta_time) in &a.beta_time {
            for &frozen in &a.frozen {
                for &beta_task in &a.beta_task {
                    strategies.push(StrategySpec {
                        beta_task,
                        beta_time,
                        frozen,
                        solver: solver.into(),
                    });
                }
            }
        }
    }
    for s in &strategies {
        if s.beta_task == 0 {
            return Err(CliError::Usage("--beta-task values must be at least 1".into()));
        }
    }
    if a.replicates == 0 {
        return Err(CliError::Usage("--replicates must be at least 1".into()));
    }
    let base = seed_or_fresh(a.seed);
    let seeds: Vec<u64> = (0..a.replicates).map(|r| base.wrapping_add(r)).collect();
    let params = a.alns.params(base)?;
    let rows = run_sweep(&SweepInput {
        instances: &instances,
        strategies: &strategies,
        seeds: &seeds,
        params: &params,
        timing,
    })?;
    match a.format {
        OutputFormat::Csv => emit(&a.out, &report::render_table(&rows)),
        OutputFormat::Json => {
            let objects: Vec<serde_json::Map<String, serde_json::Value>> = rows
                .iter()
                .map(|r| {
                    TABLE_HEADER
                        .iter()
                        .zip(r.fields())
                        .map(|(k, v)| (k.to_string(), serde_json::Value::String(v)))
                        .collect()
                })
                .collect();
            emit(&a.out, &to_json(&objects))
        }
    }
}

fn export(a: ExportArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let problem = inst.static_problem().map_err(|e| CliError::Input(e.to_string()))?;
    let format = match a.format {
        ModelFormat::Lp => MipFormat::Lp,
        ModelFormat::Mps => MipFormat::Mps,
    };
    let text = export_model(&problem, format).map_err(|e| CliError::Input(e.to_string()))?;
    emit(&a.out, &text)
}

fn import(a: ImportArgs) -> Result<(), CliError> {
    let inst = load_instance(&a.instance)?;
    let problem = inst.static_problem().map_err(|e| CliError::Input(e.to_string()))?;
    let text = read(&a.values)?;
    let report = import_solution(&problem, &text).map_err(|e| CliError::Infeasible(e.to_string()))?;
    let violations = check_feasibility(&problem, &report.solution);
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| format!("{v:?}")).collect();
        return Err(CliError::Infeasible(list.join("; ")));
    }
    let meta = SolutionMeta {
        version: SOLUTION_VERSION.into(),
        instance_seed: inst.seed,
        seed: 0,
        solver: "mip".into(),
        params: None,
    };
    let mut file = SolutionFile::new(meta, &problem, &report.solution);
    file.mismatches = report.mismatches;
    eprintln!("twtt={} outsourced={} mismatches={}", file.twtt, file.outsourced.len(), file.mismatches.len());
    emit(&a.out, &to_json(&file))
}

fn metrics(a: MetricsArgs) -> Result<(), CliError> {
    let records = a
        .instances
        .iter()
        .map(|p| Ok(MetricsRecord::new(&p.display().to_string(), &load_instance(p)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let text = match a.format {
        OutputFormat::Json => to_json(&records),
        OutputFormat::Csv => csv_text(&MetricsRecord::HEADER, &records.iter().map(MetricsRecord::fields).collect::<Vec<_>>()),
    };
    emit(&None, &text)
}
