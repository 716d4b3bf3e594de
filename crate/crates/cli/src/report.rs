//! Solution and day-report records, and the CSV row shared by `simulate`
//! and `sweep`.

use dwsrp::alns::AlnsParams;
use dwsrp::dynamics::{DayReport, Strategy};
use dwsrp::{ReoptProblem, Solution, TaskId};
use serde::{Deserialize, Serialize};

pub const SOLUTION_VERSION: &str = "dwsrp-solution/1";
pub const DAY_VERSION: &str = "dwsrp-day/1";
pub const TABLE_VERSION: &str = "dwsrp-table/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisitRecord {
    pub task: u32,
    pub arrival: f64,
    pub start: f64,
    pub completion: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RouteRecord {
    pub crew: u32,
    pub visits: Vec<VisitRecord>,
    pub return_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionMeta {
    pub version: String,
    pub instance_seed: Option<u64>,
    pub seed: u64,
    pub solver: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<AlnsParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub meta: SolutionMeta,
    pub twtt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ch_twtt: Option<f64>,
    pub outsourced: Vec<u32>,
    pub routes: Vec<RouteRecord>,
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mismatches: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_s: Option<f64>,
}

impl SolutionFile {
    pub fn new(meta: SolutionMeta, problem: &ReoptProblem, solution: &Solution) -> Self {
        let routes = solution
            .routes
            .iter()
            .enumerate()
            .map(|(k, route)| RouteRecord {
                crew: problem.crews[k].id.0,
                visits: route
                    .iter()
                    .enumerate()
                    .map(|(pos, &i)| VisitRecord {
                        task: problem.tasks[i].id.0,
                        arrival: solution.schedule.crew_arrival[k][pos],
                        start: solution.schedule.start[i].expect("routed tasks are scheduled"),
                        completion: solution.schedule.completion[i].expect("routed tasks are scheduled"),
                    })
                    .collect(),
                return_time: solution.schedule.return_time[k],
            })
            .collect();
        Self {
            meta,
            twtt: solution.twtt,
            ch_twtt: None,
            outsourced: solution.outsourced.iter().map(|&i| problem.tasks[i].id.0).collect(),
            routes,
            evaluations: 0,
            mismatches: Vec::new(),
            cpu_s: None,
        }
    }

    /// One line for the terminal: objective, outsourcing, effort.
    pub fn summary(&self, cpu_s: f64) -> String {
        format!(
            "twtt={} cpu_s={cpu_s:.3} outsourced={} evaluations={}",
            self.twtt,
            self.outsourced.len(),
            self.evaluations
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyRecord {
    pub beta_task: usize,
    pub beta_time: Option<f64>,
    /// As given on the command line.
    pub frozen: String,
    pub frozen_min: f64,
    pub solver: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub index: usize,
    pub tau: f64,
    pub frozen: Vec<u32>,
    pub free: Vec<u32>,
    pub new: Vec<u32>,
    pub ch_twtt: f64,
    pub twtt: f64,
    pub finalized_twtt: f64,
    pub evaluations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskOutcome {
    pub task: u32,
    pub crews: Vec<u32>,
    pub start: Option<f64>,
    pub completion: f64,
    pub outsourced: bool,
    pub epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayMeta {
    pub version: String,
    pub instance: String,
    pub instance_seed: Option<u64>,
    pub seed: u64,
    pub strategy: StrategyRecord,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<AlnsParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayFile {
    pub meta: DayMeta,
    pub twtt: f64,
    pub reopt_count: usize,
    pub outsourced: usize,
    pub evaluations: u64,
    pub closing_twtt: f64,
    pub epochs: Vec<EpochSummary>,
    pub tasks: Vec<TaskOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cpu_s: Option<f64>,
}

fn ids(v: &[TaskId]) -> Vec<u32> {
    v.iter().map(|t| t.0).collect()
}

impl DayFile {
    pub fn new(meta: DayMeta, report: &DayReport, timing: bool) -> Self {
        Self {
            meta,
            twtt: report.twtt,
            reopt_count: report.reopt_count,
            outsourced: report.outsourced,
            evaluations: report.evaluations,
            closing_twtt: report.closing_twtt,
            epochs: report
                .epochs
                .iter()
                .map(|e| EpochSummary {
                    index: e.index,
                    tau: e.tau,
                    frozen: ids(&e.frozen),
                    free: ids(&e.free),
                    new: ids(&e.new),
                    ch_twtt: e.ch_twtt,
                    twtt: e.twtt,
                    finalized_twtt: e.finalized_twtt,
                    evaluations: e.evaluations,
                    cpu_s: timing.then_some(e.solver_seconds),
                })
                .collect(),
            tasks: report
                .tasks
                .iter()
                .map(|f| TaskOutcome {
                    task: f.task.0,
                    crews: f.crews.iter().map(|c| c.0).collect(),
                    start: f.start,
                    completion: f.completion,
                    outsourced: f.outsourced,
                    epoch: f.epoch,
                })
                .collect(),
            cpu_s: timing.then_some(report.solver_seconds),
        }
    }
}

/// Columns of every table row. The first column carries the format version.
pub const TABLE_HEADER: [&str; 14] = [
    "schema",
    "instance",
    "seed",
    "beta_task",
    "beta_time",
    "frozen",
    "frozen_min",
    "solver",
    "twtt",
    "reopt",
    "outsourced",
    "evaluations",
    "cpu_s",
    "status",
];

/// One simulated day, or an aggregate over days when `instance` is
/// `Min`, `Max` or `Avg`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub instance: String,
    pub seed: Option<u64>,
    pub beta_task: usize,
    pub beta_time: Option<f64>,
    pub frozen: String,
    pub frozen_min: Option<f64>,
    pub solver: String,
    pub twtt: Option<f64>,
    pub reopt: Option<f64>,
    pub outsourced: Option<f64>,
    pub evaluations: Option<f64>,
    pub cpu_s: Option<f64>,
    pub status: String,
}

fn cell<T: ToString>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl TableRow {
    pub fn from_day(instance: &str, strategy: &Strategy, record: &StrategyRecord, seed: u64, report: &DayReport, timing: bool) -> Self {
        Self {
            instance: instance.into(),
            seed: Some(seed),
            beta_task: strategy.beta_task,
            beta_time: strategy.beta_time,
            frozen: record.frozen.clone(),
            frozen_min: Some(strategy.frozen),
            solver: record.solver.clone(),
            twtt: Some(report.twtt),
            reopt: Some(report.reopt_count as f64),
            outsourced: Some(report.outsourced as f64),
            evaluations: Some(report.evaluations as f64),
            cpu_s: timing.then_some(report.solver_seconds),
            status: "ok".into(),
        }
    }

    pub fn fields(&self) -> Vec<String> {
        vec![
            TABLE_VERSION.into(),
            self.instance.clone(),
            cell(self.seed),
            self.beta_task.to_string(),
            self.beta_time.map_or_else(|| "none".into(), |b| b.to_string()),
            self.frozen.clone(),
            cell(self.frozen_min),
            self.solver.clone(),
            cell(self.twtt),
            cell(self.reopt),
            cell(self.outsourced),
            cell(self.evaluations),
            cell(self.cpu_s),
            self.status.clone(),
        ]
    }
}

pub fn render_table(rows: &[TableRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record(r.fields()).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory write")).expect("csv output is utf-8")
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("records serialize");
    text.push('\n');
    text
}
