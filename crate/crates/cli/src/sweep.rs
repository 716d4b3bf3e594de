//! Strategy grids over many days, run in parallel.

use std::fmt;
use std::str::FromStr;

use dwsrp::alns::AlnsParams;
use dwsrp::dynamics::{simulate_day, SolverKind, Strategy};
use dwsrp::instgen::SuperInstance;
use rayon::prelude::*;

use crate::report::{StrategyRecord, TableRow};
use crate::CliError;

/// Frozen-period length: fixed minutes, or derived from the instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FrozenSpec {
    Minutes(f64),
    /// `max(t_max, p_max)`.
    MaxTp,
    /// `t_max + p_max`.
    SumTp,
}

impl FrozenSpec {
    pub fn resolve(self, inst: &SuperInstance) -> f64 {
        match self {
            FrozenSpec::Minutes(m) => m,
            FrozenSpec::MaxTp => inst.max_travel_time().max(inst.max_process_time()),
            FrozenSpec::SumTp => inst.max_travel_time() + inst.max_process_time(),
        }
    }
}

impl FromStr for FrozenSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maxtp" => Ok(FrozenSpec::MaxTp),
            "sumtp" => Ok(FrozenSpec::SumTp),
            _ => match s.parse::<f64>() {
                Ok(m) if m.is_finite() && m >= 0.0 => Ok(FrozenSpec::Minutes(m)),
                _ => Err(format!("frozen length must be 0, maxtp, sumtp or non-negative minutes, got {s:?}")),
            },
        }
    }
}

impl fmt::Display for FrozenSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrozenSpec::Minutes(m) => write!(f, "{m}"),
            FrozenSpec::MaxTp => f.write_str("maxtp"),
            FrozenSpec::SumTp => f.write_str("sumtp"),
        }
    }
}

/// Timer trigger in minutes, or `none` to disable it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaTime(pub Option<f64>);

impl FromStr for BetaTime {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_beta_time(s).map(BetaTime)
    }
}

pub fn parse_beta_time(s: &str) -> Result<Option<f64>, String> {
    if s == "none" {
        return Ok(None);
    }
    match s.parse::<f64>() {
        Ok(b) if b.is_finite() && b > 0.0 => Ok(Some(b)),
        _ => Err(format!("beta-time must be positive minutes or none, got {s:?}")),
    }
}

pub fn solver_label(kind: SolverKind) -> &'static str {
    match kind {
        SolverKind::Ch => "ch",
        SolverKind::Alns => "alns",
    }
}

/// One strategy before its frozen length is resolved against an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySpec {
    pub beta_task: usize,
    pub beta_time: Option<f64>,
    pub frozen: FrozenSpec,
    pub solver: SolverKind,
}

impl StrategySpec {
    pub fn resolve(&self, inst: &SuperInstance) -> (Strategy, StrategyRecord) {
        let strategy = Strategy {
            beta_task: self.beta_task,
            beta_time: self.beta_time,
            frozen: self.frozen.resolve(inst),
            solver: self.solver,
        };
        let record = StrategyRecord {
            beta_task: self.beta_task,
            beta_time: self.beta_time,
            frozen: self.frozen.to_string(),
            frozen_min: strategy.frozen,
            solver: solver_label(self.solver).into(),
        };
        (strategy, record)
    }
}

pub struct SweepInput<'a> {
    pub instances: &'a [(String, SuperInstance)],
    pub strategies: &'a [StrategySpec],
    pub seeds: &'a [u64],
    pub params: &'a AlnsParams,
    pub timing: bool,
}

/// Worker threads, capped by `DWSRP_THREADS` when set.
pub fn thread_count() -> Result<usize, CliError> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var("DWSRP_THREADS") {
        Ok(v) => match v.parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n.min(available)),
            _ => Err(CliError::Usage(format!("DWSRP_THREADS must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(available),
    }
}

/// Runs every instance x strategy x seed cell. Rows come back in grid order,
/// followed by `Min`, `Max` and `Avg` rows per strategy. A failing cell is
/// recorded in its status column and the sweep carries on.
pub fn run_sweep(input: &SweepInput<'_>) -> Result<Vec<TableRow>, CliError> {
    let mut cells = Vec::new();
    for s in 0..input.strategies.len() {
        for i in 0..input.instances.len() {
            for &seed in input.seeds {
                cells.push((s, i, seed));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count()?)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let rows: Vec<TableRow> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(s, i, seed)| {
                let (name, inst) = &input.instances[i];
                let spec = &input.strategies[s];
                let (strategy, record) = spec.resolve(inst);
                let params = AlnsParams { seed, ..input.params.clone() };
                match simulate_day(inst, &strategy, &params) {
                    Ok(report) => TableRow::from_day(name, &strategy, &record, seed, &report, input.timing),
                    Err(e) => TableRow {
                        instance: name.clone(),
                        seed: Some(seed),
                        beta_task: spec.beta_task,
                        beta_time: spec.beta_time,
                        frozen: record.frozen,
                        frozen_min: Some(strategy.frozen),
                        solver: record.solver,
                        twtt: None,
                        reopt: None,
                        outsourced: None,
                        evaluations: None,
                        cpu_s: None,
                        status: format!("error: {e}"),
                    },
                }
            })
            .collect()
    });

    let mut out = Vec::with_capacity(rows.len() + 3 * input.strategies.len());
    let per_strategy = input.instances.len() * input.seeds.len();
    for (s, chunk) in rows.chunks(per_strategy.max(1)).enumerate() {
        out.extend_from_slice(chunk);
        out.extend(aggregate(&input.strategies[s], chunk));
    }
    Ok(out)
}

/// `Min`, `Max` and `Avg` over the successful rows, in row order.
pub fn aggregate(spec: &StrategySpec, rows: &[TableRow]) -> Vec<TableRow> {
    let ok: Vec<&TableRow> = rows.iter().filter(|r| r.status == "ok").collect();
    let column = |f: fn(&TableRow) -> Option<f64>| -> Vec<f64> { ok.iter().filter_map(|r| f(r)).collect() };
    let columns = [
        column(|r| r.twtt),
        column(|r| r.reopt),
        column(|r| r.outsourced),
        column(|r| r.evaluations),
        column(|r| r.cpu_s),
    ];
    let stat = |label: &str, reduce: &dyn Fn(&[f64]) -> f64| {
        let v: Vec<Option<f64>> = columns.iter().map(|c| (!c.is_empty()).then(|| reduce(c))).collect();
        TableRow {
            instance: label.into(),
            seed: None,
            beta_task: spec.beta_task,
            beta_time: spec.beta_time,
            frozen: spec.frozen.to_string(),
            frozen_min: None,
            solver: solver_label(spec.solver).into(),
            twtt: v[0],
            reopt: v[1],
            outsourced: v[2],
            evaluations: v[3],
            cpu_s: v[4],
            status: format!("n={}", ok.len()),
        }
    };
    vec![
        stat("Min", &|c| c.iter().copied().fold(f64::INFINITY, f64::min)),
        stat("Max", &|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
        stat("Avg", &|c| c.iter().sum::<f64>() / c.len() as f64),
    ]
}
