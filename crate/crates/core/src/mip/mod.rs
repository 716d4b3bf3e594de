//! The exact mixed-integer model of one subproblem, written as LP or MPS text
//! for an external solver, and the way back from a solver's answer.
//!
//! Node names: tasks by id, `phi` for a crew's start node, `0` for the depot.
//! Crews by id. Constraint families are numbered 2 to 14 and every row
//! carries its family number.

mod import;
mod lp;
mod mps;

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

pub use import::{import_solution, parse_values, solution_values, ImportReport, SolverValues, IMPORT_TOL};

use crate::model::{ReoptProblem, TaskId};
use crate::schedule::Infeasibility;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MipError {
    #[error("task id 0 is reserved for the depot node")]
    ZeroTaskId,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("crew {crew}: arcs do not form a path from its start node to the depot")]
    Disconnected { crew: u32 },
    #[error("solution has no value for {0}")]
    Missing(String),
    #[error("imported routes are infeasible: {0}")]
    Infeasible(#[from] Infeasibility),
    #[error("reported objective {reported} differs from re-evaluated {recomputed}")]
    Objective { reported: f64, recomputed: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    fn lp(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub family: u8,
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Variables, objective and rows of one model. All variables are
/// non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct MipDocument {
    pub variables: Vec<Variable>,
    pub objective: Vec<(usize, f64)>,
    /// Constant dropped from the objective: minus the weighted arrivals.
    pub offset: f64,
    pub rows: Vec<Row>,
    index: HashMap<String, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipFormat {
    Lp,
    Mps,
}

impl fmt::Display for MipFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MipFormat::Lp => "lp",
            MipFormat::Mps => "mps",
        })
    }
}

impl MipDocument {
    pub fn variable(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Eight-character column name used in MPS output.
    pub fn short_column(index: usize) -> String {
        format!("x{:07}", index + 1)
    }

    pub fn short_row(index: usize) -> String {
        format!("r{:07}", index + 1)
    }

    /// Resolves a long or short column name.
    pub fn resolve(&self, name: &str) -> Option<usize> {
        if let Some(i) = self.variable(name) {
            return Some(i);
        }
        let digits = name.strip_prefix('x')?;
        if digits.len() != 7 {
            return None;
        }
        let n: usize = digits.parse().ok()?;
        (1..=self.variables.len()).contains(&n).then(|| n - 1)
    }

    pub fn to_lp(&self) -> String {
        lp::write(self)
    }

    pub fn to_mps(&self) -> String {
        mps::write(self)
    }

    pub fn render(&self, format: MipFormat) -> String {
        match format {
            MipFormat::Lp => self.to_lp(),
            MipFormat::Mps => self.to_mps(),
        }
    }
}

#[derive(Default)]
struct Builder {
    variables: Vec<Variable>,
    index: HashMap<String, usize>,
    rows: Vec<Row>,
}

impl Builder {
    fn var(&mut self, name: String, kind: VarKind, upper: Option<f64>) -> usize {
        let i = self.variables.len();
        let prev = self.index.insert(name.clone(), i);
        debug_assert!(prev.is_none(), "duplicate variable {name}");
        self.variables.push(Variable { name, kind, upper });
        i
    }

    fn get(&self, name: &str) -> usize {
        self.index[name]
    }

    fn row(&mut self, name: String, family: u8, terms: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        let terms = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
        self.rows.push(Row {
            name,
            family,
            terms,
            sense,
            rhs,
        });
    }
}

pub(crate) fn node_name(problem: &ReoptProblem, node: Node) -> String {
    match node {
        Node::Start => "phi".into(),
        Node::Depot => "0".into(),
        Node::Task(i) => problem.tasks[i].id.0.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Node {
    Start,
    Task(usize),
    Depot,
}

pub(crate) fn x_name(problem: &ReoptProblem, from: Node, to: Node, k: usize) -> String {
    format!("X_{}_{}_{}", node_name(problem, from), node_name(problem, to), problem.crews[k].id.0)
}

pub(crate) fn d_name(problem: &ReoptProblem, node: Node, k: usize) -> String {
    format!("D_{}_{}", node_name(problem, node), problem.crews[k].id.0)
}

pub(crate) fn c_name(problem: &ReoptProblem, i: usize) -> String {
    format!("C_{}", problem.tasks[i].id.0)
}

pub(crate) fn o_name(problem: &ReoptProblem, i: usize) -> String {
    format!("O_{}", problem.tasks[i].id.0)
}

/// Builds the model. Big-M is the horizon end throughout.
pub fn build_model(problem: &ReoptProblem) -> Result<MipDocument, MipError> {
    if problem.tasks.iter().any(|t| t.id == TaskId(0)) {
        return Err(MipError::ZeroTaskId);
    }
    let n = problem.task_count();
    let kk = problem.crew_count();
    let m = problem.horizon_end;
    let tasks: Vec<Node> = (0..n).map(Node::Task).collect();
    let sources: Vec<Node> = std::iter::once(Node::Start).chain(tasks.iter().copied()).collect();
    let targets: Vec<Node> = tasks.iter().copied().chain(std::iter::once(Node::Depot)).collect();
    let mut b = Builder::default();

    for k in 0..kk {
        for &i in &sources {
            for &j in &targets {
                if i != j {
                    b.var(x_name(problem, i, j, k), VarKind::Binary, None);
                }
            }
        }
        for &i in &sources {
            let y = format!("Y_{}_{}", node_name(problem, i), problem.crews[k].id.0);
            b.var(y, VarKind::Binary, None);
        }
        for &i in &sources {
            b.var(d_name(problem, i, k), VarKind::Continuous, None);
        }
        b.var(d_name(problem, Node::Depot, k), VarKind::Continuous, Some(m));
    }
    for i in 0..n {
        b.var(o_name(problem, i), VarKind::Binary, None);
    }
    for i in 0..n {
        b.var(c_name(problem, i), VarKind::Continuous, None);
    }

    let y = |b: &Builder, node: Node, k: usize| b.get(&format!("Y_{}_{}", node_name(problem, node), problem.crews[k].id.0));
    let x = |b: &Builder, i: Node, j: Node, k: usize| b.get(&x_name(problem, i, j, k));
    let d = |b: &Builder, node: Node, k: usize| b.get(&d_name(problem, node, k));
    let o = |b: &Builder, i: usize| b.get(&o_name(problem, i));
    let c = |b: &Builder, i: usize| b.get(&c_name(problem, i));
    let tid = |i: usize| problem.tasks[i].id.0;
    let cid = |k: usize| problem.crews[k].id.0;
    let kf = kk as f64;

    for i in 0..n {
        let mut terms = vec![(o(&b, i), 1.0)];
        terms.extend((0..kk).map(|k| (y(&b, Node::Task(i), k), 1.0)));
        b.row(format!("assign_{}", tid(i)), 2, terms, Sense::Ge, 1.0);
    }
    for i in 0..n {
        let mut terms: Vec<(usize, f64)> = (0..kk).map(|k| (y(&b, Node::Task(i), k), 1.0)).collect();
        terms.push((o(&b, i), kf));
        b.row(format!("exclusive_{}", tid(i)), 3, terms, Sense::Le, kf);
    }
    for k in 0..kk {
        let terms = vec![(y(&b, Node::Start, k), 1.0)];
        b.row(format!("start_{}", cid(k)), 4, terms, Sense::Eq, 1.0);
    }
    for k in 0..kk {
        let terms = vec![(d(&b, Node::Start, k), 1.0)];
        b.row(format!("ready_{}", cid(k)), 5, terms, Sense::Eq, problem.crew_states[k].ready_time);
    }
    for k in 0..kk {
        let terms = sources.iter().map(|&i| (x(&b, i, Node::Depot, k), 1.0)).collect();
        b.row(format!("return_{}", cid(k)), 6, terms, Sense::Eq, 1.0);
    }
    for k in 0..kk {
        for &i in &sources {
            let mut terms: Vec<(usize, f64)> = targets.iter().filter(|&&j| j != i).map(|&j| (x(&b, i, j, k), 1.0)).collect();
            terms.push((y(&b, i, k), -1.0));
            b.row(format!("link_{}_{}", node_name(problem, i), cid(k)), 7, terms, Sense::Eq, 0.0);
        }
    }
    for k in 0..kk {
        for &i in &tasks {
            let mut terms: Vec<(usize, f64)> = sources.iter().filter(|&&j| j != i).map(|&j| (x(&b, j, i, k), 1.0)).collect();
            terms.extend(targets.iter().filter(|&&j| j != i).map(|&j| (x(&b, i, j, k), -1.0)));
            b.row(format!("flow_{}_{}", node_name(problem, i), cid(k)), 8, terms, Sense::Eq, 0.0);
        }
    }
    for i in 0..n {
        let task = &problem.tasks[i];
        for q in 0..problem.skill_count() {
            let mut terms: Vec<(usize, f64)> = (0..kk)
                .filter(|&k| problem.crews[k].skills.has(q))
                .map(|k| (y(&b, Node::Task(i), k), 1.0))
                .collect();
            terms.push((o(&b, i), 1.0));
            let need = if task.skills.has(q) { 1.0 } else { 0.0 };
            b.row(format!("skill_{}_{}", tid(i), q + 1), 9, terms, Sense::Ge, need);
        }
    }
    for k in 0..kk {
        for &i in &sources {
            for &j in &targets {
                if i == j {
                    continue;
                }
                let from = match i {
                    Node::Start => problem.start_node(k),
                    Node::Task(t) => t,
                    Node::Depot => unreachable!(),
                };
                let (to, p) = match j {
                    Node::Task(t) => (t, problem.tasks[t].process),
                    Node::Depot => (problem.depot_node(), 0.0),
                    Node::Start => unreachable!(),
                };
                let travel = problem.travel_time(from, to);
                let terms = vec![(d(&b, i, k), 1.0), (d(&b, j, k), -1.0), (x(&b, i, j, k), m)];
                let name = format!("time_{}_{}_{}", node_name(problem, i), node_name(problem, j), cid(k));
                b.row(name, 10, terms, Sense::Le, m - travel - p);
            }
        }
    }
    for i in 0..n {
        for k in 0..kk {
            let terms = vec![
                (d(&b, Node::Task(i), k), 1.0),
                (c(&b, i), -1.0),
                (y(&b, Node::Task(i), k), -m),
                (o(&b, i), m),
            ];
            b.row(format!("depart_lo_{}_{}", tid(i), cid(k)), 11, terms, Sense::Ge, -m);
        }
    }
    for i in 0..n {
        for k in 0..kk {
            let terms = vec![(d(&b, Node::Task(i), k), 1.0), (c(&b, i), -1.0)];
            b.row(format!("depart_hi_{}_{}", tid(i), cid(k)), 12, terms, Sense::Le, 0.0);
        }
    }
    for i in 0..n {
        let t = &problem.tasks[i];
        let terms = vec![(c(&b, i), 1.0), (o(&b, i), -(m - t.latest - t.process))];
        b.row(format!("window_hi_{}", tid(i)), 13, terms, Sense::Le, t.latest + t.process);
    }
    for i in 0..n {
        let t = &problem.tasks[i];
        let terms = vec![(c(&b, i), 1.0), (o(&b, i), -(m - t.earliest - t.process))];
        b.row(format!("window_lo_{}", tid(i)), 14, terms, Sense::Ge, t.earliest + t.process);
    }

    let objective = (0..n).map(|i| (c(&b, i), problem.tasks[i].priority)).collect();
    let offset = -problem.tasks.iter().map(|t| t.priority * t.arrival).sum::<f64>();
    Ok(MipDocument {
        variables: b.variables,
        objective,
        offset,
        rows: b.rows,
        index: b.index,
    })
}

pub fn export_model(problem: &ReoptProblem, format: MipFormat) -> Result<String, MipError> {
    Ok(build_model(problem)?.render(format))
}

/// Shortest round-trip decimal form.
pub(crate) fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v}")
    }
}
