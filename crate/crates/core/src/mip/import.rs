//! Reading solver output back into routes.

use std::collections::HashMap;

use super::{build_model, c_name, d_name, o_name, x_name, MipDocument, MipError, Node};
use crate::model::ReoptProblem;
use crate::solution::Solution;

/// Tolerance for comparing solver times and objectives with re-evaluation.
pub const IMPORT_TOL: f64 = 1e-4;

/// Variable values keyed by long name, and the objective if the file had one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverValues {
    pub values: HashMap<String, f64>,
    pub objective: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ImportReport {
    pub solution: Solution,
    /// Solver times that disagree with the re-evaluated schedule.
    pub mismatches: Vec<String>,
}

fn attr<'a>(tag: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("{key}=\"");
    let start = tag.find(&pat)? + pat.len();
    let len = tag[start..].find('"')?;
    Some(&tag[start..start + len])
}

fn parse_xml(text: &str) -> Result<SolverValues, MipError> {
    let mut out = SolverValues::default();
    for (n, line) in text.lines().enumerate() {
        let bad = |message: String| MipError::Parse { line: n + 1, message };
        if let Some(v) = attr(line, "objectiveValue") {
            out.objective = Some(v.parse().map_err(|_| bad(format!("bad objective {v:?}")))?);
        }
        let mut rest = line;
        while let Some(at) = rest.find("<variable") {
            let tag_end = rest[at..].find('>').map_or(rest.len(), |e| at + e);
            let tag = &rest[at..tag_end];
            if let (Some(name), Some(value)) = (attr(tag, "name"), attr(tag, "value")) {
                let v = value.parse().map_err(|_| bad(format!("bad value {value:?} for {name}")))?;
                out.values.insert(name.to_string(), v);
            }
            rest = &rest[tag_end..];
        }
    }
    Ok(out)
}

/// Parses solver output: `name value` lines (with optional leading index
/// column), `#` comments with an objective value, or XML `<variable>`
/// elements with `name` and `value` attributes. Stops at a dual section.
pub fn parse_values(text: &str) -> Result<SolverValues, MipError> {
    if text.trim_start().starts_with('<') {
        return parse_xml(text);
    }
    let mut out = SolverValues::default();
    for raw in text.lines() {
        let line = raw.trim();
        let lower = line.to_ascii_lowercase();
        if lower.contains("dual") {
            break;
        }
        if lower.contains("objective") {
            if let Some(v) = line.split_whitespace().rev().find_map(|t| t.parse::<f64>().ok()) {
                out.objective = Some(v);
            }
            continue;
        }
        if line.is_empty() || line.starts_with('#') || line.starts_with('*') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let pair = match tokens.as_slice() {
            [name, value] => Some((*name, *value)),
            [idx, name, value, ..] if idx.parse::<usize>().is_ok() => Some((*name, *value)),
            [flag, _idx, name, value, ..] if flag.starts_with("**") => Some((*name, *value)),
            _ => None,
        };
        let Some((name, value)) = pair else { continue };
        if let Ok(v) = value.parse::<f64>() {
            out.values.insert(name.to_string(), v);
        }
    }
    Ok(out)
}

/// Rebuilds the solution from solver values, re-evaluates it and compares
/// the solver's times and objective with the re-evaluated ones.
pub fn import_solution(problem: &ReoptProblem, text: &str) -> Result<ImportReport, MipError> {
    let doc = build_model(problem)?;
    let parsed = parse_values(text)?;
    let mut values = vec![None; doc.variables.len()];
    for (name, &v) in &parsed.values {
        if let Some(i) = doc.resolve(name) {
            values[i] = Some(v);
        }
    }
    let value = |name: &str| -> Result<f64, MipError> {
        let i = doc.variable(name).ok_or_else(|| MipError::Missing(name.to_string()))?;
        // solvers commonly omit zero-valued columns
        Ok(values[i].unwrap_or(0.0))
    };
    let on = |name: &str| -> Result<bool, MipError> { Ok(value(name)? > 0.5) };

    let n = problem.task_count();
    let mut outsourced = Vec::new();
    for i in 0..n {
        if on(&o_name(problem, i))? {
            outsourced.push(i);
        }
    }
    let mut routes = Vec::with_capacity(problem.crew_count());
    for k in 0..problem.crew_count() {
        let crew = problem.crews[k].id.0;
        let mut route = Vec::new();
        let mut at = Node::Start;
        let mut used = 0usize;
        loop {
            let mut next = None;
            for j in (0..n).map(Node::Task).chain([Node::Depot]) {
                if j != at && on(&x_name(problem, at, j, k))? {
                    if next.is_some() {
                        return Err(MipError::Disconnected { crew });
                    }
                    next = Some(j);
                }
            }
            used += 1;
            match next {
                Some(Node::Depot) => break,
                Some(Node::Task(t)) if !route.contains(&t) => {
                    route.push(t);
                    at = Node::Task(t);
                }
                _ => return Err(MipError::Disconnected { crew }),
            }
        }
        // arcs outside the path form a detached cycle
        let mut active = 0usize;
        for i in std::iter::once(Node::Start).chain((0..n).map(Node::Task)) {
            for j in (0..n).map(Node::Task).chain([Node::Depot]) {
                if i != j && on(&x_name(problem, i, j, k))? {
                    active += 1;
                }
            }
        }
        if active != used {
            return Err(MipError::Disconnected { crew });
        }
        routes.push(route);
    }

    let solution = Solution::evaluate(problem, routes, outsourced)?;
    let mut mismatches = Vec::new();
    for i in 0..n {
        let expected = solution.completion(problem, i).expect("every task is routed or outsourced");
        let got = value(&c_name(problem, i))?;
        if (got - expected).abs() > IMPORT_TOL {
            mismatches.push(format!("{} = {got}, re-evaluated {expected}", c_name(problem, i)));
        }
        for k in solution.crews_of(i) {
            let name = d_name(problem, Node::Task(i), k);
            let got = value(&name)?;
            if (got - expected).abs() > IMPORT_TOL {
                mismatches.push(format!("{name} = {got}, re-evaluated {expected}"));
            }
        }
    }
    if let Some(reported) = parsed.objective {
        let recomputed = solution.twtt;
        let with_offset = reported + doc.offset;
        let tol = IMPORT_TOL * recomputed.abs().max(1.0);
        // some solvers report the objective with the constant, most without
        if (with_offset - recomputed).abs() > tol && (reported - recomputed).abs() > tol {
            return Err(MipError::Objective { reported, recomputed });
        }
    }
    Ok(ImportReport { solution, mismatches })
}

/// Writes a solution as `name value` lines for every model variable, in the
/// form [`import_solution`] reads back.
pub fn solution_values(problem: &ReoptProblem, solution: &Solution) -> Result<String, MipError> {
    let doc: MipDocument = build_model(problem)?;
    let mut vals = vec![0.0; doc.variables.len()];
    let mut set = |name: String, v: f64| vals[doc.variable(&name).expect("model variable")] = v;
    for k in 0..problem.crew_count() {
        set(format!("Y_phi_{}", problem.crews[k].id.0), 1.0);
        set(d_name(problem, Node::Start, k), problem.crew_states[k].ready_time);
        let mut at = Node::Start;
        for &t in &solution.routes[k] {
            set(x_name(problem, at, Node::Task(t), k), 1.0);
            set(format!("Y_{}_{}", problem.tasks[t].id.0, problem.crews[k].id.0), 1.0);
            at = Node::Task(t);
        }
        set(x_name(problem, at, Node::Depot, k), 1.0);
        set(d_name(problem, Node::Depot, k), solution.schedule.return_time[k]);
    }
    for i in 0..problem.task_count() {
        let done = solution.completion(problem, i).expect("every task is routed or outsourced");
        set(c_name(problem, i), done);
        if solution.outsourced.contains(&i) {
            set(o_name(problem, i), 1.0);
        }
        for k in solution.crews_of(i) {
            set(d_name(problem, Node::Task(i), k), done);
        }
    }
    let objective: f64 = (0..problem.task_count())
        .map(|i| problem.tasks[i].priority * vals[doc.variable(&c_name(problem, i)).expect("model variable")])
        .sum();
    let mut out = format!("# Objective value = {objective}\n");
    for (v, x) in doc.variables.iter().zip(&vals) {
        out.push_str(&format!("{} {x}\n", v.name));
    }
    Ok(out)
}
