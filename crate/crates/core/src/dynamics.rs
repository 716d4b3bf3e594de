//! Rolling-horizon simulation of a working day.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alns::{run_alns, AlnsParams};
use crate::construct::construct_initial;
use crate::instgen::SuperInstance;
use crate::model::{CrewId, CrewState, Minutes, ModelError, Point, ReoptProblem, Task, TaskId, TravelModel, TIME_EPS};
use crate::schedule::evaluation_count;
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Ch,
    Alns,
}

/// When to replan and how much of the current plan to keep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    /// Replan once this many tasks have arrived since the last replan.
    pub beta_task: usize,
    /// Replan once this many minutes have passed since the last replan and
    /// at least one task is waiting. `None` disables the timer.
    pub beta_time: Option<Minutes>,
    /// Length of the frozen period.
    pub frozen: Minutes,
    pub solver: SolverKind,
}

impl Default for Strategy {
    fn default() -> Self {
        Self {
            beta_task: 5,
            beta_time: Some(60.0),
            frozen: 30.0,
            solver: SolverKind::Alns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimulationError {
    #[error("beta_task must be at least 1")]
    BetaTask,
    #[error("beta_time must be positive, got {0}")]
    BetaTime(f64),
    #[error("frozen period must be non-negative, got {0}")]
    Frozen(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl Strategy {
    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.beta_task == 0 {
            return Err(SimulationError::BetaTask);
        }
        if let Some(b) = self.beta_time {
            if !(b > 0.0) {
                return Err(SimulationError::BetaTime(b));
            }
        }
        if !(self.frozen >= 0.0 && self.frozen.is_finite()) {
            return Err(SimulationError::Frozen(self.frozen));
        }
        Ok(())
    }
}

/// Whether a replan is due given the arrivals and time since the last one.
pub fn trigger_fires(new_since_last: usize, elapsed_since_last: Minutes, strategy: &Strategy) -> bool {
    new_since_last >= strategy.beta_task
        || (new_since_last >= 1 && strategy.beta_time.is_some_and(|b| elapsed_since_last >= b))
}

/// A task as placed in a committed plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub task: TaskId,
    pub location: Point,
    pub start: Minutes,
    pub completion: Minutes,
}

/// The plan in force between two replans, in day-level ids. `routes[k]`
/// belongs to `crews[k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommittedPlan {
    pub crews: Vec<CrewId>,
    pub routes: Vec<Vec<Visit>>,
    pub outsourced: Vec<TaskId>,
}

impl CommittedPlan {
    pub fn from_solution(problem: &ReoptProblem, solution: &Solution) -> Self {
        let routes = solution
            .routes
            .iter()
            .map(|route| {
                route
                    .iter()
                    .map(|&i| Visit {
                        task: problem.tasks[i].id,
                        location: problem.tasks[i].location,
                        start: solution.schedule.start[i].expect("routed tasks are scheduled"),
                        completion: solution.schedule.completion[i].expect("routed tasks are scheduled"),
                    })
                    .collect()
            })
            .collect();
        let mut outsourced: Vec<TaskId> = solution.outsourced.iter().map(|&i| problem.tasks[i].id).collect();
        outsourced.sort_unstable();
        Self {
            crews: problem.crews.iter().map(|c| c.id).collect(),
            routes,
            outsourced,
        }
    }

    /// Each in-house task once, with the crews serving it.
    pub fn in_house(&self) -> Vec<(Visit, Vec<CrewId>)> {
        let mut out: Vec<(Visit, Vec<CrewId>)> = Vec::new();
        for (k, route) in self.routes.iter().enumerate() {
            for v in route {
                match out.iter_mut().find(|(w, _)| w.task == v.task) {
                    Some((_, crews)) => crews.push(self.crews[k]),
                    None => out.push((v.clone(), vec![self.crews[k]])),
                }
            }
        }
        out.sort_by_key(|(v, _)| v.task);
        out
    }
}

/// How the previous plan splits at a replan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrozenPartition {
    /// Started before the replan time.
    pub executed: Vec<TaskId>,
    /// Starting inside the frozen period; kept as planned.
    pub frozen: Vec<TaskId>,
    /// Starting after the frozen period; replanned.
    pub carried: Vec<TaskId>,
    /// Previously outsourced and still serviceable; replanned.
    pub reoffered: Vec<TaskId>,
    /// Previously outsourced and no longer serviceable.
    pub expired: Vec<TaskId>,
    pub crew_states: Vec<CrewState>,
}

/// Where a crew that left `from` at `depart` heading for `to` is at `tau`,
/// moving along x first, then y.
pub fn position_at(from: Point, depart: Minutes, to: Point, tau: Minutes, travel: &TravelModel) -> Point {
    let total = travel.minutes(&from, &to);
    if tau <= depart || total <= 0.0 {
        return from;
    }
    if tau >= depart + total {
        return to;
    }
    let mut left = from.rectilinear(&to) * (tau - depart) / total;
    let dx = (to.x - from.x).abs().min(left);
    left -= dx;
    let dy = (to.y - from.y).abs().min(left);
    Point::new(from.x + dx.copysign(to.x - from.x), from.y + dy.copysign(to.y - from.y))
}

/// Splits `plan` at replan time `tau` with frozen length `f`.
///
/// A crew resumes from its last task starting no later than `tau + f`, ready
/// when that task completes. If that happened before `tau`, or the crew has
/// no such task, it is ready at `tau` wherever the plan had it by then: on
/// its way from its last position to its next planned task or the depot.
pub fn partition_frozen(
    plan: &CommittedPlan,
    previous: &[CrewState],
    tasks: &[Task],
    tau: Minutes,
    f: Minutes,
    depot: Point,
    travel: &TravelModel,
) -> FrozenPartition {
    let cutoff = tau + f + TIME_EPS;
    let mut part = FrozenPartition {
        executed: Vec::new(),
        frozen: Vec::new(),
        carried: Vec::new(),
        reoffered: Vec::new(),
        expired: Vec::new(),
        crew_states: Vec::with_capacity(plan.crews.len()),
    };
    for (v, _) in plan.in_house() {
        if v.start < tau - TIME_EPS {
            part.executed.push(v.task);
        } else if v.start <= cutoff {
            part.frozen.push(v.task);
        } else {
            part.carried.push(v.task);
        }
    }
    for &id in &plan.outsourced {
        let latest = tasks.iter().find(|t| t.id == id).map_or(f64::NEG_INFINITY, |t| t.latest);
        if latest + TIME_EPS >= tau + f {
            part.reoffered.push(id);
        } else {
            part.expired.push(id);
        }
    }
    for (k, &crew) in plan.crews.iter().enumerate() {
        let prev = previous
            .iter()
            .find(|s| s.crew == crew)
            .expect("every crew has a previous state");
        let route = &plan.routes[k];
        let kept = route.iter().rposition(|v| v.start <= cutoff);
        let (location, anchor, depart) = match kept {
            Some(j) => (route[j].location, Some(route[j].task), route[j].completion),
            None => (prev.location, prev.anchor, prev.ready_time),
        };
        let next = route.get(kept.map_or(0, |j| j + 1)).map_or(depot, |v| v.location);
        part.crew_states.push(CrewState {
            crew,
            location: position_at(location, depart, next, tau, travel),
            anchor,
            ready_time: depart.max(tau),
        });
    }
    part
}

/// One task's final outcome for the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalTask {
    pub task: TaskId,
    pub crews: Vec<CrewId>,
    pub start: Option<Minutes>,
    pub completion: Minutes,
    pub outsourced: bool,
    /// Epoch at which the outcome became fixed; `None` for the close of day.
    pub epoch: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub index: usize,
    pub tau: Minutes,
    pub frozen: Vec<TaskId>,
    /// Tasks handed to the solver.
    pub free: Vec<TaskId>,
    pub new: Vec<TaskId>,
    pub crew_states: Vec<CrewState>,
    pub plan: CommittedPlan,
    /// Objective of the epoch's subproblem after construction.
    pub ch_twtt: f64,
    /// Objective of the committed plan.
    pub twtt: f64,
    /// Weighted throughput of the tasks whose outcome became fixed here.
    pub finalized_twtt: f64,
    pub evaluations: u64,
    pub solver_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayReport {
    pub twtt: f64,
    pub epochs: Vec<EpochRecord>,
    /// Tasks fixed when the day closes, with their weighted throughput.
    pub closing_twtt: f64,
    pub outsourced: usize,
    pub reopt_count: usize,
    pub evaluations: u64,
    pub solver_seconds: f64,
    /// Every task of the day, by id.
    pub tasks: Vec<FinalTask>,
}

/// Earliest time the next replan fires after `last`, given the pending
/// arrival times in non-decreasing order.
fn next_trigger(pending: &[Minutes], last: Minutes, strategy: &Strategy) -> Option<Minutes> {
    let first = *pending.first()?;
    let by_count = pending.get(strategy.beta_task - 1).copied();
    let by_time = strategy.beta_time.map(|b| (last + b).max(first));
    match (by_count, by_time) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    }
}

fn solve(problem: &ReoptProblem, strategy: &Strategy, params: &AlnsParams, epoch: usize) -> (Solution, f64) {
    let initial = construct_initial(problem);
    let ch = initial.twtt;
    match strategy.solver {
        SolverKind::Ch => (initial, ch),
        SolverKind::Alns => {
            let params = AlnsParams {
                seed: params.seed.wrapping_add(epoch as u64),
                ..params.clone()
            };
            (run_alns(problem, initial, &params).best, ch)
        }
    }
}

fn throughput(task: &Task, completion: Minutes) -> f64 {
    task.priority * (completion - task.arrival)
}

/// Runs the day: a static solve at time zero, then a replan whenever the
/// strategy's trigger fires.
pub fn simulate_day(inst: &SuperInstance, strategy: &Strategy, params: &AlnsParams) -> Result<DayReport, SimulationError> {
    strategy.validate()?;
    inst.validate()?;
    let horizon = inst.horizon;
    let lookup = |id: TaskId| inst.task(id).expect("plan ids come from the instance");

    let mut dynamic: Vec<&Task> = inst.tasks.iter().filter(|t| t.arrival > 0.0).collect();
    dynamic.sort_by(|a, b| a.arrival.total_cmp(&b.arrival).then(a.id.cmp(&b.id)));
    let mut next_arrival = 0usize;

    let mut finals: Vec<FinalTask> = Vec::with_capacity(inst.tasks.len());
    let mut epochs: Vec<EpochRecord> = Vec::new();
    let mut states = inst.initial_states();
    let mut plan: Option<CommittedPlan> = None;
    let mut tau = 0.0;

    loop {
        let index = epochs.len();
        let mut free: Vec<Task> = Vec::new();
        let mut frozen = Vec::new();
        let mut finalized_twtt = 0.0;
        let mut new_ids = Vec::new();

        if let Some(prev) = &plan {
            let part = partition_frozen(prev, &states, &inst.tasks, tau, strategy.frozen, inst.depot, &inst.travel);
            for (v, crews) in prev.in_house() {
                if part.executed.contains(&v.task) || part.frozen.contains(&v.task) {
                    finalized_twtt += throughput(lookup(v.task), v.completion);
                    finals.push(FinalTask {
                        task: v.task,
                        crews,
                        start: Some(v.start),
                        completion: v.completion,
                        outsourced: false,
                        epoch: Some(index),
                    });
                }
            }
            for &id in &part.expired {
                finalized_twtt += throughput(lookup(id), horizon);
                finals.push(FinalTask {
                    task: id,
                    crews: Vec::new(),
                    start: None,
                    completion: horizon,
                    outsourced: true,
                    epoch: Some(index),
                });
            }
            free.extend(part.carried.iter().chain(&part.reoffered).map(|&id| lookup(id).clone()));
            frozen = part.frozen;
            states = part.crew_states;
            while next_arrival < dynamic.len() && dynamic[next_arrival].arrival <= tau {
                free.push(dynamic[next_arrival].clone());
                new_ids.push(dynamic[next_arrival].id);
                next_arrival += 1;
            }
            // free work may not start inside the frozen period
            for t in &mut free {
                t.earliest = t.earliest.max(tau + strategy.frozen);
            }
        } else {
            free = inst.static_tasks();
            new_ids = free.iter().map(|t| t.id).collect();
        }
        free.sort_by_key(|t| t.id);

        let problem = ReoptProblem::new(
            tau,
            horizon,
            free,
            inst.crews.clone(),
            states.clone(),
            inst.depot,
            inst.travel,
        )?;
        let evaluations_before = evaluation_count();
        let clock = Instant::now();
        let (solution, ch_twtt) = solve(&problem, strategy, params, index);
        let solver_seconds = clock.elapsed().as_secs_f64();
        let committed = CommittedPlan::from_solution(&problem, &solution);

        epochs.push(EpochRecord {
            index,
            tau,
            frozen,
            free: problem.tasks.iter().map(|t| t.id).collect(),
            new: new_ids,
            crew_states: states.clone(),
            plan: committed.clone(),
            ch_twtt,
            twtt: solution.twtt,
            finalized_twtt,
            evaluations: evaluation_count() - evaluations_before,
            solver_seconds,
        });
        plan = Some(committed);

        let pending: Vec<Minutes> = dynamic[next_arrival..].iter().map(|t| t.arrival).collect();
        match next_trigger(&pending, tau, strategy) {
            Some(t) if t <= horizon => tau = t,
            _ => break,
        }
    }

    let mut closing_twtt = 0.0;
    let last = plan.expect("the static solve always runs");
    for (v, crews) in last.in_house() {
        closing_twtt += throughput(lookup(v.task), v.completion);
        finals.push(FinalTask {
            task: v.task,
            crews,
            start: Some(v.start),
            completion: v.completion,
            outsourced: false,
            epoch: None,
        });
    }
    // outsourced by the last plan, or arrived after the last replan
    let unplanned = dynamic[next_arrival..].iter().map(|t| t.id);
    for id in last.outsourced.iter().copied().chain(unplanned) {
        closing_twtt += throughput(lookup(id), horizon);
        finals.push(FinalTask {
            task: id,
            crews: Vec::new(),
            start: None,
            completion: horizon,
            outsourced: true,
            epoch: None,
        });
    }
    finals.sort_by_key(|f| f.task);

    let twtt = finals.iter().map(|f| throughput(lookup(f.task), f.completion)).sum();
    Ok(DayReport {
        twtt,
        closing_twtt,
        outsourced: finals.iter().filter(|f| f.outsourced).count(),
        reopt_count: epochs.len() - 1,
        evaluations: epochs.iter().map(|e| e.evaluations).sum(),
        solver_seconds: epochs.iter().map(|e| e.solver_seconds).sum(),
        epochs,
        tasks: finals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strategy(beta_task: usize, beta_time: Option<f64>) -> Strategy {
        Strategy {
            beta_task,
            beta_time,
            frozen: 0.0,
            solver: SolverKind::Ch,
        }
    }

    #[test]
    fn trigger_rules() {
        let s = strategy(5, Some(60.0));
        assert!(trigger_fires(5, 1.0, &s));
        assert!(!trigger_fires(4, 59.0, &s));
        assert!(trigger_fires(1, 60.0, &s));
        assert!(!trigger_fires(0, 600.0, &s));
        assert!(trigger_fires(1, 0.0, &strategy(1, None)));
        assert!(!trigger_fires(3, 1e9, &strategy(5, None)));
    }

    #[test]
    fn next_trigger_times() {
        let s = strategy(3, Some(60.0));
        assert_eq!(next_trigger(&[], 0.0, &s), None);
        assert_eq!(next_trigger(&[10.0, 20.0, 30.0], 0.0, &s), Some(30.0));
        assert_eq!(next_trigger(&[10.0, 70.0, 80.0], 0.0, &s), Some(60.0));
        // timer already expired: the first arrival fires at once
        assert_eq!(next_trigger(&[100.0, 170.0], 0.0, &s), Some(100.0));
        assert_eq!(next_trigger(&[100.0, 170.0], 0.0, &strategy(3, None)), None);
    }

    #[test]
    fn strategy_validation() {
        assert!(Strategy::default().validate().is_ok());
        assert_eq!(strategy(0, None).validate(), Err(SimulationError::BetaTask));
        assert!(strategy(1, Some(0.0)).validate().is_err());
    }

    #[test]
    fn position_along_the_way() {
        let fast = TravelModel { speed_kmh: 60.0 };
        let (a, b) = (Point::new(0.0, 0.0), Point::new(3.0, -4.0));
        assert_eq!(position_at(a, 10.0, b, 5.0, &fast), a);
        assert_eq!(position_at(a, 10.0, b, 12.0, &fast), Point::new(2.0, 0.0));
        assert_eq!(position_at(a, 10.0, b, 15.0, &fast), Point::new(3.0, -2.0));
        assert_eq!(position_at(a, 10.0, b, 30.0, &fast), b);
    }
}
