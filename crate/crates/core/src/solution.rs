//! Complete and partial solutions, and the constraint-by-constraint checker.

use serde::{Deserialize, Serialize};

use crate::model::{CrewId, Minutes, ReoptProblem, TaskId, TIME_EPS};
use crate::schedule::{evaluate_schedule, routed_cost, twtt, Infeasibility, Schedule};

/// Routes and outsourcing decisions that may leave some tasks unplaced.
/// `cost` covers only the routed and outsourced tasks.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialSolution {
    pub routes: Vec<Vec<usize>>,
    pub outsourced: Vec<usize>,
    pub cost: f64,
}

impl PartialSolution {
    pub fn empty(problem: &ReoptProblem) -> Self {
        Self {
            routes: vec![Vec::new(); problem.crew_count()],
            outsourced: Vec::new(),
            cost: 0.0,
        }
    }

    /// Re-evaluates the routes and recomputes `cost`.
    pub fn new(problem: &ReoptProblem, routes: Vec<Vec<usize>>, mut outsourced: Vec<usize>) -> Result<Self, Infeasibility> {
        outsourced.sort_unstable();
        let routed = routed_cost(problem, &routes)?;
        let cost = routed + outsourced.iter().map(|&i| problem.outsourcing_cost(i)).sum::<f64>();
        Ok(Self {
            routes,
            outsourced,
            cost,
        })
    }

    pub fn routed_cost(&self, problem: &ReoptProblem) -> f64 {
        self.cost - self.outsourced.iter().map(|&i| problem.outsourcing_cost(i)).sum::<f64>()
    }

    pub fn outsource(&mut self, problem: &ReoptProblem, task: usize) {
        if let Err(pos) = self.outsourced.binary_search(&task) {
            self.outsourced.insert(pos, task);
            self.cost += problem.outsourcing_cost(task);
        }
    }

    /// Indices of tasks currently in at least one route, ascending.
    pub fn in_house(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.routes.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Drops `task` from every route. Removing tasks never delays the
    /// remaining ones, so a feasible plan stays feasible.
    pub fn remove_task(&mut self, task: usize) {
        for r in &mut self.routes {
            r.retain(|&i| i != task);
        }
    }

    pub fn into_solution(self, problem: &ReoptProblem) -> Result<Solution, Infeasibility> {
        Solution::evaluate(problem, self.routes, self.outsourced)
    }
}

/// A fully evaluated plan for one `ReoptProblem`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    /// One route per crew, aligned with `ReoptProblem::crews`.
    pub routes: Vec<Vec<usize>>,
    /// Ascending task indices.
    pub outsourced: Vec<usize>,
    pub schedule: Schedule,
    pub twtt: f64,
}

impl Solution {
    pub fn evaluate(problem: &ReoptProblem, routes: Vec<Vec<usize>>, mut outsourced: Vec<usize>) -> Result<Self, Infeasibility> {
        outsourced.sort_unstable();
        let schedule = evaluate_schedule(problem, &routes)?;
        let twtt = twtt(problem, &schedule, &outsourced);
        Ok(Self {
            routes,
            outsourced,
            schedule,
            twtt,
        })
    }

    pub fn to_partial(&self) -> PartialSolution {
        PartialSolution {
            routes: self.routes.clone(),
            outsourced: self.outsourced.clone(),
            cost: self.twtt,
        }
    }

    pub fn in_house(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.routes.iter().flatten().copied().collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Crew indices whose routes contain `task`.
    pub fn crews_of(&self, task: usize) -> Vec<usize> {
        (0..self.routes.len()).filter(|&k| self.routes[k].contains(&task)).collect()
    }

    /// Completion time of every task: scheduled, or the horizon if outsourced.
    pub fn completion(&self, problem: &ReoptProblem, task: usize) -> Option<Minutes> {
        if self.outsourced.binary_search(&task).is_ok() {
            Some(problem.horizon_end)
        } else {
            self.schedule.completion.get(task).copied().flatten()
        }
    }
}

/// A broken constraint. `family()` names the model constraint family it mirrors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    /// Neither outsourced nor assigned to any crew.
    Unassigned { task: TaskId },
    /// Outsourced and assigned at the same time.
    OutsourcedAndAssigned { task: TaskId },
    /// Route entry that is not a task of the problem.
    UnknownTask { crew: CrewId, index: usize },
    /// Task listed twice in one route.
    RepeatedTask { crew: CrewId, task: TaskId },
    /// Assigned crews do not jointly hold the required skills.
    SkillsNotCovered { task: TaskId },
    /// A crew reaches a task before it could have got there.
    TravelTime {
        crew: CrewId,
        task: TaskId,
        arrival: Minutes,
        earliest_possible: Minutes,
    },
    /// Start before the crew's arrival, or idle inconsistent with the start.
    StartBeforeArrival { crew: CrewId, task: TaskId },
    /// Crews see different start times for a synchronized task.
    SyncMismatch { task: TaskId },
    /// Completion differs from start plus processing time.
    Completion { task: TaskId },
    /// Start outside `[e, l]`.
    TimeWindow {
        task: TaskId,
        start: Minutes,
        earliest: Minutes,
        latest: Minutes,
    },
    /// Back at the depot after the horizon.
    DepotReturn { crew: CrewId, time: Minutes },
    /// Routes wait on each other in a cycle.
    Deadlock { cycle: Vec<TaskId> },
    /// Stored objective differs from the recomputed one.
    Objective { stored: f64, recomputed: f64 },
    /// Schedule shape does not match the routes.
    Shape,
}

impl Violation {
    /// Constraint family this violation corresponds to.
    pub fn family(&self) -> u8 {
        match self {
            Violation::Unassigned { .. } => 2,
            Violation::OutsourcedAndAssigned { .. } => 3,
            Violation::UnknownTask { .. } | Violation::RepeatedTask { .. } => 7,
            Violation::SkillsNotCovered { .. } => 9,
            Violation::TravelTime { .. } | Violation::Deadlock { .. } => 10,
            Violation::StartBeforeArrival { .. } | Violation::SyncMismatch { .. } => 11,
            Violation::Completion { .. } => 12,
            Violation::TimeWindow { .. } => 13,
            Violation::DepotReturn { .. } => 6,
            Violation::Objective { .. } | Violation::Shape => 1,
        }
    }
}

/// Checks every constraint against the routes and the *stored* schedule of
/// `solution`, returning one record per broken constraint.
pub fn check_feasibility(problem: &ReoptProblem, solution: &Solution) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = problem.task_count();
    let tau_max = problem.horizon_end;
    let s = &solution.schedule;

    if solution.routes.len() != problem.crew_count()
        || s.start.len() != n
        || s.completion.len() != n
        || s.crew_arrival.len() != solution.routes.len()
        || s.idle.len() != solution.routes.len()
        || s.return_time.len() != solution.routes.len()
        || solution
            .routes
            .iter()
            .enumerate()
            .any(|(k, r)| s.crew_arrival[k].len() != r.len() || s.idle[k].len() != r.len())
    {
        out.push(Violation::Shape);
        return out;
    }

    let mut crews_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, route) in solution.routes.iter().enumerate() {
        let crew = problem.crews[k].id;
        for &i in route {
            if i >= n {
                out.push(Violation::UnknownTask { crew, index: i });
            } else if crews_of[i].contains(&k) {
                out.push(Violation::RepeatedTask {
                    crew,
                    task: problem.tasks[i].id,
                });
            } else {
                crews_of[i].push(k);
            }
        }
    }
    let mut outsourced = vec![false; n];
    for &i in &solution.outsourced {
        if i < n {
            outsourced[i] = true;
        }
    }

    for (i, task) in problem.tasks.iter().enumerate() {
        let assigned = !crews_of[i].is_empty();
        if !assigned && !outsourced[i] {
            out.push(Violation::Unassigned { task: task.id });
        }
        if assigned && outsourced[i] {
            out.push(Violation::OutsourcedAndAssigned { task: task.id });
        }
        if !assigned {
            continue;
        }
        let pooled = crews_of[i].iter().fold(0u64, |m, &k| m | problem.crew_mask(k));
        if pooled & problem.task_mask(i) != problem.task_mask(i) {
            out.push(Violation::SkillsNotCovered { task: task.id });
        }
        let (Some(start), Some(done)) = (s.start[i], s.completion[i]) else {
            out.push(Violation::Shape);
            continue;
        };
        if (done - (start + task.process)).abs() > TIME_EPS {
            out.push(Violation::Completion { task: task.id });
        }
        if start + TIME_EPS < task.earliest || start > task.latest + TIME_EPS {
            out.push(Violation::TimeWindow {
                task: task.id,
                start,
                earliest: task.earliest,
                latest: task.latest,
            });
        }
    }

    // per-crew timing: arrival after travel, start = arrival + idle, and the
    // same start seen from every crew
    let mut seen_start: Vec<Option<Minutes>> = vec![None; n];
    let mut mismatched = vec![false; n];
    for (k, route) in solution.routes.iter().enumerate() {
        let crew = problem.crews[k].id;
        let (mut node, mut time) = (problem.start_node(k), problem.crew_states[k].ready_time);
        for (pos, &i) in route.iter().enumerate() {
            if i >= n {
                break;
            }
            let task_id = problem.tasks[i].id;
            let earliest_possible = time + problem.travel_time(node, i);
            let arrival = s.crew_arrival[k][pos];
            if arrival + TIME_EPS < earliest_possible {
                out.push(Violation::TravelTime {
                    crew,
                    task: task_id,
                    arrival,
                    earliest_possible,
                });
            }
            let idle = s.idle[k][pos];
            let own_start = arrival + idle;
            if idle < -TIME_EPS || s.start[i].is_some_and(|st| (st - own_start).abs() > TIME_EPS) {
                out.push(Violation::StartBeforeArrival { crew, task: task_id });
            }
            match seen_start[i] {
                Some(prev) if (prev - own_start).abs() > TIME_EPS && !mismatched[i] => {
                    mismatched[i] = true;
                    out.push(Violation::SyncMismatch { task: task_id });
                }
                None => seen_start[i] = Some(own_start),
                _ => {}
            }
            node = i;
            time = s.completion[i].unwrap_or(own_start + problem.tasks[i].process);
        }
        let back_possible = time + problem.travel_time(node, problem.depot_node());
        let back = s.return_time[k];
        if back + TIME_EPS < back_possible {
            out.push(Violation::TravelTime {
                crew,
                task: TaskId(0),
                arrival: back,
                earliest_possible: back_possible,
            });
        }
        if back > tau_max + TIME_EPS {
            out.push(Violation::DepotReturn { crew, time: back });
        }
    }

    if let Err(Infeasibility::Deadlock { cycle }) = evaluate_schedule(problem, &solution.routes) {
        out.push(Violation::Deadlock { cycle });
    }

    if out.is_empty() {
        let recomputed = twtt(problem, s, &solution.outsourced);
        if (recomputed - solution.twtt).abs() > 1e-6 * recomputed.abs().max(1.0) {
            out.push(Violation::Objective {
                stored: solution.twtt,
                recomputed,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::{crew, problem, task};
    use crate::model::Point;

    fn instance() -> ReoptProblem {
        let tasks = vec![
            task(1, 10.0, 0.0, 0.0, 100.0, 5.0, 1.0, &[1, 1, 0, 0, 1]),
            task(2, 20.0, 0.0, 0.0, 100.0, 5.0, 2.0, &[1, 0, 0, 0, 0]),
        ];
        let crews = vec![
            crew(1, &[1, 1, 1, 0, 1]),
            crew(2, &[1, 0, 0, 0, 0]),
            crew(3, &[0, 1, 0, 0, 1]),
        ];
        problem(tasks, crews, Point::new(0.0, 0.0), 540.0)
    }

    #[test]
    fn worked_assignment_is_feasible() {
        let p = instance();
        let sol = Solution::evaluate(&p, vec![vec![0], vec![1], vec![]], vec![]).unwrap();
        assert!(check_feasibility(&p, &sol).is_empty());
    }

    #[test]
    fn unassigned_task_cites_eq2() {
        let p = instance();
        let sol = Solution::evaluate(&p, vec![vec![0], vec![], vec![]], vec![]).unwrap();
        let v = check_feasibility(&p, &sol);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].family(), 2);
    }

    #[test]
    fn late_start_is_one_window_violation() {
        let p = instance();
        let mut sol = Solution::evaluate(&p, vec![vec![0], vec![1], vec![]], vec![]).unwrap();
        // push the last task of crew 2 to l + 1, keeping the rest consistent
        let shift = p.tasks[1].latest + 1.0 - sol.schedule.start[1].unwrap();
        sol.schedule.start[1] = sol.schedule.start[1].map(|t| t + shift);
        sol.schedule.completion[1] = sol.schedule.completion[1].map(|t| t + shift);
        sol.schedule.idle[1][0] += shift;
        sol.schedule.return_time[1] += shift;
        sol.twtt += p.tasks[1].priority * shift;
        let v = check_feasibility(&p, &sol);
        assert_eq!(v.len(), 1, "{v:?}");
        assert!(matches!(v[0], Violation::TimeWindow { .. }));
        assert_eq!(v[0].family(), 13);
    }

    #[test]
    fn sync_mismatch_and_double_booking() {
        let p = instance();
        let mut sol = Solution::evaluate(&p, vec![vec![], vec![0], vec![0]], vec![1]).unwrap();
        assert!(check_feasibility(&p, &sol).is_empty());
        sol.schedule.idle[1][0] += 3.0;
        let v = check_feasibility(&p, &sol);
        assert!(v.iter().any(|x| matches!(x, Violation::SyncMismatch { .. })));

        let sol = Solution::evaluate(&p, vec![vec![0, 1], vec![], vec![]], vec![1]).unwrap();
        let v = check_feasibility(&p, &sol);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].family(), 3);
    }

    #[test]
    fn partial_solution_bookkeeping() {
        let p = instance();
        let mut partial = PartialSolution::new(&p, vec![vec![0, 1], vec![], vec![]], vec![]).unwrap();
        let full = partial.cost;
        partial.remove_task(1);
        let mut partial = PartialSolution::new(&p, partial.routes, partial.outsourced).unwrap();
        assert!(partial.cost < full);
        partial.outsource(&p, 1);
        partial.outsource(&p, 1);
        assert_eq!(partial.outsourced, vec![1]);
        let sol = partial.clone().into_solution(&p).unwrap();
        assert!((sol.twtt - partial.cost).abs() < 1e-9);
        assert_eq!(sol.completion(&p, 1), Some(540.0));
    }
}
