//! Priority-ordered greedy construction.

use serde::{Deserialize, Serialize};

use crate::combos::{combinations_for, Combination};
use crate::model::ReoptProblem;
use crate::schedule::routed_cost;
use crate::solution::{PartialSolution, Solution};

/// A joint placement of one task into every route of a crew combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionCandidate {
    pub task: usize,
    pub combination: Combination,
    /// `positions[j]` is the insertion index in the route of `combination[j]`.
    pub positions: Vec<usize>,
    /// Change of the routed cost, the task's own throughput included.
    pub delta_cost: f64,
}

impl InsertionCandidate {
    pub fn apply(&self, partial: &mut PartialSolution) {
        for (&k, &pos) in self.combination.iter().zip(&self.positions) {
            partial.routes[k].insert(pos, self.task);
        }
        partial.cost += self.delta_cost;
    }
}

/// Cheapest feasible placement of `task` into the routes of `combination`,
/// searching every combination of per-crew positions with a full
/// re-evaluation each. `None` if no placement is feasible.
pub fn best_insertion(
    problem: &ReoptProblem,
    partial: &PartialSolution,
    task: usize,
    combination: &[usize],
) -> Option<InsertionCandidate> {
    if combination.is_empty() {
        return None;
    }
    let base = partial.routed_cost(problem);
    let mut routes = partial.routes.clone();
    let mut positions = vec![0usize; combination.len()];
    let mut best: Option<InsertionCandidate> = None;

    loop {
        for (&k, &pos) in combination.iter().zip(&positions) {
            routes[k].insert(pos, task);
        }
        if let Ok(cost) = routed_cost(problem, &routes) {
            let delta = cost - base;
            if best.as_ref().is_none_or(|b| delta < b.delta_cost - 1e-9) {
                best = Some(InsertionCandidate {
                    task,
                    combination: combination.to_vec(),
                    positions: positions.clone(),
                    delta_cost: delta,
                });
            }
        }
        for (&k, &pos) in combination.iter().zip(&positions) {
            routes[k].remove(pos);
        }

        // odometer over the Cartesian product of positions, last crew fastest
        let mut j = combination.len();
        loop {
            if j == 0 {
                return best;
            }
            j -= 1;
            positions[j] += 1;
            if positions[j] <= partial.routes[combination[j]].len() {
                break;
            }
            positions[j] = 0;
        }
    }
}

/// Best insertion over all combinations. Equal costs keep the earlier
/// combination, so smaller crew sets and lower crew ids win ties.
pub fn best_over_combinations(
    problem: &ReoptProblem,
    partial: &PartialSolution,
    task: usize,
    combinations: &[Combination],
) -> Option<InsertionCandidate> {
    let mut best: Option<InsertionCandidate> = None;
    for combo in combinations {
        if let Some(c) = best_insertion(problem, partial, task, combo) {
            if best.as_ref().is_none_or(|b| c.delta_cost < b.delta_cost - 1e-9) {
                best = Some(c);
            }
        }
    }
    best
}

/// Tasks by non-increasing priority, ties by ascending task id.
pub fn priority_order(problem: &ReoptProblem, tasks: &[usize]) -> Vec<usize> {
    let mut order = tasks.to_vec();
    order.sort_by(|&a, &b| {
        let (ta, tb) = (&problem.tasks[a], &problem.tasks[b]);
        tb.priority.total_cmp(&ta.priority).then(ta.id.cmp(&tb.id))
    });
    order
}

/// Builds a feasible solution from scratch: tasks in priority order, each
/// placed with its cheapest combination or outsourced when none is feasible.
pub fn construct_initial(problem: &ReoptProblem) -> Solution {
    let all: Vec<usize> = (0..problem.task_count()).collect();
    let mut partial = PartialSolution::empty(problem);
    for task in priority_order(problem, &all) {
        let combos = combinations_for(problem, task);
        match best_over_combinations(problem, &partial, task, &combos) {
            Some(c) => c.apply(&mut partial),
            None => partial.outsource(problem, task),
        }
    }
    partial
        .into_solution(problem)
        .expect("construction only applies feasible insertions")
}
