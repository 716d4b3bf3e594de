//! Insertion heuristics. Each returns a complete, feasible plan: any task it
//! cannot place is outsourced.

use rand::Rng;

use crate::combos::combinations_for;
use crate::construct::{best_insertion, best_over_combinations, priority_order, InsertionCandidate};
use crate::model::ReoptProblem;
use crate::solution::PartialSolution;

/// Pools the removed tasks with everything `partial` had outsourced; the
/// returned plan has nothing outsourced.
pub fn open_pool(problem: &ReoptProblem, mut partial: PartialSolution, removed: &[usize]) -> (PartialSolution, Vec<usize>) {
    let mut pending = removed.to_vec();
    for &t in &partial.outsourced {
        partial.cost -= problem.outsourcing_cost(t);
        pending.push(t);
    }
    partial.outsourced.clear();
    pending.sort_unstable();
    pending.dedup();
    (partial, pending)
}

pub fn repair_random<R: Rng + ?Sized>(
    problem: &ReoptProblem,
    mut partial: PartialSolution,
    pending: &[usize],
    rng: &mut R,
) -> PartialSolution {
    for task in priority_order(problem, pending) {
        let combos = combinations_for(problem, task);
        let placed = if combos.is_empty() {
            None
        } else {
            let combo = &combos[rng.random_range(0..combos.len())];
            best_insertion(problem, &partial, task, combo)
        };
        match placed {
            Some(c) => c.apply(&mut partial),
            None => partial.outsource(problem, task),
        }
    }
    partial
}

pub fn repair_greedy(problem: &ReoptProblem, mut partial: PartialSolution, pending: &[usize]) -> PartialSolution {
    for task in priority_order(problem, pending) {
        let combos = combinations_for(problem, task);
        match best_over_combinations(problem, &partial, task, &combos) {
            Some(c) => c.apply(&mut partial),
            None => partial.outsource(problem, task),
        }
    }
    partial
}

/// Regret of one pending task: its cheapest placement and
/// `sum_{k=2}^{min(n, m)} (delta_k - delta_1)` over its `m` feasible
/// combinations. No feasible combination gives `-inf`.
pub fn regret_of(
    problem: &ReoptProblem,
    partial: &PartialSolution,
    task: usize,
    depth: usize,
) -> (f64, Option<InsertionCandidate>) {
    let mut placements: Vec<InsertionCandidate> = combinations_for(problem, task)
        .iter()
        .filter_map(|c| best_insertion(problem, partial, task, c))
        .collect();
    if placements.is_empty() {
        return (f64::NEG_INFINITY, None);
    }
    // stable sort keeps combination order among equal deltas
    placements.sort_by(|a, b| a.delta_cost.total_cmp(&b.delta_cost));
    let best = placements[0].delta_cost;
    let regret = placements
        .iter()
        .take(depth.min(placements.len()))
        .skip(1)
        .map(|p| p.delta_cost - best)
        .sum();
    (regret, Some(placements.swap_remove(0)))
}

/// Inserts, one at a time, the pending task with the largest regret. Ties go
/// to higher priority, then lower task id. Tasks without any feasible
/// placement wait until everything else is placed and are then outsourced.
pub fn repair_regret(problem: &ReoptProblem, mut partial: PartialSolution, pending: &[usize], depth: usize) -> PartialSolution {
    let mut pending = priority_order(problem, pending);
    while !pending.is_empty() {
        let mut chosen: Option<(usize, f64, Option<InsertionCandidate>)> = None;
        for (slot, &task) in pending.iter().enumerate() {
            let (regret, placement) = regret_of(problem, &partial, task, depth);
            // pending is in tie-break order, so only a strictly larger regret wins
            if chosen.as_ref().is_none_or(|c| regret > c.1) {
                chosen = Some((slot, regret, placement));
            }
        }
        let (slot, _, placement) = chosen.expect("pending is non-empty");
        match placement {
            Some(c) => {
                c.apply(&mut partial);
                pending.remove(slot);
            }
            None => {
                // the best regret is -inf: nothing left can be placed
                for task in pending.drain(..) {
                    partial.outsource(problem, task);
                }
            }
        }
    }
    partial
}
