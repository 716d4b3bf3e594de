//! Removal heuristics. Every operator removes a task from all routes that
//! contain it, so synchronized tasks never end up half-assigned.

use rand::seq::SliceRandom;
use rand::Rng;

use super::AlnsParams;
use crate::model::{ReoptProblem, Task};
use crate::schedule::routed_cost;
use crate::solution::{PartialSolution, Solution};

/// Degree of destruction, uniform in `[gamma_min, gamma_max]`.
pub fn draw_gamma<R: Rng + ?Sized>(params: &AlnsParams, rng: &mut R) -> f64 {
    if params.gamma_min >= params.gamma_max {
        params.gamma_min
    } else {
        rng.random_range(params.gamma_min..=params.gamma_max)
    }
}

/// `round(gamma * in_house)`, at least one when anything is in-house.
pub fn removal_count(gamma: f64, in_house: usize) -> usize {
    if in_house == 0 {
        return 0;
    }
    ((gamma * in_house as f64).round() as usize).clamp(1, in_house)
}

/// L2 distance between the skill requirement vectors of two tasks.
pub fn shaw_relatedness(a: &Task, b: &Task) -> f64 {
    assert_eq!(a.skills.len(), b.skills.len(), "skill vectors differ in length");
    a.skills
        .bits()
        .iter()
        .zip(b.skills.bits())
        .map(|(&x, &y)| {
            let d = f64::from(u8::from(x)) - f64::from(u8::from(y));
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Result of a destroy step: the remaining plan (outsourced tasks untouched)
/// and the removed tasks in removal order.
#[derive(Debug, Clone)]
pub struct Destruction {
    pub partial: PartialSolution,
    pub removed: Vec<usize>,
}

fn finish(problem: &ReoptProblem, current: &Solution, routes: Vec<Vec<usize>>, removed: Vec<usize>) -> Destruction {
    let partial = PartialSolution::new(problem, routes, current.outsourced.clone())
        .expect("removing tasks keeps a plan feasible");
    Destruction { partial, removed }
}

fn strip(routes: &mut [Vec<usize>], task: usize) {
    for r in routes.iter_mut() {
        r.retain(|&i| i != task);
    }
}

fn in_house_by_id(problem: &ReoptProblem, routes: &[Vec<usize>]) -> Vec<usize> {
    let mut v: Vec<usize> = routes.iter().flatten().copied().collect();
    v.sort_unstable();
    v.dedup();
    v.sort_by_key(|&i| problem.tasks[i].id);
    v
}

pub fn destroy_random_task<R: Rng + ?Sized>(
    problem: &ReoptProblem,
    current: &Solution,
    count: usize,
    rng: &mut R,
) -> Destruction {
    let mut pool = in_house_by_id(problem, &current.routes);
    let count = count.min(pool.len());
    let (chosen, _) = pool.partial_shuffle(rng, count);
    let removed = chosen.to_vec();
    let mut routes = current.routes.clone();
    for &t in &removed {
        strip(&mut routes, t);
    }
    finish(problem, current, routes, removed)
}

/// Leave-one-out score of every task in `routes`: routed cost now minus
/// routed cost without the task.
pub fn task_scores(problem: &ReoptProblem, routes: &[Vec<usize>]) -> Vec<(usize, f64)> {
    let base = routed_cost(problem, routes).expect("scored plans are feasible");
    in_house_by_id(problem, routes)
        .into_iter()
        .map(|t| {
            let mut r = routes.to_vec();
            strip(&mut r, t);
            (t, base - routed_cost(problem, &r).expect("removal keeps feasibility"))
        })
        .collect()
}

pub fn destroy_worst_task(problem: &ReoptProblem, current: &Solution, count: usize) -> Destruction {
    let mut routes = current.routes.clone();
    let mut removed = Vec::with_capacity(count);
    while removed.len() < count {
        let scores = task_scores(problem, &routes);
        // strict comparison keeps the lowest id among ties
        let Some(&(worst, _)) = scores
            .iter()
            .fold(None, |best: Option<&(usize, f64)>, s| match best {
                Some(b) if s.1 <= b.1 => Some(b),
                _ => Some(s),
            })
        else {
            break;
        };
        strip(&mut routes, worst);
        removed.push(worst);
    }
    finish(problem, current, routes, removed)
}

pub fn destroy_random_team<R: Rng + ?Sized>(
    problem: &ReoptProblem,
    current: &Solution,
    count: usize,
    rng: &mut R,
) -> Destruction {
    let mut routes = current.routes.clone();
    let mut teams: Vec<usize> = (0..routes.len()).collect();
    teams.shuffle(rng);
    let mut removed = Vec::with_capacity(count);
    for k in teams {
        while removed.len() < count {
            let Some(&t) = routes[k].first() else { break };
            strip(&mut routes, t);
            removed.push(t);
        }
        if removed.len() >= count {
            break;
        }
    }
    finish(problem, current, routes, removed)
}

/// Score of every crew with a non-empty route: routed cost now minus routed
/// cost once all of that crew's tasks are gone from every route.
pub fn team_scores(problem: &ReoptProblem, routes: &[Vec<usize>]) -> Vec<(usize, f64)> {
    let base = routed_cost(problem, routes).expect("scored plans are feasible");
    (0..routes.len())
        .filter(|&k| !routes[k].is_empty())
        .map(|k| {
            let mut r = routes.to_vec();
            for &t in &routes[k] {
                strip(&mut r, t);
            }
            (k, base - routed_cost(problem, &r).expect("removal keeps feasibility"))
        })
        .collect()
}

pub fn destroy_worst_team(problem: &ReoptProblem, current: &Solution, count: usize) -> Destruction {
    let mut routes = current.routes.clone();
    let mut removed = Vec::with_capacity(count);
    while removed.len() < count {
        let scores = team_scores(problem, &routes);
        let Some(&(worst, _)) = scores
            .iter()
            .fold(None, |best: Option<&(usize, f64)>, s| match best {
                Some(b) if s.1 <= b.1 => Some(b),
                _ => Some(s),
            })
        else {
            break;
        };
        while removed.len() < count {
            let Some(&t) = routes[worst].first() else { break };
            strip(&mut routes, t);
            removed.push(t);
        }
    }
    finish(problem, current, routes, removed)
}

pub fn destroy_shaw<R: Rng + ?Sized>(problem: &ReoptProblem, current: &Solution, count: usize, rng: &mut R) -> Destruction {
    let mut pool = in_house_by_id(problem, &current.routes);
    let count = count.min(pool.len());
    let mut removed = Vec::with_capacity(count);
    if count > 0 {
        let seed = pool.remove(rng.random_range(0..pool.len()));
        removed.push(seed);
        while removed.len() < count {
            let last = &problem.tasks[*removed.last().unwrap()];
            // pool is id-ordered, so the first minimum is the lowest id
            let (pos, _) = pool
                .iter()
                .enumerate()
                .map(|(p, &j)| (p, shaw_relatedness(last, &problem.tasks[j])))
                .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
            removed.push(pool.remove(pos));
        }
    }
    let mut routes = current.routes.clone();
    for &t in &removed {
        strip(&mut routes, t);
    }
    finish(problem, current, routes, removed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::task;

    #[test]
    fn removal_count_rounding() {
        assert_eq!(removal_count(0.73, 10), 7);
        assert_eq!(removal_count(0.01, 10), 1);
        assert_eq!(removal_count(1.0, 10), 10);
        assert_eq!(removal_count(0.5, 0), 0);
    }

    #[test]
    fn degenerate_gamma_range() {
        let params = AlnsParams {
            gamma_min: 0.5,
            gamma_max: 0.5,
            ..AlnsParams::default()
        };
        let mut rng = rand::rng();
        assert_eq!(draw_gamma(&params, &mut rng), 0.5);
    }

    #[test]
    fn relatedness_values() {
        let a = task(1, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[1, 1, 0, 0, 1]);
        let b = task(2, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[0, 1, 0, 0, 1]);
        let c = task(3, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[1, 0, 1, 0, 1]);
        let d = task(4, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, &[0, 1, 0, 1, 0]);
        assert_eq!(shaw_relatedness(&a, &a), 0.0);
        assert_eq!(shaw_relatedness(&a, &b), 1.0);
        assert!((shaw_relatedness(&c, &d) - 5f64.sqrt()).abs() < 1e-12);
    }
}
